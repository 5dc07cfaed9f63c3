import pytest

from sovsim.model import BoundaryConfig, DecisionNode, EconomyParams, NodeKind, SystemState


def make_node(id=0, kind="ai", **kw):
    ai = kind == "ai"
    fields = dict(
        id=id,
        kind=NodeKind.AI if ai else NodeKind.HUMAN,
        lam=1.0,
        iota=(1.0, 1.0, 1.0),
        rho=1.0,
        phi=(0.0, 0.0, 1.0) if ai else (1.0, 1.0, 1.0),
        capability=1.0,
        friction=1.0,
        alpha=1.0 if ai else 0.0,
        quality=1.0,
        cost=1.0,
        complementarity=0.0,
        share=0.5,
        direct_control_critical=not ai,
    )
    fields.update(kw)
    return DecisionNode(**fields)


def make_state(nodes, boundaries=None, economy=None, **kw):
    return SystemState(
        step=0,
        nodes=tuple(nodes),
        boundaries=boundaries or BoundaryConfig(),
        economy=economy or EconomyParams(),
        **kw,
    )


@pytest.fixture
def node_factory():
    return make_node


@pytest.fixture
def state_factory():
    return make_state
