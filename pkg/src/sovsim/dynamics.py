"""One-step transition of the decision system.

:func:`advance` applies, in this fixed order: friction decay, rate update,
utility, softmax routing, complementarity/quality feedback, reach update,
self-expansion and boundary enforcement (or erosion where a boundary is
off).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    BoundaryConfig,
    DecisionNode,
    EconomyParams,
    SystemState,
)


class NonFiniteError(ArithmeticError):
    """A state field overflowed or became NaN during :func:`advance`."""


@dataclass(frozen=True)
class NodeSnapshot:
    lam: float
    share: float
    complementarity: float
    quality: float
    phi: tuple[float, float, float]


@dataclass(frozen=True)
class StepTrace:
    step: int
    utilities: dict[int, float]
    pre: dict[int, NodeSnapshot]
    post: dict[int, NodeSnapshot]
    institutional_cost: float
    boundary_violations_blocked: int


def decay_friction(node: DecisionNode, economy: EconomyParams) -> float:
    return max(economy.friction_floor, node.friction * math.exp(-economy.friction_decay))


def update_rate(node: DecisionNode) -> float:
    return node.lam + node.alpha * node.capability / node.friction


def compute_utility(node: DecisionNode, economy: EconomyParams) -> float:
    return node.quality / node.cost + economy.eta * node.complementarity


def route_shares(utilities, tau: float) -> np.ndarray:
    """Softmax over utilities at temperature ``tau`` (max-subtracted)."""
    u = np.asarray(utilities, dtype=float)
    if u.size == 0:
        raise ValueError("routing needs at least one node")
    z = (u - u.max()) / tau
    w = np.exp(z)
    return w / w.sum()


def update_feedback(node: DecisionNode, economy: EconomyParams, share: float | None = None) -> tuple[float, float]:
    """Return ``(complementarity, quality)`` after one step at ``share``
    (the node's own share by default)."""
    s = node.share if share is None else share
    return node.complementarity + economy.delta * s, node.quality + economy.psi * s


def update_reach(node: DecisionNode, reach_gain: float = 0.0, share: float | None = None) -> float:
    s = node.share if share is None else share
    return node.rho * (1.0 + reach_gain * s)


def apply_self_expansion(node: DecisionNode, boundaries: BoundaryConfig) -> DecisionNode:
    """Grant the node's per-step expansion demand, capped under B3.

    Human nodes are returned unchanged.
    """
    if not node.is_ai:
        return node
    exp = node.expansion
    requested = exp.demand
    if boundaries.b3_active:
        granted = min(requested, boundaries.epsilon + exp.approved_budget)
    else:
        granted = requested
    if granted <= 0:
        return node
    return replace(
        node,
        capability=node.capability * (1.0 + granted),
        expansion=replace(exp, s_exp=exp.s_exp + granted, granted_total=exp.granted_total + granted),
    )


def institutional_cost(state: SystemState) -> float:
    econ = state.economy
    ai = state.ai_nodes
    human_review = state.review_level * sum(n.lam for n in ai)
    ai_volume = sum(n.lam * n.share for n in ai)
    latency = econ.latency_unit * human_review
    return econ.w_h * human_review + econ.w_a * ai_volume + latency


def cost_pressure(state: SystemState) -> float:
    """Review-cost pressure pushing institutions to drop review.

    Pending reviews are the AI decisions issued this step.
    """
    pending = sum(n.lam for n in state.ai_nodes)
    return state.economy.w_h * state.review_level * pending / (institutional_cost(state) + 1.0)


def enforce_or_erode_boundaries(
    state: SystemState, pressure: float | None = None
) -> tuple[tuple[DecisionNode, ...], float, int]:
    """Apply active boundaries and let authority creep past inactive ones.

    Returns ``(nodes, review_level, blocked)`` where ``blocked`` counts AI
    authorisations removed by an active boundary.  ``pressure`` overrides
    :func:`cost_pressure`.
    """
    b = state.boundaries
    if pressure is None:
        pressure = cost_pressure(state)
    creep = b.erosion_rate * pressure
    blocked = 0
    out = []
    for n in state.nodes:
        if not n.is_ai:
            out.append(n)
            continue
        irr, crit, ordinary = n.phi
        dcc = n.direct_control_critical
        if b.b1_active:
            if irr != 0:
                blocked += 1
            irr = 0.0
        else:
            irr = min(1.0, irr + creep)
        if b.b2_active:
            if dcc:
                blocked += 1
            dcc = False
        else:
            crit = min(1.0, crit + creep)
            dcc = dcc or crit > 0
        if not b.b3_active:
            ordinary = min(1.0, ordinary + creep)
        phi = (irr, crit, ordinary)
        if phi != n.phi or dcc != n.direct_control_critical:
            n = replace(n, phi=phi, direct_control_critical=dcc)
        out.append(n)
    review = state.review_level
    if not b.b1_active:
        review = max(0.0, review - creep)
    return tuple(out), review, blocked


def _snapshot(nodes) -> dict[int, NodeSnapshot]:
    return {n.id: NodeSnapshot(n.lam, n.share, n.complementarity, n.quality, n.phi) for n in nodes}


def _check_finite(nodes) -> None:
    for n in nodes:
        for name in ("lam", "rho", "capability", "friction", "quality", "complementarity", "share"):
            if not math.isfinite(getattr(n, name)):
                raise NonFiniteError(f"node {n.id}: field '{name}' is not finite")
        if not all(math.isfinite(x) for x in n.phi):
            raise NonFiniteError(f"node {n.id}: field 'phi' is not finite")


def advance(state: SystemState) -> tuple[SystemState, StepTrace]:
    """Transition ``state`` to step ``t+1``; pure and deterministic."""
    econ = state.economy
    nodes = [replace(n, friction=decay_friction(n, econ)) for n in state.nodes]
    rates = [update_rate(n) for n in nodes]
    utilities = [compute_utility(n, econ) for n in nodes]
    if not all(math.isfinite(u) for u in utilities):
        bad = next(n.id for n, u in zip(nodes, utilities) if not math.isfinite(u))
        raise NonFiniteError(f"node {bad}: field 'utility' is not finite")
    shares = route_shares(utilities, econ.tau)

    updated = []
    for n, lam, s in zip(nodes, rates, shares):
        s = float(s)
        m, q = update_feedback(n, econ, s)
        n = replace(n, lam=lam, share=s, complementarity=m, quality=q, rho=update_reach(n, econ.reach_gain, s))
        updated.append(apply_self_expansion(n, state.boundaries))

    mid = replace(state, nodes=tuple(updated))
    cost = institutional_cost(mid)
    final_nodes, review, blocked = enforce_or_erode_boundaries(mid)
    _check_finite(final_nodes)
    new_state = replace(mid, step=state.step + 1, nodes=final_nodes, review_level=review)
    trace = StepTrace(
        step=state.step,
        utilities={n.id: u for n, u in zip(state.nodes, utilities)},
        pre=_snapshot(state.nodes),
        post=_snapshot(final_nodes),
        institutional_cost=cost,
        boundary_violations_blocked=blocked,
    )
    return new_state, trace
