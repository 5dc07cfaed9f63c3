"""Per-step derived quantities: densities, control mass, sovereignty,
traceability, irreversibility risk and concentration."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .model import (
    DecisionNode,
    DomainClass,
    EconomyParams,
    SystemState,
)

MAX_PATHS = 10**7


class PathCountOverflow(ValueError):
    pass


@dataclass(frozen=True)
class PathStats:
    total_paths: int
    human_origin_paths: int

    @property
    def empirical_traceability(self) -> float:
        if self.total_paths == 0:
            return 1.0
        return self.human_origin_paths / self.total_paths


@dataclass(frozen=True)
class MetricsFrame:
    step: int
    e_d: dict[int, float]
    e_d_ai_total: float
    e_c: dict[int, float]
    e_c_sov: dict[int, float]
    sovereign_id: int
    sovereign_is_ai: bool
    traceability: float
    empirical_traceability: float
    n_actions: int
    p_irr: float
    concentration: float
    review_level: float
    lam: dict[int, float]
    share: dict[int, float]
    friction: dict[int, float]
    is_ai: dict[int, bool]

    @property
    def e_c_top_human(self) -> float:
        vals = [v for i, v in self.e_c_sov.items() if not self.is_ai[i]]
        return max(vals, default=0.0)

    @property
    def e_c_top_ai_restricted(self) -> float:
        vals = [v for i, v in self.e_c_sov.items() if self.is_ai[i]]
        return max(vals, default=0.0)


def mean_impact(node: DecisionNode, weights=(1 / 3, 1 / 3, 1 / 3)) -> float:
    return sum(w * i for w, i in zip(weights, node.iota))


def decision_energy(node: DecisionNode, weights=(1 / 3, 1 / 3, 1 / 3)) -> float:
    return node.lam * mean_impact(node, weights) * node.rho


def aggregate_ai_density(state: SystemState) -> float:
    w = state.economy.domain_weights
    return sum(decision_energy(n, w) for n in state.nodes if n.is_ai)


def control_mass(node: DecisionNode, restrict_to_sovereign: bool = False, weights=(1 / 3, 1 / 3, 1 / 3)) -> float:
    """Decision energy weighted by authorisation share.

    Restricted mass counts only the irreversible and critical-resource
    domains, and the critical term only with direct control.
    """
    if restrict_to_sovereign:
        total = weights[DomainClass.IRREVERSIBLE] * node.iota[0] * node.phi[0]
        if node.direct_control_critical:
            total += weights[DomainClass.CRITICAL_RESOURCE] * node.iota[1] * node.phi[1]
    else:
        total = sum(w * i * p for w, i, p in zip(weights, node.iota, node.phi))
    return node.lam * node.rho * total


def holds_sovereign_authority(node: DecisionNode) -> bool:
    """Nonzero authority over irreversible decisions, critical resources or
    self-expansion (the last judged on cumulative granted growth)."""
    return (
        node.phi[DomainClass.IRREVERSIBLE] > 0
        or node.direct_control_critical
        or node.expansion.granted_total > 0
    )


def _sovereign_from_masses(nodes, masses) -> tuple[int, bool]:
    best = None
    for n, m in zip(nodes, masses):
        if best is None or m > best[1] or (m == best[1] and n.id < best[0].id):
            best = (n, m)
    node = best[0]
    return node.id, node.is_ai and holds_sovereign_authority(node)


def sovereign(state: SystemState) -> tuple[int, bool]:
    """Argmax of restricted control mass, ties to the lowest id."""
    w = state.economy.domain_weights
    masses = [control_mass(n, True, w) for n in state.nodes]
    return _sovereign_from_masses(state.nodes, masses)


def traceability_bound(e_d_ai: float, economy: EconomyParams) -> float:
    return economy.beta / (1.0 + economy.gamma * e_d_ai)


# ---------------------------------------------------------------- path DAG


@dataclass(frozen=True)
class TraceDag:
    """Layered DAG from an initiating state to a consequential outcome.

    Layer 0 is the root, layers ``1..depth`` hold ``branching`` vertices
    each and consecutive layers are fully connected; every last-layer
    vertex feeds the sink.  A path's origin is the layer-1 vertex it uses.
    """

    branching: int
    depth: int
    human_origin: tuple[bool, ...]

    def edges(self):
        b, d = self.branching, self.depth
        yield from ((("root",), (1, j)) for j in range(b))
        for layer in range(1, d):
            for j in range(b):
                for k in range(b):
                    yield (layer, j), (layer + 1, k)
        yield from (((d, j), ("sink",)) for j in range(b))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def build_trace_dag(state: SystemState, outcome_depth: int, seed: int = 0) -> TraceDag:
    w = state.economy.domain_weights
    e_ai = sum(decision_energy(n, w) for n in state.nodes if n.is_ai)
    e_h = sum(decision_energy(n, w) for n in state.nodes if not n.is_ai)
    return make_trace_dag(e_ai, e_h, state.branch_coeff, outcome_depth, seed)


def make_trace_dag(e_ai: float, e_h: float, branch_coeff: float, outcome_depth: int, seed: int = 0) -> TraceDag:
    """Branching is ``1 + round(branch_coeff * e_ai)``; AI-origin layer-1
    vertices take the AI share of total density (at least one human origin
    remains while human density is positive)."""
    if outcome_depth < 1:
        raise ValueError("outcome_depth must be >= 1")
    b_float = 1.0 + branch_coeff * e_ai
    if not math.isfinite(b_float) or b_float > MAX_PATHS:
        raise PathCountOverflow("path count exceeds 1e7; reduce outcome_depth or branch_coeff")
    b = 1 + _round_half_up(branch_coeff * e_ai)
    if b**outcome_depth > MAX_PATHS:
        raise PathCountOverflow(
            f"{b}^{outcome_depth} paths exceeds 1e7; reduce outcome_depth or branch_coeff"
        )
    total = e_ai + e_h
    ai_frac = e_ai / total if total > 0 else 0.0
    n_ai = _round_half_up(b * ai_frac)
    if e_h > 0:
        n_ai = min(n_ai, b - 1)
    n_ai = min(n_ai, b)
    labels = [False] * n_ai + [True] * (b - n_ai)
    random.Random(seed).shuffle(labels)
    return TraceDag(b, outcome_depth, tuple(labels))


def count_paths(dag: TraceDag) -> PathStats:
    """Root-to-sink path counts by dynamic programming over the layers."""
    b = dag.branching
    human_counts = [1 if h else 0 for h in dag.human_origin]
    ai_counts = [0 if h else 1 for h in dag.human_origin]
    for _ in range(1, dag.depth):
        h_in, a_in = sum(human_counts), sum(ai_counts)
        human_counts = [h_in] * b
        ai_counts = [a_in] * b
    h, a = sum(human_counts), sum(ai_counts)
    return PathStats(total_paths=h + a, human_origin_paths=h)


def empirical_traceability(state: SystemState, outcome_depth: int | None = None, seed: int | None = None) -> PathStats:
    depth = state.trace_depth if outcome_depth is None else outcome_depth
    dag = build_trace_dag(state, depth, state.seed if seed is None else seed)
    return count_paths(dag)


# ---------------------------------------------------------- irreversibility


def irreversibility_from_counts(n_actions: int, p: float) -> float:
    """``1 - (1-p)^N`` evaluated in log space."""
    if n_actions <= 0 or p <= 0:
        return 0.0
    if p >= 1:
        return 1.0
    return -math.expm1(n_actions * math.log1p(-p))


def action_count(e_d_ai: float, nu: float) -> int:
    return int(math.ceil(nu * e_d_ai))


def irreversibility_probability(state: SystemState) -> tuple[int, float]:
    econ = state.economy
    n = action_count(aggregate_ai_density(state), econ.nu)
    if econ.p_mode == "homogeneous" or n == 0:
        return n, irreversibility_from_counts(n, econ.p_mean)
    a = econ.p_mean * econ.p_concentration
    b = (1 - econ.p_mean) * econ.p_concentration
    rng = state.rng(stream=1)
    log_survive = 0.0
    remaining = n
    while remaining > 0:
        chunk = min(remaining, 10**6)
        log_survive += float(np.log1p(-rng.beta(a, b, size=chunk)).sum())
        remaining -= chunk
    return n, -math.expm1(log_survive)


def concentration_index(shares) -> float:
    s = np.asarray(shares, dtype=float)
    return float(np.dot(s, s))


# ------------------------------------------------------------------ frames


def compute_frame(state: SystemState) -> MetricsFrame:
    w = state.economy.domain_weights
    nodes = state.nodes
    e_d = {n.id: decision_energy(n, w) for n in nodes}
    e_ai = sum(e_d[n.id] for n in nodes if n.is_ai)
    e_c = {n.id: control_mass(n, False, w) for n in nodes}
    sov_masses = [control_mass(n, True, w) for n in nodes]
    sov_id, sov_ai = _sovereign_from_masses(nodes, sov_masses)
    try:
        emp = empirical_traceability(state).empirical_traceability
    except PathCountOverflow:
        emp = math.nan
    n_actions, p_irr = irreversibility_probability(state)
    return MetricsFrame(
        step=state.step,
        e_d=e_d,
        e_d_ai_total=e_ai,
        e_c=e_c,
        e_c_sov={n.id: m for n, m in zip(nodes, sov_masses)},
        sovereign_id=sov_id,
        sovereign_is_ai=sov_ai,
        traceability=traceability_bound(e_ai, state.economy),
        empirical_traceability=emp,
        n_actions=n_actions,
        p_irr=p_irr,
        concentration=concentration_index([n.share for n in nodes]),
        review_level=state.review_level,
        lam={n.id: n.lam for n in nodes},
        share={n.id: n.share for n in nodes},
        friction={n.id: n.friction for n in nodes},
        is_ai={n.id: n.is_ai for n in nodes},
    )
