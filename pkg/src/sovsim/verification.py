"""Numerical checks of the scaling, responsibility, concentration,
irreversibility and transfer propositions and of boundary stabilization.

Every check is a deterministic function of its arguments and returns a
:class:`PropositionReport`; failures are recorded, never raised.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np

from .dynamics import advance
from .metrics import (
    aggregate_ai_density,
    control_mass,
    empirical_traceability,
    irreversibility_from_counts,
    mean_impact,
    sovereign,
    traceability_bound,
)
from .model import (
    BoundaryConfig,
    DecisionNode,
    EconomyParams,
    NodeKind,
    ParamRanges,
    SystemState,
    adversarial_ranges,
    config_digest,
    derive_seed,
    generate_random_system,
)

PROPERTY_IDS = ("P1", "P2", "P3", "P4", "P5", "T1")


class PreconditionError(ValueError):
    """The requested check cannot run on the supplied configuration."""


@dataclass
class PropositionReport:
    property_id: str
    trials: int
    passes: int
    witness: float
    counterexample: dict[str, Any] | None = None
    # passes needed for a pass verdict; equals trials except for P5
    required: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        need = self.trials if self.required is None else self.required
        return "pass" if self.passes >= need else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["verdict"] = self.verdict
        return d


def _counterexample(seed: int, step: int, state: SystemState | None, **extra) -> dict[str, Any]:
    out = {"seed": int(seed), "step": int(step)}
    if state is not None:
        out["config_digest"] = config_digest(state)
    out.update(extra)
    return out


def _random_counts(rng: np.random.Generator, max_human: int = 3, max_ai: int = 3) -> tuple[int, int]:
    return int(rng.integers(1, max_human + 1)), int(rng.integers(1, max_ai + 1))


# ------------------------------------------------------------------- P1


def p1_margins(state: SystemState, horizon: int) -> list[float]:
    """Per-step margins ``dE_A - kappa / F`` along a trajectory.

    ``kappa`` uses the smallest AI alpha, capability, mean impact and reach
    of the initial state; capability and reach never fall, impact is
    constant.  ``F`` is the smallest AI friction used in the rate update.
    """
    ai = state.ai_nodes
    w = state.economy.domain_weights
    kappa = (
        min(n.alpha for n in ai)
        * min(n.capability for n in ai)
        * min(mean_impact(n, w) for n in ai)
        * min(n.rho for n in ai)
    )
    margins = []
    s = state
    e_prev = aggregate_ai_density(s)
    for _ in range(horizon):
        s, _ = advance(s)
        e_next = aggregate_ai_density(s)
        friction = min(n.friction for n in s.ai_nodes)
        margins.append(e_next - e_prev - kappa / friction)
        e_prev = e_next
    return margins


def check_p1_scaling(trials: int = 200, base_seed: int = 0, horizon: int = 100, tol: float = 1e-9) -> PropositionReport:
    passes, worst, cex = 0, math.inf, None
    for i in range(trials):
        seed = derive_seed(base_seed, 1, i)
        rng = np.random.default_rng(seed)
        economy = EconomyParams(
            friction_decay=float(rng.uniform(0.0, 0.1)),
            friction_floor=0.1,
            reach_gain=float(rng.uniform(0.0, 0.05)),
        )
        boundaries = BoundaryConfig(*(bool(x) for x in rng.integers(0, 2, 3)), erosion_rate=0.02)
        state = generate_random_system(seed, *_random_counts(rng), economy=economy, boundaries=boundaries)
        margins = p1_margins(state, horizon)
        low = min(margins)
        worst = min(worst, low)
        if low >= -tol:
            passes += 1
        elif cex is None:
            cex = _counterexample(seed, int(np.argmin(margins)), state, margin=low)
    return PropositionReport("P1", trials, passes, worst, cex, details={"horizon": horizon, "tol": tol})


# ------------------------------------------------------------------- P2


def _scale_ai_rates(state: SystemState, factor: float) -> SystemState:
    nodes = tuple(replace(n, lam=n.lam * factor) if n.is_ai else n for n in state.nodes)
    return replace(state, nodes=nodes)


def check_p2_responsibility(
    trials: int = 100,
    base_seed: int = 0,
    horizon: int = 50,
    tiers: tuple[float, ...] = (1.0, 10.0, 100.0),
    tol: float = 2e-6,
) -> PropositionReport:
    """(a) analytic bound falls wherever density rises along a trajectory,
    (b) DAG traceability is nonincreasing over rising density tiers,
    (c) the bound is below ``tol`` at density 1e6 with beta = gamma = 1."""
    unit = EconomyParams(beta=1.0, gamma=1.0)
    far = traceability_bound(1e6, unit)
    limit_ok = far < tol
    passes, worst, cex = 0, math.inf, None
    for i in range(trials):
        seed = derive_seed(base_seed, 2, i)
        rng = np.random.default_rng(seed)
        economy = EconomyParams(
            beta=float(rng.uniform(0.5, 2.0)),
            gamma=float(rng.uniform(0.01, 2.0)),
            friction_decay=float(rng.uniform(0.0, 0.1)),
        )
        state = generate_random_system(seed, *_random_counts(rng), economy=economy,
                                       boundaries=BoundaryConfig(False, False, False, erosion_rate=0.02))
        state = replace(state, branch_coeff=float(10 ** rng.uniform(-3, -1)))
        ok = True
        s, t_prev, e_prev = state, None, None
        for step in range(horizon + 1):
            e = aggregate_ai_density(s)
            t = traceability_bound(e, economy)
            if t_prev is not None and e > e_prev and not t < t_prev:
                ok = False
                cex = cex or _counterexample(seed, step, state, part="a")
            if t > economy.beta:
                ok = False
            t_prev, e_prev = t, e
            s, _ = advance(s)
        ratios = [empirical_traceability(_scale_ai_rates(state, f)).empirical_traceability for f in tiers]
        worst = min(worst, min(a - b for a, b in zip(ratios, ratios[1:])))
        if any(b > a for a, b in zip(ratios, ratios[1:])):
            ok = False
            cex = cex or _counterexample(seed, 0, state, part="b", ratios=ratios)
        passes += ok and limit_ok
    return PropositionReport(
        "P2", trials, passes, worst, cex,
        details={"bound_at_1e6": far, "tol": tol, "tiers": list(tiers)},
    )


# ------------------------------------------------------------------- P3


def concentration_system(
    n_nodes: int,
    leader: int,
    advantage: float,
    cost: float = 1.0,
    base_quality: float = 1.0,
    economy: EconomyParams | None = None,
    seed: int = 0,
) -> SystemState:
    """Nodes identical except the leader's quality/cost is ``advantage`` higher."""
    economy = economy or EconomyParams()
    nodes = []
    for i in range(n_nodes):
        ai = i % 2 == 1
        nodes.append(DecisionNode(
            id=i,
            kind=NodeKind.AI if ai else NodeKind.HUMAN,
            lam=1.0,
            iota=(1.0, 1.0, 1.0),
            rho=1.0,
            phi=(0.0, 0.0, 1.0) if ai else (1.0, 1.0, 1.0),
            capability=1.0,
            friction=1.0,
            alpha=1.0 if ai else 0.0,
            quality=base_quality + (advantage * cost if i == leader else 0.0),
            cost=cost,
            complementarity=0.0,
            share=1.0 / n_nodes,
            direct_control_critical=not ai,
        ))
    return SystemState(0, tuple(nodes), BoundaryConfig(), economy, seed=seed)


def check_p3_concentration(
    trials: int = 100,
    base_seed: int = 0,
    horizon: int = 500,
    dominance: float = 0.95,
    advantage: float = 0.1,
    delta: float = 0.05,
    psi: float = 0.02,
    eta: float = 1.0,
    tau: float = 0.5,
    burn_in: int = 10,
) -> PropositionReport:
    if advantage <= 0 or delta <= 0 or psi <= 0:
        raise PreconditionError("concentration check needs a positive advantage, delta and psi")
    economy = EconomyParams(eta=eta, delta=delta, psi=psi, tau=tau)
    passes, worst, cex, hits = 0, math.inf, None, []
    for i in range(trials):
        seed = derive_seed(base_seed, 3, i)
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        leader = int(rng.integers(0, n))
        state = concentration_system(
            n, leader, advantage,
            cost=float(rng.uniform(0.5, 1.5)),
            base_quality=float(rng.uniform(0.5, 1.5)),
            economy=economy, seed=seed,
        )
        s, prev, monotone, hit = state, None, True, None
        for step in range(1, horizon + 1):
            s, _ = advance(s)
            share = s.node(leader).share
            if step > burn_in and prev is not None and share < prev - 1e-12:
                monotone = False
            if hit is None and share > dominance:
                hit = step
            prev = share
        worst = min(worst, prev)
        hits.append(hit)
        if monotone and hit is not None:
            passes += 1
        elif cex is None:
            cex = _counterexample(seed, horizon, state, final_share=prev, monotone=monotone)
    steps = [h for h in hits if h is not None]
    return PropositionReport(
        "P3", trials, passes, worst, cex,
        details={"horizon": horizon, "dominance": dominance, "max_steps_to_dominance": max(steps, default=None)},
    )


def symmetric_share_drift(n_nodes: int = 4, horizon: int = 500, economy: EconomyParams | None = None) -> float:
    """Largest deviation from uniform shares over a run of identical nodes."""
    state = concentration_system(n_nodes, leader=-1, advantage=0.0, economy=economy)
    state = replace(state, nodes=tuple(replace(n, kind=NodeKind.AI, alpha=1.0, phi=(0.0, 0.0, 1.0),
                                               direct_control_critical=False) for n in state.nodes))
    worst = 0.0
    s = state
    for _ in range(horizon):
        s, _ = advance(s)
        worst = max(worst, max(abs(n.share - 1.0 / n_nodes) for n in s.nodes))
    return worst


# ------------------------------------------------------------------- P4


def monte_carlo_irreversibility(p: float, n_actions: int, trials: int, seed: int) -> tuple[float, float]:
    """Fraction of simulated periods with at least one loss among
    ``n_actions`` independent Bernoulli(p) actions, with its standard error.
    """
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = max(1, min(trials, 2_000_000 // max(n_actions, 1)))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        hits += int((rng.random((m, n_actions)) < p).any(axis=1).sum())
        done += m
    est = hits / trials
    return est, math.sqrt(max(est * (1 - est), 1e-300) / trials)


def check_p4_irreversibility(
    trials: int = 50,
    base_seed: int = 0,
    mc_trials: int = 10**6,
    pair_mc_trials: int = 20_000,
) -> PropositionReport:
    """(a) risk strictly increases in the action count, (b) the closed form
    agrees with Bernoulli simulation within 3 standard errors at p=0.01,
    N=100 and on ``trials`` random (p, N) pairs, (c) 1e4-scale low local
    risk still yields near-certain systemic loss."""
    passes, worst, cex = 0, math.inf, None
    ref = irreversibility_from_counts(100, 0.01)
    est, _ = monte_carlo_irreversibility(0.01, 100, mc_trials, derive_seed(base_seed, 4))
    se = null_standard_error(ref, mc_trials)
    ref_ok = abs(est - ref) <= 3 * se
    low_p = irreversibility_from_counts(10**5, 1e-4)
    low_ok = low_p > 0.9999
    for i in range(trials):
        seed = derive_seed(base_seed, 4, i)
        rng = np.random.default_rng(seed)
        p = float(10 ** rng.uniform(-4, -1))
        ns = np.unique(rng.integers(1, 10**4 + 1, size=64))
        ok = strictly_increasing_risk(p, ns)
        n_pair = int(rng.integers(1, 300))
        analytic = irreversibility_from_counts(n_pair, p)
        mc, _ = monte_carlo_irreversibility(p, n_pair, pair_mc_trials, seed)
        mc_se = null_standard_error(analytic, pair_mc_trials)
        z = abs(mc - analytic) / mc_se if mc_se > 0 else (0.0 if mc == analytic else math.inf)
        if z > 3:
            ok = False
        worst = min(worst, 3 - z)
        if ok and ref_ok and low_ok:
            passes += 1
        elif cex is None:
            cex = _counterexample(seed, 0, None, p=p, n=n_pair, mc=mc, analytic=analytic)
    return PropositionReport(
        "P4", trials, passes, worst, cex,
        details={
            "reference": {"p": 0.01, "n": 100, "analytic": ref, "monte_carlo": est, "se": se, "ok": ref_ok},
            "low_local_risk": {"p": 1e-4, "n": 10**5, "p_irr": low_p, "ok": low_ok},
        },
    )


def null_standard_error(p: float, trials: int) -> float:
    """Standard error of a Bernoulli frequency when the true rate is ``p``."""
    return math.sqrt(p * (1 - p) / trials)


def strictly_increasing_risk(p: float, ns) -> bool:
    """Strict increase in N.

    Once ``1 - P`` drops below double resolution neighbouring values can
    round to the same float; there the log-survival ``N log1p(-p)`` must
    still fall strictly.
    """
    risks = [irreversibility_from_counts(int(n), p) for n in ns]
    log_surv = [int(n) * math.log1p(-p) for n in ns]
    for k in range(1, len(risks)):
        if risks[k] > risks[k - 1]:
            continue
        saturated = risks[k] == risks[k - 1] and 1.0 - risks[k] < 1e-15
        if saturated and log_surv[k] < log_surv[k - 1]:
            continue
        return False
    return True


# ----------------------------------------------------------- P5 / T1


def _all_active(b: BoundaryConfig) -> bool:
    return b.b1_active and b.b2_active and b.b3_active


def _any_active(b: BoundaryConfig) -> bool:
    return b.b1_active or b.b2_active or b.b3_active


def first_transfer(state: SystemState, horizon: int) -> tuple[int | None, bool]:
    """First step where the sovereign is an AI node with relevant authority.

    Also reports whether that node's restricted mass strictly exceeds every
    human node's at that step.
    """
    s = state
    w = s.economy.domain_weights
    for step in range(horizon + 1):
        sov_id, is_ai = sovereign(s)
        if is_ai:
            mass = control_mass(s.node(sov_id), True, w)
            literal = all(mass > control_mass(h, True, w) for h in s.human_nodes)
            return step, literal
        if step < horizon:
            s, _ = advance(s)
    return None, False


def max_ai_restricted_mass(state: SystemState, horizon: int) -> tuple[float, float, bool, int | None]:
    """Run ``horizon`` steps; return (max AI restricted mass, min over steps of
    the top human restricted mass, any AI sovereign, first offending step)."""
    s = state
    w = s.economy.domain_weights
    top_ai, min_top_human, any_ai, bad = 0.0, math.inf, False, None
    for step in range(horizon + 1):
        ai = max((control_mass(n, True, w) for n in s.ai_nodes), default=0.0)
        hum = max((control_mass(n, True, w) for n in s.human_nodes), default=0.0)
        top_ai = max(top_ai, ai)
        min_top_human = min(min_top_human, hum)
        _, is_ai = sovereign(s)
        if (is_ai or ai > 0) and bad is None:
            bad = step
        any_ai = any_ai or is_ai
        if step < horizon:
            s, _ = advance(s)
    return top_ai, min_top_human, any_ai, bad


def eroding_economy(friction_decay: float = 0.02) -> EconomyParams:
    return EconomyParams(friction_decay=friction_decay)


def check_p5_transfer(
    trials: int = 1000,
    base_seed: int = 0,
    horizon: int = 200,
    min_fraction: float = 0.9,
    economy: EconomyParams | None = None,
    boundaries: BoundaryConfig | None = None,
    ranges: ParamRanges | None = None,
) -> PropositionReport:
    economy = economy or eroding_economy()
    boundaries = boundaries or BoundaryConfig(False, False, False, erosion_rate=0.02)
    if _any_active(boundaries):
        raise PreconditionError("P5 needs all boundaries inactive (active boundaries are the T1 regime)")
    if boundaries.erosion_rate <= 0:
        raise PreconditionError("P5 needs erosion_rate > 0")
    if economy.friction_decay <= 0:
        raise PreconditionError("P5 needs friction_decay > 0")
    passes, firsts, cex, literal_fail = 0, [], None, 0
    for i in range(trials):
        seed = derive_seed(base_seed, 5, i)
        rng = np.random.default_rng(seed)
        state = generate_random_system(seed, *_random_counts(rng), ranges=ranges, economy=economy, boundaries=boundaries)
        step, literal = first_transfer(state, horizon)
        if step is not None and literal:
            passes += 1
            firsts.append(step)
        else:
            literal_fail += step is not None
            if cex is None:
                cex = _counterexample(seed, horizon if step is None else step, state, transfer_step=step)
    required = math.ceil(min_fraction * trials) if literal_fail == 0 else trials + 1
    return PropositionReport(
        "P5", trials, passes, passes / trials if trials else 0.0, cex, required=required,
        details={
            "transfer_rate": passes / trials if trials else 0.0,
            "min_fraction": min_fraction,
            "mean_first_transfer_step": float(np.mean(firsts)) if firsts else None,
            "literal_condition_failures": literal_fail,
        },
    )


def adversarial_economy(rng: np.random.Generator) -> EconomyParams:
    return EconomyParams(
        friction_decay=float(rng.uniform(0.05, 0.5)),
        delta=float(rng.uniform(0.1, 1.0)),
        psi=float(rng.uniform(0.1, 1.0)),
        reach_gain=float(rng.uniform(0.0, 0.1)),
        w_h=float(rng.uniform(1.0, 10.0)),
    )


def check_t1_stabilization(
    trials: int = 1000,
    base_seed: int = 0,
    horizon: int = 200,
    epsilon: float = 0.0,
    boundaries: BoundaryConfig | None = None,
    economy: EconomyParams | None = None,
    ranges: ParamRanges | None = None,
) -> PropositionReport:
    """All three boundaries on; growth parameters drawn adversarially.

    With ``epsilon == 0`` every AI restricted mass must stay exactly 0; with
    ``epsilon > 0`` the top AI restricted mass must stay below the smallest
    top-human restricted mass seen.
    """
    if boundaries is not None and not _all_active(boundaries):
        raise PreconditionError("T1 needs B1, B2 and B3 active")
    passes, witness, cex = 0, 0.0, None
    for i in range(trials):
        seed = derive_seed(base_seed, 6, i)
        rng = np.random.default_rng(seed)
        b = boundaries or BoundaryConfig(True, True, True, epsilon=epsilon,
                                         erosion_rate=float(rng.uniform(0.1, 1.0)))
        econ = economy or adversarial_economy(rng)
        state = generate_random_system(seed, *_random_counts(rng), ranges=ranges or adversarial_ranges(),
                                       economy=econ, boundaries=b)
        top_ai, min_human, any_ai, bad = max_ai_restricted_mass(state, horizon)
        witness = max(witness, top_ai)
        if b.epsilon == 0:
            ok = not any_ai and top_ai == 0.0
        else:
            ok = not any_ai and top_ai < min_human
        if ok:
            passes += 1
        elif cex is None:
            cex = _counterexample(seed, bad or 0, state, max_ai_restricted=top_ai)
    return PropositionReport("T1", trials, passes, witness, cex, details={"horizon": horizon, "epsilon": epsilon})


def paired_transfer_rates(
    trials: int = 1000,
    base_seed: int = 0,
    horizon: int = 200,
    erosion_rate: float = 0.02,
    friction_decay: float = 0.02,
    ranges: ParamRanges | None = None,
) -> dict[str, float]:
    """Same random systems with boundaries on (epsilon 0) and off."""
    economy = eroding_economy(friction_decay)
    on = BoundaryConfig(True, True, True, epsilon=0.0, erosion_rate=erosion_rate)
    off = BoundaryConfig(False, False, False, epsilon=0.0, erosion_rate=erosion_rate)
    on_transfers = off_transfers = 0
    witness = 0.0
    for i in range(trials):
        seed = derive_seed(base_seed, 7, i)
        rng = np.random.default_rng(seed)
        counts = _random_counts(rng)
        s_on = generate_random_system(seed, *counts, ranges=ranges, economy=economy, boundaries=on)
        top_ai, _, any_ai, _ = max_ai_restricted_mass(s_on, horizon)
        witness = max(witness, top_ai)
        on_transfers += any_ai
        s_off = generate_random_system(seed, *counts, ranges=ranges, economy=economy, boundaries=off)
        step, _ = first_transfer(s_off, horizon)
        off_transfers += step is not None
    return {
        "transfer_rate_on": on_transfers / trials,
        "transfer_rate_off": off_transfers / trials,
        "max_ai_restricted_on": witness,
    }


def run_checks(props=PROPERTY_IDS, trials: int | None = None, base_seed: int = 0, **scenario) -> list[PropositionReport]:
    """Run the named checks; ``trials`` overrides every default count.

    ``scenario`` may carry ``economy``, ``boundaries`` and ``ranges`` taken
    from a configuration; they are passed to the transfer checks.
    """
    kw = {} if trials is None else {"trials": trials}
    out = []
    for pid in props:
        if pid == "P1":
            out.append(check_p1_scaling(base_seed=base_seed, **kw))
        elif pid == "P2":
            out.append(check_p2_responsibility(base_seed=base_seed, **kw))
        elif pid == "P3":
            out.append(check_p3_concentration(base_seed=base_seed, **kw))
        elif pid == "P4":
            out.append(check_p4_irreversibility(base_seed=base_seed, **kw))
        elif pid == "P5":
            out.append(check_p5_transfer(base_seed=base_seed, **kw, **scenario))
        elif pid == "T1":
            out.append(check_t1_stabilization(base_seed=base_seed, **kw, **scenario))
        else:
            raise ValueError(f"unknown property id '{pid}'")
    return out
