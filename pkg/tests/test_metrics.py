import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_node, make_state
from sovsim.metrics import (
    PathCountOverflow,
    TraceDag,
    action_count,
    aggregate_ai_density,
    compute_frame,
    concentration_index,
    control_mass,
    count_paths,
    decision_energy,
    empirical_traceability,
    irreversibility_from_counts,
    irreversibility_probability,
    make_trace_dag,
    sovereign,
    traceability_bound,
)
from sovsim.model import EconomyParams, SelfExpansion


def test_decision_energy_examples():
    node = make_node(lam=2.0, iota=(3.0, 3.0, 3.0), rho=4.0)
    assert decision_energy(node) == pytest.approx(24.0, rel=1e-15)
    assert decision_energy(make_node(lam=0.0)) == 0.0
    doubled = make_node(lam=2.0, iota=(3.0, 3.0, 3.0), rho=8.0)
    assert decision_energy(doubled) == pytest.approx(48.0, rel=1e-15)


def test_decision_energy_uses_domain_mix():
    node = make_node(iota=(2.0, 4.0, 6.0))
    assert decision_energy(node, (1.0, 0.0, 0.0)) == 2.0
    assert decision_energy(node, (0.5, 0.5, 0.0)) == 3.0


def test_aggregate_ai_density():
    human = make_node(id=0, kind="human", lam=100.0)
    a = make_node(id=1, lam=3.0)
    b = make_node(id=2, lam=5.0)
    assert aggregate_ai_density(make_state([human])) == 0.0
    assert aggregate_ai_density(make_state([human, a, b])) == pytest.approx(8.0)
    assert aggregate_ai_density(make_state([b, human, a])) == aggregate_ai_density(make_state([a, b, human]))


def test_control_mass_examples():
    zero = make_node(phi=(0.0, 0.0, 0.0))
    assert control_mass(zero) == control_mass(zero, True) == 0.0
    bounded = make_node(lam=2.0, rho=3.0, iota=(1.0, 1.0, 6.0), phi=(0.0, 1.0, 1.0), direct_control_critical=False)
    assert control_mass(bounded, True) == 0.0
    assert control_mass(bounded, False, (0.0, 0.0, 1.0)) == pytest.approx(2.0 * 3.0 * 6.0)
    full = make_node(iota=(3.0, 3.0, 3.0), phi=(1.0, 1.0, 1.0), direct_control_critical=True)
    assert control_mass(full) == pytest.approx(3.0, rel=1e-15)
    assert control_mass(full, True) == pytest.approx(2.0, rel=1e-15)


def test_sovereign_examples():
    # all masses zero: lowest id, no authority
    ai0 = make_node(id=0, phi=(0.0, 0.0, 1.0))
    human1 = make_node(id=1, kind="human", phi=(0.0, 0.0, 0.0), direct_control_critical=False)
    assert sovereign(make_state([human1, ai0])) == (0, False)
    human = make_node(id=0, kind="human", lam=5.0, phi=(1.0, 0.0, 0.0), iota=(3.0, 0.0, 0.0))
    ai = make_node(id=1, lam=3.0, phi=(1.0, 0.0, 0.0), iota=(3.0, 0.0, 0.0))
    assert sovereign(make_state([human, ai])) == (0, False)
    strong = make_node(id=1, lam=7.0, phi=(1.0, 0.0, 0.0), iota=(3.0, 0.0, 0.0))
    state = make_state([human, strong])
    assert control_mass(strong, True) == pytest.approx(7.0)
    assert sovereign(state) == (1, True)


def test_sovereign_ai_without_authority_is_not_transfer():
    human = make_node(id=1, kind="human", phi=(0.0, 0.0, 0.0), direct_control_critical=False)
    ai = make_node(id=0, phi=(0.0, 0.0, 1.0))
    assert sovereign(make_state([ai, human])) == (0, False)
    granted = make_node(id=0, phi=(0.0, 0.0, 1.0), expansion=SelfExpansion(granted_total=0.1))
    assert sovereign(make_state([granted, human])) == (0, True)


@settings(max_examples=200, deadline=None)
@given(lams=st.lists(st.floats(0.01, 100), min_size=2, max_size=6), scale=st.floats(1e-3, 1e3))
def test_sovereign_argmax_invariant_under_rescaling(lams, scale):
    nodes = [make_node(id=i, lam=l, phi=(0.5, 0.5, 0.5), direct_control_critical=True) for i, l in enumerate(lams)]
    scaled = [make_node(id=i, lam=l * scale, phi=(0.5, 0.5, 0.5), direct_control_critical=True) for i, l in enumerate(lams)]
    masses = [control_mass(n, True) for n in nodes]
    # rescaling can only matter through exact ties, which floats may break
    if len(set(masses)) == len(masses):
        assert sovereign(make_state(nodes))[0] == sovereign(make_state(scaled))[0]


def test_traceability_bound():
    econ = EconomyParams(beta=1.0, gamma=1.0)
    assert [traceability_bound(e, econ) for e in (0.0, 1.0, 3.0)] == [1.0, 0.5, 0.25]
    assert traceability_bound(999.0, econ) == pytest.approx(0.001, rel=1e-15)
    assert traceability_bound(1e6, econ) < 2e-6
    flat = EconomyParams(beta=0.7, gamma=0.0)
    assert traceability_bound(1e9, flat) == 0.7


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0, 1e6), b=st.floats(0, 1e6), beta=st.floats(0.1, 10), gamma=st.floats(0.01, 10))
def test_traceability_bound_monotone(a, b, beta, gamma):
    econ = EconomyParams(beta=beta, gamma=gamma)
    lo, hi = sorted((a, b))
    assert traceability_bound(hi, econ) <= traceability_bound(lo, econ) <= beta


def enumerate_paths(dag: TraceDag):
    """Exhaustive DFS over the explicit edge list; returns (total, human)."""
    succ = {}
    for u, v in dag.edges():
        succ.setdefault(u, []).append(v)
    total = human = 0
    stack = [(("root",), None)]
    while stack:
        v, origin = stack.pop()
        if v == ("sink",):
            total += 1
            human += dag.human_origin[origin[1]]
            continue
        for w in succ[v]:
            stack.append((w, origin if origin is not None else w))
    return total, human


def test_dag_four_paths_example():
    dag = TraceDag(2, 2, (True, False))
    assert enumerate_paths(dag) == (4, 2)
    stats = count_paths(dag)
    assert (stats.total_paths, stats.human_origin_paths) == (4, 2)
    assert stats.empirical_traceability == 0.5


def test_zero_ai_density_is_a_single_human_chain():
    dag = make_trace_dag(0.0, 5.0, 0.5, 4)
    assert dag.branching == 1
    assert count_paths(dag).empirical_traceability == 1.0
    state = make_state([make_node(id=0, kind="human")])
    assert empirical_traceability(state, 3).empirical_traceability == 1.0


@settings(max_examples=200, deadline=None)
@given(e_ai=st.floats(0, 400), e_h=st.floats(0, 50), k=st.floats(0, 0.05), depth=st.integers(1, 4), seed=st.integers(0, 99))
def test_dp_matches_enumeration(e_ai, e_h, k, depth, seed):
    dag = make_trace_dag(e_ai, e_h, k, depth, seed)
    if dag.branching ** depth > 3000:
        return
    stats = count_paths(dag)
    assert (stats.total_paths, stats.human_origin_paths) == enumerate_paths(dag)


def test_traceability_falls_across_density_tiers():
    ratios = [count_paths(make_trace_dag(e, 1.0, 0.5, 2)).empirical_traceability for e in (1.0, 10.0, 100.0)]
    assert ratios[0] > ratios[1] > ratios[2]


def test_path_overflow():
    with pytest.raises(PathCountOverflow, match="reduce"):
        make_trace_dag(1e4, 1.0, 1.0, 3)
    with pytest.raises(ValueError):
        make_trace_dag(1.0, 1.0, 1.0, 0)


def test_frame_records_nan_on_overflow():
    state = make_state([make_node(id=0, kind="human"), make_node(id=1, lam=1e5)], branch_coeff=1.0, trace_depth=3)
    assert math.isnan(compute_frame(state).empirical_traceability)


def test_irreversibility_examples():
    assert irreversibility_from_counts(0, 0.3) == 0.0
    exact = 1 - mpmath.power(mpmath.mpf("0.99"), 100)
    got = irreversibility_from_counts(100, 0.01)
    assert got == pytest.approx(float(exact), rel=1e-14)
    assert got == pytest.approx(0.633967658726771, rel=1e-12)
    assert irreversibility_from_counts(200, 0.01) > got
    assert irreversibility_from_counts(10**5, 1e-4) > 0.9999


def test_irreversibility_against_bernoulli_oracle():
    rng = np.random.default_rng(12345)
    hits = 0
    trials = 0
    for _ in range(10):
        draws = rng.random((10**4, 100)) < 0.01
        hits += int(draws.any(axis=1).sum())
        trials += 10**4
    analytic = irreversibility_from_counts(100, 0.01)
    se = math.sqrt(analytic * (1 - analytic) / trials)
    assert abs(hits / trials - analytic) <= 3 * se


@settings(max_examples=50, deadline=None)
@given(p=st.floats(1e-6, 0.5), n=st.integers(1, 10**6))
def test_irreversibility_matches_mpmath(p, n):
    with mpmath.workdps(50):
        exact = 1 - mpmath.power(1 - mpmath.mpf(p), n)
    assert irreversibility_from_counts(n, p) == pytest.approx(float(exact), rel=1e-10, abs=1e-300)


def test_action_count_and_state_probability():
    assert action_count(0.0, 1.0) == 0
    assert action_count(2.1, 1.0) == 3
    econ = EconomyParams(nu=10.0, p_mean=0.01)
    state = make_state([make_node(id=0, kind="human"), make_node(id=1, lam=10.0)], economy=econ)
    n, p = irreversibility_probability(state)
    assert n == 100
    assert p == irreversibility_from_counts(100, 0.01)


def test_beta_mode_is_seeded_and_near_homogeneous_mean():
    econ = EconomyParams(nu=100.0, p_mean=0.01, p_mode="beta", p_concentration=1e4)
    state = make_state([make_node(id=0, kind="human"), make_node(id=1, lam=10.0)], economy=econ, seed=4)
    n, p = irreversibility_probability(state)
    assert n == 1000
    assert irreversibility_probability(state) == (n, p)
    assert p == pytest.approx(irreversibility_from_counts(1000, 0.01), abs=0.01)


def test_concentration_index():
    assert concentration_index([0.25] * 4) == 0.25
    assert concentration_index([1.0, 0.0, 0.0]) == 1.0
    assert concentration_index([0.5, 0.3, 0.2]) == pytest.approx(0.38, rel=1e-15)


def test_frame_contents():
    human = make_node(id=0, kind="human", lam=2.0, share=0.4)
    ai = make_node(id=1, lam=3.0, share=0.6)
    frame = compute_frame(make_state([human, ai]))
    assert frame.e_d == {0: 2.0, 1: 3.0}
    assert frame.e_d_ai_total == 3.0
    assert frame.sovereign_id == 0 and not frame.sovereign_is_ai
    assert frame.traceability == 0.25
    assert frame.concentration == pytest.approx(0.52)
    assert frame.is_ai == {0: False, 1: True}
