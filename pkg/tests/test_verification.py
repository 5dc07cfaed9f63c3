import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_node, make_state
from sovsim.dynamics import advance
from sovsim.metrics import aggregate_ai_density, sovereign
from sovsim.model import BoundaryConfig, EconomyParams, SelfExpansion
from sovsim.sweeps import BoundaryEvent, run_trajectory
from sovsim.verification import (
    PreconditionError,
    PropositionReport,
    check_p1_scaling,
    check_p2_responsibility,
    check_p3_concentration,
    check_p4_irreversibility,
    check_p5_transfer,
    check_t1_stabilization,
    concentration_system,
    first_transfer,
    max_ai_restricted_mass,
    monte_carlo_irreversibility,
    p1_margins,
    paired_transfer_rates,
    run_checks,
    strictly_increasing_risk,
    symmetric_share_drift,
)


def test_p1_hand_example():
    # alpha=C=iota=rho=F=1: lambda grows by exactly 1, so does E_A
    ai = make_node(id=0, lam=1.0, share=1.0)
    state = make_state([ai], BoundaryConfig(erosion_rate=0.0))
    nxt, _ = advance(state)
    assert aggregate_ai_density(nxt) - aggregate_ai_density(state) == pytest.approx(1.0, rel=1e-15)
    assert p1_margins(state, 5) == pytest.approx([0.0] * 5, abs=1e-12)


def test_p1_check_small():
    report = check_p1_scaling(trials=20, horizon=30)
    assert report.passed and report.witness >= -1e-9


def test_p2_check_small():
    report = check_p2_responsibility(trials=10, horizon=20)
    assert report.passed
    assert report.details["bound_at_1e6"] < 2e-6


def two_node_oracle(q, c, m, eta, delta, psi, tau, steps):
    """Independent scalar recursion for routing with feedback."""
    q, m = list(q), list(m)
    out = []
    for _ in range(steps):
        u = [q[i] / c[i] + eta * m[i] for i in range(2)]
        top = max(u)
        ex = [math.exp((x - top) / tau) for x in u]
        s = [x / sum(ex) for x in ex]
        m = [m[i] + delta * s[i] for i in range(2)]
        q = [q[i] + psi * s[i] for i in range(2)]
        out.append(s[0])
    return out


def test_p3_two_node_against_oracle():
    econ = EconomyParams(eta=1.0, delta=0.05, psi=0.02, tau=0.5)
    state = concentration_system(2, 0, 0.1, economy=econ)
    expected = two_node_oracle([1.1, 1.0], [1.0, 1.0], [0.0, 0.0], 1.0, 0.05, 0.02, 0.5, 200)
    s = state
    got = []
    for _ in range(200):
        s, _ = advance(s)
        got.append(s.node(0).share)
    assert got == pytest.approx(expected, rel=1e-12)
    assert max(got) > 0.95


def test_p3_check_small():
    report = check_p3_concentration(trials=10)
    assert report.passed
    assert report.details["max_steps_to_dominance"] <= 500


def test_symmetric_shares_stay_uniform():
    assert symmetric_share_drift(4, 500) <= 1e-9
    assert symmetric_share_drift(3, 200) <= 1e-9


def test_p3_rejects_no_advantage():
    with pytest.raises(PreconditionError):
        check_p3_concentration(trials=1, advantage=0.0)


def test_p4_helpers():
    est, se = monte_carlo_irreversibility(0.5, 1, 10**5, 3)
    assert abs(est - 0.5) < 4 * se
    assert strictly_increasing_risk(0.01, [1, 2, 50, 100, 200])
    assert not strictly_increasing_risk(0.01, [5, 5])
    assert strictly_increasing_risk(0.1, [5000, 6000])


def test_p4_check_small():
    report = check_p4_irreversibility(trials=10, mc_trials=10**5, pair_mc_trials=5000)
    assert report.passed
    assert report.details["reference"]["analytic"] == pytest.approx(0.633967658726771, rel=1e-12)


def test_p5_hand_witness():
    human = make_node(id=0, kind="human", lam=1.0, phi=(0.2, 0.0, 1.0), direct_control_critical=False)
    ai = make_node(id=1, lam=1.0, phi=(0.3, 0.0, 1.0))
    state = make_state([human, ai], BoundaryConfig(False, False, False))
    assert sovereign(state) == (1, True)
    assert first_transfer(state, 10) == (0, True)


def test_p5_check_small():
    report = check_p5_transfer(trials=20)
    assert report.passed
    assert report.required == math.ceil(0.9 * 20)


@pytest.mark.parametrize("boundaries, economy", [
    (BoundaryConfig(True, False, False, erosion_rate=0.02), None),
    (BoundaryConfig(False, False, False, erosion_rate=0.0), None),
    (BoundaryConfig(False, False, False, erosion_rate=0.02), EconomyParams(friction_decay=0.0)),
])
def test_p5_preconditions(boundaries, economy):
    with pytest.raises(PreconditionError):
        check_p5_transfer(trials=1, boundaries=boundaries, economy=economy)


def test_t1_check_small():
    report = check_t1_stabilization(trials=20)
    assert report.passed
    assert report.witness == 0.0
    with pytest.raises(PreconditionError):
        check_t1_stabilization(trials=1, boundaries=BoundaryConfig(b2_active=False))


def test_t1_fails_once_boundaries_drop():
    human = make_node(id=0, kind="human", lam=1.0, phi=(0.1, 0.1, 1.0))
    ai = make_node(id=1, lam=50.0, phi=(0.0, 0.0, 1.0))
    econ = EconomyParams(friction_decay=0.05)
    state = make_state([human, ai], BoundaryConfig(erosion_rate=0.5), econ)
    top_ai, _, any_ai, _ = max_ai_restricted_mass(state, 100)
    assert top_ai == 0.0 and not any_ai
    frames = run_trajectory(state, 100, [BoundaryEvent(50, {"b1_active": False, "b2_active": False, "b3_active": False})])
    assert not any(f.sovereign_is_ai for f in frames[:51])
    assert all(f.e_c_top_ai_restricted == 0.0 for f in frames[:51])
    assert frames[-1].e_c_top_ai_restricted > 0.0
    assert any(f.sovereign_is_ai for f in frames[51:])


def test_t1_epsilon_allows_small_growth_but_no_transfer():
    report = check_t1_stabilization(trials=10, epsilon=0.01)
    assert report.passed


def test_paired_rates_small():
    rates = paired_transfer_rates(trials=20, horizon=200)
    assert rates["transfer_rate_on"] == 0.0
    assert rates["max_ai_restricted_on"] == 0.0
    assert rates["transfer_rate_off"] >= 0.9


def test_reports_are_deterministic():
    a = run_checks(("P1", "T1"), trials=5, base_seed=11)
    b = run_checks(("P1", "T1"), trials=5, base_seed=11)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    with pytest.raises(ValueError):
        run_checks(("P9",), trials=1)


def test_report_verdict():
    r = PropositionReport("P1", 10, 9, 0.0, None, required=9)
    assert r.passed and r.verdict == "pass"
    assert not PropositionReport("P1", 10, 9, 0.0, None).passed
