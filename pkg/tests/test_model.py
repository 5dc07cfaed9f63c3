from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from sovsim.model import (
    BoundaryConfig,
    ConfigError,
    DomainClass,
    EconomyParams,
    ParamRanges,
    dump_config,
    generate_random_system,
    load_config,
    set_path,
    parse_config,
    validate_state,
)
from sovsim.scenarios import scenario_names, scenario_text

MINIMAL = """
[nodes.0]
kind = "human"
[nodes.1]
kind = "ai"
"""


def test_minimal_config_defaults():
    state = load_config(MINIMAL)
    assert state.step == 0
    assert [n.share for n in state.nodes] == [0.5, 0.5]
    assert [n.kind.value for n in state.nodes] == ["human", "ai"]
    assert state.nodes[0].alpha == 0.0


def test_zero_friction_floor_rejected():
    with pytest.raises(ConfigError, match="friction_floor must be > 0"):
        load_config("[economy]\nfriction_floor = 0\n" + MINIMAL)


def test_explicit_shares_round_trip():
    text = MINIMAL + '[nodes.2]\nkind = "ai"\n'
    text = text.replace('kind = "human"', 'kind = "human"\nshare = 0.2')
    text = text.replace('[nodes.1]\nkind = "ai"', '[nodes.1]\nkind = "ai"\nshare = 0.3')
    text += "share = 0.5\n"
    state = load_config(text)
    assert [n.share for n in state.nodes] == [0.2, 0.3, 0.5]
    again = load_config(dump_config(state))
    assert again == state


def test_partial_shares_rejected():
    with pytest.raises(ConfigError, match="every node or for none"):
        load_config(MINIMAL.replace('kind = "ai"', 'kind = "ai"\nshare = 1.0'))


def test_shares_must_sum_to_one():
    text = MINIMAL.replace('kind = "human"', 'kind = "human"\nshare = 0.6')
    text = text.replace('kind = "ai"', 'kind = "ai"\nshare = 0.6')
    with pytest.raises(ConfigError, match="sum to 1"):
        load_config(text)


def test_parse_error_carries_location():
    with pytest.raises(ConfigError, match=r"parse error: .*line 2"):
        load_config("[system]\nreview_level = = 1\n")


def test_unknown_key_strict_and_lenient():
    text = "[economy]\nbogus = 1\n" + MINIMAL
    with pytest.raises(ConfigError, match="economy.bogus"):
        load_config(text)
    with pytest.warns(UserWarning, match="economy.bogus"):
        state = load_config(text, lenient=True)
    assert len(state.nodes) == 2


@pytest.mark.parametrize("snippet, message", [
    ("[nodes.0]\nkind = \"robot\"\n", "kind"),
    ("[nodes.0]\nkind = \"human\"\nrho = 0.5\n", "rho must be >= 1"),
    ("[nodes.0]\nkind = \"human\"\nfriction = 0.01\n", "friction must be >= friction_floor"),
    ("[nodes.0]\nkind = \"human\"\nphi = [1.5, 0, 0]\n", "phi must lie"),
    ("[economy]\np_mean = 1.0\n[nodes.0]\nkind = \"human\"\n", "p_mean"),
    ("[economy]\ntau = 0\n[nodes.0]\nkind = \"human\"\n", "tau must be > 0"),
    ("[boundaries]\nepsilon = -1\n[nodes.0]\nkind = \"human\"\n", "epsilon must be >= 0"),
])
def test_validation_names_invariant(snippet, message):
    with pytest.raises(ConfigError, match=message):
        load_config(snippet)


def test_b1_clamps_ai_irreversible_authority_on_load():
    text = MINIMAL.replace('kind = "ai"', 'kind = "ai"\nphi = [0.4, 0.2, 1.0]\ndirect_control_critical = true')
    state = load_config(text)
    ai = state.nodes[1]
    assert ai.phi[DomainClass.IRREVERSIBLE] == 0.0
    assert not ai.direct_control_critical
    relaxed = load_config("[boundaries]\nb1_active = false\nb2_active = false\n" + text)
    assert relaxed.nodes[1].phi[0] == 0.4
    assert relaxed.nodes[1].direct_control_critical


def test_generate_is_deterministic():
    a = generate_random_system(42, 2, 2)
    b = generate_random_system(42, 2, 2)
    assert a == b
    assert dump_config(a) == dump_config(b)


def test_generate_seed_changes_nodes():
    assert generate_random_system(42, 2, 2).nodes != generate_random_system(43, 2, 2).nodes


def test_generate_degenerate_rate_range():
    state = generate_random_system(1, 2, 3, ParamRanges(human_lam=(0.0, 0.0), ai_lam=(0.0, 0.0)))
    assert all(n.lam == 0 for n in state.nodes)


def test_generate_errors():
    with pytest.raises(ConfigError, match="at least one human"):
        generate_random_system(0, 0, 2)
    with pytest.raises(ConfigError, match="inverted"):
        generate_random_system(0, 1, 1, ParamRanges(rho=(3.0, 1.0)))


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_h=st.integers(1, 4), n_a=st.integers(1, 4),
       flags=st.tuples(st.booleans(), st.booleans(), st.booleans()))
def test_generated_states_satisfy_invariants(seed, n_h, n_a, flags):
    state = generate_random_system(seed, n_h, n_a, boundaries=BoundaryConfig(*flags))
    validate_state(state)
    assert abs(sum(n.share for n in state.nodes) - 1) <= 1e-9
    assert len({n.id for n in state.nodes}) == n_h + n_a
    if flags[0]:
        assert all(n.phi[0] == 0 for n in state.ai_nodes)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_serialization_round_trip(seed):
    state = generate_random_system(seed, 2, 2, boundaries=BoundaryConfig(False, True, False, 0.1, 0.02))
    state = replace(state, review_level=0.7, trace_depth=3, branch_coeff=0.05)
    assert load_config(dump_config(state)) == state


@pytest.mark.parametrize("name", scenario_names())
def test_shipped_scenarios_load(name):
    state = load_config(scenario_text(name))
    validate_state(state)


def test_generate_section_uses_seed():
    text = scenario_text("erosion")
    assert load_config(text, seed=1) == load_config(text, seed=1)
    assert load_config(text, seed=1).nodes != load_config(text, seed=2).nodes


def test_set_path():
    doc = parse_config(scenario_text("erosion"))
    out = set_path(doc, "economy.friction_decay", 0.3)
    assert out["economy"]["friction_decay"] == 0.3
    assert doc["economy"]["friction_decay"] == 0.05
    assert set_path(doc, "economy.tau", 2.0)["economy"]["tau"] == 2.0
    with pytest.raises(ConfigError, match="unknown parameter path"):
        set_path(doc, "economy.nonsense", 1.0)
    with pytest.raises(ConfigError, match="unknown parameter path"):
        set_path(doc, "nowhere.x", 1.0)
