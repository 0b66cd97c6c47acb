import math

import pytest
from hypothesis import given

from deceptra.belief import INVISIBLE, VISIBLE
from deceptra.gridworld import benchmark_scenario
from deceptra.mdp import Mdp, ObservationModel, ReachAvoidObjective
from deceptra.planner import FiniteMemoryStrategy, ssp_refine, synthesize, synthesize_full, winning_initial_sweep
from deceptra.sim import REACHED, simulate

from strategies import models


def run(model, visible):
    obs = model.observation.with_visibility(visible)
    return synthesize_full(model.mdp, obs, model.objectives["user"], model.objectives["attacker"])


def choice_by_name(syn):
    A, base = syn.aug.mdp, syn.aug.base
    return {A.states[i]: sorted(base.actions[a] for a in acts) for i, acts in syn.strategy.choice.items()}


def test_visible_choices(fig1):
    syn = run(fig1, True)
    c = choice_by_name(syn)
    assert c["3|{2,3}"] == ["b"]
    assert c["1|{1}"] == ["a"]
    # the hand-written policy is a support subset of the synthesized choices
    for state, act in {"3|{2,3}": "b", "2|{2,3}": "a", "2|{2}": "a", "1|{1}": "a"}.items():
        assert act in c[state]
    assert syn.report.aug_size == 9 and syn.report.asw_size == 5


def test_invisible_choices(fig1):
    syn = run(fig1, False)
    c = choice_by_name(syn)
    assert "b" in c["1|{1}"]
    assert c["3|{2,3}"] == ["b"]
    assert syn.report.aug_size == 6 and syn.report.asw_size == 4


def test_synthesize_returns_pair(fig1):
    strat, rep = synthesize(fig1.mdp, fig1.observation, fig1.objectives["user"], fig1.objectives["attacker"])
    assert isinstance(strat, FiniteMemoryStrategy) and rep.winning_initial == [0]


def test_choice_is_closed(fig1):
    for vis in (True, False):
        syn = run(fig1, vis)
        region = syn.aug_asw.region
        assert set(syn.strategy.choice) <= region
        for i, acts in syn.strategy.choice.items():
            for a in acts:
                assert syn.aug.mdp.support(i, a) <= region


def test_losing_start_gives_empty_strategy(fig1):
    m = fig1.mdp
    losing = [(m.state_id("4"), 1 << m.state_id("4"))]
    syn = synthesize_full(m, fig1.observation, fig1.objectives["user"], fig1.objectives["attacker"],
                          initial=losing)
    assert syn.strategy.choice == {}
    assert syn.report.winning_initial == []
    with pytest.raises(ValueError):
        ssp_refine(syn.strategy)


def test_unreachable_goal_is_not_a_safety_win():
    m = Mdp.from_names(["x", "g"], ["go"], {"x": ["go"], "g": ["go"]},
                       {("x", "go"): {"x": 1.0}, ("g", "go"): {"g": 1.0}}, "x")
    obs = ObservationModel.full(m)
    obj = ReachAvoidObjective.from_names(m, target=["g"])
    syn = synthesize_full(m, obs, obj, obj)
    assert syn.strategy.choice == {}


def test_same_objective_means_free_deception(fig1):
    m = fig1.mdp
    obs = ObservationModel.full(m)
    user = fig1.objectives["user"]
    roots = [(s, 1 << s) for s in range(m.n_states)]
    syn = synthesize_full(m, obs, user, user, initial=roots)
    assert syn.report.winning_initial == sorted(syn.user.region)


def test_ssp_values(fig1):
    syn = run(fig1, True)
    st = ssp_refine(syn.strategy)
    A = syn.aug.mdp
    v = {A.states[i]: x for i, x in st.value.items()}
    assert v["3|{2,3}"] == pytest.approx(1.0, abs=1e-9)
    assert v["f1|{4}"] == 0.0
    # with 1/2 splits: V(2,{2,3}) = 1 + V(2,{2,3})/2 + 1/2  =>  3
    assert v["2|{2,3}"] == pytest.approx(3.0, abs=1e-6)
    assert v["1|{1}"] == pytest.approx(4.0, abs=1e-6)
    assert all(math.isfinite(x) for x in st.value.values())
    assert all(st.ssp_action[i] in st.choice[i] for i in st.ssp_action)


def test_ssp_tie_break_prefers_smaller_action(fig1):
    syn = run(fig1, False)
    st = ssp_refine(syn.strategy)
    one = syn.aug.mdp.state_id("1|{1}")
    # b reaches 3|{2,3} (one step from the goal); a needs longer
    assert syn.aug.base.actions[st.ssp_action[one]] == "b"


def test_ssp_runs_reach_goal(fig1):
    syn = run(fig1, False)
    st = ssp_refine(syn.strategy)
    for seed in range(2000):
        assert simulate(syn.aug, st, seed, 500, use_ssp=True).status == REACHED


def test_strategy_json_shape(fig1):
    st = ssp_refine(run(fig1, True).strategy)
    d = st.to_dict()
    assert d["3|{2,3}"] == {"actions": ["b"], "ssp_action": "b", "value": 1.0}
    assert set(d) == {"1|{1}", "2|{2}", "2|{2,3}", "3|{2,3}", "f1|{4}"}


def test_sweep_frozen_values():
    # computed with the default reconstruction; see the decisions ledger
    win, syn = winning_initial_sweep(benchmark_scenario("c", "boolean", False))
    assert win == [5, 10, 15, 20, 21, 22, 23, 24]
    assert (syn.report.aug_size, syn.report.asw_size) == (598, 376)
    win, _ = winning_initial_sweep(benchmark_scenario("c", "precise", True))
    assert win == []


@pytest.mark.xfail(strict=True, reason="reference win set not reproduced by the reconstructed layout")
def test_sweep_reference_config_a():
    win, _ = winning_initial_sweep(benchmark_scenario("a", "boolean", False))
    assert win == [20, 21, 22, 23, 24]


@pytest.mark.xfail(strict=True, reason="reference win set not reproduced by the reconstructed layout")
def test_sweep_reference_config_b():
    win, _ = winning_initial_sweep(benchmark_scenario("b", "boolean", False))
    assert win == [5, 10, 15, 20, 21, 22, 23, 24]


@given(models())
def test_visible_winning_implies_invisible_winning(model):
    m, obs, user, att = model
    roots = [(s, obs.obs_mask(s)) for s in range(m.n_states)]
    vis = synthesize_full(m, obs.with_visibility(True), user, att, VISIBLE, initial=roots)
    inv = synthesize_full(m, obs.with_visibility(False), user, att, INVISIBLE, initial=roots)
    assert set(vis.report.winning_initial) <= set(inv.report.winning_initial)
