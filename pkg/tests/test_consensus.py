import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import StateFactory
from Consensus.ConsensusOps import (
    MeasurementPlan,
    SimConfig,
    best_agreement,
    build_consensus_measurements,
    computational_plan,
    is_consensus_table,
    joint_outcome_distribution,
    necessity_probe,
    run_trials,
    within_binomial_bounds,
)
from Schmidt.SchmidtOps import analyze, s_local_analyze
from Tensors.TensorOps import Projector


def _certified(state):
    return build_consensus_measurements(state, analyze(state).certificate)


def _fail_subsets(n):
    for size in range(n):
        yield from itertools.combinations(range(n), size)


# ────────────────────────────────────────────────────────────────
# plans
# ----------------------------------------------------------------
def test_ghz_plan_is_computational_with_empty_bottom(ghz3):
    plan = _certified(ghz3)
    assert plan.certified
    for agent in plan.outcomes:
        assert agent[0].rank == 0
        assert_allclose(agent[1].matrix, np.diag([1.0, 0.0]), atol=1e-10)
        assert_allclose(agent[2].matrix, np.diag([0.0, 1.0]), atol=1e-10)


def test_two_term_qutrit_plan_puts_unused_level_in_bottom():
    state = StateFactory.completely_gsd((3, 3, 3), (0.6, 0.4))
    plan = _certified(state)
    for agent in plan.outcomes:
        assert len(agent) == 3
        assert_allclose(agent[0].matrix, np.diag([0.0, 0.0, 1.0]), atol=1e-10)
    table = joint_outcome_distribution(state, plan)
    assert table.keys() == {(1, 1, 1), (2, 2, 2)}
    assert table[(1, 1, 1)] == pytest.approx(0.6, abs=1e-12)


def test_plan_needs_a_verified_full_certificate(ghz3, w3):
    with pytest.raises(ValueError, match="certificate rejected"):
        build_consensus_measurements(w3, analyze(ghz3).certificate)
    with pytest.raises(ValueError, match="every party"):
        build_consensus_measurements(ghz3, s_local_analyze(ghz3, [0, 1]).certificate)


def test_plan_validation():
    p0 = Projector(np.diag([1.0, 0.0]))
    p1 = Projector(np.diag([0.0, 1.0]))
    plus = Projector(np.full((2, 2), 0.5))
    zero = Projector.zero(2)
    with pytest.raises(ValueError, match="not orthogonal"):
        MeasurementPlan(dims=(2, 2), outcomes=((zero, p0, plus), (zero, p0, p1)))
    with pytest.raises(ValueError, match="sum to the identity"):
        MeasurementPlan(dims=(2, 2), outcomes=((zero, p0), (zero, p0, p1)))
    with pytest.raises(ValueError, match="agents"):
        MeasurementPlan(dims=(2, 2, 2), outcomes=((zero, p0, p1),))


def test_plan_document_reloads(gsd333):
    plan = _certified(gsd333)
    again = MeasurementPlan.from_dict(plan.to_dict())
    assert again.dims == plan.dims
    assert not again.certified
    for a, b in zip(plan.outcomes, again.outcomes):
        for p, q in zip(a, b):
            assert_allclose(p.matrix, q.matrix, atol=1e-15)
    with pytest.raises(ValueError, match="missing field 'agents'"):
        MeasurementPlan.from_dict({"dims": [2, 2]})


@pytest.mark.parametrize(
    "doc, message",
    [
        ({"dims": [2, 2], "agents": 3}, "field 'agents' must be a list"),
        ({"dims": [2, 2], "agents": None}, "field 'agents' must be a list"),
        ({"dims": [2, 2], "agents": [5, 5]}, r"'agents'\[0\]"),
        ({"dims": 4, "agents": []}, "field 'dims'"),
        ("plan", "top level"),
    ],
)
def test_malformed_plans_name_the_field(doc, message):
    with pytest.raises(ValueError, match=message):
        MeasurementPlan.from_dict(doc)


# ────────────────────────────────────────────────────────────────
# exact tables
# ----------------------------------------------------------------
def test_exact_tables(ghz3, product3, w3):
    ghz = joint_outcome_distribution(ghz3, _certified(ghz3))
    assert ghz.keys() == {(1, 1, 1), (2, 2, 2)}
    assert_allclose(list(ghz.values()), [0.5, 0.5], atol=1e-12)
    assert is_consensus_table(ghz)

    prod = joint_outcome_distribution(product3, computational_plan(product3.dims))
    assert prod == pytest.approx({(1, 1, 1): 1.0})

    w = joint_outcome_distribution(w3, computational_plan(w3.dims))
    assert w.keys() == {(1, 1, 2), (1, 2, 1), (2, 1, 1)}
    assert_allclose(list(w.values()), [1 / 3] * 3, atol=1e-12)
    assert not is_consensus_table(w)


def test_exact_table_is_order_invariant(gsd333, w3):
    for state, plan in ((gsd333, _certified(gsd333)), (w3, computational_plan(w3.dims))):
        reference = joint_outcome_distribution(state, plan)
        for order in itertools.permutations(range(3)):
            table = joint_outcome_distribution(state, plan, order=order)
            assert table.keys() == reference.keys()
            assert_allclose(list(table.values()), list(reference.values()), atol=1e-12)


def test_bad_order_is_rejected(ghz3):
    with pytest.raises(ValueError, match="permutation"):
        joint_outcome_distribution(ghz3, _certified(ghz3), order=[0, 0, 1])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), blocks=st.integers(2, 3))
def test_certified_plans_always_agree(seed, blocks):
    state = StateFactory.planted((3, 3, 3), blocks, seed=seed)
    table = joint_outcome_distribution(state, _certified(state))
    assert is_consensus_table(table)
    assert sum(table.values()) == pytest.approx(1.0, abs=1e-9)


# ────────────────────────────────────────────────────────────────
# trials
# ----------------------------------------------------------------
@pytest.mark.parametrize("drop", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("fixture, rows", [("ghz3", 2), ("gsd333", 3)])
def test_certified_plan_agrees_under_every_fault_pattern(fixture, rows, drop, request):
    state = request.getfixturevalue(fixture)
    plan = _certified(state)
    for failed in _fail_subsets(state.n):
        config = SimConfig(trials=10_000, seed=11, failed_agents=frozenset(failed), channel_drop_probability=drop)
        stats = run_trials(state, plan, config)
        assert stats.agreement_frequency == 1.0
        assert stats.exact_consensus
        assert stats.messages_sent == 0
        assert set(stats.consensus_value_histogram) <= set(range(1, rows + 1))


def test_w_computational_plan_never_agrees(w3):
    stats = run_trials(w3, computational_plan(w3.dims), SimConfig(trials=2000))
    assert stats.agreement_frequency == 0.0
    assert stats.consensus_value_histogram == {}


def test_w_single_survivor_always_agrees(w3):
    config = SimConfig(trials=500, failed_agents=frozenset({1, 2}))
    stats = run_trials(w3, computational_plan(w3.dims), config)
    assert stats.agreement_frequency == 1.0
    assert stats.live_agents == (0,)


@pytest.mark.parametrize("name", ["ghz", "w", "gsd"])
def test_frequencies_within_three_sigma(name, ghz3, w3, gsd333):
    state, plan = {
        "ghz": (ghz3, computational_plan(ghz3.dims)),
        "w": (w3, computational_plan(w3.dims)),
        "gsd": (gsd333, _certified(gsd333)),
    }[name]
    stats = run_trials(state, plan, SimConfig(trials=10_000, seed=7))
    assert sum(stats.outcome_counts.values()) == 10_000
    assert within_binomial_bounds(stats)
    frame = stats.to_frame()
    assert list(frame.columns) == ["outcome", "exact", "count", "frequency", "sigma", "within_3sigma"]
    assert frame["within_3sigma"].all()


def test_worker_count_does_not_change_results(gsd333):
    plan = _certified(gsd333)
    runs = [run_trials(gsd333, plan, SimConfig(trials=3001, seed=5, workers=w)) for w in (1, 2, 8)]
    assert runs[0].outcome_counts == runs[1].outcome_counts == runs[2].outcome_counts


def test_trials_are_reproducible_and_seed_sensitive(w3):
    plan = computational_plan(w3.dims)
    a = run_trials(w3, plan, SimConfig(trials=1000, seed=1))
    b = run_trials(w3, plan, SimConfig(trials=1000, seed=1))
    c = run_trials(w3, plan, SimConfig(trials=1000, seed=2))
    assert a.outcome_counts == b.outcome_counts
    assert a.outcome_counts != c.outcome_counts


def test_sampling_order_keeps_the_statistics(w3):
    plan = computational_plan(w3.dims)
    stats = run_trials(w3, plan, SimConfig(trials=6000, seed=3, order=(2, 0, 1)))
    assert within_binomial_bounds(stats)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"trials": 0}, "trials"),
        ({"channel_drop_probability": 1.5}, "drop probability"),
        ({"workers": 0}, "workers"),
        ({"seed": -1}, "seed"),
    ],
)
def test_sim_config_validation(kwargs, message):
    with pytest.raises(ValueError, match=message):
        SimConfig(**kwargs)


def test_live_agents_validation(ghz3):
    plan = _certified(ghz3)
    with pytest.raises(ValueError, match="at least one agent"):
        run_trials(ghz3, plan, SimConfig(trials=10, failed_agents=frozenset({0, 1, 2})))
    with pytest.raises(ValueError, match="out of range"):
        run_trials(ghz3, plan, SimConfig(trials=10, failed_agents=frozenset({3})))


def test_stats_document_is_one_based(ghz3):
    stats = run_trials(ghz3, _certified(ghz3), SimConfig(trials=100, failed_agents=frozenset({1})))
    doc = stats.to_dict()
    assert doc["live_agents"] == [1, 3]
    assert set(doc["outcome_counts"]) <= {"1,1,1", "2,2,2"}
    assert doc["exact_consensus"] is True


# ────────────────────────────────────────────────────────────────
# necessity probe
# ----------------------------------------------------------------
def test_best_agreement_uses_relabeling():
    table = {(1, 2, 2): 0.5, (2, 1, 1): 0.5}
    assert best_agreement(table, 3, 2) == pytest.approx(1.0)
    assert best_agreement({(1, 2, 1): 0.5, (1, 1, 1): 0.5}, 3, 2) == pytest.approx(0.5)
    assert best_agreement({(0, 1, 1): 1.0}, 3, 2) == 0.0


def test_probe_w_and_haar_states_disagree(w3):
    states = [w3] + [StateFactory.haar((2, 2, 2), seed=s) for s in (1, 2, 3)]
    for state in states:
        report = necessity_probe(state, samples=200, seed=7)
        assert report.min_disagreement > 0.01
        assert report.structurally_excluded == ()


def test_probe_ghz_certificate_has_no_disagreement(ghz3):
    report = necessity_probe(ghz3, samples=20, seed=7)
    assert report.certificate_disagreement == pytest.approx(0.0, abs=1e-12)
    assert report.min_disagreement >= 0.0


def test_probe_excludes_rank_one_agents(product3, zero_bell):
    report = necessity_probe(product3, samples=5)
    assert report.structurally_excluded == (0, 1, 2)
    assert report.min_disagreement is None
    assert report.to_dict()["structurally_excluded"] == [1, 2, 3]
    assert necessity_probe(zero_bell, samples=5).structurally_excluded == (0,)


def test_probe_refuses_too_many_relabelings():
    # 5 agents with 4 outcomes each: 24**4 label maps
    with pytest.raises(ValueError, match="relabelings"):
        necessity_probe(StateFactory.ghz(5, 4), samples=1, outcomes=4)
    with pytest.raises(ValueError, match="relabelings"):
        best_agreement({(1, 1, 1): 1.0}, 3, 3, limit=10)
    assert best_agreement({(1, 1, 1): 1.0}, 3, 3, limit=36) == 1.0


def test_probe_argument_validation(ghz3):
    with pytest.raises(ValueError, match="outcomes >= 2"):
        necessity_probe(ghz3, samples=0)
