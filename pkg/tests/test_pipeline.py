from __future__ import annotations

import math
from fractions import Fraction

import pytest

from soundmdp import (PipelineError, SolveOptions, SolveTimeout, generate_random,
                      generate_slow_chain, make_property, rebase_initial, solve,
                      solve_document)


def test_pipeline_pmax_golden_run(me_doc):
    prop = make_property("pmax", [1], 0.05, "absolute")
    res = solve(me_doc.model, prop, SolveOptions(method="ovi", error_mode="absolute"))
    out = res.outcome
    assert out.value == pytest.approx(0.49902848, abs=1e-12)
    assert out.iterations == 10
    assert out.verification_phases == 2
    assert out.certified
    assert "prob0(1 states)" in res.applied


def test_pipeline_min_reward_trap_documented(me_doc):
    prop = make_property("emin", [1, 2])
    res = solve(me_doc.model, prop, SolveOptions(method="vi", ec_elim="off"))
    assert res.outcome.value == 0.0
    assert not res.outcome.certified
    assert any("end components" in w for w in res.warnings)
    assert res.outcome.iterations == 1  # the spurious fixed point is hit immediately


def test_pipeline_min_reward_with_elimination(me_doc):
    prop = make_property("emin", [1, 2], 1e-6)
    res = solve(me_doc.model, prop, SolveOptions(method="ovi"))
    out = res.outcome
    assert out.certified
    assert abs(out.value - 0.6) <= 1e-6 * 0.6
    assert any(step.startswith("ec-elimination") for step in res.applied)
    res_ii = solve(me_doc.model, prop, SolveOptions(method="ii"))
    assert abs(res_ii.outcome.value - 0.6) <= 1e-6 * 0.6


def test_pipeline_requirement_rejections(me_doc):
    prop = make_property("pmax", [1])
    with pytest.raises(PipelineError, match="unique fixed point"):
        solve(me_doc.model, prop, SolveOptions(method="ii", precomp="none"))
    with pytest.raises(PipelineError, match="elimination for pmax"):
        solve(me_doc.model, prop, SolveOptions(method="ii", ec_elim="off"))
    with pytest.raises(PipelineError, match="elimination for emin"):
        solve(me_doc.model, make_property("emin", [1, 2]),
              SolveOptions(method="ii", ec_elim="off"))


def test_pipeline_infinite_reward_initial_state(me_doc):
    # The adversary can avoid {s+, s-} forever, so the max expected reward
    # from s0 is infinite and no iteration happens.
    res = solve(me_doc.model, make_property("emax", [1, 2]), SolveOptions(method="ovi"))
    assert res.outcome.value == math.inf
    assert res.outcome.certified
    assert res.outcome.iterations == 0


def test_pipeline_early_exit_goal_initial(me_doc):
    model = rebase_initial(me_doc.model, 1)
    assert solve(model, make_property("pmax", [1])).outcome.value == 1.0
    assert solve(model, make_property("emax", [1])).outcome.value == 0.0


def test_pipeline_early_exit_probability_zero(me_doc):
    model = rebase_initial(me_doc.model, 2)
    res = solve(model, make_property("pmax", [1]))
    assert res.outcome.value == 0.0 and res.outcome.certified
    assert res.outcome.iterations == 0


def test_pipeline_pmin_trap_value(me_doc):
    res = solve(me_doc.model, make_property("pmin", [1]))
    assert res.outcome.value == 0.0 and res.outcome.certified


def test_pipeline_precomp_all_fixes_sure_states():
    doc = generate_random(11, 6, 2, 2, Fraction(2), 1, min_reward=Fraction(1, 4))
    prop = make_property("pmax", sorted(doc.declared_goals))
    res = solve(doc.model, prop, SolveOptions(method="ovi", precomp="all"))
    assert res.outcome.value == 1.0 and res.outcome.iterations == 0  # prob1 covers s0


def test_pipeline_orders_agree(me_doc):
    prop = make_property("pmax", [1], 1e-6)
    base = solve(me_doc.model, prop, SolveOptions(method="ovi"))
    for order in ("reverse", "random:7"):
        res = solve(me_doc.model, prop, SolveOptions(method="ovi", order=order))
        assert res.outcome.certified
        assert abs(res.outcome.value - base.outcome.value) <= 2e-6


def test_pipeline_random_order_env_override(me_doc, monkeypatch):
    prop = make_property("pmax", [1], 1e-6)
    a = solve(me_doc.model, prop, SolveOptions(method="ovi", order="random:1"))
    monkeypatch.setenv("SOUNDMDP_SEED", "99")
    b = solve(me_doc.model, prop, SolveOptions(method="ovi", order="random:1"))
    c = solve(me_doc.model, prop, SolveOptions(method="ovi", order="random:99"))
    monkeypatch.delenv("SOUNDMDP_SEED")
    assert b.outcome.iterations == c.outcome.iterations
    assert abs(b.outcome.value - a.outcome.value) <= 2e-6


def test_pipeline_oracle_method(me_doc):
    res = solve(me_doc.model, make_property("emin", [1, 2]), SolveOptions(method="oracle"))
    assert res.exact_value == Fraction(3, 5)
    assert res.outcome.value == 0.6
    assert res.outcome.certified and res.outcome.method == "oracle"


def test_pipeline_force_elimination_warns_for_pmin(me_doc):
    res = solve(me_doc.model, make_property("pmin", [1]),
                SolveOptions(method="ovi", ec_elim="force"))
    assert any("not guaranteed to preserve" in w for w in res.warnings)
    assert not res.outcome.certified


def test_pipeline_timeout():
    doc = generate_slow_chain(12, Fraction(1, 2))
    with pytest.raises(SolveTimeout):
        solve(doc.model, make_property("emax", [12]),
              SolveOptions(method="vi", timeout=1e-4))


def test_solve_document_wrapper(me_doc):
    res = solve_document(me_doc, make_property("pmax", [1], 0.05, "absolute"),
                         SolveOptions(method="ovi", error_mode="absolute"))
    assert res.outcome.iterations == 10


def test_pipeline_epsilon_vi_is_configurable(me_doc):
    # A finer first iteration phase reaches a better lower value before the
    # first guess, changing the sweep pattern but not the certified answer.
    prop = make_property("pmax", [1], 0.05, "absolute")
    default = solve(me_doc.model, prop, SolveOptions(method="ovi", error_mode="absolute"))
    finer = solve(me_doc.model, prop, SolveOptions(method="ovi", error_mode="absolute",
                                                   epsilon_vi=0.001))
    assert finer.outcome.iterations != default.outcome.iterations
    assert finer.outcome.certified
    assert abs(finer.outcome.value - 0.5) <= 0.05
