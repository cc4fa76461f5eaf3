from __future__ import annotations

from fractions import Fraction

import pytest

from soundmdp import (ModelError, branch, exact, make_goals_absorbing, rebase_initial,
                      strip_rewards, transition, validate)
from soundmdp.model import Mdp

from conftest import mdp_of


def test_exact_coercions():
    assert exact("0.1") == Fraction(1, 10)
    assert exact("1/3") == Fraction(1, 3)
    assert exact("1e-3") == Fraction(1, 1000)
    assert exact(0.5) == Fraction(1, 2)
    # Floats coerce to their binary64 value, not the decimal they were typed as.
    assert exact(0.1) != Fraction(1, 10)


def test_validate_example_model_clean(me_doc):
    assert validate(me_doc.model) == []


def test_validate_minimal_self_loop():
    assert validate(mdp_of(0, [[(1, 0, 0)]])) == []


def test_validate_bad_probability_sum():
    m = mdp_of(0, [[("0.5", 0, 0), ("0.4", 0, 0)]])
    problems = validate(m)
    assert len(problems) == 1
    assert problems[0].state == 0 and problems[0].transition == 0
    assert "sum to 0.9" in problems[0].message


def test_validate_reports_each_rule():
    m = mdp_of(0, [[("1.5", 0, 0)]], [[(1, -2, 0)]], [[(1, 0, 9)]], [])
    messages = [v.message for v in validate(m)]
    assert any("outside (0,1]" in msg for msg in messages)
    assert any("reward" in msg for msg in messages)
    assert any("out of range" in msg for msg in messages)
    assert any("no transitions" in msg for msg in messages)


def test_validate_accepts_close_sum():
    # Two decimal halves of 3 thirds: floats sum to 1 within 1e-9.
    m = mdp_of(0, [[("0.333333333", 0, 0), ("0.666666667", 0, 0)]])
    assert validate(m) == []


def test_make_goals_absorbing(me_doc):
    absorbed = make_goals_absorbing(me_doc.model, [1, 2])
    for g in (1, 2):
        (only,) = absorbed.transitions[g]
        (b,) = only.branches
        assert (b.probability, b.reward, b.target) == (1.0, 0.0, g)
        assert b.probability_exact == 1 and b.reward_exact == 0
    assert absorbed.transitions[0] == me_doc.model.transitions[0]


def test_make_goals_absorbing_idempotent(me_doc):
    once = make_goals_absorbing(me_doc.model, [1, 2])
    assert make_goals_absorbing(once, [1, 2]) == once


def test_make_goals_absorbing_replaces_all_transitions():
    m = mdp_of(0, [[(1, 0, 1)]], [[(1, 0, 0)], [("0.5", 1, 0), ("0.5", 0, 1)]])
    absorbed = make_goals_absorbing(m, [1])
    assert len(absorbed.transitions[1]) == 1


def test_make_goals_absorbing_unknown_state(me_doc):
    with pytest.raises(ModelError):
        make_goals_absorbing(me_doc.model, [7])


def test_strip_rewards(me_doc):
    stripped = strip_rewards(me_doc.model)
    a = stripped.transitions[0][0]
    assert [b.reward for b in a.branches] == [0.0, 0.0, 0.0]
    assert all(b.reward_exact == 0 for b in a.branches)
    # Probabilities and structure are untouched.
    assert [b.probability_exact for b in a.branches] == \
        [b.probability_exact for b in me_doc.model.transitions[0][0].branches]
    assert strip_rewards(stripped) == stripped


def test_strip_rewards_single_value():
    m = mdp_of(0, [[(1, "7.5", 0)]])
    assert strip_rewards(m).transitions[0][0].branches[0].reward == 0.0


def test_rebase_initial(me_doc):
    moved = rebase_initial(me_doc.model, 3)
    assert moved.initial == 3
    assert moved.transitions == me_doc.model.transitions
    assert rebase_initial(me_doc.model, me_doc.model.initial) == me_doc.model
    with pytest.raises(ModelError):
        rebase_initial(me_doc.model, 5)


def test_absorb_and_strip_commute(me_doc):
    a = strip_rewards(make_goals_absorbing(me_doc.model, [1, 2]))
    b = make_goals_absorbing(strip_rewards(me_doc.model), [1, 2])
    assert a == b


def test_absorbing_goals_removes_only_goal_violations():
    # State 1 (the goal) and state 2 are both malformed; absorbing the goal
    # must fix exactly the goal's problem and keep the other one.
    bad = Mdp(3, 0, (
        (transition([branch(1, 0, 1)]),),
        (transition([branch("0.3", 0, 1)]),),
        (transition([branch("0.7", 0, 0), branch("0.6", 0, 1)]),),
    ))
    before = {(v.state, v.message) for v in validate(bad)}
    after = {(v.state, v.message) for v in validate(make_goals_absorbing(bad, [1]))}
    assert after == {x for x in before if x[0] != 1}
