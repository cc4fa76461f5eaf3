from __future__ import annotations

from fractions import Fraction

import pytest

from soundmdp import (Mdp, branch, generate_example_me, make_goals_absorbing,
                      strip_rewards, transition)


def mdp_of(initial: int, *states) -> Mdp:
    """Compact model builder: each state is a list of transitions, each
    transition a list of (probability, reward, target) triples."""
    transitions = tuple(
        tuple(transition([branch(p, r, t) for p, r, t in trans]) for trans in state)
        for state in states
    )
    return Mdp(len(states), initial, transitions)


@pytest.fixture(scope="session")
def me_doc():
    return generate_example_me()


@pytest.fixture(scope="session")
def me_plus(me_doc):
    """Example model with s+ absorbing (probability queries to s+)."""
    return make_goals_absorbing(me_doc.model, [1])


@pytest.fixture(scope="session")
def me0(me_plus):
    """Reward-stripped example model."""
    return strip_rewards(me_plus)


@pytest.fixture(scope="session")
def me_both(me_doc):
    """Example model with both s+ and s- absorbing (reward queries)."""
    return make_goals_absorbing(me_doc.model, [1, 2])


HALF = Fraction(1, 2)
