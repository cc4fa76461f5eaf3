"""Exact reference solver: enumerate memoryless deterministic schedulers and
solve each induced chain's linear system in rational arithmetic.

Intended for small instances only; the scheduler count is guarded.  Values
come out as Fractions (math.inf marks infinite expected rewards), computed
from the branches' exact probability and reward fields, so models written
with decimal or fractional constants are solved without rounding.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

from .errors import OracleError
from .model import Mdp, Property, PropertyKind

SCHEDULER_GUARD = 1_000_000

Value = Fraction | float  # Fraction, or math.inf


def solve_linear(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over the rationals; raises on a singular matrix."""
    n = len(a)
    rows = list(range(n))
    for col in range(n):
        pivot = next((k for k in range(col, n) if a[rows[k]][col] != 0), None)
        if pivot is None:
            raise OracleError("singular linear system; this points at a "
                              "qualitative classification bug")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        prow = rows[col]
        for k in range(n):
            row = rows[k]
            if row == prow or a[row][col] == 0:
                continue
            f = a[row][col] / a[prow][col]
            b[row] -= f * b[prow]
            for c in range(col, n):
                a[row][c] -= f * a[prow][c]
    return [b[rows[c]] / a[rows[c]][c] for c in range(n)]


def _chain_successors(model: Mdp, choice: Sequence[int]) -> list[list[int]]:
    return [[b.target for b in model.transitions[s][choice[s]].branches] for s in model.states]


def _reaches(succ: list[list[int]], targets: set[int]) -> set[int]:
    """States with a path into `targets` in the induced chain's graph."""
    pred: list[set[int]] = [set() for _ in succ]
    for s, outs in enumerate(succ):
        for t in outs:
            pred[t].add(s)
    reached = set(targets)
    stack = list(targets)
    while stack:
        t = stack.pop()
        for s in pred[t]:
            if s not in reached:
                reached.add(s)
                stack.append(s)
    return reached


def _chain_probabilities(model: Mdp, choice: Sequence[int], goals: set[int]) -> list[Fraction]:
    succ = _chain_successors(model, choice)
    can_reach = _reaches(succ, goals)
    unknown = sorted(can_reach - goals)
    index = {s: i for i, s in enumerate(unknown)}
    n = len(unknown)
    a = [[Fraction(0)] * n for _ in range(n)]
    b = [Fraction(0)] * n
    for s in unknown:
        i = index[s]
        a[i][i] += 1
        for br in model.transitions[s][choice[s]].branches:
            if br.target in goals:
                b[i] += br.probability_exact
            elif br.target in index:
                a[i][index[br.target]] -= br.probability_exact
    x = solve_linear(a, b) if n else []
    out = [Fraction(0)] * model.num_states
    for g in goals:
        out[g] = Fraction(1)
    for s, i in index.items():
        out[s] = x[i]
    return out


def _chain_rewards(model: Mdp, choice: Sequence[int], goals: set[int]) -> list[Value]:
    succ = _chain_successors(model, choice)
    can_reach = _reaches(succ, goals)
    no_goal = set(model.states) - can_reach
    # Reaching a state that cannot reach the goals means the goal set may be
    # missed entirely, which costs infinite reward by convention.
    divergent = (_reaches(succ, no_goal) if no_goal else set()) - goals
    unknown = sorted(s for s in model.states if s not in goals and s not in divergent)
    index = {s: i for i, s in enumerate(unknown)}
    n = len(unknown)
    a = [[Fraction(0)] * n for _ in range(n)]
    b = [Fraction(0)] * n
    for s in unknown:
        i = index[s]
        a[i][i] += 1
        for br in model.transitions[s][choice[s]].branches:
            b[i] += br.probability_exact * br.reward_exact
            if br.target in index:
                a[i][index[br.target]] -= br.probability_exact
            elif br.target not in goals:
                raise OracleError("finite-reward state feeds an infinite-reward state")
    x = solve_linear(a, b) if n else []
    out: list[Value] = [Fraction(0)] * model.num_states
    for s in divergent:
        out[s] = math.inf
    for s, i in index.items():
        out[s] = x[i]
    return out


def scheduler_count(model: Mdp) -> int:
    count = 1
    for ts in model.transitions:
        count *= len(ts)
        if count > SCHEDULER_GUARD:
            return count
    return count


def oracle_values(model: Mdp, prop: Property) -> list[Value]:
    """Per-state optimal values, exact: the pointwise opt over all memoryless
    deterministic schedulers of the induced chain's solution."""
    if scheduler_count(model) > SCHEDULER_GUARD:
        raise OracleError(f"scheduler count exceeds the guard of {SCHEDULER_GUARD}")
    goals = set(prop.goals)
    for g in goals:
        if not (0 <= g < model.num_states):
            raise OracleError(f"goal state {g} out of range")
    maximize = prop.kind in (PropertyKind.PMAX, PropertyKind.EMAX)
    probability = prop.kind.is_probability
    best: list[Value] | None = None
    for choice in itertools.product(*[range(len(ts)) for ts in model.transitions]):
        vals = (_chain_probabilities(model, choice, goals) if probability
                else _chain_rewards(model, choice, goals))
        if best is None:
            best = list(vals)
        elif maximize:
            best = [max(x, y) for x, y in zip(best, vals)]
        else:
            best = [min(x, y) for x, y in zip(best, vals)]
    assert best is not None
    return best


def oracle_exact(model: Mdp, prop: Property) -> Value:
    """Exact optimal value at the initial state."""
    return oracle_values(model, prop)[model.initial]
