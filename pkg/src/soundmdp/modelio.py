"""MDPX v1 text format plus the bundled model generators.

The format is line oriented; `#` starts a comment, tokens are whitespace
separated.  Numbers are decimals ("0.25", "1e-3") or fractions ("1/3"), both
parsed exactly before rounding to binary64.  State and target references may
be ids or labels; labels resolve after the whole file is read, so forward
references are fine.

    mdpx 1
    states 5
    initial s0
    state 0 s0
      transition a
        branch 0.1 1 s-
        branch 0.1 0 s+
        branch 0.8 1 s0
      transition b
        branch 1 0 s1
    ...
    goal s+ s-
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import GeneratorError, ParseError
from .model import (Branch, Mdp, Number, Transition, branch, exact, transition,
                    validate)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelDocument:
    """A parsed model together with its label table and optional goal declaration."""

    model: Mdp
    named_states: dict[str, int] = field(default_factory=dict)
    declared_goals: frozenset[int] | None = None
    format_version: int = FORMAT_VERSION

    def label_of(self, state: int) -> str | None:
        for name, sid in self.named_states.items():
            if sid == state:
                return name
        return None

    def resolve_state(self, token: str) -> int:
        """Map an id or label to a state id."""
        if token in self.named_states:
            return self.named_states[token]
        try:
            sid = int(token)
        except ValueError:
            raise ParseError(f"unknown state label {token!r}") from None
        if not (0 <= sid < self.model.num_states):
            raise ParseError(f"state id {sid} out of range")
        return sid


def _is_int(token: str) -> bool:
    try:
        int(token)
        return True
    except ValueError:
        return False


def _parse_number(token: str, line: int, column: int) -> Fraction:
    try:
        return exact(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"malformed number {token!r}", line, column) from None


@dataclass
class _RawBranch:
    probability: Fraction
    reward: Fraction
    target: str
    line: int
    column: int


def parse_explicit(text: str) -> ModelDocument:
    """Parse an MDPX document; raises ParseError with line/column on bad input."""
    # First pass: tokenize into (line_no, [(col, token), ...]).
    lines: list[tuple[int, list[tuple[int, str]]]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        toks: list[tuple[int, str]] = []
        col = 0
        for part in body.split():
            col = body.index(part, col)
            toks.append((col + 1, part))
            col += len(part)
        if toks:
            lines.append((ln, toks))
    if not lines:
        raise ParseError("empty input: missing 'mdpx 1' header", 1, 1)

    ln, toks = lines[0]
    words = [t for _, t in toks]
    if words[0] != "mdpx":
        raise ParseError(f"expected 'mdpx 1' header, found {words[0]!r}", ln, toks[0][0])
    if len(words) != 2 or not _is_int(words[1]):
        raise ParseError("malformed header, expected 'mdpx 1'", ln, toks[0][0])
    if int(words[1]) != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {words[1]}", ln, toks[1][0])

    num_states: int | None = None
    initial_token: tuple[str, int, int] | None = None
    goal_tokens: list[tuple[str, int, int]] = []
    labels: dict[str, int] = {}
    state_transitions: list[list[tuple[str | None, list[_RawBranch]]]] = []
    in_state = False

    def current_transitions() -> list[tuple[str | None, list[_RawBranch]]]:
        return state_transitions[-1]

    for ln, toks in lines[1:]:
        col0, keyword = toks[0]
        args = toks[1:]
        if keyword == "states":
            if num_states is not None:
                raise ParseError("duplicate 'states' line", ln, col0)
            if len(args) != 1 or not _is_int(args[0][1]) or int(args[0][1]) <= 0:
                raise ParseError("'states' expects one positive integer", ln, col0)
            num_states = int(args[0][1])
        elif keyword == "initial":
            if initial_token is not None:
                raise ParseError("duplicate 'initial' line", ln, col0)
            if len(args) != 1:
                raise ParseError("'initial' expects one id or label", ln, col0)
            initial_token = (args[0][1], ln, args[0][0])
        elif keyword == "state":
            if num_states is None:
                raise ParseError("'state' before 'states' count", ln, col0)
            if not args or not _is_int(args[0][1]):
                raise ParseError("'state' expects an integer id", ln, col0)
            sid = int(args[0][1])
            if sid != len(state_transitions):
                raise ParseError(
                    f"state ids must appear in declaration order; expected {len(state_transitions)}, found {sid}",
                    ln, args[0][0])
            if sid >= num_states:
                raise ParseError(f"state id {sid} exceeds declared count {num_states}", ln, args[0][0])
            if len(args) > 2:
                raise ParseError("too many tokens on 'state' line", ln, col0)
            if len(args) == 2:
                label = args[1][1]
                if _is_int(label):
                    raise ParseError(f"state label {label!r} must not be an integer", ln, args[1][0])
                if label in labels:
                    raise ParseError(f"duplicate state label {label!r}", ln, args[1][0])
                labels[label] = sid
            state_transitions.append([])
            in_state = True
        elif keyword == "transition":
            if not in_state:
                raise ParseError("'transition' outside a state block", ln, col0)
            if len(args) > 1:
                raise ParseError("too many tokens on 'transition' line", ln, col0)
            label = args[0][1] if args else None
            current_transitions().append((label, []))
        elif keyword == "branch":
            if not in_state or not current_transitions():
                raise ParseError("'branch' outside a transition block", ln, col0)
            if len(args) != 3:
                raise ParseError("'branch' expects <probability> <reward> <target>", ln, col0)
            (pc, pt), (rc, rt), (tc, tt) = args
            current_transitions()[-1][1].append(
                _RawBranch(_parse_number(pt, ln, pc), _parse_number(rt, ln, rc), tt, ln, tc))
        elif keyword == "goal":
            if not args:
                raise ParseError("'goal' expects at least one id or label", ln, col0)
            goal_tokens.extend((t, ln, c) for c, t in args)
        else:
            raise ParseError(f"unknown keyword {keyword!r}", ln, col0)

    if num_states is None:
        raise ParseError("missing 'states' line")
    if len(state_transitions) != num_states:
        raise ParseError(f"declared {num_states} states but found {len(state_transitions)} state blocks")
    if initial_token is None:
        raise ParseError("missing 'initial' line")

    def resolve(token: str, ln: int, col: int) -> int:
        if token in labels:
            return labels[token]
        if _is_int(token):
            sid = int(token)
            if 0 <= sid < num_states:
                return sid
            raise ParseError(f"state id {sid} out of range", ln, col)
        raise ParseError(f"dangling target: unknown state label {token!r}", ln, col)

    transitions: list[tuple[Transition, ...]] = []
    for raw in state_transitions:
        ts = []
        for label, raw_branches in raw:
            ts.append(Transition(
                tuple(Branch(float(rb.probability), float(rb.reward),
                             resolve(rb.target, rb.line, rb.column),
                             rb.probability, rb.reward)
                      for rb in raw_branches),
                label))
        transitions.append(tuple(ts))

    model = Mdp(num_states, resolve(*initial_token), tuple(transitions))
    problems = validate(model)
    if problems:
        raise ParseError("invalid model: " + "; ".join(str(v) for v in problems[:5]))
    goals = frozenset(resolve(t, ln, c) for t, ln, c in goal_tokens) if goal_tokens else None
    return ModelDocument(model, labels, goals)


def _format_number(value: Fraction, as_float: float) -> str:
    """Render a number losslessly when short, otherwise faithful to its binary64 value."""
    if value == Fraction(as_float):
        return f"{as_float:.17g}"
    num, den = value.numerator, value.denominator
    # Denominators of the form 2^a * 5^b have a finite decimal expansion.
    d, twos, fives = den, 0, 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:
        k = max(twos, fives)
        digits = num * 10 ** k // den
        text = str(digits).rstrip("0")
        if len(text.lstrip("-")) <= 17:
            sign = "-" if digits < 0 else ""
            body = str(abs(digits)).rjust(k + 1, "0")
            return (sign + body[:-k] + "." + body[-k:]).rstrip("0").rstrip(".") if k else sign + body
    return f"{num}/{den}"


def write_explicit(doc: ModelDocument) -> str:
    """Serialize a document so that parse_explicit(write_explicit(doc)) is structurally equal."""
    model = doc.model
    name_of = {sid: name for name, sid in doc.named_states.items()}

    def ref(sid: int) -> str:
        return name_of.get(sid, str(sid))

    out = [f"mdpx {doc.format_version}", f"states {model.num_states}", f"initial {ref(model.initial)}"]
    for s in model.states:
        head = f"state {s}"
        if s in name_of:
            head += f" {name_of[s]}"
        out.append(head)
        for t in model.transitions[s]:
            out.append("  transition" + (f" {t.label}" if t.label else ""))
            for b in t.branches:
                out.append("    branch "
                           f"{_format_number(b.probability_exact, b.probability)} "
                           f"{_format_number(b.reward_exact, b.reward)} {ref(b.target)}")
    if doc.declared_goals:
        out.append("goal " + " ".join(ref(g) for g in sorted(doc.declared_goals)))
    return "\n".join(out) + "\n"


def generate_example_me() -> ModelDocument:
    """The five-state example model used throughout the tests.

    s0 chooses between a risky loop (transition a) and a detour into the
    zero-reward s1/s2 cycle (transition b); s2 can exit via transition c.
    s+ and s- are absorbing.
    """
    h = Fraction(1, 10)
    s0, sp, sm, s1, s2 = range(5)
    transitions = (
        (transition([branch(h, 1, sm), branch(h, 0, sp), branch(Fraction(8, 10), 1, s0)], "a"),
         transition([branch(1, 0, s1)], "b")),
        (transition([branch(1, 0, sp)]),),
        (transition([branch(1, 0, sm)]),),
        (transition([branch(1, 0, s2)]),),
        (transition([branch(1, 0, s1)]),
         transition([branch(Fraction(6, 10), 1, sm), branch(Fraction(4, 10), 0, sp)], "c")),
    )
    model = Mdp(5, s0, transitions)
    return ModelDocument(model, {"s0": s0, "s+": sp, "s-": sm, "s1": s1, "s2": s2})


def _labelled(model: Mdp, goals: Iterable[int]) -> ModelDocument:
    return ModelDocument(model, {f"s{s}": s for s in model.states}, frozenset(goals))


def generate_random(seed: int, n_states: int, max_transitions: int, max_branches: int,
                    reward_max: Number, goal_count: int, *,
                    allow_end_components: bool = False,
                    min_reward: Number = 0) -> ModelDocument:
    """Deterministic random model; goals are absorbing and state 0 is initial.

    By default the output contains no end components beyond absorbing
    self-loops, even on the reward-stripped model, so random differential
    tests run in the unique-fixed-point regime.  With allow_end_components a
    zero-reward two-state cycle is injected instead.
    """
    if n_states < 2 or goal_count < 1 or goal_count > n_states - 1:
        raise GeneratorError("inconsistent bounds: need n_states >= 2 and 1 <= goal_count <= n_states-1")
    if max_transitions < 1 or max_branches < 1:
        raise GeneratorError("inconsistent bounds: need at least one transition and branch")
    r_max = exact(reward_max)
    r_min = exact(min_reward)
    if r_max < 0 or r_min < 0 or r_min > r_max:
        raise GeneratorError("inconsistent bounds: need 0 <= min_reward <= reward_max")

    rng = random.Random(seed)
    for _ in range(1000):
        doc = _random_attempt(rng, n_states, max_transitions, max_branches,
                              r_max, r_min, goal_count, allow_end_components)
        if allow_end_components or _only_absorbing_components(doc.model):
            assert not validate(doc.model)
            return doc
    raise GeneratorError("could not generate an end-component-free model with these bounds")


def _random_attempt(rng: random.Random, n_states: int, max_transitions: int,
                    max_branches: int, r_max: Fraction, r_min: Fraction,
                    goal_count: int, allow_ec: bool) -> ModelDocument:
    goals = sorted(rng.sample(range(1, n_states), goal_count))
    goal_set = set(goals)
    transitions: list[tuple[Transition, ...]] = []
    for s in range(n_states):
        if s in goal_set:
            transitions.append((transition([branch(1, 0, s)]),))
            continue
        ts = []
        for _ in range(rng.randint(1, max_transitions)):
            targets = rng.sample(range(n_states), rng.randint(1, min(max_branches, n_states)))
            weights = [rng.randint(1, 9) for _ in targets]
            total = sum(weights)
            branches = []
            for w, tgt in zip(weights, targets):
                if r_max > 0:
                    reward = r_min + (r_max - r_min) * Fraction(rng.randint(0, 8), 8)
                else:
                    reward = Fraction(0)
                branches.append(branch(Fraction(w, total), reward, tgt))
            ts.append(transition(branches))
        transitions.append(tuple(ts))
    model = Mdp(n_states, 0, tuple(transitions))
    if allow_ec and n_states - goal_count >= 2:
        a, b = rng.sample([s for s in range(n_states) if s not in goal_set], 2)
        new = list(model.transitions)
        new[a] = new[a] + (transition([branch(1, 0, b)]),)
        new[b] = new[b] + (transition([branch(1, 0, a)]),)
        model = Mdp(n_states, 0, tuple(new))
    return _labelled(model, goals)


def _only_absorbing_components(model: Mdp) -> bool:
    """True when every end component of the reward-stripped model is a fully
    absorbing single state (all of whose transitions are kept self-loops)."""
    from .graph import mec_decomposition
    from .model import strip_rewards

    for mec in mec_decomposition(strip_rewards(model)):
        if len(mec.states) > 1:
            return False
        (s,) = mec.states
        if len(mec.kept_transitions[s]) != len(model.transitions[s]):
            return False
    return True


def generate_slow_chain(n: int, p: Number) -> ModelDocument:
    """A restarting chain whose value iteration converges slowly.

    States s0..sn: s0 enters the chain surely, each interior si advances to
    s(i+1) with probability p and falls back to s0 otherwise, and sn is the
    absorbing goal.  Every non-loop branch carries reward 1, so the expected
    accumulated reward counts steps until the goal; smaller p and larger n
    stretch the geometric tail that defeats the usual convergence criterion.
    """
    if n < 2:
        raise GeneratorError("slow chain needs n >= 2")
    pf = exact(p)
    if not (0 < pf < 1):
        raise GeneratorError("slow chain needs 0 < p < 1")
    transitions: list[tuple[Transition, ...]] = [(transition([branch(1, 1, 1)]),)]
    for i in range(1, n):
        transitions.append((transition([branch(pf, 1, i + 1), branch(1 - pf, 1, 0)]),))
    transitions.append((transition([branch(1, 0, n)]),))
    model = Mdp(n + 1, 0, tuple(transitions))
    return _labelled(model, [n])
