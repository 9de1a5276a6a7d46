"""Deterministic finite automata over mission sub-tasks and events.

A task is a machine whose states are sub-tasks and whose inputs are boolean
events observed in the world. The transition table is total and deterministic;
a distinguished ``NO_EVENT`` symbol self-loops at every state so that "nothing
happened" is always a legal input. Accepting states model task completion and
are kept absorbing in every machine we evaluate.

All operations here are pure value manipulation; randomness enters only
through explicit seeds.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidSymbolError, ParseError
from .seeding import rng_for

#: Event symbol meaning "no event observed this step"; self-loops everywhere.
NO_EVENT = "NoEvent"


@dataclass(frozen=True)
class Violation:
    """One validation finding with its (state, event) locus."""

    kind: str
    state: str | None = None
    event: str | None = None
    message: str = ""

    def __str__(self):
        locus = ", ".join(x for x in (self.state, self.event) if x is not None)
        return f"{self.kind}[{locus}]: {self.message}"


@dataclass(frozen=True)
class Dfa:
    """A total, deterministic automaton over sub-task states and events.

    ``transitions`` maps every (state, event) pair to a successor state. Use
    :func:`make_dfa` to build one from a sparse edge list; it fills in the
    self-loop defaults.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: dict[tuple[str, str], str]
    initial: str
    accepting: frozenset[str] = field(default_factory=frozenset)

    @property
    def trigger_events(self) -> tuple[str, ...]:
        """Events that move at least one state (alphabet order), NO_EVENT excluded."""
        moving = {e for (s, e), t in self.transitions.items() if t != s}
        return tuple(e for e in self.alphabet if e in moving)


@dataclass(frozen=True)
class Trace:
    """One random walk: a sequence of (state, event) pairs.

    ``steps[k] = (s_k, e_k)`` with ``s_0`` the machine's initial state and
    ``s_{k+1} = transitions[(s_k, e_k)]``.
    """

    steps: tuple[tuple[str, str], ...]

    def __len__(self):
        return len(self.steps)

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.steps)

    @property
    def events(self) -> tuple[str, ...]:
        return tuple(e for _, e in self.steps)


def make_dfa(states, alphabet, edges, initial, accepting=()) -> Dfa:
    """Build a total DFA from a sparse edge map.

    ``edges`` maps (state, event) to successor for the transitions that move;
    every unspecified pair defaults to a self-loop, and NO_EVENT is forced to
    self-loop at every state. The alphabet is prefixed with NO_EVENT if absent.
    """
    states = tuple(states)
    alphabet = tuple(alphabet)
    if NO_EVENT not in alphabet:
        alphabet = (NO_EVENT,) + alphabet
    if len(set(states)) != len(states):
        raise InvalidArgumentError("duplicate state names")
    if len(set(alphabet)) != len(alphabet):
        raise InvalidArgumentError("duplicate event names")
    known = set(states)
    transitions = {}
    for state in states:
        for event in alphabet:
            transitions[(state, event)] = state
    for (state, event), target in dict(edges).items():
        if state not in known:
            raise InvalidSymbolError(f"unknown state {state!r} in edges")
        if event not in alphabet:
            raise InvalidSymbolError(f"unknown event {event!r} in edges")
        if target not in known:
            raise InvalidSymbolError(f"unknown target state {target!r} in edges")
        if event == NO_EVENT and target != state:
            raise InvalidArgumentError(f"NO_EVENT must self-loop at {state!r}")
        transitions[(state, event)] = target
    if initial not in known:
        raise InvalidSymbolError(f"initial state {initial!r} not in states")
    accepting = frozenset(accepting)
    if not accepting <= known:
        raise InvalidSymbolError(f"accepting states {sorted(accepting - known)} not in states")
    return Dfa(states, alphabet, transitions, initial, accepting)


def step(dfa: Dfa, state: str, event: str) -> str:
    """The stored successor of (state, event). Pure table lookup."""
    try:
        return dfa.transitions[(state, event)]
    except KeyError:
        if state not in set(dfa.states):
            raise InvalidSymbolError(f"unknown state {state!r}") from None
        raise InvalidSymbolError(f"unknown event {event!r}") from None


def is_accepting(dfa: Dfa, state: str) -> bool:
    if state not in set(dfa.states):
        raise InvalidSymbolError(f"unknown state {state!r}")
    return state in dfa.accepting


def validate(dfa: Dfa) -> list[Violation]:
    """Check every machine invariant; findings are data, not exceptions.

    Returns one :class:`Violation` per defect: totality and determinism of the
    table, membership of initial/accepting states, NO_EVENT self-loops, and
    absorption of accepting states.
    """
    out = []
    states = set(dfa.states)
    alphabet = set(dfa.alphabet)
    if NO_EVENT not in alphabet:
        out.append(Violation("missing-no-event", message=f"alphabet lacks {NO_EVENT!r}"))
    if dfa.initial not in states:
        out.append(Violation("initial-unknown", state=dfa.initial,
                             message="initial state not in states"))
    for acc in sorted(dfa.accepting):
        if acc not in states:
            out.append(Violation("accepting-unknown", state=acc,
                                 message="accepting state not in states"))
    for (state, event), target in sorted(dfa.transitions.items()):
        if state not in states or event not in alphabet:
            out.append(Violation("stray-transition", state=state, event=event,
                                 message="transition over unknown state or event"))
        elif target not in states:
            out.append(Violation("target-unknown", state=state, event=event,
                                 message=f"successor {target!r} not in states"))
    for state in dfa.states:
        for event in dfa.alphabet:
            if (state, event) not in dfa.transitions:
                out.append(Violation("not-total", state=state, event=event,
                                     message="no transition defined"))
        if dfa.transitions.get((state, NO_EVENT), state) != state:
            out.append(Violation("no-event-moves", state=state, event=NO_EVENT,
                                 message="NO_EVENT must self-loop"))
    for acc in sorted(dfa.accepting & states):
        for event in dfa.alphabet:
            target = dfa.transitions.get((acc, event), acc)
            if target != acc:
                out.append(Violation("non-absorbing-accepting", state=acc, event=event,
                                     message=f"accepting state leaves to {target!r}"))
    return out


def random_walk(dfa: Dfa, length: int, event_mix: dict[str, float] | None = None,
                rng_seed: int = 0) -> Trace:
    """Walk the machine for ``length`` steps, sampling events from ``event_mix``.

    The mix defaults to uniform over the whole alphabet, so walks contain both
    triggering and irrelevant (self-looping) events. Identical seeds give
    bit-identical traces.
    """
    if length < 1:
        raise InvalidArgumentError(f"walk length must be >= 1, got {length}")
    if event_mix is None:
        event_mix = {e: 1.0 for e in dfa.alphabet}
    unknown = set(event_mix) - set(dfa.alphabet)
    if unknown:
        raise InvalidSymbolError(f"event_mix over unknown events {sorted(unknown)}")
    if event_mix.get(NO_EVENT, 0.0) <= 0.0:
        raise InvalidArgumentError("event_mix must give NO_EVENT nonzero probability")
    _check_mix_can_progress(dfa, event_mix)
    events = [e for e in dfa.alphabet if event_mix.get(e, 0.0) > 0.0]
    probs = np.array([event_mix[e] for e in events], dtype=np.float64)
    probs /= probs.sum()
    rng = rng_for(rng_seed, "walk")
    picks = rng.choice(len(events), size=length, p=probs)
    steps = []
    state = dfa.initial
    for k in range(length):
        event = events[picks[k]]
        steps.append((state, event))
        state = dfa.transitions[(state, event)]
    return Trace(tuple(steps))


def _check_mix_can_progress(dfa, event_mix):
    # Every reachable non-absorbing state needs at least one sampled event
    # that moves it, otherwise walks can stall in a way the caller did not ask for.
    reachable = {dfa.initial}
    frontier = [dfa.initial]
    while frontier:
        state = frontier.pop()
        for event in dfa.alphabet:
            target = dfa.transitions[(state, event)]
            if target not in reachable:
                reachable.add(target)
                frontier.append(target)
    for state in sorted(reachable):
        moves = [e for e in dfa.alphabet if dfa.transitions[(state, e)] != state]
        if not moves:
            continue  # absorbing
        if not any(event_mix.get(e, 0.0) > 0.0 for e in moves):
            raise InvalidArgumentError(
                f"event_mix gives zero probability to every event leaving state {state!r}")


def as_matrix(dfa: Dfa) -> np.ndarray:
    """Dense state-by-event table of successor state indices."""
    sidx = {s: i for i, s in enumerate(dfa.states)}
    mat = np.empty((len(dfa.states), len(dfa.alphabet)), dtype=np.int64)
    for i, state in enumerate(dfa.states):
        for j, event in enumerate(dfa.alphabet):
            mat[i, j] = sidx[dfa.transitions[(state, event)]]
    return mat


def with_alphabet(dfa: Dfa, alphabet) -> Dfa:
    """The same machine over a larger alphabet; new events self-loop everywhere."""
    alphabet = tuple(alphabet)
    missing = set(dfa.alphabet) - set(alphabet)
    if missing:
        raise InvalidArgumentError(f"new alphabet drops events {sorted(missing)}")
    edges = {k: v for k, v in dfa.transitions.items() if v != k[0]}
    return make_dfa(dfa.states, alphabet, edges, dfa.initial, dfa.accepting)


# --- structured-text serialization -----------------------------------------
#
# Line-oriented document: names may contain spaces, one per line, and the
# transition table is written densely as state-index rows over event columns.

_DOC_HEADER = "dfa/v1"


def to_text(dfa: Dfa) -> str:
    sidx = {s: i for i, s in enumerate(dfa.states)}
    lines = [_DOC_HEADER]
    lines.append(f"states {len(dfa.states)}")
    lines.extend(dfa.states)
    lines.append(f"alphabet {len(dfa.alphabet)}")
    lines.extend(dfa.alphabet)
    lines.append(f"initial {sidx[dfa.initial]}")
    acc = sorted(sidx[s] for s in dfa.accepting)
    lines.append("accepting " + " ".join(str(i) for i in acc))
    lines.append("transitions")
    mat = as_matrix(dfa)
    for row in mat:
        lines.append(" ".join(str(int(x)) for x in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Dfa:
    lines = text.splitlines()
    pos = 0

    def take(what):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"unexpected end of document, expected {what}", line=pos + 1)
        line = lines[pos]
        pos += 1
        return line

    header = take("header")
    if header != _DOC_HEADER:
        raise ParseError(f"unsupported document header {header!r}", line=1)

    def take_counted(name):
        decl = take(f"{name} count")
        parts = decl.split()
        if len(parts) != 2 or parts[0] != name or not parts[1].isdigit():
            raise ParseError(f"expected {name!r} count line, got {decl!r}", line=pos)
        return [take(f"{name} entry") for _ in range(int(parts[1]))]

    states = take_counted("states")
    alphabet = take_counted("alphabet")
    init_line = take("initial").split()
    if len(init_line) != 2 or init_line[0] != "initial":
        raise ParseError("expected initial line", line=pos)
    acc_line = take("accepting").split()
    if not acc_line or acc_line[0] != "accepting":
        raise ParseError("expected accepting line", line=pos)
    if take("transitions") != "transitions":
        raise ParseError("expected transitions line", line=pos)
    try:
        initial = states[int(init_line[1])]
        accepting = frozenset(states[int(i)] for i in acc_line[1:])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad state index: {exc}", section="initial/accepting") from exc
    transitions = {}
    for state in states:
        row = take("transition row").split()
        if len(row) != len(alphabet):
            raise ParseError(f"transition row for {state!r} has {len(row)} entries, "
                             f"expected {len(alphabet)}", section="transitions", line=pos)
        for event, cell in zip(alphabet, row):
            try:
                transitions[(state, event)] = states[int(cell)]
            except (ValueError, IndexError) as exc:
                raise ParseError(f"bad successor index {cell!r}",
                                 section="transitions", line=pos) from exc
    if pos != len(lines) and any(l.strip() for l in lines[pos:]):
        raise ParseError("trailing content after transition table", line=pos + 1)
    dfa = Dfa(tuple(states), tuple(alphabet), transitions, initial, accepting)
    problems = validate(dfa)
    if problems:
        raise ParseError(f"document encodes an invalid machine: {problems[0]}")
    return dfa
