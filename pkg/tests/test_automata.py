from collections import Counter
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taskmesh import automata
from taskmesh.automata import NO_EVENT, Dfa, make_dfa
from taskmesh.errors import InvalidArgumentError, InvalidSymbolError, ParseError

FIND, SWITCH, GOAL = "Find blue flag", "Navigate to switch", "Navigate to Goal"


@pytest.fixture()
def t2():
    # blue retrieve chain with foreign events in the alphabet
    return make_dfa(
        states=[FIND, SWITCH, GOAL],
        alphabet=["Blue", "Switch", "FlagLost", "Red", "FoundBase"],
        edges={(FIND, "Blue"): SWITCH,
               (SWITCH, "Switch"): GOAL,
               (SWITCH, "FlagLost"): FIND},
        initial=FIND,
        accepting=[GOAL],
    )


class TestStep:
    def test_trigger_transition(self, t2):
        assert automata.step(t2, FIND, "Blue") == SWITCH

    def test_foreign_event_self_loops(self, t2):
        assert automata.step(t2, FIND, "Red") == FIND

    def test_no_event_self_loops_everywhere(self, t2):
        for state in t2.states:
            assert automata.step(t2, state, NO_EVENT) == state

    def test_unknown_state_raises(self, t2):
        with pytest.raises(InvalidSymbolError):
            automata.step(t2, "not a state", "Blue")

    def test_unknown_event_raises(self, t2):
        with pytest.raises(InvalidSymbolError):
            automata.step(t2, FIND, "not an event")


class TestAccepting:
    def test_goal_accepting(self, t2):
        assert automata.is_accepting(t2, GOAL)

    def test_initial_not_accepting(self, t2):
        assert not automata.is_accepting(t2, FIND)

    def test_degenerate_single_state(self):
        dfa = make_dfa(["only"], [], {}, "only", ["only"])
        assert automata.is_accepting(dfa, "only")

    def test_unknown_state_raises(self, t2):
        with pytest.raises(InvalidSymbolError):
            automata.is_accepting(t2, "nope")


class TestValidate:
    def test_well_formed_is_clean(self, t2):
        assert automata.validate(t2) == []

    def test_missing_row_reports_totality(self, t2):
        broken = dict(t2.transitions)
        del broken[(FIND, "Red")]
        dfa = Dfa(t2.states, t2.alphabet, broken, t2.initial, t2.accepting)
        problems = automata.validate(dfa)
        assert any(v.kind == "not-total" and v.state == FIND and v.event == "Red"
                   for v in problems)

    def test_non_absorbing_accepting_reported(self, t2):
        # mutate one transition of a valid machine; oracle is the table itself
        mutated = dict(t2.transitions)
        mutated[(GOAL, "Blue")] = FIND
        dfa = Dfa(t2.states, t2.alphabet, mutated, t2.initial, t2.accepting)
        assert mutated[(GOAL, "Blue")] != GOAL  # direct table inspection
        problems = automata.validate(dfa)
        assert any(v.kind == "non-absorbing-accepting" and v.state == GOAL
                   and v.event == "Blue" for v in problems)

    def test_no_event_motion_reported(self, t2):
        mutated = dict(t2.transitions)
        mutated[(FIND, NO_EVENT)] = SWITCH
        dfa = Dfa(t2.states, t2.alphabet, mutated, t2.initial, t2.accepting)
        assert any(v.kind == "no-event-moves"
                   for v in automata.validate(dfa))


class TestRandomWalk:
    def test_starts_at_initial(self, t2):
        trace = automata.random_walk(t2, 5, rng_seed=11)
        assert trace.steps[0][0] == t2.initial

    def test_invariant_consecutive_steps(self, t2):
        trace = automata.random_walk(t2, 50, rng_seed=11)
        state = t2.initial
        for s, e in trace.steps:
            assert s == state
            state = t2.transitions[(state, e)]

    def test_deterministic_under_seed(self, t2):
        a = automata.random_walk(t2, 30, rng_seed=4)
        b = automata.random_walk(t2, 30, rng_seed=4)
        assert a == b

    def test_forced_mix_reaches_absorbing_goal(self, t2):
        mix = {NO_EVENT: 0.1, "Blue": 0.45, "Switch": 0.45}
        trace = automata.random_walk(t2, 20, event_mix=mix, rng_seed=2)
        assert trace.steps[-1][0] == GOAL
        # absorption: once in the accepting state, the walk never leaves
        entered = trace.states.index(GOAL)
        assert all(s == GOAL for s in trace.states[entered:])

    def test_length_validation(self, t2):
        with pytest.raises(InvalidArgumentError):
            automata.random_walk(t2, 0)

    def test_mix_must_include_no_event(self, t2):
        with pytest.raises(InvalidArgumentError):
            automata.random_walk(t2, 5, event_mix={"Blue": 1.0})

    def test_event_frequencies_match_mix(self, t2):
        # independent counting: tally events across many walks and compare
        # empirical frequencies against the sampling distribution
        mix = {NO_EVENT: 0.4, "Blue": 0.3, "Switch": 0.2, "Red": 0.1}
        counts = Counter()
        n_walks, k = 10_000, 5
        for i in range(n_walks):
            trace = automata.random_walk(t2, k, event_mix=mix, rng_seed=i)
            counts.update(trace.events)
        total = n_walks * k
        for event, p in mix.items():
            assert abs(counts[event] / total - p) < 0.02


class TestOracleEquivalence:
    def test_step_chains_reproduce_table_closure(self, suite):
        # brute-force reachability oracle: breadth-first over (state, depth)
        # through `step` must reproduce the table's own closure
        for task in suite:
            dfa = task.dfa
            via_step = {(dfa.initial, 0)}
            frontier = {dfa.initial}
            for depth in range(1, 7):
                frontier = {automata.step(dfa, s, e)
                            for s in frontier for e in dfa.alphabet}
                via_step |= {(s, depth) for s in frontier}
            via_table = {(dfa.initial, 0)}
            front2 = {dfa.initial}
            for depth in range(1, 7):
                front2 = {dfa.transitions[(s, e)]
                          for s in front2 for e in dfa.alphabet}
                via_table |= {(s, depth) for s in front2}
            assert via_step == via_table

    def test_literal_enumeration_depth_three(self, suite):
        # every sequence of length <= 3 over the full alphabet, literally
        task = suite[2]
        dfa = task.dfa
        for length in range(4):
            for seq in product(dfa.alphabet, repeat=length):
                state = dfa.initial
                for event in seq:
                    state = automata.step(dfa, state, event)
                check = dfa.initial
                for event in seq:
                    check = dfa.transitions[(check, event)]
                assert state == check

    def test_rejection_of_foreign_events(self, suite):
        for task in suite:
            dfa = task.dfa
            triggering = {(s, e) for (s, e), t in dfa.transitions.items()
                          if t != s}
            for state in dfa.states:
                for event in dfa.alphabet:
                    if (state, event) not in triggering:
                        assert automata.step(dfa, state, event) == state


class TestConstruction:
    def test_self_loop_defaulting_makes_total(self):
        dfa = make_dfa(["a", "b"], ["go"], {("a", "go"): "b"}, "a", ["b"])
        assert automata.validate(dfa) == []
        assert set(dfa.transitions) == {(s, e) for s in ("a", "b")
                                        for e in (NO_EVENT, "go")}

    def test_with_alphabet_extends_with_self_loops(self, t2):
        bigger = automata.with_alphabet(t2, t2.alphabet + ("Green",))
        assert automata.validate(bigger) == []
        for state in bigger.states:
            assert bigger.transitions[(state, "Green")] == state
        for key, target in t2.transitions.items():
            assert bigger.transitions[key] == target

    @given(n_states=st.integers(1, 5), n_events=st.integers(0, 4),
           seed=st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_random_machines_are_valid(self, n_states, n_events, seed):
        rng = np.random.default_rng(seed)
        states = [f"s{i}" for i in range(n_states)]
        events = [f"e{i}" for i in range(n_events)]
        edges = {}
        for s in states:
            for e in events:
                if rng.uniform() < 0.5:
                    edges[(s, e)] = states[int(rng.integers(n_states))]
        initial = states[int(rng.integers(n_states))]
        dfa = make_dfa(states, events, edges, initial)
        assert automata.validate(dfa) == []


class TestSerialization:
    def test_round_trip_bit_exact(self, suite):
        for task in suite:
            text = automata.to_text(task.dfa)
            back = automata.from_text(text)
            assert back == task.dfa
            assert automata.to_text(back) == text

    def test_rejects_bad_header(self):
        with pytest.raises(ParseError):
            automata.from_text("nope\n")

    def test_rejects_truncated_table(self, t2):
        text = automata.to_text(t2)
        lines = text.splitlines()
        with pytest.raises(ParseError):
            automata.from_text("\n".join(lines[:-1]) + "\n")

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_random_machines(self, seed):
        rng = np.random.default_rng(seed)
        states = [f"state {i}" for i in range(int(rng.integers(1, 5)))]
        events = [f"ev {i}" for i in range(int(rng.integers(0, 4)))]
        edges = {}
        for s in states:
            for e in events:
                if rng.uniform() < 0.4:
                    edges[(s, e)] = states[int(rng.integers(len(states)))]
        dfa = make_dfa(states, events, edges, states[0])
        assert automata.from_text(automata.to_text(dfa)) == dfa
