"""Model-vs-machine equivalence checks.

The trained model is compared against brute-force simulation of the task
machines: exhaustively over every event sequence up to a depth (drawn from the
task's own trigger alphabet plus NO_EVENT; foreign events are covered by the
per-state rejection sweep and by long random sequences over the full
alphabet), and statistically over random length-50 sequences.
"""

from itertools import product

import numpy as np

from .. import automata
from ..seeding import rng_for
from .model import TaskModel, rollout_batch


def label_map(model: TaskModel) -> dict[tuple[int, str], int]:
    """(task index, state name) -> global label id, parsed from label names."""
    out = {}
    for gid, name in enumerate(model.label_names):
        tpart, _, state = name.partition(": ")
        out[(int(tpart[1:]), state)] = gid
    return out


def dfa_label_rollout(dfa, task_id: int, labels: dict, event_idx: np.ndarray,
                      alphabet) -> np.ndarray:
    """Ground-truth label sequences for (B, T) alphabet-index inputs."""
    mat = automata.as_matrix(dfa)
    state_label = np.array([labels[(task_id, s)] for s in dfa.states])
    init = list(dfa.states).index(dfa.initial)
    b, t = event_idx.shape
    states = np.full(b, init, dtype=np.int64)
    out = np.empty((b, t + 1), dtype=np.int64)
    out[:, 0] = state_label[states]
    for k in range(t):
        states = mat[states, event_idx[:, k]]
        out[:, k + 1] = state_label[states]
    return out


def task_event_indices(model: TaskModel, dfa) -> list[int]:
    """Alphabet indices of NO_EVENT plus the task's own trigger events."""
    own = [0]
    for event in dfa.trigger_events:
        own.append(model.alphabet.index(event))
    return own


def exhaustive_equivalence(model: TaskModel, task, task_id: int, depth: int,
                           task_emb) -> dict:
    """Compare rollouts against the machine on ALL sequences up to ``depth``.

    Sequences are over the task's own trigger alphabet plus NO_EVENT.
    Returns mismatch and sequence counts.
    """
    labels = label_map(model)
    own = task_event_indices(model, task.dfa)
    checked = 0
    mismatches = 0
    for length in range(depth + 1):
        if length == 0:
            seqs = np.zeros((1, 0), dtype=np.int64)
        else:
            seqs = np.array(list(product(own, repeat=length)), dtype=np.int64)
        pred = rollout_batch(model, task_emb, seqs)
        truth = dfa_label_rollout(task.dfa, task_id, labels, seqs, model.alphabet)
        mismatches += int((pred != truth).any(axis=1).sum())
        checked += seqs.shape[0]
    return {"sequences": checked, "mismatches": mismatches}


def sampled_equivalence(model: TaskModel, task, task_id: int, n_sequences: int,
                        length: int, task_emb, seed: int = 0) -> dict:
    """Random sequences over the FULL alphabet (foreign events included)."""
    labels = label_map(model)
    rng = rng_for(seed, "sampled", task_id)
    seqs = rng.integers(0, len(model.alphabet), size=(n_sequences, length))
    pred = rollout_batch(model, task_emb, seqs)
    truth = dfa_label_rollout(task.dfa, task_id, labels, seqs, model.alphabet)
    return {"sequences": n_sequences,
            "mismatches": int((pred != truth).any(axis=1).sum())}


def shortest_prefix(dfa, state: str) -> list[str]:
    """Shortest trigger-event path from the initial state to ``state``."""
    if state == dfa.initial:
        return []
    frontier = [(dfa.initial, [])]
    seen = {dfa.initial}
    while frontier:
        current, path = frontier.pop(0)
        for event in dfa.alphabet:
            target = dfa.transitions[(current, event)]
            if target == current or target in seen:
                continue
            if target == state:
                return path + [event]
            seen.add(target)
            frontier.append((target, path + [event]))
    return None


def rejection_failures(model: TaskModel, task, task_id: int, task_emb) -> list:
    """Every (state, irrelevant event) whose decoded state changes.

    Irrelevant = self-looping at that state; covers every foreign event plus
    NO_EVENT. The state is reached through its shortest trigger prefix.
    """
    labels = label_map(model)
    failures = []
    for state in task.dfa.states:
        prefix = shortest_prefix(task.dfa, state)
        if prefix is None:
            continue
        prefix_idx = [model.alphabet.index(e) for e in prefix]
        irrelevant = [e for e in model.alphabet
                      if task.dfa.transitions[(state, e)] == state]
        want = labels[(task_id, state)]
        for event in irrelevant:
            seq = np.array([prefix_idx + [model.alphabet.index(event)]])
            pred = rollout_batch(model, task_emb, seq)[0]
            if pred[-1] != want or pred[-2] != want:
                failures.append((state, event, model.label_names[pred[-1]]))
    return failures
