"""The supervised distillation dataset: random walks paired with language.

Every sample is one walk through one task's machine: a command paraphrase
(embedded as the task conditioning vector) plus per-step state labels, sampled
sub-task paraphrases and event bits. State labels live in a global space that
enumerates every (task, sub-task) pair, so one decoder head serves all tasks.

Samples store text, not embedding floats; the embedder is deterministic, so
round-trips through the line-delimited file format are bit-exact while the
files stay small.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from . import automata
from .errors import IntegrityError, InvalidArgumentError, SchemaVersionError
from .seeding import child_seed, rng_for
from .taskgen.embedding import EMBED_DIM, embed_sentence
from .taskgen.paraphrase import sample_paraphrase
from .taskgen.parsing import TaskSpec, taskspec_from_json, taskspec_to_json

_SCHEMA = "dataset/v1"


@dataclass(frozen=True)
class TraceSample:
    """One walk: command paraphrase plus per-step (state, sub-task text, event)."""

    task_id: int
    command_text: str
    states: tuple[str, ...]
    events: tuple[str, ...]
    subtask_texts: tuple[str, ...]

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class DatasetManifest:
    tasks: tuple[TaskSpec, ...]
    L: int
    K: int
    D: int
    N: int
    seed: int
    train_fraction: float | None = None
    split_seed: int | None = None
    assignment: tuple[str, ...] | None = None


@dataclass
class Dataset:
    manifest: DatasetManifest
    samples: list[TraceSample]
    labels: dict[tuple[int, str], int] = field(init=False)
    label_names: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        labels = {}
        names = []
        for i, task in enumerate(self.manifest.tasks):
            for state in task.dfa.states:
                labels[(i, state)] = len(names)
                names.append(f"T{i}: {state}")
        self.labels = labels
        self.label_names = tuple(names)

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_tasks = [taskspec_to_json(a) for a in self.manifest.tasks] == \
                     [taskspec_to_json(b) for b in other.manifest.tasks]
        return (same_tasks and self.manifest.L == other.manifest.L
                and self.manifest.K == other.manifest.K
                and self.manifest.D == other.manifest.D
                and self.manifest.seed == other.manifest.seed
                and self.samples == other.samples)

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.manifest.tasks[0].dfa.alphabet

    def label_of(self, task_id: int, state: str) -> int:
        return self.labels[(task_id, state)]

    def task_labels(self, task_id: int) -> list[int]:
        task = self.manifest.tasks[task_id]
        return [self.labels[(task_id, s)] for s in task.dfa.states]

    def tensors(self) -> dict[str, np.ndarray]:
        """Dense training arrays; embeddings recomputed from stored text."""
        man = self.manifest
        m = len(self.samples)
        event_index = {e: j for j, e in enumerate(self.alphabet)}
        task_emb = np.empty((m, man.D))
        sub_emb = np.empty((m, man.K, man.D))
        event_idx = np.empty((m, man.K), dtype=np.int64)
        label_idx = np.empty((m, man.K), dtype=np.int64)
        for i, s in enumerate(self.samples):
            task_emb[i] = embed_sentence(s.command_text, man.D).values
            for k in range(man.K):
                sub_emb[i, k] = embed_sentence(s.subtask_texts[k], man.D).values
                event_idx[i, k] = event_index[s.events[k]]
                label_idx[i, k] = self.labels[(s.task_id, s.states[k])]
        return {"task_emb": task_emb, "sub_emb": sub_emb,
                "event_idx": event_idx, "label_idx": label_idx}


def default_event_mix(dfa) -> dict[str, float]:
    """Walk mix biased toward the task's own triggers.

    Foreign (self-looping) events keep substantial mass so rejection is
    learned, but trigger chains deep in the machine still get covered within
    a walk.
    """
    triggers = set(dfa.trigger_events)
    mix = {}
    for event in dfa.alphabet:
        if event == automata.NO_EVENT:
            mix[event] = 2.0
        elif event in triggers:
            mix[event] = 4.0
        else:
            mix[event] = 1.0
    return mix


def build_dataset(tasks, L: int, K: int, seed: int,
                  event_mix: dict[str, float] | None = None) -> Dataset:
    """L walks of length K per task, each with fresh paraphrase draws.

    Without an explicit ``event_mix``, each task walks under
    :func:`default_event_mix` over the shared alphabet.
    """
    if L < 1 or K < 1:
        raise InvalidArgumentError("L and K must be >= 1")
    tasks = tuple(tasks)
    if not tasks:
        raise InvalidArgumentError("need at least one task")
    shared = tasks[0].dfa.alphabet
    for t in tasks:
        if t.dfa.alphabet != shared:
            raise InvalidArgumentError("tasks must share one event alphabet "
                                       "(run harmonize_alphabet first)")
        problems = automata.validate(t.dfa)
        if problems:
            raise InvalidArgumentError(f"task machine invalid: {problems[0]}")
    samples = []
    for i, task in enumerate(tasks):
        task_mix = event_mix or default_event_mix(task.dfa)
        for l in range(L):
            trace = automata.random_walk(task.dfa, K, task_mix,
                                         rng_seed=child_seed(seed, "walk", i, l))
            para_rng = rng_for(seed, "para", i, l)
            command = sample_paraphrase(task.command_text, para_rng)
            sub_texts = tuple(sample_paraphrase(task.subtask_texts[s], para_rng)
                              for s in trace.states)
            samples.append(TraceSample(
                task_id=i, command_text=command, states=trace.states,
                events=trace.events, subtask_texts=sub_texts))
    manifest = DatasetManifest(tasks=tasks, L=L, K=K, D=EMBED_DIM,
                               N=len(shared) - 1, seed=seed)
    return Dataset(manifest, samples)


def split(dataset: Dataset, train_fraction: float = 0.8,
          seed: int = 0) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive, per-task-stratified split."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgumentError("train_fraction must be in (0, 1)")
    by_task = {}
    for idx, s in enumerate(dataset.samples):
        by_task.setdefault(s.task_id, []).append(idx)
    assignment = ["test"] * len(dataset.samples)
    for task_id in sorted(by_task):
        idxs = np.array(by_task[task_id])
        order = rng_for(seed, "split", task_id).permutation(len(idxs))
        n_train = round(train_fraction * len(idxs))
        n_train = max(1, min(len(idxs) - 1, n_train)) if len(idxs) > 1 else n_train
        for j in order[:n_train]:
            assignment[idxs[j]] = "train"
    man = dataset.manifest

    def view(tag):
        from dataclasses import replace
        sub = [s for s, a in zip(dataset.samples, assignment) if a == tag]
        return Dataset(replace(man, train_fraction=train_fraction, split_seed=seed,
                               assignment=tuple(assignment)), sub)

    return view("train"), view("test")


def audit(dataset: Dataset) -> list[str]:
    """Replay every trace through its machine; returns one entry per defect."""
    problems = []
    for idx, s in enumerate(dataset.samples):
        dfa = dataset.manifest.tasks[s.task_id].dfa
        if s.states[0] != dfa.initial:
            problems.append(f"sample {idx}: starts at {s.states[0]!r}, "
                            f"not {dfa.initial!r}")
        for k in range(len(s) - 1):
            want = automata.step(dfa, s.states[k], s.events[k])
            if s.states[k + 1] != want:
                problems.append(f"sample {idx} step {k}: recorded {s.states[k + 1]!r}, "
                                f"machine says {want!r}")
    return problems


def serialize(dataset: Dataset, path) -> None:
    man = dataset.manifest
    header = {
        "schema": _SCHEMA,
        "L": man.L, "K": man.K, "D": man.D, "N": man.N, "seed": man.seed,
        "count": len(dataset.samples),
        "train_fraction": man.train_fraction,
        "split_seed": man.split_seed,
        "assignment": list(man.assignment) if man.assignment else None,
        "tasks": [json.loads(taskspec_to_json(t)) for t in man.tasks],
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for s in dataset.samples:
            fh.write(json.dumps({
                "task": s.task_id,
                "command": s.command_text,
                "states": list(s.states),
                "events": list(s.events),
                "subtask_texts": list(s.subtask_texts),
            }) + "\n")


def deserialize(path) -> Dataset:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise IntegrityError("empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"corrupt header line: {exc}") from exc
    if header.get("schema") != _SCHEMA:
        raise SchemaVersionError(f"unsupported dataset schema {header.get('schema')!r}")
    count = header["count"]
    if len(lines) - 1 != count:
        raise IntegrityError(f"expected {count} sample lines, found {len(lines) - 1} "
                             f"(file ends at line {len(lines)})")
    tasks = tuple(taskspec_from_json(json.dumps(t)) for t in header["tasks"])
    samples = []
    for lineno, raw in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(raw)
            samples.append(TraceSample(
                task_id=rec["task"], command_text=rec["command"],
                states=tuple(rec["states"]), events=tuple(rec["events"]),
                subtask_texts=tuple(rec["subtask_texts"])))
        except (json.JSONDecodeError, KeyError) as exc:
            raise IntegrityError(f"corrupt sample at line {lineno}: {exc}") from exc
    manifest = DatasetManifest(
        tasks=tasks, L=header["L"], K=header["K"], D=header["D"], N=header["N"],
        seed=header["seed"], train_fraction=header.get("train_fraction"),
        split_seed=header.get("split_seed"),
        assignment=tuple(header["assignment"]) if header.get("assignment") else None)
    return Dataset(manifest, samples)
