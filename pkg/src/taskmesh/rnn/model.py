"""The distilled task model: one gated recurrent cell encodes every task machine.

The cell consumes the event bits concatenated with the task embedding at every
step, a single affine decoder maps hidden states to (task, sub-task) labels,
and an affine initializer maps language (task embedding, optional sub-task
embedding) to a starting hidden state. Everything is float64 numpy; training
lives in :mod:`taskmesh.rnn.train` and backpropagates through this forward
pass exactly.
"""

from dataclasses import dataclass
import json

import numpy as np

from ..errors import InvalidArgumentError, SchemaVersionError
from ..seeding import rng_for

_CHECKPOINT_SCHEMA = "taskmodel/v1"

#: parameter name -> shape builder, given dims
_PARAM_SHAPES = {
    "W_gates": lambda d: (3 * d.hidden_dim, d.input_dim),   # z, r, c input maps
    "U_zr": lambda d: (2 * d.hidden_dim, d.hidden_dim),     # z, r recurrent maps
    "U_c": lambda d: (d.hidden_dim, d.hidden_dim),
    "b_gates": lambda d: (3 * d.hidden_dim,),
    "W_dec": lambda d: (d.label_count, d.hidden_dim),
    "b_dec": lambda d: (d.label_count,),
    "W_init": lambda d: (d.hidden_dim, 2 * d.emb_dim),
    "b_init": lambda d: (d.hidden_dim,),
}


@dataclass(frozen=True)
class ModelDims:
    n_events: int
    emb_dim: int
    hidden_dim: int
    label_count: int

    @property
    def input_dim(self) -> int:
        return self.n_events + self.emb_dim


@dataclass
class TaskModel:
    """Parameters plus the metadata needed to run the model stand-alone."""

    dims: ModelDims
    params: dict[str, np.ndarray]
    alphabet: tuple[str, ...]
    label_names: tuple[str, ...]

    def event_bits(self, event: str) -> np.ndarray:
        """N-bit encoding of one event; NO_EVENT (alphabet head) is all-zeros."""
        try:
            idx = self.alphabet.index(event)
        except ValueError:
            raise InvalidArgumentError(f"unknown event {event!r}") from None
        bits = np.zeros(self.dims.n_events)
        if idx > 0:
            bits[idx - 1] = 1.0
        return bits


def new_model(dims: ModelDims, alphabet, label_names, seed: int = 0) -> TaskModel:
    if len(alphabet) != dims.n_events + 1:
        raise InvalidArgumentError("alphabet size must be n_events + 1")
    if len(label_names) != dims.label_count:
        raise InvalidArgumentError("label_names size must match label_count")
    params = {}
    for name, shape_of in _PARAM_SHAPES.items():
        shape = shape_of(dims)
        if name.startswith("b"):
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[-1])
            params[name] = rng_for(seed, "param", name).uniform(-bound, bound, shape)
    return TaskModel(dims, params, tuple(alphabet), tuple(label_names))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gate_drive(params, dims, event_bits, task_emb) -> np.ndarray:
    """Input-side gate preactivations for [event_bits ⊕ task_emb], bias included.

    The task-embedding part is constant along a sequence, so callers can
    compute it once and add per-step event contributions; this helper does the
    full sum for one step.
    """
    n = dims.n_events
    w = params["W_gates"]
    return event_bits @ w[:, :n].T + task_emb @ w[:, n:].T + params["b_gates"]


def gru_cell(params, dims, x_prev, inputs=None, gates_in=None):
    """One batched GRU step; returns (x_next, cache for the backward pass).

    Pass either the raw concatenated ``inputs`` (B, N+D) or the precomputed
    ``gates_in`` = inputs @ W_gates.T + b_gates.
    """
    H = dims.hidden_dim
    if gates_in is None:
        gates_in = inputs @ params["W_gates"].T + params["b_gates"]
    zr = _sigmoid(gates_in[:, :2 * H] + x_prev @ params["U_zr"].T)
    z, r = zr[:, :H], zr[:, H:]
    c = np.tanh(gates_in[:, 2 * H:] + (r * x_prev) @ params["U_c"].T)
    x_next = (1.0 - z) * x_prev + z * c
    return x_next, (x_prev, z, r, c)


def forward_step(model: TaskModel, x_prev, event_bits, task_embedding) -> np.ndarray:
    """Advance the hidden state by one event; pure function of its inputs.

    Accepts a single state ``(H,)`` or a batch ``(B, H)``; event bits and task
    embeddings broadcast accordingly.
    """
    x_prev = np.asarray(x_prev, dtype=np.float64)
    single = x_prev.ndim == 1
    x = np.atleast_2d(x_prev)
    bits = np.atleast_2d(np.asarray(event_bits, dtype=np.float64))
    emb = np.atleast_2d(np.asarray(task_embedding, dtype=np.float64))
    if x.shape[1] != model.dims.hidden_dim:
        raise InvalidArgumentError(f"hidden state must have {model.dims.hidden_dim} "
                                   f"entries, got {x.shape[1]}")
    if bits.shape[1] != model.dims.n_events:
        raise InvalidArgumentError(f"event bits must have {model.dims.n_events} "
                                   f"entries, got {bits.shape[1]}")
    if emb.shape[1] != model.dims.emb_dim:
        raise InvalidArgumentError(f"task embedding must have {model.dims.emb_dim} "
                                   f"entries, got {emb.shape[1]}")
    n = max(x.shape[0], bits.shape[0], emb.shape[0])
    x, bits, emb = (np.broadcast_to(a, (n, a.shape[1])) for a in (x, bits, emb))
    gates = gate_drive(model.params, model.dims, bits, emb)
    x_next, _ = gru_cell(model.params, model.dims, x, gates_in=gates)
    return x_next[0] if single and n == 1 else x_next


def decode_state(model: TaskModel, x) -> np.ndarray:
    """Probability vector over (task, sub-task) labels; rows sum to one."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    logits = np.atleast_2d(x) @ model.params["W_dec"].T + model.params["b_dec"]
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs[0] if single else probs


def init_hidden(model: TaskModel, task_embedding, subtask_embedding=None) -> np.ndarray:
    """Language-conditioned start state.

    Without a sub-task embedding this is the learned task start; with one, a
    state that decodes to (and behaves like) the described sub-task.
    """
    emb = np.asarray(task_embedding, dtype=np.float64)
    single = emb.ndim == 1
    emb = np.atleast_2d(emb)
    if subtask_embedding is None:
        sub = np.zeros_like(emb)
    else:
        sub = np.atleast_2d(np.asarray(subtask_embedding, dtype=np.float64))
        sub = np.broadcast_to(sub, emb.shape)
    inputs = np.concatenate([emb, sub], axis=1)
    x0 = inputs @ model.params["W_init"].T + model.params["b_init"]
    return x0[0] if single else x0


def advance_hidden(model: TaskModel, hidden: np.ndarray, agg_bits: np.ndarray,
                   task_emb: np.ndarray) -> np.ndarray:
    """Feed aggregated event bits into per-robot hidden states.

    ``hidden`` is (R, H), ``agg_bits`` (R, n_events), ``task_emb`` (R, D) or
    (D,). The model was trained on at-most-one-bit inputs, so when an
    aggregate carries several distinct events they are applied as consecutive
    micro-steps in alphabet order; robots with no set bits take one NO_EVENT
    step.
    """
    hidden = np.array(hidden, dtype=np.float64)
    agg = np.asarray(agg_bits)
    r = hidden.shape[0]
    emb = np.broadcast_to(np.asarray(task_emb, dtype=np.float64),
                          (r, model.dims.emb_dim))
    stepped = np.zeros(r, dtype=bool)
    for bit in range(model.dims.n_events):
        mask = agg[:, bit] > 0
        if not mask.any():
            continue
        bits = np.zeros((int(mask.sum()), model.dims.n_events))
        bits[:, bit] = 1.0
        hidden[mask] = forward_step(model, hidden[mask], bits, emb[mask])
        stepped |= mask
    idle = ~stepped
    if idle.any():
        zeros = np.zeros((int(idle.sum()), model.dims.n_events))
        hidden[idle] = forward_step(model, hidden[idle], zeros, emb[idle])
    return hidden


def rollout(model: TaskModel, task_embedding, events) -> list[int]:
    """Decoded label ids along an event sequence, initial decode included."""
    x = init_hidden(model, task_embedding)
    labels = [int(np.argmax(decode_state(model, x)))]
    emb = np.asarray(task_embedding, dtype=np.float64)
    for event in events:
        x = forward_step(model, x, model.event_bits(event), emb)
        labels.append(int(np.argmax(decode_state(model, x))))
    return labels


def rollout_batch(model: TaskModel, task_embedding, event_idx: np.ndarray) -> np.ndarray:
    """Vectorized rollouts: ``event_idx`` is (B, T) alphabet indices.

    Returns (B, T+1) decoded label ids. All rows share one task embedding.
    """
    b, t = event_idx.shape
    emb = np.broadcast_to(np.asarray(task_embedding, dtype=np.float64),
                          (b, model.dims.emb_dim))
    eye = np.eye(model.dims.n_events)
    x = init_hidden(model, emb)
    out = np.empty((b, t + 1), dtype=np.int64)
    out[:, 0] = np.argmax(decode_state(model, x), axis=1)
    zero = np.zeros((1, model.dims.n_events))
    n = model.dims.n_events
    w = model.params["W_gates"]
    drive_const = emb @ w[:, n:].T + model.params["b_gates"]
    for k in range(t):
        idx = event_idx[:, k]
        bits = np.where((idx > 0)[:, None], eye[np.maximum(idx - 1, 0)], zero)
        x, _ = gru_cell(model.params, model.dims, x,
                        gates_in=bits @ w[:, :n].T + drive_const)
        out[:, k + 1] = np.argmax(decode_state(model, x), axis=1)
    return out


def evaluate(model: TaskModel, dataset) -> dict:
    """Step and whole-sequence accuracy against a dataset split."""
    tensors = dataset.tensors()
    task_emb = tensors["task_emb"]
    event_idx = tensors["event_idx"]
    labels = tensors["label_idx"]
    b, k = labels.shape
    eye = np.eye(model.dims.n_events)
    zero = np.zeros((1, model.dims.n_events))
    n = model.dims.n_events
    w = model.params["W_gates"]
    drive_const = task_emb @ w[:, n:].T + model.params["b_gates"]
    x = init_hidden(model, task_emb)
    pred = np.empty_like(labels)
    pred[:, 0] = np.argmax(decode_state(model, x), axis=1)
    for step_k in range(1, k):
        idx = event_idx[:, step_k - 1]
        bits = np.where((idx > 0)[:, None], eye[np.maximum(idx - 1, 0)], zero)
        x, _ = gru_cell(model.params, model.dims, x,
                        gates_in=bits @ w[:, :n].T + drive_const)
        pred[:, step_k] = np.argmax(decode_state(model, x), axis=1)
    hits = pred == labels
    per_task = {}
    task_ids = np.array([s.task_id for s in dataset.samples])
    for tid in sorted(set(task_ids.tolist())):
        mask = task_ids == tid
        per_task[tid] = float(hits[mask].mean())
    return {
        "step_accuracy": float(hits.mean()),
        "sequence_accuracy": float(hits.all(axis=1).mean()),
        "per_task": per_task,
    }


def save_checkpoint(model: TaskModel, path) -> None:
    meta = json.dumps({
        "schema": _CHECKPOINT_SCHEMA,
        "dims": {"n_events": model.dims.n_events, "emb_dim": model.dims.emb_dim,
                 "hidden_dim": model.dims.hidden_dim,
                 "label_count": model.dims.label_count},
        "alphabet": list(model.alphabet),
        "label_names": list(model.label_names),
    })
    np.savez(path, meta=np.frombuffer(meta.encode(), dtype=np.uint8), **model.params)


def load_checkpoint(path) -> TaskModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("schema") != _CHECKPOINT_SCHEMA:
            raise SchemaVersionError(f"unsupported checkpoint schema "
                                     f"{meta.get('schema')!r}")
        dims = ModelDims(**meta["dims"])
        params = {name: data[name] for name in _PARAM_SHAPES}
    return TaskModel(dims, params, tuple(meta["alphabet"]),
                     tuple(meta["label_names"]))
