"""Supervised training of the task model with exact backpropagation through time.

The loss is per-step cross entropy over the decoded labels of a full unroll
(whose start state comes from the language initializer with no sub-task text),
plus an auxiliary unroll that restarts mid-sequence from the initializer fed a
sub-task paraphrase. The auxiliary part both teaches language-based
initialization into arbitrary machine states and pulls the initializer output
toward the hidden states the dynamics actually visit, so execution can resume
from a language init. Everything is a smooth function of the parameters, so
analytic gradients can be checked against central finite differences.

Input-side gate preactivations are batched across all timesteps (the task
embedding contribution is step-constant), which is where the speed comes from.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError, TrainingDivergedError
from ..seeding import rng_for
from .model import ModelDims, TaskModel, gru_cell


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-3
    epochs: int = 200
    batch_size: int = 256
    grad_clip: float = 5.0
    seed: int = 0
    aux_weight: float = 0.5
    pull_weight: float = 0.1
    early_stop_accuracy: float = 1.0
    early_stop_loss: float = 1.5e-3   # keep hardening margins after 100% acc
    early_stop_patience: int = 5


def _event_onehots(event_idx, n_events):
    # index 0 is NO_EVENT and encodes as all-zeros
    b, k = event_idx.shape
    bits = np.zeros((b, k, n_events))
    rows, cols = np.nonzero(event_idx > 0)
    bits[rows, cols, event_idx[rows, cols] - 1] = 1.0
    return bits


def _gru_back(params, cache, dx_next):
    """One step of backward-through-time; returns (dx_prev, da_zr, da_c)."""
    x_prev, z, r, c = cache
    dz = dx_next * (c - x_prev)
    dc = dx_next * z
    dx = dx_next * (1.0 - z)
    da_c = dc * (1.0 - c * c)
    drx = da_c @ params["U_c"]
    dr = drx * x_prev
    dx = dx + drx * r
    da_z = dz * z * (1.0 - z)
    da_r = dr * r * (1.0 - r)
    da_zr = np.concatenate([da_z, da_r], axis=1)
    dx = dx + da_zr @ params["U_zr"]
    return dx, da_zr, da_c


def loss_and_grads(params: dict, dims: ModelDims, batch: dict, k_star: int,
                   aux_weight: float, pull_weight: float):
    """Total loss and exact parameter gradients for one batch.

    ``batch`` holds task_emb (B,D), sub_emb (B,K,D), event_idx (B,K) and
    label_idx (B,K); ``k_star`` picks the restart step of the auxiliary unroll.
    """
    task_emb = batch["task_emb"]
    sub_emb = batch["sub_emb"]
    labels = batch["label_idx"]
    b, k = labels.shape
    if not 0 <= k_star < k:
        raise InvalidArgumentError(f"k_star must be in [0, {k}), got {k_star}")
    bits = batch.get("event_onehot")
    if bits is None:
        bits = _event_onehots(batch["event_idx"], dims.n_events)
    n, h = dims.n_events, dims.hidden_dim
    w_g = params["W_gates"]
    grads = {name: np.zeros_like(value) for name, value in params.items()}

    # gate preactivations for steps 1..K-1, all at once
    steps = k - 1
    if steps:
        bits_used = np.ascontiguousarray(bits[:, :steps])
        drive_const = task_emb @ w_g[:, n:].T + params["b_gates"]
        gates_all = (bits_used.reshape(-1, n) @ w_g[:, :n].T).reshape(b, steps, 3 * h)
        gates_all += drive_const[:, None, :]

    def run_chain(x0, start_k):
        xs, caches = [x0], []
        for step_k in range(start_k + 1, k):
            x, cache = gru_cell(params, dims, xs[-1],
                                gates_in=gates_all[:, step_k - 1])
            xs.append(x)
            caches.append(cache)
        return xs, caches

    def chain_ce(stack, lab, scale):
        # stack (B, T, H), lab (B, T) -> loss, d(stack)
        bt = stack.shape[0] * stack.shape[1]
        flat = stack.reshape(bt, h)
        logits = flat @ params["W_dec"].T + params["b_dec"]
        logits -= logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(logits).sum(axis=1, keepdims=True))
        log_p = logits - log_z
        lab_flat = lab.reshape(bt)
        loss = -log_p[np.arange(bt), lab_flat].sum() * scale
        dlog = np.exp(log_p)
        dlog[np.arange(bt), lab_flat] -= 1.0
        dlog *= scale
        grads["W_dec"] += dlog.T @ flat
        grads["b_dec"] += dlog.sum(axis=0)
        return loss, (dlog @ params["W_dec"]).reshape(stack.shape)

    init_main = np.concatenate([task_emb, np.zeros_like(task_emb)], axis=1)
    x0 = init_main @ params["W_init"].T + params["b_init"]
    xs, caches = run_chain(x0, 0)
    loss, dxs = chain_ce(np.stack(xs, axis=1), labels, 1.0 / (b * k))

    init_aux = np.concatenate([task_emb, sub_emb[:, k_star]], axis=1)
    y0 = init_aux @ params["W_init"].T + params["b_init"]
    ys, aux_caches = run_chain(y0, k_star)
    aux_loss, dys = chain_ce(np.stack(ys, axis=1), labels[:, k_star:],
                             aux_weight / (b * (k - k_star)))
    loss += aux_loss

    # pull the restart state toward the hidden state the main unroll visits
    diff = y0 - xs[k_star]
    pull_scale = pull_weight / diff.size
    loss += pull_scale * float((diff * diff).sum())
    dys[:, 0] += 2.0 * pull_scale * diff
    dxs[:, k_star] -= 2.0 * pull_scale * diff

    da_gates = np.zeros((b, steps, 3 * h)) if steps else None
    rec_states, rec_da_zr, rec_rx, rec_da_c = [], [], [], []

    def back_chain(dstack, chain_caches, start_k):
        dx = dstack[:, len(chain_caches)]
        for i in range(len(chain_caches) - 1, -1, -1):
            cache = chain_caches[i]
            dx, da_zr, da_c = _gru_back(params, cache, dx)
            da_gates[:, start_k + i, :2 * h] += da_zr
            da_gates[:, start_k + i, 2 * h:] += da_c
            rec_states.append(cache[0])
            rec_da_zr.append(da_zr)
            rec_rx.append(cache[2] * cache[0])
            rec_da_c.append(da_c)
            dx = dx + dstack[:, i]
        return dx

    dy0 = back_chain(dys, aux_caches, k_star)
    grads["W_init"] += dy0.T @ init_aux
    grads["b_init"] += dy0.sum(axis=0)

    dx0 = back_chain(dxs, caches, 0)
    grads["W_init"] += dx0.T @ init_main
    grads["b_init"] += dx0.sum(axis=0)

    if steps:
        da_flat = da_gates.reshape(-1, 3 * h)
        grads["W_gates"][:, :n] += da_flat.T @ bits_used.reshape(-1, n)
        grads["W_gates"][:, n:] += da_gates.sum(axis=1).T @ task_emb
        grads["b_gates"] += da_flat.sum(axis=0)
    if rec_states:
        grads["U_zr"] += np.concatenate(rec_da_zr).T @ np.concatenate(rec_states)
        grads["U_c"] += np.concatenate(rec_da_c).T @ np.concatenate(rec_rx)

    return loss, grads


class AdamState:
    def __init__(self, params):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def update(self, params, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.t += 1
        for name, g in grads.items():
            self.m[name] = beta1 * self.m[name] + (1 - beta1) * g
            self.v[name] = beta2 * self.v[name] + (1 - beta2) * (g * g)
            m_hat = self.m[name] / (1 - beta1 ** self.t)
            v_hat = self.v[name] / (1 - beta2 ** self.t)
            params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)


def clip_gradients(grads, max_norm):
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def _predict_labels(params, dims, task_emb, event_idx, event_onehot=None):
    b, k = event_idx.shape
    n = dims.n_events
    bits = event_onehot
    if bits is None:
        bits = _event_onehots(event_idx, n)
    w_g = params["W_gates"]
    drive_const = task_emb @ w_g[:, n:].T + params["b_gates"]
    inputs0 = np.concatenate([task_emb, np.zeros_like(task_emb)], axis=1)
    x = inputs0 @ params["W_init"].T + params["b_init"]
    pred = np.empty((b, k), dtype=np.int64)
    pred[:, 0] = np.argmax(x @ params["W_dec"].T + params["b_dec"], axis=1)
    for step_k in range(1, k):
        gates = bits[:, step_k - 1] @ w_g[:, :n].T + drive_const
        x, _ = gru_cell(params, dims, x, gates_in=gates)
        pred[:, step_k] = np.argmax(x @ params["W_dec"].T + params["b_dec"], axis=1)
    return pred


def train(model: TaskModel, train_dataset, config: TrainConfig = TrainConfig()):
    """Fit the model; returns (trained model, loss curve rows).

    Deterministic under the config seed: batch order, the per-batch restart
    step and all arithmetic are fixed. Aborts with diagnostics on a non-finite
    loss.
    """
    tensors = train_dataset.tensors()
    n = tensors["label_idx"].shape[0]
    if tensors["task_emb"].shape[1] != model.dims.emb_dim:
        raise InvalidArgumentError("dataset embedding width does not match model")
    if int(tensors["label_idx"].max()) >= model.dims.label_count:
        raise InvalidArgumentError("dataset labels exceed model label count")
    onehots = _event_onehots(tensors["event_idx"], model.dims.n_events)
    params = {k: v.copy() for k, v in model.params.items()}
    adam = AdamState(params)
    curve = []
    k_len = tensors["label_idx"].shape[1]
    streak = 0
    for epoch in range(config.epochs):
        rng = rng_for(config.seed, "epoch", epoch)
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = {
                "task_emb": tensors["task_emb"][idx],
                "sub_emb": tensors["sub_emb"][idx],
                "event_idx": tensors["event_idx"][idx],
                "event_onehot": onehots[idx],
                "label_idx": tensors["label_idx"][idx],
            }
            k_star = int(rng.integers(k_len))
            loss, grads = loss_and_grads(params, model.dims, batch, k_star,
                                         config.aux_weight, config.pull_weight)
            grad_norm = clip_gradients(grads, config.grad_clip)
            if not np.isfinite(loss) or not np.isfinite(grad_norm):
                raise TrainingDivergedError(
                    "non-finite loss during training",
                    diagnostics={"epoch": epoch, "batch": batches, "loss": loss,
                                 "grad_norm": grad_norm})
            adam.update(params, grads, config.lr)
            epoch_loss += loss
            batches += 1
        pred = _predict_labels(params, model.dims, tensors["task_emb"],
                               tensors["event_idx"], onehots)
        acc = float((pred == tensors["label_idx"]).mean())
        mean_loss = epoch_loss / max(batches, 1)
        curve.append({"epoch": epoch, "loss": mean_loss,
                      "train_step_accuracy": acc})
        if acc >= config.early_stop_accuracy and mean_loss <= config.early_stop_loss:
            streak += 1
            if streak >= config.early_stop_patience:
                break
        else:
            streak = 0
    trained = TaskModel(model.dims, params, model.alphabet, model.label_names)
    return trained, curve
