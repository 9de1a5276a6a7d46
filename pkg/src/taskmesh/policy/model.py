"""Decentralized control policy: neighborhood message passing over observations.

Each robot encodes its own and its neighbors' observation vectors, averages
the neighbor features (permutation invariant by construction), concatenates
its task-model hidden state, and maps the result to a diagonal Gaussian over
2D velocity. A centralized value head additionally pools features over the
whole team; it exists only for training. Parameters are shared across robots,
so the architecture works for any team size.
"""

from dataclasses import dataclass
import json

import numpy as np

from ..errors import InvalidArgumentError, SchemaVersionError
from ..seeding import rng_for

_CHECKPOINT_SCHEMA = "policymodel/v1"

ACTION_DIM = 2

_SHAPES = {
    "W_enc": lambda d: (d.feat_dim, d.obs_dim),
    "b_enc": lambda d: (d.feat_dim,),
    "W_trunk": lambda d: (d.feat_dim, 2 * d.feat_dim + d.hidden_dim),
    "b_trunk": lambda d: (d.feat_dim,),
    "W_act": lambda d: (ACTION_DIM, d.feat_dim),
    "b_act": lambda d: (ACTION_DIM,),
    "log_std": lambda d: (ACTION_DIM,),
    "W_val1": lambda d: (d.feat_dim, 3 * d.feat_dim + d.hidden_dim),
    "b_val1": lambda d: (d.feat_dim,),
    "W_val2": lambda d: (1, d.feat_dim),
    "b_val2": lambda d: (1,),
}


@dataclass(frozen=True)
class PolicyDims:
    obs_dim: int
    hidden_dim: int
    feat_dim: int = 64


@dataclass
class PolicyModel:
    dims: PolicyDims
    params: dict[str, np.ndarray]


def new_policy(dims: PolicyDims, seed: int = 0) -> PolicyModel:
    params = {}
    for name, shape_of in _SHAPES.items():
        shape = shape_of(dims)
        if name == "log_std":
            params[name] = np.full(shape, np.log(0.5))
        elif name.startswith("b"):
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[-1])
            params[name] = rng_for(seed, "policy", name).uniform(-bound, bound, shape)
            if name in ("W_act", "W_val2"):
                # near-zero heads keep early updates small and exploration broad
                params[name] *= 0.01
    return PolicyModel(dims, params)


def aggregate_events(own_bits: np.ndarray, neighbor_bits) -> np.ndarray:
    """Bitwise OR of a robot's event bits with its neighbors' shared bits."""
    own = np.asarray(own_bits)
    out = own.astype(np.float64).copy()
    for nb in neighbor_bits:
        nb = np.asarray(nb)
        if nb.shape != own.shape:
            raise InvalidArgumentError(f"event bit width mismatch: {nb.shape} "
                                       f"vs {own.shape}")
        out = np.maximum(out, nb.astype(np.float64))
    return out


def _mean_pool(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] == 0:
        return np.zeros(rows.shape[1])
    return rows.mean(axis=0)


def actor_features(model: PolicyModel, own_obs, neighbor_obs, hidden):
    """Trunk features for one robot from its own and neighbors' observations."""
    p = model.params
    own_obs = np.asarray(own_obs, dtype=np.float64)
    if own_obs.shape[0] != model.dims.obs_dim:
        raise InvalidArgumentError(f"observation must have {model.dims.obs_dim} "
                                   f"entries, got {own_obs.shape[0]}")
    phi_own = np.tanh(p["W_enc"] @ own_obs + p["b_enc"])
    nb = np.asarray(neighbor_obs, dtype=np.float64).reshape(-1, model.dims.obs_dim)
    phi_nb = np.tanh(nb @ p["W_enc"].T + p["b_enc"]) if nb.shape[0] else nb
    pooled = _mean_pool(phi_nb) if nb.shape[0] else np.zeros(model.dims.feat_dim)
    hidden = np.asarray(hidden, dtype=np.float64)
    if hidden.shape[0] != model.dims.hidden_dim:
        raise InvalidArgumentError(f"hidden state must have "
                                   f"{model.dims.hidden_dim} entries")
    trunk_in = np.concatenate([phi_own, pooled, hidden])
    return np.tanh(p["W_trunk"] @ trunk_in + p["b_trunk"])


def act(model: PolicyModel, own_obs, neighbor_obs, hidden,
        mode: str = "mean", seed: int = 0) -> np.ndarray:
    """One robot's velocity command from local information only.

    ``mode`` "mean" is deterministic; "sample" draws from the Gaussian and is
    reproducible under the seed. Permutation of the neighbor list cannot change
    the result (features are mean-pooled).
    """
    u = actor_features(model, own_obs, neighbor_obs, hidden)
    mean = model.params["W_act"] @ u + model.params["b_act"]
    if mode == "mean":
        return mean
    if mode != "sample":
        raise InvalidArgumentError(f"unknown act mode {mode!r}")
    std = np.exp(model.params["log_std"])
    return mean + std * rng_for(seed, "act").standard_normal(ACTION_DIM)


def act_batch(model: PolicyModel, obs: np.ndarray, adjacency: np.ndarray,
              hidden: np.ndarray, mode: str = "mean",
              rng: np.random.Generator | None = None):
    """All robots at once; one tick of the whole team.

    Returns (actions, log_probs, values, means). Equivalent to calling
    :func:`act` per robot with that robot's neighbors.
    """
    fwd = forward_team(model.params, model.dims, obs[None], adjacency[None],
                       hidden[None])
    mean = fwd["mean"][0]
    values = fwd["value"][0]
    if mode == "mean":
        return mean, None, values, mean
    std = np.exp(model.params["log_std"])
    noise = rng.standard_normal(mean.shape)
    actions = mean + std * noise
    logp = gaussian_log_prob(actions, mean, model.params["log_std"])
    return actions, logp, values, mean


def gaussian_log_prob(actions, mean, log_std):
    std = np.exp(log_std)
    z = (actions - mean) / std
    return (-0.5 * z * z - log_std - 0.5 * np.log(2 * np.pi)).sum(axis=-1)


def forward_team(params, dims, obs, adj, hidden):
    """Batched team forward pass.

    obs (B, N, obs_dim), adj (B, N, N) boolean, hidden (B, N, H). Returns a
    dict with intermediates for the backward pass in the trainer.
    """
    phi = np.tanh(obs @ params["W_enc"].T + params["b_enc"])          # (B,N,F)
    counts = adj.sum(axis=2, keepdims=True)                            # (B,N,1)
    norm = np.where(counts > 0, 1.0 / np.maximum(counts, 1), 0.0)
    pooled = (adj.astype(np.float64) @ phi) * norm                     # (B,N,F)
    trunk_in = np.concatenate([phi, pooled, hidden], axis=2)
    u = np.tanh(trunk_in @ params["W_trunk"].T + params["b_trunk"])    # (B,N,F)
    mean = u @ params["W_act"].T + params["b_act"]                     # (B,N,2)
    team = phi.mean(axis=1, keepdims=True)                             # (B,1,F)
    team_b = np.broadcast_to(team, phi.shape)
    val_in = np.concatenate([phi, pooled, hidden, team_b], axis=2)
    hv = np.tanh(val_in @ params["W_val1"].T + params["b_val1"])
    value = (hv @ params["W_val2"].T + params["b_val2"])[..., 0]       # (B,N)
    return {"phi": phi, "norm": norm, "pooled": pooled, "u": u, "mean": mean,
            "hv": hv, "value": value, "obs": obs, "adj": adj, "hidden": hidden,
            "team": team}


def save_policy(model: PolicyModel, path) -> None:
    meta = json.dumps({
        "schema": _CHECKPOINT_SCHEMA,
        "dims": {"obs_dim": model.dims.obs_dim,
                 "hidden_dim": model.dims.hidden_dim,
                 "feat_dim": model.dims.feat_dim},
    })
    np.savez(path, meta=np.frombuffer(meta.encode(), dtype=np.uint8),
             **model.params)


def load_policy(path) -> PolicyModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("schema") != _CHECKPOINT_SCHEMA:
            raise SchemaVersionError(f"unsupported policy schema "
                                     f"{meta.get('schema')!r}")
        dims = PolicyDims(**meta["dims"])
        params = {name: data[name] for name in _SHAPES}
    return PolicyModel(dims, params)
