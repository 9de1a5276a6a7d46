"""Multi-agent PPO over randomized sub-task segments.

Every training episode samples a (task, sub-task) pair, builds a world
consistent with that sub-task, conditions each robot's frozen task model
either through the language initializer or by replaying an event prefix, and
shapes rewards for that sub-task alone. Robots share policy parameters; the
critic sees team-pooled features during training while the actor consumes only
local inputs. Baselines reuse the same machinery with zeroed hidden states and
different reward modes.

All gradients are hand-derived through the team forward pass; training is
deterministic under the config seed with a fixed reduction order.
"""

from dataclasses import dataclass, replace

import numpy as np

from .. import automata, sim
from ..sim.world import sample_free_position
from ..errors import InvalidArgumentError, TrainingDivergedError
from ..rnn.model import advance_hidden, init_hidden
from ..rnn.train import AdamState, clip_gradients
from ..seeding import child_seed, rng_for
from ..taskgen.embedding import embed_sentence
from ..taskgen.paraphrase import sample_paraphrase
from .model import (PolicyDims, PolicyModel, act_batch, forward_team,
                    gaussian_log_prob, new_policy)


@dataclass(frozen=True)
class MappoConfig:
    frames_budget: int = 150_000
    rollout_frames: int = 1536
    minibatch_ticks: int = 128
    update_epochs: int = 8
    clip: float = 0.2
    gae_lambda: float = 0.9
    gamma: float = 0.95
    entropy_coef: float = 0.001
    value_coef: float = 0.5
    lr: float = 7e-4
    grad_clip: float = 5.0
    seed: int = 0
    n_robots: int = 3
    segment_cap: int = 200
    episode_cap: int = 300
    baseline: str = "none"          # none | vanilla | reward_tuned
    replay_prefix_prob: float = 0.5
    eval_every: int = 12            # updates between learning-curve probes
    eval_episodes: int = 6


def baseline_variants(kind: str) -> MappoConfig:
    """Training configuration for the comparison baselines."""
    if kind == "vanilla":
        return MappoConfig(baseline="vanilla")
    if kind == "reward_tuned":
        return MappoConfig(baseline="reward_tuned")
    raise InvalidArgumentError(f"unknown baseline kind {kind!r}")


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


# --- sub-task segment construction -------------------------------------------

def dfa_prefix_events(dfa, state: str) -> list[str]:
    """Shortest trigger-event sequence from the initial state to ``state``."""
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
    raise InvalidArgumentError(f"state {state!r} unreachable from initial")


def setup_subtask_world(task, state: str, n_robots: int, seed: int):
    """A world mid-mission, consistent with the given sub-task being active."""
    family = task.scenario.task_family
    idx = list(task.dfa.states).index(state)
    rng = rng_for(seed, "setup")
    if family == "multi-room":
        world = sim.reset(task, n_robots, "random", seed=seed)
        lay = world.layout
        accepting = automata.is_accepting(task.dfa, state)
        last_room = lay.rooms[-1]
        if accepting and rng.uniform() < 0.55:
            # the deployment case where the team starts in the goal room and
            # the earlier switches were never needed: consistent prefix,
            # biased to nothing pressed; spawns lean on the room's closed-gate
            # side so the policy cannot get away with gate-seeking
            prefix = 0 if rng.uniform() < 0.5 \
                else int(rng.integers(1, len(lay.switches) + 1))
            usable = [sim.Rect(last_room.x0 + 0.15, last_room.y0 + 0.3,
                               last_room.x0 + 1.3, last_room.y1 - 0.3)]
        else:
            prefix = min(idx, len(lay.switches))
            usable = lay.rooms[:min(idx + 1, len(lay.rooms))]
        for s_idx in range(prefix):
            world.switches_registered[s_idx] = True
            world.gates_open[s_idx] = True
        spawn_rooms = [usable[int(rng.integers(len(usable)))]
                       for _ in range(n_robots)]
        placed = []
        for room in spawn_rooms:
            placed.append(sample_free_position(lay, room, rng, keep_clear=placed))
        world.positions = np.stack(placed)
    elif family == "retrieve-flag":
        world = sim.reset(task, n_robots, "random", seed=seed)
        if idx == 1:
            carrier = int(rng.integers(n_robots))
            world.flag_carrier[0] = carrier
            world.flag_positions[0] = tuple(world.positions[carrier])
        elif idx >= 2:
            world.flag_delivered[0] = True
            world.flag_positions[0] = tuple(world.layout.switches[0].pos)
            world.switches_registered[0] = True
            world.gates_open[0] = True
    elif family == "flag-sequence":
        world = sim.reset(task, n_robots, "random", seed=seed)
        order = sorted(f.order for f in world.layout.flags)
        for o in order[:idx]:
            for fi, f in enumerate(world.layout.flags):
                if f.order == o:
                    world.flag_collected[fi] = True
    elif family == "search-targets":
        world = sim.reset(task, n_robots, "random", seed=seed)
        if idx >= 1:
            world.targets_found = [True] * len(world.targets_found)
    else:
        world = sim.reset(task, n_robots, "random", seed=seed)
        if idx >= 1 and world.flag_collected:
            world.flag_collected[0] = True
    world.dfa_state = state
    return world


def conditioned_hiddens(task_model, task, state: str, n_robots: int, rng,
                        replay_prob: float):
    """Per-robot hidden states for a sub-task, plus the shared task embedding.

    Mixes the two ways execution reaches a sub-task: the language initializer
    fed a paraphrase, and the dynamics replaying an event prefix. Both occur at
    deployment, so the policy trains against both hidden distributions.
    """
    command = sample_paraphrase(task.command_text, rng)
    task_emb = embed_sentence(command).values
    hiddens = np.empty((n_robots, task_model.dims.hidden_dim))
    prefix = None
    for r in range(n_robots):
        if rng.uniform() < replay_prob:
            if prefix is None:
                prefix = dfa_prefix_events(task.dfa, state)
            x = init_hidden(task_model, task_emb)
            for event in prefix:
                bits = task_model.event_bits(event)
                x = advance_hidden(task_model, x[None], bits[None],
                                   task_emb[None])[0]
            hiddens[r] = x
        else:
            sub_text = sample_paraphrase(task.subtask_texts[state], rng)
            hiddens[r] = init_hidden(task_model, task_emb,
                                     embed_sentence(sub_text).values)
    return hiddens, task_emb


# --- episode drivers ----------------------------------------------------------

class _SegmentRunner:
    """Steps one sub-task segment (or baseline episode) tick by tick."""

    def __init__(self, task_model, tasks, config, episode_seed, rng):
        self.config = config
        self.baseline = config.baseline
        task = tasks[int(rng.integers(len(tasks)))]
        self.task = task
        n = config.n_robots
        if self.baseline == "none":
            states = task.dfa.states
            state = states[int(rng.integers(len(states)))]
            self.world = setup_subtask_world(task, state, n, episode_seed)
            self.hiddens, self.task_emb = conditioned_hiddens(
                task_model, task, state, n, rng, config.replay_prefix_prob)
            self.reward_spec = sim.RewardSpec(mode="subtask", active_subtask=state,
                                              collision_penalty=-0.25)
            self.active_state = state
            self.cap = config.segment_cap
        else:
            init = "random"
            if task.scenario.task_family == "multi-room":
                # easier inits weighted up so goal-reaching is well covered
                choices = ["even", "random", "room-1", "room-2", "room-3",
                           "room-4", "room-3", "room-4"]
                init = choices[int(rng.integers(len(choices)))]
            self.world = sim.reset(task, n, init, seed=episode_seed)
            h = task_model.dims.hidden_dim
            self.hiddens = np.zeros((n, h))
            self.task_emb = np.zeros(task_model.dims.emb_dim)
            mode = "vanilla" if self.baseline == "vanilla" else "staged"
            self.reward_spec = sim.RewardSpec(mode=mode, collision_penalty=-0.25)
            self.active_state = None
            self.cap = config.episode_cap
        self.task_model = task_model
        self.alphabet = task.dfa.alphabet
        self.prev_own_bits = np.zeros((n, len(self.alphabet) - 1))
        self.ticks = 0
        self.total_reward = 0.0
        self.completed = False

    def observe_team(self):
        if getattr(self, "_obs_tick", None) == self.world.tick:
            return self._obs_cache
        n = self.world.n_robots
        adj = sim.comm_graph(self.world)
        own_bits = np.stack([sim.sensed_event_bits(self.world, r, self.alphabet)
                             for r in range(n)])
        shared = adj.astype(np.float64) @ self.prev_own_bits
        agg = np.maximum(own_bits, np.minimum(shared, 1.0))
        if self.baseline == "none":
            self.hiddens = advance_hidden(self.task_model, self.hiddens, agg,
                                          self.task_emb)
        self.prev_own_bits = own_bits
        obs = np.stack([sim.observe(self.world, r, event_bits=agg[r])
                        for r in range(n)])
        self._obs_tick = self.world.tick
        self._obs_cache = (obs, adj)
        return obs, adj

    def step(self, actions):
        """Returns (rewards, finished, terminal); finished covers truncation."""
        self.world, _, rewards, events, done = sim.step(
            self.world, actions, self.reward_spec)
        self.ticks += 1
        if self.baseline == "none":
            if self.active_state is not None \
                    and self.world.dfa_state != self.active_state:
                self.completed = True
                done = True
            elif automata.is_accepting(self.task.dfa, self.active_state) \
                    and sim.spatial_complete(self.world):
                # terminal spatial condition of an absorbing sub-task
                rewards = rewards + self.reward_spec.event_bonus
                self.completed = True
                done = True
        else:
            if done or sim.spatial_complete(self.world):
                rewards = rewards + self.reward_spec.event_bonus
                self.completed = True
                done = True
        self.total_reward += float(rewards.mean())
        truncated = self.ticks >= self.cap
        return rewards, done or truncated, done


# --- PPO update ---------------------------------------------------------------

def _team_backward(params, dims, fwd, dmean, dvalue):
    """Gradients of the team forward pass given dL/dmean and dL/dvalue."""
    f = dims.feat_dim
    phi, pooled, u, hv = fwd["phi"], fwd["pooled"], fwd["u"], fwd["hv"]
    obs, adj, hidden = fwd["obs"], fwd["adj"], fwd["hidden"]
    norm = fwd["norm"]
    n_team = phi.shape[1]
    grads = {}
    trunk_in = np.concatenate([phi, pooled, hidden], axis=2)
    grads["W_act"] = np.einsum("bnd,bnf->df", dmean, u)
    grads["b_act"] = dmean.sum(axis=(0, 1))
    du = dmean @ params["W_act"]
    du_pre = du * (1.0 - u * u)
    grads["W_trunk"] = np.einsum("bnf,bng->fg", du_pre, trunk_in)
    grads["b_trunk"] = du_pre.sum(axis=(0, 1))
    dtrunk_in = du_pre @ params["W_trunk"]
    dphi = dtrunk_in[..., :f].copy()
    dpooled = dtrunk_in[..., f:2 * f].copy()

    team_b = np.broadcast_to(fwd["team"], phi.shape)
    val_in = np.concatenate([phi, pooled, hidden, team_b], axis=2)
    grads["W_val2"] = np.einsum("bn,bnf->f", dvalue, hv)[None, :]
    grads["b_val2"] = np.array([dvalue.sum()])
    dhv = dvalue[..., None] * params["W_val2"][0]
    dhv_pre = dhv * (1.0 - hv * hv)
    grads["W_val1"] = np.einsum("bnf,bng->fg", dhv_pre, val_in)
    grads["b_val1"] = dhv_pre.sum(axis=(0, 1))
    dval_in = dhv_pre @ params["W_val1"]
    dphi += dval_in[..., :f]
    dpooled += dval_in[..., f:2 * f]
    dteam = dval_in[..., -f:].sum(axis=1, keepdims=True)
    dphi += dteam / n_team

    dphi += adj.transpose(0, 2, 1).astype(np.float64) @ (dpooled * norm)
    dphi_pre = dphi * (1.0 - phi * phi)
    grads["W_enc"] = np.einsum("bnf,bno->fo", dphi_pre, obs)
    grads["b_enc"] = dphi_pre.sum(axis=(0, 1))
    return grads


def ppo_update(policy, buffer, config, update_rng, adam):
    """Clipped-surrogate update over the collected tick buffer."""
    params = policy.params
    obs, adj, hid = buffer["obs"], buffer["adj"], buffer["hidden"]
    actions, logp_old = buffer["actions"], buffer["logp"]
    adv, returns = buffer["advantages"], buffer["returns"]
    t_total = obs.shape[0]
    stats = {"pg_loss": 0.0, "v_loss": 0.0, "entropy": 0.0, "batches": 0}
    for _ in range(config.update_epochs):
        order = update_rng.permutation(t_total)
        for start in range(0, t_total, config.minibatch_ticks):
            mb = order[start:start + config.minibatch_ticks]
            fwd = forward_team(params, policy.dims, obs[mb], adj[mb], hid[mb])
            mean = fwd["mean"]
            log_std = params["log_std"]
            std = np.exp(log_std)
            logp = gaussian_log_prob(actions[mb], mean, log_std)
            ratio = np.exp(np.clip(logp - logp_old[mb], -20.0, 20.0))
            a_norm = normalize_advantages(adv[mb])
            surr1 = ratio * a_norm
            surr2 = np.clip(ratio, 1 - config.clip, 1 + config.clip) * a_norm
            count = ratio.size
            pg_loss = -np.minimum(surr1, surr2).mean()
            unclipped = (surr1 <= surr2).astype(np.float64)
            dlogp = -(unclipped * a_norm * ratio) / count

            value = fwd["value"]
            v_err = value - returns[mb]
            v_loss = float((v_err * v_err).mean())
            dvalue = config.value_coef * 2.0 * v_err / v_err.size

            z = (actions[mb] - mean) / std
            dmean = dlogp[..., None] * z / std
            entropy = float((log_std + 0.5 * np.log(2 * np.pi * np.e)).sum())
            grads = _team_backward(params, policy.dims, fwd, dmean, dvalue)
            grads["log_std"] = ((dlogp[..., None] * (z * z - 1.0)).sum(axis=(0, 1))
                                - config.entropy_coef)

            grad_norm = clip_gradients(grads, config.grad_clip)
            loss_probe = pg_loss + config.value_coef * v_loss
            if not np.isfinite(loss_probe) or not np.isfinite(grad_norm):
                raise TrainingDivergedError(
                    "non-finite PPO loss", diagnostics={
                        "pg_loss": pg_loss, "v_loss": v_loss,
                        "grad_norm": grad_norm})
            adam.update(params, grads, config.lr)
            stats["pg_loss"] += pg_loss
            stats["v_loss"] += v_loss
            stats["entropy"] += entropy
            stats["batches"] += 1
    for key in ("pg_loss", "v_loss", "entropy"):
        stats[key] /= max(stats["batches"], 1)
    return stats


def _gae(rewards, values, last_value, gamma, lam):
    t = len(rewards)
    adv = np.zeros((t,) + rewards[0].shape)
    running = np.zeros_like(rewards[0])
    for k in range(t - 1, -1, -1):
        next_v = values[k + 1] if k + 1 < t else last_value
        delta = rewards[k] + gamma * next_v - values[k]
        running = delta + gamma * lam * running
        adv[k] = running
    returns = adv + np.stack(values[:t])
    return adv, returns


def mappo_train(task_model, tasks, config: MappoConfig = MappoConfig()):
    """Train the shared policy; returns (PolicyModel, learning curve rows).

    The task model stays frozen throughout; baselines use the same
    architecture with zeroed conditioning.
    """
    tasks = list(tasks)
    if not tasks:
        raise InvalidArgumentError("need at least one task")
    n_events = len(tasks[0].dfa.alphabet) - 1
    dims = PolicyDims(obs_dim=sim.obs_dim(n_events),
                      hidden_dim=task_model.dims.hidden_dim)
    policy = new_policy(dims, seed=config.seed)
    adam = AdamState(policy.params)
    curve = []
    frames = 0
    update_idx = 0
    episode_counter = 0
    rng = rng_for(config.seed, "mappo")
    runner = None
    recent_returns, recent_success = [], []
    while frames < config.frames_budget:
        rows = {"obs": [], "adj": [], "hidden": [], "actions": [], "logp": [],
                "value": [], "reward": []}
        seg_bounds = []
        t_in_rollout = 0

        def bootstrap_value(active_runner):
            b_obs, b_adj = active_runner.observe_team()
            fwd = forward_team(policy.params, policy.dims, b_obs[None],
                               b_adj[None], active_runner.hiddens[None])
            return fwd["value"][0]

        while t_in_rollout * config.n_robots < config.rollout_frames:
            if runner is None:
                episode_counter += 1
                runner = _SegmentRunner(
                    task_model, tasks, config,
                    child_seed(config.seed, "episode", episode_counter), rng)
            obs, adj = runner.observe_team()
            actions, logp, values, _ = act_batch(
                policy, obs, adj, runner.hiddens, mode="sample", rng=rng)
            hidden_used = runner.hiddens.copy()
            rewards, finished, terminal = runner.step(actions)
            rows["obs"].append(obs)
            rows["adj"].append(adj)
            rows["hidden"].append(hidden_used)
            rows["actions"].append(actions)
            rows["logp"].append(logp)
            rows["value"].append(values)
            rows["reward"].append(rewards)
            t_in_rollout += 1
            if finished:
                recent_returns.append(runner.total_reward)
                recent_success.append(1.0 if runner.completed else 0.0)
                last = (np.zeros(config.n_robots) if terminal
                        else bootstrap_value(runner))
                seg_bounds.append((t_in_rollout, last))
                runner = None
        if runner is not None:
            seg_bounds.append((t_in_rollout, bootstrap_value(runner)))
        frames += t_in_rollout * config.n_robots

        advantages = np.zeros((t_in_rollout, config.n_robots))
        returns = np.zeros_like(advantages)
        start = 0
        for end, last_value in seg_bounds:
            adv, ret = _gae(rows["reward"][start:end], rows["value"][start:end],
                            last_value, config.gamma, config.gae_lambda)
            advantages[start:end] = adv
            returns[start:end] = ret
            start = end

        buffer = {
            "obs": np.stack(rows["obs"]),
            "adj": np.stack(rows["adj"]),
            "hidden": np.stack(rows["hidden"]),
            "actions": np.stack(rows["actions"]),
            "logp": np.stack(rows["logp"]),
            "advantages": advantages,
            "returns": returns,
        }
        update_rng = rng_for(config.seed, "update", update_idx)
        stats = ppo_update(policy, buffer, config, update_rng, adam)
        update_idx += 1
        row = {"update": update_idx, "frames": frames,
               "mean_return": float(np.mean(recent_returns[-40:] or [0.0])),
               "success_rate": float(np.mean(recent_success[-40:] or [0.0])),
               **{k: float(v) for k, v in stats.items() if k != "batches"}}
        if config.eval_every and update_idx % config.eval_every == 0:
            row["eval"] = evaluate_policy(policy, task_model, tasks[0], config,
                                          episodes=config.eval_episodes,
                                          seed=child_seed(config.seed, "probe",
                                                          update_idx))
        curve.append(row)
    return policy, curve


def evaluate_policy(policy, task_model, task, config, episodes: int = 10,
                    seed: int = 0, init_mode: str | None = None,
                    n_robots: int | None = None, tick_cap: int | None = None,
                    init_state: str | None = None,
                    init_states: list | None = None):
    """Full-episode evaluation with deterministic (mean) actions.

    For the conditioned policy, robots start from the task start state of
    their local models, from ``init_state``, or per robot from ``init_states``
    (a list of sub-task names whose descriptions are paraphrase-sampled and
    fed through the language initializer, the way an operator would brief each
    robot). Baselines run unconditioned. Returns mean rooms found (switch
    registrations), completion rate and completion time.
    """
    n = n_robots or config.n_robots
    cap = tick_cap or config.episode_cap
    family = task.scenario.task_family
    if init_mode is None:
        init_mode = "even" if family == "multi-room" else "random"
    rooms, completed, comp_ticks = [], [], []
    for ep in range(episodes):
        ep_seed = child_seed(seed, "eval", ep)
        world = sim.reset(task, n, init_mode, seed=ep_seed)
        rng = rng_for(ep_seed, "eval-run")
        if config.baseline == "none":
            if init_states is not None:
                command = sample_paraphrase(task.command_text, rng)
                task_emb = embed_sentence(command).values
                hiddens = np.empty((n, task_model.dims.hidden_dim))
                for r in range(n):
                    text = sample_paraphrase(
                        task.subtask_texts[init_states[r]], rng)
                    hiddens[r] = init_hidden(task_model, task_emb,
                                             embed_sentence(text).values)
            else:
                hiddens, task_emb = conditioned_hiddens(
                    task_model, task, init_state or task.dfa.initial, n, rng,
                    1.0)
        else:
            hiddens = np.zeros((n, task_model.dims.hidden_dim))
            task_emb = np.zeros(task_model.dims.emb_dim)
        alphabet = task.dfa.alphabet
        prev_bits = np.zeros((n, len(alphabet) - 1))
        done = False
        tick = 0
        while not done and tick < cap:
            adj = sim.comm_graph(world)
            own = np.stack([sim.sensed_event_bits(world, r, alphabet)
                            for r in range(n)])
            agg = np.maximum(own, np.minimum(adj.astype(np.float64) @ prev_bits,
                                             1.0))
            if config.baseline == "none":
                hiddens = advance_hidden(task_model, hiddens, agg, task_emb)
            prev_bits = own
            obs = np.stack([sim.observe(world, r, event_bits=agg[r])
                            for r in range(n)])
            actions, _, _, _ = act_batch(policy, obs, adj, hiddens, mode="mean")
            world, _, _, _, done = sim.step(world, actions)
            if not done and sim.spatial_complete(world):
                done = True   # completion is spatial for method comparisons
            tick += 1
        rooms.append(float(sum(world.switches_registered)))
        completed.append(1.0 if done else 0.0)
        if done:
            comp_ticks.append(tick)
    return {"rooms_found": float(np.mean(rooms)),
            "completion_rate": float(np.mean(completed)),
            "mean_completion_ticks": float(np.mean(comp_ticks)) if comp_ticks
            else None}
