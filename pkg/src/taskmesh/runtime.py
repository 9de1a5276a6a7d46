"""Decentralized execution: per-robot model copies, event sharing, tick loop.

Each robot owns a local hidden state and steps it from locally available
information only: events it senses plus events relayed by neighbors. Relayed
events are instance-keyed (event, origin tick) and flood one hop per tick with
deduplication, so a disruption reaches every connected robot within graph
diameter + 1 ticks and waves terminate. The per-tick order is fixed: observe,
aggregate, advance the local model, act.

Episode logs are append-only, tick-monotone, serialize as line-delimited JSON
with a version header, and replay exactly through the simulator.
"""

from dataclasses import dataclass, field
import json
import time

import numpy as np

from . import sim
from .errors import IntegrityError, InvalidArgumentError, SchemaVersionError
from .policy.model import act, aggregate_events
from .rnn.model import advance_hidden, decode_state, init_hidden
from .seeding import child_seed
from .taskgen.embedding import embed_sentence

_LOG_SCHEMA = "episodelog/v1"


@dataclass
class RobotRuntime:
    """One robot's local execution state."""

    index: int
    hidden: np.ndarray
    task_emb: np.ndarray
    last_shared: list = field(default_factory=list)   # instances fed last tick
    seen: set = field(default_factory=set)


@dataclass
class TickRecord:
    tick: int
    world: object
    decoded_subtasks: list[str]
    confidences: list[float]
    actions: np.ndarray
    events: list
    rewards: np.ndarray
    comm_edges: list[tuple[int, int]]
    loop_latency_us: list[float]
    target_distances: list[float] = None


def bare_subtask(label: str) -> str:
    """Strip the task prefix from a global label name."""
    _, sep, state = label.partition(": ")
    return state if sep else label


@dataclass
class EpisodeLog:
    n_robots: int
    seed: int
    command_text: str
    records: list[TickRecord] = field(default_factory=list)

    def append(self, rec: TickRecord):
        if self.records and rec.tick <= self.records[-1].tick:
            raise InvalidArgumentError("tick records must be monotone")
        self.records.append(rec)


def _instance_keys(world, robot, alphabet):
    """Instance keys (event, origin tick) sensed by a robot this tick."""
    own = world.positions[robot]
    sensing = world.layout.sensing_radius
    keys = []
    for inst in world.pending_events:
        if inst.event not in alphabet:
            continue
        if inst.pos is not None:
            if float(np.linalg.norm(np.asarray(inst.pos) - own)) > sensing:
                continue
        keys.append((inst.event, inst.tick))
    return keys


def _bits_for(alphabet, events):
    bits = np.zeros(len(alphabet) - 1)
    for event in events:
        idx = alphabet.index(event)
        if idx > 0:
            bits[idx - 1] = 1.0
    return bits


class EpisodeDriver:
    """Steps one decentralized episode tick by tick.

    Shared by the batch runner and the operator console backend; the console
    injects disruptions between ticks through :meth:`inject`.
    """

    def __init__(self, task, task_model, policy, *, n_robots: int = 3,
                 command_text: str | None = None, init_mode: str = "random",
                 init_subtasks: dict[int, str] | None = None, seed: int = 0,
                 use_task_model: bool = True, action_mode: str = "mean",
                 collect_rewards: bool = False, positions=None):
        self.task = task
        self.task_model = task_model
        self.policy = policy
        self.command_text = command_text or task.command_text
        self.seed = seed
        self.use_task_model = use_task_model
        self.action_mode = action_mode
        self.world = sim.reset(task, n_robots, init_mode, seed=seed,
                               positions=positions)
        self.alphabet = task.dfa.alphabet
        self.reward_spec = sim.RewardSpec() if collect_rewards else None
        task_emb = embed_sentence(self.command_text).values
        init_subtasks = init_subtasks or {}
        self.robots = []
        for r in range(n_robots):
            if use_task_model:
                if r in init_subtasks:
                    sub = embed_sentence(init_subtasks[r]).values
                    hidden = init_hidden(task_model, task_emb, sub)
                else:
                    hidden = init_hidden(task_model, task_emb)
            else:
                hidden = np.zeros(task_model.dims.hidden_dim)
            self.robots.append(RobotRuntime(index=r, hidden=hidden,
                                            task_emb=task_emb))
        self.log = EpisodeLog(n_robots=n_robots, seed=seed,
                              command_text=self.command_text)
        self.done = False

    def inject(self, event: str | None = None, displacement: dict | None = None):
        self.world = sim.inject_event(self.world, event=event,
                                      displacement=displacement)

    def tick(self) -> TickRecord:
        """One synchronized round: observe, aggregate, advance, act, simulate."""
        world = self.world
        n = world.n_robots
        adj = sim.comm_graph(world)
        inboxes = [[] for _ in range(n)]
        for r in range(n):
            for nb in np.nonzero(adj[r])[0]:
                inboxes[r].extend(self.robots[nb].last_shared)
        actions = np.zeros((n, 2))
        decoded, confidences, latencies = [], [], []
        fresh_per_robot = []
        for r, runtime in enumerate(self.robots):
            sensed_new = [k for k in _instance_keys(world, r, self.alphabet)
                          if k not in runtime.seen]
            runtime.seen.update(sensed_new)
            relayed_new = [k for k in inboxes[r] if k not in runtime.seen]
            runtime.seen.update(relayed_new)
            fresh_per_robot.append(sensed_new + relayed_new)
            agg = aggregate_events(
                _bits_for(self.alphabet, [e for e, _ in sensed_new]),
                [_bits_for(self.alphabet, [e for e, _ in relayed_new])])
            neighbor_obs = [sim.observe(world, int(nb))
                            for nb in np.nonzero(adj[r])[0]]
            obs_vec = sim.observe(world, r, event_bits=agg)
            started = time.perf_counter()
            if self.use_task_model:
                runtime.hidden = advance_hidden(
                    self.task_model, runtime.hidden[None], agg[None],
                    runtime.task_emb[None])[0]
            action = act(self.policy, obs_vec, neighbor_obs, runtime.hidden,
                         mode=self.action_mode,
                         seed=child_seed(self.seed, "act", world.tick, r))
            latencies.append((time.perf_counter() - started) * 1e6)
            actions[r] = action
            if self.use_task_model:
                probs = decode_state(self.task_model, runtime.hidden)
                decoded.append(self.task_model.label_names[int(np.argmax(probs))])
                confidences.append(float(np.max(probs)))
            else:
                decoded.append("")
                confidences.append(0.0)
        for r, runtime in enumerate(self.robots):
            runtime.last_shared = fresh_per_robot[r]
        self.world, _, rewards, events, done = sim.step(world, actions,
                                                        self.reward_spec)
        if not done and not self.use_task_model \
                and sim.spatial_complete(self.world):
            done = True
        self.done = done
        target_distances = []
        for r in range(n):
            target = None
            if self.use_task_model and decoded[r]:
                target = sim.subtask_target(self.world, bare_subtask(decoded[r]), r)
            if target is None:
                target_distances.append(float("nan"))
            else:
                target_distances.append(float(np.linalg.norm(
                    self.world.positions[r] - np.asarray(target))))
        rec = TickRecord(
            tick=self.world.tick, world=self.world, decoded_subtasks=decoded,
            confidences=confidences, actions=actions.copy(), events=list(events),
            rewards=np.asarray(rewards, dtype=np.float64).copy(),
            comm_edges=[(int(i), int(j)) for i, j in zip(*np.nonzero(adj))
                        if i < j],
            loop_latency_us=latencies, target_distances=target_distances)
        self.log.append(rec)
        return rec


def run_episode(task, task_model, policy, *, n_robots: int = 3,
                command_text: str | None = None, init_mode: str = "random",
                init_subtasks: dict[int, str] | None = None,
                disruptions=None, seed: int = 0, tick_cap: int = 400,
                use_task_model: bool = True, action_mode: str = "mean",
                collect_rewards: bool = False, positions=None) -> EpisodeLog:
    """Run one decentralized episode and return its log.

    ``init_subtasks`` maps robot index to a natural-language sub-task
    description used to initialize that robot's local model. ``disruptions``
    is a list of (tick, spec) where spec is an event name or
    {"robot": r, "pos": (x, y)}. Deterministic under seed.
    """
    driver = EpisodeDriver(task, task_model, policy, n_robots=n_robots,
                           command_text=command_text, init_mode=init_mode,
                           init_subtasks=init_subtasks, seed=seed,
                           use_task_model=use_task_model,
                           action_mode=action_mode,
                           collect_rewards=collect_rewards,
                           positions=positions)
    disruptions = list(disruptions or [])
    while not driver.done and driver.world.tick < tick_cap:
        for when, spec in disruptions:
            if when == driver.world.tick:
                if isinstance(spec, str):
                    driver.inject(event=spec)
                else:
                    driver.inject(displacement={"robot": spec["robot"],
                                                "pos": spec["pos"]})
        driver.tick()
    return driver.log


def benchmark(task, task_model, policy, n_values, repetitions: int = 3,
              seed: int = 0, tick_cap: int = 400) -> dict:
    """Per-team-size latency, completion rate and completion time.

    Latency counts only model inference (local model advance + policy act),
    not simulation, averaged per robot per tick.
    """
    out = {}
    for n in n_values:
        lat, completed, ticks = [], [], []
        for rep in range(repetitions):
            log = run_episode(task, task_model, policy, n_robots=n,
                              seed=child_seed(seed, "bench", n, rep),
                              tick_cap=tick_cap)
            for rec in log.records:
                lat.extend(rec.loop_latency_us)
            done = log.records[-1].world.done if log.records else False
            completed.append(1.0 if done else 0.0)
            if done:
                ticks.append(log.records[-1].tick)
        out[n] = {
            "mean_latency_us": float(np.mean(lat)),
            "completion_rate": float(np.mean(completed)),
            "mean_completion_ticks": float(np.mean(ticks)) if ticks else None,
        }
    return out


# --- log serialization --------------------------------------------------------

def _world_snapshot(world) -> dict:
    return {
        "tick": world.tick,
        "positions": world.positions.tolist(),
        "velocities": world.velocities.tolist(),
        "flag_positions": [list(p) for p in world.flag_positions],
        "flag_carrier": {str(k): v for k, v in world.flag_carrier.items()},
        "flag_delivered": list(world.flag_delivered),
        "flag_collected": list(world.flag_collected),
        "switches_registered": list(world.switches_registered),
        "gates_open": list(world.gates_open),
        "targets_found": list(world.targets_found),
        "dfa_state": world.dfa_state,
        "done": world.done,
    }


def save_log(log: EpisodeLog, path) -> None:
    with open(path, "w") as fh:
        layout_json = None
        family = None
        if log.records:
            world = log.records[0].world
            layout_json = json.loads(world.layout.to_json())
            if world.task.scenario is not None:
                family = world.task.scenario.task_family
        fh.write(json.dumps({"schema": _LOG_SCHEMA, "n_robots": log.n_robots,
                             "seed": log.seed, "command": log.command_text,
                             "family": family, "layout": layout_json,
                             "count": len(log.records)}) + "\n")
        for rec in log.records:
            fh.write(json.dumps({
                "tick": rec.tick,
                "world": _world_snapshot(rec.world),
                "decoded": rec.decoded_subtasks,
                "confidence": rec.confidences,
                "actions": rec.actions.tolist(),
                "events": [[e.event, list(e.pos) if e.pos else None, e.tick]
                           for e in rec.events],
                "rewards": rec.rewards.tolist(),
                "comm_edges": [list(e) for e in rec.comm_edges],
                "latency_us": rec.loop_latency_us,
                "target_distances": rec.target_distances,
            }) + "\n")


def load_log_rows(path) -> tuple[dict, list[dict]]:
    """Raw header + rows; full WorldState objects are not reconstructed."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise IntegrityError("empty log file")
    header = json.loads(lines[0])
    if header.get("schema") != _LOG_SCHEMA:
        raise SchemaVersionError(f"unsupported log schema {header.get('schema')!r}")
    if header["count"] != len(lines) - 1:
        raise IntegrityError(f"expected {header['count']} records, found "
                             f"{len(lines) - 1}")
    return header, [json.loads(line) for line in lines[1:]]
