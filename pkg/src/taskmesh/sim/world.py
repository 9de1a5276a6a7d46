"""The 2D multi-robot world: kinematics, events, rewards, communication.

Robots are velocity-controlled points with a speed cap; walls and closed gates
resolve by axis-separated clamp-and-slide. Events are emitted while their
condition holds (a pressed switch keeps announcing itself), which lets robots
that missed an event regenerate it by acting in the world; switches in the
multi-room family only register in index order. A ground-truth automaton
tracker follows the emitted events, and an episode is done when the tracker
accepts and the family's terminal spatial condition holds.

Observations contain only within-sensing-radius world state plus the robot's
own pose and mission briefing (its assigned goal slot and the base location).

``step`` is pure: it returns a new world and never mutates its input.
"""

from dataclasses import dataclass, field, replace
import copy

import numpy as np

from .. import automata
from ..errors import InvalidArgumentError
from ..seeding import rng_for
from ..taskgen.scenarios import COLORS
from .layouts import DT, MAX_SPEED, ROBOT_RADIUS, Layout, Rect, layout_for

_ENEMY_PERIOD = 90
_ENEMY_WINDOW = (30, 70)
TOUCH_RADIUS = 0.3


@dataclass(frozen=True)
class EventInstance:
    event: str
    pos: tuple[float, float] | None   # None = heard everywhere
    tick: int


@dataclass
class RewardSpec:
    """Shaping terms for one (task, sub-task) pairing.

    mode "subtask" shapes progress toward the active sub-task's target,
    "vanilla" toward each robot's goal only, and "staged" toward a hand-staged
    env-derived target. Completion bonuses pay at most once per robot per event.
    """

    mode: str = "subtask"
    active_subtask: str | None = None
    progress_coef: float = 1.0
    event_bonus: float = 10.0
    collision_penalty: float = -1.0
    time_penalty: float = -0.01
    gamma: float = 0.99


@dataclass
class WorldState:
    task: object                 # TaskSpec
    layout: Layout
    n_robots: int
    seed: int
    tick: int = 0
    positions: np.ndarray = None
    velocities: np.ndarray = None
    flag_carrier: dict = field(default_factory=dict)    # flag idx -> robot idx
    flag_positions: list = field(default_factory=list)
    flag_delivered: list = field(default_factory=list)
    flag_collected: list = field(default_factory=list)
    switches_registered: list = field(default_factory=list)
    gates_open: list = field(default_factory=list)
    targets_found: list = field(default_factory=list)
    enemy_present: bool = False
    enemy_pos: tuple | None = None
    dfa_state: str = ""
    pending_events: list = field(default_factory=list)
    bonus_paid: set = field(default_factory=set)
    done: bool = False

    @property
    def carried_flags(self) -> dict:
        """robot index -> flag index (inverse of flag_carrier)."""
        return {r: f for f, r in self.flag_carrier.items()}

    def copy(self) -> "WorldState":
        out = copy.copy(self)
        out.positions = self.positions.copy()
        out.velocities = self.velocities.copy()
        out.flag_carrier = dict(self.flag_carrier)
        out.flag_positions = [tuple(p) for p in self.flag_positions]
        out.flag_delivered = list(self.flag_delivered)
        out.flag_collected = list(self.flag_collected)
        out.switches_registered = list(self.switches_registered)
        out.gates_open = list(self.gates_open)
        out.targets_found = list(self.targets_found)
        out.pending_events = list(self.pending_events)
        out.bonus_paid = set(self.bonus_paid)
        return out


# --- geometry ----------------------------------------------------------------

def _solid_rects(world: WorldState) -> list[Rect]:
    solids = list(world.layout.walls)
    for gate in world.layout.gates:
        if not world.gates_open[gate.index]:
            solids.append(gate.rect)
    return solids


def _move_point(p, delta, solids, width, height):
    """Axis-separated move with clamp-and-slide against inflated rectangles."""
    pad = ROBOT_RADIUS
    q = np.array(p, dtype=np.float64)
    for axis in (0, 1):
        trial = q.copy()
        trial[axis] += delta[axis]
        trial[0] = np.clip(trial[0], pad, width - pad)
        trial[1] = np.clip(trial[1], pad, height - pad)
        if not any(r.contains(trial, pad=pad) for r in solids):
            q = trial
    return q


def segment_hits_rect(p, q, rect: Rect, pad: float = 0.0) -> bool:
    """Liang-Barsky: does segment p→q pass through the (padded) rectangle?"""
    x0, y0, x1, y1 = rect.x0 - pad, rect.y0 - pad, rect.x1 + pad, rect.y1 + pad
    dx, dy = q[0] - p[0], q[1] - p[1]
    t0, t1 = 0.0, 1.0
    for delta, lo, hi, start in ((dx, x0, x1, p[0]), (dy, y0, y1, p[1])):
        if abs(delta) < 1e-12:
            if start < lo or start > hi:
                return False
            continue
        ta = (lo - start) / delta
        tb = (hi - start) / delta
        ta, tb = min(ta, tb), max(ta, tb)
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return False
    return True


def _route(world: WorldState, p, q):
    """Shortest wall-respecting route p→q via doorway waypoints.

    Returns (distance, next_node). Gates count as passable for distance
    purposes (the doorway is where a blocked robot should wait), so shaping
    toward a target behind a closed door pulls robots to the door, not through
    the wall. Unreachable targets fall back to euclidean plus a constant.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    walls = world.layout.walls
    if not walls:
        return float(np.linalg.norm(q - p)), q
    nodes = [p, q] + [g.rect.center for g in world.layout.gates]
    n = len(nodes)
    dist = np.full((n, n), np.inf)
    for i in range(n):
        dist[i, i] = 0.0
        for j in range(i + 1, n):
            blocked = any(segment_hits_rect(nodes[i], nodes[j], w,
                                            pad=ROBOT_RADIUS * 0.5)
                          for w in walls)
            if not blocked:
                d = float(np.linalg.norm(nodes[i] - nodes[j]))
                dist[i, j] = dist[j, i] = d
    nxt = np.tile(np.arange(n), (n, 1))
    for k in range(n):
        via = dist[:, k:k + 1] + dist[k:k + 1, :]
        better = via < dist
        dist = np.where(better, via, dist)
        nxt = np.where(better, np.broadcast_to(nxt[:, k:k + 1], nxt.shape), nxt)
    if not np.isfinite(dist[0, 1]):
        return float(np.linalg.norm(q - p) + 4.0), q
    hop = int(nxt[0, 1])
    return float(dist[0, 1]), nodes[hop]


def shaped_distance(world: WorldState, p, q) -> float:
    """Distance from p to q routed around walls through doorway waypoints."""
    return _route(world, p, q)[0]


def route_direction(world: WorldState, robot: int, target) -> np.ndarray:
    """Unit velocity command toward the target along the doorway route."""
    _, waypoint = _route(world, world.positions[robot], target)
    d = np.asarray(waypoint, dtype=np.float64) - world.positions[robot]
    nrm = float(np.linalg.norm(d))
    if nrm < 1e-9:
        return np.zeros(2)
    return d / nrm


# --- reset -------------------------------------------------------------------

def reset(task, n_robots: int, init_mode: str = "random", seed: int = 0,
          layout: Layout | None = None, positions=None) -> WorldState:
    """A fresh world; deterministic under seed. Raises on infeasible layouts."""
    if n_robots < 1:
        raise InvalidArgumentError("need at least one robot")
    layout = layout or layout_for(task, n_robots)
    if len(layout.goals) < n_robots:
        raise InvalidArgumentError(f"layout provides {len(layout.goals)} goal "
                                   f"slots for {n_robots} robots")
    for i, w1 in enumerate(layout.walls):
        for g in layout.goals[:n_robots]:
            if w1.contains(g, pad=ROBOT_RADIUS):
                raise InvalidArgumentError("goal slot inside a wall")
    world = WorldState(task=task, layout=layout, n_robots=n_robots, seed=seed)
    world.positions = _spawn_positions(layout, n_robots, init_mode, seed, positions)
    world.velocities = np.zeros((n_robots, 2))
    world.flag_positions = [tuple(f.pos) for f in layout.flags]
    world.flag_delivered = [False] * len(layout.flags)
    world.flag_collected = [False] * len(layout.flags)
    world.switches_registered = [False] * len(layout.switches)
    world.gates_open = [False] * len(layout.gates)
    world.targets_found = [False] * len(layout.targets)
    world.dfa_state = task.dfa.initial
    return world


def _spawn_positions(layout, n, init_mode, seed, positions):
    rng = rng_for(seed, "spawn", init_mode)
    if positions is not None:
        pts = np.array(positions, dtype=np.float64)
        if pts.shape != (n, 2):
            raise InvalidArgumentError("positions must be (n_robots, 2)")
        return pts
    if init_mode == "goals":
        return np.array(layout.goals[:n], dtype=np.float64)
    placed = []
    if init_mode.startswith("room-"):
        idx = int(init_mode.split("-")[1]) - 1
        if not layout.rooms or not 0 <= idx < len(layout.rooms):
            raise InvalidArgumentError(f"layout has no room {init_mode!r}")
        for _ in range(n):
            placed.append(sample_free_position(layout, layout.rooms[idx], rng,
                                               keep_clear=placed))
        return np.stack(placed)
    if init_mode == "even":
        if not layout.rooms:
            raise InvalidArgumentError("even spread needs a room layout")
        usable = layout.rooms[:-1] if len(layout.rooms) > 1 else layout.rooms
        for i in range(n):
            placed.append(sample_free_position(layout, usable[i % len(usable)],
                                               rng, keep_clear=placed))
        return np.stack(placed)
    if init_mode == "random":
        area = layout.spawn_area or Rect(0.3, 0.3, layout.width - 0.3,
                                         layout.height - 0.3)
        for _ in range(n):
            placed.append(sample_free_position(layout, area, rng,
                                               keep_clear=placed))
        return np.stack(placed)
    raise InvalidArgumentError(f"unknown init mode {init_mode!r}")


def sample_free_position(layout, area: Rect, rng, tries: int = 200,
                         keep_clear=()):
    pad = ROBOT_RADIUS
    min_sep = 4.0 * ROBOT_RADIUS
    for attempt in range(tries):
        p = np.array([rng.uniform(area.x0 + pad, area.x1 - pad),
                      rng.uniform(area.y0 + pad, area.y1 - pad)])
        if any(w.contains(p, pad=pad) for w in layout.walls):
            continue
        if any(g.rect.contains(p, pad=pad) for g in layout.gates):
            continue
        # relax the robot-separation requirement if the area is crowded
        if attempt < tries // 2 and any(
                np.linalg.norm(p - np.asarray(q)) < min_sep for q in keep_clear):
            continue
        return p
    raise InvalidArgumentError("could not place a robot in the requested area")


# --- observations ------------------------------------------------------------

def obs_dim(n_events: int) -> int:
    return 64 + n_events


def _rel(target, own, sensing):
    d = np.asarray(target, dtype=np.float64) - own
    if float(np.linalg.norm(d)) > sensing:
        return None
    return np.clip(d / sensing, -1.0, 1.0)


def _nearest(points, own, sensing):
    best, best_d = None, np.inf
    for p in points:
        d = float(np.linalg.norm(np.asarray(p) - own))
        if d <= sensing and d < best_d:
            best, best_d = p, d
    return best


def sensed_event_bits(world: WorldState, robot: int, alphabet) -> np.ndarray:
    """Own event bits: pending events within sensing radius (or global)."""
    bits = np.zeros(len(alphabet) - 1)
    own = world.positions[robot]
    sensing = world.layout.sensing_radius
    for inst in world.pending_events:
        if inst.pos is not None:
            if float(np.linalg.norm(np.asarray(inst.pos) - own)) > sensing:
                continue
        idx = alphabet.index(inst.event) if inst.event in alphabet else -1
        if idx > 0:
            bits[idx - 1] = 1.0
    return bits


def observe(world: WorldState, robot: int, event_bits=None) -> np.ndarray:
    """The robot's flat observation vector; see module docstring for scope."""
    lay = world.layout
    own = world.positions[robot]
    sensing = lay.sensing_radius
    alphabet = world.task.dfa.alphabet
    n_events = len(alphabet) - 1
    vec = np.zeros(obs_dim(n_events))
    vec[0:2] = world.velocities[robot] / MAX_SPEED
    vec[2] = own[0] / lay.width
    vec[3] = own[1] / lay.height

    def put_rel(offset, rel):
        if rel is not None:
            vec[offset:offset + 2] = rel
            vec[offset + 2] = 1.0

    # mission briefing: own goal slot and base are known regardless of range
    goal = np.asarray(lay.goals[robot])
    vec[4:6] = np.clip((goal - own) / sensing, -1.0, 1.0)
    vec[6] = 1.0
    if lay.base is not None:
        vec[7:9] = np.clip((np.asarray(lay.base) - own) / sensing, -1.0, 1.0)
        vec[9] = 1.0

    base_off = 10
    for c, color in enumerate(COLORS):
        pts = [world.flag_positions[i] for i, f in enumerate(lay.flags)
               if f.color == color]
        p = _nearest(pts, own, sensing)
        if p is not None:
            put_rel(base_off + 3 * c, _rel(p, own, sensing))
    sw_off = base_off + 15
    for c, color in enumerate(COLORS):
        pts = [s.pos for s in lay.switches if s.color == color]
        p = _nearest(pts, own, sensing)
        if p is not None:
            put_rel(sw_off + 3 * c, _rel(p, own, sensing))

    t_off = sw_off + 15
    unfound = [t for i, t in enumerate(lay.targets) if not world.targets_found[i]]
    p = _nearest(unfound, own, sensing)
    if p is not None:
        put_rel(t_off, _rel(p, own, sensing))
    vec[t_off + 3] = sum(1 for t in unfound
                         if float(np.linalg.norm(np.asarray(t) - own)) <= sensing) / 10.0

    # open and closed doorways are separate channels: "pass through" must
    # bind to open gates only, never to a wall that happens to have a door
    g_off = t_off + 4
    gates = [(g, float(np.linalg.norm(g.rect.center - own))) for g in lay.gates]
    gates = [(g, d) for g, d in gates if d <= sensing]
    open_gates = [(g, d) for g, d in gates if world.gates_open[g.index]]
    closed_gates = [(g, d) for g, d in gates if not world.gates_open[g.index]]
    if open_gates:
        gate, _ = min(open_gates, key=lambda gd: gd[1])
        vec[g_off:g_off + 2] = np.clip((gate.rect.center - own) / sensing, -1, 1)
        vec[g_off + 2] = 1.0
    if closed_gates:
        gate, _ = min(closed_gates, key=lambda gd: gd[1])
        vec[g_off + 3:g_off + 5] = np.clip((gate.rect.center - own) / sensing,
                                           -1, 1)
        vec[g_off + 5] = 1.0
    gb_off = g_off + 6
    for g in lay.gates[:3]:
        if float(np.linalg.norm(g.rect.center - own)) <= sensing:
            vec[gb_off + g.index] = 1.0 if world.gates_open[g.index] else -1.0

    vec[gb_off + 3] = 1.0 if robot in world.carried_flags else 0.0

    nb_off = gb_off + 4
    others = [world.positions[j] for j in range(world.n_robots) if j != robot]
    p = _nearest(others, own, sensing)
    if p is not None:
        put_rel(nb_off, _rel(p, own, sensing))

    b_off = nb_off + 3
    vec[b_off + 0] = min(own[0], sensing) / sensing
    vec[b_off + 1] = min(lay.width - own[0], sensing) / sensing
    vec[b_off + 2] = min(own[1], sensing) / sensing
    vec[b_off + 3] = min(lay.height - own[1], sensing) / sensing

    e_off = b_off + 4
    if world.enemy_present and world.enemy_pos is not None:
        put_rel(e_off, _rel(world.enemy_pos, own, sensing))

    ev_off = e_off + 3
    if event_bits is None:
        event_bits = sensed_event_bits(world, robot, alphabet)
    vec[ev_off:ev_off + n_events] = event_bits
    return vec


def observations(world: WorldState) -> list[np.ndarray]:
    return [observe(world, i) for i in range(world.n_robots)]


# --- communication -----------------------------------------------------------

def comm_graph(world: WorldState, comm_radius: float | None = None) -> np.ndarray:
    """Symmetric radius adjacency over robots, self-loops excluded."""
    radius = world.layout.comm_radius if comm_radius is None else comm_radius
    if radius <= 0:
        raise InvalidArgumentError("comm radius must be positive")
    diff = world.positions[:, None, :] - world.positions[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    adj = dist <= radius
    np.fill_diagonal(adj, False)
    return adj


def neighbors(world: WorldState, robot: int, comm_radius: float | None = None):
    return np.nonzero(comm_graph(world, comm_radius)[robot])[0].tolist()


# --- dynamics and events -----------------------------------------------------

def step(world: WorldState, joint_actions, reward_spec: RewardSpec | None = None):
    """Advance one tick.

    Returns (world', observations, rewards, events, done). Events are the
    instances emitted during this transition; they are also visible in
    world'.pending_events for observation building.
    """
    actions = np.asarray(joint_actions, dtype=np.float64)
    if actions.shape != (world.n_robots, 2):
        raise InvalidArgumentError(f"expected {(world.n_robots, 2)} actions, "
                                   f"got {actions.shape}")
    speeds = np.linalg.norm(actions, axis=1, keepdims=True)
    scale = np.where(speeds > MAX_SPEED, MAX_SPEED / np.maximum(speeds, 1e-9), 1.0)
    actions = actions * scale

    old = world
    new = world.copy()
    new.tick = old.tick + 1
    solids = _solid_rects(old)
    for i in range(new.n_robots):
        new.positions[i] = _move_point(old.positions[i], actions[i] * DT, solids,
                                       old.layout.width, old.layout.height)
    new.velocities = (new.positions - old.positions) / DT

    events = _detect_events(new)
    new.pending_events = events
    for inst in sorted(events, key=lambda e: e.event):
        if inst.event in new.task.dfa.alphabet:
            new.dfa_state = automata.step(new.task.dfa, new.dfa_state, inst.event)

    new.done = bool(automata.is_accepting(new.task.dfa, new.dfa_state)
                    and spatial_complete(new))

    rewards = np.zeros(new.n_robots)
    if reward_spec is not None:
        rewards = _rewards(old, new, reward_spec)
    obs = observations(new)
    return new, obs, rewards, events, new.done


def _detect_events(world: WorldState) -> list[EventInstance]:
    lay = world.layout
    family = world.task.scenario.task_family if world.task.scenario else ""
    out = {}

    def emit(name, pos):
        if name in world.task.dfa.alphabet and name not in out:
            out[name] = EventInstance(name, tuple(pos) if pos is not None else None,
                                      world.tick)

    # flags: pickup / ordered collection, carried flags travel with the carrier
    for fi, flag in enumerate(lay.flags):
        color_ev = flag.color.capitalize()
        if family == "retrieve-flag":
            carrier = world.flag_carrier.get(fi)
            if carrier is not None:
                world.flag_positions[fi] = tuple(world.positions[carrier])
                emit(color_ev, world.flag_positions[fi])
                switch = lay.switches[0]
                if np.linalg.norm(world.positions[carrier] -
                                  np.asarray(switch.pos)) <= switch.radius:
                    del world.flag_carrier[fi]
                    world.flag_delivered[fi] = True
                    world.flag_positions[fi] = tuple(switch.pos)
            elif world.flag_delivered[fi]:
                emit("Switch", lay.switches[0].pos)
            else:
                for r in range(world.n_robots):
                    if np.linalg.norm(world.positions[r] -
                                      np.asarray(world.flag_positions[fi])) <= TOUCH_RADIUS:
                        world.flag_carrier[fi] = r
                        emit(color_ev, world.flag_positions[fi])
                        break
        elif family == "flag-sequence":
            if world.flag_collected[fi]:
                emit(color_ev, world.flag_positions[fi])
            elif all(world.flag_collected[j] for j, f in enumerate(lay.flags)
                     if f.order < flag.order):
                for r in range(world.n_robots):
                    if np.linalg.norm(world.positions[r] -
                                      np.asarray(world.flag_positions[fi])) <= TOUCH_RADIUS:
                        world.flag_collected[fi] = True
                        emit(color_ev, world.flag_positions[fi])
                        break
        elif family == "defend-position":
            if world.flag_collected[fi]:
                emit("MissionFlagFound", world.flag_positions[fi])
            else:
                for r in range(world.n_robots):
                    if np.linalg.norm(world.positions[r] -
                                      np.asarray(world.flag_positions[fi])) <= TOUCH_RADIUS:
                        world.flag_collected[fi] = True
                        emit("MissionFlagFound", world.flag_positions[fi])
                        break

    # ordered switches (multi-room): register only in index order, re-announce
    # while occupied so late robots can regenerate missed events
    for s in lay.switches:
        if family == "retrieve-flag":
            break  # this family's switch registers through flag delivery
        occupied = any(np.linalg.norm(world.positions[r] - np.asarray(s.pos))
                       <= s.radius for r in range(world.n_robots))
        if not occupied:
            continue
        prior_ok = all(world.switches_registered[:s.index]) if s.ordered else True
        if prior_ok:
            world.switches_registered[s.index] = True
            emit(f"Switch{s.index + 1}", s.pos)

    # retrieve-flag delivery registers its switch too
    if family == "retrieve-flag" and any(world.flag_delivered):
        if lay.switches and not world.switches_registered[0]:
            world.switches_registered[0] = True
        emit("Switch", lay.switches[0].pos)

    # gates follow their switches
    for gate in lay.gates:
        if world.switches_registered[gate.index]:
            world.gates_open[gate.index] = True

    # search targets
    if lay.targets:
        for ti, t in enumerate(lay.targets):
            if not world.targets_found[ti]:
                for r in range(world.n_robots):
                    if np.linalg.norm(world.positions[r] - np.asarray(t)) \
                            <= lay.target_radius:
                        world.targets_found[ti] = True
                        break
        if all(world.targets_found):
            emit("AllTargetsFound", lay.targets[-1])
        if lay.base is not None and all(world.targets_found):
            at_base = all(np.linalg.norm(world.positions[r] - np.asarray(lay.base))
                          <= lay.base_radius for r in range(world.n_robots))
            if at_base:
                emit("FoundBase", lay.base)

    # scripted enemy (defend): edge-triggered appear/clear
    if family == "defend-position":
        phase = world.tick % _ENEMY_PERIOD
        present = _ENEMY_WINDOW[0] <= phase < _ENEMY_WINDOW[1]
        if present and not world.enemy_present:
            rng = rng_for(world.seed, "enemy", world.tick // _ENEMY_PERIOD)
            ang = rng.uniform(0, 2 * np.pi)
            anchor = np.asarray(lay.flags[0].pos)
            world.enemy_pos = tuple(np.clip(anchor + 1.2 * np.array(
                [np.cos(ang), np.sin(ang)]), 0.3, [lay.width - 0.3, lay.height - 0.3]))
            emit("EnemySpotted", world.enemy_pos)
        if not present and world.enemy_present:
            emit("EnemyCleared", world.enemy_pos)
            world.enemy_pos = None
        world.enemy_present = present

    return list(out.values())


def spatial_complete(world: WorldState) -> bool:
    """The family's terminal spatial condition.

    Multi-room demands every robot on its own goal slot; the flag families
    demand the whole team inside the goal region (the padded bounding box of
    the slots), which is what "reach your destinations" means when a dozen
    robots share the chamber; search demands the team back at base.
    """
    lay = world.layout
    family = world.task.scenario.task_family if world.task.scenario else ""
    if family == "defend-position":
        return False
    if family == "search-targets":
        if lay.base is None:
            return False
        return all(np.linalg.norm(world.positions[r] - np.asarray(lay.base))
                   <= lay.base_radius for r in range(world.n_robots))
    if family in ("retrieve-flag", "flag-sequence"):
        slots = np.asarray(lay.goals[:world.n_robots])
        pad = lay.goal_radius
        lo = slots.min(axis=0) - pad
        hi = slots.max(axis=0) + pad
        return bool(np.all((world.positions >= lo) & (world.positions <= hi)))
    return all(np.linalg.norm(world.positions[r] - np.asarray(lay.goals[r]))
               <= lay.goal_radius for r in range(world.n_robots))


# --- disruptions -------------------------------------------------------------

def inject_event(world: WorldState, event: str | None = None,
                 displacement: dict | None = None) -> WorldState:
    """Operator disruption: a named event or a robot teleport.

    'FlagLost' drops any carried flag back at its spawn point. The event is
    appended to pending_events at the subject's location so nearby robots
    sense it and relay it onward.
    """
    new = world.copy()
    if displacement is not None:
        robot = displacement["robot"]
        pos = np.asarray(displacement["pos"], dtype=np.float64)
        if not (0 <= robot < world.n_robots):
            raise InvalidArgumentError(f"no robot {robot}")
        pad = ROBOT_RADIUS
        if not (pad <= pos[0] <= world.layout.width - pad
                and pad <= pos[1] <= world.layout.height - pad):
            raise InvalidArgumentError("displacement outside arena bounds")
        new.positions[robot] = pos
        new.velocities[robot] = 0.0
        return new
    if event is None:
        raise InvalidArgumentError("must provide an event or a displacement")
    if event not in world.task.dfa.alphabet:
        raise InvalidArgumentError(f"event {event!r} not in the task alphabet")
    pos = None
    if event == "FlagLost":
        for fi, flag in enumerate(world.layout.flags):
            carrier = new.flag_carrier.get(fi)
            if carrier is not None:
                pos = tuple(new.positions[carrier])
                del new.flag_carrier[fi]
                new.flag_positions[fi] = tuple(flag.pos)
                # the loss falsifies this tick's "flag held" announcement;
                # robots must not consume both in the same aggregate
                stale = flag.color.capitalize()
                new.pending_events = [e for e in new.pending_events
                                      if e.event != stale]
                break
            if not new.flag_delivered[fi]:
                pos = new.flag_positions[fi]
    new.pending_events = list(new.pending_events)
    new.pending_events.append(EventInstance(event, pos, new.tick))
    new.dfa_state = automata.step(new.task.dfa, new.dfa_state, event)
    return new


# --- rewards -----------------------------------------------------------------

def subtask_target(world: WorldState, subtask: str, robot: int):
    """The spatial target a sub-task points a robot at, or None."""
    lay = world.layout
    name = subtask.lower()
    if "switch" in name and "navigate" not in name and "hit" in name:
        idx = int(name.split()[-1]) - 1
        return np.asarray(lay.switches[idx].pos)
    if "navigate to switch" in name:
        return np.asarray(lay.switches[0].pos)
    if name.startswith("find") and "flag" in name:
        color = name.split()[1]
        for fi, f in enumerate(lay.flags):
            if f.color == color:
                return np.asarray(world.flag_positions[fi])
        return None
    if "locate" in name and "flag" in name:
        return np.asarray(world.flag_positions[0]) if lay.flags else None
    if "defend" in name:
        return np.asarray(lay.flags[0].pos) if lay.flags else None
    if "search" in name and "target" in name:
        unfound = [t for i, t in enumerate(lay.targets) if not world.targets_found[i]]
        if unfound:
            own = world.positions[robot]
            return np.asarray(min(unfound,
                                  key=lambda t: np.linalg.norm(np.asarray(t) - own)))
        return np.asarray(lay.base) if lay.base is not None else None
    if "base" in name:
        return np.asarray(lay.base) if lay.base is not None else None
    if "goal" in name:
        return np.asarray(lay.goals[robot])
    return np.asarray(lay.goals[robot]) if lay.goals else None


def _staged_target(world: WorldState, robot: int):
    lay = world.layout
    family = world.task.scenario.task_family if world.task.scenario else ""
    if family == "multi-room":
        # hand-staged per robot: press the switch in your room, then advance
        # through the doorway to the next room, finally head for your goal
        x = world.positions[robot][0]
        room_idx = min(int(x // 2.0), len(lay.rooms) - 1) if lay.rooms else 0
        if room_idx < len(lay.switches):
            switch = lay.switches[room_idx]
            if not world.switches_registered[switch.index]:
                return np.asarray(switch.pos)
            return np.asarray(lay.gates[room_idx].rect.center)
        return np.asarray(lay.goals[robot])
    if family == "retrieve-flag":
        if world.flag_delivered and world.flag_delivered[0]:
            return np.asarray(lay.goals[robot])
        if world.flag_carrier:
            return np.asarray(lay.switches[0].pos)
        return np.asarray(world.flag_positions[0])
    return np.asarray(lay.goals[robot])


def _rewards(old: WorldState, new: WorldState, spec: RewardSpec) -> np.ndarray:
    n = new.n_robots
    lay = new.layout
    rewards = np.full(n, spec.time_penalty)
    for i in range(n):
        if spec.mode == "vanilla":
            target = np.asarray(old.layout.goals[i])
        elif spec.mode == "staged":
            target = _staged_target(old, i)
        else:
            state = spec.active_subtask or old.dfa_state
            target = subtask_target(old, state, i)
        if target is not None:
            d_old = shaped_distance(old, old.positions[i], target)
            d_new = shaped_distance(old, new.positions[i], target)
            rewards[i] += spec.progress_coef * (d_old - d_new)
            # graded holding well around the goal slot: rewards settling and
            # staying put while teammates finish (plain progress shaping lets
            # policies orbit the slot at full speed)
            if lay.goals and np.array_equal(target, np.asarray(lay.goals[i])):
                d_goal = float(np.linalg.norm(new.positions[i]
                                              - np.asarray(lay.goals[i])))
                rewards[i] += 0.08 * max(0.0, 1.0 - d_goal / (2 * lay.goal_radius))
    if spec.mode != "vanilla" and new.dfa_state != old.dfa_state:
        moving = [inst.event for inst in new.pending_events
                  if automata.step(new.task.dfa, old.dfa_state, inst.event)
                  != old.dfa_state]
        for event in sorted(set(moving)):
            for i in range(n):
                if (i, event) not in new.bonus_paid:
                    new.bonus_paid.add((i, event))
                    rewards[i] += spec.event_bonus
    if spec.mode == "staged" and spec.event_bonus:
        # stage-up bonus for env-derived stages (switch registrations)
        for s_idx, (was, now) in enumerate(zip(old.switches_registered,
                                               new.switches_registered)):
            if now and not was:
                key_event = f"stage{s_idx}"
                for i in range(n):
                    if (i, key_event) not in new.bonus_paid:
                        new.bonus_paid.add((i, key_event))
                        rewards[i] += spec.event_bonus
    diff = new.positions[:, None, :] - new.positions[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    too_close = (dist < 2.0 * ROBOT_RADIUS).any(axis=1)
    rewards[too_close] += spec.collision_penalty
    return rewards
