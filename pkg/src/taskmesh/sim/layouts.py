"""Scenario layouts: arena geometry, objects, radii, and spawn areas.

Layouts are plain data (axis-aligned wall rectangles, gated doorways bound to
switches, colored flags, per-robot goal slots) and serialize to JSON so runs
are reproducible from config files. Builders derive a layout for each task
family from its scenario; dimensions are desk-scale and favor short episodes.
"""

from dataclasses import dataclass, field, asdict
import json

import numpy as np

from ..errors import InvalidArgumentError
from ..seeding import rng_for
from ..taskgen.structures import second_color

ROBOT_RADIUS = 0.12
MAX_SPEED = 1.0
DT = 0.1


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, p, pad: float = 0.0) -> bool:
        return (self.x0 - pad <= p[0] <= self.x1 + pad
                and self.y0 - pad <= p[1] <= self.y1 + pad)

    @property
    def center(self):
        return np.array([(self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0])


@dataclass(frozen=True)
class Gate:
    rect: Rect
    index: int           # opens when switch with the same index registers


@dataclass(frozen=True)
class Switch:
    pos: tuple[float, float]
    radius: float
    color: str
    index: int
    ordered: bool = False  # only registers after lower-indexed switches


@dataclass(frozen=True)
class Flag:
    pos: tuple[float, float]
    color: str
    order: int = 0        # collection order for flag sequences


@dataclass
class Layout:
    name: str
    width: float
    height: float
    walls: list[Rect] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)
    switches: list[Switch] = field(default_factory=list)
    flags: list[Flag] = field(default_factory=list)
    goals: list[tuple[float, float]] = field(default_factory=list)
    goal_radius: float = 0.45
    base: tuple[float, float] | None = None
    base_radius: float = 0.9
    targets: list[tuple[float, float]] = field(default_factory=list)
    target_radius: float = 0.4
    comm_radius: float = 2.5
    sensing_radius: float = 10.0
    rooms: list[Rect] = field(default_factory=list)   # multi-room partitions
    spawn_area: Rect | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Layout":
        doc = json.loads(text)
        doc["walls"] = [Rect(**r) for r in doc["walls"]]
        doc["gates"] = [Gate(rect=Rect(**g["rect"]), index=g["index"])
                        for g in doc["gates"]]
        doc["switches"] = [Switch(pos=tuple(s["pos"]), radius=s["radius"],
                                  color=s["color"], index=s["index"],
                                  ordered=s["ordered"]) for s in doc["switches"]]
        doc["flags"] = [Flag(pos=tuple(f["pos"]), color=f["color"],
                             order=f["order"]) for f in doc["flags"]]
        doc["goals"] = [tuple(g) for g in doc["goals"]]
        doc["targets"] = [tuple(t) for t in doc["targets"]]
        doc["rooms"] = [Rect(**r) for r in doc["rooms"]]
        if doc.get("base"):
            doc["base"] = tuple(doc["base"])
        if doc.get("spawn_area"):
            doc["spawn_area"] = Rect(**doc["spawn_area"])
        return cls(**doc)


def _spread_points(rect: Rect, n: int) -> list[tuple[float, float]]:
    """n well-separated points filling a rectangle, row-major."""
    cols = int(np.ceil(np.sqrt(n * (rect.x1 - rect.x0) /
                               max(rect.y1 - rect.y0, 1e-6))))
    cols = max(1, min(cols, n))
    rows = int(np.ceil(n / cols))
    xs = np.linspace(rect.x0, rect.x1, cols + 2)[1:-1]
    ys = np.linspace(rect.y0, rect.y1, rows + 2)[1:-1]
    pts = [(float(x), float(y)) for y in ys for x in xs]
    return pts[:n]


def _vertical_wall_with_door(x, height, door_lo, door_hi, thick=0.2):
    half = thick / 2.0
    lower = Rect(x - half, 0.0, x + half, door_lo)
    upper = Rect(x - half, door_hi, x + half, height)
    door = Rect(x - half, door_lo, x + half, door_hi)
    return [lower, upper], door


def multi_room_layout(n_robots: int, switch_colors=("red", "green", "blue")) -> Layout:
    """Four rooms in a row; each of the left three holds an ordered switch."""
    width, height = 8.0, 3.0
    walls, gates, switches, rooms = [], [], [], []
    for i, x in enumerate((2.0, 4.0, 6.0)):
        segs, door = _vertical_wall_with_door(x, height, 0.9, 2.2)
        walls.extend(segs)
        gates.append(Gate(rect=door, index=i))
        switches.append(Switch(pos=(x - 1.0, 2.55), radius=0.3,
                               color=switch_colors[i], index=i, ordered=True))
    for i in range(4):
        rooms.append(Rect(2.0 * i, 0.0, 2.0 * (i + 1), height))
    goals = _spread_points(Rect(6.5, 0.4, 7.8, 2.6), n_robots)
    return Layout(name="multi-room", width=width, height=height, walls=walls,
                  gates=gates, switches=switches, goals=goals, rooms=rooms,
                  comm_radius=2.5, sensing_radius=2.8,
                  spawn_area=Rect(0.3, 0.3, 5.7, 2.7))


def retrieve_flag_layout(n_robots: int, color: str) -> Layout:
    """Flag and switch on the left, gated doorway to the goal side."""
    width, height = 6.0, 4.0
    walls, door = _vertical_wall_with_door(4.0, height, 1.2, 2.9)
    goals = _spread_points(Rect(4.5, 0.4, 5.9, 3.6), n_robots)
    return Layout(name="retrieve-flag", width=width, height=height, walls=walls,
                  gates=[Gate(rect=door, index=0)],
                  switches=[Switch(pos=(2.8, 1.0), radius=0.35, color="yellow",
                                   index=0)],
                  flags=[Flag(pos=(1.0, 3.2), color=color)],
                  goals=goals, base=(0.6, 0.6),
                  comm_radius=3.0, sensing_radius=8.0,
                  spawn_area=Rect(0.4, 0.4, 3.4, 3.6))


def flag_sequence_layout(n_robots: int, color: str) -> Layout:
    c2 = second_color(color)
    width, height = 6.0, 4.0
    goals = _spread_points(Rect(4.8, 1.4, 5.6, 2.6), n_robots)
    return Layout(name="flag-sequence", width=width, height=height,
                  flags=[Flag(pos=(1.0, 3.2), color=color, order=0),
                         Flag(pos=(1.2, 0.8), color=c2, order=1)],
                  goals=goals, base=(0.6, 2.0),
                  comm_radius=3.0, sensing_radius=8.0,
                  spawn_area=Rect(2.2, 0.4, 4.2, 3.6))


def search_targets_layout(n_robots: int, n_targets: int, region_pct: float,
                          seed: int) -> Layout:
    width, height = 6.0, 4.0
    rng = rng_for(seed, "search-region")
    radius = float(np.sqrt(region_pct / 100.0 * width * height / np.pi))
    radius = min(radius, (height - 1.2) / 2.0)
    cx = float(rng.uniform(radius + 0.5, width - radius - 0.5))
    cy = float(rng.uniform(radius + 0.5, height - radius - 0.5))
    targets = []
    for _ in range(n_targets):
        ang = rng.uniform(0, 2 * np.pi)
        rad = radius * np.sqrt(rng.uniform())
        targets.append((float(cx + rad * np.cos(ang)),
                        float(cy + rad * np.sin(ang))))
    return Layout(name="search-targets", width=width, height=height,
                  targets=targets, base=(0.8, 0.8),
                  goals=_spread_points(Rect(0.4, 0.4, 1.4, 1.4), n_robots),
                  comm_radius=3.0, sensing_radius=8.0,
                  spawn_area=Rect(0.4, 0.4, 2.0, 2.0))


def defend_position_layout(n_robots: int, color: str) -> Layout:
    width, height = 6.0, 4.0
    return Layout(name="defend-position", width=width, height=height,
                  flags=[Flag(pos=(4.4, 2.6), color=color)],
                  goals=_spread_points(Rect(3.8, 2.0, 5.0, 3.2), n_robots),
                  base=(0.8, 0.8),
                  comm_radius=3.0, sensing_radius=8.0,
                  spawn_area=Rect(0.4, 0.4, 2.4, 3.6))


def layout_for(task, n_robots: int) -> Layout:
    """Derive the layout for a task's scenario family."""
    scenario = task.scenario
    if scenario is None:
        raise InvalidArgumentError("task has no scenario binding")
    family = scenario.task_family
    if family == "multi-room":
        return multi_room_layout(n_robots)
    if family == "retrieve-flag":
        return retrieve_flag_layout(n_robots, scenario.c_target)
    if family == "flag-sequence":
        return flag_sequence_layout(n_robots, scenario.c_target)
    if family == "search-targets":
        return search_targets_layout(n_robots, scenario.n_target,
                                     scenario.region_size_pct, scenario.rng_seed)
    if family == "defend-position":
        return defend_position_layout(n_robots, scenario.c_target)
    raise InvalidArgumentError(f"no layout for family {family!r}")
