"""Procedural scenario generation and prompt rendering.

A scenario is the structured feature set an operator would glean from looking
at a map: task family, target count and color, highlighted-region size, and a
requested tone. Scenarios ground the language specifications in the same
worlds the policies later train in; we pass these features to the language
model as a structured block rather than an image.
"""

from dataclasses import dataclass, asdict

from ..errors import InvalidArgumentError
from ..seeding import child_seed, rng_for

FAMILIES = ("search-targets", "multi-room", "retrieve-flag", "flag-sequence",
            "defend-position")

COLORS = ("red", "green", "blue", "purple", "yellow")

TONE_STYLES = ("neutral", "formal", "urgent", "playful", "terse")

#: Upper region-size boundary (percent of map) per label, in label order.
SIZE_LABEL_BOUNDS = (("small", 15.0), ("medium", 35.0), ("large", 100.0))

# Per-family slot ranges: (n_target range, region percent range).
_FAMILY_RANGES = {
    "search-targets": ((2, 10), (5.0, 60.0)),
    "multi-room": ((3, 3), (10.0, 40.0)),
    "retrieve-flag": ((1, 1), (5.0, 30.0)),
    "flag-sequence": ((2, 2), (5.0, 30.0)),
    "defend-position": ((1, 1), (5.0, 40.0)),
}


def size_label_for(region_size_pct: float) -> str:
    for label, bound in SIZE_LABEL_BOUNDS:
        if region_size_pct <= bound:
            return label
    return SIZE_LABEL_BOUNDS[-1][0]


@dataclass(frozen=True)
class ScenarioConfig:
    task_family: str
    n_target: int
    c_target: str
    region_size_pct: float
    size_label: str
    tone_style: str
    rng_seed: int

    def __post_init__(self):
        if self.task_family not in FAMILIES:
            raise InvalidArgumentError(f"unknown task family {self.task_family!r}")
        if self.n_target < 1:
            raise InvalidArgumentError("n_target must be >= 1")
        if not 0.0 < self.region_size_pct <= 100.0:
            raise InvalidArgumentError("region_size_pct must be in (0, 100]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        return cls(**data)


def make_scenario(family: str, *, c_target: str, n_target: int | None = None,
                  region_size_pct: float = 20.0, tone_style: str = "neutral",
                  rng_seed: int = 0) -> ScenarioConfig:
    """Explicitly construct one scenario, filling family defaults."""
    if family not in _FAMILY_RANGES:
        raise InvalidArgumentError(f"unknown task family {family!r}")
    (n_lo, _), _ = _FAMILY_RANGES[family]
    return ScenarioConfig(
        task_family=family,
        n_target=n_lo if n_target is None else n_target,
        c_target=c_target,
        region_size_pct=region_size_pct,
        size_label=size_label_for(region_size_pct),
        tone_style=tone_style,
        rng_seed=rng_seed,
    )


def generate_scenarios(family: str, count: int, rng_seed: int) -> list[ScenarioConfig]:
    """Draw ``count`` scenarios for a family; deterministic under the seed."""
    if family not in _FAMILY_RANGES:
        raise InvalidArgumentError(f"unknown task family {family!r}")
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    (n_lo, n_hi), (pct_lo, pct_hi) = _FAMILY_RANGES[family]
    rng = rng_for(rng_seed, "scenarios", family)
    out = []
    for i in range(count):
        n_target = int(rng.integers(n_lo, n_hi + 1))
        color = COLORS[int(rng.integers(len(COLORS)))]
        pct = round(float(rng.uniform(pct_lo, pct_hi)), 1)
        tone = TONE_STYLES[int(rng.integers(len(TONE_STYLES)))]
        out.append(ScenarioConfig(
            task_family=family,
            n_target=n_target,
            c_target=color,
            region_size_pct=pct,
            size_label=size_label_for(pct),
            tone_style=tone,
            rng_seed=child_seed(rng_seed, "scenario", family, i),
        ))
    return out


_FEATURE_LINE = ("family={family}; targets={n}; color={color}; region_pct={pct}; "
                 "region_size={label}; tone={tone}; seed={seed}; events={events}")


def render_prompt(scenario: ScenarioConfig) -> str:
    """Render the mission prompt for a scenario.

    The prompt states the mission as bullets (region description, size
    estimate, target count, return to base), requests the reply tone, and asks
    for the task automaton over the scenario's event list in the fenced-section
    reply schema. Scenario features are embedded as a structured block in
    place of a rendered map image.
    """
    from .structures import family_structure  # late import to avoid a cycle

    structure = family_structure(scenario)
    events = ",".join(structure.events)
    features = _FEATURE_LINE.format(
        family=scenario.task_family, n=scenario.n_target, color=scenario.c_target,
        pct=scenario.region_size_pct, label=scenario.size_label,
        tone=scenario.tone_style, seed=scenario.rng_seed, events=events)
    lines = [
        "You are leading a team of autonomous robots on the mission described below.",
        "Scenario features (in place of the map image):",
        f"  {features}",
        "",
        f"The map highlights a {scenario.c_target} region of interest. It does not show",
        "the targets directly but suggests where they are likely located and their",
        f"color. The region covers about {scenario.region_size_pct}% of the map, "
        f"i.e. it is {scenario.size_label}.",
        "",
        "Your mission:",
        "- Describe the location of the region in relation to the environment",
        "  (e.g. top-left, south-east, center).",
        f"- Estimate its size (you already know it is {scenario.size_label}).",
        f"- Mention the number of targets ({scenario.n_target}).",
        "- After identifying the targets, instruct the robots to return to base.",
        f"Please respond in a {scenario.tone_style} tone. Be concise.",
        "",
        "Additionally, generate the automaton representation of the task over the",
        f"scenario events [{events}]. Reply with fenced sections named command,",
        "states, alphabet, initial, accepting and transitions, following the",
        "documented reply schema.",
    ]
    return "\n".join(lines) + "\n"


def parse_feature_line(prompt: str) -> dict:
    """Recover the structured feature block from a rendered prompt."""
    for raw in prompt.splitlines():
        line = raw.strip()
        if line.startswith("family=") and "events=" in line:
            fields = {}
            for part in line.split("; "):
                key, _, value = part.partition("=")
                fields[key] = value
            return fields
    raise InvalidArgumentError("prompt carries no scenario feature block")


def scenario_from_features(fields: dict) -> ScenarioConfig:
    pct = float(fields["region_pct"])
    return ScenarioConfig(
        task_family=fields["family"],
        n_target=int(fields["targets"]),
        c_target=fields["color"],
        region_size_pct=pct,
        size_label=fields.get("region_size", size_label_for(pct)),
        tone_style=fields.get("tone", "neutral"),
        rng_seed=int(fields.get("seed", 0)),
    )
