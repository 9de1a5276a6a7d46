"""Canonical task structures per scenario family.

One place defines, for each family, the sub-task chain, the event alphabet,
the transition edges and the canonical command/sub-task sentences. The mock
language client renders its replies from these structures, and the prompt
advertises the matching event list.
"""

from dataclasses import dataclass

from ..errors import InvalidArgumentError
from .scenarios import COLORS, ScenarioConfig


@dataclass(frozen=True)
class TaskStructure:
    command: str
    states: tuple[tuple[str, str], ...]  # (state name, canonical sentence)
    events: tuple[str, ...]              # without NO_EVENT
    edges: tuple[tuple[str, str, str], ...]  # (state, event, successor)
    initial: str
    accepting: tuple[str, ...]


def color_event(color: str) -> str:
    return color.capitalize()


def second_color(color: str) -> str:
    """Deterministic companion color for flag sequences."""
    idx = COLORS.index(color)
    return COLORS[(idx + 2) % len(COLORS)]


_TONE_OPENERS = {
    "neutral": "",
    "formal": "Attention all units: ",
    "urgent": "Move fast: ",
    "playful": "Alright crew, ",
    "terse": "",
}


def family_structure(scenario: ScenarioConfig) -> TaskStructure:
    family = scenario.task_family
    color = scenario.c_target
    opener = _TONE_OPENERS.get(scenario.tone_style, "")

    if family == "search-targets":
        find = f"Search for {color} targets"
        back = "Return to base"
        done = "At base"
        return TaskStructure(
            command=(f"{opener}explore the highlighted region and find the "
                     f"{scenario.n_target} {color} targets, then return to base."),
            states=(
                (find, f"Search the highlighted region for the {color} targets."),
                (back, "Return to base with the findings."),
                (done, "Hold position at the base."),
            ),
            events=("AllTargetsFound", "FoundBase"),
            edges=(
                (find, "AllTargetsFound", back),
                (back, "FoundBase", done),
            ),
            initial=find,
            accepting=(done,),
        )

    if family == "retrieve-flag":
        trigger = color_event(color)
        find = f"Find {color} flag"
        switch = "Navigate to switch"
        goal = "Navigate to Goal"
        return TaskStructure(
            command=(f"{opener}find the {color} flag, bring it to the switch, "
                     "and head for the goal."),
            states=(
                (find, f"Find the {color} flag and pick it up."),
                (switch, "Navigate to the switch carrying the flag."),
                (goal, "Navigate to the goal area."),
            ),
            events=(trigger, "Switch", "FlagLost"),
            edges=(
                (find, trigger, switch),
                (switch, "Switch", goal),
                (switch, "FlagLost", find),
            ),
            initial=find,
            accepting=(goal,),
        )

    if family == "multi-room":
        s1, s2, s3 = "Hit switch 1", "Hit switch 2", "Hit switch 3"
        goal = "Navigate to goal room"
        ordinals = ("first", "second", "third")
        state_rows = [
            (name, f"Head to the {ordinals[i]} switch in the {ordinals[i]} room "
                   "from the left and press it.")
            for i, name in enumerate((s1, s2, s3))
        ]
        state_rows.append((goal, "Move into the goal room and reach your target."))
        return TaskStructure(
            command=(f"{opener}unlock the first, second, and third switches in "
                     "sequence, then advance to the goal room and reach the target."),
            states=tuple(state_rows),
            events=("Switch1", "Switch2", "Switch3"),
            edges=(
                (s1, "Switch1", s2),
                (s2, "Switch2", s3),
                (s3, "Switch3", goal),
            ),
            initial=s1,
            accepting=(goal,),
        )

    if family == "flag-sequence":
        c1, c2 = color, second_color(color)
        first = f"Find {c1} flag"
        second = f"Find {c2} flag"
        goal = "Navigate to goal"
        return TaskStructure(
            command=(f"{opener}locate the {c1} flag, then the {c2} flag, "
                     "and proceed to the goal."),
            states=(
                (first, f"Find the {c1} flag first."),
                (second, f"Then find the {c2} flag."),
                (goal, "Proceed to the goal area."),
            ),
            events=(color_event(c1), color_event(c2)),
            edges=(
                (first, color_event(c1), second),
                (second, color_event(c2), goal),
            ),
            initial=first,
            accepting=(goal,),
        )

    if family == "defend-position":
        locate = f"Locate {color} mission flag"
        wide = "Defend wide"
        tight = "Defend tight"
        return TaskStructure(
            command=(f"{opener}locate the {color} mission flag and defend the "
                     "position; adapt your defense to enemy activity."),
            states=(
                (locate, f"Locate the {color} mission flag."),
                (wide, "Defend the position in a wide formation."),
                (tight, "Defend the position in a tight formation."),
            ),
            events=("MissionFlagFound", "EnemySpotted", "EnemyCleared"),
            edges=(
                (locate, "MissionFlagFound", wide),
                (wide, "EnemySpotted", tight),
                (tight, "EnemyCleared", wide),
            ),
            initial=locate,
            accepting=(),
        )

    raise InvalidArgumentError(f"unknown task family {family!r}")
