"""Reply-document parsing and the TaskSpec container.

Replies carry fenced sections (command, states, alphabet, initial, accepting,
transitions); anything outside the fences is briefing prose and ignored. A
reply only parses if the resulting machine is valid — we never repair a broken
automaton silently.
"""

from dataclasses import dataclass
import json
import re

from .. import automata
from ..errors import InvalidArgumentError, InvalidSymbolError, ParseError, SchemaVersionError
from .scenarios import ScenarioConfig

_FENCE_RE = re.compile(r"```(\w+)\n(.*?)```", re.DOTALL)
_REQUIRED_SECTIONS = ("command", "states", "alphabet", "initial", "accepting",
                      "transitions")


@dataclass(frozen=True)
class TaskSpec:
    """A natural-language command bound to its automaton and sub-task texts."""

    command_text: str
    dfa: automata.Dfa
    subtask_texts: dict[str, str]
    scenario: ScenarioConfig | None = None

    def __post_init__(self):
        if not self.command_text.strip():
            raise ParseError("command text is empty")
        missing = set(self.dfa.states) - set(self.subtask_texts)
        if missing:
            raise ParseError(f"sub-task states without text: {sorted(missing)}")


def parse_task_response(text: str) -> TaskSpec:
    """Parse a reply document into a TaskSpec (without scenario binding)."""
    sections = {}
    for match in _FENCE_RE.finditer(text):
        name, body = match.group(1), match.group(2)
        if name in sections:
            raise ParseError("duplicate section", section=name)
        sections[name] = body
    for name in _REQUIRED_SECTIONS:
        if name not in sections:
            raise ParseError("missing section", section=name)

    command = sections["command"].strip()
    if not command:
        raise ParseError("empty command", section="command")

    subtask_texts = {}
    state_names = []
    for i, raw in enumerate(_nonempty_lines(sections["states"]), start=1):
        name, sep, sentence = raw.partition(": ")
        if not sep or not name.strip() or not sentence.strip():
            raise ParseError(f"expected 'name: sentence', got {raw!r}",
                             section="states", line=i)
        name = name.strip()
        if name in subtask_texts:
            raise ParseError(f"duplicate state {name!r}", section="states", line=i)
        state_names.append(name)
        subtask_texts[name] = sentence.strip()
    if not state_names:
        raise ParseError("no states listed", section="states")

    alphabet = []
    for i, raw in enumerate(_nonempty_lines(sections["alphabet"]), start=1):
        if raw in alphabet:
            raise ParseError(f"duplicate event {raw!r}", section="alphabet", line=i)
        alphabet.append(raw)

    initial_lines = _nonempty_lines(sections["initial"])
    if len(initial_lines) != 1:
        raise ParseError("initial section must name exactly one state",
                         section="initial")
    initial = initial_lines[0]

    accepting = _nonempty_lines(sections["accepting"])

    edges = {}
    for i, raw in enumerate(_nonempty_lines(sections["transitions"]), start=1):
        left, arrow, target = raw.partition(" -> ")
        state, bar, event = left.partition(" | ")
        if not arrow or not bar:
            raise ParseError(f"expected 'state | event -> state', got {raw!r}",
                             section="transitions", line=i)
        key = (state.strip(), event.strip())
        if key in edges:
            raise ParseError(f"duplicate transition for {key}",
                             section="transitions", line=i)
        edges[key] = target.strip()

    try:
        dfa = automata.make_dfa(state_names, alphabet, edges, initial, accepting)
    except (InvalidSymbolError, InvalidArgumentError) as exc:
        raise ParseError(f"reply encodes an invalid machine: {exc}") from exc
    problems = automata.validate(dfa)
    if problems:
        raise ParseError(f"reply encodes an invalid machine: {problems[0]}")
    return TaskSpec(command_text=command, dfa=dfa, subtask_texts=subtask_texts)


def _nonempty_lines(body: str) -> list[str]:
    return [line.strip() for line in body.splitlines() if line.strip()]


# --- TaskSpec serialization --------------------------------------------------

_TASKSPEC_SCHEMA = "taskspec/v1"


def taskspec_to_json(task: TaskSpec) -> str:
    doc = {
        "schema": _TASKSPEC_SCHEMA,
        "command": task.command_text,
        "subtasks": {s: task.subtask_texts[s] for s in task.dfa.states},
        "scenario": task.scenario.to_dict() if task.scenario else None,
        "dfa": automata.to_text(task.dfa),
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def taskspec_from_json(text: str) -> TaskSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"task document is not valid JSON: {exc}") from exc
    if doc.get("schema") != _TASKSPEC_SCHEMA:
        raise SchemaVersionError(f"unsupported task schema {doc.get('schema')!r}")
    scenario = doc.get("scenario")
    return TaskSpec(
        command_text=doc["command"],
        dfa=automata.from_text(doc["dfa"]),
        subtask_texts=dict(doc["subtasks"]),
        scenario=ScenarioConfig.from_dict(scenario) if scenario else None,
    )
