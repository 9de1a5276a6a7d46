"""Task-suite assembly: scenarios through the language pipeline to TaskSpecs.

The default suite covers every family (three retrieve-flag color variants, a
flag sequence, search, defend, and the four-room scenario) so one model sees
every event and must reject the foreign ones. After generation, all task
machines are rebuilt over the union alphabet; foreign events self-loop.
"""

from dataclasses import replace

from .. import automata
from ..seeding import child_seed
from .llm import MockLlmClient, query_llm
from .parsing import TaskSpec, parse_task_response
from .scenarios import ScenarioConfig, generate_scenarios, make_scenario, render_prompt


def build_task(scenario: ScenarioConfig, client=None) -> TaskSpec:
    """Run one scenario through prompt → completion → parse."""
    client = client or MockLlmClient()
    prompt = render_prompt(scenario)
    reply = query_llm(prompt, client)
    task = parse_task_response(reply)
    return replace(task, scenario=scenario)


def default_task_suite(seed: int = 0, client=None) -> list[TaskSpec]:
    """The seven-task reference suite with a shared event alphabet."""
    configs = [
        make_scenario("search-targets", c_target="red", n_target=4,
                      region_size_pct=30.0, tone_style="neutral",
                      rng_seed=child_seed(seed, "suite", 0)),
        make_scenario("retrieve-flag", c_target="green", region_size_pct=12.0,
                      tone_style="formal", rng_seed=child_seed(seed, "suite", 1)),
        make_scenario("retrieve-flag", c_target="blue", region_size_pct=10.0,
                      tone_style="neutral", rng_seed=child_seed(seed, "suite", 2)),
        make_scenario("multi-room", c_target="yellow", region_size_pct=25.0,
                      tone_style="urgent", rng_seed=child_seed(seed, "suite", 3)),
        make_scenario("defend-position", c_target="red", region_size_pct=18.0,
                      tone_style="terse", rng_seed=child_seed(seed, "suite", 4)),
        make_scenario("flag-sequence", c_target="purple", region_size_pct=14.0,
                      tone_style="playful", rng_seed=child_seed(seed, "suite", 5)),
        make_scenario("retrieve-flag", c_target="purple", region_size_pct=8.0,
                      tone_style="neutral", rng_seed=child_seed(seed, "suite", 6)),
    ]
    tasks = [build_task(cfg, client) for cfg in configs]
    return harmonize_alphabet(tasks)


def sampled_task_suite(families, count_per_family: int, seed: int,
                       client=None) -> list[TaskSpec]:
    """Random scenarios per family, harmonized; deterministic under seed."""
    tasks = []
    for family in families:
        for cfg in generate_scenarios(family, count_per_family, child_seed(seed, family)):
            tasks.append(build_task(cfg, client))
    return harmonize_alphabet(tasks)


def union_alphabet(tasks) -> tuple[str, ...]:
    """NO_EVENT first, then every event in first-appearance order across tasks."""
    events = [automata.NO_EVENT]
    for task in tasks:
        for event in task.dfa.alphabet:
            if event not in events:
                events.append(event)
    return tuple(events)


def harmonize_alphabet(tasks) -> list[TaskSpec]:
    shared = union_alphabet(tasks)
    return [replace(t, dfa=automata.with_alphabet(t.dfa, shared)) for t in tasks]
