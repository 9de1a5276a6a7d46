from .embedding import EMBED_DIM, EmbeddingVector, embed_sentence
from .llm import HttpLlmClient, MockLlmClient, query_llm
from .paraphrase import (ambiguous_paraphrases, bank_split, paraphrase_bank,
                         sample_paraphrase)
from .parsing import TaskSpec, parse_task_response, taskspec_from_json, taskspec_to_json
from .scenarios import (COLORS, FAMILIES, TONE_STYLES, ScenarioConfig,
                        generate_scenarios, make_scenario, render_prompt)
from .suite import (build_task, default_task_suite, harmonize_alphabet,
                    sampled_task_suite, union_alphabet)

__all__ = [
    "EMBED_DIM", "EmbeddingVector", "embed_sentence",
    "HttpLlmClient", "MockLlmClient", "query_llm",
    "ambiguous_paraphrases", "bank_split", "paraphrase_bank", "sample_paraphrase",
    "TaskSpec", "parse_task_response", "taskspec_from_json", "taskspec_to_json",
    "COLORS", "FAMILIES", "TONE_STYLES", "ScenarioConfig",
    "generate_scenarios", "make_scenario", "render_prompt",
    "build_task", "default_task_suite", "harmonize_alphabet",
    "sampled_task_suite", "union_alphabet",
]
