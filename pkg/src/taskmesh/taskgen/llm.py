"""Language-model clients: a deterministic mock and a remote HTTP client.

The mock reads the structured feature block out of the prompt and renders the
canonical reply for that scenario, so the whole generation pipeline runs
offline and reproducibly. The HTTP client posts JSON to a configured endpoint
with a bearer token from the environment; transient failures surface as
:class:`TransportError` and are retried by :func:`query_llm` with bounded
exponential backoff.
"""

import os
import time
from typing import Protocol

import requests

from ..errors import InvalidArgumentError, ParseError, TransportError
from .scenarios import parse_feature_line, scenario_from_features
from .structures import family_structure

#: Environment variable holding the bearer token for the remote client.
TOKEN_ENV_VAR = "TASKMESH_LLM_TOKEN"


class LlmClient(Protocol):
    def complete(self, prompt: str, max_tokens: int) -> str: ...


class MockLlmClient:
    """Offline stand-in: canonical replies keyed by the prompt's feature block.

    Reentrant and stateless; the same prompt always yields the same reply.
    """

    def complete(self, prompt: str, max_tokens: int = 2048) -> str:
        fields = parse_feature_line(prompt)
        scenario = scenario_from_features(fields)
        return render_reply(scenario)


def render_reply(scenario) -> str:
    """The fenced-section reply document for a scenario's canonical task."""
    s = family_structure(scenario)
    lines = [
        f"Mission briefing ({scenario.tone_style}): the {scenario.c_target} region "
        f"sits near the center of the map and is {scenario.size_label} "
        f"(about {scenario.region_size_pct}% of the area). "
        f"There are {scenario.n_target} targets to account for.",
        "",
        "```command",
        s.command,
        "```",
        "```states",
    ]
    lines.extend(f"{name}: {text}" for name, text in s.states)
    lines.append("```")
    lines.append("```alphabet")
    lines.extend(s.events)
    lines.append("```")
    lines.extend(["```initial", s.initial, "```"])
    lines.append("```accepting")
    lines.extend(s.accepting)
    lines.append("```")
    lines.append("```transitions")
    lines.extend(f"{state} | {event} -> {target}" for state, event, target in s.edges)
    lines.append("```")
    return "\n".join(lines) + "\n"


class HttpLlmClient:
    """POSTs {prompt, max_tokens} as JSON; bearer token from the environment."""

    def __init__(self, endpoint: str, token_env_var: str = TOKEN_ENV_VAR,
                 timeout: float = 30.0, session=None):
        if not endpoint:
            raise InvalidArgumentError("endpoint URL required")
        self.endpoint = endpoint
        self.token_env_var = token_env_var
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, prompt: str, max_tokens: int = 2048) -> str:
        headers = {}
        token = os.environ.get(self.token_env_var, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = self._session.post(
                self.endpoint,
                json={"prompt": prompt, "max_tokens": max_tokens},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"LLM endpoint unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise TransportError(f"LLM endpoint returned {resp.status_code}")
        if resp.status_code != 200:
            raise ParseError(f"LLM endpoint rejected request: {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise ParseError("LLM reply is not valid JSON") from exc
        text = body.get("completion", body.get("text"))
        if not isinstance(text, str):
            raise ParseError("LLM reply JSON lacks a 'completion' or 'text' field")
        return text


def query_llm(prompt: str, client, max_tokens: int = 2048, max_attempts: int = 3,
              backoff_s: float = 0.5, sleep=time.sleep) -> str:
    """Get a raw completion, retrying transport failures up to ``max_attempts``."""
    if max_attempts < 1:
        raise InvalidArgumentError("max_attempts must be >= 1")
    last = None
    for attempt in range(max_attempts):
        try:
            return client.complete(prompt, max_tokens)
        except TransportError as exc:
            last = exc
            if attempt + 1 < max_attempts:
                sleep(backoff_s * (2 ** attempt))
    raise last
