"""Pluggable reasoning backends sharing one rendering contract.

The scripted backend is a deterministic rule table that stands in for the
model, making every kernel mechanism exactly testable. The HTTP backend talks
to a standard chat-completions endpoint. Both consume the same
BackendRequest, so swapping them changes no kernel code path.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import yaml

from .model import ContextSnapshot, Message, Role

#: chat role label per history role. Tool feedback and system notes are sent
#: as user messages with a banner naming the true source, so two-party models
#: can tell the three conversation parties apart.
ROLE_LABELS = {
    Role.SYSTEM: "system",
    Role.CALLER: "user",
    Role.ASSISTANT: "assistant",
    Role.TOOL_FEEDBACK: "user",
    Role.SYSTEM_NOTE: "user",
}

NOTES_BANNER = "[system note from kernel: dynamic status — private, regenerated every turn]"


def estimate_tokens(chars: int) -> int:
    """Coarse token estimate: ceil(chars / 4). Gates warnings only."""
    return math.ceil(chars / 4)


def render_record(message: Message) -> str:
    """Stable rendering of one history record as chat-message text."""
    if message.role is Role.TOOL_FEEDBACK:
        return f"[tool feedback from {message.sender}]\n{message.body}"
    if message.role is Role.SYSTEM_NOTE:
        return f"[system note from {message.sender}]\n{message.body}"
    return message.body


@dataclass(frozen=True)
class RenderedMessage:
    section: str  # "system" | "history" | "input" | "notes"
    role_label: str
    text: str


@dataclass(frozen=True)
class BackendRequest:
    messages: tuple[RenderedMessage, ...]
    agent_type: str
    node_id: int
    turn_index: int  # backend invocations already made by this node
    turn_input_text: str
    max_output_tokens: int = 4096
    temperature: float = 0.0

    def stable_prefix(self) -> str:
        """The cacheable leading text: system prompt plus history window."""
        return "\n".join(
            m.text for m in self.messages if m.section in ("system", "history")
        )


def render_notes(blocks) -> str:
    parts = [NOTES_BANNER]
    for block in blocks:
        parts.append(f"### {block.tag.value}\n{block.body}")
    return "\n".join(parts)


def render(
    snapshot: ContextSnapshot,
    *,
    agent_type: str,
    node_id: int,
    turn_index: int,
    max_output_tokens: int = 4096,
    temperature: float = 0.0,
) -> BackendRequest:
    """Render a context snapshot into the ordered chat-message sequence.

    Static content (system prompt, history) leads; the turn input and the
    dynamic notes come last, keeping the leading sequence byte-stable across
    consecutive turns.
    """
    messages: list[RenderedMessage] = [
        RenderedMessage("system", "system", snapshot.system_prompt)
    ]
    for record in snapshot.history_window:
        messages.append(
            RenderedMessage("history", ROLE_LABELS[record.role], render_record(record))
        )
    input_texts = []
    for record in snapshot.turn_input:
        text = render_record(record)
        input_texts.append(text)
        messages.append(RenderedMessage("input", ROLE_LABELS[record.role], text))
    messages.append(RenderedMessage("notes", "user", render_notes(snapshot.dynamic_notes)))
    return BackendRequest(
        messages=tuple(messages),
        agent_type=agent_type,
        node_id=node_id,
        turn_index=turn_index,
        turn_input_text="\n".join(input_texts),
        max_output_tokens=max_output_tokens,
        temperature=temperature,
    )


class BackendError(RuntimeError):
    """Unrecoverable backend failure, surfaced to the scheduler."""


class ScenarioExhausted(BackendError):
    """No scenario rule matched and no default output exists (a test bug)."""


@dataclass(frozen=True)
class ScenarioRule:
    output: str
    agent_type: str | None = None
    turn_index: int | None = None
    trigger: str | None = None  # substring matched against the latest input

    def matches(self, request: BackendRequest) -> bool:
        if self.agent_type is not None and self.agent_type != request.agent_type:
            return False
        if self.turn_index is not None and self.turn_index != request.turn_index:
            return False
        if self.trigger is not None and self.trigger not in request.turn_input_text:
            return False
        return True


@dataclass
class Scenario:
    """Ordered rule table; first matching rule wins."""

    rules: list[ScenarioRule] = field(default_factory=list)
    default: str | None = None

    @classmethod
    def from_file(cls, path: str) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        rules = [
            ScenarioRule(
                output=str(rule["output"]),
                agent_type=rule.get("agent_type"),
                turn_index=rule.get("turn"),
                trigger=rule.get("trigger"),
            )
            for rule in data.get("rules", ())
        ]
        return cls(rules=rules, default=data.get("default"))

    def reply(self, request: BackendRequest) -> str:
        for rule in self.rules:
            if rule.matches(request):
                return rule.output
        if self.default is not None:
            return self.default
        raise ScenarioExhausted(
            f"no rule matched agent_type={request.agent_type!r} "
            f"turn={request.turn_index} input={request.turn_input_text[:80]!r}"
        )


class ScriptedBackend:
    """Deterministic backend: a pure function of the request."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.invocations = 0

    def complete(self, request: BackendRequest) -> str:
        if not request.messages:
            raise BackendError("empty request")
        self.invocations += 1
        return self.scenario.reply(request)


class RecordingBackend:
    """Wraps a backend and records every request, keyed by node."""

    def __init__(self, inner):
        self.inner = inner
        self.requests: list[BackendRequest] = []

    def complete(self, request: BackendRequest) -> str:
        self.requests.append(request)
        return self.inner.complete(request)

    def by_node(self, node_id: int) -> list[BackendRequest]:
        return [r for r in self.requests if r.node_id == node_id]


class HttpBackend:
    """Chat-completions client configured via environment variables.

    AGENTTREE_LLM_BASE_URL, AGENTTREE_LLM_MODEL, AGENTTREE_LLM_API_KEY.
    The credential is read once and never logged or rendered into a context.
    """

    RETRIES = 3

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
    ):
        self.base_url = (base_url or os.environ.get("AGENTTREE_LLM_BASE_URL", "")).rstrip("/")
        self.model = model or os.environ.get("AGENTTREE_LLM_MODEL", "")
        self._api_key = api_key or os.environ.get("AGENTTREE_LLM_API_KEY", "")
        self.timeout = timeout
        if not self.base_url or not self.model:
            raise BackendError(
                "HTTP backend needs AGENTTREE_LLM_BASE_URL and AGENTTREE_LLM_MODEL"
            )

    def complete(self, request: BackendRequest) -> str:
        import requests

        payload = {
            "model": self.model,
            "messages": [
                {"role": m.role_label, "content": m.text} for m in request.messages
            ],
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        last_error: Exception | None = None
        for attempt in range(self.RETRIES):
            try:
                response = requests.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
                if response.status_code >= 500:
                    raise BackendError(f"server error {response.status_code}")
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # transient transport errors retried
                last_error = exc
                if attempt < self.RETRIES - 1:
                    time.sleep(0.5 * 2**attempt)
        raise BackendError(f"backend exhausted after {self.RETRIES} attempts: {last_error}")
