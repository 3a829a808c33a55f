"""Per-turn context assembly: the perceive side of the agent cycle.

Each step renders the ordered tuple (system prompt, history window, turn
input, dynamic notes). The dynamic notes are regenerated fresh every turn and
never stored in history, keeping the leading context byte-stable for cache
reuse.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass

from .backend import estimate_tokens, render_record
from .model import AgentNode, ContextSnapshot, Message, NoteBlock, NoteTag

#: Above this multiple of the budget the kernel force-compresses so a stuck
#: model cannot wedge the run.
FORCE_COMPRESS_FACTOR = 1.5

OVERFLOW_WARNING = (
    "CONTEXT OVERFLOW: estimated usage {usage} of {budget} tokens "
    "({percent:.0f}%). Summarize your progress and issue @COMPRESS with the "
    "summary as the fenced body to free space."
)


@dataclass(frozen=True)
class StepOutcome:
    """Continue with interpreter feedback, or hand the output to the caller."""

    to_caller: bool
    text: str  # feedback when continuing, the caller-directed reply otherwise


def estimated_usage(node: AgentNode) -> int:
    """Token estimate of the stable context prefix (system prompt + window).

    Uses the chars/4 estimator over exactly the text the backend renderer
    would produce for those sections.
    """
    chars = len(node.spec.system_prompt)
    for message in node.window:
        chars += len(render_record(message))
    return estimate_tokens(chars)


def dynamic_notes(node: AgentNode, turn_input_text: str, env) -> list[NoteBlock]:
    """Build the per-turn dynamic status blocks, in fixed order.

    ``env`` supplies the live system state (see runtime.Runtime). A failing
    provider contributes an error-text block instead of aborting the turn.
    """
    blocks: list[NoteBlock] = []

    def guarded(tag: NoteTag, producer) -> None:
        try:
            body = producer()
        except Exception as exc:
            blocks.append(NoteBlock(tag, f"(note provider failed: {exc})"))
            return
        if body is not None:
            blocks.append(NoteBlock(tag, body))

    def variable_list() -> str:
        store = env.store_for(node.node_id)
        names = store.names()
        listing = (
            ", ".join(f"{n} ({store.get(n).size} chars)" for n in names)
            if names
            else "(none)"
        )
        captured = env.captured_this_turn(node.node_id)
        if captured:
            listing += "\nauto-captured from the last message: " + ", ".join(captured)
        return listing

    def clock() -> str:
        stamp = datetime.datetime.fromtimestamp(env.clock(), tz=datetime.timezone.utc)
        return stamp.strftime("%Y-%m-%d %H:%M:%S UTC")

    def working_directory() -> str | None:
        info = env.scripter_state()
        if info is None:
            return None
        files = info.get("files") or []
        listing = ", ".join(files) if files else "(empty)"
        return f"{info.get('workspace', '?')}\nfiles: {listing}"

    def overflow() -> str | None:
        usage = estimated_usage(node)
        budget = node.spec.context_budget
        threshold = node.spec.compression_threshold
        if usage >= threshold * budget:
            return OVERFLOW_WARNING.format(
                usage=usage, budget=budget, percent=100.0 * usage / budget
            )
        return None

    def recommendation() -> str | None:
        matches = env.recommend_for(turn_input_text)
        if not matches:
            return None
        lines = []
        for module_name, doc, score in matches:
            signature = f"@{doc.name}({', '.join(n for n, _k in doc.params)})"
            lines.append(f"{signature} [{module_name}] — {doc.doc}")
        return "\n".join(lines)

    def memory_fragment() -> str | None:
        return env.memory_fragments(turn_input_text)

    guarded(NoteTag.VARIABLE_LIST, variable_list)
    guarded(NoteTag.CLOCK, clock)
    guarded(NoteTag.WORKING_DIRECTORY, working_directory)
    guarded(NoteTag.OVERFLOW_WARNING, overflow)
    guarded(NoteTag.TOOL_RECOMMENDATION, recommendation)
    guarded(NoteTag.MEMORY_FRAGMENT, memory_fragment)
    return blocks


def assemble_context(node: AgentNode, inputs: list[Message], env) -> ContextSnapshot:
    """Snapshot the context for one reasoning step.

    The history window starts at the compression pointer; the inputs are this
    step's incoming messages (not yet part of history).
    """
    turn_input_text = "\n".join(render_record(m) for m in inputs)
    return ContextSnapshot(
        system_prompt=node.spec.system_prompt,
        history_window=node.window,
        turn_input=list(inputs),
        dynamic_notes=dynamic_notes(node, turn_input_text, env),
    )


COMPRESSION_NOTE = "context compressed; summary of earlier history:\n{summary}"


def compress(node: AgentNode, summary: str, make_message) -> Message:
    """Append a summary note and advance the compression pointer to it.

    Prior history is retained in full (auditability) but excluded from future
    windows. ``make_message`` builds a SystemNote message from body text.
    """
    if not summary.strip():
        raise ValueError("summary required: @COMPRESS needs a non-empty fenced body")
    note = make_message(COMPRESSION_NOTE.format(summary=summary))
    node.history.append(note)
    node.compression_pointer = len(node.history) - 1
    return note
