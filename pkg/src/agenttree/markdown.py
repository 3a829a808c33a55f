"""Unified rich-text protocol: extended markdown with polymorphic embeds.

The dialect is deliberately tiny: CommonMark-style fenced code blocks, the
``![description](resource-id)`` embed tag, and the directive grammar owned by
the interpreter. Everything else passes through uninterpreted.

A serialized message is a single ``%%MSG`` header line carrying a JSON
envelope, followed by the body verbatim. The body is never escaped or
re-flowed, so it round-trips byte-identically no matter what it contains.
"""

from __future__ import annotations

import base64
import enum
import json
import mimetypes
import re
from dataclasses import dataclass

from .model import Attachment, Message, RecipientCapability, Role

MESSAGE_HEADER = "%%MSG "

_FENCE_OPEN = re.compile(r"^ {0,3}(`{3,})([^`\n]*)$")
_FENCE_CLOSE = re.compile(r"^ {0,3}(`{3,})\s*$")
_EMBED = re.compile(r"!\[([^\]\n]*)\]\(([^)\n]+)\)")
_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*://")


@dataclass(frozen=True)
class FencedBlock:
    """One fenced code block, with char offsets into the source text."""

    start: int  # offset of the opening fence line
    end: int  # offset one past the closing fence line (or EOF if unclosed)
    content: str  # text between the fences, without the fence lines
    info: str  # info string after the opening backticks, stripped
    closed: bool


def find_fenced_blocks(text: str) -> list[FencedBlock]:
    """Locate fenced code blocks line by line.

    An opening fence is at least three backticks; the closing fence needs at
    least as many. An unclosed fence runs to end of text.
    """
    blocks: list[FencedBlock] = []
    offset = 0
    open_at: int | None = None
    open_len = 0
    info = ""
    content_start = 0
    for line in text.splitlines(keepends=True):
        bare = line.rstrip("\n")
        if open_at is None:
            m = _FENCE_OPEN.match(bare)
            if m:
                open_at = offset
                open_len = len(m.group(1))
                info = m.group(2).strip()
                content_start = offset + len(line)
        else:
            m = _FENCE_CLOSE.match(bare)
            if m and len(m.group(1)) >= open_len:
                blocks.append(
                    FencedBlock(
                        start=open_at,
                        end=offset + len(line),
                        content=text[content_start:offset],
                        info=info,
                        closed=True,
                    )
                )
                open_at = None
        offset += len(line)
    if open_at is not None:
        blocks.append(
            FencedBlock(
                start=open_at,
                end=len(text),
                content=text[content_start:],
                info=info,
                closed=False,
            )
        )
    return blocks


def outside_fences(text: str) -> list[tuple[int, int]]:
    """Return the (start, end) spans of text not covered by fenced blocks."""
    spans = []
    pos = 0
    for block in find_fenced_blocks(text):
        if block.start > pos:
            spans.append((pos, block.start))
        pos = block.end
    if pos < len(text):
        spans.append((pos, len(text)))
    return spans


# ---------------------------------------------------------------------------
# Embed tags


class ResourceKind(enum.Enum):
    VARIABLE = "variable"
    URL = "url"
    PATH = "path"


@dataclass(frozen=True)
class EmbedTag:
    description: str
    resource_id: str
    span: tuple[int, int]

    def render(self) -> str:
        return f"![{self.description}]({self.resource_id})"


def parse_embeds(body: str) -> list[EmbedTag]:
    """All well-formed embed tags outside fenced code blocks, in order."""
    tags = []
    for start, end in outside_fences(body):
        for m in _EMBED.finditer(body, start, end):
            if m.end() > end:
                continue
            tags.append(
                EmbedTag(
                    description=m.group(1),
                    resource_id=m.group(2),
                    span=(m.start(), m.end()),
                )
            )
    return tags


def classify_resource(resource_id: str, variable_names: set[str]) -> ResourceKind:
    """Classify an embed target: known variable, URL scheme, else path."""
    if resource_id in variable_names:
        return ResourceKind.VARIABLE
    if _SCHEME.match(resource_id):
        return ResourceKind.URL
    return ResourceKind.PATH


class EmbedKind(enum.Enum):
    RENDER_DIRECTIVE = "render_directive"
    MEDIA_PAYLOAD = "media_payload"
    SYMBOLIC_REFERENCE = "symbolic_reference"


@dataclass(frozen=True)
class ResolvedEmbed:
    kind: EmbedKind
    resource_id: str
    description: str
    media_type: str | None = None
    payload: bytes | None = None
    broken: bool = False
    note: str | None = None  # system note emitted alongside, if any


def guess_media_type(resource_id: str, declared: str | None = None) -> str:
    if declared:
        return declared
    guessed, _ = mimetypes.guess_type(resource_id)
    return guessed or "application/octet-stream"


def resolve_for_recipient(
    tag: EmbedTag,
    capability: RecipientCapability,
    lookup,
) -> ResolvedEmbed:
    """Resolve one embed tag for a recipient.

    ``lookup(resource_id)`` returns ``(content_bytes, media_type)`` or None.
    Total: every (tag, capability) pair yields a variant, never an exception.
    """
    resolved = lookup(tag.resource_id)
    if capability is RecipientCapability.HUMAN_UI:
        if resolved is None:
            return ResolvedEmbed(
                kind=EmbedKind.RENDER_DIRECTIVE,
                resource_id=tag.resource_id,
                description=tag.description,
                media_type=guess_media_type(tag.resource_id),
                broken=True,
            )
        content, media_type = resolved
        return ResolvedEmbed(
            kind=EmbedKind.RENDER_DIRECTIVE,
            resource_id=tag.resource_id,
            description=tag.description,
            media_type=guess_media_type(tag.resource_id, media_type),
        )
    if capability is RecipientCapability.MULTIMODAL_MODEL:
        if resolved is None:
            return ResolvedEmbed(
                kind=EmbedKind.SYMBOLIC_REFERENCE,
                resource_id=tag.resource_id,
                description=tag.description,
                note=f"unresolved media: {tag.resource_id}",
            )
        content, media_type = resolved
        return ResolvedEmbed(
            kind=EmbedKind.MEDIA_PAYLOAD,
            resource_id=tag.resource_id,
            description=tag.description,
            media_type=guess_media_type(tag.resource_id, media_type),
            payload=content,
        )
    return ResolvedEmbed(
        kind=EmbedKind.SYMBOLIC_REFERENCE,
        resource_id=tag.resource_id,
        description=tag.description,
    )


# ---------------------------------------------------------------------------
# Message serialization


def serialize_message(message: Message) -> str:
    """Render a message as a header line plus the body verbatim."""
    envelope = {
        "id": message.id,
        "role": message.role.value,
        "sender": message.sender,
        "created_at": message.created_at,
        "attachments": [
            {
                "name": a.name,
                "media_type": a.media_type,
                "content": base64.b64encode(a.content).decode("ascii"),
            }
            for a in message.attachments
        ],
    }
    return MESSAGE_HEADER + json.dumps(envelope, sort_keys=True) + "\n" + message.body


def parse_message(text: str) -> Message:
    """Inverse of serialize_message; never fails.

    Text without a valid header becomes a caller-role prose message with the
    whole text as body.
    """
    if text.startswith(MESSAGE_HEADER):
        header, sep, body = text.partition("\n")
        try:
            envelope = json.loads(header[len(MESSAGE_HEADER) :])
            return Message(
                id=str(envelope["id"]),
                role=Role(envelope["role"]),
                sender=str(envelope["sender"]),
                body=body if sep else "",
                attachments=tuple(
                    Attachment(
                        name=a["name"],
                        media_type=a["media_type"],
                        content=base64.b64decode(a["content"]),
                    )
                    for a in envelope.get("attachments", ())
                ),
                created_at=float(envelope.get("created_at", 0.0)),
            )
        except (json.JSONDecodeError, KeyError, ValueError, TypeError):
            pass
    return Message(id="", role=Role.CALLER, sender="unknown", body=text)
