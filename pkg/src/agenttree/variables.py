"""Symbolic variables: named content blobs passed by reference in messages
and by value across process boundaries.

Each node owns a private namespace (copy-on-send; no global table).
Redefinition creates a new version; old versions stay readable for audit.
Identical content is interned once per store, so referencing a blob many
times costs one copy.
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass, field

from .markdown import find_fenced_blocks, parse_embeds
from .model import Attachment, Message

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

DEFAULT_EXPORT_CAP = 8 * 1024 * 1024  # bytes


class Origin(enum.Enum):
    DIRECT = "direct"
    MARKDOWN_CAPTURE = "markdown_capture"
    TOOL_RETURN = "tool_return"
    AGENT_RETURN = "agent_return"


class InvalidVariableName(ValueError):
    def __init__(self, name: str):
        super().__init__(
            f"invalid variable name {name!r}: must match "
            "[A-Za-z_][A-Za-z0-9_]* (letters, digits, underscores; "
            "no leading digit)"
        )


class OversizeVariableError(ValueError):
    def __init__(self, name: str, size: int, cap: int):
        super().__init__(
            f"variable {name!r} is {size} bytes, above the {cap}-byte transport "
            "cap; pass a path within the module's own filesystem instead"
        )


@dataclass(frozen=True)
class Variable:
    name: str
    content: bytes
    media_type: str
    origin: Origin
    owner: int
    version: int
    created_at: float = 0.0

    @property
    def text(self) -> str:
        return self.content.decode("utf-8", errors="replace")

    @property
    def size(self) -> int:
        return len(self.content)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.content).hexdigest()


class VariableStore:
    """Per-node variable namespace with version history and content interning."""

    def __init__(self, owner: int):
        self.owner = owner
        self._versions: dict[str, list[Variable]] = {}
        self._interned: dict[str, bytes] = {}
        self._auto_seq = 0

    def _intern(self, content: bytes) -> bytes:
        digest = hashlib.sha256(content).hexdigest()
        return self._interned.setdefault(digest, content)

    def define(
        self,
        name: str,
        content: str | bytes,
        origin: Origin = Origin.DIRECT,
        media_type: str | None = None,
        created_at: float = 0.0,
    ) -> Variable:
        if not IDENTIFIER.fullmatch(name):
            raise InvalidVariableName(name)
        raw = content.encode("utf-8") if isinstance(content, str) else bytes(content)
        variable = Variable(
            name=name,
            content=self._intern(raw),
            media_type=media_type or ("text/plain" if isinstance(content, str) else "application/octet-stream"),
            origin=origin,
            owner=self.owner,
            version=len(self._versions.get(name, ())) + 1,
            created_at=created_at,
        )
        self._versions.setdefault(name, []).append(variable)
        return variable

    def get(self, name: str) -> Variable | None:
        versions = self._versions.get(name)
        return versions[-1] if versions else None

    def versions(self, name: str) -> list[Variable]:
        return list(self._versions.get(name, ()))

    def names(self) -> list[str]:
        return list(self._versions)

    def next_auto_name(self, node_id: int) -> str:
        self._auto_seq += 1
        return f"auto_{node_id}_{self._auto_seq}"

    def __contains__(self, name: str) -> bool:
        return name in self._versions

    def __len__(self) -> int:
        return len(self._versions)


def capture_markdown(message: Message, store: VariableStore, created_at: float = 0.0) -> list[Variable]:
    """Capture each fenced code block of a message body as an auto variable."""
    captured = []
    for block in find_fenced_blocks(message.body):
        name = store.next_auto_name(store.owner)
        captured.append(
            store.define(
                name,
                block.content,
                origin=Origin.MARKDOWN_CAPTURE,
                created_at=created_at,
            )
        )
    return captured


def resolve_references(body: str, store: VariableStore) -> list[Variable]:
    """Variables mentioned in a body, for transport to the recipient.

    A mention is the exact name as a standalone token, or the target of an
    embed tag. Substring hits ("plan" inside "plant") never transport.
    """
    hits: dict[str, int] = {}
    for name in store.names():
        m = re.search(rf"(?<![A-Za-z0-9_]){re.escape(name)}(?![A-Za-z0-9_])", body)
        if m:
            hits[name] = m.start()
    for tag in parse_embeds(body):
        if tag.resource_id in store and tag.resource_id not in hits:
            hits[tag.resource_id] = tag.span[0]
    ordered = sorted(hits, key=hits.get)
    return [store.get(name) for name in ordered]


def export_by_value(variable: Variable, size_cap: int = DEFAULT_EXPORT_CAP) -> Attachment:
    """Snapshot a variable as a wire payload carrying the full content bytes."""
    if variable.size > size_cap:
        raise OversizeVariableError(variable.name, variable.size, size_cap)
    return Attachment(
        name=variable.name,
        media_type=variable.media_type,
        content=variable.content,
    )


def materialize(store: VariableStore, attachment: Attachment, created_at: float = 0.0) -> Variable:
    """Install a transported payload into the recipient's namespace."""
    return store.define(
        attachment.name,
        attachment.content,
        origin=Origin.DIRECT,
        media_type=attachment.media_type,
        created_at=created_at,
    )
