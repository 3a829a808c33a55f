"""Event-sourced observability: the append-only chronological log.

Every kernel action emits one event; the live tree structure is a pure
function of the log, so the log alone supports tree reconstruction, audit,
and the supervision UI's live stream. Records are line-delimited JSON under a
version-stamped header line, flushed before the next step begins.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field

FORMAT_NAME = "agenttree-events"
FORMAT_VERSION = 1


class EventKind(enum.Enum):
    NODE_CREATED = "node_created"
    CALL = "call"
    RETURN = "return"
    LLM_TURN = "llm_turn"
    TOOL_CALL = "tool_call"
    TOOL_RESULT = "tool_result"
    COMPRESSION = "compression"
    INTERVENTION = "intervention"
    NOTIFICATION = "notification"
    INGEST = "ingest"


@dataclass(frozen=True)
class EventRecord:
    seq: int
    kind: EventKind
    node_id: int | None
    parent_id: int | None
    payload: dict
    at: float

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind.value,
            "node_id": self.node_id,
            "parent_id": self.parent_id,
            "payload": self.payload,
            "at": self.at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EventRecord":
        return cls(
            seq=int(data["seq"]),
            kind=EventKind(data["kind"]),
            node_id=data.get("node_id"),
            parent_id=data.get("parent_id"),
            payload=data.get("payload") or {},
            at=float(data.get("at", 0.0)),
        )


def header_line() -> str:
    return json.dumps(
        {"format": FORMAT_NAME, "version": FORMAT_VERSION}, sort_keys=True
    )


class StorageError(RuntimeError):
    """Durable append failed; the run must pause rather than drop events."""


class EventLog:
    """Gap-free, strictly increasing event sequence with write-ahead flushing."""

    def __init__(self, path: str | None = None, clock=None):
        self.path = path
        self._clock = clock or (lambda: 0.0)
        self._records: list[EventRecord] = []
        self._fh = None
        if path is not None:
            exists = os.path.exists(path) and os.path.getsize(path) > 0
            self._fh = open(path, "a", encoding="utf-8")
            if not exists:
                self._fh.write(header_line() + "\n")
                self._fh.flush()

    @property
    def records(self) -> list[EventRecord]:
        return list(self._records)

    @property
    def next_seq(self) -> int:
        return len(self._records)

    def append(
        self,
        kind: EventKind,
        node_id: int | None = None,
        parent_id: int | None = None,
        payload: dict | None = None,
    ) -> int:
        record = EventRecord(
            seq=self.next_seq,
            kind=kind,
            node_id=node_id,
            parent_id=parent_id,
            payload=payload or {},
            at=self._clock(),
        )
        if self._fh is not None:
            try:
                self._fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
                self._fh.flush()
            except OSError as exc:
                raise StorageError(f"event append failed: {exc}") from exc
        self._records.append(record)
        return record.seq

    def since(self, seq: int) -> list[EventRecord]:
        return [r for r in self._records if r.seq >= seq]

    def preload(self, records: list[EventRecord]) -> None:
        """Adopt an existing record list (used when resuming a session)."""
        assert not self._records
        self._records = list(records)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


@dataclass
class LoadedLog:
    records: list[EventRecord]
    truncated_at_line: int | None = None  # first unparseable line, if any

    @property
    def complete(self) -> bool:
        return self.truncated_at_line is None


def load_log(path: str) -> LoadedLog:
    """Read an event file, tolerating a corrupt or truncated tail.

    Parsing stops at the first bad record; everything before it is returned
    together with the cut point.
    """
    records: list[EventRecord] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        return LoadedLog(records=[], truncated_at_line=None)
    try:
        header = json.loads(lines[0])
        if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
            raise ValueError("bad header")
    except (json.JSONDecodeError, ValueError, AttributeError):
        return LoadedLog(records=[], truncated_at_line=1)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            record = EventRecord.from_json(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError):
            return LoadedLog(records=records, truncated_at_line=lineno)
        if record.seq != len(records):
            return LoadedLog(records=records, truncated_at_line=lineno)
        records.append(record)
    return LoadedLog(records=records, truncated_at_line=None)


# ---------------------------------------------------------------------------
# Topology reconstruction


@dataclass
class ReconstructedNode:
    node_id: int
    parent_id: int | None
    child_name: str | None
    agent_type: str
    children: dict[str, int] = field(default_factory=dict)
    transcript: list[dict] = field(default_factory=list)


@dataclass
class ReconstructedTree:
    nodes: dict[int, ReconstructedNode] = field(default_factory=dict)

    def structure(self) -> dict[int, tuple]:
        """Canonical structural fingerprint for equality checks."""
        return {
            node_id: (
                node.parent_id,
                node.child_name,
                node.agent_type,
                tuple(sorted(node.children.items())),
            )
            for node_id, node in self.nodes.items()
        }

    def outline(self) -> list[tuple[int, ReconstructedNode]]:
        """Depth-first (depth, node) pairs for rendering an indented tree."""
        roots = [n for n in self.nodes.values() if n.parent_id is None]
        out: list[tuple[int, ReconstructedNode]] = []

        def walk(node: ReconstructedNode, depth: int) -> None:
            out.append((depth, node))
            for _name, child_id in sorted(node.children.items()):
                child = self.nodes.get(child_id)
                if child is not None:
                    walk(child, depth + 1)

        for root in sorted(roots, key=lambda n: n.node_id):
            walk(root, 0)
        return out


def reconstruct_tree(records: list[EventRecord]) -> ReconstructedTree:
    """Rebuild the tree and per-node transcripts from a log prefix."""
    tree = ReconstructedTree()
    for record in records:
        if record.kind is EventKind.NODE_CREATED:
            node = ReconstructedNode(
                node_id=record.node_id,
                parent_id=record.parent_id,
                child_name=record.payload.get("child_name"),
                agent_type=record.payload.get("agent_type", ""),
            )
            tree.nodes[record.node_id] = node
            if record.parent_id is not None and record.parent_id in tree.nodes:
                tree.nodes[record.parent_id].children[node.child_name] = node.node_id
        elif record.kind in (
            EventKind.CALL,
            EventKind.RETURN,
            EventKind.LLM_TURN,
            EventKind.TOOL_CALL,
            EventKind.TOOL_RESULT,
            EventKind.COMPRESSION,
            EventKind.INTERVENTION,
        ):
            node = tree.nodes.get(record.node_id)
            if node is not None:
                node.transcript.append(
                    {"seq": record.seq, "kind": record.kind.value, **record.payload}
                )
    return tree


def registry_structure(registry) -> dict[int, tuple]:
    """The live registry's structural fingerprint, matching ReconstructedTree."""
    return {
        node.node_id: (
            node.parent,
            node.child_name,
            node.spec.type_name,
            tuple(sorted(node.children.items())),
        )
        for node in registry.values()
    }


def call_return_balanced(records: list[EventRecord]) -> bool:
    """Check the Call/Return subsequence forms a properly nested Dyck word."""
    stack: list[int] = []
    for record in records:
        if record.kind is EventKind.CALL:
            stack.append(record.node_id)
        elif record.kind is EventKind.RETURN:
            if not stack or stack[-1] != record.node_id:
                return False
            stack.pop()
    return not stack
