"""Shared data model for the agent call tree.

Everything here is plain data: nodes, messages, specs, and the per-turn
context snapshot. Mutation happens only on the scheduler's single logical
execution thread; values are freely copyable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Role(enum.Enum):
    """Conversation party of a history record.

    TOOL_FEEDBACK and SYSTEM_NOTE records are private to the owning agent:
    they are never transmitted to the caller.
    """

    SYSTEM = "system"
    CALLER = "caller"
    ASSISTANT = "assistant"
    TOOL_FEEDBACK = "tool_feedback"
    SYSTEM_NOTE = "system_note"


#: Roles that never leave the owning agent's history.
PRIVATE_ROLES = frozenset({Role.TOOL_FEEDBACK, Role.SYSTEM_NOTE})


class NodeStatus(enum.Enum):
    IDLE = "idle"
    RUNNING = "running"
    WAITING_FOR_CHILD = "waiting_for_child"
    WAITING_FOR_CALLER = "waiting_for_caller"


class RecipientCapability(enum.Enum):
    """What a message recipient can do with embedded media."""

    HUMAN_UI = "human_ui"
    MULTIMODAL_MODEL = "multimodal_model"
    TEXT_ONLY_MODEL = "text_only_model"


@dataclass(frozen=True)
class Attachment:
    """A resolved variable payload travelling with a message."""

    name: str
    media_type: str
    content: bytes


@dataclass(eq=False)
class Message:
    """One record of a dialogue, in extended-markdown form.

    ``created_at`` is informational only and excluded from equality.
    """

    id: str
    role: Role
    sender: str
    body: str
    attachments: tuple[Attachment, ...] = ()
    created_at: float = 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Message):
            return NotImplemented
        return (
            self.id == other.id
            and self.role == other.role
            and self.sender == other.sender
            and self.body == other.body
            and self.attachments == other.attachments
        )

    def __hash__(self) -> int:
        return hash((self.id, self.role, self.sender, self.body))


@dataclass(frozen=True)
class AgentSpec:
    """Static definition of an agent type."""

    type_name: str
    system_prompt: str
    static_patterns: frozenset[str] = frozenset({"CALL", "DEFINE", "COMPRESS"})
    context_budget: int = 32_000
    compression_threshold: float = 0.8
    capability: RecipientCapability = RecipientCapability.TEXT_ONLY_MODEL
    iteration_cap: int = 16
    # Replies from child agents longer than this are shown as a truncated
    # preview plus the auto-assigned variable name instead of inline text.
    reply_inline_cap: int = 4096

    def __post_init__(self) -> None:
        if not 0.0 < self.compression_threshold <= 1.0:
            raise ValueError("compression_threshold must be in (0, 1]")
        if self.context_budget <= 0:
            raise ValueError("context_budget must be positive")
        # CALL/DEFINE/COMPRESS are the statically linked essentials; an agent
        # without them cannot grow the tree or manage its own memory.
        for required in ("CALL", "DEFINE", "COMPRESS"):
            if required not in self.static_patterns:
                object.__setattr__(
                    self, "static_patterns", self.static_patterns | {required}
                )


class NoteTag(enum.Enum):
    """Block kinds of the per-turn dynamic notes, in render order."""

    VARIABLE_LIST = "variable_list"
    CLOCK = "clock"
    WORKING_DIRECTORY = "working_directory"
    OVERFLOW_WARNING = "overflow_warning"
    TOOL_RECOMMENDATION = "tool_recommendation"
    MEMORY_FRAGMENT = "memory_fragment"


@dataclass(frozen=True)
class NoteBlock:
    tag: NoteTag
    body: str


@dataclass
class ContextSnapshot:
    """The ordered context tuple rendered for one reasoning step.

    Render order is fixed: system prompt, history window, turn input,
    dynamic notes — static content first, volatile content last.
    """

    system_prompt: str
    history_window: list[Message]
    turn_input: list[Message]
    dynamic_notes: list[NoteBlock]


@dataclass
class AgentNode:
    """One vertex of the call tree.

    History is append-only; compression moves ``compression_pointer`` but
    never deletes records.
    """

    node_id: int
    spec: AgentSpec
    parent: int | None
    child_name: str | None  # dialogue handle chosen by the caller; None at root
    children: dict[str, int] = field(default_factory=dict)
    history: list[Message] = field(default_factory=list)
    compression_pointer: int = 0
    status: NodeStatus = NodeStatus.IDLE
    llm_turns: int = 0  # backend invocations so far, for scenario matching

    @property
    def window(self) -> list[Message]:
        return self.history[self.compression_pointer :]


def validate_tree(registry: dict[int, AgentNode]) -> list[str]:
    """Check the structural invariants of a node registry.

    Returns an empty list when the registry forms a proper tree (exactly one
    root, no cycles, consistent parent/children links, at most one RUNNING
    node); otherwise one human-readable line per violation.
    """
    violations: list[str] = []
    if not registry:
        return violations

    roots = [n for n in registry.values() if n.parent is None]
    if len(roots) != 1:
        violations.append(f"expected exactly one root, found {len(roots)}")

    for node in registry.values():
        if node.parent is not None:
            if node.parent not in registry:
                violations.append(
                    f"node {node.node_id}: parent {node.parent} not in registry"
                )
            else:
                parent = registry[node.parent]
                if parent.children.get(node.child_name or "") != node.node_id:
                    violations.append(
                        f"node {node.node_id}: not listed among children of "
                        f"parent {node.parent}"
                    )
        for name, child_id in node.children.items():
            if child_id not in registry:
                violations.append(
                    f"node {node.node_id}: child {name!r} -> {child_id} missing"
                )
            elif registry[child_id].parent != node.node_id:
                violations.append(
                    f"node {node.node_id}: child {name!r} -> {child_id} does not "
                    "point back to this parent"
                )
        if not 0 <= node.compression_pointer <= len(node.history):
            violations.append(
                f"node {node.node_id}: compression pointer "
                f"{node.compression_pointer} outside [0, {len(node.history)}]"
            )

    # Cycle detection: walk parent links from every node; a tree walk must
    # terminate at a root within |registry| hops.
    for node in registry.values():
        seen = set()
        current: AgentNode | None = node
        while current is not None and current.parent is not None:
            if current.node_id in seen:
                violations.append(f"cycle through node {node.node_id}")
                break
            seen.add(current.node_id)
            current = registry.get(current.parent)

    running = [n.node_id for n in registry.values() if n.status is NodeStatus.RUNNING]
    if len(running) > 1:
        violations.append(f"multiple RUNNING nodes: {running}")

    return violations
