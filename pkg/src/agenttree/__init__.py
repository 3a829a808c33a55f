"""A runtime for recursive trees of cooperating agents.

Agents are isolated nodes connected by stateful dialogues; a pattern-action
interpreter executes the directives each agent emits, growing the tree on
demand, moving data through symbolic variables, and calling out-of-process
tool modules over framed RPC. Every kernel action lands in an append-only
event log that fully determines the tree.
"""

from .backend import (
    BackendError,
    BackendRequest,
    HttpBackend,
    RecordingBackend,
    Scenario,
    ScenarioRule,
    ScriptedBackend,
)
from .events import EventKind, EventLog, load_log, reconstruct_tree
from .model import (
    AgentNode,
    AgentSpec,
    Attachment,
    Message,
    NodeStatus,
    RecipientCapability,
    Role,
    validate_tree,
)
from .runtime import Runtime, RuntimeFault

__version__ = "0.1.0"

__all__ = [
    "AgentNode",
    "AgentSpec",
    "Attachment",
    "BackendError",
    "BackendRequest",
    "EventKind",
    "EventLog",
    "HttpBackend",
    "Message",
    "NodeStatus",
    "RecipientCapability",
    "RecordingBackend",
    "Role",
    "Runtime",
    "RuntimeFault",
    "Scenario",
    "ScenarioRule",
    "ScriptedBackend",
    "load_log",
    "reconstruct_tree",
    "validate_tree",
    "__version__",
]
