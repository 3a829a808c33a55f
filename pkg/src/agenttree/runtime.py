"""The call-tree runtime: CALL/return semantics, sequential scheduling,
on-demand topology growth, intervention, persistence, and the dispatch
surface the interpreter executes against.

One logical execution thread owns all node mutation. pause/resume/inject are
callable from other threads through a small thread-safe queue and are
observed only at between-step boundaries; a backend invocation is never
interrupted mid-flight.
"""

from __future__ import annotations

import base64
import collections
import json
import os
import threading
from dataclasses import dataclass

from . import loop
from .backend import BackendError, render
from .events import EventKind, EventLog, StorageError, load_log
from .interpreter import (
    ActionKind,
    ParsedAction,
    Param,
    PatternSet,
    SyntaxPattern,
    VariableRef,
    execute,
    scan,
)
from .memory import Hippocampus
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
from .rpc.client import ModuleError, ModuleRegistry, recommend, register_synthesized_module
from .rpc.wire import FunctionDoc
from .variables import (
    Origin,
    VariableStore,
    capture_markdown,
    export_by_value,
    materialize,
    resolve_references,
)

SESSION_FORMAT = "agenttree-session"
SESSION_VERSION = 1

DEFAULT_DEPTH_LIMIT = 8
DEFAULT_WIDTH_LIMIT = 16

BUILTIN_PATTERNS = PatternSet()
for _p in (
    SyntaxPattern(
        name="CALL",
        params=(
            Param("agent_type", "string"),
            Param("name", "string"),
            Param("message", "heredoc-body"),
        ),
        action_kind=ActionKind.AGENT_CALL,
        documentation=(
            "Send a message to a child agent. The first call with a new name "
            "creates the agent; later calls continue the same dialogue."
        ),
    ),
    SyntaxPattern(
        name="DEFINE",
        params=(Param("name", "identifier"), Param("content", "heredoc-body")),
        action_kind=ActionKind.INTERNAL,
        documentation="Store the fenced body as a named variable.",
    ),
    SyntaxPattern(
        name="COMPRESS",
        params=(Param("summary", "heredoc-body"),),
        action_kind=ActionKind.INTERNAL,
        documentation=(
            "Replace your visible history with the fenced summary to free "
            "context space."
        ),
    ),
    SyntaxPattern(
        name="LOAD_MODULE",
        params=(Param("address", "string"),),
        action_kind=ActionKind.INTERNAL,
        documentation="Connect a tool module server at host:port or a socket path.",
    ),
):
    BUILTIN_PATTERNS.register(_p)


class RuntimeFault(RuntimeError):
    """A fault that aborts the current turn; tree state stays re-enterable."""


@dataclass(frozen=True)
class InterventionRequest:
    target: int | str  # node id or "active"
    body: str
    issued_at: float


class Runtime:
    def __init__(
        self,
        specs: dict[str, AgentSpec],
        root_type: str,
        backend,
        session_path: str | None = None,
        clock=None,
        depth_limit: int = DEFAULT_DEPTH_LIMIT,
        width_limit: int = DEFAULT_WIDTH_LIMIT,
        memory_enabled: bool = True,
    ):
        if root_type not in specs:
            raise ValueError(f"unknown root agent type {root_type!r}")
        self.specs = dict(specs)
        self.root_type = root_type
        self.backend = backend
        self.clock = clock or __import__("time").time
        self.depth_limit = depth_limit
        self.width_limit = width_limit

        self.session_path = session_path
        events_path = None
        if session_path is not None:
            os.makedirs(session_path, exist_ok=True)
            events_path = os.path.join(session_path, "events.jsonl")
        self.log = EventLog(path=events_path, clock=lambda: self.clock())

        self.registry: dict[int, AgentNode] = {}
        self.stores: dict[int, VariableStore] = {}
        self.memory: Hippocampus | None = Hippocampus() if memory_enabled else None
        self.modules = ModuleRegistry()
        self._module_patterns = PatternSet()
        self._next_node_id = 0
        self._message_seq = 0
        self.root_id: int | None = None

        self._intervention_lock = threading.Lock()
        self._interventions: collections.deque[InterventionRequest] = collections.deque()
        self._running_allowed = threading.Event()
        self._running_allowed.set()
        self._file_owners: dict[str, int] = {}
        self._captured: dict[int, list[str]] = {}
        self._tool_seq = 0

    # ------------------------------------------------------------------
    # environment surface used by loop.dynamic_notes and the interpreter

    def store_for(self, node_id: int) -> VariableStore:
        return self.stores[node_id]

    def captured_this_turn(self, node_id: int) -> list[str]:
        return self._captured.get(node_id, [])

    def scripter_state(self) -> dict | None:
        descriptor = self.modules.descriptor("scripter")
        if descriptor is None:
            return None
        response = self.modules.query_state("scripter")
        return response.meta

    def recommend_for(self, context_text: str):
        return recommend(context_text, self.modules.visible_catalog())

    def memory_fragments(self, query_text: str) -> str | None:
        if self.memory is None or len(self.memory) == 0:
            return None
        results = self.memory.search(query_text, k=3)
        if not results:
            return None
        return self.memory.format_fragments(results, now=self.clock())

    def pattern_for(self, name: str) -> SyntaxPattern:
        pattern = BUILTIN_PATTERNS.get(name) or self._module_patterns.get(name)
        assert pattern is not None, f"dispatch for unregistered pattern {name}"
        return pattern

    def active_patterns(self, node: AgentNode) -> PatternSet:
        static = BUILTIN_PATTERNS.restricted(node.spec.static_patterns)
        return static.merged(self._module_patterns)

    # ------------------------------------------------------------------
    # module management

    def load_module(self, address: str):
        descriptor = self.modules.load_module(address)
        for doc in descriptor.functions:
            self._module_patterns.register(
                SyntaxPattern(
                    name=doc.name,
                    params=tuple(Param(n, k) for n, k in doc.params),
                    action_kind=ActionKind.TOOL_CALL,
                    documentation=doc.doc,
                    provider=descriptor.module_name,
                )
            )
        return descriptor

    def register_synthesized_module(self, program_text: str, manifest: list[FunctionDoc], name: str = "synth"):
        scripter = self.modules.descriptor("scripter")
        if scripter is None:
            raise ModuleError("scripter module must be loaded before synthesizing modules")
        workspace = (self.scripter_state() or {}).get("workspace")
        if not workspace:
            raise ModuleError("scripter reported no workspace directory")
        descriptor = register_synthesized_module(
            program_text, manifest, workspace, self.modules, name=name
        )
        for doc in descriptor.functions:
            self._module_patterns.register(
                SyntaxPattern(
                    name=doc.name,
                    params=tuple(Param(n, k) for n, k in doc.params),
                    action_kind=ActionKind.TOOL_CALL,
                    documentation=doc.doc,
                    provider=descriptor.module_name,
                )
            )
        return descriptor

    # ------------------------------------------------------------------
    # message and node construction

    def _next_message_id(self) -> str:
        self._message_seq += 1
        return f"m{self._message_seq}"

    def _now(self) -> float:
        return round(float(self.clock()) * 1000) / 1000  # millisecond precision

    def make_message(
        self,
        role: Role,
        sender: str,
        body: str,
        attachments: tuple[Attachment, ...] = (),
    ) -> Message:
        return Message(
            id=self._next_message_id(),
            role=role,
            sender=sender,
            body=body,
            attachments=attachments,
            created_at=self._now(),
        )

    def _create_node(
        self, spec: AgentSpec, parent: int | None, child_name: str | None
    ) -> AgentNode:
        node_id = self._next_node_id
        self._next_node_id += 1
        node = AgentNode(node_id=node_id, spec=spec, parent=parent, child_name=child_name)
        self.registry[node_id] = node
        self.stores[node_id] = VariableStore(owner=node_id)
        self.log.append(
            EventKind.NODE_CREATED,
            node_id=node_id,
            parent_id=parent,
            payload={"agent_type": spec.type_name, "child_name": child_name},
        )
        return node

    # ------------------------------------------------------------------
    # control surface (thread-safe)

    def pause(self) -> str:
        self._running_allowed.clear()
        return "paused"

    def resume(self) -> str:
        if self._running_allowed.is_set():
            return "not paused"
        self._running_allowed.set()
        return "resumed"

    @property
    def paused(self) -> bool:
        return not self._running_allowed.is_set()

    def inject_intervention(self, target: int | str, body: str) -> str:
        """Queue a message for delivery at the next between-steps boundary."""
        if target != "active" and target not in self.registry:
            return f"deferred: unknown node {target}"
        with self._intervention_lock:
            self._interventions.append(
                InterventionRequest(target=target, body=body, issued_at=self._now())
            )
        return "queued"

    def _drain_interventions(self, node: AgentNode) -> list[Message]:
        delivered: list[Message] = []
        with self._intervention_lock:
            remaining: collections.deque[InterventionRequest] = collections.deque()
            while self._interventions:
                request = self._interventions.popleft()
                if request.target == "active" or request.target == node.node_id:
                    message = self.make_message(
                        Role.CALLER,
                        "user",
                        f"[user intervention]\n{request.body}",
                    )
                    delivered.append(message)
                    self.log.append(
                        EventKind.INTERVENTION,
                        node_id=node.node_id,
                        payload={"body": request.body, "target": str(request.target)},
                    )
                else:
                    remaining.append(request)
            self._interventions = remaining
        return delivered

    # ------------------------------------------------------------------
    # the agent loop

    def run_root(self, user_text: str) -> Message:
        """Start or re-enter the tree with a user message; returns the reply."""
        if not user_text.strip():
            raise ValueError("empty user message")
        if self.root_id is None:
            root = self._create_node(self.specs[self.root_type], parent=None, child_name=None)
            self.root_id = root.node_id
        root = self.registry[self.root_id]
        if self.memory is not None:
            self.memory.ingest(user_text, source="user", created_at=self._now())
            self.log.append(
                EventKind.INGEST, payload={"text": user_text, "source": "user"}
            )
        incoming = self.make_message(Role.CALLER, "user", user_text)
        return self._run_turn(root, [incoming])

    def _deliver(self, node: AgentNode, messages: list[Message]) -> None:
        """Recipient-side processing of incoming caller messages."""
        store = self.stores[node.node_id]
        captured_names = []
        for message in messages:
            for attachment in message.attachments:
                materialize(store, attachment, created_at=self._now())
            for variable in capture_markdown(message, store, created_at=self._now()):
                captured_names.append(variable.name)
        if captured_names:
            self._captured[node.node_id] = captured_names

    def _run_turn(self, node: AgentNode, incoming: list[Message]) -> Message:
        if node.status is NodeStatus.RUNNING:
            raise RuntimeFault(f"node {node.node_id} is already running")
        previous_status = node.status
        node.status = NodeStatus.RUNNING
        self._deliver(node, incoming)
        inputs = list(incoming)
        reply_body: str | None = None
        try:
            for _ in range(node.spec.iteration_cap):
                self._running_allowed.wait()
                inputs.extend(self._drain_interventions(node))
                outcome = self._step(node, inputs)
                self._captured.pop(node.node_id, None)
                if outcome.to_caller:
                    reply_body = outcome.text
                    break
                inputs = [
                    self.make_message(Role.TOOL_FEEDBACK, "interpreter", outcome.text)
                ]
            if reply_body is None:
                reply_body = (
                    f"[system note: iteration cap {node.spec.iteration_cap} reached "
                    "without a reply to the caller; redirect or simplify the task]"
                )
        except Exception:
            node.status = previous_status if previous_status is not NodeStatus.RUNNING else NodeStatus.IDLE
            raise
        asks_question = reply_body.rstrip().endswith("?")
        node.status = (
            NodeStatus.WAITING_FOR_CALLER if asks_question else NodeStatus.IDLE
        )
        attachments = self._export_references(reply_body, self.stores[node.node_id])
        return self.make_message(
            Role.ASSISTANT, str(node.node_id), reply_body, attachments=attachments
        )

    def _export_references(self, body: str, store: VariableStore) -> tuple[Attachment, ...]:
        attachments = []
        for variable in resolve_references(body, store):
            try:
                attachments.append(export_by_value(variable))
            except ValueError:
                continue  # oversize: name still travels, content stays put
        return tuple(attachments)

    def _step(self, node: AgentNode, inputs: list[Message]) -> loop.StepOutcome:
        snapshot = loop.assemble_context(node, inputs, self)
        request = render(
            snapshot,
            agent_type=node.spec.type_name,
            node_id=node.node_id,
            turn_index=node.llm_turns,
        )
        try:
            output = self.backend.complete(request)
        except BackendError as exc:
            raise RuntimeFault(f"backend failed: {exc}") from exc
        node.history.extend(inputs)
        node.history.append(self.make_message(Role.ASSISTANT, str(node.node_id), output))
        node.llm_turns += 1

        result = scan(output, self.active_patterns(node))
        feedback = execute(result, node, self)
        self._force_compress_if_needed(node)
        to_caller = feedback == ""
        self.log.append(
            EventKind.LLM_TURN,
            node_id=node.node_id,
            payload={
                "inputs": [
                    {"role": m.role.value, "sender": m.sender, "body": m.body}
                    for m in inputs
                ],
                "output": output,
                "feedback": feedback,
                "to_caller": to_caller,
            },
        )
        if to_caller:
            return loop.StepOutcome(to_caller=True, text=output)
        return loop.StepOutcome(to_caller=False, text=feedback)

    def _force_compress_if_needed(self, node: AgentNode) -> None:
        budget = node.spec.context_budget
        if loop.estimated_usage(node) > loop.FORCE_COMPRESS_FACTOR * budget:
            self._compress(node, "history truncated by system", forced=True)

    def _compress(self, node: AgentNode, summary: str, forced: bool = False) -> str:
        loop.compress(
            node,
            summary,
            lambda body: self.make_message(Role.SYSTEM_NOTE, "kernel", body),
        )
        self.log.append(
            EventKind.COMPRESSION,
            node_id=node.node_id,
            payload={
                "summary": summary,
                "pointer": node.compression_pointer,
                "forced": forced,
            },
        )
        return "history compressed; visible window now starts at the summary note"

    # ------------------------------------------------------------------
    # interpreter dispatch

    def dispatch(self, action: ParsedAction, pattern: SyntaxPattern, node: AgentNode) -> str:
        if pattern.action_kind is ActionKind.AGENT_CALL:
            return self._dispatch_call(action, node)
        if pattern.action_kind is ActionKind.TOOL_CALL:
            return self._dispatch_tool(action, pattern, node)
        return self._dispatch_internal(action, node)

    def _literal(self, value, node: AgentNode, *, as_name: bool = False) -> str:
        """Resolve one directive argument to text.

        Bare identifiers are variable references unless the parameter itself
        names something new (as_name).
        """
        if isinstance(value, VariableRef):
            if as_name:
                return value.name
            variable = self.stores[node.node_id].get(value.name)
            if variable is None:
                raise ValueError(
                    f"unknown variable {value.name!r}; defined: "
                    f"{', '.join(self.stores[node.node_id].names()) or '(none)'}"
                )
            return variable.text
        return str(value)

    def _dispatch_internal(self, action: ParsedAction, node: AgentNode) -> str:
        store = self.stores[node.node_id]
        if action.pattern == "DEFINE":
            name = self._literal(action.arguments["name"], node, as_name=True)
            content = str(action.arguments.get("content", ""))
            variable = store.define(name, content, origin=Origin.DIRECT, created_at=self._now())
            return f"variable {name!r} stored ({variable.size} chars)"
        if action.pattern == "COMPRESS":
            return self._compress(node, str(action.arguments.get("summary", "")))
        if action.pattern == "LOAD_MODULE":
            address = self._literal(action.arguments["address"], node)
            descriptor = self.load_module(address)
            names = ", ".join(f.name for f in descriptor.functions)
            return f"module {descriptor.module_name!r} loaded; functions: {names}"
        raise ValueError(f"no internal handler for @{action.pattern}")

    def _dispatch_call(self, action: ParsedAction, node: AgentNode) -> str:
        agent_type = self._literal(action.arguments["agent_type"], node)
        child_name = self._literal(action.arguments["name"], node, as_name=True)
        message_body = str(action.arguments.get("message", ""))
        return self.call(node, agent_type, child_name, message_body)

    def _dispatch_tool(self, action: ParsedAction, pattern: SyntaxPattern, node: AgentNode) -> str:
        store = self.stores[node.node_id]
        args: dict = {}
        blobs: dict = {}
        for param in pattern.params:
            if param.name not in action.arguments:
                continue
            value = action.arguments[param.name]
            if isinstance(value, VariableRef):
                variable = store.get(value.name)
                if variable is None:
                    raise ValueError(f"unknown variable {value.name!r}")
                payload = export_by_value(variable)  # enforces the size cap
                if variable.media_type.startswith("text/"):
                    args[param.name] = variable.text
                else:
                    blobs[param.name] = (payload.content, payload.media_type)
            else:
                args[param.name] = value
        self.log.append(
            EventKind.TOOL_CALL,
            node_id=node.node_id,
            payload={
                "module": pattern.provider,
                "function": action.pattern,
                "args": {k: (v if not isinstance(v, str) or len(v) < 512 else v[:512]) for k, v in args.items()},
            },
        )
        try:
            result = self.modules.invoke(pattern.provider, action.pattern, args, blobs)
        except ModuleError as exc:
            self.log.append(
                EventKind.TOOL_RESULT,
                node_id=node.node_id,
                payload={"module": pattern.provider, "function": action.pattern, "error": str(exc)},
            )
            raise
        self._tool_seq += 1
        variable = store.define(
            f"{action.pattern.lower()}_result_{self._tool_seq}",
            result.text,
            origin=Origin.TOOL_RETURN,
            created_at=self._now(),
        )
        for name, (content, media_type) in result.blobs.items():
            store.define(
                name, content, origin=Origin.TOOL_RETURN, media_type=media_type, created_at=self._now()
            )
        ownership_note = self._track_ownership(node, result.meta)
        self.log.append(
            EventKind.TOOL_RESULT,
            node_id=node.node_id,
            payload={
                "module": pattern.provider,
                "function": action.pattern,
                "variable": variable.name,
                "chars": variable.size,
                "state": result.state,
            },
        )
        text = f"{result.text}\n(result stored as variable {variable.name!r})"
        if result.state not in (None, "default"):
            visible = self.modules.descriptor(pattern.provider).visible_functions()
            text += f"\n[module state: {result.state}; available: " + ", ".join(
                f.name for f in visible
            ) + "]"
        if ownership_note:
            text += f"\n{ownership_note}"
        return text

    def _track_ownership(self, node: AgentNode, meta: dict) -> str | None:
        """Soft exclusive-ownership: warn when a node touches another's file."""
        warnings = []
        for path in meta.get("files_changed", ()):
            owner = self._file_owners.setdefault(path, node.node_id)
            if owner != node.node_id:
                warnings.append(
                    f"[system note: file {path!r} was first written by agent "
                    f"{owner}; coordinate through your common ancestor before "
                    "modifying it]"
                )
        return "\n".join(warnings) if warnings else None

    # ------------------------------------------------------------------
    # CALL semantics

    def _depth(self, node: AgentNode) -> int:
        depth = 0
        current = node
        while current.parent is not None:
            depth += 1
            current = self.registry[current.parent]
        return depth

    def call(self, parent: AgentNode, agent_type: str, child_name: str, message_body: str) -> str:
        """Send a message to a child dialogue, instantiating it on first use."""
        existing_id = parent.children.get(child_name)
        if existing_id is None:
            if agent_type not in self.specs:
                raise ValueError(
                    f"unknown agent type {agent_type!r}; registered: "
                    + ", ".join(sorted(self.specs))
                )
            if self._depth(parent) + 1 > self.depth_limit:
                raise ValueError(
                    f"depth limit {self.depth_limit} reached; decompose the task "
                    "higher up instead of nesting further"
                )
            if len(parent.children) >= self.width_limit:
                raise ValueError(
                    f"child limit {self.width_limit} reached for this agent; "
                    "reuse an existing child or decompose differently"
                )
            child = self._create_node(
                self.specs[agent_type], parent=parent.node_id, child_name=child_name
            )
            parent.children[child_name] = child.node_id
        else:
            child = self.registry[existing_id]

        parent_store = self.stores[parent.node_id]
        attachments = self._export_references(message_body, parent_store)
        request = self.make_message(
            Role.CALLER, str(parent.node_id), message_body, attachments=attachments
        )
        self.log.append(
            EventKind.CALL,
            node_id=child.node_id,
            parent_id=parent.node_id,
            payload={
                "child_name": child_name,
                "message": message_body,
                "attachments": [a.name for a in attachments],
            },
        )
        parent.status = NodeStatus.WAITING_FOR_CHILD
        try:
            reply = self._run_turn(child, [request])
        finally:
            parent.status = NodeStatus.RUNNING
        self.log.append(
            EventKind.RETURN,
            node_id=child.node_id,
            parent_id=parent.node_id,
            payload={"message": reply.body, "attachments": [a.name for a in reply.attachments]},
        )
        for attachment in reply.attachments:
            materialize(parent_store, attachment, created_at=self._now())
        variable = parent_store.define(
            f"{child_name}_reply",
            reply.body,
            origin=Origin.AGENT_RETURN,
            created_at=self._now(),
        )
        if self.memory is not None:
            self.memory.ingest(reply.body, source=str(child.node_id), created_at=self._now())
            self.log.append(
                EventKind.INGEST,
                node_id=child.node_id,
                payload={"text": reply.body, "source": str(child.node_id)},
            )
        cap = parent.spec.reply_inline_cap
        if len(reply.body) > cap:
            preview = reply.body[: min(cap, 512)]
            return (
                f"reply from {child_name!r} stored as variable {variable.name!r} "
                f"({len(reply.body)} chars); preview:\n{preview}…"
            )
        return f"reply from {child_name!r} (stored as variable {variable.name!r}):\n{reply.body}"

    # ------------------------------------------------------------------
    # persistence

    def persist_session(self, path: str | None = None) -> str:
        """Write a restorable snapshot; only valid between steps."""
        if any(n.status is NodeStatus.RUNNING for n in self.registry.values()):
            raise RuntimeFault("persist_session is only valid between steps")
        path = path or self.session_path
        if path is None:
            raise ValueError("no session path configured")
        os.makedirs(path, exist_ok=True)
        events_path = os.path.join(path, "events.jsonl")
        if self.log.path is None or os.path.abspath(self.log.path) != os.path.abspath(events_path):
            from .events import header_line

            with open(events_path, "w", encoding="utf-8") as fh:
                fh.write(header_line() + "\n")
                for record in self.log.records:
                    fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
        state = self._state_json()
        tmp = os.path.join(path, "state.json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(state, fh, sort_keys=True)
        os.replace(tmp, os.path.join(path, "state.json"))
        return path

    def _state_json(self) -> dict:
        def message_json(m: Message) -> dict:
            return {
                "id": m.id,
                "role": m.role.value,
                "sender": m.sender,
                "body": m.body,
                "created_at": m.created_at,
                "attachments": [
                    {
                        "name": a.name,
                        "media_type": a.media_type,
                        "content": base64.b64encode(a.content).decode("ascii"),
                    }
                    for a in m.attachments
                ],
            }

        return {
            "format": SESSION_FORMAT,
            "version": SESSION_VERSION,
            "root_type": self.root_type,
            "root_id": self.root_id,
            "next_node_id": self._next_node_id,
            "message_seq": self._message_seq,
            "tool_seq": self._tool_seq,
            "file_owners": {k: v for k, v in self._file_owners.items()},
            "specs": {
                name: {
                    "type_name": s.type_name,
                    "system_prompt": s.system_prompt,
                    "static_patterns": sorted(s.static_patterns),
                    "context_budget": s.context_budget,
                    "compression_threshold": s.compression_threshold,
                    "capability": s.capability.value,
                    "iteration_cap": s.iteration_cap,
                    "reply_inline_cap": s.reply_inline_cap,
                }
                for name, s in self.specs.items()
            },
            "nodes": [
                {
                    "node_id": n.node_id,
                    "agent_type": n.spec.type_name,
                    "parent": n.parent,
                    "child_name": n.child_name,
                    "children": n.children,
                    "compression_pointer": n.compression_pointer,
                    "status": n.status.value,
                    "llm_turns": n.llm_turns,
                    "history": [message_json(m) for m in n.history],
                }
                for n in self.registry.values()
            ],
            "stores": [
                {
                    "owner": store.owner,
                    "auto_seq": store._auto_seq,
                    "variables": [
                        {
                            "name": v.name,
                            "content": base64.b64encode(v.content).decode("ascii"),
                            "media_type": v.media_type,
                            "origin": v.origin.value,
                            "created_at": v.created_at,
                        }
                        for name in store.names()
                        for v in store.versions(name)
                    ],
                }
                for store in self.stores.values()
            ],
            "memory": (
                [
                    {"text": r.text, "source": r.source, "created_at": r.created_at}
                    for r in self.memory.records
                ]
                if self.memory is not None
                else None
            ),
        }

    @classmethod
    def load_session(cls, path: str, backend, clock=None) -> "Runtime":
        """Restore a runtime from a persisted session directory.

        A version mismatch or a truncated/corrupt state file refuses the load
        and leaves the files untouched.
        """
        state_path = os.path.join(path, "state.json")
        try:
            with open(state_path, encoding="utf-8") as fh:
                state = json.load(fh)
        except FileNotFoundError:
            raise RuntimeFault(f"no session state at {state_path}")
        except json.JSONDecodeError as exc:
            raise RuntimeFault(f"session state is truncated or corrupt: {exc}")
        if state.get("format") != SESSION_FORMAT:
            raise RuntimeFault("not a session state file")
        if state.get("version") != SESSION_VERSION:
            raise RuntimeFault(
                f"session version {state.get('version')} unsupported (expected "
                f"{SESSION_VERSION}); migrate the session before loading"
            )

        specs = {
            name: AgentSpec(
                type_name=s["type_name"],
                system_prompt=s["system_prompt"],
                static_patterns=frozenset(s["static_patterns"]),
                context_budget=s["context_budget"],
                compression_threshold=s["compression_threshold"],
                capability=RecipientCapability(s["capability"]),
                iteration_cap=s["iteration_cap"],
                reply_inline_cap=s["reply_inline_cap"],
            )
            for name, s in state["specs"].items()
        }

        events_path = os.path.join(path, "events.jsonl")
        loaded = load_log(events_path) if os.path.exists(events_path) else None
        if loaded is not None and not loaded.complete:
            raise RuntimeFault(
                f"event log truncated at line {loaded.truncated_at_line}; refusing load"
            )

        runtime = cls.__new__(cls)
        runtime.specs = specs
        runtime.root_type = state["root_type"]
        runtime.backend = backend
        runtime.clock = clock or __import__("time").time
        runtime.depth_limit = DEFAULT_DEPTH_LIMIT
        runtime.width_limit = DEFAULT_WIDTH_LIMIT
        runtime.session_path = path
        runtime.log = EventLog.__new__(EventLog)
        runtime.log.path = events_path
        runtime.log._clock = lambda: runtime.clock()
        runtime.log._records = []
        runtime.log._fh = open(events_path, "a", encoding="utf-8")
        if loaded is not None:
            runtime.log.preload(loaded.records)
        runtime.registry = {}
        runtime.stores = {}
        runtime.memory = None
        runtime.modules = ModuleRegistry()
        runtime._module_patterns = PatternSet()
        runtime._next_node_id = state["next_node_id"]
        runtime._message_seq = state["message_seq"]
        runtime._tool_seq = state.get("tool_seq", 0)
        runtime.root_id = state["root_id"]
        runtime._intervention_lock = threading.Lock()
        runtime._interventions = collections.deque()
        runtime._running_allowed = threading.Event()
        runtime._running_allowed.set()
        runtime._file_owners = {k: int(v) for k, v in state.get("file_owners", {}).items()}
        runtime._captured = {}

        for entry in state["nodes"]:
            node = AgentNode(
                node_id=entry["node_id"],
                spec=specs[entry["agent_type"]],
                parent=entry["parent"],
                child_name=entry["child_name"],
                children={k: int(v) for k, v in entry["children"].items()},
                compression_pointer=entry["compression_pointer"],
                status=NodeStatus(entry["status"]),
                llm_turns=entry["llm_turns"],
            )
            node.history = [
                Message(
                    id=m["id"],
                    role=Role(m["role"]),
                    sender=m["sender"],
                    body=m["body"],
                    attachments=tuple(
                        Attachment(
                            name=a["name"],
                            media_type=a["media_type"],
                            content=base64.b64decode(a["content"]),
                        )
                        for a in m["attachments"]
                    ),
                    created_at=m["created_at"],
                )
                for m in entry["history"]
            ]
            runtime.registry[node.node_id] = node
        for entry in state["stores"]:
            store = VariableStore(owner=entry["owner"])
            store._auto_seq = entry["auto_seq"]
            for v in entry["variables"]:
                store.define(
                    v["name"],
                    base64.b64decode(v["content"]),
                    origin=Origin(v["origin"]),
                    media_type=v["media_type"],
                    created_at=v["created_at"],
                )
            runtime.stores[store.owner] = store
        if state.get("memory") is not None:
            runtime.memory = Hippocampus()
            for record in state["memory"]:
                runtime.memory.ingest(
                    record["text"], record["source"], created_at=record["created_at"]
                )
        return runtime

    # ------------------------------------------------------------------

    def validate(self) -> list[str]:
        return validate_tree(self.registry)

    def close(self) -> None:
        self.modules.close()
        self.log.close()
