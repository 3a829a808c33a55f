"""Core-side access to tool modules: loading, invocation, recommendation,
and runtime registration of synthesized modules.

A module crash or transport fault never propagates as a crash of the core:
every failure path raises ModuleError, which the interpreter serializes into
feedback text for the model to react to.
"""

from __future__ import annotations

import os
import re
import socket
import subprocess
import sys
import time
from dataclasses import dataclass

from .wire import (
    PROTOCOL_VERSION,
    FrameError,
    FunctionDoc,
    Request,
    Response,
    read_frame,
    write_frame,
)

DEFAULT_INVOKE_TIMEOUT = 120.0
HANDSHAKE_TIMEOUT = 10.0

_WORD = re.compile(r"[a-z0-9_]+")

STOPLIST = frozenset(
    """a an the i to of in on for and or is are it this that with be as at by
    from can do use you your we me my please need want one its""".split()
)

RECOMMEND_THRESHOLD = 0.08
RECOMMEND_TOP_K = 5


class ModuleError(RuntimeError):
    """Any module-side or transport-side failure, surfaced as feedback."""


class ModuleClient:
    """One framed-RPC connection to a module server."""

    def __init__(self, address: str, timeout: float = DEFAULT_INVOKE_TIMEOUT):
        self.address = address
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._next_id = 0

    def _connect(self) -> socket.socket:
        if self._sock is not None:
            return self._sock
        try:
            if "/" in self.address:
                sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
                sock.settimeout(self.timeout)
                sock.connect(self.address)
            else:
                host, _, port = self.address.rpartition(":")
                sock = socket.create_connection(
                    (host or "127.0.0.1", int(port)), timeout=self.timeout
                )
        except OSError as exc:
            raise ModuleError(f"connection to {self.address} refused: {exc}") from exc
        self._sock = sock
        return sock

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None

    def request(self, req: Request, timeout: float | None = None) -> Response:
        sock = self._connect()
        sock.settimeout(timeout if timeout is not None else self.timeout)
        try:
            write_frame(sock, req.to_json())
            payload = read_frame(sock)
        except socket.timeout as exc:
            self.close()  # reset the connection after a timeout
            raise ModuleError(
                f"call to {self.address} timed out after "
                f"{timeout if timeout is not None else self.timeout}s"
            ) from exc
        except (ConnectionError, OSError, FrameError) as exc:
            self.close()
            raise ModuleError(f"transport failure talking to {self.address}: {exc}") from exc
        try:
            response = Response.from_json(payload)
        except (KeyError, ValueError, TypeError) as exc:
            self.close()
            raise ModuleError(f"malformed response from {self.address}: {exc}") from exc
        if response.id != req.id:
            self.close()
            raise ModuleError(
                f"response id {response.id} does not match request id {req.id}"
            )
        return response

    def next_id(self) -> int:
        self._next_id += 1
        return self._next_id


@dataclass
class ModuleDescriptor:
    module_name: str
    address: str
    functions: tuple[FunctionDoc, ...]
    current_state: str
    process: subprocess.Popen | None = None

    def visible_functions(self) -> tuple[FunctionDoc, ...]:
        return tuple(f for f in self.functions if f.visible_in(self.current_state))

    def function(self, name: str) -> FunctionDoc | None:
        return next((f for f in self.functions if f.name == name), None)


@dataclass(frozen=True)
class InvokeResult:
    text: str
    blobs: dict  # name -> (bytes, media_type)
    state: str | None
    meta: dict


class ModuleRegistry:
    """All loaded modules; loading is idempotent per address."""

    def __init__(self):
        self._by_address: dict[str, ModuleDescriptor] = {}
        self._clients: dict[str, ModuleClient] = {}

    @property
    def descriptors(self) -> list[ModuleDescriptor]:
        return list(self._by_address.values())

    def descriptor(self, module_name: str) -> ModuleDescriptor | None:
        return next(
            (d for d in self._by_address.values() if d.module_name == module_name),
            None,
        )

    def load_module(
        self, address: str, process: subprocess.Popen | None = None
    ) -> ModuleDescriptor:
        """Handshake with the server at ``address`` and register its functions."""
        if address in self._by_address:
            return self._by_address[address]
        client = ModuleClient(address)
        response = client.request(
            Request(id=client.next_id(), op="describe", protocol_version=PROTOCOL_VERSION),
            timeout=HANDSHAKE_TIMEOUT,
        )
        if not response.ok:
            client.close()
            raise ModuleError(f"handshake rejected by {address}: {response.error}")
        if response.functions is None or not response.result:
            client.close()
            raise ModuleError(f"malformed descriptor from {address}: no function list")
        descriptor = ModuleDescriptor(
            module_name=str(response.result),
            address=address,
            functions=response.functions,
            current_state=response.state or "default",
            process=process,
        )
        self._by_address[address] = descriptor
        self._clients[address] = client
        return descriptor

    def forget(self, address: str) -> None:
        client = self._clients.pop(address, None)
        if client is not None:
            client.close()
        self._by_address.pop(address, None)

    def invoke(
        self,
        module_name: str,
        function: str,
        args: dict,
        blobs: dict | None = None,
        timeout: float | None = None,
    ) -> InvokeResult:
        """Call one module function; refresh the descriptor from the response.

        The visible-set check runs before any bytes hit the wire, so a hidden
        function is never executed.
        """
        descriptor = self.descriptor(module_name)
        if descriptor is None:
            loaded = ", ".join(d.module_name for d in self.descriptors) or "(none)"
            raise ModuleError(f"module {module_name!r} not loaded; loaded: {loaded}")
        doc = descriptor.function(function)
        if doc is None or not doc.visible_in(descriptor.current_state):
            available = ", ".join(f.name for f in descriptor.visible_functions())
            raise ModuleError(
                f"{function} not available in state {descriptor.current_state}; "
                f"available: {available}"
            )
        client = self._clients[descriptor.address]
        response = client.request(
            Request(
                id=client.next_id(),
                op="invoke",
                function=function,
                args=args,
                blobs=blobs or {},
            ),
            timeout=timeout,
        )
        # Stateful modules report their new state and visible set with every
        # response; keep the descriptor fresh.
        if response.state is not None:
            descriptor.current_state = response.state
        if not response.ok:
            raise ModuleError(response.error or "module reported an unnamed error")
        return InvokeResult(
            text=response.result or "",
            blobs=response.blobs,
            state=response.state,
            meta=response.meta,
        )

    def query_state(self, module_name: str) -> Response:
        descriptor = self.descriptor(module_name)
        if descriptor is None:
            raise ModuleError(f"module {module_name!r} not loaded")
        client = self._clients[descriptor.address]
        response = client.request(Request(id=client.next_id(), op="state"))
        if response.state is not None:
            descriptor.current_state = response.state
        return response

    def visible_catalog(self) -> list[tuple[str, FunctionDoc]]:
        """(module name, function doc) for every currently visible function."""
        catalog = []
        for descriptor in self.descriptors:
            for doc in descriptor.visible_functions():
                catalog.append((descriptor.module_name, doc))
        return catalog

    def close(self) -> None:
        for address in list(self._clients):
            self.forget(address)


def _word_set(text: str) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if w not in STOPLIST}


def recommend(
    context_text: str,
    catalog: list[tuple[str, FunctionDoc]],
    threshold: float = RECOMMEND_THRESHOLD,
    top_k: int = RECOMMEND_TOP_K,
) -> list[tuple[str, FunctionDoc, float]]:
    """Score functions by word-set Jaccard overlap with the context.

    Deterministic and desk-verifiable; returns functions scoring at or above
    the threshold, best first, capped at top_k.
    """
    context_words = _word_set(context_text)
    if not context_words:
        return []
    scored = []
    for module_name, doc in catalog:
        doc_words = _word_set(f"{doc.name} {doc.doc}")
        if not doc_words:
            continue
        union = context_words | doc_words
        overlap = len(context_words & doc_words) / len(union)
        if overlap >= threshold:
            scored.append((module_name, doc, overlap))
    scored.sort(key=lambda item: (-item[2], item[0], item[1].name))
    return scored[:top_k]


def spawn_module(
    command: list[str],
    address: str,
    registry: ModuleRegistry,
    env: dict | None = None,
    handshake_timeout: float = HANDSHAKE_TIMEOUT,
) -> ModuleDescriptor:
    """Launch a module server process and load it once it answers."""
    process = subprocess.Popen(
        command,
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
        env={**os.environ, **(env or {})},
    )
    deadline = time.monotonic() + handshake_timeout
    last_error: Exception | None = None
    while time.monotonic() < deadline:
        if process.poll() is not None:
            raise ModuleError(
                f"module process exited with status {process.returncode} before handshake"
            )
        try:
            return registry.load_module(address, process=process)
        except ModuleError as exc:
            last_error = exc
            time.sleep(0.05)
    process.kill()
    raise ModuleError(f"handshake timeout after {handshake_timeout}s: {last_error}")


def register_synthesized_module(
    program_text: str,
    manifest: list[FunctionDoc],
    workspace: str,
    registry: ModuleRegistry,
    name: str = "synth",
    python: str = sys.executable,
) -> ModuleDescriptor:
    """Deploy model-written server code as a standalone module process.

    The program is written into the scripter workspace, launched on an
    ephemeral local socket, and handshaken; its advertised functions must
    match the manifest or the spawn is rolled back.
    """
    os.makedirs(workspace, exist_ok=True)
    program_path = os.path.join(workspace, f"{name}_server.py")
    with open(program_path, "w", encoding="utf-8") as fh:
        fh.write(program_text)
    address = os.path.join(workspace, f"{name}.sock")
    if os.path.exists(address):
        os.unlink(address)
    try:
        descriptor = spawn_module([python, program_path, "--address", address], address, registry)
    except ModuleError:
        if os.path.exists(address):
            os.unlink(address)
        raise
    advertised = sorted(f.name for f in descriptor.functions)
    expected = sorted(f.name for f in manifest)
    if advertised != expected:
        process = descriptor.process
        registry.forget(address)
        if process is not None:
            process.kill()
        raise ModuleError(
            f"manifest mismatch: server advertises {advertised}, manifest says {expected}"
        )
    return descriptor
