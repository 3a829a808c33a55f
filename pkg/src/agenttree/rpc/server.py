"""Base class for tool module servers.

A module is an independent process listening on a TCP port or a unix socket.
Subclasses declare their functions and implement ``handle``; the base class
does framing, the describe handshake, and state-visibility enforcement.
"""

from __future__ import annotations

import argparse
import socket
import threading

from .wire import (
    PROTOCOL_VERSION,
    FrameError,
    FunctionDoc,
    Request,
    Response,
    read_frame,
    write_frame,
)


class ModuleServer:
    module_name = "module"
    functions: tuple[FunctionDoc, ...] = ()

    def __init__(self):
        self.state = "default"
        self._listener: socket.socket | None = None
        self._shutdown = threading.Event()

    # -- subclass surface ---------------------------------------------------

    def handle(self, function: str, args: dict, blobs: dict) -> tuple[str, dict]:
        """Execute one function call. Returns (result_text, out_blobs)."""
        raise NotImplementedError

    def state_info(self) -> dict:
        """Extra environment info reported with the "state" op."""
        return {}

    # -- protocol -----------------------------------------------------------

    def visible_functions(self) -> tuple[FunctionDoc, ...]:
        return tuple(f for f in self.functions if f.visible_in(self.state))

    def _respond(self, request: Request) -> Response:
        if request.op == "describe":
            if request.protocol_version != PROTOCOL_VERSION:
                return Response(
                    id=request.id,
                    ok=False,
                    error=(
                        f"protocol version mismatch: server {PROTOCOL_VERSION}, "
                        f"client {request.protocol_version}"
                    ),
                )
            return Response(
                id=request.id,
                ok=True,
                result=self.module_name,
                state=self.state,
                functions=self.functions,
                meta={"protocol_version": PROTOCOL_VERSION},
            )
        if request.op == "state":
            return Response(
                id=request.id,
                ok=True,
                state=self.state,
                functions=self.visible_functions(),
                meta=self.state_info(),
            )
        if request.op == "invoke":
            doc = next((f for f in self.functions if f.name == request.function), None)
            if doc is None:
                return Response(
                    id=request.id,
                    ok=False,
                    error=f"unknown function {request.function!r}",
                    state=self.state,
                    functions=self.visible_functions(),
                )
            if not doc.visible_in(self.state):
                available = ", ".join(f.name for f in self.visible_functions())
                return Response(
                    id=request.id,
                    ok=False,
                    error=(
                        f"{request.function} not available in state {self.state}; "
                        f"available: {available}"
                    ),
                    state=self.state,
                    functions=self.visible_functions(),
                )
            try:
                result, out_blobs = self.handle(request.function, request.args, request.blobs)
            except Exception as exc:
                return Response(
                    id=request.id,
                    ok=False,
                    error=f"{type(exc).__name__}: {exc}",
                    state=self.state,
                    functions=self.visible_functions(),
                )
            return Response(
                id=request.id,
                ok=True,
                result=result,
                state=self.state,
                functions=self.visible_functions(),
                blobs=out_blobs,
                meta=self.state_info(),
            )
        return Response(id=request.id, ok=False, error=f"unknown op {request.op!r}")

    # -- socket plumbing ----------------------------------------------------

    def bind(self, address: str) -> str:
        """Bind to "host:port" (port 0 for ephemeral) or a unix socket path."""
        if "/" in address:
            self._listener = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
            self._listener.bind(address)
            bound = address
        else:
            host, _, port = address.rpartition(":")
            self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            self._listener.bind((host or "127.0.0.1", int(port)))
            bound_host, bound_port = self._listener.getsockname()
            bound = f"{bound_host}:{bound_port}"
        self._listener.listen(8)
        return bound

    def serve_forever(self) -> None:
        assert self._listener is not None, "bind() first"
        # accept with a short timeout: close() alone does not reliably wake a
        # blocked accept, so poll the shutdown flag instead
        self._listener.settimeout(0.1)
        while not self._shutdown.is_set():
            try:
                conn, _ = self._listener.accept()
                conn.settimeout(None)
            except socket.timeout:
                continue
            except OSError:
                break
            thread = threading.Thread(target=self._serve_connection, args=(conn,), daemon=True)
            thread.start()

    def _serve_connection(self, conn: socket.socket) -> None:
        with conn:
            while True:
                try:
                    payload = read_frame(conn)
                    request = Request.from_json(payload)
                except (ConnectionError, OSError):
                    return
                except (FrameError, KeyError, ValueError):
                    # Unparseable request: report once, then drop the peer.
                    try:
                        write_frame(conn, Response(id=0, ok=False, error="malformed request frame").to_json())
                    except OSError:
                        pass
                    return
                response = self._respond(request)
                try:
                    write_frame(conn, response.to_json())
                except OSError:
                    return

    def shutdown(self) -> None:
        self._shutdown.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass


def run_main(server: ModuleServer, argv=None) -> None:
    """Standard CLI for launching a module server as its own process."""
    parser = argparse.ArgumentParser(description=f"{server.module_name} module server")
    parser.add_argument("--address", required=True, help="host:port or unix socket path")
    args = parser.parse_args(argv)
    bound = server.bind(args.address)
    print(f"listening on {bound}", flush=True)
    server.serve_forever()
