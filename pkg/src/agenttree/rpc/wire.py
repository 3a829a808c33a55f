"""Framed wire format shared by the core and every tool module.

A frame is a 4-byte big-endian length followed by one UTF-8 JSON object.
Requests: {id, op, function, args, blobs}; responses mirror
{id, ok, result, error, state, functions, meta}. JSON keys are sorted and
separators fixed, so identical structures produce byte-identical frames.

Ops: "describe" (handshake, carries protocol_version), "invoke", "state".
"""

from __future__ import annotations

import base64
import json
import socket
import struct
from dataclasses import dataclass, field

PROTOCOL_VERSION = 1

MAX_FRAME = 64 * 1024 * 1024  # hard safety bound on one frame


class FrameError(ValueError):
    """Malformed frame or JSON payload."""


@dataclass(frozen=True)
class FunctionDoc:
    """Self-description of one module function."""

    name: str
    params: tuple[tuple[str, str], ...]  # (param name, kind)
    doc: str = ""
    visible_in_states: frozenset[str] | None = None  # None: always visible

    def visible_in(self, state: str) -> bool:
        return self.visible_in_states is None or state in self.visible_in_states

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": [{"name": n, "kind": k} for n, k in self.params],
            "doc": self.doc,
            "visible_in_states": (
                sorted(self.visible_in_states)
                if self.visible_in_states is not None
                else None
            ),
        }

    @classmethod
    def from_json(cls, data: dict) -> "FunctionDoc":
        visible = data.get("visible_in_states")
        return cls(
            name=str(data["name"]),
            params=tuple((p["name"], p["kind"]) for p in data.get("params", ())),
            doc=str(data.get("doc", "")),
            visible_in_states=frozenset(visible) if visible is not None else None,
        )


def encode_blobs(blobs: dict[str, tuple[bytes, str]]) -> dict:
    return {
        name: {"media_type": media_type, "data": base64.b64encode(content).decode("ascii")}
        for name, (content, media_type) in blobs.items()
    }


def decode_blobs(data: dict) -> dict[str, tuple[bytes, str]]:
    return {
        name: (base64.b64decode(entry["data"]), entry.get("media_type", "application/octet-stream"))
        for name, entry in (data or {}).items()
    }


@dataclass(frozen=True)
class Request:
    id: int
    op: str  # "describe" | "invoke" | "state"
    function: str | None = None
    args: dict = field(default_factory=dict)
    blobs: dict = field(default_factory=dict)  # name -> (bytes, media_type)
    protocol_version: int = PROTOCOL_VERSION

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "op": self.op,
            "function": self.function,
            "args": self.args,
            "blobs": encode_blobs(self.blobs),
            "protocol_version": self.protocol_version,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Request":
        return cls(
            id=int(data["id"]),
            op=str(data["op"]),
            function=data.get("function"),
            args=data.get("args") or {},
            blobs=decode_blobs(data.get("blobs")),
            protocol_version=int(data.get("protocol_version", 0)),
        )


@dataclass(frozen=True)
class Response:
    id: int
    ok: bool
    result: str | None = None
    error: str | None = None
    state: str | None = None
    functions: tuple[FunctionDoc, ...] | None = None
    blobs: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "ok": self.ok,
            "result": self.result,
            "error": self.error,
            "state": self.state,
            "functions": (
                [f.to_json() for f in self.functions]
                if self.functions is not None
                else None
            ),
            "blobs": encode_blobs(self.blobs),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Response":
        functions = data.get("functions")
        return cls(
            id=int(data["id"]),
            ok=bool(data["ok"]),
            result=data.get("result"),
            error=data.get("error"),
            state=data.get("state"),
            functions=(
                tuple(FunctionDoc.from_json(f) for f in functions)
                if functions is not None
                else None
            ),
            blobs=decode_blobs(data.get("blobs")),
            meta=data.get("meta") or {},
        )


def encode_frame(obj: dict) -> bytes:
    raw = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if len(raw) > MAX_FRAME:
        raise FrameError(f"frame of {len(raw)} bytes exceeds {MAX_FRAME}")
    return struct.pack("!I", len(raw)) + raw


def decode_frame(data: bytes) -> dict:
    if len(data) < 4:
        raise FrameError("short frame header")
    (length,) = struct.unpack("!I", data[:4])
    if length > MAX_FRAME:
        raise FrameError(f"declared frame length {length} exceeds {MAX_FRAME}")
    if len(data) < 4 + length:
        raise FrameError("truncated frame body")
    try:
        return json.loads(data[4 : 4 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"bad frame payload: {exc}") from exc


def write_frame(sock: socket.socket, obj: dict) -> None:
    sock.sendall(encode_frame(obj))


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("connection closed mid-frame")
        buf += chunk
    return buf


def read_frame(sock: socket.socket) -> dict:
    header = _recv_exact(sock, 4)
    (length,) = struct.unpack("!I", header)
    if length > MAX_FRAME:
        raise FrameError(f"declared frame length {length} exceeds {MAX_FRAME}")
    body = _recv_exact(sock, length)
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"bad frame payload: {exc}") from exc
