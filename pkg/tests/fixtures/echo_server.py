#!/usr/bin/env python3
"""Standalone echo module server used as an interoperability oracle.

Deliberately implemented from the wire description alone with only the
standard library — it must not import the package under test. Speaks the
framed protocol: 4-byte big-endian length + one sorted-keys JSON object.

Ops: describe (handshake, protocol_version 1), state, invoke.
Functions: ECHO(text) returns the text; REVERSE(text) returns it reversed.
"""

import argparse
import json
import socket
import struct
import threading

PROTOCOL_VERSION = 1

FUNCTIONS = [
    {
        "name": "ECHO",
        "params": [{"name": "text", "kind": "string"}],
        "doc": "Return the text argument unchanged.",
        "visible_in_states": None,
    },
    {
        "name": "REVERSE",
        "params": [{"name": "text", "kind": "string"}],
        "doc": "Return the text argument reversed.",
        "visible_in_states": None,
    },
]


def recv_exact(conn, n):
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf += chunk
    return buf


def read_frame(conn):
    (length,) = struct.unpack("!I", recv_exact(conn, 4))
    return json.loads(recv_exact(conn, length).decode("utf-8"))


def write_frame(conn, obj):
    raw = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    conn.sendall(struct.pack("!I", len(raw)) + raw)


def respond(request):
    base = {
        "id": request.get("id", 0),
        "ok": True,
        "result": None,
        "error": None,
        "state": "default",
        "functions": FUNCTIONS,
        "blobs": {},
        "meta": {},
    }
    op = request.get("op")
    if op == "describe":
        if request.get("protocol_version") != PROTOCOL_VERSION:
            base.update(ok=False, error="protocol version mismatch", functions=None)
            return base
        base["result"] = "echo"
        return base
    if op == "state":
        return base
    if op == "invoke":
        function = request.get("function")
        text = str((request.get("args") or {}).get("text", ""))
        if function == "ECHO":
            base["result"] = text
        elif function == "REVERSE":
            base["result"] = text[::-1]
        else:
            base.update(ok=False, error=f"unknown function {function!r}")
        return base
    base.update(ok=False, error=f"unknown op {op!r}", functions=None)
    return base


def serve_connection(conn):
    with conn:
        while True:
            try:
                request = read_frame(conn)
            except (ConnectionError, OSError, ValueError):
                return
            try:
                write_frame(conn, respond(request))
            except OSError:
                return


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--address", required=True)
    args = parser.parse_args()
    if "/" in args.address:
        listener = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        listener.bind(args.address)
    else:
        host, _, port = args.address.rpartition(":")
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((host or "127.0.0.1", int(port)))
    listener.listen(8)
    print("listening", flush=True)
    while True:
        conn, _ = listener.accept()
        threading.Thread(target=serve_connection, args=(conn,), daemon=True).start()


if __name__ == "__main__":
    main()
