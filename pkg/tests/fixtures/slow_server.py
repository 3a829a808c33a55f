#!/usr/bin/env python3
"""Standalone module server whose one function is deliberately slow.

Used for kill-mid-call fault injection: the caller terminates this process
while SLOW is sleeping and must observe a clean transport error. Stdlib only;
independent of the package under test.
"""

import argparse
import json
import socket
import struct
import threading
import time

PROTOCOL_VERSION = 1

FUNCTIONS = [
    {
        "name": "SLOW",
        "params": [{"name": "text", "kind": "string"}],
        "doc": "Return the text after a long pause.",
        "visible_in_states": None,
    }
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
        base["result"] = "slowpoke"
        return base
    if op == "state":
        return base
    if op == "invoke":
        time.sleep(2.0)
        base["result"] = str((request.get("args") or {}).get("text", ""))
        return base
    base.update(ok=False, error=f"unknown op {op!r}")
    return base


def serve_connection(conn):
    with conn:
        while True:
            try:
                request = read_frame(conn)
                write_frame(conn, respond(request))
            except (ConnectionError, OSError, ValueError):
                return


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--address", required=True)
    args = parser.parse_args()
    listener = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
    listener.bind(args.address)
    listener.listen(8)
    print("listening", flush=True)
    while True:
        conn, _ = listener.accept()
        threading.Thread(target=serve_connection, args=(conn,), daemon=True).start()


if __name__ == "__main__":
    main()
