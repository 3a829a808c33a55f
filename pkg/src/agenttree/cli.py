"""Operator command line: interactive runs, the control API server, and
offline session inspection.

All behavior here is a thin shell over the kernel API; the CLI holds no
business logic of its own. Precedence for settings is flags > environment >
config file. Credentials are taken from the environment only, never flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import yaml

from .backend import HttpBackend, Scenario, ScriptedBackend
from .control import ControlServer
from .events import load_log, reconstruct_tree
from .model import AgentSpec, Message, RecipientCapability
from .runtime import DEFAULT_DEPTH_LIMIT, DEFAULT_WIDTH_LIMIT, Runtime


def _env(name: str, fallback=None):
    return os.environ.get(f"AGENTTREE_{name}", fallback)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise SystemExit(f"config {path} must be a mapping")
    return data


def specs_from_config(config: dict) -> tuple[dict[str, AgentSpec], str]:
    agents = config.get("agents")
    if not agents:
        raise SystemExit("config needs an 'agents' mapping (type name -> definition)")
    specs = {}
    for name, entry in agents.items():
        entry = entry or {}
        specs[name] = AgentSpec(
            type_name=name,
            system_prompt=entry.get("system_prompt", ""),
            static_patterns=frozenset(
                entry.get("patterns", ["CALL", "DEFINE", "COMPRESS"])
            ),
            context_budget=int(entry.get("context_budget", 32_000)),
            compression_threshold=float(entry.get("compression_threshold", 0.8)),
            capability=RecipientCapability(entry.get("capability", "text_only_model")),
            iteration_cap=int(entry.get("iteration_cap", 16)),
            reply_inline_cap=int(entry.get("reply_inline_cap", 4096)),
        )
    root = config.get("root")
    if root not in specs:
        raise SystemExit(f"config 'root' must name one of the agents, got {root!r}")
    return specs, root


def make_backend(selector: str, config_dir: str = "."):
    if selector.startswith("scripted:"):
        path = selector.split(":", 1)[1]
        if not os.path.isabs(path):
            path = os.path.join(config_dir, path)
        return ScriptedBackend(Scenario.from_file(path))
    if selector == "http":
        return HttpBackend()
    raise SystemExit(f"unknown backend {selector!r}; use scripted:<scenario.yaml> or http")


def build_runtime(args) -> Runtime:
    config_path = args.config or _env("CONFIG")
    config = load_config(config_path)
    config_dir = os.path.dirname(os.path.abspath(config_path)) if config_path else "."
    specs, root = specs_from_config(config)
    backend_selector = args.backend or _env("BACKEND") or config.get("backend")
    if not backend_selector:
        raise SystemExit("no backend selected (flag --backend, env, or config)")
    backend = make_backend(backend_selector, config_dir)
    session = args.session or _env("SESSION") or config.get("session")
    limits = config.get("limits") or {}
    state_file = os.path.join(session, "state.json") if session else None
    if state_file and os.path.exists(state_file):
        runtime = Runtime.load_session(session, backend)
        print(f"resumed session {session} ({len(runtime.registry)} nodes)")
    else:
        runtime = Runtime(
            specs,
            root,
            backend,
            session_path=session,
            depth_limit=int(limits.get("depth", DEFAULT_DEPTH_LIMIT)),
            width_limit=int(limits.get("width", DEFAULT_WIDTH_LIMIT)),
        )
    for address in config.get("modules") or []:
        runtime.load_module(str(address))
        print(f"loaded module at {address}")
    return runtime


def render_reply(message: Message) -> str:
    """Terminal rendering: attachments become text placeholders."""
    lines = [message.body]
    for attachment in message.attachments:
        lines.append(
            f"[attachment {attachment.name}: {attachment.media_type}, "
            f"{len(attachment.content)} bytes]"
        )
    return "\n".join(lines)


def print_tree(runtime: Runtime, out=sys.stdout) -> None:
    tree = reconstruct_tree(runtime.log.records)
    for depth, node in tree.outline():
        live = runtime.registry.get(node.node_id)
        status = live.status.value if live is not None else "?"
        label = node.child_name or "root"
        out.write("  " * depth + f"[{node.node_id}] {label} <{node.agent_type}> ({status})\n")


def repl(runtime: Runtime, stdin=sys.stdin, stdout=sys.stdout) -> None:
    stdout.write("agenttree interactive session. /tree /pause /resume /inject <text> /quit\n")
    while True:
        stdout.write("> ")
        stdout.flush()
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line == "/quit":
            break
        if line == "/tree":
            print_tree(runtime, stdout)
            continue
        if line == "/pause":
            stdout.write(runtime.pause() + "\n")
            continue
        if line == "/resume":
            stdout.write(runtime.resume() + "\n")
            continue
        if line.startswith("/inject"):
            body = line[len("/inject") :].strip()
            stdout.write(runtime.inject_intervention("active", body) + "\n")
            continue
        try:
            reply = runtime.run_root(line)
        except Exception as exc:
            stdout.write(f"error: {exc}\n")
            continue
        stdout.write(render_reply(reply) + "\n")
    if runtime.session_path:
        runtime.persist_session()
        stdout.write(f"session saved to {runtime.session_path}\n")


def cmd_run(args) -> int:
    runtime = build_runtime(args)
    try:
        repl(runtime)
    finally:
        runtime.close()
    return 0


def cmd_serve(args) -> int:
    runtime = build_runtime(args)
    server = ControlServer(runtime, args.bind or _env("BIND", "127.0.0.1:8321"))
    address = server.start()
    print(f"control API on http://{address}")
    try:
        if args.headless:
            import signal
            import threading

            stop = threading.Event()
            signal.signal(signal.SIGINT, lambda *_: stop.set())
            signal.signal(signal.SIGTERM, lambda *_: stop.set())
            stop.wait()
        else:
            repl(runtime)
    finally:
        server.stop()
        runtime.close()
    return 0


def cmd_inspect(args) -> int:
    events_path = os.path.join(args.session, "events.jsonl")
    if not os.path.exists(events_path):
        print(f"no event log at {events_path}", file=sys.stderr)
        return 1
    loaded = load_log(events_path)
    if not loaded.complete:
        print(
            f"warning: log truncated at line {loaded.truncated_at_line}; "
            "rendering the readable prefix"
        )
    tree = reconstruct_tree(loaded.records)
    print(f"{len(tree.nodes)} nodes, {len(loaded.records)} events")
    for depth, node in tree.outline():
        label = node.child_name or "root"
        print("  " * depth + f"[{node.node_id}] {label} <{node.agent_type}>")
    if args.transcripts:
        for _depth, node in tree.outline():
            print(f"\n=== node {node.node_id} ({node.agent_type}) ===")
            for entry in node.transcript:
                print(json.dumps(entry, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="agenttree", description="agent call-tree runtime"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run config (agents, root, backend, ...)")
        p.add_argument("--backend", help="scripted:<scenario.yaml> or http")
        p.add_argument("--session", help="session directory for persistence")

    p_run = sub.add_parser("run", help="interactive root dialogue")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_serve = sub.add_parser("serve", help="control API server alongside a run")
    common(p_serve)
    p_serve.add_argument("--bind", help="control API address, default 127.0.0.1:8321")
    p_serve.add_argument(
        "--headless", action="store_true", help="serve only, no interactive prompt"
    )
    p_serve.set_defaults(func=cmd_serve)

    p_inspect = sub.add_parser("inspect", help="render a saved session offline")
    p_inspect.add_argument("--session", required=True)
    p_inspect.add_argument(
        "--transcripts", action="store_true", help="also dump per-node transcripts"
    )
    p_inspect.set_defaults(func=cmd_inspect)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
