#!/usr/bin/env python3
"""Regenerate the control-API contract fixtures consumed by the web UI tests.

Runs the demo scenario (including a queued intervention) on a fixed clock and
writes the session's event log, the live tree view, the inspect-style
outline, and the interactive-session transcript. The same artifacts are
asserted byte-identical by tests/test_contract.py on the Python side and
replayed by frontend/tests on the TypeScript side, so both ends of the HTTP
contract test against literally the same bytes.
"""

from __future__ import annotations

import io
import json
import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from agenttree import cli  # noqa: E402
from agenttree.control import tree_view  # noqa: E402
from agenttree.events import reconstruct_tree  # noqa: E402
from agenttree.runtime import Runtime  # noqa: E402

FIXTURE_DIR = os.path.join(ROOT, "frontend", "tests", "fixtures")

REPL_INPUT = "show me a demo\n/inject please hurry\none more thing\n/quit\n"


def generate() -> dict[str, str]:
    config_path = os.path.join(ROOT, "scenarios", "demo", "config.yaml")
    config = cli.load_config(config_path)
    specs, root_type = cli.specs_from_config(config)
    backend = cli.make_backend(config["backend"], config_dir=os.path.dirname(config_path))
    runtime = Runtime(specs, root_type, backend, clock=lambda: 1000.0)

    stdout = io.StringIO()
    cli.repl(runtime, stdin=io.StringIO(REPL_INPUT), stdout=stdout)

    events = "\n".join(
        json.dumps(record.to_json(), sort_keys=True) for record in runtime.log.records
    ) + "\n"
    tree = json.dumps(tree_view(runtime), indent=2, sort_keys=True) + "\n"
    outline_lines = []
    for depth, node in reconstruct_tree(runtime.log.records).outline():
        label = node.child_name or "root"
        outline_lines.append("  " * depth + f"[{node.node_id}] {label} <{node.agent_type}>")
    outline = "\n".join(outline_lines) + "\n"
    transcript = stdout.getvalue()
    runtime.close()
    return {
        "events.ndjson": events,
        "tree.json": tree,
        "outline.txt": outline,
        "transcript.txt": transcript,
    }


def main() -> int:
    os.makedirs(FIXTURE_DIR, exist_ok=True)
    for name, content in generate().items():
        path = os.path.join(FIXTURE_DIR, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(content)
        print(f"wrote {os.path.relpath(path, ROOT)} ({len(content)} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
