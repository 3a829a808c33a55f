"""CLI tests: config loading, the interactive loop driven through pipes,
offline inspection, and agreement between inspect and the live tree view."""

import io
import json
import os

import pytest

from agenttree import cli
from agenttree.control import tree_view
from agenttree.events import load_log, reconstruct_tree

DEMO = os.path.join(os.path.dirname(__file__), "..", "scenarios", "demo")


class Args:
    def __init__(self, **kw):
        self.config = kw.get("config")
        self.backend = kw.get("backend")
        self.session = kw.get("session")
        self.bind = kw.get("bind")
        self.headless = kw.get("headless", False)
        self.transcripts = kw.get("transcripts", False)


def test_load_config_and_specs():
    config = cli.load_config(os.path.join(DEMO, "config.yaml"))
    specs, root = cli.specs_from_config(config)
    assert root == "coordinator"
    assert set(specs) == {"coordinator", "summarizer"}
    assert specs["summarizer"].context_budget == 16000


def test_specs_require_valid_root():
    with pytest.raises(SystemExit):
        cli.specs_from_config({"agents": {"a": {}}, "root": "missing"})
    with pytest.raises(SystemExit):
        cli.specs_from_config({"root": "a"})


def test_make_backend_selectors(tmp_path):
    scenario = tmp_path / "s.yaml"
    scenario.write_text("default: ok\n")
    backend = cli.make_backend(f"scripted:{scenario}")
    assert backend.scenario.default == "ok"
    with pytest.raises(SystemExit):
        cli.make_backend("carrier-pigeon")


def test_build_runtime_from_demo_config(tmp_path):
    runtime = cli.build_runtime(Args(config=os.path.join(DEMO, "config.yaml")))
    reply = runtime.run_root("show me a demo")
    assert "summarizer says" in reply.body
    assert len(runtime.registry) == 2
    runtime.close()


def test_repl_full_session(tmp_path):
    session = str(tmp_path / "sess")
    runtime = cli.build_runtime(
        Args(config=os.path.join(DEMO, "config.yaml"), session=session)
    )
    stdin = io.StringIO("show me a demo\n/tree\n/pause\n/resume\n/quit\n")
    stdout = io.StringIO()
    cli.repl(runtime, stdin=stdin, stdout=stdout)
    runtime.close()
    transcript = stdout.getvalue()
    assert "summarizer says" in transcript
    assert "[0] root <coordinator>" in transcript
    assert "[1] sum1 <summarizer>" in transcript
    assert "paused" in transcript and "resumed" in transcript
    assert f"session saved to {session}" in transcript
    # the session directory is restorable
    assert os.path.exists(os.path.join(session, "state.json"))
    assert load_log(os.path.join(session, "events.jsonl")).complete


def test_repl_inject_command():
    runtime = cli.build_runtime(Args(config=os.path.join(DEMO, "config.yaml")))
    stdin = io.StringIO("/inject please hurry\nshow me a demo\n/quit\n")
    stdout = io.StringIO()
    cli.repl(runtime, stdin=stdin, stdout=stdout)
    runtime.close()
    assert "queued" in stdout.getvalue()


def test_resumed_session_shows_prior_tree(tmp_path, capsys):
    session = str(tmp_path / "sess")
    runtime = cli.build_runtime(
        Args(config=os.path.join(DEMO, "config.yaml"), session=session)
    )
    runtime.run_root("show me a demo")
    runtime.persist_session()
    runtime.close()

    resumed = cli.build_runtime(
        Args(config=os.path.join(DEMO, "config.yaml"), session=session)
    )
    stdout = io.StringIO()
    cli.print_tree(resumed, stdout)
    resumed.close()
    assert "[1] sum1 <summarizer>" in stdout.getvalue()


def test_inspect_outline_and_truncation(tmp_path, capsys):
    session = str(tmp_path / "sess")
    runtime = cli.build_runtime(
        Args(config=os.path.join(DEMO, "config.yaml"), session=session)
    )
    runtime.run_root("show me a demo")
    runtime.persist_session()
    runtime.close()

    assert cli.cmd_inspect(Args(session=session, transcripts=True)) == 0
    out = capsys.readouterr().out
    assert "[0] root <coordinator>" in out
    assert "  [1] sum1 <summarizer>" in out
    assert "llm_turn" in out  # transcripts dumped

    # truncate the log mid-line and inspect again
    events = os.path.join(session, "events.jsonl")
    with open(events, "r+", encoding="utf-8") as fh:
        data = fh.read()
        fh.seek(0)
        fh.truncate()
        fh.write(data[: len(data) - 40])
    assert cli.cmd_inspect(Args(session=session)) == 0
    out = capsys.readouterr().out
    assert "truncated at line" in out


def test_inspect_missing_session(tmp_path, capsys):
    assert cli.cmd_inspect(Args(session=str(tmp_path / "nope"))) == 1


def test_inspect_agrees_with_tree_endpoint_view(tmp_path):
    session = str(tmp_path / "sess")
    runtime = cli.build_runtime(
        Args(config=os.path.join(DEMO, "config.yaml"), session=session)
    )
    runtime.run_root("show me a demo")
    view = tree_view(runtime)
    runtime.persist_session()
    runtime.close()

    loaded = load_log(os.path.join(session, "events.jsonl"))
    offline = reconstruct_tree(loaded.records).structure()
    online = {
        n["node_id"]: (
            n["parent"],
            n["child_name"],
            n["agent_type"],
            tuple(sorted(n["children"].items())),
        )
        for n in view["nodes"]
    }
    assert offline == online


def test_render_reply_shows_attachment_placeholders():
    from agenttree.model import Attachment, Message, Role

    message = Message(
        id="m",
        role=Role.ASSISTANT,
        sender="0",
        body="see the chart",
        attachments=(Attachment(name="chart", media_type="image/png", content=b"123"),),
    )
    rendered = cli.render_reply(message)
    assert "see the chart" in rendered
    assert "[attachment chart: image/png, 3 bytes]" in rendered


def test_main_requires_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])
