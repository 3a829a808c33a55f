"""Shared fixtures: agent spec shorthand, scripted runtimes, and in-process
module servers bound to ephemeral ports."""

from __future__ import annotations

import threading

import pytest

from agenttree.backend import Scenario, ScenarioRule, ScriptedBackend
from agenttree.model import AgentSpec
from agenttree.runtime import Runtime


def make_spec(type_name: str = "root", **overrides) -> AgentSpec:
    defaults = dict(type_name=type_name, system_prompt=f"You are the {type_name} agent.")
    defaults.update(overrides)
    return AgentSpec(**defaults)


def make_runtime(rules, specs=None, default=None, **kwargs) -> Runtime:
    """Runtime over a scripted backend; rules as ScenarioRule or dicts."""
    scenario_rules = []
    for rule in rules:
        if isinstance(rule, dict):
            rule = dict(rule)
            if "turn" in rule:
                rule["turn_index"] = rule.pop("turn")
            rule = ScenarioRule(**rule)
        scenario_rules.append(rule)
    backend = ScriptedBackend(Scenario(rules=scenario_rules, default=default))
    if specs is None:
        specs = {"root": make_spec("root"), "worker": make_spec("worker")}
    kwargs.setdefault("clock", lambda: 1000.0)
    return Runtime(specs, "root", backend, **kwargs)


class ServerThread:
    """A module server running on a daemon thread, for one test."""

    def __init__(self, server, address: str = "127.0.0.1:0"):
        self.server = server
        self.address = server.bind(address)
        self.thread = threading.Thread(target=server.serve_forever, daemon=True)
        self.thread.start()

    def stop(self):
        self.server.shutdown()
        self.thread.join(timeout=5)


def pytest_terminal_summary(terminalreporter):
    """Emit the per-criterion acceptance lines after the test summary."""
    try:
        from . import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda l: int(l.split()[0][1:])):
            terminalreporter.write_line(line)


@pytest.fixture
def serve_module():
    """Factory fixture: start a server instance, return its bound address."""
    started: list[ServerThread] = []

    def start(server, address: str = "127.0.0.1:0") -> str:
        holder = ServerThread(server, address)
        started.append(holder)
        return holder.address

    yield start
    for holder in started:
        holder.stop()
