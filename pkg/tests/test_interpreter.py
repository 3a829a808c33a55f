"""Interpreter tests: pattern schemas, the scan grammar (driven by the
fixture vector corpus plus an independent head-detection oracle), and
feedback construction."""

import os
import re

import pytest
import yaml

from agenttree.interpreter import (
    ActionKind,
    MalformedDirective,
    Param,
    ParsedAction,
    PatternConflictError,
    PatternSet,
    ScanResult,
    SyntaxPattern,
    VariableRef,
    execute,
    format_feedback_block,
    scan,
)
from agenttree.markdown import outside_fences
from agenttree.model import AgentNode

from .conftest import make_spec

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


# ---------------------------------------------------------------------------
# pattern schemas


def test_pattern_name_validation():
    with pytest.raises(ValueError):
        SyntaxPattern(name="lower", params=(), action_kind=ActionKind.INTERNAL)
    with pytest.raises(ValueError):
        SyntaxPattern(name="9BAD", params=(), action_kind=ActionKind.INTERNAL)


def test_heredoc_must_be_single_and_last():
    h = Param("body", "heredoc-body")
    s = Param("x", "string")
    with pytest.raises(ValueError):
        SyntaxPattern(name="A", params=(h, s), action_kind=ActionKind.INTERNAL)
    with pytest.raises(ValueError):
        SyntaxPattern(name="A", params=(h, h), action_kind=ActionKind.INTERNAL)
    ok = SyntaxPattern(name="A", params=(s, h), action_kind=ActionKind.INTERNAL)
    assert ok.heredoc_param == h
    assert ok.inline_params == (s,)


def test_param_kind_validation():
    with pytest.raises(ValueError):
        Param("x", "blob")


def test_pattern_set_conflicts():
    a = SyntaxPattern(name="F", params=(Param("x", "string"),), action_kind=ActionKind.TOOL_CALL)
    same = SyntaxPattern(name="F", params=(Param("x", "string"),), action_kind=ActionKind.TOOL_CALL, provider="other")
    different = SyntaxPattern(name="F", params=(Param("y", "number"),), action_kind=ActionKind.TOOL_CALL)
    ps = PatternSet()
    ps.register(a)
    ps.register(same)  # identical schema: idempotent
    assert len(ps) == 1
    with pytest.raises(PatternConflictError):
        ps.register(different)


def test_restricted_and_merged():
    a = SyntaxPattern(name="A", params=(), action_kind=ActionKind.INTERNAL)
    b = SyntaxPattern(name="B", params=(), action_kind=ActionKind.INTERNAL)
    ps = PatternSet().register(a).register(b)
    only_a = ps.restricted({"A"})
    assert only_a.names() == {"A"}
    assert only_a.merged(PatternSet().register(b)).names() == {"A", "B"}


# ---------------------------------------------------------------------------
# scan: fixture vector corpus


def _load_vectors():
    with open(os.path.join(FIXTURES, "grammar_vectors.yaml"), encoding="utf-8") as fh:
        return yaml.safe_load(fh)


_CORPUS = _load_vectors()


def _corpus_patterns() -> PatternSet:
    ps = PatternSet()
    for entry in _CORPUS["patterns"]:
        ps.register(
            SyntaxPattern(
                name=entry["name"],
                params=tuple(Param(p["name"], p["kind"]) for p in entry["params"]),
                action_kind=ActionKind.INTERNAL,
            )
        )
    return ps


def _decode_argument(value):
    if isinstance(value, dict) and set(value) == {"variable"}:
        return VariableRef(value["variable"])
    return value


@pytest.mark.parametrize(
    "vector", _CORPUS["vectors"], ids=[v["id"] for v in _CORPUS["vectors"]]
)
def test_grammar_vector(vector):
    result = scan(vector["text"], _corpus_patterns())
    expected_actions = [
        (a["pattern"], {k: _decode_argument(v) for k, v in a["arguments"].items()})
        for a in vector.get("actions", [])
    ]
    assert [(a.pattern, a.arguments) for a in result.actions] == expected_actions
    assert [p.name for p in result.problems] == vector.get("problems", [])


def test_grammar_vector_spans_are_accurate():
    text = 'x @NOTE("one") y'
    result = scan(text, _corpus_patterns())
    start, end = result.actions[0].span
    assert text[start:end] == '@NOTE("one")'


# ---------------------------------------------------------------------------
# scan: independent oracle — every well-formed head outside fences is
# accounted for as an action, a problem, or an unknown name

_HEAD_ORACLE = re.compile(r"@([A-Z][A-Z0-9_]*)\(")


def _oracle_heads(text):
    heads = []
    for start, end in outside_fences(text):
        for m in _HEAD_ORACLE.finditer(text, start, end):
            if m.end() <= end:
                heads.append((m.start(), m.group(1)))
    return heads


@pytest.mark.parametrize(
    "vector", _CORPUS["vectors"], ids=[v["id"] for v in _CORPUS["vectors"]]
)
def test_every_head_is_accounted_for(vector):
    ps = _corpus_patterns()
    text = vector["text"]
    result = scan(text, ps)
    covered = [(a.span, a.pattern) for a in result.actions] + [
        (p.span, p.name) for p in result.problems
    ]
    for offset, name in _oracle_heads(text):
        if name not in ps:
            continue  # prose by rule
        inside_consumed = any(span[0] <= offset < span[1] for span, _ in covered)
        assert inside_consumed, f"head @{name} at {offset} vanished silently"


# ---------------------------------------------------------------------------
# execute


class _Env:
    """Minimal dispatch environment for execute()."""

    def __init__(self, patterns, handler):
        self.patterns = patterns
        self.handler = handler

    def pattern_for(self, name):
        return self.patterns.get(name)

    def dispatch(self, action, pattern, node):
        return self.handler(action)


def _node():
    return AgentNode(node_id=0, spec=make_spec(), parent=None, child_name=None)


def test_execute_empty_scan_returns_empty_feedback():
    ps = _corpus_patterns()
    assert execute(scan("pure prose", ps), _node(), _Env(ps, lambda a: "x")) == ""


def test_execute_formats_results_in_order():
    ps = _corpus_patterns()
    result = scan('@NOTE("a")\n@NOTE("b")', ps)
    feedback = execute(result, _node(), _Env(ps, lambda a: f"got {a.arguments['text']}"))
    assert feedback.index("got a") < feedback.index("got b")
    assert "result of @NOTE" in feedback
    assert "private, not visible to your caller" in feedback


def test_execute_turns_handler_exception_into_feedback():
    ps = _corpus_patterns()

    def boom(action):
        raise RuntimeError("kaboom")

    feedback = execute(scan('@NOTE("a")', ps), _node(), _Env(ps, boom))
    assert "error while executing @NOTE: kaboom" in feedback


def test_execute_reports_problems_with_offset():
    ps = _corpus_patterns()
    result = scan('@NOTE("broken', ps)
    feedback = execute(result, _node(), _Env(ps, lambda a: ""))
    assert "directive syntax error in @NOTE" in feedback
    assert "at offset 0" in feedback
    assert "unterminated string" in feedback


def test_format_feedback_block_without_body():
    block = format_feedback_block("something", "")
    assert block.startswith("[system note: something")
    assert "\n" not in block
