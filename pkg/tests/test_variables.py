"""Symbolic variable tests: naming, versioning, interning, reference
detection, and by-value transport with byte equality."""

import hashlib
import os
import random

import pytest

from agenttree.model import Message, Role
from agenttree.variables import (
    DEFAULT_EXPORT_CAP,
    InvalidVariableName,
    Origin,
    OversizeVariableError,
    VariableStore,
    capture_markdown,
    export_by_value,
    materialize,
    resolve_references,
)


def test_define_and_get():
    store = VariableStore(owner=1)
    v = store.define("plan", "step one")
    assert v.version == 1
    assert v.text == "step one"
    assert v.media_type == "text/plain"
    assert store.get("plan") == v
    assert "plan" in store
    assert len(store) == 1


def test_invalid_names_rejected():
    store = VariableStore(owner=1)
    for bad in ("9lead", "has space", "da-sh", ""):
        with pytest.raises(InvalidVariableName):
            store.define(bad, "x")


def test_redefinition_versions_are_immutable_history():
    store = VariableStore(owner=1)
    store.define("plan", "v1")
    latest = store.define("plan", "v2")
    assert latest.version == 2
    assert store.get("plan").text == "v2"
    assert [v.text for v in store.versions("plan")] == ["v1", "v2"]


def test_identical_content_is_interned_once():
    store = VariableStore(owner=1)
    a = store.define("a", b"same bytes")
    b = store.define("b", b"same bytes")
    assert a.content is b.content


def test_binary_defaults_to_octet_stream():
    store = VariableStore(owner=1)
    v = store.define("blob", b"\x00\x01")
    assert v.media_type == "application/octet-stream"


def test_capture_markdown_assigns_auto_names():
    store = VariableStore(owner=7)
    message = Message(
        id="m",
        role=Role.CALLER,
        sender="user",
        body="first:\n```\naaa\n```\nsecond:\n```py\nbbb\n```\n",
    )
    captured = capture_markdown(message, store)
    assert [v.name for v in captured] == ["auto_7_1", "auto_7_2"]
    assert captured[0].text == "aaa\n"
    assert captured[1].origin is Origin.MARKDOWN_CAPTURE


def test_resolve_references_token_boundaries():
    store = VariableStore(owner=1)
    store.define("plan", "x")
    store.define("plant", "y")
    hits = resolve_references("water the plant daily", store)
    assert [v.name for v in hits] == ["plant"]  # "plan" inside "plant" is no hit
    assert resolve_references("no mention at all", store) == []
    assert [v.name for v in resolve_references("the plan, final", store)] == ["plan"]


def test_resolve_references_orders_by_first_occurrence():
    store = VariableStore(owner=1)
    store.define("alpha", "1")
    store.define("beta", "2")
    hits = resolve_references("use beta then alpha", store)
    assert [v.name for v in hits] == ["beta", "alpha"]


def test_resolve_references_includes_embed_targets():
    store = VariableStore(owner=1)
    store.define("chart_png", b"\x89PNG", media_type="image/png")
    hits = resolve_references("see ![the chart](chart_png)", store)
    assert [v.name for v in hits] == ["chart_png"]


@pytest.mark.parametrize("size", [1024, 1024 * 1024])
def test_export_materialize_byte_equality(size):
    payload = random.Random(size).randbytes(size)
    source = VariableStore(owner=1)
    variable = source.define("blob", payload, media_type="application/octet-stream")
    attachment = export_by_value(variable)
    target = VariableStore(owner=2)
    landed = materialize(target, attachment)
    assert landed.size == size
    assert hashlib.sha256(landed.content).hexdigest() == hashlib.sha256(payload).hexdigest()


def test_export_respects_size_cap():
    store = VariableStore(owner=1)
    big = store.define("big", b"x" * (DEFAULT_EXPORT_CAP + 1))
    with pytest.raises(OversizeVariableError) as err:
        export_by_value(big)
    assert "module's own filesystem" in str(err.value)
    small_cap = store.define("s", b"x" * 10)
    with pytest.raises(OversizeVariableError):
        export_by_value(small_cap, size_cap=5)


def test_auto_names_are_monotonic():
    store = VariableStore(owner=3)
    assert store.next_auto_name(3) == "auto_3_1"
    assert store.next_auto_name(3) == "auto_3_2"
