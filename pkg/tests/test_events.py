"""Event log tests: gap-free sequencing, durable append, tolerant loading,
and tree reconstruction as a pure function of the log."""

import json
import os

import pytest

from agenttree.events import (
    EventKind,
    EventLog,
    EventRecord,
    FORMAT_NAME,
    FORMAT_VERSION,
    StorageError,
    call_return_balanced,
    header_line,
    load_log,
    reconstruct_tree,
)


def test_append_sequences_are_gap_free():
    log = EventLog()
    seqs = [log.append(EventKind.NODE_CREATED, node_id=i) for i in range(5)]
    assert seqs == [0, 1, 2, 3, 4]
    assert [r.seq for r in log.records] == seqs
    assert log.next_seq == 5


def test_since_returns_suffix():
    log = EventLog()
    for i in range(4):
        log.append(EventKind.LLM_TURN, node_id=0)
    assert [r.seq for r in log.since(2)] == [2, 3]
    assert log.since(10) == []


def test_file_log_round_trips(tmp_path):
    path = tmp_path / "events.jsonl"
    log = EventLog(path=str(path), clock=lambda: 42.0)
    log.append(EventKind.NODE_CREATED, node_id=0, payload={"agent_type": "root", "child_name": None})
    log.append(EventKind.LLM_TURN, node_id=0, payload={"output": "hi"})
    log.close()

    lines = path.read_text().splitlines()
    assert json.loads(lines[0]) == {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    loaded = load_log(str(path))
    assert loaded.complete
    assert loaded.records == log.records
    assert loaded.records[0].at == 42.0


def test_append_is_flushed_before_returning(tmp_path):
    # Write-ahead contract: the line is on disk before append returns.
    path = tmp_path / "events.jsonl"
    log = EventLog(path=str(path))
    log.append(EventKind.NODE_CREATED, node_id=0)
    lines = path.read_text().splitlines()
    assert len(lines) == 2  # header + record, without close()
    log.close()


def test_append_failure_raises_storage_error(tmp_path):
    log = EventLog(path=str(tmp_path / "events.jsonl"))

    class Broken:
        def write(self, _):
            raise OSError("disk full")

        def flush(self):
            pass

        def close(self):
            pass

    log._fh = Broken()
    with pytest.raises(StorageError):
        log.append(EventKind.LLM_TURN, node_id=0)


def test_load_log_bad_header(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("not a header\n")
    loaded = load_log(str(path))
    assert loaded.truncated_at_line == 1
    assert loaded.records == []


def test_load_log_truncated_tail(tmp_path):
    path = tmp_path / "events.jsonl"
    good = EventRecord(seq=0, kind=EventKind.NODE_CREATED, node_id=0, parent_id=None, payload={}, at=0.0)
    path.write_text(
        header_line() + "\n" + json.dumps(good.to_json()) + "\n" + '{"seq": 1, "ki'
    )
    loaded = load_log(str(path))
    assert not loaded.complete
    assert loaded.truncated_at_line == 3
    assert [r.seq for r in loaded.records] == [0]


def test_load_log_out_of_sequence_stops(tmp_path):
    path = tmp_path / "events.jsonl"
    r0 = EventRecord(seq=0, kind=EventKind.NODE_CREATED, node_id=0, parent_id=None, payload={}, at=0.0)
    r2 = EventRecord(seq=2, kind=EventKind.LLM_TURN, node_id=0, parent_id=None, payload={}, at=0.0)
    path.write_text(
        header_line() + "\n" + json.dumps(r0.to_json()) + "\n" + json.dumps(r2.to_json()) + "\n"
    )
    loaded = load_log(str(path))
    assert loaded.truncated_at_line == 3
    assert len(loaded.records) == 1


def test_reopening_appends_without_second_header(tmp_path):
    path = tmp_path / "events.jsonl"
    first = EventLog(path=str(path))
    first.append(EventKind.NODE_CREATED, node_id=0)
    first.close()
    second = EventLog(path=str(path))
    second.preload(load_log(str(path)).records)
    second.append(EventKind.LLM_TURN, node_id=0)
    second.close()
    loaded = load_log(str(path))
    assert loaded.complete
    assert [r.seq for r in loaded.records] == [0, 1]


def _created(seq, node_id, parent_id=None, child_name=None, agent_type="t"):
    return EventRecord(
        seq=seq,
        kind=EventKind.NODE_CREATED,
        node_id=node_id,
        parent_id=parent_id,
        payload={"agent_type": agent_type, "child_name": child_name},
        at=0.0,
    )


def _ev(seq, kind, node_id, parent_id=None, payload=None):
    return EventRecord(seq=seq, kind=kind, node_id=node_id, parent_id=parent_id, payload=payload or {}, at=0.0)


def test_reconstruct_tree_structure_and_transcripts():
    records = [
        _created(0, 0, agent_type="root"),
        _created(1, 1, parent_id=0, child_name="a", agent_type="worker"),
        _ev(2, EventKind.CALL, 1, parent_id=0, payload={"message": "go"}),
        _ev(3, EventKind.LLM_TURN, 1, payload={"output": "done"}),
        _ev(4, EventKind.RETURN, 1, parent_id=0, payload={"message": "done"}),
    ]
    tree = reconstruct_tree(records)
    assert tree.structure() == {
        0: (None, None, "root", (("a", 1),)),
        1: (0, "a", "worker", ()),
    }
    assert [e["kind"] for e in tree.nodes[1].transcript] == ["call", "llm_turn", "return"]
    assert [(d, n.node_id) for d, n in tree.outline()] == [(0, 0), (1, 1)]


def test_call_return_balance():
    ok = [
        _ev(0, EventKind.CALL, 1, parent_id=0),
        _ev(1, EventKind.CALL, 2, parent_id=1),
        _ev(2, EventKind.RETURN, 2, parent_id=1),
        _ev(3, EventKind.RETURN, 1, parent_id=0),
    ]
    assert call_return_balanced(ok)

    crossing = [
        _ev(0, EventKind.CALL, 1, parent_id=0),
        _ev(1, EventKind.CALL, 2, parent_id=1),
        _ev(2, EventKind.RETURN, 1, parent_id=0),
        _ev(3, EventKind.RETURN, 2, parent_id=1),
    ]
    assert not call_return_balanced(crossing)

    unreturned = [_ev(0, EventKind.CALL, 1, parent_id=0)]
    assert not call_return_balanced(unreturned)
