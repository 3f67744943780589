"""Failure-queue document store tests."""

import json

import pytest

from sitewise.queue import EntryNotFound, FailureQueue, QueueUnavailable
from sitewise.trigger import TriggerVerdict


def verdict():
    return TriggerVerdict(fired=True, source="rule_loop", detail="looping", evidence=(3, 4, 5))


class TestQueue:
    def test_enqueue_and_get(self, tmp_path):
        q = FailureQueue(tmp_path / "q.json")
        eid = q.enqueue("r1-full", "g1", verdict(), run_dir="/runs/r1", answer=None)
        assert eid == "r1-full"
        entry = q.get(eid)
        assert entry["goal_id"] == "g1"
        assert entry["status"] == "open"
        assert entry["verdict"]["source"] == "rule_loop"
        assert entry["verdict"]["evidence"] == [3, 4, 5]

    def test_resolve_records_the_tip(self, tmp_path):
        q = FailureQueue(tmp_path / "q.json")
        q.enqueue("r1-full", "g1", verdict())
        out = q.resolve("r1-full", tip_id="tip-9", note="added a tip")
        assert out["status"] == "resolved"
        assert out["resolution"] == {"tip_id": "tip-9", "note": "added a tip"}
        assert q.counts() == {"open": 0, "resolved": 1}

    def test_list_filters_by_status(self, tmp_path):
        q = FailureQueue(tmp_path / "q.json")
        q.enqueue("a-full", "g1", verdict())
        q.enqueue("b-full", "g2", verdict())
        q.resolve("a-full")
        assert [e["id"] for e in q.list()] == ["a-full", "b-full"]
        assert [e["id"] for e in q.list(status="open")] == ["b-full"]
        assert [e["id"] for e in q.list(status="resolved")] == ["a-full"]

    def test_entries_survive_reopen(self, tmp_path):
        path = tmp_path / "q.json"
        q = FailureQueue(path)
        q.enqueue("r1-full", "g1", verdict())
        q.resolve("r1-full", tip_id="t")
        again = FailureQueue(path)
        assert again.get("r1-full")["resolution"]["tip_id"] == "t"
        assert len(again) == 1

    def test_unknown_entry_raises(self, tmp_path):
        q = FailureQueue(tmp_path / "q.json")
        with pytest.raises(EntryNotFound):
            q.get("nope")
        with pytest.raises(EntryNotFound):
            q.resolve("nope")

    def test_corrupt_document_is_reported(self, tmp_path):
        path = tmp_path / "q.json"
        path.write_text("{ not json")
        with pytest.raises(QueueUnavailable):
            FailureQueue(path)

    def test_schema_version_gate(self, tmp_path):
        path = tmp_path / "q.json"
        path.write_text(json.dumps({"v": 99, "entries": []}))
        with pytest.raises(QueueUnavailable):
            FailureQueue(path)

    def test_missing_file_means_empty_queue(self, tmp_path):
        q = FailureQueue(tmp_path / "q.json")
        assert len(q) == 0
        assert q.list() == []
