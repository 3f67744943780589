"""File-backed queue of failed runs awaiting expert review.

One JSON document holds every entry; writes go through temp-file-and-rename
under a cross-process file lock, same discipline as the knowledge base store.
Entries move through exactly two states: ``open`` on enqueue, ``resolved``
once a reviewer has dealt with them (usually by submitting a tip).
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from filelock import FileLock

from .model import atomic_write_json
from .trigger import TriggerVerdict

QUEUE_SCHEMA_VERSION = 1

OPEN = "open"
RESOLVED = "resolved"


class QueueUnavailable(Exception):
    """The queue file cannot be read or written."""


class EntryNotFound(Exception):
    pass


class FailureQueue:
    """Id-indexed failure entries with document-file backing."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.entries: dict[str, dict] = {}
        self._lock = threading.RLock()
        self._load()

    def _load(self) -> None:
        try:
            if self.path.exists():
                doc = json.loads(self.path.read_text(encoding="utf-8"))
                if doc.get("v") != QUEUE_SCHEMA_VERSION:
                    raise QueueUnavailable(f"unsupported queue schema version {doc.get('v')!r}")
                self.entries = {e["id"]: e for e in doc.get("entries", [])}
        except (OSError, json.JSONDecodeError) as err:
            raise QueueUnavailable(f"cannot read queue at {self.path}: {err}") from err

    def _save(self) -> None:
        doc = {
            "v": QUEUE_SCHEMA_VERSION,
            "entries": [self.entries[eid] for eid in sorted(self.entries)],
        }
        try:
            lock = FileLock(str(self.path) + ".lock")
            with lock:
                atomic_write_json(self.path, doc)
        except OSError as err:
            raise QueueUnavailable(f"cannot write queue at {self.path}: {err}") from err

    # -- operations -----------------------------------------------------------

    def enqueue(
        self,
        run_id: str,
        goal_id: str,
        verdict: TriggerVerdict,
        run_dir: Optional[str] = None,
        answer: Optional[str] = None,
    ) -> str:
        """Add one failed run; returns the entry id (one entry per run id)."""
        with self._lock:
            entry_id = run_id
            entry = {
                "id": entry_id,
                "run_id": run_id,
                "goal_id": goal_id,
                "status": OPEN,
                "verdict": verdict.to_payload(),
                "run_dir": run_dir,
                "answer": answer,
                "resolution": None,
            }
            self.entries[entry_id] = entry
            self._save()
            return entry_id

    def get(self, entry_id: str) -> dict:
        with self._lock:
            if entry_id not in self.entries:
                raise EntryNotFound(entry_id)
            return dict(self.entries[entry_id])

    def list(self, status: Optional[str] = None) -> list[dict]:
        with self._lock:
            out = [dict(e) for _, e in sorted(self.entries.items())]
        if status is not None:
            out = [e for e in out if e["status"] == status]
        return out

    def resolve(self, entry_id: str, tip_id: Optional[str] = None, note: str = "") -> dict:
        """Mark an entry handled, recording what (if anything) was injected."""
        with self._lock:
            if entry_id not in self.entries:
                raise EntryNotFound(entry_id)
            entry = self.entries[entry_id]
            entry["status"] = RESOLVED
            entry["resolution"] = {"tip_id": tip_id, "note": note}
            self._save()
            return dict(entry)

    def counts(self) -> dict[str, int]:
        with self._lock:
            n_open = sum(1 for e in self.entries.values() if e["status"] == OPEN)
            return {"open": n_open, "resolved": len(self.entries) - n_open}

    def __len__(self) -> int:
        return len(self.entries)
