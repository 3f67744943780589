"""Record/replay cassette over any completion client.

One JSONL line per recorded exchange: {digest, request, response}. The raw
request rides along for audit only; lookup is by digest. Appends take a file
lock so concurrent sessions can share one cassette.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

from filelock import FileLock

from .errors import CassetteMiss
from .gateway import Completion, LLMClient, Message, request_digest

MODE_RECORD = "record"
MODE_REPLAY = "replay"


class CassetteBackend:
    """Wraps an inner client; replay mode needs no inner client at all."""

    def __init__(self, path: str | Path, mode: str = MODE_REPLAY, inner: Optional[LLMClient] = None):
        if mode not in (MODE_RECORD, MODE_REPLAY):
            raise ValueError(f"unknown cassette mode {mode!r}")
        if mode == MODE_RECORD and inner is None:
            raise ValueError("record mode needs an inner client")
        self.path = Path(path)
        self.mode = mode
        self.inner = inner
        self._store: dict[str, Completion] = {}
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                resp = rec["response"]
                self._store[rec["digest"]] = Completion(
                    text=resp["text"], usage=resp.get("usage", {})
                )

    def complete(
        self,
        messages: Sequence[Message],
        model_id: Optional[str] = None,
        params: Optional[dict] = None,
    ) -> Completion:
        model_id = model_id or getattr(self.inner, "model_id", "") or ""
        params = params if params is not None else getattr(self.inner, "params", {}) or {}
        digest = request_digest(messages, model_id, params)
        hit = self._store.get(digest)
        if hit is not None:
            return hit
        if self.mode == MODE_REPLAY:
            raise CassetteMiss(digest)
        completion = self.inner.complete(messages, model_id=model_id, params=params)
        self._record(digest, messages, model_id, params, completion)
        return completion

    def _record(
        self,
        digest: str,
        messages: Sequence[Message],
        model_id: str,
        params: dict,
        completion: Completion,
    ) -> None:
        rec = {
            "digest": digest,
            "request": {"messages": list(messages), "model_id": model_id, "params": params},
            "response": {"text": completion.text, "usage": completion.usage},
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        lock = FileLock(str(self.path) + ".lock")
        with lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        self._store[digest] = completion

    def __len__(self) -> int:
        return len(self._store)
