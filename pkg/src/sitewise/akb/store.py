"""The knowledge base proper: id-indexed tip set, inverted keyword index,
freeze semantics and atomic document persistence.

One JSON document holds the whole base. Writes go through temp-file-and-rename
under a cross-process file lock, so readers always see a complete document
(snapshot isolation at the document level) and concurrent writers serialize.
"""

from __future__ import annotations

import json
import threading
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Optional

from filelock import FileLock

from ..model import atomic_write_json
from .embedder import Embedder, TrigramHashEmbedder
from .tips import DuplicateId, Frozen, InvalidTip, KnowledgeTip, validate_tip

AKB_SCHEMA_VERSION = 1


class TipNotFound(Exception):
    pass


class KnowledgeBase:
    """In-memory tip set with optional document-file backing."""

    def __init__(self, embedder: Optional[Embedder] = None, path: Optional[str | Path] = None):
        self.tips: dict[str, KnowledgeTip] = {}
        self.frozen = False
        self.keyword_index: dict[str, set[str]] = defaultdict(set)
        self.embedder: Embedder = embedder or TrigramHashEmbedder()
        self.path = Path(path) if path else None
        self._tip_vecs: dict[str, object] = {}
        self._lock = threading.RLock()

    # -- construction / persistence ------------------------------------------

    @classmethod
    def load(cls, path: str | Path, embedder: Optional[Embedder] = None) -> "KnowledgeBase":
        kb = cls(embedder=embedder, path=path)
        p = Path(path)
        if p.exists():
            doc = json.loads(p.read_text(encoding="utf-8"))
            if doc.get("v") != AKB_SCHEMA_VERSION:
                raise ValueError(f"unsupported akb schema version {doc.get('v')!r}")
            kb.frozen = bool(doc.get("frozen", False))
            for d in doc.get("tips", []):
                tip = KnowledgeTip.from_dict(d)
                kb.tips[tip.id] = tip
            kb.rebuild_index()
        return kb

    def to_doc(self) -> dict:
        tips = [self.tips[tid].to_dict() for tid in sorted(self.tips)]
        return {"v": AKB_SCHEMA_VERSION, "frozen": self.frozen, "tips": tips}

    def save(self) -> None:
        if self.path is None:
            return
        lock = FileLock(str(self.path) + ".lock")
        with lock:
            atomic_write_json(self.path, self.to_doc())

    # -- indexing -------------------------------------------------------------

    def rebuild_index(self) -> None:
        index: dict[str, set[str]] = defaultdict(set)
        for tip in self.tips.values():
            for kw in tip.keywords:
                index[kw].add(tip.id)
        self.keyword_index = index
        self._tip_vecs = {}

    def tip_vector(self, tip_id: str):
        vec = self._tip_vecs.get(tip_id)
        if vec is None:
            vec = self.embedder.embed(self.tips[tip_id].text())
            self._tip_vecs[tip_id] = vec
        return vec

    # -- mutations ------------------------------------------------------------

    def add_tip(self, tip: KnowledgeTip) -> None:
        with self._lock:
            if self.frozen:
                raise Frozen("knowledge base is frozen")
            validate_tip(tip)
            if tip.id in self.tips:
                raise DuplicateId(tip.id)
            self.tips[tip.id] = tip
            for kw in tip.keywords:
                self.keyword_index[kw].add(tip.id)
            self._tip_vecs.pop(tip.id, None)
            self.save()

    def update_tip(self, tip: KnowledgeTip) -> None:
        with self._lock:
            if self.frozen:
                raise Frozen("knowledge base is frozen")
            validate_tip(tip)
            if tip.id not in self.tips:
                raise TipNotFound(tip.id)
            old = self.tips[tip.id]
            for kw in old.keywords:
                self.keyword_index[kw].discard(tip.id)
                if not self.keyword_index[kw]:
                    del self.keyword_index[kw]
            self.tips[tip.id] = tip
            for kw in tip.keywords:
                self.keyword_index[kw].add(tip.id)
            self._tip_vecs.pop(tip.id, None)
            self.save()

    def delete_tip(self, tip_id: str) -> None:
        with self._lock:
            if self.frozen:
                raise Frozen("knowledge base is frozen")
            if tip_id not in self.tips:
                raise TipNotFound(tip_id)
            old = self.tips.pop(tip_id)
            for kw in old.keywords:
                self.keyword_index[kw].discard(tip_id)
                if not self.keyword_index[kw]:
                    del self.keyword_index[kw]
            self._tip_vecs.pop(tip_id, None)
            self.save()

    def freeze(self) -> None:
        """Idempotent; retrieval is unaffected, every later mutation is rejected."""
        with self._lock:
            self.frozen = True
            self.save()

    # -- queries --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.tips)

    def domain_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for tip in self.tips.values():
            counts[tip.domain_label] = counts.get(tip.domain_label, 0) + 1
        return dict(sorted(counts.items()))

    def import_tips(self, tips: Iterable[KnowledgeTip]) -> int:
        """Add many tips; all-or-nothing is not attempted, the first error aborts."""
        n = 0
        for tip in tips:
            self.add_tip(tip)
            n += 1
        return n


def load_tips_file(path: str | Path) -> list[KnowledgeTip]:
    """Read tips out of an AKB document or a bare {"tips": [...]} / [...] file."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, list):
        raw = doc
    else:
        raw = doc.get("tips", [])
    return [KnowledgeTip.from_dict(d) for d in raw]
