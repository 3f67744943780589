"""Three-stage retrieval cascade over the knowledge base.

Stage 1 matches tip URL patterns against the current page URL. Stage 2 scores
keyword overlap between tip keywords and the tokens of the instruction plus
the top of the accessibility tree, weighted by inverse tip frequency. Stage 3
ranks everything left by embedding cosine similarity. Results concatenate in
stage order (url < keyword < embedding) and a tip appears at most once, at the
earliest stage that matched it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..model import Goal, Observation
from ..patterns import match_url
from .embedder import cosine, embedding_digest
from .store import KnowledgeBase
from .tips import KnowledgeTip

STAGE_URL = "url"
STAGE_KEYWORD = "keyword"
STAGE_EMBEDDING = "embedding"
STAGES = (STAGE_URL, STAGE_KEYWORD, STAGE_EMBEDDING)

# How much of the accessibility tree's head participates in keyword extraction.
AX_TOP_CHARS = 2000

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


def keyword_idf(term: str, total_tips: int, doc_freq: int) -> float:
    """Inverse tip frequency weight; rare keywords count for more."""
    return math.log((1 + total_tips) / (1 + doc_freq)) + 1.0


@dataclass(frozen=True)
class RetrievedItem:
    tip: KnowledgeTip
    stage: str
    score: float


@dataclass(frozen=True)
class RetrievedKnowledge:
    items: tuple[RetrievedItem, ...]
    query_url: str = ""
    query_keywords: tuple[str, ...] = ()
    query_embedding_digest: str = ""

    def __bool__(self) -> bool:
        return bool(self.items)

    def tips(self) -> list[KnowledgeTip]:
        return [it.tip for it in self.items]

    def to_payload(self) -> dict:
        """Compact trajectory-event payload; full tips live in the AKB."""
        return {
            "items": [
                {"tip_id": it.tip.id, "domain": it.tip.domain_label, "stage": it.stage, "score": it.score}
                for it in self.items
            ],
            "query": {
                "url": self.query_url,
                "keywords": list(self.query_keywords),
                "embedding_digest": self.query_embedding_digest,
            },
        }


EMPTY_KNOWLEDGE = RetrievedKnowledge(items=())


def retrieve(kb: KnowledgeBase, obs: Observation, goal: Goal, limit: int = 5) -> RetrievedKnowledge:
    """Run the cascade; deterministic given a deterministic embedder."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    tokens = tokenize(goal.instruction + " " + obs.ax_tree[:AX_TOP_CHARS])
    query_vec = kb.embedder.embed(obs.url + " " + goal.instruction)
    digest = embedding_digest(query_vec)

    matched: set[str] = set()
    items: list[RetrievedItem] = []

    url_hits = [
        tip for tid, tip in kb.tips.items()
        if any(match_url(pat, obs.url) for pat in tip.url_patterns)
    ]
    for tip in sorted(url_hits, key=lambda t: t.id):
        items.append(RetrievedItem(tip=tip, stage=STAGE_URL, score=1.0))
        matched.add(tip.id)

    total = len(kb.tips)
    kw_scored: list[tuple[float, str]] = []
    candidates: set[str] = set()
    for term in tokens:
        candidates.update(kb.keyword_index.get(term, ()))
    for tid in candidates:
        if tid in matched:
            continue
        tip = kb.tips[tid]
        overlap = [kw for kw in tip.keywords if kw in tokens]
        if not overlap:
            continue
        score = sum(keyword_idf(term, total, len(kb.keyword_index[term])) for term in overlap)
        kw_scored.append((score, tid))
    for score, tid in sorted(kw_scored, key=lambda p: (-p[0], p[1])):
        items.append(RetrievedItem(tip=kb.tips[tid], stage=STAGE_KEYWORD, score=score))
        matched.add(tid)

    emb_scored: list[tuple[float, str]] = []
    for tid in kb.tips:
        if tid in matched:
            continue
        emb_scored.append((cosine(query_vec, kb.tip_vector(tid)), tid))
    for score, tid in sorted(emb_scored, key=lambda p: (-p[0], p[1])):
        items.append(RetrievedItem(tip=kb.tips[tid], stage=STAGE_EMBEDDING, score=score))

    return RetrievedKnowledge(
        items=tuple(items[:limit]),
        query_url=obs.url,
        query_keywords=tuple(sorted(tokens)),
        query_embedding_digest=digest,
    )
