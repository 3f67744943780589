"""Adaptive knowledge base: tip store, retrieval cascade, freeze semantics."""

from .embedder import Embedder, TrigramHashEmbedder, cosine, embedding_digest
from .retrieval import (
    AX_TOP_CHARS,
    EMPTY_KNOWLEDGE,
    STAGE_EMBEDDING,
    STAGE_KEYWORD,
    STAGE_URL,
    RetrievedItem,
    RetrievedKnowledge,
    keyword_idf,
    retrieve,
    tokenize,
)
from .store import KnowledgeBase, TipNotFound, load_tips_file
from .tips import DuplicateId, Frozen, Guard, InvalidTip, KnowledgeTip, validate_tip
from ..patterns import BadPattern, match_url

__all__ = [
    "AX_TOP_CHARS",
    "BadPattern",
    "DuplicateId",
    "EMPTY_KNOWLEDGE",
    "Embedder",
    "Frozen",
    "Guard",
    "InvalidTip",
    "KnowledgeBase",
    "KnowledgeTip",
    "RetrievedItem",
    "RetrievedKnowledge",
    "STAGE_EMBEDDING",
    "STAGE_KEYWORD",
    "STAGE_URL",
    "TipNotFound",
    "TrigramHashEmbedder",
    "cosine",
    "embedding_digest",
    "keyword_idf",
    "load_tips_file",
    "match_url",
    "retrieve",
    "tokenize",
    "validate_tip",
]
