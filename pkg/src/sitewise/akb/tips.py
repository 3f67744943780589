"""Knowledge tips: crystallized site-level operating rules with matching metadata.

A tip follows the four-field template (scope / action guidance / constraint /
goal alignment) and matches pages through URL patterns and keywords. An
optional guard makes the tip machine-checkable: forbid or require an action
pattern whenever the current URL matches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..patterns import BadPattern, validate_action_pattern, validate_pattern


class InvalidTip(Exception):
    """Tip rejected by validation; message lists the reasons."""


class DuplicateId(Exception):
    pass


class Frozen(Exception):
    """The knowledge base is frozen; mutations are rejected."""


GUARD_KINDS = ("forbid", "require")


@dataclass(frozen=True)
class Guard:
    """Machine-checkable rule: forbid/require an action pattern under a URL pattern."""

    kind: str
    action_pattern: str
    url_pattern: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "action_pattern": self.action_pattern, "url_pattern": self.url_pattern}

    @classmethod
    def from_dict(cls, d: dict) -> "Guard":
        return cls(kind=d["kind"], action_pattern=d["action_pattern"], url_pattern=d["url_pattern"])


@dataclass(frozen=True)
class KnowledgeTip:
    id: str
    domain_label: str
    scope: str
    action_guidance: str
    constraint: str = ""
    goal_alignment: str = ""
    url_patterns: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()
    guard: Optional[Guard] = None
    source_failure_id: Optional[str] = None
    created_at: str = ""

    def text(self) -> str:
        """Concatenated template fields, the unit of embedding-stage matching."""
        return " ".join(p for p in (self.scope, self.action_guidance, self.constraint, self.goal_alignment) if p)

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "domain_label": self.domain_label,
            "scope": self.scope,
            "action_guidance": self.action_guidance,
            "constraint": self.constraint,
            "goal_alignment": self.goal_alignment,
            "url_patterns": list(self.url_patterns),
            "keywords": list(self.keywords),
        }
        if self.guard is not None:
            d["guard"] = self.guard.to_dict()
        if self.source_failure_id is not None:
            d["source_failure_id"] = self.source_failure_id
        d["created_at"] = self.created_at
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeTip":
        guard = Guard.from_dict(d["guard"]) if d.get("guard") else None
        return cls(
            id=d["id"],
            domain_label=d.get("domain_label", ""),
            scope=d.get("scope", ""),
            action_guidance=d.get("action_guidance", ""),
            constraint=d.get("constraint", ""),
            goal_alignment=d.get("goal_alignment", ""),
            url_patterns=tuple(d.get("url_patterns", [])),
            keywords=tuple(d.get("keywords", [])),
            guard=guard,
            source_failure_id=d.get("source_failure_id"),
            created_at=d.get("created_at", ""),
        )


def validate_tip(tip: KnowledgeTip) -> None:
    """Raise InvalidTip listing every rule the tip breaks."""
    problems: list[str] = []
    if not tip.id or not tip.id.strip():
        problems.append("id must be non-empty")
    if not tip.scope.strip():
        problems.append("scope must be non-empty")
    if not tip.action_guidance.strip():
        problems.append("action_guidance must be non-empty")
    if not tip.url_patterns and not tip.keywords:
        problems.append("at least one of url_patterns or keywords is required")
    for kw in tip.keywords:
        if not kw or kw != kw.lower():
            problems.append(f"keyword {kw!r} must be non-empty lowercase")
    for pat in tip.url_patterns:
        try:
            validate_pattern(pat)
        except BadPattern as exc:
            problems.append(str(exc))
    if tip.guard is not None:
        if tip.guard.kind not in GUARD_KINDS:
            problems.append(f"guard kind must be one of {GUARD_KINDS}")
        try:
            validate_action_pattern(tip.guard.action_pattern)
        except BadPattern as exc:
            problems.append(f"guard action pattern: {exc}")
        try:
            validate_pattern(tip.guard.url_pattern)
        except BadPattern as exc:
            problems.append(f"guard url pattern: {exc}")
    if problems:
        raise InvalidTip("; ".join(problems))
