"""Request and response shapes for the HTTP service.

Stored documents (tips, queue entries, trace events, run meta) already carry
versioned schemas of their own, so read endpoints return them verbatim; the
models here cover the request side plus the envelopes the service invents.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ErrorBody(BaseModel):
    code: str
    message: str
    detail: Optional[Any] = None


class GuardIn(BaseModel):
    kind: str
    action_pattern: str
    url_pattern: str


class TipIn(BaseModel):
    """Shape mirror of the stored tip document; semantic checks stay in the store."""

    id: str
    domain_label: str = ""
    scope: str = ""
    action_guidance: str = ""
    constraint: str = ""
    goal_alignment: str = ""
    url_patterns: list[str] = Field(default_factory=list)
    keywords: list[str] = Field(default_factory=list)
    guard: Optional[GuardIn] = None
    source_failure_id: Optional[str] = None
    created_at: str = ""

    def to_doc(self) -> dict:
        doc = self.model_dump()
        # the stored document omits optional fields instead of writing nulls
        if doc.get("guard") is None:
            doc.pop("guard", None)
        if doc.get("source_failure_id") is None:
            doc.pop("source_failure_id", None)
        return doc


class ResolveRequest(BaseModel):
    tip_id: Optional[str] = None
    note: str = ""


class LaunchRequest(BaseModel):
    task_id: str
    mode: str = "full"
    max_steps: Optional[int] = Field(default=None, ge=1, le=200)
    wait: bool = True


class LaunchAccepted(BaseModel):
    run_id: str
    status: str = "running"


class RunSummary(BaseModel):
    run_id: str
    goal_id: str = ""
    status: str
    mode: str = ""
    steps: int = 0
    answer: Optional[str] = None


class EventsPage(BaseModel):
    run_id: str
    status: str
    next: int
    total: int
    events: list[dict]


class HealthOut(BaseModel):
    status: str = "ok"
    version: str


class FreezeOut(BaseModel):
    frozen: bool
    tips: int


class StatsOut(BaseModel):
    frozen: bool
    tips: int
    domains: dict[str, int]
