"""Task success judgment: reported-answer matching or final-state validators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..model import Goal

MODE_ANSWER = "answer_based"
MODE_PROGRAMMATIC = "programmatic"


class SpecMissing(Exception):
    """Goal has no usable evaluation spec."""


@dataclass(frozen=True)
class EvalOutcome:
    success: bool
    mode: str
    detail: str = ""

    def to_payload(self) -> dict:
        return {"success": self.success, "mode": self.mode, "detail": self.detail}


def _check(value, op: str, expected) -> bool:
    if op == "eq":
        return value == expected
    if op == "ne":
        return value != expected
    if op == "gte":
        return value is not None and value >= expected
    if op == "lte":
        return value is not None and value <= expected
    if op == "contains":
        return value is not None and str(expected) in str(value)
    raise SpecMissing(f"unknown validator op {op!r}")


def evaluate_success(
    goal: Goal,
    answer: Optional[str],
    final_state: dict,
    site_validators: Sequence[dict] = (),
) -> EvalOutcome:
    """Two-branch success check, driven by the goal's reference_answer spec.

    answer_based: exact (whitespace-stripped equality) or must_include (every
    required string is a case-sensitive substring of the answer).
    programmatic: every validator passes against final_state; validators are
    inline dicts or names resolved against site_validators.
    """
    spec = goal.reference_answer
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecMissing(f"goal {goal.id!r} has no evaluation spec")
    kind = spec["kind"]

    if kind == MODE_ANSWER:
        if answer is None:
            return EvalOutcome(False, MODE_ANSWER, "no answer reported")
        match = spec.get("match", "exact")
        if match == "exact":
            expected = str(spec["value"])
            got = answer.strip() == expected.strip()
            detail = "" if got else f"expected {expected!r}, got {answer.strip()!r}"
            return EvalOutcome(got, MODE_ANSWER, detail)
        if match == "must_include":
            missing = [v for v in spec["values"] if str(v) not in answer]
            if missing:
                return EvalOutcome(False, MODE_ANSWER, f"answer lacks {missing!r}")
            return EvalOutcome(True, MODE_ANSWER, "")
        raise SpecMissing(f"unknown answer match rule {match!r}")

    if kind == MODE_PROGRAMMATIC:
        checks = []
        for v in spec.get("validators", ()):
            if isinstance(v, str):
                resolved = next((sv for sv in site_validators if sv.get("name") == v), None)
                if resolved is None:
                    raise SpecMissing(f"validator {v!r} not declared by the site")
                checks.append(resolved)
            else:
                checks.append(v)
        if not checks:
            raise SpecMissing(f"goal {goal.id!r} names no validators")
        for v in checks:
            if not _check(final_state.get(v["var"]), v["op"], v["value"]):
                name = v.get("name", v["var"])
                return EvalOutcome(
                    False,
                    MODE_PROGRAMMATIC,
                    f"validator {name} failed: {v['var']}={final_state.get(v['var'])!r}",
                )
        return EvalOutcome(True, MODE_PROGRAMMATIC, "")

    raise SpecMissing(f"unknown evaluation kind {kind!r}")
