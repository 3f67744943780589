"""Scripted stub backend: substring rules mapped to canned replies.

A rule's `match` is one substring or a list that must ALL appear in the
concatenated message contents. Rules are checked in order; `times` caps how
often a rule may answer, letting a script express "malformed once, then
valid". Unmatched prompts raise instead of improvising.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import StubMiss
from .gateway import Completion, Message


@dataclass
class StubRule:
    match: Union[str, Sequence[str]]
    reply: str
    times: Optional[int] = None  # None = unlimited
    uses: int = 0

    def needles(self) -> tuple[str, ...]:
        if isinstance(self.match, str):
            return (self.match,)
        return tuple(self.match)

    def available(self) -> bool:
        return self.times is None or self.uses < self.times


def _as_rule(r: Union[StubRule, dict]) -> StubRule:
    if isinstance(r, StubRule):
        return r
    return StubRule(match=r["match"], reply=r["reply"], times=r.get("times"))


@dataclass
class ScriptedStub:
    rules: list[StubRule] = field(default_factory=list)
    calls: list[str] = field(default_factory=list)

    def __init__(self, rules: Sequence[Union[StubRule, dict]] = ()):
        self.rules = [_as_rule(r) for r in rules]
        self.calls = []

    def add(self, match: Union[str, Sequence[str]], reply: str, times: Optional[int] = None) -> None:
        self.rules.append(StubRule(match=match, reply=reply, times=times))

    def complete(
        self,
        messages: Sequence[Message],
        model_id: Optional[str] = None,
        params: Optional[dict] = None,
    ) -> Completion:
        text = "\n".join(str(m.get("content", "")) for m in messages)
        self.calls.append(text)
        for rule in self.rules:
            if not rule.available():
                continue
            if all(n in text for n in rule.needles()):
                rule.uses += 1
                return Completion(text=rule.reply, usage={"stub": True})
        raise StubMiss(f"no rule matched prompt of {len(text)} chars: {text[:120]!r}")


def stub_from_file(path: str | Path) -> ScriptedStub:
    """Build a stub from a JSON rules document: {"rules": [{match, reply, times?}]}."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return ScriptedStub(doc["rules"])
