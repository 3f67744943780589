"""Budgeted belief state: progressive history compression plus knowledge-aligned
reflection.

The belief replaces raw interaction history as the policy's memory. Its
serialization is three titled sections followed by a fenced ``meta`` block and
is hard-capped at RunConfig.belief_budget_chars: completed-subgoal lines
collapse oldest-first, then older notes drop out of the rendering (the
in-memory ledger keeps everything), then section tails are truncated.

Sections can come from a summarization model; without one, a deterministic
builder produces them from the observation and the guard checks, which keeps
the whole loop reproducible offline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional
from urllib.parse import urlsplit

from .actions import Action, TakeNote, serialize
from .akb.retrieval import RetrievedKnowledge
from .llm.errors import ModelUnavailable
from .model import Goal, Observation
from .patterns import action_matches, match_url

SECTION_PROGRESS = "Current Progress & Knowledge Check"
SECTION_STATE = "Current State Analysis"
SECTION_GUIDANCE = "Next-step Guidance"

# Hard cap on the one-line subgoal/meta entries so the skeleton stays small.
_LINE_CAP = 200


class BudgetImpossible(Exception):
    """The budget cannot hold even an emptied belief skeleton."""


@dataclass(frozen=True)
class BeliefState:
    """One step's compressed memory. Immutable; summarize() returns a new one."""

    progress_and_knowledge_check: str = ""
    state_analysis: str = ""
    next_step_guidance: Optional[str] = None
    active_subgoal: str = ""
    collapsed_history: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()  # full ledger; rendering may omit a prefix
    notes_omitted: int = 0
    deviation_flag: Optional[tuple[str, str]] = None  # (tip_id, reason)
    subgoal_key: str = ""
    char_len: int = 0

    def shown_notes(self) -> tuple[str, ...]:
        return self.notes[self.notes_omitted:]


EMPTY_BELIEF = BeliefState()


def _oneline(s: str) -> str:
    return " ".join(s.split())


def _san_block(text: str) -> str:
    """Keep section bodies from faking a header or closing the meta fence."""
    out = []
    for line in text.replace("\r", "").split("\n"):
        if line.startswith("## ") or line.startswith("```"):
            line = " " + line
        out.append(line)
    return "\n".join(out).strip("\n")


def render(belief: BeliefState) -> str:
    """Deterministic serialization; exactly what the operator prompt embeds."""
    lines = [
        f"## {SECTION_PROGRESS}",
        _san_block(belief.progress_and_knowledge_check),
        "",
        f"## {SECTION_STATE}",
        _san_block(belief.state_analysis),
        "",
    ]
    if belief.next_step_guidance is not None:
        lines += [f"## {SECTION_GUIDANCE}", _san_block(belief.next_step_guidance), ""]
    lines.append("```meta")
    lines.append("subgoal: " + _oneline(belief.active_subgoal)[:_LINE_CAP])
    if belief.deviation_flag is not None:
        tip_id, reason = belief.deviation_flag
        lines.append(f"deviation: {_oneline(tip_id)} | {_oneline(reason)[:_LINE_CAP]}")
    else:
        lines.append("deviation: none")
    lines.append("history:")
    for h in belief.collapsed_history:
        lines.append("- " + _oneline(h)[:_LINE_CAP])
    if belief.notes_omitted:
        lines.append(f"notes ({belief.notes_omitted} omitted):")
    else:
        lines.append("notes:")
    for n in belief.shown_notes():
        lines.append("- " + _oneline(n)[:_LINE_CAP])
    lines.append("```")
    return "\n".join(lines)


_META_RE = re.compile(r"^```meta\n(.*?)\n```\s*$", re.DOTALL | re.MULTILINE)
_NOTES_HDR = re.compile(r"^notes(?: \((\d+) omitted\))?:$")


def parse_belief(text: str) -> BeliefState:
    """Recover a BeliefState from its serialization (sections and meta)."""
    meta_m = _META_RE.search(text)
    body = text[: meta_m.start()] if meta_m else text

    sections: dict[str, str] = {}
    current: Optional[str] = None
    buf: list[str] = []
    for line in body.split("\n"):
        if line.startswith("## "):
            if current is not None:
                sections[current] = "\n".join(buf).strip("\n")
            current = line[3:].strip()
            buf = []
        else:
            buf.append(line)
    if current is not None:
        sections[current] = "\n".join(buf).strip("\n")

    subgoal, deviation, history, notes = "", None, [], []
    if meta_m:
        mode = ""
        for line in meta_m.group(1).split("\n"):
            if line.startswith("subgoal: "):
                subgoal = line[len("subgoal: "):]
            elif line.startswith("deviation: "):
                val = line[len("deviation: "):]
                if val != "none" and " | " in val:
                    tip_id, reason = val.split(" | ", 1)
                    deviation = (tip_id, reason)
            elif line == "history:":
                mode = "history"
            elif _NOTES_HDR.match(line):
                mode = "notes"
            elif line.startswith("- "):
                (history if mode == "history" else notes).append(line[2:])

    guidance = sections.get(SECTION_GUIDANCE)
    return BeliefState(
        progress_and_knowledge_check=sections.get(SECTION_PROGRESS, ""),
        state_analysis=sections.get(SECTION_STATE, ""),
        next_step_guidance=guidance,
        active_subgoal=subgoal,
        collapsed_history=tuple(history),
        notes=tuple(notes),
        notes_omitted=0,
        deviation_flag=deviation,
        char_len=len(text),
    )


def check_guards(
    knowledge: RetrievedKnowledge, planned: Action, obs: Observation
) -> Optional[tuple[str, str]]:
    """First violated guard in cascade order, else None. Pure."""
    for item in knowledge.items:
        guard = item.tip.guard
        if guard is None:
            continue
        if not match_url(guard.url_pattern, obs.url):
            continue
        hit = action_matches(guard.action_pattern, planned)
        if guard.kind == "forbid" and hit:
            return (
                item.tip.id,
                f"action {serialize(planned)} is forbidden here by pattern {guard.action_pattern}",
            )
        if guard.kind == "require" and not hit:
            return (
                item.tip.id,
                f"this page requires an action matching {guard.action_pattern}, "
                f"not {serialize(planned)}",
            )
    return None


def collapse(history_lines: list[str], budget: int) -> list[str]:
    """Drop oldest lines until the newline-joined text fits the budget."""
    lines = list(history_lines)
    while lines and len("\n".join(lines)) > budget:
        lines.pop(0)
    return lines


def fit_to_budget(belief: BeliefState, budget: int) -> BeliefState:
    """Enforce the budget: collapse history, omit old notes, trim section tails."""
    b = belief
    while True:
        text = render(b)
        over = len(text) - budget
        if over <= 0:
            return replace(b, char_len=len(text))
        if b.collapsed_history:
            b = replace(b, collapsed_history=b.collapsed_history[1:])
            continue
        if b.notes_omitted < len(b.notes):
            b = replace(b, notes_omitted=b.notes_omitted + 1)
            continue
        fields = {
            "state_analysis": b.state_analysis,
            "progress_and_knowledge_check": b.progress_and_knowledge_check,
            "next_step_guidance": b.next_step_guidance or "",
        }
        name = max(fields, key=lambda k: len(fields[k]))
        if not fields[name]:
            raise BudgetImpossible(
                f"belief skeleton is {len(text)} chars, budget {budget}"
            )
        cut = fields[name][: max(0, len(fields[name]) - over)]
        if name == "next_step_guidance":
            b = replace(b, next_step_guidance=cut)
        else:
            b = replace(b, **{name: cut})


def subgoal_key(url: str) -> str:
    """Fallback subgoal boundary: the first URL path segment."""
    parts = urlsplit(url)
    segs = [s for s in parts.path.split("/") if s]
    return (parts.netloc + "/" + (segs[0] if segs else "")).rstrip("/")


def initial_belief(goal: Goal, obs: Observation) -> BeliefState:
    return BeliefState(
        progress_and_knowledge_check="Task just started; nothing attempted yet.",
        state_analysis=f"On {obs.url} with {len(obs.marks)} interactive elements.",
        active_subgoal=goal.instruction,
        subgoal_key=subgoal_key(obs.url),
    )


def raw_history_digest(act_lines: list[str], window: int) -> str:
    """Fixed-window raw history: what the policy sees when summarization is off."""
    tail = act_lines[-window:]
    skipped = len(act_lines) - len(tail)
    head = [f"(history window: last {len(tail)} of {len(act_lines)} actions)"]
    if skipped:
        head.append(f"({skipped} earlier actions not shown)")
    return "\n".join(head + tail)


class Summarizer:
    """Produces the next belief each step; model-backed when given a completion fn.

    The completion callable maps a prompt string to the model's reply text. Any
    reply that does not contain the three sections falls back to the
    deterministic builder; budget enforcement always runs last.
    """

    def __init__(
        self,
        budget: int = 4096,
        complete: Optional[Callable[[str], str]] = None,
        prompt_template: Optional[str] = None,
    ):
        if budget < 512:
            raise ValueError("belief budget must be >= 512")
        self.budget = budget
        self.complete = complete
        self.prompt_template = prompt_template

    def summarize(
        self,
        prev: BeliefState,
        obs: Observation,
        knowledge: RetrievedKnowledge,
        last_action: Optional[Action],
        goal: Goal,
    ) -> BeliefState:
        if not prev.active_subgoal and not prev.progress_and_knowledge_check:
            base = initial_belief(goal, obs)
            notes: tuple[str, ...] = ()
            omitted = 0
        else:
            base = prev
            notes = prev.notes
            omitted = prev.notes_omitted

        if isinstance(last_action, TakeNote):
            notes = notes + (last_action.text,)

        history = base.collapsed_history
        active = base.active_subgoal or goal.instruction
        key = subgoal_key(obs.url)
        if base.subgoal_key and key != base.subgoal_key:
            history = history + (f"[{base.subgoal_key}] {active}",)
            active = goal.instruction

        deviation = None
        if last_action is not None and knowledge:
            deviation = check_guards(knowledge, last_action, obs)

        sections = None
        if self.complete is not None:
            sections = self._model_sections(prev, obs, knowledge, last_action, goal)
        if sections is None:
            sections = self._deterministic_sections(obs, knowledge, last_action, deviation)
        progress, state, guidance = sections

        if deviation is not None and guidance is None:
            tip_id, reason = deviation
            guidance = f"Correct course: {reason}. Re-read tip {tip_id} before acting."

        belief = BeliefState(
            progress_and_knowledge_check=progress,
            state_analysis=state,
            next_step_guidance=guidance,
            active_subgoal=active,
            collapsed_history=history,
            notes=notes,
            notes_omitted=omitted,
            deviation_flag=deviation,
            subgoal_key=key,
        )
        return fit_to_budget(belief, self.budget)

    # -- section builders -----------------------------------------------------

    def _deterministic_sections(
        self,
        obs: Observation,
        knowledge: RetrievedKnowledge,
        last_action: Optional[Action],
        deviation: Optional[tuple[str, str]],
    ) -> tuple[str, str, Optional[str]]:
        last = serialize(last_action) if last_action is not None else "none yet"
        if not knowledge:
            check = "No site guidance retrieved; standard progress tracking."
        elif deviation is None:
            check = f"Last action {last} is consistent with the {len(knowledge.items)} retrieved tip(s)."
        else:
            check = f"Deviation: last action {last} violates tip {deviation[0]}."
        progress = f"Last action: {last}. {check}"

        names = ", ".join(f"{m.role} '{m.name}'" for m in obs.marks[:8])
        state = f"On {obs.url} with {len(obs.marks)} interactive elements."
        if names:
            state += f" Visible: {names}."

        guidance = None
        if deviation is not None:
            tip_id, reason = deviation
            guidance = f"Correct course: {reason}. Re-read tip {tip_id} before acting."
        return progress, state, guidance

    def _model_sections(self, prev, obs, knowledge, last_action, goal):
        if self.prompt_template is None:
            return None
        tips_text = "\n".join(f"- [{t.id}] {t.text()}" for t in knowledge.tips()) or "(none)"
        prompt = self.prompt_template.format(
            goal=goal.instruction,
            relevant_knowledge=tips_text,
            axtree_txt=obs.ax_tree,
            action_history=serialize(last_action) if last_action else "(none)",
            previous_summary=render(prev) if prev.active_subgoal else "(none)",
        )
        try:
            reply = self.complete(prompt)
        except ModelUnavailable:
            raise  # infrastructure trouble is the caller's problem
        except Exception:
            return None  # an unparseable reply degrades to the deterministic builder
        parsed = parse_belief(reply)
        if not parsed.progress_and_knowledge_check or not parsed.state_analysis:
            return None
        return (
            parsed.progress_and_knowledge_check,
            parsed.state_analysis,
            parsed.next_step_guidance,
        )
