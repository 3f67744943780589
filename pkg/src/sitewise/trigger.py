"""Failure detection over the live trajectory.

Four deterministic rules run first, in a fixed order, so identical
trajectories always produce identical verdicts. A semantic evaluator can run
after them; it is a port, and an outage there degrades to rules-only rather
than failing the step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol as TypingProtocol, Sequence

from .llm.errors import ModelUnavailable
from .llm.gateway import LLMClient
from .model import Goal, Observation, RunConfig, TraceEvent, Trajectory
from .summarizer import BeliefState, render as render_belief

SOURCE_LOOP = "rule_loop"
SOURCE_BUDGET = "rule_budget"
SOURCE_PARSE = "rule_parse"
SOURCE_ERROR_PAGE = "rule_error_page"
SOURCE_SEMANTIC = "semantic"
SOURCES = (SOURCE_LOOP, SOURCE_BUDGET, SOURCE_PARSE, SOURCE_ERROR_PAGE, SOURCE_SEMANTIC)


@dataclass(frozen=True)
class TriggerVerdict:
    fired: bool
    source: Optional[str] = None
    detail: str = ""
    evidence: tuple[int, ...] = ()

    def __post_init__(self):
        if self.fired and self.source not in SOURCES:
            raise ValueError(f"fired verdict needs a known source, got {self.source!r}")
        if not self.fired and self.source is not None:
            raise ValueError("unfired verdict must not carry a source")

    def to_payload(self) -> dict:
        d: dict = {"fired": self.fired, "detail": self.detail, "evidence": list(self.evidence)}
        if self.source is not None:
            d["source"] = self.source
        return d


NOT_FIRED = TriggerVerdict(fired=False)


# --- trajectory views --------------------------------------------------------


def _observe_fingerprints(traj: Trajectory) -> dict[int, str]:
    return {
        ev.step: ev.payload["page_fingerprint"]
        for ev in traj.events
        if ev.phase == "observe"
    }


def _act_events(traj: Trajectory) -> list[TraceEvent]:
    return [ev for ev in traj.events if ev.phase == "act"]


def step_pairs(traj: Trajectory) -> dict[int, tuple[str, str]]:
    """Per step: (serialized action, page fingerprint), for steps that acted."""
    fps = _observe_fingerprints(traj)
    out: dict[int, tuple[str, str]] = {}
    for ev in _act_events(traj):
        decision = ev.payload.get("decision")
        if decision and ev.step in fps:
            out[ev.step] = (decision["action"], fps[ev.step])
    return out


# --- rules -------------------------------------------------------------------


def rule_loop(traj: Trajectory, k: int) -> Optional[TriggerVerdict]:
    """Last k steps each repeated one identical action on one identical page."""
    steps = sorted(_observe_fingerprints(traj))
    if len(steps) < k:
        return None
    window = steps[-k:]
    pairs = step_pairs(traj)
    seen = [pairs.get(s) for s in window]
    if any(p is None for p in seen) or len(set(seen)) != 1:
        return None
    action, _ = seen[0]
    return TriggerVerdict(
        fired=True,
        source=SOURCE_LOOP,
        detail=f"action {action} repeated {k} times on an unchanged page",
        evidence=tuple(window),
    )


def rule_budget(traj: Trajectory, max_steps: int) -> Optional[TriggerVerdict]:
    """Step budget spent without a stop among the first max_steps actions."""
    acts = _act_events(traj)
    if len(acts) < max_steps:
        return None
    first = acts[:max_steps]
    for ev in first:
        decision = ev.payload.get("decision")
        if decision and decision.get("name") == "stop":
            return None
    return TriggerVerdict(
        fired=True,
        source=SOURCE_BUDGET,
        detail=f"{len(acts)} steps taken without stop (budget {max_steps})",
        evidence=(first[-1].step,),
    )


def rule_parse(traj: Trajectory, m: int) -> Optional[TriggerVerdict]:
    """m or more consecutive action steps lost to unparseable model replies."""
    run: list[int] = []
    for ev in _act_events(traj):
        err = ev.payload.get("error")
        if err and err.get("kind") == "ParseFailure":
            run.append(ev.step)
            if len(run) >= m:
                return TriggerVerdict(
                    fired=True,
                    source=SOURCE_PARSE,
                    detail=f"{len(run)} consecutive unparseable replies",
                    evidence=tuple(run),
                )
        else:
            run = []
    return None


def rule_error_page(obs: Observation, markers: Sequence[str]) -> Optional[TriggerVerdict]:
    for marker in markers:
        if marker in obs.ax_tree:
            return TriggerVerdict(
                fired=True,
                source=SOURCE_ERROR_PAGE,
                detail=f"page shows error marker {marker!r}",
                evidence=(obs.step,),
            )
    return None


# --- semantic evaluator port -------------------------------------------------


class SemanticEvaluator(TypingProtocol):
    def assess(self, goal: Goal, obs: Observation, belief: BeliefState) -> tuple[bool, str]:
        """Returns (consistent, rationale)."""
        ...


class AlwaysConsistent:
    """Null evaluator; rules carry the whole detection load."""

    def assess(self, goal: Goal, obs: Observation, belief: BeliefState) -> tuple[bool, str]:
        return True, "semantic check disabled"


_SEMANTIC_PROMPT = """You audit a browser-automation session for semantic drift.

Goal:
{goal}

Progress summary:
{belief}

Current page URL: {url}
Accessibility tree:
{ax_tree}

Does the current page state remain consistent with making progress toward the
goal? Answer with one line: either CONSISTENT, or INCONSISTENT: <reason>."""


class ModelSemanticEvaluator:
    """Asks a model whether the page still serves the goal."""

    def __init__(self, client: LLMClient):
        self.client = client

    def assess(self, goal: Goal, obs: Observation, belief: BeliefState) -> tuple[bool, str]:
        prompt = _SEMANTIC_PROMPT.format(
            goal=goal.instruction,
            belief=render_belief(belief),
            url=obs.url,
            ax_tree=obs.ax_tree,
        )
        reply = self.client.complete([{"role": "user", "content": prompt}]).text.strip()
        head, _, tail = reply.partition(":")
        if head.strip().upper() == "INCONSISTENT":
            return False, tail.strip() or "no rationale given"
        # anything else, including malformed replies, counts as consistent
        return True, reply[:200]


# --- entry point -------------------------------------------------------------


def evaluate(
    obs: Observation,
    traj: Trajectory,
    cfg: RunConfig,
    goal: Optional[Goal] = None,
    belief: Optional[BeliefState] = None,
    semantic: Optional[SemanticEvaluator] = None,
) -> TriggerVerdict:
    """Run rules in fixed order, then the semantic evaluator when provided."""
    verdict = (
        rule_loop(traj, cfg.loop_k)
        or rule_budget(traj, cfg.max_steps)
        or rule_parse(traj, cfg.parse_m)
        or rule_error_page(obs, cfg.error_markers)
    )
    if verdict is not None:
        return verdict
    if semantic is not None and goal is not None and belief is not None:
        try:
            consistent, rationale = semantic.assess(goal, obs, belief)
        except ModelUnavailable as exc:
            return TriggerVerdict(
                fired=False, detail=f"semantic evaluator unavailable, rules-only: {exc}"
            )
        if not consistent:
            return TriggerVerdict(
                fired=True, source=SOURCE_SEMANTIC, detail=rationale, evidence=(obs.step,)
            )
    return NOT_FIRED
