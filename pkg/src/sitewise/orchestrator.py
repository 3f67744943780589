"""The run loop: observe, retrieve, summarize, act, step, check triggers.

One step produces trajectory events in that fixed order. Knowledge retrieval
and belief summarization can each be switched off independently; the loop then
records an empty retrieval or substitutes a raw action-history window for the
belief, so ablated runs stay trace-compatible with full ones.

Component failures never escape as exceptions: model outages, unrecoverable
sessions and replay misses all end the run with status ``aborted`` and the
error recorded in the run metadata.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from .akb.retrieval import EMPTY_KNOWLEDGE, retrieve
from .akb.store import KnowledgeBase
from .akb.tips import DuplicateId, Frozen, InvalidTip, KnowledgeTip
from .actions import Stop, TakeNote, serialize
from .env.base import EnvTimeout, InvalidBid, NavigationError, Session, SessionLost
from .env.evaluate import EvalOutcome, SpecMissing, evaluate_success
from .env.mock import MockSite
from .env.sitespec import load_site_spec
from .env.watchdog import Unrecoverable, Watchdog
from .llm.errors import ModelUnavailable
from .llm.cassette import CassetteMiss
from .llm.gateway import LLMClient
from .llm.stub import StubMiss
from .model import (
    ABORTED,
    FAILURE,
    Goal,
    Observation,
    RunConfig,
    SUCCESS,
    TraceEvent,
    Trajectory,
    TrajectoryWriter,
    validate_phase_order,
)
from .operator import GroundingFailure, ParseFailure, decide
from .queue import FailureQueue
from .summarizer import BeliefState, Summarizer, raw_history_digest
from .trigger import SemanticEvaluator, TriggerVerdict, evaluate as evaluate_triggers

REPORT_SCHEMA_VERSION = 1

# Component failures that end the run instead of crashing the caller.
_FATAL = (ModelUnavailable, Unrecoverable, SessionLost, EnvTimeout, CassetteMiss, StubMiss)


class ProtocolViolation(Exception):
    """Benchmark protocol requirements are not met."""


class _Abort(Exception):
    def __init__(self, kind: str, detail: str):
        super().__init__(detail)
        self.kind = kind
        self.detail = detail


@dataclass
class RunResult:
    """Everything a caller needs to know about one finished run."""

    run_id: str
    trajectory: Trajectory
    status: str
    outcome: Optional[EvalOutcome] = None
    verdict: Optional[TriggerVerdict] = None
    answer: Optional[str] = None
    error: Optional[dict] = None
    belief_chars: list[int] = field(default_factory=list)
    run_dir: Optional[str] = None

    @property
    def steps(self) -> int:
        return len(self.trajectory.act_events())

    def meta(self, goal: Goal, cfg: RunConfig) -> dict:
        return {
            "v": 1,
            "run_id": self.run_id,
            "goal": goal.to_dict(),
            "mode": cfg.ablation_mode,
            "status": self.status,
            "steps": self.steps,
            "answer": self.answer,
            "outcome": self.outcome.to_payload() if self.outcome else None,
            "verdict": self.verdict.to_payload() if self.verdict else None,
            "error": self.error,
            "belief_chars": list(self.belief_chars),
            "config": {
                "max_steps": cfg.max_steps,
                "belief_budget_chars": cfg.belief_budget_chars,
                "retrieve_limit": cfg.retrieve_limit,
                "history_window": cfg.history_window,
                "loop_k": cfg.loop_k,
                "parse_m": cfg.parse_m,
            },
        }


def _bounded(obs: Observation, cap: int) -> Observation:
    if len(obs.ax_tree) <= cap:
        return obs
    # rebuild so the fingerprint reflects the truncated tree the policy sees
    return Observation(
        step=obs.step,
        url=obs.url,
        ax_tree=obs.ax_tree[:cap],
        marks=obs.marks,
        screenshot_ref=obs.screenshot_ref,
    )


def run_task(
    goal: Goal,
    env: Any,
    kb: KnowledgeBase,
    cfg: RunConfig,
    client: LLMClient,
    *,
    semantic: Optional[SemanticEvaluator] = None,
    record_dir: Optional[str | Path] = None,
    run_id: Optional[str] = None,
) -> RunResult:
    """Drive one goal to completion; returns the trajectory and outcome.

    ``env`` is either a site (anything with ``open()`` returning a session,
    which gets watchdog-wrapped) or an already-open session used as-is.
    """
    rid = run_id or f"{goal.id or 'run'}-{cfg.ablation_mode}"
    site = env if hasattr(env, "open") else None
    if site is not None:
        session: Session = Watchdog(site.open, retries=cfg.watchdog_retries)
    else:
        session = env
    spec = getattr(site, "spec", None)
    url_templates: Sequence[str] = spec.url_templates if spec is not None else ()
    site_validators: Sequence[dict] = spec.validators if spec is not None else ()

    writer = TrajectoryWriter(record_dir) if record_dir is not None else None
    traj = Trajectory(goal_id=goal.id)
    result = RunResult(run_id=rid, trajectory=traj, status=ABORTED)
    summarizer = Summarizer(budget=cfg.belief_budget_chars)
    belief = BeliefState()
    act_lines: list[str] = []
    last_action = None
    stopped = False

    def emit(step: int, phase: str, payload: dict) -> None:
        ev = TraceEvent(step=step, phase=phase, payload=payload)
        traj.append(ev)
        if writer is not None:
            writer.write_event(ev)

    try:
        for t in range(cfg.max_steps):
            # observe
            try:
                obs = _bounded(session.observe(step=t), cfg.ax_tree_max_chars)
            except _FATAL as err:
                raise _Abort(type(err).__name__, f"observe failed: {err}") from err
            emit(t, "observe", obs.to_dict())

            # retrieve
            if cfg.knowledge_enabled:
                knowledge = retrieve(kb, obs, goal, limit=cfg.retrieve_limit)
            else:
                knowledge = EMPTY_KNOWLEDGE
            emit(t, "retrieve", knowledge.to_payload())

            # summarize (or fall back to a raw history window)
            if cfg.summarizer_enabled:
                belief = summarizer.summarize(belief, obs, knowledge, last_action, goal)
                result.belief_chars.append(belief.char_len)
                emit(t, "summarize", _belief_payload(belief))
                prompt_belief: Any = belief
                trigger_belief: Optional[BeliefState] = belief
            else:
                prompt_belief = raw_history_digest(act_lines, cfg.history_window)
                trigger_belief = None

            # act
            last_action = None
            decision = None
            try:
                decision = decide(
                    client, obs, prompt_belief, knowledge, goal,
                    url_templates=url_templates, parse_retries=cfg.parse_retries,
                )
            except (ParseFailure, GroundingFailure) as err:
                kind = type(err).__name__
                emit(t, "act", {"decision": None, "error": {"kind": kind, "detail": str(err)}})
                act_lines.append(f"step {t}: no action ({kind})")
            except _FATAL as err:
                kind = type(err).__name__
                emit(t, "act", {"decision": None, "error": {"kind": kind, "detail": str(err)}})
                raise _Abort(kind, f"decide failed: {err}") from err

            if decision is not None:
                action = decision.action
                last_action = action
                emit(t, "act", {
                    "decision": {
                        "action": serialize(action),
                        "think": decision.think,
                        "retry_count": decision.retry_count,
                    },
                })

                # env step (skipped when no action was produced)
                try:
                    res = session.step(action)
                except (InvalidBid, NavigationError) as err:
                    emit(t, "env_step", {
                        "ok": False,
                        "note": "",
                        "error": {"kind": type(err).__name__, "detail": str(err)},
                    })
                    act_lines.append(f"step {t}: {serialize(action)} -> {type(err).__name__}")
                except _FATAL as err:
                    kind = type(err).__name__
                    emit(t, "env_step", {
                        "ok": False,
                        "note": "",
                        "error": {"kind": kind, "detail": str(err)},
                    })
                    raise _Abort(kind, f"env step failed: {err}") from err
                else:
                    emit(t, "env_step", res.to_payload())
                    note = f" ({res.note})" if res.note else ""
                    act_lines.append(f"step {t}: {serialize(action)}{note}")

                if isinstance(action, Stop):
                    result.answer = action.answer
                    stopped = True
                    break

            # trigger check closes the step
            verdict = evaluate_triggers(
                obs, traj, cfg, goal=goal, belief=trigger_belief, semantic=semantic,
            )
            emit(t, "trigger", verdict.to_payload())
            if verdict.fired:
                result.verdict = verdict
                break

        result.status = _final_status(result, goal, site, site_validators, stopped)
    except _Abort as err:
        result.error = {"kind": err.kind, "detail": err.detail}
        result.status = ABORTED

    traj.status = result.status
    if writer is not None:
        result.run_dir = str(writer.run_dir)
        writer.write_meta(result.meta(goal, cfg))
        writer.close()
    try:
        session.close()
    except Exception:
        pass
    return result


def _belief_payload(belief: BeliefState) -> dict:
    return {
        "sections": {
            "progress_and_knowledge_check": belief.progress_and_knowledge_check,
            "state_analysis": belief.state_analysis,
            "next_step_guidance": belief.next_step_guidance,
        },
        "active_subgoal": belief.active_subgoal,
        "char_len": belief.char_len,
        "deviation": list(belief.deviation_flag) if belief.deviation_flag else None,
    }


def _final_status(
    result: RunResult,
    goal: Goal,
    site: Any,
    site_validators: Sequence[dict],
    stopped: bool,
) -> str:
    if result.verdict is not None and result.verdict.fired:
        return FAILURE
    final_state = dict(getattr(site, "state_vars", {}) or {})
    if goal.reference_answer is None:
        # nothing to check against; a clean stop counts as done
        return SUCCESS if stopped else FAILURE
    try:
        outcome = evaluate_success(goal, result.answer, final_state, site_validators)
    except SpecMissing as err:
        result.error = {"kind": "SpecMissing", "detail": str(err)}
        return ABORTED
    result.outcome = outcome
    return SUCCESS if outcome.success else FAILURE


# --- adaptation ---------------------------------------------------------------


def adaptation_loop(
    tasks: Sequence[tuple[Goal, Any]],
    kb: KnowledgeBase,
    queue: FailureQueue,
    cfg: RunConfig,
    client_factory: Callable[[], LLMClient],
    *,
    semantic: Optional[SemanticEvaluator] = None,
    tip_provider: Optional[Callable[[dict], Optional[dict]]] = None,
    record_root: Optional[str | Path] = None,
) -> dict:
    """Run tasks, queue fired-trigger failures, inject any tips offered back.

    ``tip_provider`` stands in for the expert: given a queue entry it may
    return a tip document. Valid tips are added to the knowledge base and the
    entry is resolved; invalid ones are reported and the entry stays open.
    """
    if kb.frozen:
        raise Frozen("adaptation requires a mutable knowledge base")
    report: dict = {"v": REPORT_SCHEMA_VERSION, "runs": [], "enqueued": [], "injected": [], "rejected": []}
    for goal, env in tasks:
        run_dir = Path(record_root) / f"{goal.id}-{cfg.ablation_mode}" if record_root else None
        result = run_task(goal, env, kb, cfg, client_factory(), semantic=semantic,
                          record_dir=run_dir)
        entry_id = None
        if result.verdict is not None and result.verdict.fired:
            entry_id = queue.enqueue(
                result.run_id, goal.id, result.verdict,
                run_dir=result.run_dir, answer=result.answer,
            )
            report["enqueued"].append(entry_id)
            if tip_provider is not None:
                _offer_tip(queue, kb, entry_id, tip_provider, report)
        report["runs"].append({
            "run_id": result.run_id,
            "goal_id": goal.id,
            "status": result.status,
            "fired": entry_id is not None,
        })
    report["resolved"] = [e["id"] for e in queue.list(status="resolved")]
    return report


def _offer_tip(
    queue: FailureQueue,
    kb: KnowledgeBase,
    entry_id: str,
    tip_provider: Callable[[dict], Optional[dict]],
    report: dict,
) -> None:
    doc = tip_provider(queue.get(entry_id))
    if doc is None:
        return
    try:
        tip = KnowledgeTip.from_dict(doc)
        kb.add_tip(tip)
    except (InvalidTip, DuplicateId, Frozen, KeyError, TypeError) as err:
        report["rejected"].append({"entry_id": entry_id, "reason": str(err)})
        return
    queue.resolve(entry_id, tip_id=tip.id, note="tip injected during adaptation")
    report["injected"].append(tip.id)


# --- benchmarking -------------------------------------------------------------


def load_suite(suite_dir: str | Path) -> dict:
    """Parse a suite directory: suite.json plus the site files it names."""
    import json

    root = Path(suite_dir)
    doc = json.loads((root / "suite.json").read_text(encoding="utf-8"))
    if doc.get("v") != 1:
        raise ValueError(f"unsupported suite schema version {doc.get('v')!r}")
    tasks = []
    for entry in doc["tasks"]:
        goal = Goal.from_dict(entry["goal"])
        spec = load_site_spec(root / entry["site"])
        tasks.append({"goal": goal, "spec": spec, "domain": entry.get("domain", spec.site_id)})
    return {"name": doc.get("name", root.name), "akb": doc.get("akb"), "tasks": tasks}


def bench(
    suite_dir: str | Path,
    cfg: RunConfig,
    client_factory: Callable[[], LLMClient],
    *,
    protocol: bool = False,
    semantic: Optional[SemanticEvaluator] = None,
    out_dir: Optional[str | Path] = None,
) -> dict:
    """Run every suite task sequentially and aggregate a versioned report."""
    suite = load_suite(suite_dir)
    akb_path = cfg.akb_path or (str(Path(suite_dir) / suite["akb"]) if suite["akb"] else None)
    kb = KnowledgeBase.load(akb_path) if akb_path else KnowledgeBase()
    if protocol and not kb.frozen:
        raise ProtocolViolation("benchmark protocol requires a frozen knowledge base")

    rows = []
    belief_sizes: list[int] = []
    for task in suite["tasks"]:
        goal: Goal = task["goal"]
        site = MockSite(task["spec"])
        rid = f"{goal.id}-{cfg.ablation_mode}"
        run_dir = Path(out_dir) / rid if out_dir else None
        result = run_task(goal, site, kb, cfg, client_factory(), semantic=semantic,
                          record_dir=run_dir, run_id=rid)
        belief_sizes.extend(result.belief_chars)
        rows.append({
            "run_id": result.run_id,
            "goal_id": goal.id,
            "domain": task["domain"],
            "status": result.status,
            "success": result.status == SUCCESS,
            "steps": result.steps,
            "answer": result.answer,
            "detail": result.outcome.detail if result.outcome else "",
        })

    by_domain: dict[str, dict] = {}
    for row in rows:
        d = by_domain.setdefault(row["domain"], {"n": 0, "successes": 0})
        d["n"] += 1
        d["successes"] += int(row["success"])
    for d in by_domain.values():
        d["success_rate"] = round(d["successes"] / d["n"], 4)

    n = len(rows)
    report = {
        "v": REPORT_SCHEMA_VERSION,
        "suite": suite["name"],
        "mode": cfg.ablation_mode,
        "protocol": protocol,
        "n_tasks": n,
        "tasks": rows,
        "by_domain": {k: by_domain[k] for k in sorted(by_domain)},
        "overall": {
            "success_rate": round(sum(r["success"] for r in rows) / n, 4) if n else 0.0,
            "mean_steps": round(statistics.fmean(r["steps"] for r in rows), 4) if n else 0.0,
            "mean_belief_chars": round(statistics.fmean(belief_sizes), 4) if belief_sizes else 0.0,
        },
    }
    return report


def format_report(report: dict) -> str:
    """Human-readable rendering of a bench report."""
    lines = [
        f"suite: {report['suite']}  mode: {report['mode']}"
        + ("  [protocol]" if report.get("protocol") else ""),
        f"tasks: {report['n_tasks']}  "
        f"success rate: {report['overall']['success_rate']:.2%}  "
        f"mean steps: {report['overall']['mean_steps']:.1f}  "
        f"mean belief chars: {report['overall']['mean_belief_chars']:.0f}",
        "",
        f"{'task':<14} {'domain':<10} {'status':<9} {'steps':>5}  answer",
    ]
    for row in report["tasks"]:
        answer = (row["answer"] or "")[:40]
        lines.append(
            f"{row['goal_id']:<14} {row['domain']:<10} {row['status']:<9} {row['steps']:>5}  {answer}"
        )
    lines.append("")
    for domain, d in report["by_domain"].items():
        lines.append(f"{domain:<14} {d['successes']}/{d['n']} ({d['success_rate']:.0%})")
    return "\n".join(lines)


def check_trace_conformance(traj: Trajectory, max_steps: int) -> None:
    """Assert the event log honors the loop's ordering and budget invariants."""
    validate_phase_order(traj.events)
    acts = traj.act_events()
    if len(acts) > max_steps:
        raise ProtocolViolation(f"{len(acts)} act events exceed the {max_steps}-step budget")
