"""Core domain types: goals, observations, the trajectory event log and run configuration.

Every other module builds on these. Trajectories are append-only and persisted as
line-delimited JSON records, one event per line, so a crashed session leaves a
readable prefix behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional

TRAJECTORY_SCHEMA_VERSION = 1

# Phases of one loop iteration, in the only order they may appear within a step.
PHASES = ("observe", "retrieve", "summarize", "act", "env_step", "trigger")
PHASE_RANK = {name: i for i, name in enumerate(PHASES)}


class OrderViolation(Exception):
    """Event does not follow the (step, phase) ordering of the trajectory."""


class Terminal(Exception):
    """Trajectory is no longer running; nothing may be appended."""


class PayloadMismatch(Exception):
    """Event payload kind does not match its phase."""


def fingerprint(url: str, ax_tree: str) -> str:
    """Deterministic digest of a page as (url, ax_tree); stable across processes.

    Length-prefixed encoding keeps ("ab", "c") distinct from ("a", "bc").
    """
    h = hashlib.sha256()
    for part in (url, ax_tree):
        raw = part.encode("utf-8")
        h.update(str(len(raw)).encode("ascii"))
        h.update(b":")
        h.update(raw)
    return h.hexdigest()


def truncate_ax_tree(ax_tree: str, max_chars: int) -> str:
    """Cap an accessibility-tree rendering, keeping the head and marking the cut."""
    if max_chars <= 0 or len(ax_tree) <= max_chars:
        return ax_tree
    marker = "\n[... truncated ...]"
    keep = max(0, max_chars - len(marker))
    return ax_tree[:keep] + marker


@dataclass(frozen=True)
class Goal:
    """A user task: natural-language instruction plus optional evaluation spec."""

    id: str
    instruction: str
    site_hint: Optional[str] = None
    reference_answer: Optional[dict] = None  # eval spec, see env.evaluate

    def __post_init__(self):
        if not self.instruction:
            raise ValueError("goal instruction must be non-empty")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"id": self.id, "instruction": self.instruction}
        if self.site_hint is not None:
            d["site_hint"] = self.site_hint
        if self.reference_answer is not None:
            d["reference_answer"] = self.reference_answer
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Goal":
        return cls(
            id=d["id"],
            instruction=d["instruction"],
            site_hint=d.get("site_hint"),
            reference_answer=d.get("reference_answer"),
        )


@dataclass(frozen=True)
class Mark:
    """One interactive element annotation (set-of-marks entry)."""

    bid: str
    role: str
    name: str
    enabled: bool = True

    def to_dict(self) -> dict:
        return {"bid": self.bid, "role": self.role, "name": self.name, "enabled": self.enabled}

    @classmethod
    def from_dict(cls, d: dict) -> "Mark":
        return cls(bid=d["bid"], role=d["role"], name=d["name"], enabled=d.get("enabled", True))


@dataclass(frozen=True)
class Observation:
    """One snapshot of the environment at a step."""

    step: int
    url: str
    ax_tree: str
    marks: tuple[Mark, ...] = ()
    screenshot_ref: Optional[str] = None
    page_fingerprint: str = ""

    def __post_init__(self):
        if self.step < 0:
            raise ValueError("step must be non-negative")
        bids = [m.bid for m in self.marks]
        if len(bids) != len(set(bids)):
            raise ValueError("mark bids must be unique per observation")
        if not self.page_fingerprint:
            object.__setattr__(self, "page_fingerprint", fingerprint(self.url, self.ax_tree))

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "url": self.url,
            "ax_tree": self.ax_tree,
            "marks": [m.to_dict() for m in self.marks],
            "screenshot_ref": self.screenshot_ref,
            "page_fingerprint": self.page_fingerprint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Observation":
        return cls(
            step=d["step"],
            url=d["url"],
            ax_tree=d["ax_tree"],
            marks=tuple(Mark.from_dict(m) for m in d.get("marks", [])),
            screenshot_ref=d.get("screenshot_ref"),
            page_fingerprint=d.get("page_fingerprint", ""),
        )


@dataclass(frozen=True)
class TraceEvent:
    """One trajectory record; payload shape is phase-specific."""

    step: int
    phase: str
    payload: dict
    ts: str = ""

    def __post_init__(self):
        if self.phase not in PHASE_RANK:
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.step < 0:
            raise ValueError("step must be non-negative")
        if not self.ts:
            object.__setattr__(self, "ts", now_iso())

    def to_dict(self) -> dict:
        return {
            "v": TRAJECTORY_SCHEMA_VERSION,
            "step": self.step,
            "phase": self.phase,
            "ts": self.ts,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEvent":
        return cls(step=d["step"], phase=d["phase"], payload=d["payload"], ts=d["ts"])


def now_iso() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()) + f".{int(time.time() * 1000) % 1000:03d}Z"


RUNNING = "running"
SUCCESS = "success"
FAILURE = "failure"
ABORTED = "aborted"
STATUSES = (RUNNING, SUCCESS, FAILURE, ABORTED)

# Which payload keys identify the payload kind for each phase. A payload must
# carry the marker key of its phase; this is what ties event shape to phase.
_PHASE_PAYLOAD_MARKERS = {
    "observe": "page_fingerprint",
    "retrieve": "items",
    "summarize": "sections",
    "act": "decision",
    "env_step": "ok",
    "trigger": "fired",
}


@dataclass
class Trajectory:
    """Append-only event log of one session."""

    goal_id: str
    events: list[TraceEvent] = field(default_factory=list)
    status: str = RUNNING

    def last_key(self) -> Optional[tuple[int, int]]:
        if not self.events:
            return None
        ev = self.events[-1]
        return (ev.step, PHASE_RANK[ev.phase])

    def append(self, ev: TraceEvent) -> None:
        append_event(self, ev)

    def act_events(self) -> list[TraceEvent]:
        return [e for e in self.events if e.phase == "act"]

    def events_for_step(self, step: int) -> list[TraceEvent]:
        return [e for e in self.events if e.step == step]


def append_event(traj: Trajectory, ev: TraceEvent) -> Trajectory:
    """Append one event, enforcing running status, phase/payload match and ordering."""
    if traj.status != RUNNING:
        raise Terminal(f"trajectory status is {traj.status}, not running")
    marker = _PHASE_PAYLOAD_MARKERS[ev.phase]
    if marker not in ev.payload:
        raise PayloadMismatch(f"payload for phase {ev.phase!r} lacks key {marker!r}")
    key = (ev.step, PHASE_RANK[ev.phase])
    last = traj.last_key()
    if last is not None and key <= last:
        raise OrderViolation(f"event {key} does not follow {last}")
    traj.events.append(ev)
    return traj


def validate_phase_order(events: Iterable[TraceEvent]) -> None:
    """Raise OrderViolation unless events are strictly ordered by (step, phase rank)."""
    last: Optional[tuple[int, int]] = None
    for ev in events:
        key = (ev.step, PHASE_RANK[ev.phase])
        if last is not None and key <= last:
            raise OrderViolation(f"event {key} does not follow {last}")
        last = key


@dataclass
class RunConfig:
    """Knobs for one session or bench run."""

    max_steps: int = 30
    belief_budget_chars: int = 4096
    akb_path: Optional[str] = None
    llm_endpoint: Optional[dict] = None  # {"url":..., "api_key":..., "model":...}
    ablation_mode: str = "full"  # full | no_knowledge | no_summarizer | vanilla
    retrieve_limit: int = 5
    ax_tree_max_chars: int = 20000  # not paper-specified; tail truncation past this
    parse_retries: int = 2
    history_window: int = 5  # raw-history window for the no_summarizer ablation
    loop_k: int = 3
    parse_m: int = 2
    watchdog_retries: int = 2
    error_markers: tuple[str, ...] = ("404 Not Found", "500 Internal Server Error", "Something went wrong")

    MODES = ("full", "no_knowledge", "no_summarizer", "vanilla")

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.belief_budget_chars < 512:
            raise ValueError("belief_budget_chars must be >= 512")
        if self.ablation_mode not in self.MODES:
            raise ValueError(f"unknown ablation_mode {self.ablation_mode!r}")

    @property
    def knowledge_enabled(self) -> bool:
        return self.ablation_mode in ("full", "no_summarizer")

    @property
    def summarizer_enabled(self) -> bool:
        return self.ablation_mode in ("full", "no_knowledge")

    def with_mode(self, mode: str) -> "RunConfig":
        return replace(self, ablation_mode=mode)


# --- persistence -------------------------------------------------------------

TRAJECTORY_FILENAME = "trajectory.jsonl"
META_FILENAME = "meta.json"
SCREENSHOT_DIRNAME = "screenshots"


class TrajectoryWriter:
    """Incremental line-per-event writer, flushed on every append."""

    def __init__(self, run_dir: str | Path):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.run_dir / TRAJECTORY_FILENAME, "a", encoding="utf-8")

    def write_event(self, ev: TraceEvent) -> None:
        self._fh.write(json.dumps(ev.to_dict(), ensure_ascii=False) + "\n")
        self._fh.flush()

    def write_meta(self, meta: dict) -> None:
        atomic_write_json(self.run_dir / META_FILENAME, meta)

    def store_screenshot(self, blob: bytes) -> str:
        """Content-address a screenshot blob beside the trajectory; returns its hash."""
        digest = hashlib.sha256(blob).hexdigest()
        shot_dir = self.run_dir / SCREENSHOT_DIRNAME
        shot_dir.mkdir(exist_ok=True)
        path = shot_dir / f"{digest}.png"
        if not path.exists():
            path.write_bytes(blob)
        return digest

    def close(self) -> None:
        self._fh.close()


def atomic_write_json(path: str | Path, doc: dict) -> None:
    """Write a JSON document atomically via temp-file-and-rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_trajectory(run_dir: str | Path, goal_id: str = "") -> Trajectory:
    """Rebuild a Trajectory from a persisted run directory (read-only snapshot)."""
    run_dir = Path(run_dir)
    meta = {}
    meta_path = run_dir / META_FILENAME
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    traj = Trajectory(goal_id=goal_id or meta.get("goal", {}).get("id", ""))
    with open(run_dir / TRAJECTORY_FILENAME, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            traj.events.append(TraceEvent.from_dict(json.loads(line)))
    traj.status = meta.get("status", RUNNING)
    return traj


def serialize_events(events: Iterable[TraceEvent]) -> str:
    return "".join(json.dumps(ev.to_dict(), ensure_ascii=False) + "\n" for ev in events)
