"""Session watchdog: transparent recovery from lost or hung sessions.

On a recoverable fault the wrapper reopens a fresh session, re-navigates to
the last known URL, replays the notes ledger, then retries the failed call.
A success resets the consecutive-fault counter; more than `retries`
consecutive faults end the run.
"""

from __future__ import annotations

from typing import Callable, Optional

from ..actions import Action, Calculate, GoTo, TakeNote
from ..model import Observation
from .base import EnvResult, EnvTimeout, Session, SessionLost

RECOVERABLE = (SessionLost, EnvTimeout)

DEFAULT_RETRIES = 2


class Unrecoverable(Exception):
    """Retry budget exhausted; the run must abort."""


class Watchdog:
    def __init__(self, open_session: Callable[[], Session], retries: int = DEFAULT_RETRIES):
        self._open = open_session
        self.retries = retries
        self.session: Session = open_session()
        self.consecutive_faults = 0
        self.recoveries = 0
        self._last_url: Optional[str] = None
        self._note_ledger: list[Action] = []

    @property
    def current_url(self) -> str:
        return self.session.current_url

    def observe(self, step: int = 0) -> Observation:
        return self._guarded(lambda s: s.observe(step))

    def step(self, action: Action) -> EnvResult:
        result = self._guarded(lambda s: s.step(action))
        if isinstance(action, (TakeNote, Calculate)):
            self._note_ledger.append(action)
        return result

    def close(self) -> None:
        self.session.close()

    # --- recovery ------------------------------------------------------------

    def _guarded(self, op: Callable[[Session], object]):
        while True:
            try:
                out = op(self.session)
            except RECOVERABLE as exc:
                self.consecutive_faults += 1
                if self.consecutive_faults > self.retries:
                    raise Unrecoverable(
                        f"{self.consecutive_faults} consecutive session faults: {exc}"
                    ) from exc
                self._recover()
                continue
            self.consecutive_faults = 0
            self._last_url = self.session.current_url
            return out

    def _recover(self) -> None:
        self.recoveries += 1
        try:
            self.session.close()
        except Exception:
            pass
        try:
            self.session = self._open()
            if self._last_url is not None:
                self.session.step(GoTo(self._last_url))
            for note_action in self._note_ledger:
                self.session.step(note_action)
        except RECOVERABLE:
            # the retry of the original call will fault again and re-enter here
            pass


class FaultPlan:
    """Schedules SessionLost faults by global call index (1-based), across
    every session the plan wraps. One plan per test scenario."""

    def __init__(self, fail_calls=(), exc_type=SessionLost):
        self.fail_calls = set(fail_calls)
        self.exc_type = exc_type
        self.calls = 0
        self.injected = 0

    def wrap(self, session: Session) -> "FaultInjector":
        return FaultInjector(session, self)

    def tick(self) -> None:
        self.calls += 1
        if self.calls in self.fail_calls:
            self.injected += 1
            raise self.exc_type(f"injected fault at call {self.calls}")


class FaultInjector:
    """Pass-through session that faults on the plan's schedule."""

    def __init__(self, inner: Session, plan: FaultPlan):
        self.inner = inner
        self.plan = plan

    @property
    def current_url(self) -> str:
        return self.inner.current_url

    def observe(self, step: int = 0) -> Observation:
        self.plan.tick()
        return self.inner.observe(step)

    def step(self, action: Action) -> EnvResult:
        self.plan.tick()
        return self.inner.step(action)

    def close(self) -> None:
        self.inner.close()
