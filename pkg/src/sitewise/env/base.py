"""Environment contract shared by the mock simulator and the browser adapter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol as TypingProtocol

from ..actions import Action
from ..model import Observation

INEFFECTIVE = "ineffective action"


class SessionLost(Exception):
    """The session is gone (closed, crashed, disconnected); watchdog-recoverable."""


class EnvTimeout(Exception):
    """An environment operation timed out; watchdog-recoverable."""


class NavigationError(Exception):
    """Navigation target could not be resolved."""


class InvalidBid(Exception):
    """Element action referenced a bid the current page does not have."""

    def __init__(self, bid: str):
        super().__init__(f"no element with bid {bid!r} on the current page")
        self.bid = bid


@dataclass(frozen=True)
class EnvResult:
    """Outcome of one environment step.

    `note` carries commentary worth surfacing to the agent (no-op reasons,
    calculator output); `value` carries a Calculate result.
    """

    ok: bool = True
    note: str = ""
    value: Optional[float] = None

    def to_payload(self) -> dict:
        d: dict = {"ok": self.ok}
        if self.note:
            d["note"] = self.note
        if self.value is not None:
            d["value"] = self.value
        return d


class Session(TypingProtocol):
    @property
    def current_url(self) -> str: ...

    def observe(self, step: int = 0) -> Observation: ...

    def step(self, action: Action) -> EnvResult: ...

    def close(self) -> None: ...
