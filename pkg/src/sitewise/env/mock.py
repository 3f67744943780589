"""Deterministic in-memory site simulator.

State splits in two: MockSite holds the server side (state_vars persist
across sessions, the way a real site's database survives a browser crash),
MockSession holds the browser side (tabs, per-tab history, the notes ledger).
The watchdog reopens sessions; it never resets the site.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..actions import (
    Action,
    Calculate,
    CalcError,
    Click,
    GoBack,
    GoForward,
    GoTo,
    Hover,
    NewTab,
    Press,
    Scroll,
    Stop,
    TabClose,
    TabFocus,
    TakeNote,
    Type,
    eval_calculate,
    format_number,
)
from ..model import Mark, Observation
from ..patterns import action_matches
from .base import INEFFECTIVE, EnvResult, InvalidBid, SessionLost
from .sitespec import Element, Page, SiteSpec, fill, route

BLANK_URL = "about:blank"


class MockSite:
    """One simulated site; sessions share its state_vars."""

    def __init__(self, spec: SiteSpec):
        self.spec = spec
        self.state_vars: dict = dict(spec.state_vars)

    def open(self) -> "MockSession":
        return MockSession(self)

    def reset(self) -> None:
        self.state_vars = dict(self.spec.state_vars)


@dataclass
class _Tab:
    history: list[tuple[Optional[str], str]]  # (page_id, concrete url); None = blank
    pos: int = 0

    def current(self) -> tuple[Optional[str], str]:
        return self.history[self.pos]

    def push(self, entry: tuple[Optional[str], str]) -> None:
        del self.history[self.pos + 1 :]
        self.history.append(entry)
        self.pos += 1


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
    raise ValueError(f"unknown op {op!r}")


class MockSession:
    def __init__(self, site: MockSite):
        self.site = site
        spec = site.spec
        initial = spec.pages[spec.initial_page]
        first_url = fill(initial.url_template, site.state_vars)
        self.tabs: list[_Tab] = [_Tab(history=[(spec.initial_page, first_url)])]
        self.active = 0
        self.notes: list[str] = []
        self.closed = False

    # --- views ---------------------------------------------------------------

    @property
    def current_url(self) -> str:
        return self.tabs[self.active].current()[1]

    def _current_page(self) -> Optional[Page]:
        page_id, _ = self.tabs[self.active].current()
        return self.site.spec.pages[page_id] if page_id is not None else None

    def _visible_elements(self, page: Page) -> list[Element]:
        sv = self.site.state_vars
        out = []
        for el in page.elements:
            if el.when is not None and not _check(sv.get(el.when["var"]), el.when["op"], el.when["value"]):
                continue
            out.append(el)
        return out

    def observe(self, step: int = 0) -> Observation:
        if self.closed:
            raise SessionLost("session is closed")
        page = self._current_page()
        url = self.current_url
        if page is None:
            return Observation(step=step, url=url, ax_tree="document", marks=())
        sv = self.site.state_vars
        lines = [f"RootWebArea '{fill(page.title, sv)}'"]
        marks = []
        for el in self._visible_elements(page):
            name = fill(el.name, sv)
            line = f"  [{el.bid}] {el.role} '{name}'"
            text = fill(el.text, sv)
            if text:
                line += f" {text}"
            lines.append(line)
            marks.append(Mark(bid=el.bid, role=el.role, name=name))
        return Observation(step=step, url=url, ax_tree="\n".join(lines), marks=tuple(marks))

    # --- stepping ------------------------------------------------------------

    def step(self, action: Action) -> EnvResult:
        if self.closed:
            raise SessionLost("session is closed")

        # environment-neutral actions never touch page state
        if isinstance(action, TakeNote):
            self.notes.append(action.text)
            return EnvResult(ok=True, note="note recorded")
        if isinstance(action, Calculate):
            try:
                value = eval_calculate(action.expr)
            except CalcError as exc:
                return EnvResult(ok=False, note=f"calculation failed: {exc}")
            note = f"{action.expr} = {format_number(value)}"
            self.notes.append(note)
            return EnvResult(ok=True, note=note, value=value)
        if isinstance(action, Stop):
            return EnvResult(ok=True, note="session ended")

        if isinstance(action, NewTab):
            self.tabs.append(_Tab(history=[(None, BLANK_URL)]))
            self.active = len(self.tabs) - 1
            return EnvResult(ok=True)
        if isinstance(action, TabFocus):
            if 0 <= action.index < len(self.tabs):
                self.active = action.index
                return EnvResult(ok=True)
            return EnvResult(ok=True, note=f"{INEFFECTIVE}: no tab {action.index}")
        if isinstance(action, TabClose):
            if len(self.tabs) == 1:
                return EnvResult(ok=True, note=f"{INEFFECTIVE}: last tab stays open")
            del self.tabs[self.active]
            self.active = min(self.active, len(self.tabs) - 1)
            return EnvResult(ok=True)
        if isinstance(action, GoBack):
            tab = self.tabs[self.active]
            if tab.pos == 0:
                return EnvResult(ok=True, note=f"{INEFFECTIVE}: at history root")
            tab.pos -= 1
            return EnvResult(ok=True)
        if isinstance(action, GoForward):
            tab = self.tabs[self.active]
            if tab.pos == len(tab.history) - 1:
                return EnvResult(ok=True, note=f"{INEFFECTIVE}: at history tip")
            tab.pos += 1
            return EnvResult(ok=True)

        page = self._current_page()

        if isinstance(action, (Click, Hover, Type)):
            visible = {el.bid for el in self._visible_elements(page)} if page else set()
            if action.bid not in visible:
                raise InvalidBid(action.bid)

        if page is not None:
            for tr in page.transitions:
                if action_matches(tr.on, action):
                    self._apply_effects(tr.effects, action)
                    if tr.to is not None:
                        target = self.site.spec.pages[tr.to]
                        url = fill(target.url_template, self.site.state_vars)
                        self.tabs[self.active].push((tr.to, url))
                    return EnvResult(ok=True)

        if isinstance(action, GoTo):
            return self._goto(action.url)

        return EnvResult(ok=True, note=INEFFECTIVE)

    def _goto(self, url: str) -> EnvResult:
        spec = self.site.spec
        hit = route(spec, url)
        if hit is not None:
            page_id, captured = hit
            # captured placeholders land in state_vars under their own names
            self.site.state_vars.update(captured)
            self.tabs[self.active].push((page_id, url))
            return EnvResult(ok=True)
        if spec.error_page is not None:
            self.tabs[self.active].push((spec.error_page, url))
            return EnvResult(ok=True, note=f"no page at {url}")
        return EnvResult(ok=True, note=f"{INEFFECTIVE}: no page at {url}")

    def _apply_effects(self, effects: dict, action: Action) -> None:
        sv = self.site.state_vars
        for var, value in effects.items():
            if value == "$text" and isinstance(action, Type):
                sv[var] = action.text
            elif value == "$url" and isinstance(action, GoTo):
                sv[var] = action.url
            elif isinstance(value, dict) and set(value) == {"inc"}:
                sv[var] = sv.get(var, 0) + value["inc"]
            else:
                sv[var] = value

    def close(self) -> None:
        self.closed = True
