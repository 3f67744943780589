"""Chrome DevTools Protocol adapter: the same Session contract against a real
browser page target.

The transport is any object with send(text)/recv() -> text/close(); the
default connects a websocket (optional dependency, install extra "browser").
Commands block until the response with the matching id arrives; event
notifications in between are discarded. One adapter drives one page target.
"""

from __future__ import annotations

import json
from typing import Optional, Protocol as TypingProtocol

from ..actions import (
    Action,
    Calculate,
    CalcError,
    Click,
    GoBack,
    GoForward,
    GoTo,
    Hover,
    Press,
    Scroll,
    Stop,
    TakeNote,
    Type,
    eval_calculate,
    format_number,
)
from ..model import Mark, Observation
from .base import EnvResult, EnvTimeout, InvalidBid, NavigationError, SessionLost

INTERACTIVE_ROLES = {
    "button", "link", "textbox", "searchbox", "combobox", "checkbox",
    "radio", "menuitem", "tab", "switch", "slider", "spinbutton",
}


class Transport(TypingProtocol):
    def send(self, text: str) -> None: ...

    def recv(self) -> str: ...

    def close(self) -> None: ...


def _websocket_transport(ws_url: str, timeout: float):
    try:
        from websockets.sync.client import connect
    except ImportError as exc:  # pragma: no cover - exercised only without the extra
        raise RuntimeError(
            "browser adapter needs the websockets package; install the 'browser' extra"
        ) from exc
    ws = connect(ws_url, open_timeout=timeout, close_timeout=timeout, max_size=None)

    class _Ws:
        def send(self, text: str) -> None:
            ws.send(text)

        def recv(self) -> str:
            return ws.recv(timeout=timeout)

        def close(self) -> None:
            ws.close()

    return _Ws()


class CdpSession:
    def __init__(self, transport: Transport, timeout: float = 30.0):
        self.transport = transport
        self.timeout = timeout
        self._next_id = 1
        self._url = "about:blank"
        self._ax_nodes: list[dict] = []
        self.notes: list[str] = []
        self.closed = False
        self._cmd("Page.enable")
        self._cmd("Accessibility.enable")

    @classmethod
    def open(cls, ws_url: str, timeout: float = 30.0) -> "CdpSession":
        return cls(_websocket_transport(ws_url, timeout), timeout=timeout)

    @property
    def current_url(self) -> str:
        return self._url

    # --- protocol plumbing ---------------------------------------------------

    def _cmd(self, method: str, params: Optional[dict] = None) -> dict:
        if self.closed:
            raise SessionLost("adapter is closed")
        msg_id = self._next_id
        self._next_id += 1
        try:
            self.transport.send(json.dumps({"id": msg_id, "method": method, "params": params or {}}))
            while True:
                reply = json.loads(self.transport.recv())
                if reply.get("id") == msg_id:
                    break
                # events and stale replies are dropped
        except (TimeoutError, EnvTimeout):
            raise EnvTimeout(f"no reply to {method} within {self.timeout}s")
        except Exception as exc:
            raise SessionLost(f"transport failed during {method}: {exc}") from exc
        if "error" in reply:
            raise NavigationError(f"{method}: {reply['error'].get('message', reply['error'])}")
        return reply.get("result", {})

    # --- session contract ----------------------------------------------------

    def observe(self, step: int = 0) -> Observation:
        entries = self._cmd("Page.getNavigationHistory")
        idx = entries.get("currentIndex", 0)
        if entries.get("entries"):
            self._url = entries["entries"][idx]["url"]
        tree = self._cmd("Accessibility.getFullAXTree")
        self._ax_nodes = tree.get("nodes", [])
        lines = []
        marks = []
        for node in self._ax_nodes:
            if node.get("ignored"):
                continue
            role = (node.get("role") or {}).get("value", "")
            name = (node.get("name") or {}).get("value", "")
            node_id = node.get("nodeId", "")
            if role in INTERACTIVE_ROLES:
                lines.append(f"[{node_id}] {role} '{name}'")
                marks.append(Mark(bid=str(node_id), role=role, name=name))
            elif name:
                lines.append(f"{role} '{name}'")
        return Observation(step=step, url=self._url, ax_tree="\n".join(lines) or "document", marks=tuple(marks))

    def _backend_id(self, bid: str) -> int:
        for node in self._ax_nodes:
            if str(node.get("nodeId")) == bid and "backendDOMNodeId" in node:
                return node["backendDOMNodeId"]
        raise InvalidBid(bid)

    def _call_on(self, bid: str, declaration: str, args: Optional[list] = None) -> None:
        backend = self._backend_id(bid)
        obj = self._cmd("DOM.resolveNode", {"backendNodeId": backend})
        object_id = obj["object"]["objectId"]
        self._cmd(
            "Runtime.callFunctionOn",
            {
                "objectId": object_id,
                "functionDeclaration": declaration,
                "arguments": args or [],
            },
        )

    def step(self, action: Action) -> EnvResult:
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

        if isinstance(action, GoTo):
            self._cmd("Page.navigate", {"url": action.url})
            self._url = action.url
            return EnvResult(ok=True)
        if isinstance(action, GoBack):
            hist = self._cmd("Page.getNavigationHistory")
            idx = hist.get("currentIndex", 0)
            if idx <= 0:
                return EnvResult(ok=True, note="ineffective action: at history root")
            self._cmd("Page.navigateToHistoryEntry", {"entryId": hist["entries"][idx - 1]["id"]})
            return EnvResult(ok=True)
        if isinstance(action, GoForward):
            hist = self._cmd("Page.getNavigationHistory")
            idx = hist.get("currentIndex", 0)
            entries = hist.get("entries", [])
            if idx >= len(entries) - 1:
                return EnvResult(ok=True, note="ineffective action: at history tip")
            self._cmd("Page.navigateToHistoryEntry", {"entryId": entries[idx + 1]["id"]})
            return EnvResult(ok=True)
        if isinstance(action, Click):
            self._call_on(action.bid, "function() { this.click(); }")
            return EnvResult(ok=True)
        if isinstance(action, Hover):
            self._call_on(
                action.bid,
                "function() { this.dispatchEvent(new MouseEvent('mouseover', {bubbles: true})); }",
            )
            return EnvResult(ok=True)
        if isinstance(action, Type):
            decl = (
                "function(text, enter) {"
                " this.focus(); this.value = text;"
                " this.dispatchEvent(new Event('input', {bubbles: true}));"
                " this.dispatchEvent(new Event('change', {bubbles: true}));"
                " if (enter) this.dispatchEvent(new KeyboardEvent('keydown',"
                " {key: 'Enter', bubbles: true}));"
                " }"
            )
            self._call_on(
                action.bid, decl, [{"value": action.text}, {"value": action.press_enter}]
            )
            return EnvResult(ok=True)
        if isinstance(action, Press):
            *mods, key = action.key_combo.split("+")
            modifier_bits = sum(
                {"alt": 1, "control": 2, "ctrl": 2, "meta": 4, "shift": 8}.get(m.lower(), 0)
                for m in mods
            )
            for kind in ("rawKeyDown", "keyUp"):
                self._cmd(
                    "Input.dispatchKeyEvent",
                    {"type": kind, "key": key, "modifiers": modifier_bits},
                )
            return EnvResult(ok=True)
        if isinstance(action, Scroll):
            amount = action.amount if action.amount is not None else 600.0
            dx, dy = {
                "up": (0.0, -amount), "down": (0.0, amount),
                "left": (-amount, 0.0), "right": (amount, 0.0),
            }[action.direction]
            self._cmd(
                "Runtime.evaluate",
                {"expression": f"window.scrollBy({format_number(dx)}, {format_number(dy)})"},
            )
            return EnvResult(ok=True)
        # NewTab/TabFocus/TabClose need target management; one adapter = one target
        return EnvResult(ok=True, note="ineffective action: unsupported by this adapter")

    def screenshot(self) -> bytes:
        import base64

        result = self._cmd("Page.captureScreenshot", {"format": "png"})
        return base64.b64decode(result["data"])

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            try:
                self.transport.close()
            except Exception:
                pass
