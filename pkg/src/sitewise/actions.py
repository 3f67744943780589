"""Closed action DSL: the agent's action space, its parser/serializer, the
<think>/<action> response envelope, and the deterministic calculator.

The canonical string grammar (shared contract with mock-site specs and stub
scripts):

    action     := name "(" [arg ("," arg)*] ")"
    name       := "click" | "hover" | "type" | "press" | "scroll" | "goto"
                | "go_back" | "go_forward" | "new_tab" | "tab_focus"
                | "tab_close" | "take_note" | "calculate" | "stop"
    arg        := string | number | bool
    string     := '"' (char | escape)* '"'      escape := \\ \" \n \t \r
    bool       := "true" | "false"
    number     := ["-"] digits ["." digits]

All functions here are pure; safe for unrestricted concurrent use.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union


class ActionParseError(Exception):
    """Base for envelope/action parse failures; carries the offending span."""

    def __init__(self, message: str, span: str = ""):
        super().__init__(message)
        self.span = span

    @property
    def kind(self) -> str:
        return type(self).__name__


class MissingActionTag(ActionParseError):
    pass


class MultipleActions(ActionParseError):
    pass


class UnknownActionName(ActionParseError):
    pass


class MalformedArguments(ActionParseError):
    pass


# --- action variants ---------------------------------------------------------


@dataclass(frozen=True)
class Click:
    bid: str


@dataclass(frozen=True)
class Hover:
    bid: str


@dataclass(frozen=True)
class Type:
    bid: str
    text: str
    press_enter: bool = False


@dataclass(frozen=True)
class Press:
    key_combo: str


@dataclass(frozen=True)
class Scroll:
    direction: str
    amount: Optional[float] = None  # None = one viewport


@dataclass(frozen=True)
class GoTo:
    url: str


@dataclass(frozen=True)
class GoBack:
    pass


@dataclass(frozen=True)
class GoForward:
    pass


@dataclass(frozen=True)
class NewTab:
    pass


@dataclass(frozen=True)
class TabFocus:
    index: int


@dataclass(frozen=True)
class TabClose:
    pass


@dataclass(frozen=True)
class TakeNote:
    text: str


@dataclass(frozen=True)
class Calculate:
    expr: str


@dataclass(frozen=True)
class Stop:
    answer: Optional[str] = None


Action = Union[
    Click, Hover, Type, Press, Scroll, GoTo, GoBack, GoForward,
    NewTab, TabFocus, TabClose, TakeNote, Calculate, Stop,
]

SCROLL_DIRECTIONS = ("up", "down", "left", "right")

ACTION_NAMES = (
    "click", "hover", "type", "press", "scroll", "goto", "go_back",
    "go_forward", "new_tab", "tab_focus", "tab_close", "take_note",
    "calculate", "stop",
)

# Actions that reference an element bid and need grounding against marks.
ELEMENT_ACTIONS = (Click, Hover, Type)


def action_name(a: Action) -> str:
    return {
        Click: "click", Hover: "hover", Type: "type", Press: "press",
        Scroll: "scroll", GoTo: "goto", GoBack: "go_back", GoForward: "go_forward",
        NewTab: "new_tab", TabFocus: "tab_focus", TabClose: "tab_close",
        TakeNote: "take_note", Calculate: "calculate", Stop: "stop",
    }[type(a)]


@dataclass(frozen=True)
class ActionDecision:
    """The model's reply: free-text reasoning plus exactly one action."""

    think: str
    action: Action
    raw: str
    retry_count: int = 0


# --- serialization -----------------------------------------------------------

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def _quote(s: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in s) + '"'


def _num(x: float) -> str:
    return repr(x)


def serialize(a: Action) -> str:
    """Canonical action string; injective over the grammar and re-parseable."""
    if isinstance(a, Click):
        return f"click({_quote(a.bid)})"
    if isinstance(a, Hover):
        return f"hover({_quote(a.bid)})"
    if isinstance(a, Type):
        if a.press_enter:
            return f"type({_quote(a.bid)}, {_quote(a.text)}, true)"
        return f"type({_quote(a.bid)}, {_quote(a.text)})"
    if isinstance(a, Press):
        return f"press({_quote(a.key_combo)})"
    if isinstance(a, Scroll):
        if a.amount is None:
            return f"scroll({_quote(a.direction)})"
        return f"scroll({_quote(a.direction)}, {_num(a.amount)})"
    if isinstance(a, GoTo):
        return f"goto({_quote(a.url)})"
    if isinstance(a, GoBack):
        return "go_back()"
    if isinstance(a, GoForward):
        return "go_forward()"
    if isinstance(a, NewTab):
        return "new_tab()"
    if isinstance(a, TabFocus):
        return f"tab_focus({a.index})"
    if isinstance(a, TabClose):
        return "tab_close()"
    if isinstance(a, TakeNote):
        return f"take_note({_quote(a.text)})"
    if isinstance(a, Calculate):
        return f"calculate({_quote(a.expr)})"
    if isinstance(a, Stop):
        if a.answer is None:
            return "stop()"
        return f"stop({_quote(a.answer)})"
    raise TypeError(f"not an Action: {a!r}")


# --- parsing -----------------------------------------------------------------


class _Scanner:
    """Cursor over an action string; raises MalformedArguments with the span."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _fail(self, why: str) -> ActionParseError:
        span = self.text[max(0, self.pos - 10): self.pos + 10]
        return MalformedArguments(f"{why} at offset {self.pos}", span=span)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise self._fail(f"expected {ch!r}")
        self.pos += 1

    def read_name(self) -> str:
        m = re.match(r"[A-Za-z_][A-Za-z0-9_]*", self.text[self.pos:])
        if not m:
            raise self._fail("expected action name")
        self.pos += m.end()
        return m.group(0)

    def read_string(self) -> str:
        self.expect('"')
        out = []
        while True:
            if self.at_end():
                raise self._fail("unterminated string")
            ch = self.text[self.pos]
            self.pos += 1
            if ch == '"':
                return "".join(out)
            if ch == "\\":
                if self.at_end():
                    raise self._fail("dangling escape")
                esc = self.text[self.pos]
                self.pos += 1
                if esc not in _UNESCAPES:
                    raise self._fail(f"unknown escape \\{esc}")
                out.append(_UNESCAPES[esc])
            else:
                out.append(ch)

    def read_arg(self):
        self.skip_ws()
        ch = self.peek()
        if ch == '"':
            return self.read_string()
        m = re.match(r"-?\d+(\.\d+)?", self.text[self.pos:])
        if m:
            self.pos += m.end()
            lit = m.group(0)
            return float(lit) if "." in lit else int(lit)
        m = re.match(r"(true|false)\b", self.text[self.pos:])
        if m:
            self.pos += m.end()
            return m.group(0) == "true"
        raise self._fail("expected string, number or bool argument")


def _parse_call(sc: _Scanner) -> tuple[str, list]:
    sc.skip_ws()
    start = sc.pos
    name = sc.read_name()
    sc.skip_ws()
    if sc.peek() != "(":
        sc.pos = start
        raise MalformedArguments(f"expected '(' after {name!r}", span=sc.text[start:start + 20])
    sc.expect("(")
    args: list = []
    sc.skip_ws()
    if sc.peek() == ")":
        sc.expect(")")
        return name, args
    while True:
        args.append(sc.read_arg())
        sc.skip_ws()
        if sc.peek() == ",":
            sc.expect(",")
            continue
        sc.expect(")")
        return name, args


def _want(args: list, kinds: str, name: str, span: str) -> None:
    # kinds: one char per arg, s=str n=number i=int b=bool; lowercase suffix after '|' optional
    required, _, optional = kinds.partition("|")
    if not (len(required) <= len(args) <= len(required) + len(optional)):
        raise MalformedArguments(
            f"{name} takes {len(required)}"
            + (f"..{len(required) + len(optional)}" if optional else "")
            + f" arguments, got {len(args)}",
            span=span,
        )
    spec = required + optional[: len(args) - len(required)]
    for i, (arg, k) in enumerate(zip(args, spec)):
        ok = {
            "s": isinstance(arg, str),
            "n": isinstance(arg, (int, float)) and not isinstance(arg, bool),
            "i": isinstance(arg, int) and not isinstance(arg, bool),
            "b": isinstance(arg, bool),
        }[k]
        if not ok:
            raise MalformedArguments(f"{name} argument {i + 1} has wrong type", span=span)


def _build(name: str, args: list, span: str) -> Action:
    if name not in ACTION_NAMES:
        raise UnknownActionName(f"unknown action {name!r}", span=span)
    if name == "click":
        _want(args, "s", name, span)
        if not args[0]:
            raise MalformedArguments("click bid must be non-empty", span=span)
        return Click(bid=args[0])
    if name == "hover":
        _want(args, "s", name, span)
        if not args[0]:
            raise MalformedArguments("hover bid must be non-empty", span=span)
        return Hover(bid=args[0])
    if name == "type":
        _want(args, "ss|b", name, span)
        if not args[0]:
            raise MalformedArguments("type bid must be non-empty", span=span)
        return Type(bid=args[0], text=args[1], press_enter=bool(args[2]) if len(args) > 2 else False)
    if name == "press":
        _want(args, "s", name, span)
        if not args[0]:
            raise MalformedArguments("press key combo must be non-empty", span=span)
        return Press(key_combo=args[0])
    if name == "scroll":
        _want(args, "s|n", name, span)
        if args[0] not in SCROLL_DIRECTIONS:
            raise MalformedArguments(f"scroll direction must be one of {SCROLL_DIRECTIONS}", span=span)
        amount = float(args[1]) if len(args) > 1 else None
        return Scroll(direction=args[0], amount=amount)
    if name == "goto":
        _want(args, "s", name, span)
        if not args[0]:
            raise MalformedArguments("goto url must be non-empty", span=span)
        return GoTo(url=args[0])
    if name == "go_back":
        _want(args, "", name, span)
        return GoBack()
    if name == "go_forward":
        _want(args, "", name, span)
        return GoForward()
    if name == "new_tab":
        _want(args, "", name, span)
        return NewTab()
    if name == "tab_focus":
        _want(args, "i", name, span)
        if args[0] < 0:
            raise MalformedArguments("tab_focus index must be >= 0", span=span)
        return TabFocus(index=args[0])
    if name == "tab_close":
        _want(args, "", name, span)
        return TabClose()
    if name == "take_note":
        _want(args, "s", name, span)
        return TakeNote(text=args[0])
    if name == "calculate":
        _want(args, "s", name, span)
        if not args[0].strip():
            raise MalformedArguments("calculate expression must be non-empty", span=span)
        return Calculate(expr=args[0])
    if name == "stop":
        _want(args, "|s", name, span)
        return Stop(answer=args[0] if args else None)
    raise AssertionError(name)


def parse_action(text: str) -> Action:
    """Parse exactly one canonical action string."""
    sc = _Scanner(text)
    name, args = _parse_call(sc)
    action = _build(name, args, span=text.strip()[:60])
    sc.skip_ws()
    if not sc.at_end():
        rest = sc.text[sc.pos:]
        if re.match(r"[A-Za-z_][A-Za-z0-9_]*\s*\(", rest):
            raise MultipleActions("more than one action in input", span=rest[:60])
        raise MalformedArguments(f"trailing content {rest[:30]!r}", span=rest[:60])
    return action


_ACTION_TAG = re.compile(r"<action>(.*?)</action>", re.DOTALL)
_THINK_TAG = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_FENCE = re.compile(r"^```[a-zA-Z0-9_-]*\n(.*?)\n?```$", re.DOTALL)


def parse_envelope(raw: str) -> ActionDecision:
    """Extract the <think> body and the single action from a model reply."""
    bodies = _ACTION_TAG.findall(raw)
    if not bodies:
        raise MissingActionTag("no <action> tag in reply", span=raw[:80])
    if len(bodies) > 1:
        raise MultipleActions(f"{len(bodies)} <action> tags in reply", span=raw[:80])
    think_m = _THINK_TAG.search(raw)
    think = think_m.group(1).strip() if think_m else ""
    body = bodies[0].strip()
    fence = _FENCE.match(body)
    if fence:
        body = fence.group(1).strip()
    if not body:
        raise MalformedArguments("empty <action> tag", span=raw[:80])
    action = parse_action(body)
    return ActionDecision(think=think, action=action, raw=raw)


# --- calculator --------------------------------------------------------------


class CalcError(Exception):
    pass


class ParseError(CalcError):
    pass


class DivisionByZero(CalcError):
    pass


_CALC_NORMALIZE = str.maketrans({"×": "*", "÷": "/", "−": "-"})


def eval_calculate(expr: str) -> float:
    """Evaluate + - * / with parentheses, unary minus and decimal literals.

    Standard precedence, left association. Deterministic: same expression,
    same float result.
    """
    if not expr or not expr.strip():
        raise ParseError("empty expression")
    text = expr.translate(_CALC_NORMALIZE)
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos] in " \t":
            pos += 1

    def parse_expr() -> float:
        nonlocal pos
        value = parse_term()
        while True:
            skip_ws()
            if pos < len(text) and text[pos] in "+-":
                op = text[pos]
                pos += 1
                rhs = parse_term()
                value = value + rhs if op == "+" else value - rhs
            else:
                return value

    def parse_term() -> float:
        nonlocal pos
        value = parse_factor()
        while True:
            skip_ws()
            if pos < len(text) and text[pos] in "*/":
                op = text[pos]
                pos += 1
                rhs = parse_factor()
                if op == "*":
                    value = value * rhs
                else:
                    if rhs == 0:
                        raise DivisionByZero(expr)
                    value = value / rhs
            else:
                return value

    def parse_factor() -> float:
        nonlocal pos
        skip_ws()
        if pos >= len(text):
            raise ParseError(f"unexpected end of expression in {expr!r}")
        ch = text[pos]
        if ch == "-":
            pos += 1
            return -parse_factor()
        if ch == "(":
            pos += 1
            value = parse_expr()
            skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise ParseError(f"missing ')' in {expr!r}")
            pos += 1
            return value
        m = re.match(r"\d+(\.\d+)?|\.\d+", text[pos:])
        if not m:
            raise ParseError(f"unexpected {text[pos:pos + 8]!r} in {expr!r}")
        pos += m.end()
        return float(m.group(0))

    result = parse_expr()
    skip_ws()
    if pos != len(text):
        raise ParseError(f"trailing {text[pos:pos + 8]!r} in {expr!r}")
    return result


def format_number(x: float) -> str:
    """Render a calculator result, trimming a trailing .0 on integral values."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)
