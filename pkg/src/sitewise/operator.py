"""Prompt assembly and action selection for one loop step.

The prompt frame lives in data/prompts/operator_v1.txt as a versioned text
asset; this module fills its slots and polices the reply. Parse problems get
a bounded number of repair turns, grounding problems do not: an action naming
a bid the page does not show is wrong regardless of formatting.
"""

from __future__ import annotations

from dataclasses import replace
from string import Template
from typing import Optional, Sequence, Union

from . import DATA_DIR
from .actions import (
    ELEMENT_ACTIONS,
    ActionDecision,
    ActionParseError,
    parse_envelope,
    serialize,
)
from .akb.retrieval import RetrievedKnowledge
from .llm.gateway import Completion, LLMClient, Message
from .model import Goal, Observation
from .summarizer import BeliefState, render as render_belief

DEFAULT_PARSE_RETRIES = 2

NO_KNOWLEDGE_MARKER = "(no site guidance retrieved for this step)"

# Quoted back at the model verbatim when a reply fails to parse.
FORMAT_RULES = """Output format:
<think>
Work through the page state and your plan here, step by step.
</think>
<action>
exactly_one_action("like this")
</action>

Formatting rules:
- Put all reasoning inside the <think> tag.
- The <action> tag must contain exactly ONE action call and nothing else.
- Use only actions from the action space, with double-quoted string arguments.
- Refer to page elements only by the bid shown in brackets in the page state."""

ACTION_SPACE = """click(bid) - click the element with this bid
hover(bid) - hover over the element
type(bid, text) - clear the field, then type text; type(bid, text, true) also presses Enter
press(combo) - press a key combination, e.g. "Control+a"
scroll(dx, dy) - scroll the page by pixel offsets
goto(url) - navigate the current tab to url
go_back() - go back in tab history
go_forward() - go forward in tab history
new_tab() - open a blank tab and focus it
tab_focus(index) - focus the tab at this index, 0-based
tab_close() - close the current tab
take_note(text) - save text to the progress notes
calculate(expression) - evaluate + - * / arithmetic; the result lands in the notes
stop(answer) - finish the task and report answer to the user"""


class ParseFailure(Exception):
    """Model never produced a parseable single-action reply within budget."""

    def __init__(self, message: str, span: str = "", attempts: int = 0):
        super().__init__(message)
        self.span = span
        self.attempts = attempts


class GroundingFailure(Exception):
    """Action references an element bid absent from the observation."""

    def __init__(self, bid: str, action_text: str):
        super().__init__(f"bid {bid!r} is not on the current page (action {action_text})")
        self.bid = bid
        self.action_text = action_text


_TEMPLATE: Optional[Template] = None


def _template() -> Template:
    global _TEMPLATE
    if _TEMPLATE is None:
        _TEMPLATE = Template((DATA_DIR / "prompts" / "operator_v1.txt").read_text(encoding="utf-8"))
    return _TEMPLATE


def render_tips(knowledge: RetrievedKnowledge) -> str:
    if not knowledge.items:
        return NO_KNOWLEDGE_MARKER
    blocks = []
    for item in knowledge.items:
        t = item.tip
        blocks.append(
            f"Tip {t.id}:\n"
            f"  Scope: {t.scope}\n"
            f"  Action guidance: {t.action_guidance}\n"
            f"  Constraint: {t.constraint}\n"
            f"  Goal alignment: {t.goal_alignment}"
        )
    return "\n".join(blocks)


def _render_marks(obs: Observation) -> str:
    if not obs.marks:
        return "(none)"
    lines = []
    for m in obs.marks:
        suffix = "" if m.enabled else " (disabled)"
        lines.append(f"[{m.bid}] {m.role} '{m.name}'{suffix}")
    return "\n".join(lines)


def render_prompt(
    obs: Observation,
    belief: Union[BeliefState, str],
    knowledge: RetrievedKnowledge,
    goal: Goal,
    url_templates: Sequence[str] = (),
) -> str:
    """Deterministic prompt text; pure function of its inputs.

    ``belief`` is normally a BeliefState; a plain string (the raw-history
    digest used when summarization is disabled) fills the same prompt slot.
    """
    return _template().substitute(
        format_rules=FORMAT_RULES,
        action_space=ACTION_SPACE,
        goal=goal.instruction,
        knowledge=render_tips(knowledge),
        url_templates="\n".join(url_templates) if url_templates else "(none declared)",
        belief=render_belief(belief) if isinstance(belief, BeliefState) else belief,
        marks=_render_marks(obs),
        url=obs.url,
        ax_tree=obs.ax_tree,
    )


def _repair_nudge(err: ActionParseError) -> str:
    return (
        "Your previous reply could not be executed "
        f"({err.kind}: {err}). The offending part was:\n"
        f"{err.span!r}\n\n"
        f"Reply again following these rules exactly.\n\n{FORMAT_RULES}"
    )


def check_grounding(decision: ActionDecision, obs: Observation) -> None:
    action = decision.action
    if isinstance(action, ELEMENT_ACTIONS):
        bids = {m.bid for m in obs.marks}
        if action.bid not in bids:
            raise GroundingFailure(action.bid, serialize(action))


def decide(
    client: LLMClient,
    obs: Observation,
    belief: Union[BeliefState, str],
    knowledge: RetrievedKnowledge,
    goal: Goal,
    url_templates: Sequence[str] = (),
    parse_retries: int = DEFAULT_PARSE_RETRIES,
) -> ActionDecision:
    """Query the model for one grounded action; at most 1 + parse_retries calls."""
    prompt = render_prompt(obs, belief, knowledge, goal, url_templates=url_templates)
    messages: list[Message] = [{"role": "user", "content": prompt}]
    last_err: Optional[ActionParseError] = None
    for attempt in range(parse_retries + 1):
        reply: Completion = client.complete(messages)
        try:
            decision = parse_envelope(reply.text)
        except ActionParseError as err:
            last_err = err
            messages = messages + [
                {"role": "assistant", "content": reply.text},
                {"role": "user", "content": _repair_nudge(err)},
            ]
            continue
        check_grounding(decision, obs)
        return replace(decision, retry_count=attempt)
    raise ParseFailure(
        f"no parseable action after {parse_retries + 1} attempts: {last_err}",
        span=last_err.span if last_err else "",
        attempts=parse_retries + 1,
    )
