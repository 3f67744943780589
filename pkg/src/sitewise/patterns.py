"""Glob pattern matching for URLs and action patterns.

The pattern language is deliberately tiny: `*` matches any span (including
empty), `?` matches a single character, everything else is literal. Patterns
are matched against the FULL string, not a prefix.

Action patterns apply the same globs to an action's canonical serialized form;
a bare action name (e.g. `click`) is shorthand for `click(*)`.
"""

from __future__ import annotations

import re
from functools import lru_cache

from .actions import ACTION_NAMES, Action, serialize


class BadPattern(Exception):
    """Pattern rejected at validation time."""


@lru_cache(maxsize=4096)
def _compile(pattern: str) -> re.Pattern:
    out = []
    for ch in pattern:
        if ch == "*":
            out.append(".*")
        elif ch == "?":
            out.append(".")
        else:
            out.append(re.escape(ch))
    return re.compile("^" + "".join(out) + "$", re.DOTALL)


def validate_pattern(pattern: str) -> None:
    if not isinstance(pattern, str) or not pattern:
        raise BadPattern(f"empty or non-string pattern: {pattern!r}")


def glob_match(pattern: str, text: str) -> bool:
    validate_pattern(pattern)
    return _compile(pattern).match(text) is not None


def match_url(pattern: str, url: str) -> bool:
    """Deterministic glob match of a tip's pattern against a full URL."""
    return glob_match(pattern, url)


_NAME_RE = re.compile(r"^([a-z_]+)(\(|$)")


def validate_action_pattern(pattern: str) -> None:
    """Action patterns must name a grammar action; globs may not touch the name."""
    validate_pattern(pattern)
    m = _NAME_RE.match(pattern)
    if not m or m.group(1) not in ACTION_NAMES:
        raise BadPattern(f"action pattern must start with a known action name: {pattern!r}")


def action_matches(pattern: str, action: Action) -> bool:
    """Match an action pattern against the canonical serialized action."""
    validate_action_pattern(pattern)
    if "(" not in pattern:
        pattern = pattern + "(*"  # bare name: any arguments
    if not pattern.endswith(("*", ")")):
        pattern = pattern + "*"
    return glob_match(pattern, serialize(action))
