"""Declarative mock-site description: pages, elements, transitions, state.

Schema (v1), one JSON document per site:

    {
      "v": 1,
      "site_id": "gitlab.mock",
      "initial_page": "dashboard",
      "state_vars": {"visibility": "public"},
      "url_templates": ["http://gitlab.mock/search?q={q}"],
      "error_page": "not_found",              // optional
      "pages": {
        "dashboard": {
          "url_template": "http://gitlab.mock/",
          "title": "Dashboard",               // optional, defaults to page id
          "elements": [
            {"bid": "12", "role": "link", "name": "Projects", "text": "",
             "when": {"var": "x", "op": "eq", "value": 1}}   // when is optional
          ],
          "transitions": [
            {"on": "click(\"12\")", "to": "projects", "effects": {"seen": true}}
          ]
        }
      },
      "validators": [
        {"name": "is_private", "var": "visibility", "op": "eq", "value": "private"}
      ]
    }

Element name/text and page title/url_template may embed {state_var}
placeholders, substituted at render time; unknown placeholders stay literal.
Effects map state vars to literals, to "$text" (the typed text) or "$url"
(the goto target), or to {"inc": n} for counters. Transition resolution is
first match wins, in declaration order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ..patterns import BadPattern, validate_action_pattern

SITESPEC_SCHEMA_VERSION = 1

VALIDATOR_OPS = ("eq", "ne", "gte", "lte", "contains")


class InvalidSiteSpec(Exception):
    pass


@dataclass(frozen=True)
class Element:
    bid: str
    role: str
    name: str
    text: str = ""
    when: Optional[dict] = None


@dataclass(frozen=True)
class Transition:
    on: str
    to: Optional[str] = None
    effects: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Page:
    page_id: str
    url_template: str
    title: str
    elements: tuple[Element, ...] = ()
    transitions: tuple[Transition, ...] = ()


@dataclass(frozen=True)
class SiteSpec:
    site_id: str
    initial_page: str
    pages: dict[str, Page]
    state_vars: dict[str, Any] = field(default_factory=dict)
    validators: tuple[dict, ...] = ()
    url_templates: tuple[str, ...] = ()
    error_page: Optional[str] = None

    def validator_named(self, name: str) -> Optional[dict]:
        for v in self.validators:
            if v.get("name") == name:
                return v
        return None


def _check_validator_shape(v: dict, where: str) -> None:
    if not isinstance(v, dict) or "var" not in v or "op" not in v or "value" not in v:
        raise InvalidSiteSpec(f"{where}: validator needs var/op/value, got {v!r}")
    if v["op"] not in VALIDATOR_OPS:
        raise InvalidSiteSpec(f"{where}: unknown validator op {v['op']!r}")


def spec_from_dict(doc: dict) -> SiteSpec:
    if doc.get("v") != SITESPEC_SCHEMA_VERSION:
        raise InvalidSiteSpec(f"unsupported site spec version {doc.get('v')!r}")
    site_id = doc.get("site_id")
    if not site_id:
        raise InvalidSiteSpec("site_id is required")
    raw_pages = doc.get("pages")
    if not isinstance(raw_pages, dict) or not raw_pages:
        raise InvalidSiteSpec("pages must be a non-empty map")

    pages: dict[str, Page] = {}
    for page_id, p in raw_pages.items():
        elements = []
        seen_bids = set()
        for e in p.get("elements", ()):
            if e["bid"] in seen_bids:
                raise InvalidSiteSpec(f"page {page_id!r}: duplicate bid {e['bid']!r}")
            seen_bids.add(e["bid"])
            when = e.get("when")
            if when is not None:
                _check_validator_shape(when, f"page {page_id!r} element {e['bid']!r}")
            elements.append(
                Element(bid=e["bid"], role=e["role"], name=e["name"], text=e.get("text", ""), when=when)
            )
        transitions = []
        for t in p.get("transitions", ()):
            try:
                validate_action_pattern(t["on"])
            except BadPattern as exc:
                raise InvalidSiteSpec(f"page {page_id!r}: {exc}") from exc
            transitions.append(
                Transition(on=t["on"], to=t.get("to"), effects=dict(t.get("effects", {})))
            )
        pages[page_id] = Page(
            page_id=page_id,
            url_template=p.get("url_template", ""),
            title=p.get("title", page_id),
            elements=tuple(elements),
            transitions=tuple(transitions),
        )

    for page_id, page in pages.items():
        for t in page.transitions:
            if t.to is not None and t.to not in pages:
                raise InvalidSiteSpec(f"page {page_id!r}: transition targets unknown page {t.to!r}")

    initial = doc.get("initial_page")
    if initial not in pages:
        raise InvalidSiteSpec(f"initial_page {initial!r} is not a declared page")
    error_page = doc.get("error_page")
    if error_page is not None and error_page not in pages:
        raise InvalidSiteSpec(f"error_page {error_page!r} is not a declared page")

    validators = tuple(doc.get("validators", ()))
    for v in validators:
        _check_validator_shape(v, "validators")
        if not v.get("name"):
            raise InvalidSiteSpec("site validators must be named")

    return SiteSpec(
        site_id=site_id,
        initial_page=initial,
        pages=pages,
        state_vars=dict(doc.get("state_vars", {})),
        validators=validators,
        url_templates=tuple(doc.get("url_templates", ())),
        error_page=error_page,
    )


def load_site_spec(path: str | Path) -> SiteSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


# --- template rendering and routing ------------------------------------------

_PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


def fill(template: str, state_vars: dict) -> str:
    """Substitute {var} placeholders; unknown names stay literal."""
    return _PLACEHOLDER.sub(
        lambda m: str(state_vars[m.group(1)]) if m.group(1) in state_vars else m.group(0),
        template,
    )


def _template_regex(template: str) -> re.Pattern:
    out = []
    pos = 0
    for m in _PLACEHOLDER.finditer(template):
        out.append(re.escape(template[pos : m.start()]))
        # slash-free capture keeps path and query placeholders unambiguous
        out.append(f"(?P<{m.group(1)}>[^/&?#]+)")
        pos = m.end()
    out.append(re.escape(template[pos:]))
    return re.compile("^" + "".join(out) + "$")


def route(spec: SiteSpec, url: str) -> Optional[tuple[str, dict[str, str]]]:
    """Resolve a concrete URL to (page_id, captured placeholder values)."""
    for page_id, page in spec.pages.items():
        if not page.url_template:
            continue
        m = _template_regex(page.url_template).match(url)
        if m:
            return page_id, m.groupdict()
    return None
