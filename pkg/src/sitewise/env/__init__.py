from .base import (
    INEFFECTIVE,
    EnvResult,
    EnvTimeout,
    InvalidBid,
    NavigationError,
    Session,
    SessionLost,
)
from .evaluate import MODE_ANSWER, MODE_PROGRAMMATIC, EvalOutcome, SpecMissing, evaluate_success
from .mock import BLANK_URL, MockSession, MockSite
from .sitespec import (
    SITESPEC_SCHEMA_VERSION,
    Element,
    InvalidSiteSpec,
    Page,
    SiteSpec,
    Transition,
    fill,
    load_site_spec,
    route,
    spec_from_dict,
)
from .watchdog import DEFAULT_RETRIES, FaultInjector, FaultPlan, Unrecoverable, Watchdog

__all__ = [
    "INEFFECTIVE",
    "EnvResult",
    "EnvTimeout",
    "InvalidBid",
    "NavigationError",
    "Session",
    "SessionLost",
    "MODE_ANSWER",
    "MODE_PROGRAMMATIC",
    "EvalOutcome",
    "SpecMissing",
    "evaluate_success",
    "BLANK_URL",
    "MockSession",
    "MockSite",
    "SITESPEC_SCHEMA_VERSION",
    "Element",
    "InvalidSiteSpec",
    "Page",
    "SiteSpec",
    "Transition",
    "fill",
    "load_site_spec",
    "route",
    "spec_from_dict",
    "Unrecoverable",
    "Watchdog",
    "FaultInjector",
    "FaultPlan",
    "DEFAULT_RETRIES",
]
