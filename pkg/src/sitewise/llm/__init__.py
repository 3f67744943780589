"""Completion backends: HTTP gateway, scripted stub, record/replay cassette."""

from .cassette import MODE_RECORD, MODE_REPLAY, CassetteBackend
from .errors import CassetteMiss, ModelUnavailable, Protocol, RateLimited, StubMiss, Timeout
from .gateway import (
    Completion,
    DEFAULT_PARAMS,
    ENV_API_KEY,
    ENV_MODEL,
    ENV_URL,
    HttpGateway,
    LLMClient,
    gateway_from_env,
    request_digest,
)
from .stub import ScriptedStub, StubRule

__all__ = [
    "CassetteBackend",
    "CassetteMiss",
    "Completion",
    "DEFAULT_PARAMS",
    "ENV_API_KEY",
    "ENV_MODEL",
    "ENV_URL",
    "HttpGateway",
    "LLMClient",
    "MODE_RECORD",
    "MODE_REPLAY",
    "ModelUnavailable",
    "Protocol",
    "RateLimited",
    "ScriptedStub",
    "StubMiss",
    "StubRule",
    "Timeout",
    "gateway_from_env",
    "request_digest",
]
