"""Gateway error types, import-light so any module can reference them."""

from __future__ import annotations

from typing import Optional


class ModelUnavailable(Exception):
    """Umbrella for completion failures the caller may retry or surface."""


class Timeout(ModelUnavailable):
    pass


class RateLimited(ModelUnavailable):
    def __init__(self, message: str, retry_after: Optional[float] = None):
        super().__init__(message)
        self.retry_after = retry_after


class Protocol(ModelUnavailable):
    """Endpoint answered with something that is not a chat completion."""


class StubMiss(Exception):
    """No scripted rule matched the prompt; the test script has a hole."""


class CassetteMiss(Exception):
    """Replay-mode request absent from the cassette."""

    def __init__(self, digest: str):
        super().__init__(f"no cassette entry for request digest {digest}")
        self.digest = digest
