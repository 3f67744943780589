"""Chat-completion client for any OpenAI-compatible endpoint.

One wire shape: POST {base_url}/chat/completions with {model, messages, ...},
first-choice message content comes back as the completion text. Temperature
defaults to 0 so identical requests give the backend every chance to answer
identically.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol as TypingProtocol, Sequence

import httpx

from .errors import ModelUnavailable, Protocol, RateLimited, Timeout

DEFAULT_PARAMS = {"temperature": 0}

Message = dict  # {"role": ..., "content": ...}


@dataclass(frozen=True)
class Completion:
    text: str
    usage: dict = field(default_factory=dict)


class LLMClient(TypingProtocol):
    def complete(
        self,
        messages: Sequence[Message],
        model_id: Optional[str] = None,
        params: Optional[dict] = None,
    ) -> Completion: ...


def request_digest(messages: Sequence[Message], model_id: str, params: dict) -> str:
    """Stable digest of a request; key-order independent via canonical JSON."""
    doc = {"messages": list(messages), "model_id": model_id, "params": params}
    blob = json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class HttpGateway:
    """Synchronous client with bounded backoff on rate limiting."""

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        model_id: str = "",
        params: Optional[dict] = None,
        timeout: float = 120.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.model_id = model_id
        self.params = dict(DEFAULT_PARAMS if params is None else params)
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), timeout=timeout, headers=headers, transport=transport
        )

    def complete(
        self,
        messages: Sequence[Message],
        model_id: Optional[str] = None,
        params: Optional[dict] = None,
    ) -> Completion:
        body = dict(params if params is not None else self.params)
        body["model"] = model_id or self.model_id
        body["messages"] = list(messages)

        last_rate: Optional[RateLimited] = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self._client.post("/chat/completions", json=body)
            except httpx.TimeoutException as exc:
                raise Timeout(str(exc)) from exc
            except httpx.HTTPError as exc:
                raise ModelUnavailable(str(exc)) from exc
            if resp.status_code == 429:
                retry_after = _parse_retry_after(resp.headers.get("Retry-After"))
                last_rate = RateLimited("rate limited by endpoint", retry_after=retry_after)
                if attempt < self.max_retries:
                    time.sleep(retry_after if retry_after is not None else self.backoff_base * 2**attempt)
                    continue
                raise last_rate
            if resp.status_code >= 400:
                raise Protocol(f"endpoint returned status {resp.status_code}: {resp.text[:200]}")
            return _parse_completion(resp)
        raise last_rate  # unreachable; loop either returned or raised

    def close(self) -> None:
        self._client.close()


def _parse_retry_after(value: Optional[str]) -> Optional[float]:
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


def _parse_completion(resp: httpx.Response) -> Completion:
    try:
        doc = resp.json()
        text = doc["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise Protocol(f"malformed completion body: {exc}") from exc
    if not isinstance(text, str):
        raise Protocol("completion content is not text")
    return Completion(text=text, usage=doc.get("usage") or {})


ENV_URL = "SITEWISE_LLM_URL"
ENV_API_KEY = "SITEWISE_LLM_API_KEY"
ENV_MODEL = "SITEWISE_LLM_MODEL"


def gateway_from_env() -> HttpGateway:
    url = os.environ.get(ENV_URL)
    if not url:
        raise ModelUnavailable(f"{ENV_URL} is not set; no endpoint configured")
    return HttpGateway(
        base_url=url,
        api_key=os.environ.get(ENV_API_KEY, ""),
        model_id=os.environ.get(ENV_MODEL, ""),
    )
