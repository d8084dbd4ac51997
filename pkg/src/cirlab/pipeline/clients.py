"""Annotation service clients: protocol, retry/rate/budget wrappers, HTTP.

A service turns a request ``{prompt, optional image reference}`` into a
response ``{text, latency, token counts}``. Real backends sit behind HTTP
with the credential read from an environment variable; deterministic local
mocks (see :mod:`cirlab.pipeline.mocks`) implement the same protocol and
are substituted by the ``--mock`` flag.
"""

import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol

from ..errors import BudgetExceededError, ConfigurationError, ServiceError, TransientServiceError
from ..text import token_count


@dataclass
class ServiceRequest:
    prompt: str
    image_ref: str | None = None


@dataclass
class ServiceResponse:
    text: str
    latency_s: float = 0.0
    prompt_tokens: int = 0
    completion_tokens: int = 0


class ServiceClient(Protocol):
    name: str

    def complete(self, request: ServiceRequest) -> ServiceResponse: ...


class RetryPolicy:
    """Retry transient failures with exponential backoff, at most 3 tries."""

    def __init__(self, max_attempts: int = 3, base_delay: float = 0.5,
                 multiplier: float = 2.0, sleep: Callable[[float], None] = time.sleep):
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.multiplier = multiplier
        self.sleep = sleep

    def call(self, fn: Callable[[], ServiceResponse]) -> ServiceResponse:
        delay = self.base_delay
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                return fn()
            except TransientServiceError as exc:
                last = exc
                if attempt + 1 < self.max_attempts:
                    self.sleep(delay)
                    delay *= self.multiplier
        raise ServiceError(
            f"service failed after {self.max_attempts} attempts: {last}"
        ) from last


class RateLimiter:
    """Enforce a minimum interval between requests (thread-safe)."""

    def __init__(self, rate_per_s: float | None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate_per_s is not None and rate_per_s <= 0:
            raise ConfigurationError("rate_per_s must be positive or None")
        self.min_interval = 0.0 if rate_per_s is None else 1.0 / rate_per_s
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_allowed = float("-inf")

    def wait(self) -> None:
        if self.min_interval == 0.0:
            return
        with self._lock:
            now = self._clock()
            wait_for = self._next_allowed - now
            start = max(now, self._next_allowed)
            self._next_allowed = start + self.min_interval
        if wait_for > 0:
            self._sleep(wait_for)


class RequestBudget:
    """Hard cap on the number of service requests a run may issue."""

    def __init__(self, max_requests: int | None):
        self.max_requests = max_requests
        self._count = 0
        self._lock = threading.Lock()

    @property
    def spent(self) -> int:
        return self._count

    def take(self) -> None:
        with self._lock:
            if self.max_requests is not None and self._count >= self.max_requests:
                raise BudgetExceededError(
                    f"request budget of {self.max_requests} exhausted"
                )
            self._count += 1


class ManagedClient:
    """Wraps a client with the run's rate limit and request budget."""

    def __init__(self, inner: ServiceClient, limiter: RateLimiter | None = None,
                 budget: RequestBudget | None = None):
        self.inner = inner
        self.name = inner.name
        self.limiter = limiter
        self.budget = budget

    def complete(self, request: ServiceRequest) -> ServiceResponse:
        if self.budget is not None:
            self.budget.take()
        if self.limiter is not None:
            self.limiter.wait()
        return self.inner.complete(request)


class HttpServiceClient:
    """Minimal JSON-over-HTTP client for a text-completion endpoint.

    Sends ``{"prompt": ..., "image_ref": ...}`` and expects
    ``{"text": ...}`` back. The bearer credential comes from the
    environment so keys never land in config files.
    """

    def __init__(self, endpoint: str, name: str = "http",
                 api_key_env: str = "CIRLAB_API_KEY", timeout_s: float = 30.0,
                 session=None):
        if not endpoint:
            raise ConfigurationError("service endpoint must be configured")
        self.endpoint = endpoint
        self.name = name
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def complete(self, request: ServiceRequest) -> ServiceResponse:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {"prompt": request.prompt}
        if request.image_ref is not None:
            payload["image_ref"] = request.image_ref
        start = time.monotonic()
        try:
            response = self.session.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout_s
            )
        except Exception as exc:  # connection/timeout errors are retryable
            raise TransientServiceError(f"request to {self.endpoint} failed: {exc}") from exc
        latency = time.monotonic() - start
        if response.status_code in (429, 500, 502, 503, 504):
            raise TransientServiceError(f"service returned {response.status_code}")
        if response.status_code != 200:
            raise ServiceError(f"service returned {response.status_code}")
        body = response.json()
        text = body.get("text", "")
        return ServiceResponse(
            text=text,
            latency_s=latency,
            prompt_tokens=token_count(request.prompt),
            completion_tokens=token_count(text),
        )
