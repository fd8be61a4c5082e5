"""HTTP client for the v1 backend wire protocol.

Routes: ``GET /v1/health``, ``POST /v1/inpaint``, ``POST /v1/enhance``.
Bodies are JSON objects; images travel as base64 (RFC 4648) PNG bytes;
unknown fields must be ignored by both sides; errors come back as
``{"error": <message>}``. Retries happen only on connection-level
failures, never on HTTP 4xx, and the payload is serialized once so every
resend is byte-identical.
"""

from __future__ import annotations

import base64
import json
import threading
from dataclasses import dataclass, field

import numpy as np
import requests

from ..errors import (
    BackendError,
    BackendUnavailableError,
    IntegrityError,
    ProtocolError,
    RequestTooLargeError,
    ShapeMismatchError,
)
from ..field import mask_to_png
from ..imaging import as_image, decode_image, encode_png, png_dimensions
from .base import CAP_BLIND, CAP_INPAINT, CAP_PROMPT_GUIDED, Enhancer

DEFAULT_TIMEOUT = 120.0
DEFAULT_MAX_RETRIES = 2
DEFAULT_MAX_PAYLOAD = 32 * 1024 * 1024
DEFAULT_MAX_CONCURRENCY = 2


@dataclass(frozen=True)
class BackendEndpoint:
    """Connection parameters for one backend service."""

    base_url: str
    timeout: float = DEFAULT_TIMEOUT
    max_retries: int = DEFAULT_MAX_RETRIES
    max_payload: int = DEFAULT_MAX_PAYLOAD
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def url(self, route: str) -> str:
        return self.base_url.rstrip("/") + route


@dataclass(frozen=True)
class InpaintRequest:
    """Payload for ``POST /v1/inpaint``.

    ``image`` is PNG bytes; ``mask`` is an 8-bit grayscale PNG where 255
    marks pixels to modify. Image and mask dimensions must match.
    """

    image: bytes
    mask: bytes
    prompt: str
    strength: float
    steps: int
    seed: int
    negative_prompt: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must be in [0, 1], got {self.strength}")
        if self.steps <= 0:
            raise ValueError("steps must be positive")
        if png_dimensions(self.image) != png_dimensions(self.mask):
            raise ShapeMismatchError("image and mask dimensions differ")

    def to_json(self) -> str:
        body = {
            "image": base64.b64encode(self.image).decode("ascii"),
            "mask": base64.b64encode(self.mask).decode("ascii"),
            "prompt": self.prompt,
            "strength": self.strength,
            "steps": self.steps,
            "seed": self.seed,
        }
        if self.negative_prompt is not None:
            body["negative_prompt"] = self.negative_prompt
        return json.dumps(body)


@dataclass(frozen=True)
class EnhanceRequest:
    """Payload for ``POST /v1/enhance``: like inpainting but maskless."""

    image: bytes
    prompt: str
    strength: float
    steps: int
    seed: int
    negative_prompt: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must be in [0, 1], got {self.strength}")
        if self.steps <= 0:
            raise ValueError("steps must be positive")

    def to_json(self) -> str:
        body = {
            "image": base64.b64encode(self.image).decode("ascii"),
            "prompt": self.prompt,
            "strength": self.strength,
            "steps": self.steps,
            "seed": self.seed,
        }
        if self.negative_prompt is not None:
            body["negative_prompt"] = self.negative_prompt
        return json.dumps(body)


def _send(endpoint: BackendEndpoint, method: str, route: str, body: str | None,
          session: requests.Session | None = None) -> requests.Response:
    """Issue one request with the endpoint's retry policy.

    Only connection-level errors are retried; an HTTP status of any kind is
    a response and is never retried here.
    """
    if body is not None and len(body.encode("utf-8")) > endpoint.max_payload:
        raise RequestTooLargeError(
            f"payload exceeds {endpoint.max_payload} bytes; not sent"
        )
    http = session or requests
    last_exc = None
    for _ in range(endpoint.max_retries + 1):
        try:
            if method == "GET":
                return http.get(endpoint.url(route), timeout=endpoint.timeout)
            return http.post(
                endpoint.url(route),
                data=body.encode("utf-8"),
                headers={"Content-Type": "application/json"},
                timeout=endpoint.timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_exc = exc
    raise BackendUnavailableError(
        f"{endpoint.base_url} unreachable after {endpoint.max_retries + 1} attempts: {last_exc}"
    )


def _parse_json(resp: requests.Response) -> dict:
    try:
        obj = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("response body must be a JSON object")
    return obj


def health_check(endpoint: BackendEndpoint, session: requests.Session | None = None) -> str:
    """Probe ``GET /v1/health``; returns the backend's identity label."""
    resp = _send(endpoint, "GET", "/v1/health", None, session)
    if resp.status_code >= 400:
        raise BackendError(f"health check failed: HTTP {resp.status_code}: {resp.text}")
    obj = _parse_json(resp)
    if obj.get("status") != "ok" or "backend" not in obj:
        raise ProtocolError(f"malformed health response: {obj}")
    return str(obj["backend"])


def _image_round_trip(endpoint: BackendEndpoint, route: str, body: str,
                      expect_dims: tuple[int, int],
                      session: requests.Session | None = None) -> np.ndarray:
    resp = _send(endpoint, "POST", route, body, session)
    if resp.status_code >= 400:
        detail = resp.text
        try:
            detail = _parse_json(resp).get("error", detail)
        except ProtocolError:
            pass
        raise BackendError(f"{route} failed: HTTP {resp.status_code}: {detail}")
    obj = _parse_json(resp)
    if "image" not in obj:
        raise ProtocolError(f"{route} response missing 'image' field")
    try:
        png = base64.b64decode(obj["image"], validate=True)
    except Exception as exc:
        raise ProtocolError(f"{route} image field is not valid base64") from exc
    result = decode_image(png, min_size=1)
    if result.shape[:2] != expect_dims:
        raise IntegrityError(
            f"backend returned {result.shape[:2]}, expected {expect_dims}"
        )
    return result


def inpaint_remote(endpoint: BackendEndpoint, req: InpaintRequest,
                   session: requests.Session | None = None) -> np.ndarray:
    """Delegate inpainting to the service and validate the result size.

    Unmasked-pixel preservation is the caller's check, not the client's.
    """
    return _image_round_trip(
        endpoint, "/v1/inpaint", req.to_json(), png_dimensions(req.image), session
    )


def enhance_remote(endpoint: BackendEndpoint, req: EnhanceRequest,
                   session: requests.Session | None = None) -> np.ndarray:
    """Delegate maskless global enhancement to the service."""
    return _image_round_trip(
        endpoint, "/v1/enhance", req.to_json(), png_dimensions(req.image), session
    )


@dataclass
class RemoteBackend(Enhancer):
    """``Enhancer`` adapter over a remote v1 endpoint.

    Thread-safe: in-flight requests are independent and a per-endpoint
    semaphore caps concurrency so model servers are not overloaded.
    """

    endpoint: BackendEndpoint
    label: str | None = None
    session: requests.Session | None = None
    _gate: threading.BoundedSemaphore = field(init=False, repr=False)

    name = "remote"
    capabilities = frozenset({CAP_INPAINT, CAP_BLIND, CAP_PROMPT_GUIDED})

    def __post_init__(self):
        self._gate = threading.BoundedSemaphore(self.endpoint.max_concurrency)
        if self.label is None:
            self.label = self.endpoint.base_url
        self.name = self.label

    def check(self) -> str:
        """Health-check the endpoint and adopt its advertised label."""
        label = health_check(self.endpoint, self.session)
        self.label = label
        self.name = label
        return label

    def inpaint(self, img, mask, prompt, *, strength, steps, seed):
        img = as_image(img)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != img.shape[:2]:
            raise ShapeMismatchError(f"mask {mask.shape} vs image {img.shape[:2]}")
        req = InpaintRequest(
            image=encode_png(img),
            mask=mask_to_png(mask),
            prompt=prompt,
            strength=strength,
            steps=steps,
            seed=seed,
        )
        with self._gate:
            return inpaint_remote(self.endpoint, req, self.session)

    def enhance(self, img, prompt, *, strength, steps, seed):
        img = as_image(img)
        req = EnhanceRequest(
            image=encode_png(img),
            prompt=prompt,
            strength=strength,
            steps=steps,
            seed=seed,
        )
        with self._gate:
            return enhance_remote(self.endpoint, req, self.session)
