"""Wire-protocol v1 parsing and image codec helpers.

Requests are JSON objects; images travel as base64 PNG bytes; unknown
fields are ignored. Every validation failure raises ``BadRequest`` with a
message that ends up in the ``{"error": ...}`` body.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError


class BadRequest(Exception):
    """The request body is malformed or violates the protocol."""


def decode_png_rgb(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).astype(np.float64) / 255.0
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise BadRequest(f"cannot decode image: {exc}") from exc


def decode_png_mask(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            raw = np.asarray(im.convert("L"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise BadRequest(f"cannot decode mask: {exc}") from exc
    return raw >= 128


def encode_png_rgb(img: np.ndarray) -> bytes:
    raw = np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(raw, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def parse_body(raw: bytes) -> dict:
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadRequest(f"body is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise BadRequest("body must be a JSON object")
    return obj


def _field_bytes(obj: dict, key: str) -> bytes:
    value = obj.get(key)
    if not isinstance(value, str):
        raise BadRequest(f"missing or non-text field: {key}")
    try:
        return base64.b64decode(value, validate=True)
    except Exception as exc:
        raise BadRequest(f"field {key} is not valid base64") from exc


def _field_number(obj: dict, key: str, lo=None, hi=None, integer=False):
    value = obj.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise BadRequest(f"missing or non-numeric field: {key}")
    if integer:
        value = int(value)
    if lo is not None and value < lo:
        raise BadRequest(f"field {key} below {lo}")
    if hi is not None and value > hi:
        raise BadRequest(f"field {key} above {hi}")
    return value


@dataclass
class ParsedInpaint:
    image_png: bytes
    image: np.ndarray
    mask: np.ndarray
    prompt: str
    strength: float
    steps: int
    seed: int


@dataclass
class ParsedEnhance:
    image_png: bytes
    image: np.ndarray
    prompt: str
    strength: float
    steps: int
    seed: int


def parse_inpaint(raw: bytes) -> ParsedInpaint:
    obj = parse_body(raw)
    image_png = _field_bytes(obj, "image")
    mask_png = _field_bytes(obj, "mask")
    image = decode_png_rgb(image_png)
    mask = decode_png_mask(mask_png)
    if mask.shape != image.shape[:2]:
        raise BadRequest(
            f"image {image.shape[:2]} and mask {mask.shape} dimensions differ"
        )
    return ParsedInpaint(
        image_png=image_png,
        image=image,
        mask=mask,
        prompt=str(obj.get("prompt", "")),
        strength=float(_field_number(obj, "strength", 0.0, 1.0)),
        steps=int(_field_number(obj, "steps", 1, integer=True)),
        seed=int(_field_number(obj, "seed", 0, integer=True)),
    )


def parse_enhance(raw: bytes) -> ParsedEnhance:
    obj = parse_body(raw)
    image_png = _field_bytes(obj, "image")
    return ParsedEnhance(
        image_png=image_png,
        image=decode_png_rgb(image_png),
        prompt=str(obj.get("prompt", "")),
        strength=float(_field_number(obj, "strength", 0.0, 1.0)),
        steps=int(_field_number(obj, "steps", 1, integer=True)),
        seed=int(_field_number(obj, "seed", 0, integer=True)),
    )


def image_response(png: bytes, label: str) -> bytes:
    return json.dumps(
        {"image": base64.b64encode(png).decode("ascii"), "backend": label}
    ).encode("utf-8")


def error_response(message: str) -> bytes:
    return json.dumps({"error": message}).encode("utf-8")
