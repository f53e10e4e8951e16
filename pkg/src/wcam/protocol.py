"""Wire format for out-of-process scorers.

One request payload is::

    u32 big-endian header length
    UTF-8 JSON header
    raw tensor bytes

with header fields ``batch, height, width, channels, dtype, layout,
target_class, score_kind`` and optional ``scores_all``.  The tensor is
little-endian float32, one image after another, each image channel-major
(CHW).  The response is a JSON document ``{"scores": [...]}`` whose
entries are scalars, or per-class lists when ``scores_all`` was set.

Transports:

* HTTP: the payload is the body of ``POST /score`` with content type
  ``application/octet-stream``; the response body is the JSON document.
* stdio: each message is framed as a u32 big-endian byte length followed
  by the identical payload; responses are framed the same way.

Float32 payloads survive a serialize/deserialize round trip bit-exactly.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

import numpy as np

from .errors import ScorerError

DTYPE = "f32"
LAYOUT = "CHW"
_LEN = struct.Struct(">I")


def _as_batch_array(images) -> np.ndarray:
    arr = np.asarray(images, dtype=np.float32)
    if arr.ndim == 3:  # single H x W x C image
        arr = arr[None, ...]
    if arr.ndim != 4:
        raise ScorerError("protocol", f"expected (B, H, W, C) images, got shape {arr.shape}")
    return arr


def encode_request(
    images,
    target_class: int,
    score_kind: str = "probability",
    scores_all: bool = False,
) -> bytes:
    """Serialize a batch of (H, W, C) float images into one request payload."""
    arr = _as_batch_array(images)
    b, h, w, c = arr.shape
    header = {
        "batch": b,
        "height": h,
        "width": w,
        "channels": c,
        "dtype": DTYPE,
        "layout": LAYOUT,
        "target_class": int(target_class),
        "score_kind": score_kind,
    }
    if scores_all:
        header["scores_all"] = True
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    tensor = np.ascontiguousarray(np.moveaxis(arr, -1, 1), dtype="<f4")
    return _LEN.pack(len(header_bytes)) + header_bytes + tensor.tobytes()


def decode_request(payload: bytes) -> tuple[dict, np.ndarray]:
    """Parse a request payload into (header, float32 (B, C, H, W) tensor)."""
    if len(payload) < _LEN.size:
        raise ScorerError("protocol", "payload shorter than the length prefix")
    (header_len,) = _LEN.unpack_from(payload)
    body_start = _LEN.size + header_len
    if len(payload) < body_start:
        raise ScorerError("protocol", "truncated header")
    try:
        header = json.loads(payload[_LEN.size:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScorerError("protocol", f"malformed JSON header: {exc}") from exc
    for key in ("batch", "height", "width", "channels", "dtype", "layout", "target_class"):
        if key not in header:
            raise ScorerError("protocol", f"header missing field {key!r}")
    if header["dtype"] != DTYPE or header["layout"] != LAYOUT:
        raise ScorerError(
            "protocol",
            f"unsupported dtype/layout {header['dtype']}/{header['layout']}",
        )
    b, c = int(header["batch"]), int(header["channels"])
    h, w = int(header["height"]), int(header["width"])
    expected = b * c * h * w * 4
    tensor_bytes = payload[body_start:]
    if len(tensor_bytes) != expected:
        raise ScorerError(
            "protocol",
            f"tensor byte count {len(tensor_bytes)} does not match header ({expected})",
        )
    tensor = np.frombuffer(tensor_bytes, dtype="<f4").reshape(b, c, h, w)
    return header, tensor


def tensor_to_images(tensor: np.ndarray) -> np.ndarray:
    """(B, C, H, W) wire tensor back to (B, H, W, C) images."""
    return np.moveaxis(tensor, 1, -1)


def encode_response(scores) -> bytes:
    payload = [
        [float(v) for v in row] if np.ndim(row) else float(row) for row in scores
    ]
    return json.dumps({"scores": payload}, separators=(",", ":")).encode("utf-8")


def decode_response(payload: bytes, expect_batch: int, scores_all: bool = False):
    """Parse a response document; validates length and finiteness."""
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScorerError("protocol", f"malformed response: {exc}") from exc
    if "error" in doc:
        raise ScorerError("protocol", f"scorer reported error: {doc['error']}")
    scores = doc.get("scores")
    if not isinstance(scores, list) or len(scores) != expect_batch:
        raise ScorerError(
            "protocol", f"expected {expect_batch} scores, got {scores!r}"
        )
    arr = np.asarray(scores, dtype=np.float64)
    if scores_all and arr.ndim != 2:
        raise ScorerError("protocol", "expected per-class score lists")
    if not scores_all and arr.ndim != 1:
        raise ScorerError("protocol", "expected one scalar per image")
    if not np.isfinite(arr).all():
        raise ScorerError("non_finite", "response contains non-finite scores")
    return arr


def write_frame(stream: BinaryIO, payload: bytes) -> None:
    stream.write(_LEN.pack(len(payload)))
    stream.write(payload)
    stream.flush()


def read_frame(stream: BinaryIO) -> bytes:
    head = stream.read(_LEN.size)
    if len(head) != _LEN.size:
        raise ScorerError("transport", "stream closed while reading frame length")
    (length,) = _LEN.unpack(head)
    payload = b""
    while len(payload) < length:
        chunk = stream.read(length - len(payload))
        if not chunk:
            raise ScorerError("transport", "stream closed mid-frame")
        payload += chunk
    return payload
