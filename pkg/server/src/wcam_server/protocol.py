"""Server-side parsing of the scoring wire format.

Requests are a u32 big-endian header length, a UTF-8 JSON header and a raw
little-endian float32 tensor in CHW layout, one image after another.  This
is an independent implementation of the format the attribution client
speaks; both sides are pinned by the same byte-level fixtures.
"""

from __future__ import annotations

import json
import struct

import numpy as np

_LEN = struct.Struct(">I")
REQUIRED = ("batch", "height", "width", "channels", "dtype", "layout", "target_class")


class FramingError(ValueError):
    """Malformed payload: bad prefix, header or tensor byte count."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def parse_request(payload: bytes) -> tuple[dict, np.ndarray]:
    """Return (header, float32 tensor of shape (batch, C, H, W))."""
    if len(payload) < _LEN.size:
        raise FramingError("bad_framing", "payload shorter than the length prefix")
    (header_len,) = _LEN.unpack_from(payload)
    body_start = _LEN.size + header_len
    if len(payload) < body_start:
        raise FramingError("bad_framing", "declared header length exceeds payload")
    try:
        header = json.loads(payload[_LEN.size:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FramingError("bad_header", f"header is not valid JSON: {exc}") from exc
    missing = [key for key in REQUIRED if key not in header]
    if missing:
        raise FramingError("bad_header", f"header missing fields: {missing}")
    if header["dtype"] != "f32" or header["layout"] != "CHW":
        raise FramingError(
            "bad_header",
            f"unsupported dtype/layout {header['dtype']}/{header['layout']}",
        )
    shape = tuple(int(header[k]) for k in ("batch", "channels", "height", "width"))
    if any(v < 1 for v in shape):
        raise FramingError("bad_header", f"non-positive dimensions {shape}")
    expected = int(np.prod(shape)) * 4
    tensor_bytes = payload[body_start:]
    if len(tensor_bytes) != expected:
        raise FramingError(
            "tensor_size",
            f"tensor bytes {len(tensor_bytes)} do not match header {shape} ({expected})",
        )
    tensor = np.frombuffer(tensor_bytes, dtype="<f4").reshape(shape)
    return header, tensor


def encode_scores(scores) -> bytes:
    payload = [
        [float(v) for v in row] if np.ndim(row) else float(row) for row in scores
    ]
    return json.dumps({"scores": payload}, separators=(",", ":")).encode("utf-8")
