#!/usr/bin/env python3
"""Regenerate the byte-level wire-protocol fixtures.

The fixtures pin the request framing (length-prefixed JSON header plus raw
little-endian float32 CHW tensor) and sample response documents.  Both the
client backends and the scoring server are tested against these bytes, so
regenerate only when the protocol version changes.
"""

import hashlib
import json
import pathlib
import struct

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "protocol_fixtures"


def build_request(header: dict, tensor: np.ndarray) -> bytes:
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    return struct.pack(">I", len(header_bytes)) + header_bytes + tensor.astype("<f4").tobytes()


def main():
    OUT.mkdir(exist_ok=True)
    expected = {}

    # Two RGB 4x4 images, probability scoring of class 7.
    header = {
        "batch": 2, "height": 4, "width": 4, "channels": 3,
        "dtype": "f32", "layout": "CHW", "target_class": 7,
        "score_kind": "probability",
    }
    tensor = (np.arange(2 * 3 * 4 * 4, dtype=np.float64) / 95.0).reshape(2, 3, 4, 4)
    payload = build_request(header, tensor)
    (OUT / "request_pair.bin").write_bytes(payload)
    expected["request_pair.bin"] = {
        "header": header,
        "tensor_shape": [2, 3, 4, 4],
        "tensor_sha256": hashlib.sha256(tensor.astype("<f4").tobytes()).hexdigest(),
        "tensor_first4": [float(v) for v in tensor.astype("<f4").ravel()[:4]],
        "tensor_last": float(tensor.astype("<f4").ravel()[-1]),
    }

    # One grayscale 2x3 image, all-class logit scores requested.
    header = {
        "batch": 1, "height": 2, "width": 3, "channels": 1,
        "dtype": "f32", "layout": "CHW", "target_class": 0,
        "score_kind": "logit", "scores_all": True,
    }
    tensor = np.array([[[[0.0, 0.25, 0.5], [0.75, 1.0, 0.125]]]])
    payload = build_request(header, tensor)
    (OUT / "request_all_scores.bin").write_bytes(payload)
    expected["request_all_scores.bin"] = {
        "header": header,
        "tensor_shape": [1, 1, 2, 3],
        "tensor_sha256": hashlib.sha256(tensor.astype("<f4").tobytes()).hexdigest(),
        "tensor_first4": [float(v) for v in tensor.astype("<f4").ravel()[:4]],
        "tensor_last": float(tensor.astype("<f4").ravel()[-1]),
    }

    (OUT / "response_scalar.json").write_bytes(
        json.dumps({"scores": [0.125, 0.875]}, separators=(",", ":")).encode()
    )
    (OUT / "response_all.json").write_bytes(
        json.dumps({"scores": [[0.1, 0.7, 0.2]]}, separators=(",", ":")).encode()
    )
    (OUT / "request_truncated.bin").write_bytes(payload[: len(payload) - 5])
    (OUT / "request_bad_header.bin").write_bytes(
        struct.pack(">I", 9) + b"not json!" + b"\x00" * 24
    )

    (OUT / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True))
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
