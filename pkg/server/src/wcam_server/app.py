"""HTTP scoring service.

``POST /score`` consumes the framed request payload and returns
``{"scores": [...]}``: the target-class probability per image, all-class
scores when the header sets ``scores_all``, and raw logits when
``score_kind`` is ``logit``.  ``GET /info`` declares the model and its
preprocessing so clients can record them in run manifests.

Errors carry machine-readable codes: 400 for malformed framing, 422 for
shape mismatches, 500 for inference failures.  No request mutates server
state.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .models import LoadedModel
from .protocol import FramingError, encode_scores, parse_request


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def create_app(model: LoadedModel) -> FastAPI:
    app = FastAPI(title="scoring service", docs_url=None, redoc_url=None)

    @app.get("/info")
    def info():
        return {
            "schema": "scorer-info/1",
            "model": model.name,
            "classes": model.classes,
            "in_channels": model.in_channels,
            "preprocessing": model.preprocessing.to_dict(),
            "deterministic": True,
            "seed": model.seed,
        }

    @app.post("/score")
    async def score(request: Request) -> Response:
        payload = await request.body()
        try:
            header, tensor = parse_request(payload)
        except FramingError as err:
            status = 422 if err.code == "tensor_size" else 400
            return _error(status, err.code, str(err))

        if tensor.shape[1] != model.in_channels:
            return _error(
                422,
                "shape_mismatch",
                f"model expects {model.in_channels} channels, got {tensor.shape[1]}",
            )
        try:
            logits = model.apply(tensor)
        except Exception as exc:  # noqa: BLE001 - surfaced as a 500 payload
            return _error(500, "inference_failure", str(exc))

        target = int(header["target_class"])
        scores_all = bool(header.get("scores_all", False))
        if header.get("score_kind", "probability") == "probability":
            values = _softmax(logits)
        else:
            values = logits
        if not scores_all and not 0 <= target < model.classes:
            return _error(
                422, "shape_mismatch",
                f"target_class {target} outside [0, {model.classes})",
            )
        out = values if scores_all else values[:, target]
        if not np.isfinite(out).all():
            return _error(500, "inference_failure", "non-finite scores produced")
        return Response(content=encode_scores(out), media_type="application/json")

    return app
