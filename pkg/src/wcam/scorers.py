"""Black-box scorer backends behind one uniform handle.

Three families:

* synthetic analytic models with closed-form expressions over pixels or
  wavelet coefficients, used as test oracles;
* a remote HTTP client speaking the wire format of :mod:`wcam.protocol`;
* a subprocess adapter speaking the same payloads over length-prefixed
  stdio frames.

Every handle returns exactly one finite scalar per image, order-aligned
with the input batch.  A non-finite score is a hard error: silently
imputing it would poison the variance estimates downstream.

Synthetic models also expose a two-class view ``[1 - s, s]`` via
``score_all_batch`` (argmax picks class 1 exactly when the raw score
exceeds 0.5), which is enough to drive minimal-image searches.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np
import requests

from . import protocol
from .errors import InvalidParamError, ScorerError
from .wavelet import WaveletSpec, analyze_planes, subband_region

PROBABILITY = "probability"
LOGIT = "logit"


class ScorerHandle:
    """Batch scorer contract: one finite scalar per image, input order."""

    score_kind: str = PROBABILITY
    max_batch: int = 1024
    concurrent_safe: bool = True

    def score_batch(self, images, target_class: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def supports_all_scores(self) -> bool:
        return False

    def score_all_batch(self, images) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} does not report all-class scores")

    def describe(self) -> str:
        return type(self).__name__

    def _check_batch(self, images) -> np.ndarray:
        arr = np.asarray(images, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[None, ...]
        if arr.ndim != 4:
            raise InvalidParamError(f"expected (B, H, W, C) images, got {arr.shape}")
        if arr.shape[0] > self.max_batch:
            raise InvalidParamError(
                f"batch of {arr.shape[0]} exceeds max_batch {self.max_batch}"
            )
        return arr

    @staticmethod
    def _require_finite(scores: np.ndarray, batch_index: int | None = None) -> np.ndarray:
        if not np.isfinite(scores).all():
            bad = int(np.argwhere(~np.isfinite(np.atleast_1d(scores)))[0][0])
            raise ScorerError(
                "non_finite", f"non-finite score at position {bad}", batch_index
            )
        return scores


# --- synthetic analytic models -------------------------------------------


class SyntheticModel:
    """Closed-form score over an image batch (B, H, W, C) -> (B,)."""

    def raw_scores(self, images: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


@dataclass
class ConstantScore(SyntheticModel):
    value: float = 0.5

    def raw_scores(self, images):
        return np.full(images.shape[0], self.value)

    def describe(self):
        return f"constant({self.value})"


@dataclass
class PixelRegionMean(SyntheticModel):
    """Mean pixel value inside a half-open (r0, c0, r1, c1) rectangle."""

    region: tuple[int, int, int, int]

    def raw_scores(self, images):
        r0, c0, r1, c1 = self.region
        return images[:, r0:r1, c0:c1, :].mean(axis=(1, 2, 3))

    def describe(self):
        return f"region-mean{self.region}"


@dataclass
class WaveletLinear(SyntheticModel):
    """Dot product of the image's DWT with a fixed weight plane.

    ``weights`` is (H, W), applied to every channel, or (C, H, W).
    """

    weights: np.ndarray
    spec: WaveletSpec

    def raw_scores(self, images):
        coeffs = analyze_planes(np.moveaxis(images, -1, 1), self.spec)
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim == 2:
            w = w[None, :, :]
        return np.einsum("bchw,chw->b", coeffs, np.broadcast_to(w, coeffs.shape[1:]))

    def describe(self):
        return "wavelet-linear"


@dataclass
class SubbandEnergy(SyntheticModel):
    """Weighted sum of squared coefficients per subband."""

    band_weights: dict
    spec: WaveletSpec

    def raw_scores(self, images):
        coeffs = analyze_planes(np.moveaxis(images, -1, 1), self.spec)
        h, w = coeffs.shape[-2], coeffs.shape[-1]
        out = np.zeros(coeffs.shape[0])
        for band, weight in self.band_weights.items():
            r0, c0, r1, c1 = subband_region(self.spec, (h, w), band)
            out += weight * np.sum(coeffs[..., r0:r1, c0:c1] ** 2, axis=(1, 2, 3))
        return out

    def describe(self):
        return "subband-energy"


@dataclass
class SyntheticScorer(ScorerHandle):
    """Pure in-process scorer; safe for concurrent use."""

    model: SyntheticModel = field(default_factory=ConstantScore)
    score_kind: str = PROBABILITY
    max_batch: int = 4096
    concurrent_safe: bool = True

    def score_batch(self, images, target_class: int) -> np.ndarray:
        arr = self._check_batch(images)
        return self._require_finite(self.model.raw_scores(arr))

    @property
    def supports_all_scores(self) -> bool:
        return True

    def score_all_batch(self, images) -> np.ndarray:
        arr = self._check_batch(images)
        s = self._require_finite(self.model.raw_scores(arr))
        return np.stack([1.0 - s, s], axis=1)

    def describe(self) -> str:
        return f"synthetic:{self.model.describe()}"


@dataclass
class CountingScorer(ScorerHandle):
    """Wrapper that counts forward evaluations of an inner handle."""

    inner: ScorerHandle
    calls: int = 0
    images_scored: int = 0

    def __post_init__(self):
        self.score_kind = self.inner.score_kind
        self.max_batch = self.inner.max_batch
        self.concurrent_safe = self.inner.concurrent_safe

    def score_batch(self, images, target_class):
        arr = np.asarray(images)
        n = 1 if arr.ndim == 3 else arr.shape[0]
        self.calls += 1
        self.images_scored += n
        return self.inner.score_batch(images, target_class)

    @property
    def supports_all_scores(self):
        return self.inner.supports_all_scores

    def score_all_batch(self, images):
        arr = np.asarray(images)
        self.calls += 1
        self.images_scored += 1 if arr.ndim == 3 else arr.shape[0]
        return self.inner.score_all_batch(images)

    def describe(self):
        return f"counting({self.inner.describe()})"


# --- remote HTTP backend ---------------------------------------------------


class RemoteScorer(ScorerHandle):
    """Client for a scoring service exposing POST /score.

    Transient transport failures are retried (default 2 retries); protocol
    violations and non-finite scores fail immediately.
    """

    def __init__(
        self,
        endpoint: str,
        score_kind: str = PROBABILITY,
        max_batch: int = 64,
        retries: int = 2,
        timeout: float = 30.0,
        concurrent_safe: bool = True,
        post=None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.score_kind = score_kind
        self.max_batch = max_batch
        self.retries = retries
        self.timeout = timeout
        self.concurrent_safe = concurrent_safe
        self._post = post if post is not None else self._http_post

    def _http_post(self, payload: bytes) -> bytes:
        resp = requests.post(
            f"{self.endpoint}/score",
            data=payload,
            headers={"Content-Type": "application/octet-stream"},
            timeout=self.timeout,
        )
        if resp.status_code != 200:
            raise ScorerError(
                "protocol", f"scorer returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        return resp.content

    def _roundtrip(self, payload: bytes, batch_index: int | None) -> bytes:
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                return self._post(payload)
            except ScorerError:
                raise
            except (requests.RequestException, ConnectionError, OSError) as exc:
                last_exc = exc
        raise ScorerError(
            "transport", f"scorer unreachable after {self.retries + 1} attempts: {last_exc}",
            batch_index,
        )

    def _score(self, images, target_class, scores_all):
        arr = self._check_batch(images)
        payload = protocol.encode_request(
            arr, target_class, score_kind=self.score_kind, scores_all=scores_all
        )
        body = self._roundtrip(payload, batch_index=None)
        return protocol.decode_response(body, arr.shape[0], scores_all=scores_all)

    def score_batch(self, images, target_class):
        return self._score(images, target_class, scores_all=False)

    @property
    def supports_all_scores(self):
        return True

    def score_all_batch(self, images):
        return self._score(images, target_class=0, scores_all=True)

    def describe(self):
        return self.endpoint


# --- subprocess backend ----------------------------------------------------


class SubprocessScorer(ScorerHandle):
    """Scorer hosted by a child process speaking framed stdio payloads."""

    concurrent_safe = False

    def __init__(
        self,
        command: str,
        score_kind: str = PROBABILITY,
        max_batch: int = 64,
        retries: int = 2,
    ):
        self.command = command
        self.score_kind = score_kind
        self.max_batch = max_batch
        self.retries = retries
        self._proc: subprocess.Popen | None = None

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        return self._proc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _roundtrip(self, payload: bytes) -> bytes:
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                proc = self._ensure_proc()
                protocol.write_frame(proc.stdin, payload)
                return protocol.read_frame(proc.stdout)
            except (BrokenPipeError, OSError, ScorerError) as exc:
                # A dead child is a transport failure: restart and retry.
                last_exc = exc
                if isinstance(exc, ScorerError) and exc.kind != "transport":
                    raise
                self._proc = None
        raise ScorerError("transport", f"subprocess scorer failed: {last_exc}")

    def _score(self, images, target_class, scores_all):
        arr = self._check_batch(images)
        payload = protocol.encode_request(
            arr, target_class, score_kind=self.score_kind, scores_all=scores_all
        )
        body = self._roundtrip(payload)
        return protocol.decode_response(body, arr.shape[0], scores_all=scores_all)

    def score_batch(self, images, target_class):
        return self._score(images, target_class, scores_all=False)

    @property
    def supports_all_scores(self):
        return True

    def score_all_batch(self, images):
        return self._score(images, target_class=0, scores_all=True)

    def describe(self):
        return f"subprocess:{self.command}"
