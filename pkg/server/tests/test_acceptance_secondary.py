"""Secondary acceptance: a full attribution run through the served model."""

import socket
import threading
import time

import numpy as np
import pytest
import requests
import uvicorn

from wcam.pipeline import WcamConfig, compute_wcam
from wcam.sampling import Sampler, SamplerKind
from wcam.scorers import RemoteScorer
from wcam.wavelet import WaveletSpec
from wcam_server.app import create_app
from wcam_server.models import load_model


@pytest.fixture(scope="module")
def server_url():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    app = create_app(load_model("tiny", seed=1, classes=10))
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            requests.get(f"{url}/info", timeout=1)
            break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        pytest.fail("server did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=5)


def test_info_over_http(server_url):
    doc = requests.get(f"{server_url}/info", timeout=5).json()
    assert doc["classes"] == 10
    assert "preprocessing" in doc


def test_wcam_run_through_served_model(server_url):
    config = WcamConfig(
        grid_size=4,
        n_design=4,
        sampler=SamplerKind(Sampler.SOBOL, seed=2),
        wavelet=WaveletSpec(levels=1),
        batch_size=32,
    )
    scorer = RemoteScorer(server_url, max_batch=32)
    image = np.random.default_rng(3).random((32, 32, 3))
    result = compute_wcam(image, target_class=5, scorer=scorer, config=config)
    assert result.n_forwards == 4 * (16 + 2)
    assert np.isfinite(result.total_indices).all()
    assert np.isfinite(result.first_order).all()
    print(f"ACCEPTANCE served-model-wcam: PASS (n_forwards={result.n_forwards})")


def test_minimal_image_scores_all_over_http(server_url):
    scorer = RemoteScorer(server_url, max_batch=8)
    batch = np.random.default_rng(4).random((2, 16, 16, 3))
    scores = scorer.score_all_batch(batch)
    assert scores.shape == (2, 10)
    np.testing.assert_allclose(scores.sum(axis=1), 1.0, atol=1e-6)
