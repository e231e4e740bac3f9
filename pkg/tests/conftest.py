import socket
import threading
import time

import httpx
import numpy as np
import pytest
import uvicorn

from mdlbell import pipeline
from mdlbell.livesvc import create_app

# Published coincidence tables: one measured cell per basis plus basis totals.
HUMAN_MEASURED = {(0, 0, 0, 0): 2833, (0, 1, 0, 1): 100,
                  (1, 0, 1, 0): 193, (0, 0, 1, 1): 86}
HUMAN_TOTALS = {(0, 0): 34408, (0, 1): 40085, (1, 0): 41009, (1, 1): 19853}

QRNG_MEASURED = {(0, 0, 0, 0): 38911, (0, 1, 0, 1): 1214,
                 (1, 0, 1, 0): 3246, (0, 0, 1, 1): 1577}
QRNG_TOTALS = {(0, 0): 463901, (0, 1): 453939, (1, 0): 471152, (1, 1): 462591}

REPORTED_CORRELATORS = (-0.751, 0.651, 0.657, 0.745)


@pytest.fixture
def human_counts() -> pipeline.CountTable:
    return pipeline.CountTable.from_measured_and_totals(HUMAN_MEASURED, HUMAN_TOTALS)


@pytest.fixture
def qrng_counts() -> pipeline.CountTable:
    return pipeline.CountTable.from_measured_and_totals(QRNG_MEASURED, QRNG_TOTALS)


@pytest.fixture
def uniform_bits():
    def make(seed: int, n: int) -> np.ndarray:
        return np.random.default_rng(seed).integers(0, 2, size=n, dtype=np.uint8)
    return make


@pytest.fixture(scope="session")
def live_server(tmp_path_factory):
    """The live service on a real loopback socket (SSE needs real streaming)."""
    app = create_app(log_dir=tmp_path_factory.mktemp("livesvc-logs"))
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    for _ in range(200):
        try:
            httpx.get(base + "/openapi.json", timeout=0.2)
            break
        except httpx.HTTPError:
            time.sleep(0.05)
    yield base
    server.should_exit = True
    thread.join(timeout=5)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    verdict = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    print(f"\nACCEPTANCE {verdict}: {name}", flush=True)
