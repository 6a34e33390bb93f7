"""End-to-end check with a live sidecar process.

Starts the service with uvicorn, points the main pipeline's benchmark at
it through the CLI with the "all-MiniLM-L6-v2" embedder, and verifies
that served embeddings keep the directional advantage over the
identity-feature baseline on planted synthetic data.
"""

import csv
import socket
import subprocess
import sys
import time

import pytest
import requests


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def live_service():
    port = _free_port()
    process = subprocess.Popen(
        [sys.executable, "-m", "uvicorn", "embed_service.app:app",
         "--host", "127.0.0.1", "--port", str(port), "--log-level", "warning"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
    )
    endpoint = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if requests.get(f"{endpoint}/healthz", timeout=1).status_code == 200:
                    break
            except requests.RequestException:
                time.sleep(0.1)
        else:
            raise RuntimeError("embed service did not come up")
        yield endpoint
    finally:
        process.terminate()
        process.wait(timeout=10)


def test_healthz_live(live_service):
    assert requests.get(f"{live_service}/healthz", timeout=5).json() == {"status": "ok"}


def test_served_embedder_beats_baseline_on_planted_data(live_service, tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text(
        "data.source = synth\n"
        "synth.companies = 120\n"
        "synth.products = 40\n"
        "synth.certificates = 5\n"
        "synth.industries = 16\n"
        "synth.signal = 0.9\n"
        "synth.partitions = 5\n"
        "kinds = supply\n"
        "embedders = all-MiniLM-L6-v2,baseline-384\n"
        f"embedding.endpoint = {live_service}\n"
        "architectures = ann\n"
        "train.max_epochs = 12\n"
        "seed = 91\n",
        encoding="utf-8",
    )
    out = tmp_path / "run"
    result = subprocess.run(
        [sys.executable, "-m", "quintlink.cli", "bench",
         "--config", str(config), "--out", str(out)],
        capture_output=True, text=True, timeout=540,
    )
    assert result.returncode == 0, result.stdout + result.stderr

    rows = list(csv.DictReader(open(out / "report_supply.csv", encoding="utf-8")))
    served = {r["dataset"]: float(r["acc_bw"]) for r in rows
              if r["embedder"] == "all-MiniLM-L6-v2"}
    baseline = {r["dataset"]: float(r["acc_bw"]) for r in rows
                if r["embedder"] == "baseline-384"}
    assert len(served) == len(baseline) == 5
    margins = [served[d] - baseline[d] for d in served]
    winners = sum(m >= 0.05 for m in margins)
    assert winners >= 3, f"served embedder won only {winners}/5 partitions: {margins}"
