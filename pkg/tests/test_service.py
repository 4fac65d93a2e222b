import json

import pytest
from fastapi.testclient import TestClient

from trajal.cli import main as cli_main
from trajal.service.app import create_app
from trajal.trajectories import TrajectoryStore, load_trajectories


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("service")
    data = tmp / "data"
    assert cli_main(
        ["generate", "--alpha", "20", "--counts", "6,40,20", "--seed", "3", "--out", str(data)]
    ) == 0
    assert cli_main(
        [
            "embed",
            "--manifest", str(data / "manifest.json"),
            "--method", "mtsne",
            "--out", str(data / "embedding.jsonl"),
            "--iterations", "200",
            "--perplexity", "12",
            "--seed", "3",
        ]
    ) == 0
    store = TrajectoryStore(load_trajectories(data / "trajectories.jsonl"))
    truth = {i: store.label_of(i).value for i in store.ids()}
    return tmp, data, truth


@pytest.fixture()
def client(artifacts, tmp_path):
    tmp, data, truth = artifacts
    journals = tmp_path / "journals"
    app = create_app(data_dir=data, journal_dir=journals)
    return TestClient(app), truth, data, journals


def create_session(client, session_id="s1", budget=4, strategy="entropy", mode="classification"):
    response = client.post(
        "/sessions",
        json={
            "manifest": "manifest.json",
            "embedding": "embedding.jsonl",
            "session_id": session_id,
            "config": {"strategy": strategy, "budget": budget, "seed": 1, "mode": mode},
        },
    )
    return response


def test_create_session_issues_first_query(client):
    http, truth, _, _ = client
    response = create_session(http)
    assert response.status_code == 201
    handle = response.json()
    assert handle["status"] == "AwaitingLabel"
    assert handle["pending"]["step"] == 1
    assert handle["budget_remaining"] == 4


def test_budget_zero_completes_immediately(client):
    http, _, _, _ = client
    handle = create_session(http, session_id="s0", budget=0).json()
    assert handle["status"] == "Complete"
    assert handle["pending"] is None


def test_duplicate_create_rejected(client):
    http, _, _, _ = client
    assert create_session(http, session_id="dup").status_code == 201
    assert create_session(http, session_id="dup").status_code == 409


def test_missing_artifacts_404(client):
    http, _, _, _ = client
    response = http.post(
        "/sessions",
        json={
            "manifest": "missing.json",
            "embedding": "embedding.jsonl",
            "config": {"strategy": "random", "budget": 1},
        },
    )
    assert response.status_code == 404
    assert "missing.json" in response.json()["message"]


def test_get_next_idempotent_and_payload_complete(client):
    http, _, data, _ = client
    create_session(http, session_id="n1")
    first = http.get("/sessions/n1/next")
    assert first.status_code == 200
    again = http.get("/sessions/n1/next")
    assert first.json() == again.json()
    payload = first.json()
    assert payload["candidate_labels"] == ["left_drive_by", "right_drive_by", "cut_in"]
    # frame count equals the stored trajectory length
    records = {
        json.loads(line)["id"]: json.loads(line)
        for line in (data / "trajectories.jsonl").read_text().splitlines()
    }
    assert len(payload["frames"]) == len(records[payload["trajectory_id"]]["frames"])


def test_next_payload_never_leaks_hidden_labels(client):
    http, _, _, _ = client
    create_session(http, session_id="leak")
    payload = http.get("/sessions/leak/next").json()
    assert "label" not in payload
    assert set(payload.keys()) == {
        "session_id", "status", "step", "trajectory_id",
        "informativeness", "frames", "channel_names", "candidate_labels",
    }
    # the log exposes only labels the annotator submitted
    log = http.get("/sessions/leak/log").json()
    assert all(r["label"] is None for r in log["records"])


def test_unknown_session_404(client):
    http, _, _, _ = client
    assert http.get("/sessions/ghost/next").status_code == 404


def test_label_flow_and_conflicts(client):
    http, truth, _, _ = client
    create_session(http, session_id="flow", budget=3)
    nxt = http.get("/sessions/flow/next").json()
    wrong = http.post(
        "/sessions/flow/labels",
        json={"trajectory_id": nxt["trajectory_id"] + 10_000, "label": "cut_in"},
    )
    assert wrong.status_code == 409
    bad_label = http.post(
        "/sessions/flow/labels",
        json={"trajectory_id": nxt["trajectory_id"], "label": "bicycle"},
    )
    assert bad_label.status_code == 422
    ok = http.post(
        "/sessions/flow/labels",
        json={
            "trajectory_id": nxt["trajectory_id"],
            "label": truth[nxt["trajectory_id"]],
            "step": nxt["step"],
        },
    )
    assert ok.status_code == 200
    assert ok.json()["step"] == 1


def test_exactly_once_double_submit(client):
    http, truth, _, _ = client
    create_session(http, session_id="once", budget=3)
    nxt = http.get("/sessions/once/next").json()
    body = {
        "trajectory_id": nxt["trajectory_id"],
        "label": truth[nxt["trajectory_id"]],
        "step": nxt["step"],
    }
    first = http.post("/sessions/once/labels", json=body)
    second = http.post("/sessions/once/labels", json=body)
    assert first.status_code == second.status_code == 200
    assert second.json()["step"] == 1  # no double advance
    conflicting = dict(body, label="cut_in" if body["label"] != "cut_in" else "left_drive_by")
    assert http.post("/sessions/once/labels", json=conflicting).status_code == 409


def label_to_completion(http, truth, session_id):
    while True:
        handle = http.get(f"/sessions/{session_id}").json()
        if handle["status"] != "AwaitingLabel":
            return handle
        nxt = http.get(f"/sessions/{session_id}/next").json()
        response = http.post(
            f"/sessions/{session_id}/labels",
            json={
                "trajectory_id": nxt["trajectory_id"],
                "label": truth[nxt["trajectory_id"]],
                "step": nxt["step"],
            },
        )
        assert response.status_code == 200, response.text


def test_completed_session_metrics_log_and_next_conflict(client):
    http, truth, _, _ = client
    create_session(http, session_id="done", budget=4)
    handle = label_to_completion(http, truth, "done")
    assert handle["status"] == "Complete"
    assert handle["budget_remaining"] == 0
    metrics = http.get("/sessions/done/metrics").json()
    assert metrics["steps"] == [0, 1, 2, 3, 4]
    assert len(metrics["values"]) == 5
    log = http.get("/sessions/done/log").json()
    assert [r["step"] for r in log["records"]] == [1, 2, 3, 4]
    assert all(r["label"] is not None for r in log["records"])
    assert http.get("/sessions/done/next").status_code == 409


def test_human_session_matches_simulated_oracle(client):
    """Ground-truth human answers reproduce the simulated-oracle sequence."""
    from trajal.active_learning import SessionConfig, run_session
    from trajal.embedding import load_embedding
    from trajal.trajectories import TrajectoryStore, load_manifest, load_trajectories

    http, truth, data, _ = client
    create_session(http, session_id="equiv", budget=6, strategy="margin")
    label_to_completion(http, truth, "equiv")
    log = http.get("/sessions/equiv/log").json()
    human_sequence = [(r["step"], r["trajectory_id"], r["label"]) for r in log["records"]]

    spec, traj_file, partition = load_manifest(data / "manifest.json")
    store = TrajectoryStore(load_trajectories(data / traj_file))
    points = load_embedding(data / "embedding.jsonl")
    label_map = {i: store.label_of(i) for i in store.ids()}
    config = SessionConfig(strategy="margin", budget=6, seed=1, svm_C=10.0, svm_gamma=0.05)
    simulated = run_session(config, partition, points, label_map)
    sim_sequence = [(r.step, r.trajectory_id, r.label) for r in simulated.query_log]
    assert human_sequence == sim_sequence
    metrics = http.get("/sessions/equiv/metrics").json()["values"]
    assert metrics == pytest.approx(simulated.metric_history, abs=1e-12)


def test_crash_restart_reconstructs_state(client):
    http, truth, data, journals = client
    create_session(http, session_id="crash", budget=5)
    # label two points, then "crash" by building a fresh app over the same dirs
    for _ in range(2):
        nxt = http.get("/sessions/crash/next").json()
        http.post(
            "/sessions/crash/labels",
            json={
                "trajectory_id": nxt["trajectory_id"],
                "label": truth[nxt["trajectory_id"]],
                "step": nxt["step"],
            },
        )
    before_metrics = http.get("/sessions/crash/metrics").json()
    before_log = http.get("/sessions/crash/log").json()
    before_next = http.get("/sessions/crash/next").json()

    revived = TestClient(create_app(data_dir=data, journal_dir=journals))
    assert revived.get("/sessions/crash/metrics").json() == before_metrics
    assert revived.get("/sessions/crash/log").json() == before_log
    assert revived.get("/sessions/crash/next").json() == before_next
    # the revived instance continues the session seamlessly
    label_to_completion(revived, truth, "crash")
    assert revived.get("/sessions/crash").json()["status"] == "Complete"


def test_discovery_session_candidates_include_unknown(client):
    http, truth, _, _ = client
    create_session(http, session_id="disc", budget=2, mode="discovery")
    nxt = http.get("/sessions/disc/next").json()
    assert nxt["candidate_labels"][-1] == "unknown"
    response = http.post(
        "/sessions/disc/labels",
        json={"trajectory_id": nxt["trajectory_id"], "label": "unknown", "step": nxt["step"]},
    )
    assert response.status_code == 200


@pytest.mark.slow
def test_sigkill_process_restart_preserves_session(artifacts, tmp_path):
    """OS-level variant of crash-restart: SIGKILL a live server mid-session."""
    import os
    import signal
    import subprocess
    import sys
    import time
    import urllib.request

    tmp, data, truth = artifacts
    journals = tmp_path / "journals"

    def start(port):
        proc = subprocess.Popen(
            [
                sys.executable, "-m", "trajal.cli", "serve",
                "--port", str(port),
                "--data-dir", str(data),
                "--journal-dir", str(journals),
            ],
            env=dict(os.environ),
        )
        for _ in range(100):
            try:
                urllib.request.urlopen(f"http://127.0.0.1:{port}/docs", timeout=0.3)
                return proc
            except Exception:
                time.sleep(0.2)
        proc.kill()
        raise RuntimeError("service did not come up")

    def request(port, path, payload=None):
        url = f"http://127.0.0.1:{port}{path}"
        if payload is None:
            req = urllib.request.Request(url)
        else:
            req = urllib.request.Request(
                url, data=json.dumps(payload).encode(), headers={"Content-Type": "application/json"}
            )
        with urllib.request.urlopen(req) as response:
            return json.loads(response.read())

    proc = start(8951)
    try:
        request(
            8951,
            "/sessions",
            {
                "manifest": "manifest.json",
                "embedding": "embedding.jsonl",
                "session_id": "sigkill",
                "config": {"strategy": "entropy", "budget": 3, "seed": 1},
            },
        )
        nxt = request(8951, "/sessions/sigkill/next")
        request(
            8951,
            "/sessions/sigkill/labels",
            {"trajectory_id": nxt["trajectory_id"], "label": truth[nxt["trajectory_id"]], "step": nxt["step"]},
        )
        before_log = request(8951, "/sessions/sigkill/log")
        before_metrics = request(8951, "/sessions/sigkill/metrics")
        before_next = request(8951, "/sessions/sigkill/next")
    finally:
        proc.send_signal(signal.SIGKILL)
        proc.wait()

    proc2 = start(8952)
    try:
        assert request(8952, "/sessions/sigkill/log") == before_log
        assert request(8952, "/sessions/sigkill/metrics") == before_metrics
        assert request(8952, "/sessions/sigkill/next") == before_next
    finally:
        proc2.send_signal(signal.SIGKILL)
        proc2.wait()
