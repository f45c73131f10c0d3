import json
import socket
import threading
import time

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from tinydigits.network import model_load, model_save, network_new, NetworkConfig
from tinydigits.service import create_app


DEFAULT_CONFIG = {
    "hidden": [{"kind": "dense", "units": 20, "activation": "relu"}],
    "output_units": 10,
    "output_activation": "softmax",
    "init": "uniform_scaled",
    "seed": 42,
}


@pytest.fixture()
def client():
    return TestClient(create_app())


@pytest.fixture()
def live_client():
    """Real uvicorn server: needed where requests must overlap in time
    (the in-process test transport buffers streaming bodies)."""
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    server = uvicorn.Server(
        uvicorn.Config(create_app(), host="127.0.0.1", port=port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.02)
    with httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=60) as c:
        yield c
    server.should_exit = True
    thread.join(timeout=10)


def make_dataset(client, per_class=5, seed=7):
    r = client.post("/api/datasets", json={"kind": "digits", "per_class": per_class, "seed": seed})
    assert r.status_code == 201
    return r.json()["dataset_id"]


def make_model(client, seed=42):
    config = dict(DEFAULT_CONFIG, seed=seed)
    r = client.post("/api/models", json={"config": config})
    assert r.status_code == 201
    return r.json()["model_id"]


def run_training(client, model_id, dataset_id, epochs=3, **kwargs):
    body = {
        "dataset_id": dataset_id,
        "fraction": kwargs.get("fraction", 0.8),
        "split_seed": kwargs.get("split_seed", 1),
        "hyperparams": {
            "learning_rate": kwargs.get("learning_rate", 0.1),
            "epochs": epochs,
            "batch_size": kwargs.get("batch_size", 16),
            "shuffle_seed": kwargs.get("shuffle_seed", 2),
        },
    }
    with client.stream("POST", f"/api/models/{model_id}/train", json=body) as resp:
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("text/event-stream")
        text = "".join(resp.iter_text())
    events = []
    for block in text.strip().split("\n\n"):
        lines = dict(line.split(": ", 1) for line in block.splitlines())
        events.append((lines["event"], json.loads(lines["data"])))
    return events


# --- model lifecycle ---------------------------------------------------------

def test_create_model_returns_unique_ids(client):
    a = make_model(client)
    b = make_model(client)
    assert a and b and a != b


def test_invalid_config_field_path(client):
    config = dict(DEFAULT_CONFIG, hidden=[{"kind": "dense", "units": 0, "activation": "relu"}])
    r = client.post("/api/models", json={"config": config})
    assert r.status_code == 400
    body = r.json()
    assert body["status"] == 400
    assert body["field"] == "config.hidden[0].units"


def test_missing_config_rejected(client):
    r = client.post("/api/models", json={})
    assert r.status_code == 400
    assert r.json()["field"] == "config"


def test_unknown_model_404(client):
    for url in ("/api/models/nope/history", "/api/models/nope/export"):
        r = client.get(url)
        assert r.status_code == 404
        assert r.json()["code"] == "model_not_found"


# --- training stream ---------------------------------------------------------

def test_training_streams_epochs_then_summary(client):
    ds = make_dataset(client)
    model = make_model(client)
    events = run_training(client, model, ds, epochs=3)
    kinds = [k for k, _ in events]
    assert kinds == ["epoch", "epoch", "epoch", "summary"]
    epochs = [payload["epoch"] for k, payload in events if k == "epoch"]
    assert epochs == [1, 2, 3]
    summary = events[-1][1]
    assert summary["epochs"] == 3
    assert summary["train_loss"] == events[-2][1]["train_loss"]


def test_history_persists_after_training(client):
    ds = make_dataset(client)
    model = make_model(client)
    events = run_training(client, model, ds, epochs=3)
    r = client.get(f"/api/models/{model}/history")
    assert r.status_code == 200
    history = r.json()
    assert len(history) == 3
    assert history[-1]["train_loss"] == events[-1][1]["train_loss"]


def test_history_of_untrained_model_is_empty(client):
    model = make_model(client)
    r = client.get(f"/api/models/{model}/history")
    assert r.status_code == 200
    assert r.json() == []


def test_unknown_dataset_404(client):
    model = make_model(client)
    r = client.post(
        f"/api/models/{model}/train",
        json={"dataset_id": "nope", "hyperparams": {"epochs": 1}},
    )
    assert r.status_code == 404


def test_class_count_mismatch_400(client):
    ds = make_dataset(client)
    config = dict(DEFAULT_CONFIG, output_units=5)
    r = client.post("/api/models", json={"config": config})
    model = r.json()["model_id"]
    r = client.post(
        f"/api/models/{model}/train",
        json={"dataset_id": ds, "hyperparams": {"epochs": 1}},
    )
    assert r.status_code == 400
    assert r.json()["code"] == "class_count_mismatch"


def test_concurrent_train_rejected(live_client):
    ds = make_dataset(live_client, per_class=20)
    model = make_model(live_client)
    body = {
        "dataset_id": ds,
        "split_seed": 1,
        "hyperparams": {"epochs": 800, "shuffle_seed": 2},
    }
    with live_client.stream("POST", f"/api/models/{model}/train", json=body) as resp:
        iterator = resp.iter_lines()
        next(iterator)  # first epoch event: training is underway
        second = live_client.post(f"/api/models/{model}/train", json=body)
        assert second.status_code == 409
        assert second.json()["code"] == "already_training"
        for _ in iterator:
            pass
    # Once the stream completes the session is idle again.
    after = live_client.post(
        f"/api/models/{model}/train",
        json={"dataset_id": ds, "hyperparams": {"epochs": 1}},
    )
    assert after.status_code == 200


def test_reads_rejected_mid_training(live_client):
    ds = make_dataset(live_client, per_class=20)
    model = make_model(live_client)
    body = {
        "dataset_id": ds,
        "split_seed": 1,
        "hyperparams": {"epochs": 800, "shuffle_seed": 2},
    }
    with live_client.stream("POST", f"/api/models/{model}/train", json=body) as resp:
        iterator = resp.iter_lines()
        next(iterator)
        predict_r = live_client.post(
            f"/api/models/{model}/predict", json={"pixels": [0.0] * 36}
        )
        export_r = live_client.get(f"/api/models/{model}/export")
        history_r = live_client.get(f"/api/models/{model}/history")
        for _ in iterator:
            pass
    assert predict_r.status_code == 409
    assert export_r.status_code == 409
    # History stays readable during training and serves completed epochs.
    assert history_r.status_code == 200
    assert 0 <= len(history_r.json()) <= 800


# --- predict -----------------------------------------------------------------

def test_predict_validates_pixels(client):
    model = make_model(client)
    r = client.post(f"/api/models/{model}/predict", json={"pixels": [0.0] * 37})
    assert r.status_code == 400
    assert r.json()["field"] == "pixels"
    r = client.post(f"/api/models/{model}/predict", json={"pixels": [2.0] + [0.0] * 35})
    assert r.status_code == 400


def test_predict_returns_heatmap_matching_local_forward(client):
    from tinydigits.datasets import glyph_grid
    from tinydigits.network import forward
    from tinydigits.viz import activations_to_heatmap, heatmap_to_dicts

    model = make_model(client, seed=11)
    pixels = list(glyph_grid(3))
    r = client.post(f"/api/models/{model}/predict", json={"pixels": pixels})
    assert r.status_code == 200
    payload = r.json()

    local_net = network_new(NetworkConfig(seed=11))
    local_heat = heatmap_to_dicts(activations_to_heatmap(forward(local_net, pixels)))
    assert payload["activations"] == local_heat
    assert payload["prediction"]["probabilities"] == payload["probabilities"]
    assert len(payload["probabilities"]) == 10


# --- diagram / export / import ------------------------------------------------

def test_diagram_over_the_wire(client):
    import xml.etree.ElementTree as ET

    model = make_model(client)
    pixels = ",".join(["0.5"] * 36)
    r = client.get(f"/api/models/{model}/diagram", params={"dataset_pixels": pixels})
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("image/svg+xml")
    root = ET.fromstring(r.text)
    ns = "{http://www.w3.org/2000/svg}"
    assert len(list(root.iter(f"{ns}rect"))) == 66


def test_diagram_requires_pixels(client):
    model = make_model(client)
    r = client.get(f"/api/models/{model}/diagram")
    assert r.status_code == 400


def test_export_import_round_trip(client):
    ds = make_dataset(client)
    model = make_model(client)
    run_training(client, model, ds, epochs=5)
    exported = client.get(f"/api/models/{model}/export")
    assert exported.status_code == 200

    r = client.post("/api/models/import", json=exported.json())
    assert r.status_code == 201
    clone_id = r.json()["model_id"]

    pixels = [0.25] * 36
    a = client.post(f"/api/models/{model}/predict", json={"pixels": pixels}).json()
    b = client.post(f"/api/models/{clone_id}/predict", json={"pixels": pixels}).json()
    assert a["probabilities"] == b["probabilities"]


def test_import_with_class_names(client):
    net = network_new(NetworkConfig(seed=1))
    doc = json.loads(model_save(net))
    doc["class_names"] = ["not-a-digit"] + [str(d) for d in range(1, 10)]
    r = client.post("/api/models/import", json=doc)
    assert r.status_code == 201
    model = r.json()["model_id"]
    pred = client.post(f"/api/models/{model}/predict", json={"pixels": [0.0] * 36}).json()
    assert pred["prediction"]["class_name"] in doc["class_names"]


def test_import_rejects_bad_document(client):
    r = client.post("/api/models/import", json={"format_version": 999, "config": {}, "layers": []})
    assert r.status_code == 400


# --- datasets ----------------------------------------------------------------

def test_dataset_summary_counts(client):
    r = client.post("/api/datasets", json={"kind": "digits", "per_class": 20, "seed": 7})
    summary = r.json()["summary"]
    assert summary["counts"] == [20] * 10
    assert summary["classes"] == [str(d) for d in range(10)]


def test_random_dataset_generator(client):
    r = client.post("/api/datasets", json={"kind": "random", "n": 8, "density": 0.5, "seed": 3})
    assert r.status_code == 201
    assert r.json()["summary"]["counts"] == [8]


def test_unknown_generator_kind(client):
    r = client.post("/api/datasets", json={"kind": "mnist"})
    assert r.status_code == 400


def test_surgery_mints_new_id_and_preserves_original(client):
    ds = make_dataset(client)
    r = client.post(
        f"/api/datasets/{ds}/surgery",
        json={"replace_class": {"class_index": 0, "seed": 5}},
    )
    assert r.status_code == 201
    new_id = r.json()["dataset_id"]
    assert new_id != ds
    assert r.json()["summary"]["classes"][0] == "not-a-digit"
    original = client.get(f"/api/datasets/{ds}").json()
    assert original["classes"][0] == "0"


def test_surgery_rebalance_counts(client):
    ds = make_dataset(client, per_class=20)
    r = client.post(
        f"/api/datasets/{ds}/surgery",
        json={"rebalance": {"proportions": {"7": 0.1}, "seed": 5}},
    )
    assert r.status_code == 201
    assert r.json()["summary"]["counts"][7] == 2


def test_surgery_requires_exactly_one_operation(client):
    ds = make_dataset(client)
    r = client.post(f"/api/datasets/{ds}/surgery", json={})
    assert r.status_code == 400
    r = client.post(
        f"/api/datasets/{ds}/surgery",
        json={
            "replace_class": {"class_index": 0},
            "rebalance": {"proportions": {"1": 0.5}},
        },
    )
    assert r.status_code == 400


def test_get_dataset_includes_examples(client):
    ds = make_dataset(client, per_class=2)
    doc = client.get(f"/api/datasets/{ds}").json()
    assert len(doc["examples"]) == 20
    assert all(len(ex["pixels"]) == 36 for ex in doc["examples"])


# --- persistence ---------------------------------------------------------------

def test_state_dir_round_trip(tmp_path):
    state = tmp_path / "state"
    app = create_app(state_dir=state)
    client = TestClient(app)
    ds = make_dataset(client)
    model = make_model(client, seed=13)
    run_training(client, model, ds, epochs=3)
    pixels = [0.5] * 36
    before = client.post(f"/api/models/{model}/predict", json={"pixels": pixels}).json()

    reloaded = TestClient(create_app(state_dir=state))
    after = reloaded.post(f"/api/models/{model}/predict", json={"pixels": pixels}).json()
    assert after == before
    history = reloaded.get(f"/api/models/{model}/history").json()
    assert len(history) == 3
    counts = reloaded.get(f"/api/datasets/{ds}").json()["counts"]
    assert counts == [5] * 10
    # New ids must not collide with reloaded ones.
    fresh = make_model(reloaded)
    assert fresh != model


# --- cross-interface equivalence ----------------------------------------------

def test_api_metrics_equal_library_metrics(client):
    from tinydigits.datasets import CANONICAL_GLYPHS, VariantSpec, make_digit_dataset
    from tinydigits.training import Hyperparams, split, train

    ds_id = make_dataset(client, per_class=5, seed=7)
    model = make_model(client, seed=42)
    events = run_training(
        client, model, ds_id, epochs=40, split_seed=1, shuffle_seed=2
    )
    summary = events[-1][1]

    ds = make_digit_dataset(CANONICAL_GLYPHS, VariantSpec(per_class=5, seed=7))
    net = network_new(NetworkConfig(seed=42))
    history = train(
        net, split(ds, 0.8, 1), Hyperparams(epochs=40, shuffle_seed=2)
    )
    final = history.epochs[-1]
    assert summary["train_loss"] == final.train_loss
    assert summary["train_acc"] == final.train_acc
    assert summary["val_loss"] == final.val_loss
    assert summary["val_acc"] == final.val_acc

    exported = client.get(f"/api/models/{model}/export").text
    assert model_load(exported).layers[0].weights.tobytes() == net.layers[0].weights.tobytes()
