"""HTTP API over the toolkit: datasets, models, training, prediction, figures.

A small single-user service with an in-memory registry and optional
directory-backed persistence. Sessions are isolated: training holds
exclusive access to its model (a second train, or any read that could see
torn weights, is rejected with 409), while the history endpoint serves the
epochs completed so far under a consistent snapshot. Training progress
streams as server-sent events, one ``epoch`` event per epoch followed by a
``summary`` event.
"""

import json
import queue
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .datasets import (
    CANONICAL_GLYPHS,
    Dataset,
    LabeledImage,
    VariantSpec,
    dataset_load,
    dataset_save,
    make_digit_dataset,
    make_random_images,
    rebalance_classes,
    replace_class_with_random,
)
from .errors import ConfigError, DocumentError
from .network import (
    Network,
    as_pixels,
    config_from_dict,
    forward,
    model_load,
    model_save,
    network_new,
)
from .training import (
    EpochRecord,
    Hyperparams,
    predict,
    split,
    train,
)
from .viz import activations_to_heatmap, heatmap_to_dicts, render_diagram


class ApiException(Exception):
    """Carried to the client as the standard error body."""

    def __init__(self, status: int, code: str, message: str, field_path: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field_path = field_path

    def body(self) -> dict:
        body = {"status": self.status, "code": self.code, "message": self.message}
        if self.field_path:
            body["field"] = self.field_path
        return body


def _bad_request(code: str, message: str, field_path: str | None = None) -> ApiException:
    return ApiException(400, code, message, field_path)


@dataclass
class ModelSession:
    id: str
    network: Network
    class_names: list[str]
    status: str = "idle"  # "idle" | "training"
    history: list[EpochRecord] = field(default_factory=list)


def _epoch_dict(r: EpochRecord) -> dict:
    return {
        "epoch": r.epoch,
        "train_loss": r.train_loss,
        "train_acc": r.train_acc,
        "val_loss": r.val_loss,
        "val_acc": r.val_acc,
    }


class Registry:
    """Thread-safe store of model sessions and datasets."""

    def __init__(self, state_dir: str | Path | None = None):
        self._lock = threading.Lock()
        self.models: dict[str, ModelSession] = {}
        self.datasets: dict[str, Dataset] = {}
        self._next_model = 1
        self._next_dataset = 1
        self.state_dir = Path(state_dir) if state_dir else None
        if self.state_dir:
            self._load_state()

    # -- persistence --------------------------------------------------------

    def _load_state(self):
        models_dir = self.state_dir / "models"
        datasets_dir = self.state_dir / "datasets"
        for path in sorted(datasets_dir.glob("*.json")) if datasets_dir.is_dir() else []:
            ds_id = path.stem
            self.datasets[ds_id] = dataset_load(path.read_text(encoding="utf-8"))
            self._next_dataset = max(self._next_dataset, _id_number(ds_id) + 1)
        for path in sorted(models_dir.glob("*.json")) if models_dir.is_dir() else []:
            doc = json.loads(path.read_text(encoding="utf-8"))
            net = model_load(json.dumps(doc["model"]))
            session = ModelSession(
                id=path.stem,
                network=net,
                class_names=list(doc["class_names"]),
                history=[EpochRecord(**r) for r in doc.get("history", [])],
            )
            self.models[session.id] = session
            self._next_model = max(self._next_model, _id_number(session.id) + 1)

    def _flush_model(self, session: ModelSession):
        if not self.state_dir:
            return
        path = self.state_dir / "models" / f"{session.id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {
            "model": json.loads(model_save(session.network)),
            "class_names": session.class_names,
            "history": [_epoch_dict(r) for r in session.history],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    def _flush_dataset(self, ds_id: str):
        if not self.state_dir:
            return
        path = self.state_dir / "datasets" / f"{ds_id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dataset_save(self.datasets[ds_id]), encoding="utf-8")

    # -- models --------------------------------------------------------------

    def add_model(self, network: Network, class_names: list[str]) -> ModelSession:
        with self._lock:
            session = ModelSession(f"m{self._next_model:04d}", network, class_names)
            self._next_model += 1
            self.models[session.id] = session
            self._flush_model(session)
            return session

    def get_model(self, model_id: str) -> ModelSession:
        with self._lock:
            session = self.models.get(model_id)
        if session is None:
            raise ApiException(404, "model_not_found", f"no model {model_id!r}")
        return session

    def readable_model(self, model_id: str) -> ModelSession:
        session = self.get_model(model_id)
        with self._lock:
            if session.status == "training":
                raise ApiException(
                    409, "model_training", f"model {model_id!r} is training"
                )
        return session

    def begin_training(self, model_id: str, class_names: list[str]):
        session = self.get_model(model_id)
        with self._lock:
            if session.status == "training":
                raise ApiException(
                    409, "already_training", f"model {model_id!r} is already training"
                )
            session.status = "training"
            session.class_names = class_names
            session.history = []
        return session

    def append_epoch(self, session: ModelSession, record: EpochRecord):
        with self._lock:
            session.history.append(record)

    def finish_training(self, session: ModelSession):
        with self._lock:
            session.status = "idle"
            self._flush_model(session)

    def history_snapshot(self, model_id: str) -> list[EpochRecord]:
        session = self.get_model(model_id)
        with self._lock:
            return list(session.history)

    # -- datasets ------------------------------------------------------------

    def add_dataset(self, ds: Dataset) -> str:
        with self._lock:
            ds_id = f"d{self._next_dataset:04d}"
            self._next_dataset += 1
            self.datasets[ds_id] = ds
            self._flush_dataset(ds_id)
            return ds_id

    def get_dataset(self, dataset_id: str) -> Dataset:
        with self._lock:
            ds = self.datasets.get(dataset_id)
        if ds is None:
            raise ApiException(404, "dataset_not_found", f"no dataset {dataset_id!r}")
        return ds


def _id_number(text: str) -> int:
    match = re.search(r"(\d+)$", text)
    return int(match.group(1)) if match else 0


def _need(payload: dict, key: str, path: str = ""):
    full = f"{path}.{key}" if path else key
    if not isinstance(payload, dict) or key not in payload:
        raise _bad_request("missing_field", f"missing required field {full!r}", full)
    return payload[key]


def _need_number(payload: dict, key: str, default=None, path: str = ""):
    full = f"{path}.{key}" if path else key
    value = payload.get(key, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise _bad_request("bad_field", f"{full} must be a number", full)
    return value


def _need_int(payload: dict, key: str, default=None, path: str = ""):
    full = f"{path}.{key}" if path else key
    value = payload.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise _bad_request("bad_field", f"{full} must be an integer", full)
    return value


def _parse_pixels(payload: dict) -> tuple[float, ...]:
    pixels = _need(payload, "pixels")
    if not isinstance(pixels, list):
        raise _bad_request("bad_pixels", "pixels must be a list of 36 numbers", "pixels")
    try:
        return as_pixels(pixels)
    except (TypeError, ValueError) as e:
        raise _bad_request("bad_pixels", str(e), "pixels")


def _dataset_summary(ds_id: str, ds: Dataset) -> dict:
    return {
        "dataset_id": ds_id,
        "name": ds.name,
        "classes": list(ds.classes),
        "counts": list(ds.class_counts()),
    }


def create_app(
    state_dir: str | Path | None = None,
    cors_origin: str | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="tinydigits service", version="0.1.0")
    registry = Registry(state_dir)
    app.state.registry = registry

    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ApiException)
    async def _api_exception(request: Request, exc: ApiException):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def _validation_exception(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"status": 400, "code": "bad_request", "message": str(exc)},
        )

    # -- models ---------------------------------------------------------------

    @app.post("/api/models", status_code=201)
    async def create_model(payload: dict):
        config_doc = _need(payload, "config")
        try:
            config = config_from_dict(config_doc, "config")
            network = network_new(config)
        except (DocumentError, ConfigError) as e:
            raise _bad_request("invalid_config", str(e), getattr(e, "path", None))
        class_names = [str(i) for i in range(config.output_units)]
        session = registry.add_model(network, class_names)
        return {"model_id": session.id}

    @app.post("/api/models/import", status_code=201)
    async def import_model(payload: dict):
        if not isinstance(payload, dict):
            raise _bad_request("bad_request", "expected a model document object")
        document = dict(payload)
        class_names = document.pop("class_names", None)
        try:
            network = model_load(json.dumps(document))
        except DocumentError as e:
            raise _bad_request("invalid_model", str(e), e.path or None)
        if class_names is None:
            class_names = [str(i) for i in range(network.config.output_units)]
        if (
            not isinstance(class_names, list)
            or len(class_names) != network.config.output_units
            or any(not isinstance(c, str) for c in class_names)
        ):
            raise _bad_request(
                "bad_field",
                f"class_names must list {network.config.output_units} strings",
                "class_names",
            )
        session = registry.add_model(network, list(class_names))
        return {"model_id": session.id}

    @app.get("/api/models/{model_id}/export")
    async def export_model(model_id: str):
        session = registry.readable_model(model_id)
        return Response(content=model_save(session.network), media_type="application/json")

    @app.get("/api/models/{model_id}/history")
    async def model_history(model_id: str):
        records = registry.history_snapshot(model_id)
        return [_epoch_dict(r) for r in records]

    @app.post("/api/models/{model_id}/predict")
    async def predict_endpoint(model_id: str, payload: dict):
        session = registry.readable_model(model_id)
        pixels = _parse_pixels(payload)
        record = forward(session.network, pixels)
        prediction = predict(session.network, pixels, session.class_names)
        heat = activations_to_heatmap(record)
        return {
            "prediction": {
                "class_index": prediction.class_index,
                "class_name": prediction.class_name,
                "probabilities": list(prediction.probabilities),
                "status": prediction.status,
            },
            "probabilities": list(prediction.probabilities),
            "activations": heatmap_to_dicts(heat),
        }

    @app.get("/api/models/{model_id}/diagram")
    async def diagram_endpoint(model_id: str, dataset_pixels: str = ""):
        session = registry.readable_model(model_id)
        if not dataset_pixels:
            raise _bad_request(
                "missing_field",
                "dataset_pixels query parameter (36 comma-separated values) required",
                "dataset_pixels",
            )
        try:
            pixels = as_pixels(float(v) for v in dataset_pixels.split(","))
        except (TypeError, ValueError) as e:
            raise _bad_request("bad_pixels", str(e), "dataset_pixels")
        svg = render_diagram(forward(session.network, pixels))
        return Response(content=svg, media_type="image/svg+xml")

    @app.post("/api/models/{model_id}/train")
    async def train_endpoint(model_id: str, payload: dict):
        dataset_id = _need(payload, "dataset_id")
        ds = registry.get_dataset(dataset_id)
        fraction = _need_number(payload, "fraction", 0.8)
        split_seed = _need_int(payload, "split_seed", 0)
        hp_doc = payload.get("hyperparams", {})
        if not isinstance(hp_doc, dict):
            raise _bad_request("bad_field", "hyperparams must be an object", "hyperparams")
        try:
            hp = Hyperparams(
                learning_rate=_need_number(hp_doc, "learning_rate", 0.1, "hyperparams"),
                epochs=_need_int(hp_doc, "epochs", 500, "hyperparams"),
                batch_size=_need_int(hp_doc, "batch_size", 16, "hyperparams"),
                shuffle_seed=_need_int(hp_doc, "shuffle_seed", 0, "hyperparams"),
            )
            split_ds = split(ds, fraction, split_seed)
        except ValueError as e:
            raise _bad_request("bad_request", str(e))

        session = registry.get_model(model_id)
        if session.network.config.output_units != len(ds.classes):
            raise _bad_request(
                "class_count_mismatch",
                f"model has {session.network.config.output_units} outputs but "
                f"dataset {dataset_id!r} has {len(ds.classes)} classes",
            )
        session = registry.begin_training(model_id, list(ds.classes))

        events: queue.Queue = queue.Queue()

        def observer(record: EpochRecord):
            registry.append_epoch(session, record)
            events.put(("epoch", record))

        def worker():
            try:
                history = train(session.network, split_ds, hp, observer=observer)
                events.put(("summary", history))
            except Exception as e:  # surfaced to the client as an error event
                events.put(("error", e))

        threading.Thread(target=worker, daemon=True).start()

        def stream():
            while True:
                kind, value = events.get()
                if kind == "epoch":
                    yield f"event: epoch\ndata: {json.dumps(_epoch_dict(value))}\n\n"
                elif kind == "summary":
                    registry.finish_training(session)
                    final = value.epochs[-1]
                    summary = {
                        "epochs": len(value.epochs),
                        "train_loss": final.train_loss,
                        "train_acc": final.train_acc,
                        "val_loss": final.val_loss,
                        "val_acc": final.val_acc,
                    }
                    yield f"event: summary\ndata: {json.dumps(summary)}\n\n"
                    return
                else:
                    registry.finish_training(session)
                    message = json.dumps({"message": str(value)})
                    yield f"event: error\ndata: {message}\n\n"
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- datasets ---------------------------------------------------------------

    @app.post("/api/datasets", status_code=201)
    async def create_dataset(payload: dict):
        kind = _need(payload, "kind")
        seed = _need_int(payload, "seed", 0)
        try:
            if kind == "digits":
                ds = make_digit_dataset(
                    CANONICAL_GLYPHS,
                    VariantSpec(
                        per_class=_need_int(payload, "per_class", 20),
                        flip_prob=_need_number(payload, "flip_prob", 0.10),
                        shift_max=_need_int(payload, "shift_max", 0),
                        seed=seed,
                    ),
                )
            elif kind == "random":
                images = make_random_images(
                    _need_int(payload, "n", 20),
                    _need_number(payload, "density", 0.5),
                    seed,
                )
                ds = Dataset(
                    "random-images",
                    ("random",),
                    tuple(LabeledImage(im, 0, "random") for im in images),
                )
            else:
                raise _bad_request(
                    "bad_field", f"unknown generator kind {kind!r}", "kind"
                )
        except ValueError as e:
            raise _bad_request("bad_request", str(e))
        ds_id = registry.add_dataset(ds)
        return {"dataset_id": ds_id, "summary": _dataset_summary(ds_id, ds)}

    @app.get("/api/datasets/{dataset_id}")
    async def get_dataset(dataset_id: str):
        ds = registry.get_dataset(dataset_id)
        document = json.loads(dataset_save(ds))
        document["dataset_id"] = dataset_id
        document["counts"] = list(ds.class_counts())
        return document

    @app.post("/api/datasets/{dataset_id}/surgery", status_code=201)
    async def dataset_surgery(dataset_id: str, payload: dict):
        ds = registry.get_dataset(dataset_id)
        has_replace = "replace_class" in payload
        has_rebalance = "rebalance" in payload
        if has_replace == has_rebalance:
            raise _bad_request(
                "bad_request", "provide exactly one of replace_class or rebalance"
            )
        try:
            if has_replace:
                args = payload["replace_class"]
                if not isinstance(args, dict):
                    raise _bad_request(
                        "bad_field", "replace_class must be an object", "replace_class"
                    )
                new_ds = replace_class_with_random(
                    ds,
                    _need_int(args, "class_index", path="replace_class"),
                    str(args.get("new_name", "not-a-digit")),
                    _need_number(args, "density", 0.5, "replace_class"),
                    _need_int(args, "seed", 0, "replace_class"),
                )
            else:
                args = payload["rebalance"]
                if not isinstance(args, dict):
                    raise _bad_request(
                        "bad_field", "rebalance must be an object", "rebalance"
                    )
                proportions_doc = _need(args, "proportions", "rebalance")
                if not isinstance(proportions_doc, dict):
                    raise _bad_request(
                        "bad_field",
                        "proportions must map class indexes to fractions",
                        "rebalance.proportions",
                    )
                try:
                    proportions = {
                        int(k): float(v) for k, v in proportions_doc.items()
                    }
                except (TypeError, ValueError):
                    raise _bad_request(
                        "bad_field",
                        "proportions must map class indexes to fractions",
                        "rebalance.proportions",
                    )
                new_ds = rebalance_classes(
                    ds, proportions, _need_int(args, "seed", 0, "rebalance")
                )
        except ValueError as e:
            raise _bad_request("bad_request", str(e))
        new_id = registry.add_dataset(new_ds)
        return {"dataset_id": new_id, "summary": _dataset_summary(new_id, new_ds)}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
