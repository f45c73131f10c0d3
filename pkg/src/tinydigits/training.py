"""Mini-batch SGD training, stratified splitting, prediction, and evaluation.

Training is deterministic end to end: the initial network bytes, the split,
and the hyperparameters (shuffle seed included) fully determine the final
weights and the per-epoch history. The network is mutated in place and
needs exclusive access for the duration of a train() call; prediction and
evaluation are read-only.
"""

import json
from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .errors import ConfigError, DocumentError
from .network import (
    INPUT_PIXELS,
    PROB_FLOOR,
    Network,
    _backprop,
    _forward_stack,
    as_pixels,
)
from .rng import Rng

# A prediction is "confident" only when the top probability beats the
# runner-up by at least this margin.
UNSURE_MARGIN = 0.25


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    epochs: int = 500
    batch_size: int = 16
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    validation: Dataset
    fraction: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass(frozen=True)
class TrainingHistory:
    epochs: tuple[EpochRecord, ...]


@dataclass(frozen=True)
class Prediction:
    class_index: int
    class_name: str
    probabilities: tuple[float, ...]
    status: str  # "confident" | "unsure"


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: tuple[tuple[int, ...], ...]  # row = true class, column = predicted
    per_class_recall: tuple[float, ...]


def split(ds: Dataset, fraction: float, seed: int) -> SplitDataset:
    """Stratified train/validation split.

    Per class (ascending index): shuffle that class's examples with the
    seeded stream, send round(fraction * count) of them to train (at least
    1, and at most count - 1 whenever the class has 2 or more examples),
    the rest to validation. Each side keeps the original dataset order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    if not ds.examples:
        raise ValueError("cannot split an empty dataset")
    rng = Rng(seed)
    train_slots: set[int] = set()
    for class_index in range(len(ds.classes)):
        slots = [i for i, ex in enumerate(ds.examples) if ex.class_index == class_index]
        if not slots:
            continue
        count = len(slots)
        n_train = int(fraction * count + 0.5)
        n_train = max(1, n_train)
        if count >= 2:
            n_train = min(n_train, count - 1)
        rng.shuffle(slots)
        train_slots.update(slots[:n_train])
    train = Dataset(
        f"{ds.name}-train",
        ds.classes,
        tuple(ex for i, ex in enumerate(ds.examples) if i in train_slots),
    )
    validation = Dataset(
        f"{ds.name}-validation",
        ds.classes,
        tuple(ex for i, ex in enumerate(ds.examples) if i not in train_slots),
    )
    return SplitDataset(train, validation, fraction)


def _as_arrays(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    if not ds.examples:
        return (
            np.empty((0, INPUT_PIXELS), dtype=np.float64),
            np.empty((0,), dtype=np.int64),
        )
    X = np.asarray([ex.image for ex in ds.examples], dtype=np.float64)
    y = np.asarray([ex.class_index for ex in ds.examples], dtype=np.int64)
    return X, y


def _metrics(net: Network, X: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over a full set (0, 0 when empty)."""
    if len(y) == 0:
        return 0.0, 0.0
    probs = _forward_stack(net, X)[-1]
    p_true = probs[np.arange(len(y)), y]
    loss = float(np.mean(-np.log(np.clip(p_true, PROB_FLOOR, 1.0))))
    acc = float(np.mean(np.argmax(probs, axis=1) == y))
    return loss, acc


def train(
    net: Network,
    split_ds: SplitDataset,
    hp: Hyperparams = Hyperparams(),
    observer=None,
) -> TrainingHistory:
    """Mini-batch SGD over the train set, mutating the network in place.

    Each epoch reshuffles the train set with the seeded stream, walks it in
    batches of hp.batch_size (the last batch may be short), averages the
    gradients within each batch, and applies w <- w - lr * grad. Epoch
    metrics are computed on the full train and validation sets after the
    epoch's updates; the observer, when given, sees each EpochRecord as it
    is appended.
    """
    if net.config.output_units != len(split_ds.train.classes):
        raise ConfigError(
            f"network has {net.config.output_units} outputs but the dataset "
            f"has {len(split_ds.train.classes)} classes"
        )
    X_train, y_train = _as_arrays(split_ds.train)
    X_val, y_val = _as_arrays(split_ds.validation)
    if len(y_train) == 0:
        raise ValueError("train set is empty")
    rng = Rng(hp.shuffle_seed)
    order = list(range(len(y_train)))
    records = []
    for epoch in range(1, hp.epochs + 1):
        rng.shuffle(order)
        for start in range(0, len(order), hp.batch_size):
            batch = order[start : start + hp.batch_size]
            Xb = X_train[batch]
            yb = y_train[batch]
            _, grads = _backprop(net, Xb, yb)
            scale = hp.learning_rate / len(batch)
            for layer, dw, db in zip(net.layers, grads.weights, grads.biases):
                layer.weights -= scale * dw
                layer.biases -= scale * db
        train_loss, train_acc = _metrics(net, X_train, y_train)
        val_loss, val_acc = _metrics(net, X_val, y_val)
        record = EpochRecord(epoch, train_loss, train_acc, val_loss, val_acc)
        records.append(record)
        if observer is not None:
            observer(record)
    return TrainingHistory(tuple(records))


def predict(net: Network, pixels, class_names) -> Prediction:
    """Classify one image; "unsure" when the top two probabilities are close."""
    class_names = list(class_names)
    if len(class_names) != net.config.output_units:
        raise ValueError(
            f"{len(class_names)} class names for {net.config.output_units} outputs"
        )
    x = np.asarray(as_pixels(pixels), dtype=np.float64).reshape(1, INPUT_PIXELS)
    probs = _forward_stack(net, x)[-1][0]
    class_index = int(np.argmax(probs))  # ties break toward the lowest index
    top = np.sort(probs)[::-1]
    status = "unsure" if (top[0] - top[1]) < UNSURE_MARGIN else "confident"
    return Prediction(
        class_index=class_index,
        class_name=class_names[class_index],
        probabilities=tuple(float(p) for p in probs),
        status=status,
    )


def evaluate(net: Network, ds: Dataset) -> EvalReport:
    """Accuracy, confusion matrix, and per-class recall over a dataset."""
    n_classes = len(ds.classes)
    if net.config.output_units != n_classes:
        raise ValueError(
            f"network has {net.config.output_units} outputs but the dataset "
            f"has {n_classes} classes"
        )
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    X, y = _as_arrays(ds)
    if len(y):
        probs = _forward_stack(net, X)[-1]
        preds = np.argmax(probs, axis=1)
        for true, pred in zip(y, preds):
            confusion[true, pred] += 1
    total = int(confusion.sum())
    accuracy = float(np.trace(confusion) / total) if total else 0.0
    recall = tuple(
        float(confusion[i, i] / row_sum) if (row_sum := int(confusion[i].sum())) else 0.0
        for i in range(n_classes)
    )
    return EvalReport(
        accuracy=accuracy,
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
        per_class_recall=recall,
    )


# --- history document ------------------------------------------------------

def history_save(history: TrainingHistory) -> str:
    """History document: a JSON array of epoch records."""
    doc = [
        {
            "epoch": r.epoch,
            "train_loss": r.train_loss,
            "train_acc": r.train_acc,
            "val_loss": r.val_loss,
            "val_acc": r.val_acc,
        }
        for r in history.epochs
    ]
    return json.dumps(doc, indent=2) + "\n"


def history_load(text: str) -> TrainingHistory:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"not valid JSON: {e}") from e
    if not isinstance(doc, list):
        raise DocumentError("expected a top-level array")
    records = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise DocumentError("expected an object", f"[{i}]")
        try:
            records.append(
                EpochRecord(
                    epoch=int(item["epoch"]),
                    train_loss=float(item["train_loss"]),
                    train_acc=float(item["train_acc"]),
                    val_loss=float(item["val_loss"]),
                    val_acc=float(item["val_acc"]),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DocumentError(f"bad epoch record: {e}", f"[{i}]") from e
    return TrainingHistory(tuple(records))
