"""Scikit-learn estimator facade over the network and trainer.

PixelNetClassifier lets the toolkit's fixed 6x6 architecture compose with
the wider scikit-learn ecosystem (pipelines, cross-validation, cloning):
rows of X are flattened pixel grids in [0, 1], y holds arbitrary labels.
Everything stochastic derives from the single ``seed`` parameter.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .datasets import Dataset, LabeledImage
from .network import (
    INPUT_PIXELS,
    LayerSpec,
    NetworkConfig,
    _forward_stack,
    network_new,
)
from .rng import derive_seeds
from .training import Hyperparams, split, train


def validate_pixel_matrix(X) -> np.ndarray:
    """Coerce X to a (n_samples, 36) float64 matrix of in-range pixels."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != INPUT_PIXELS:
        raise ValueError(
            f"X must have shape (n_samples, {INPUT_PIXELS}); got {X.shape}"
        )
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    return X


class PixelNetClassifier(BaseEstimator, ClassifierMixin):
    """Dense softmax classifier over flattened 6x6 pixel grids.

    Parameters mirror the toolkit defaults: one hidden layer of
    ``hidden_units`` with ``hidden_activation``, trained by mini-batch SGD
    with a stratified internal validation split.
    """

    def __init__(
        self,
        hidden_units=20,
        hidden_activation="relu",
        learning_rate=0.1,
        epochs=500,
        batch_size=16,
        validation_fraction=0.2,
        seed=0,
    ):
        self.hidden_units = hidden_units
        self.hidden_activation = hidden_activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.seed = seed

    def fit(self, X, y):
        X = validate_pixel_matrix(X)
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y have inconsistent lengths")
        classes, y_idx = np.unique(y, return_inverse=True)
        if len(classes) < 2:
            raise ValueError("need at least 2 classes")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")

        ds = Dataset(
            "arrays",
            tuple(str(c) for c in classes),
            tuple(
                LabeledImage(tuple(float(v) for v in row), int(k), str(classes[k]))
                for row, k in zip(X, y_idx)
            ),
        )
        split_seed, init_seed, shuffle_seed = derive_seeds(int(self.seed), 3)
        split_ds = split(ds, 1.0 - self.validation_fraction, split_seed)
        config = NetworkConfig(
            hidden=(LayerSpec("dense", int(self.hidden_units), self.hidden_activation),),
            output_units=len(classes),
            seed=init_seed,
        )
        net = network_new(config)
        hp = Hyperparams(
            learning_rate=float(self.learning_rate),
            epochs=int(self.epochs),
            batch_size=int(self.batch_size),
            shuffle_seed=shuffle_seed,
        )
        history = train(net, split_ds, hp)

        self.classes_ = classes
        self.network_ = net
        self.history_ = history
        self.n_features_in_ = INPUT_PIXELS
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError(
                "This PixelNetClassifier instance is not fitted yet; call fit first."
            )

    def predict_proba(self, X):
        self._check_fitted()
        X = validate_pixel_matrix(X)
        return _forward_stack(self.network_, X)[-1]

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
