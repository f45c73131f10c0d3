"""tinydigits: a tiny, fully inspectable neural-network toolkit for 6x6 digits."""

from .activations import ACTIVATIONS, apply_activation
from .datasets import (
    CANONICAL_GLYPHS,
    Dataset,
    LabeledImage,
    VariantSpec,
    dataset_load,
    dataset_save,
    glyph_grid,
    make_checkerboard,
    make_digit_dataset,
    make_random_images,
    rebalance_classes,
    replace_class_with_random,
)
from .errors import ConfigError, DocumentError
from .estimator import PixelNetClassifier
from .experiments import (
    ExperimentReport,
    ExperimentSpec,
    run_basic,
    run_experiment,
    run_imbalance,
    run_not_digit,
)
from .network import (
    ActivationRecord,
    Gradients,
    LayerSpec,
    Network,
    NetworkConfig,
    backward,
    flatten_parameters,
    forward,
    model_load,
    model_save,
    network_new,
)
from .rng import Rng, derive_seeds
from .training import (
    EvalReport,
    Hyperparams,
    Prediction,
    SplitDataset,
    TrainingHistory,
    evaluate,
    history_load,
    history_save,
    predict,
    split,
    train,
)
from .viz import (
    DiagramSpec,
    HeatmapData,
    HeatmapStage,
    activations_to_heatmap,
    render_curves,
    render_diagram,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVATIONS",
    "ActivationRecord",
    "CANONICAL_GLYPHS",
    "ConfigError",
    "Dataset",
    "DiagramSpec",
    "DocumentError",
    "EvalReport",
    "ExperimentReport",
    "ExperimentSpec",
    "Gradients",
    "HeatmapData",
    "HeatmapStage",
    "Hyperparams",
    "LabeledImage",
    "LayerSpec",
    "Network",
    "NetworkConfig",
    "PixelNetClassifier",
    "Prediction",
    "Rng",
    "SplitDataset",
    "TrainingHistory",
    "VariantSpec",
    "activations_to_heatmap",
    "apply_activation",
    "backward",
    "dataset_load",
    "dataset_save",
    "derive_seeds",
    "evaluate",
    "flatten_parameters",
    "forward",
    "glyph_grid",
    "history_load",
    "history_save",
    "make_checkerboard",
    "make_digit_dataset",
    "make_random_images",
    "model_load",
    "model_save",
    "network_new",
    "predict",
    "rebalance_classes",
    "render_curves",
    "render_diagram",
    "replace_class_with_random",
    "run_basic",
    "run_experiment",
    "run_imbalance",
    "run_not_digit",
    "split",
    "train",
]
