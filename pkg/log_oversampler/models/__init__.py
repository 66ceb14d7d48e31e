"""Feature extractors and the anomaly classifier."""

from .autoencoder import (
    LAYER_NAMES,
    AeParams,
    AeTrace,
    FeatureRecord,
    add_gaussian_noise,
    ae_backward,
    ae_forward,
    ae_input,
    ae_inputs,
    ae_train,
    dedup_features,
    dual_pipeline,
    extract,
    feature_matrix,
    load_features,
    reconstruction_loss,
    save_features,
)
from .gru import (
    ClassifierHead,
    EpochStats,
    GruClassifier,
    GruParams,
    GruStep,
    GruTrace,
    bptt,
    cell_forward,
    classify,
    features_to_sequence,
    seq_forward,
    train_classifier,
)

__all__ = [
    "GruParams",
    "GruStep",
    "GruTrace",
    "cell_forward",
    "seq_forward",
    "bptt",
    "ClassifierHead",
    "features_to_sequence",
    "classify",
    "EpochStats",
    "GruClassifier",
    "train_classifier",
    "LAYER_NAMES",
    "AeParams",
    "AeTrace",
    "FeatureRecord",
    "ae_input",
    "ae_inputs",
    "ae_forward",
    "reconstruction_loss",
    "ae_backward",
    "ae_train",
    "extract",
    "dedup_features",
    "add_gaussian_noise",
    "dual_pipeline",
    "feature_matrix",
    "save_features",
    "load_features",
]
