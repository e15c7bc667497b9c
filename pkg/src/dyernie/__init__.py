"""Dynamic entity embeddings on products of constant-curvature spaces for
temporal knowledge-graph completion."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .curvature import (
    CurvatureHistogram,
    SliceGraph,
    build_slice_graph,
    estimate_all,
    estimate_slice_curvature,
    propose_signature,
    sample_psi,
)
from .data import Dataset, TimeScale, Vocab, build_dataset, load_dataset, load_tsv
from .evaluate import MetricsReport, evaluate_split, rank_query
from .grad import backward, bce_loss, fd_check, riemannian_rescale
from .model import ModelConfig, Params, init_params, param_count, score
from .product import Component, Signature
from .train import TrainConfig, fit, rsgd_step, signature_search, train_epoch

__version__ = "0.1.0"

__all__ = [
    "Checkpoint", "load_checkpoint", "save_checkpoint",
    "CurvatureHistogram", "SliceGraph", "build_slice_graph", "estimate_all",
    "estimate_slice_curvature", "propose_signature", "sample_psi",
    "Dataset", "TimeScale", "Vocab", "build_dataset", "load_dataset", "load_tsv",
    "MetricsReport", "evaluate_split", "rank_query",
    "backward", "bce_loss", "fd_check", "riemannian_rescale",
    "ModelConfig", "Params", "init_params", "param_count", "score",
    "Component", "Signature",
    "TrainConfig", "fit", "rsgd_step", "signature_search", "train_epoch",
]
