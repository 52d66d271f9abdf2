"""Angular triplet-center loss, its baselines, and a retrieval evaluation toolkit."""

from .centers import (
    CenterBank,
    accumulate_center_delta,
    apply_center_update,
    init_centers,
    nearest_negative,
)
from .data import LabeledDataset, SynthConfig, generate, read_dataset, write_dataset
from .errors import (
    BatchTooSmall,
    ConfigError,
    DimensionMismatch,
    InvalidShape,
    ParseError,
    ZeroVector,
)
from .evaluation import (
    average_precision,
    cosine_histograms,
    evaluate,
    f_measure,
    micro_macro,
    ndcg,
    pr_auc,
    rank,
)
from .geometry import angular_distance, cosine_distance, l2_normalize, squared_euclidean_half
from .losses import (
    LossOutput,
    MarginConfig,
    atcl,
    center_loss,
    cosine_tcl,
    euclidean_tcl,
    joint_loss,
    softmax_xent,
    triplet_loss,
)
from .model import EmbeddingModel, TrainConfig, backward_step, fit, forward, init_model, train

__version__ = "0.1.0"
