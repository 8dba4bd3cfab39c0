"""Order-agnostic autoregressive density estimation for binary data completion."""

from .combinatorics import (
    EmptyQueries,
    FixedSetQueries,
    FixedSizeQueries,
    ObservedSet,
    Ordering,
    OrderingSet,
    UniformQueries,
    parse_query_dist,
    sample_ordering_set,
)
from .datasets import (
    BinaryDataset,
    IndependentBernoulli,
    MixtureOfProducts,
    load_dataset,
    make_synthetic,
    save_dataset,
)
from .estimator import NadeCompleter
from .evaluation import completion_nll, evaluate, generate_query_set, impute
from .losses import (
    LossValue,
    SampledContext,
    minibatch_step,
    oa_loss_estimate,
    oa_loss_exact,
    oapp_loss_estimate,
    oapp_loss_exact,
)
from .model import NadeModel, init_model, load_checkpoint, save_checkpoint
from .training import MetricTrace, TrainConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "BinaryDataset",
    "EmptyQueries",
    "FixedSetQueries",
    "FixedSizeQueries",
    "IndependentBernoulli",
    "LossValue",
    "MetricTrace",
    "MixtureOfProducts",
    "NadeCompleter",
    "NadeModel",
    "ObservedSet",
    "Ordering",
    "OrderingSet",
    "SampledContext",
    "TrainConfig",
    "TrainResult",
    "UniformQueries",
    "completion_nll",
    "evaluate",
    "generate_query_set",
    "impute",
    "init_model",
    "load_checkpoint",
    "load_dataset",
    "make_synthetic",
    "minibatch_step",
    "oa_loss_estimate",
    "oa_loss_exact",
    "oapp_loss_estimate",
    "oapp_loss_exact",
    "parse_query_dist",
    "sample_ordering_set",
    "save_checkpoint",
    "save_dataset",
    "train",
]
