"""Budget-accounted training loop for both procedures.

The budget currency is network inferences: every estimator call costs one
per example, and the trace's x-axis is training inferences divided by D.
Validation inferences are counted in a separate ledger so the two training
procedures stay comparable on the training-computations axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import (
    OrderingSet,
    QueryDistribution,
    UniformQueries,
    sample_ordering_set,
)
from .evaluation import QuerySet, evaluate_query_set, generate_query_set
from .losses import SampledContext, minibatch_step
from .model import NadeModel


class TrainingDiverged(RuntimeError):
    """Raised when a training loss goes non-finite; carries the trace so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


# --- optimizers ------------------------------------------------------------


@dataclass
class AdamState:
    """First/second moment accumulators plus the step count."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @staticmethod
    def for_params(params: dict[str, np.ndarray]) -> "AdamState":
        return AdamState(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> dict[str, np.ndarray]:
    """One Adam update with bias correction; mutates state, returns new params."""
    state.t += 1
    t = state.t
    out = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {p.shape}")
        state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = state.m[name] / (1.0 - beta1**t)
        v_hat = state.v[name] / (1.0 - beta2**t)
        out[name] = p - learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return out


def sgd_step(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], learning_rate: float
) -> dict[str, np.ndarray]:
    out = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {p.shape}")
        out[name] = p - learning_rate * g
    return out


# --- configuration and traces ----------------------------------------------


@dataclass
class TrainConfig:
    procedure: str = "oapp"                 # "oa" or "oapp"
    K: int = 1
    query_dist: QueryDistribution = field(default_factory=UniformQueries)
    batch_size: int = 16
    learning_rate: float = 1e-3
    optimizer: str = "adam"                 # "adam" or "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    budget: int = 50_000                    # training inferences
    eval_every: int = 5_000                 # training-inference interval between evals
    seed: int = 0
    early_stop_patience: int | None = 20    # evals without improvement; None disables
    n_valid_queries: int = 200
    valid_query_dist: QueryDistribution | None = None  # defaults to query_dist
    log_events: bool = False

    def __post_init__(self):
        if self.procedure not in ("oa", "oapp"):
            raise ValueError(f"unknown procedure {self.procedure!r}")
        if self.budget <= 0:
            raise ValueError("budget must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class MetricTrace:
    """Rows of (training inferences / D, mean train loss, validation NLL)."""

    rows: list[tuple[float, float, float]] = field(default_factory=list)

    def add(self, computations_over_d: float, train_loss: float, valid_nll: float) -> None:
        if self.rows and computations_over_d <= self.rows[-1][0]:
            raise ValueError("computations_over_D must be strictly increasing")
        self.rows.append((computations_over_d, train_loss, valid_nll))

    def best_valid(self) -> tuple[float, float]:
        """(computations_over_D, valid_nll) of the best validation point."""
        if not self.rows:
            raise ValueError("empty trace")
        best = min(self.rows, key=lambda r: r[2])
        return best[0], best[2]

    def to_csv(self, path) -> None:
        lines = ["computations_over_D,train_loss,valid_nll"]
        for c, tl, vn in self.rows:
            lines.append(f"{c!r},{tl!r},{vn!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @staticmethod
    def from_csv(path) -> "MetricTrace":
        trace = MetricTrace()
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "computations_over_D,train_loss,valid_nll":
                raise ValueError(f"unexpected trace header: {header!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                c, tl, vn = (float(t) for t in line.split(","))
                trace.rows.append((c, tl, vn))
        return trace


@dataclass
class TrainResult:
    model: NadeModel                 # best-validation snapshot
    trace: MetricTrace
    ordering_set: OrderingSet
    valid_queries: QuerySet
    train_inferences: int
    eval_inferences: int
    best_valid_nll: float
    event_log: list[SampledContext]


# --- the loop ---------------------------------------------------------------


def train(model: NadeModel, dataset, config: TrainConfig) -> TrainResult:
    """Run the configured procedure until the inference budget is spent.

    Deterministic given config.seed: the seed drives the ordering set, the
    per-step sampling, and the frozen validation query set. Validation runs
    every eval_every training inferences (plus once before training and
    once at the end); the best-validation parameters are kept.
    """
    if dataset.D != model.D:
        raise ValueError(f"dataset has D={dataset.D}, model has D={model.D}")

    ss = np.random.SeedSequence(config.seed)
    ordering_seed, train_key, valid_seed = (
        int(child.generate_state(1)[0]) for child in ss.spawn(3)
    )
    rng = np.random.default_rng(train_key)

    ordering_set = sample_ordering_set(model.D, config.K, ordering_seed)
    valid_dist = config.valid_query_dist or config.query_dist
    valid_queries = generate_query_set(
        dataset.valid, valid_dist, config.n_valid_queries, valid_seed
    )

    trace = MetricTrace()
    event_log: list[SampledContext] = []
    train_inferences = 0
    eval_inferences = 0
    interval_losses: list[float] = []

    best_valid = math.inf
    best_model = model.copy()
    evals_since_best = 0

    def run_eval() -> float:
        nonlocal eval_inferences, best_valid, best_model, evals_since_best
        res = evaluate_query_set(model, valid_queries, ordering_set)
        eval_inferences += res.inferences
        train_loss = float(np.mean(interval_losses)) if interval_losses else math.nan
        interval_losses.clear()
        trace.add(train_inferences / model.D, train_loss, res.mean_nll)
        if res.mean_nll < best_valid:
            best_valid = res.mean_nll
            best_model = model.copy()
            evals_since_best = 0
        else:
            evals_since_best += 1
        return res.mean_nll

    run_eval()
    next_eval = config.eval_every
    B = config.batch_size
    N = dataset.train.shape[0]
    adam_state = AdamState.for_params(model.parameters())

    while train_inferences + B <= config.budget:
        rows = rng.integers(0, N, size=B)
        batch = dataset.train[rows]
        step = minibatch_step(
            model,
            batch,
            rng,
            procedure=config.procedure,
            ordering_set=ordering_set,
            query_dist=config.query_dist if config.procedure == "oapp" else None,
        )
        if not np.isfinite(step.loss.value):
            raise TrainingDiverged(
                f"training loss became non-finite after {train_inferences} inferences", trace
            )
        if config.optimizer == "adam":
            new_params = adam_step(
                model.parameters(), step.gradients, adam_state,
                config.learning_rate, config.beta1, config.beta2, config.eps,
            )
        else:
            new_params = sgd_step(model.parameters(), step.gradients, config.learning_rate)
        model.set_parameters(new_params)

        train_inferences += step.loss.computations
        interval_losses.append(step.loss.value)
        if config.log_events:
            event_log.extend(step.contexts)

        if train_inferences >= next_eval:
            run_eval()
            next_eval = (train_inferences // config.eval_every + 1) * config.eval_every
            if (
                config.early_stop_patience is not None
                and evals_since_best > config.early_stop_patience
            ):
                break

    if interval_losses:
        run_eval()

    return TrainResult(
        model=best_model,
        trace=trace,
        ordering_set=ordering_set,
        valid_queries=valid_queries,
        train_inferences=train_inferences,
        eval_inferences=eval_inferences,
        best_valid_nll=best_valid,
        event_log=event_log,
    )
