"""Scikit-learn style front end for the completion model.

``NadeCompleter`` behaves like an imputer: fit it on fully observed binary
rows, then ``transform`` matrices whose missing entries are NaN, or
``score`` held-out rows by (negative) completion NLL. All hyperparameters
are plain constructor arguments so ``get_params``/``set_params``/``clone``
work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .combinatorics import ObservedSet, parse_query_dist
from .datasets import BinaryDataset
from .evaluation import evaluate_query_set, generate_query_set, impute
from .model import init_model
from .training import TrainConfig, train
from .validation import check_binary_matrix, check_partial_binary_matrix


class NadeCompleter(BaseEstimator, TransformerMixin):
    """Autoregressive density estimator for binary data completion.

    Parameters
    ----------
    procedure : "oapp" or "oa"
        Training procedure: query-aware (trains the conditionals the
        completion queries will actually use) or the order-agnostic
        baseline (trains all of them).
    n_orderings : int
        Size of the fixed ordering ensemble (K).
    query_dist : str
        Query distribution spec, e.g. "uniform", "fixed-size:3",
        "fixed-size:half", "fixed-set:0,2,5", "empty".
    hidden1, hidden2 : int
        Hidden-layer widths of the shared network.
    budget : int
        Training budget in network inferences.
    validation_fraction : float
        Fraction of the fit data held out for validation/early stopping.
    random_state : int
        Drives initialization, sampling, orderings, and imputation.
    """

    def __init__(
        self,
        procedure: str = "oapp",
        n_orderings: int = 1,
        query_dist: str = "uniform",
        hidden1: int = 256,
        hidden2: int = 256,
        batch_size: int = 16,
        learning_rate: float = 1e-3,
        optimizer: str = "adam",
        budget: int = 50_000,
        eval_every: int = 5_000,
        early_stop_patience: int | None = 20,
        n_valid_queries: int = 200,
        validation_fraction: float = 0.1,
        random_state: int = 0,
    ):
        self.procedure = procedure
        self.n_orderings = n_orderings
        self.query_dist = query_dist
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.budget = budget
        self.eval_every = eval_every
        self.early_stop_patience = early_stop_patience
        self.n_valid_queries = n_valid_queries
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def fit(self, X, y=None):
        """Train on fully observed binary rows."""
        X = check_binary_matrix(X)
        n, D = X.shape
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        n_valid = max(1, int(round(n * self.validation_fraction)))
        if n_valid >= n:
            raise ValueError("not enough rows to hold out a validation split")

        rng = np.random.default_rng(self.random_state)
        order = rng.permutation(n)
        valid_rows, train_rows = order[:n_valid], order[n_valid:]
        dataset = BinaryDataset(
            name="fit", train=X[train_rows], valid=X[valid_rows], test=X[valid_rows]
        )

        dist = parse_query_dist(self.query_dist, D)
        config = TrainConfig(
            procedure=self.procedure,
            K=self.n_orderings,
            query_dist=dist,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            budget=self.budget,
            eval_every=self.eval_every,
            seed=self.random_state,
            early_stop_patience=self.early_stop_patience,
            n_valid_queries=self.n_valid_queries,
        )
        model = init_model(D, self.hidden1, self.hidden2, seed=self.random_state)
        result = train(model, dataset, config)

        self.model_ = result.model
        self.ordering_set_ = result.ordering_set
        self.trace_ = result.trace
        self.best_valid_nll_ = result.best_valid_nll
        self.n_features_in_ = D
        return self

    def transform(self, X):
        """Impute NaN entries; observed entries pass through unchanged."""
        check_is_fitted(self, "model_")
        X = check_partial_binary_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fit with {self.n_features_in_}"
            )
        rng = np.random.default_rng(self.random_state)
        out = X.copy()
        orderings = self.ordering_set_.orderings
        for i in range(X.shape[0]):
            observed = np.flatnonzero(~np.isnan(X[i]))
            if observed.size == X.shape[1]:
                continue
            obs = ObservedSet(self.n_features_in_, tuple(int(j) for j in observed))
            ordering = orderings[int(rng.integers(len(orderings)))]
            out[i] = impute(self.model_, X[i], obs, ordering, rng)
        return out

    def score(self, X, y=None) -> float:
        """Mean negative completion NLL over queries drawn from query_dist.

        One query per row of X (observed sets seeded by random_state);
        higher is better, as sklearn expects from a score.
        """
        check_is_fitted(self, "model_")
        X = check_binary_matrix(X, self.n_features_in_)
        dist = parse_query_dist(self.query_dist, self.n_features_in_)
        qs = generate_query_set(X, dist, n_queries=X.shape[0], seed=self.random_state)
        return -evaluate_query_set(self.model_, qs, self.ordering_set_).mean_nll

    def completion_nll(self, X) -> float:
        """Mean completion NLL (nats) under the fitted model; lower is better."""
        return -self.score(X)
