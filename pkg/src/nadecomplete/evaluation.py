"""Completion-query evaluation and imputation.

A completion query is a test vector plus an observed set; its score is the
negative log-likelihood of the missing values under the model, chaining
conditionals along each ordering in the ensemble and probability-averaging
across orderings (log-mean-exp). Evaluation is deterministic: query sets
are frozen at generation time and carry their seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .combinatorics import ObservedSet, Ordering, OrderingSet, QueryDistribution
from .model import NadeModel, forward_batch
from .validation import as_rng


@dataclass
class QuerySet:
    """Frozen (row index, observed set) pairs over one dataset split."""

    X: np.ndarray                      # the split the indices point into, (N, D)
    entries: list[tuple[int, ObservedSet]]
    seed: int
    descriptor: str

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def D(self) -> int:
        return self.X.shape[1]


def generate_query_set(
    split: np.ndarray, dist: QueryDistribution, n_queries: int, seed: int
) -> QuerySet:
    """Sample n_queries (vector, observed set) pairs, vectors uniform with
    replacement from the split."""
    split = np.asarray(split, dtype=np.float64)
    if split.ndim != 2 or split.shape[0] == 0:
        raise ValueError("split must be a nonempty (N, D) matrix")
    if n_queries < 0:
        raise ValueError("n_queries must be >= 0")
    N, D = split.shape
    dist.validate(D)
    rng = as_rng(seed)
    entries = []
    for _ in range(n_queries):
        idx = int(rng.integers(N))
        obs = dist.sample(D, rng)
        entries.append((idx, obs))
    return QuerySet(X=split, entries=entries, seed=seed, descriptor=dist.describe())


def save_query_set(qs: QuerySet, path) -> None:
    """One query per line: row index then observed indices, space-separated."""
    lines = [f"# query-set seed={qs.seed} dist={qs.descriptor} n={len(qs)}"]
    for idx, obs in qs.entries:
        toks = [str(idx)] + [str(i) for i in obs.members]
        lines.append(" ".join(toks))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_query_set(path, split: np.ndarray) -> QuerySet:
    split = np.asarray(split, dtype=np.float64)
    N, D = split.shape
    seed = 0
    descriptor = "unknown"
    entries = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("seed="):
                        seed = int(tok.split("=", 1)[1])
                    elif tok.startswith("dist="):
                        descriptor = tok.split("=", 1)[1]
                continue
            toks = line.split()
            idx = int(toks[0])
            if not 0 <= idx < N:
                raise ValueError(f"query row index {idx} out of range for split of {N}")
            obs = ObservedSet(D, tuple(int(t) for t in toks[1:]))
            entries.append((idx, obs))
    return QuerySet(X=split, entries=entries, seed=seed, descriptor=descriptor)


def completion_nll(model: NadeModel, x, obs: ObservedSet, ordering_set: OrderingSet) -> float:
    """Negative log-likelihood of the missing values given the observed ones.

    For each ordering: chain the conditionals of the missing variables in
    that order, growing the mask; the K per-ordering log-probabilities are
    combined by a max-shifted log-mean-exp (ensemble averages probabilities,
    not log-probabilities). K*(D-|obs|) network inferences.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(obs) >= model.D:
        raise ValueError("completion query must leave at least one variable missing")
    log_probs = []
    for ordering in ordering_set.orderings:
        logp = 0.0
        mask = obs
        for t in ordering.sort_missing(obs):
            trace = model.forward(x, mask)
            logp -= numerics.bernoulli_nll(trace.logits_vector()[t], x[t])
            mask = mask.with_added(t)
        log_probs.append(logp)
    return -numerics.logmeanexp(log_probs)


@dataclass
class EvalResult:
    mean_nll: float
    per_query: np.ndarray
    inferences: int


def evaluate_query_set(model: NadeModel, qs: QuerySet, ordering_set: OrderingSet) -> EvalResult:
    """Mean completion NLL over a query set, with the inference count.

    Queries are advanced in lock-step so each chain position becomes one
    batched forward over the still-active queries; per-query results are
    bit-identical to scoring each query alone.
    """
    n = len(qs)
    if n == 0:
        raise ValueError("cannot evaluate an empty query set")
    K = ordering_set.K
    xs = np.stack([qs.X[idx] for idx, _ in qs.entries], axis=0)
    log_probs = np.zeros((K, n))
    inferences = 0

    for k, ordering in enumerate(ordering_set.orderings):
        missings = [ordering.sort_missing(obs) for _, obs in qs.entries]
        masks = np.stack([obs.indicator() for _, obs in qs.entries], axis=0)
        ptr = [0] * n
        while True:
            active = [q for q in range(n) if ptr[q] < len(missings[q])]
            if not active:
                break
            trace = forward_batch(model, xs[active], masks[active])
            for j, q in enumerate(active):
                t = missings[q][ptr[q]]
                log_probs[k, q] -= numerics.bernoulli_nll(trace.logits[t, j], xs[q, t])
                masks[q, t] = 1.0
                ptr[q] += 1
            inferences += len(active)

    per_query = np.array([-numerics.logmeanexp(log_probs[:, q]) for q in range(n)])
    return EvalResult(
        mean_nll=float(np.mean(per_query)), per_query=per_query, inferences=inferences
    )


def evaluate(model: NadeModel, qs: QuerySet, ordering_set: OrderingSet) -> float:
    """Arithmetic mean of completion_nll over the query set."""
    return evaluate_query_set(model, qs, ordering_set).mean_nll


def impute(model: NadeModel, x, obs: ObservedSet, ordering: Ordering, rng) -> np.ndarray:
    """Fill in the missing variables by sampling each conditional in order.

    Entries of x at observed positions must be bits; entries at missing
    positions are ignored (they may be NaN) and get replaced by samples.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.D,):
        raise ValueError(f"x must have shape ({model.D},), got {x.shape}")
    obs_idx = list(obs.members)
    if not np.all((x[obs_idx] == 0.0) | (x[obs_idx] == 1.0)):
        raise ValueError("observed entries must be 0 or 1")
    rng = as_rng(rng)

    work = x.copy()
    work[obs.indicator() == 0.0] = 0.0
    mask = obs
    for t in ordering.sort_missing(obs):
        trace = model.forward(work, mask)
        p = numerics.sigmoid(trace.logits_vector()[t])
        work[t] = 1.0 if rng.random() < p else 0.0
        mask = mask.with_added(t)
    # restore observed values exactly as given
    work[obs_idx] = x[obs_idx]
    return work
