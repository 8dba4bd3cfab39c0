"""Completion-training losses: exact forms and their unbiased estimators.

Two training procedures are implemented side by side:

* the order-agnostic baseline, whose exact loss averages the full
  autoregressive NLL over every permutation of the variables, and whose
  stochastic estimator samples a conditioning prefix and then sums the NLL
  of every remaining variable from one shared forward pass, scaled by
  D/(D-d+1);

* the query-aware variant, whose exact loss takes an expectation over a
  query distribution (observed sets), a fixed set of K orderings, and the
  chain of missing variables along each ordering; its estimator samples
  (observed set, ordering, position) and trains a single conditional,
  scaled by the number of missing variables.

Exact forms enumerate everything and are guarded to tiny dimensionalities;
they exist as oracles for the estimators, whose expectation over all
sampling outcomes must match them to float precision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .combinatorics import (
    EnumerationLimitError,
    ObservedSet,
    Ordering,
    OrderingSet,
    QueryDistribution,
    sample_query,
)
from .model import ForwardTrace, NadeModel, forward_batch
from .validation import as_rng, check_bit_vector

MAX_EXACT_D = 6


@dataclass
class LossValue:
    """A loss in nats plus the number of network inferences it consumed."""

    value: float
    computations: int


@dataclass
class SampledContext:
    """One draw of the sampling choices behind a stochastic loss term.

    ``prefix`` is the full conditioning mask fed to the network. For the
    query-aware estimator it contains ``obs`` plus the first d-1 missing
    variables along ``ordering``, and ``target`` is the d-th; the baseline
    estimator conditions on a bare (d-1)-subset and scores every variable
    outside it, so ``obs``, ``ordering`` and ``target`` stay None.
    """

    x: np.ndarray
    prefix: ObservedSet
    d: int
    obs: ObservedSet | None = None
    ordering: Ordering | None = None
    target: int | None = None


def sample_oa_context(x: np.ndarray, rng) -> SampledContext:
    """Draw (d, prefix) for the baseline estimator: d ~ U{1..D}, prefix a
    uniform (d-1)-subset."""
    D = x.shape[0]
    rng = as_rng(rng)
    d = int(rng.integers(1, D + 1))
    prefix = ObservedSet(D, tuple(int(i) for i in rng.choice(D, size=d - 1, replace=False)))
    return SampledContext(x=x, prefix=prefix, d=d)


def sample_oapp_context(
    x: np.ndarray, ordering_set: OrderingSet, dist: QueryDistribution, rng
) -> SampledContext:
    """Draw (obs, ordering, d) for the query-aware estimator."""
    D = x.shape[0]
    rng = as_rng(rng)
    obs = sample_query(dist, D, rng)
    if len(obs) >= D:
        raise ValueError("query distribution produced a fully observed set")
    ordering = ordering_set.orderings[int(rng.integers(ordering_set.K))]
    missing = ordering.sort_missing(obs)
    d = int(rng.integers(1, len(missing) + 1))
    prefix = ObservedSet(D, obs.members + missing[: d - 1])
    return SampledContext(
        x=x, prefix=prefix, d=d, obs=obs, ordering=ordering, target=missing[d - 1]
    )


def _oa_term(logits: np.ndarray, x: np.ndarray, ctx: SampledContext):
    """Value and per-logit cotangent of the baseline estimator at one draw."""
    D = x.shape[0]
    scale = D / (D - ctx.d + 1)
    targets = np.array(ctx.prefix.missing(), dtype=np.intp)
    value = scale * float(np.sum(numerics.bernoulli_nll(logits[targets], x[targets])))
    cot = np.zeros(D)
    cot[targets] = scale * numerics.bernoulli_nll_grad(logits[targets], x[targets])
    return value, cot


def _oapp_term(logits: np.ndarray, x: np.ndarray, ctx: SampledContext):
    """Value and cotangent of the query-aware estimator at one draw."""
    D = x.shape[0]
    scale = float(D - len(ctx.obs))
    t = ctx.target
    value = scale * numerics.bernoulli_nll(logits[t], x[t])
    cot = np.zeros(D)
    cot[t] = scale * numerics.bernoulli_nll_grad(logits[t], x[t])
    return value, cot


def oa_loss_estimate(model: NadeModel, x, rng=None, context: SampledContext | None = None):
    """Single-example baseline estimator: one forward, all unobserved targets.

    Returns (LossValue, gradients, context). Pass ``context`` to freeze the
    sampling (gradient checks, enumeration tests).
    """
    x = check_bit_vector(x, model.D)
    if context is None:
        context = sample_oa_context(x, rng)
    trace = model.forward(x, context.prefix)
    value, cot = _oa_term(trace.logits_vector(), x, context)
    grads = model.backward(trace, cot[:, None])
    return LossValue(value=value, computations=1), grads, context


def oapp_loss_estimate(
    model: NadeModel,
    x,
    ordering_set: OrderingSet,
    dist: QueryDistribution,
    rng=None,
    context: SampledContext | None = None,
):
    """Single-example query-aware estimator: one forward, one target conditional."""
    x = check_bit_vector(x, model.D)
    if context is None:
        context = sample_oapp_context(x, ordering_set, dist, rng)
    trace = model.forward(x, context.prefix)
    value, cot = _oapp_term(trace.logits_vector(), x, context)
    grads = model.backward(trace, cot[:, None])
    return LossValue(value=value, computations=1), grads, context


def oa_loss_exact(model: NadeModel, x, max_d: int = MAX_EXACT_D) -> LossValue:
    """Exact order-averaged NLL, enumerated over conditioning subsets.

    Averaging the chain-rule NLL over all D! orderings reduces to a sum
    over subsets: at position d the conditioning set is a uniform
    (d-1)-subset and the target uniform over its complement, so each
    subset S contributes sum_t nll(t|S) / (C(D,|S|) * (D-|S|)). One
    forward per subset, reused for every target.
    """
    x = check_bit_vector(x, model.D)
    D = model.D
    if D > max_d:
        raise EnumerationLimitError(f"exact loss enumerates 2^D masks; D={D} > {max_d}")

    subsets = []
    for s in range(D):
        subsets.extend(ObservedSet(D, c) for c in itertools.combinations(range(D), s))
    masks = np.stack([S.indicator() for S in subsets], axis=0)
    X = np.tile(x[None, :], (len(subsets), 1))
    trace = forward_batch(model, X, masks)

    total = 0.0
    for b, S in enumerate(subsets):
        w = 1.0 / (math.comb(D, len(S)) * (D - len(S)))
        targets = np.array(S.missing(), dtype=np.intp)
        total += w * float(np.sum(numerics.bernoulli_nll(trace.logits[targets, b], x[targets])))
    return LossValue(value=total, computations=len(subsets))


def oapp_loss_exact(
    model: NadeModel,
    x,
    ordering_set: OrderingSet,
    dist: QueryDistribution,
    max_d: int = MAX_EXACT_D,
    max_support: int = 64,
) -> LossValue:
    """Exact query-aware loss: expectation over (obs, ordering), chain summed.

    Enumerates the query distribution's support, walks each ordering's
    missing variables growing the mask one step at a time, and weights each
    chain by P(obs)/K. Masks across all terms go through one batched
    forward pass.
    """
    x = check_bit_vector(x, model.D)
    D = model.D
    if D > max_d:
        raise EnumerationLimitError(f"exact loss enumeration capped at D={max_d}, got {D}")
    support = dist.support(D, max_size=max_support)

    mask_rows = []
    terms = []  # (row index, target, weight)
    for obs, p_obs in support:
        if len(obs) >= D:
            raise ValueError("query distribution support contains a fully observed set")
        for ordering in ordering_set.orderings:
            missing = ordering.sort_missing(obs)
            current = obs
            for t in missing:
                terms.append((len(mask_rows), t, p_obs / ordering_set.K))
                mask_rows.append(current.indicator())
                current = current.with_added(t)

    masks = np.stack(mask_rows, axis=0)
    X = np.tile(x[None, :], (len(mask_rows), 1))
    trace = forward_batch(model, X, masks)

    total = 0.0
    for row, t, w in terms:
        total += w * numerics.bernoulli_nll(trace.logits[t, row], x[t])
    return LossValue(value=total, computations=len(mask_rows))


@dataclass
class StepResult:
    """Averaged loss and gradients for one minibatch."""

    loss: LossValue
    gradients: dict[str, np.ndarray]
    contexts: list[SampledContext]


def minibatch_step(
    model: NadeModel,
    X,
    rng,
    procedure: str = "oa",
    ordering_set: OrderingSet | None = None,
    query_dist: QueryDistribution | None = None,
) -> StepResult:
    """One training step: independent sampling per example, averaged results.

    Contexts are drawn example by example from ``rng`` (same draws as
    calling the single-example estimator in a loop), the whole batch shares
    one forward/backward pass, and the returned gradients equal the running
    mean (g_1 + ... + g_B) / B of the per-example gradients, bit for bit.
    The value is np.mean of the per-example values. computations = B.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"batch must be a nonempty (B, D) matrix, got shape {X.shape}")
    if X.shape[1] != model.D:
        raise ValueError(f"batch has {X.shape[1]} columns, model expects {model.D}")
    if procedure not in ("oa", "oapp"):
        raise ValueError(f"unknown procedure {procedure!r}")
    if procedure == "oapp" and (ordering_set is None or query_dist is None):
        raise ValueError("the query-aware procedure needs an ordering set and a query distribution")

    rng = as_rng(rng)
    B = X.shape[0]
    contexts = []
    for b in range(B):
        if procedure == "oa":
            contexts.append(sample_oa_context(X[b], rng))
        else:
            contexts.append(sample_oapp_context(X[b], ordering_set, query_dist, rng))

    masks = np.stack([ctx.prefix.indicator() for ctx in contexts], axis=0)
    trace = forward_batch(model, X, masks)

    term = _oa_term if procedure == "oa" else _oapp_term
    values = np.empty(B)
    cots = np.zeros((model.D, B))
    for b, ctx in enumerate(contexts):
        values[b], cots[:, b] = term(trace.logits[:, b], X[b], ctx)

    grads = model.backward(trace, cots)
    for name in grads:
        grads[name] = grads[name] / B

    return StepResult(
        loss=LossValue(value=float(np.mean(values)), computations=B),
        gradients=grads,
        contexts=contexts,
    )
