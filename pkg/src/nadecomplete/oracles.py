"""Self-contained correctness checks runnable from the CLI.

Each check pits an estimator against an exact enumeration (or a counting
identity against brute force) on models small enough to enumerate fully.
These are the same verifications the test suite runs; the CLI entry point
exists so a built artifact can prove its estimators unbiased without a
test harness installed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .combinatorics import (
    EmptyQueries,
    FixedSizeQueries,
    ObservedSet,
    OrderingSet,
    QueryDistribution,
    count_conditionals_of_size,
    count_trained_conditionals_oapp,
    sample_ordering_set,
)
from .losses import (
    SampledContext,
    oa_loss_estimate,
    oa_loss_exact,
    oapp_loss_estimate,
    oapp_loss_exact,
)
from .model import PARAM_NAMES, NadeModel, init_model


@dataclass
class OracleCheck:
    name: str
    passed: bool
    detail: str


def oa_estimator_expectation(model: NadeModel, x) -> float:
    """Expectation of the baseline estimator over all (d, prefix) draws.

    d is uniform on {1..D} and the prefix uniform among (d-1)-subsets, so
    each outcome carries weight 1/(D * C(D, d-1)).
    """
    D = model.D
    total = 0.0
    for d in range(1, D + 1):
        w = 1.0 / (D * math.comb(D, d - 1))
        for prefix in itertools.combinations(range(D), d - 1):
            ctx = SampledContext(x=np.asarray(x, dtype=np.float64),
                                 prefix=ObservedSet(D, prefix), d=d)
            loss, _, _ = oa_loss_estimate(model, x, context=ctx)
            total += w * loss.value
    return total


def oapp_estimator_expectation(
    model: NadeModel, x, ordering_set: OrderingSet, dist: QueryDistribution
) -> float:
    """Expectation of the query-aware estimator over all (obs, ordering, d)."""
    D = model.D
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    for obs, p_obs in dist.support(D):
        for ordering in ordering_set.orderings:
            missing = ordering.sort_missing(obs)
            M = len(missing)
            for d in range(1, M + 1):
                ctx = SampledContext(
                    x=x,
                    prefix=ObservedSet(D, obs.members + missing[: d - 1]),
                    d=d,
                    obs=obs,
                    ordering=ordering,
                    target=missing[d - 1],
                )
                loss, _, _ = oapp_loss_estimate(model, x, ordering_set, dist, context=ctx)
                total += (p_obs / ordering_set.K) * (1.0 / M) * loss.value
    return total


def fixed_order_chain_nll(model: NadeModel, x, ordering) -> float:
    """Plain chain-rule NLL along one ordering, one conditional at a time."""
    x = np.asarray(x, dtype=np.float64)
    mask = ObservedSet.empty(model.D)
    total = 0.0
    for t in ordering.perm:
        trace = model.forward(x, mask)
        total += numerics.bernoulli_nll(trace.logits_vector()[t], x[t])
        mask = mask.with_added(t)
    return total


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _random_bits(rng, n, D):
    return (rng.random((n, D)) < 0.5).astype(np.float64)


def check_oa_unbiasedness(seed: int = 0, D: int = 4, n_vectors: int = 5, tol: float = 1e-10) -> OracleCheck:
    rng = np.random.default_rng(seed)
    model = init_model(D, 6, 5, seed=seed + 1)
    worst = 0.0
    for x in _random_bits(rng, n_vectors, D):
        exact = oa_loss_exact(model, x).value
        expect = oa_estimator_expectation(model, x)
        worst = max(worst, _rel_err(exact, expect))
    return OracleCheck(
        name=f"baseline estimator unbiased (D={D}, {n_vectors} vectors)",
        passed=worst <= tol,
        detail=f"max relative error {worst:.3e} (tolerance {tol:.0e})",
    )


def check_oapp_unbiasedness(seed: int = 0, D: int = 4, n_vectors: int = 5, tol: float = 1e-10) -> list[OracleCheck]:
    rng = np.random.default_rng(seed)
    model = init_model(D, 6, 5, seed=seed + 2)
    xs = _random_bits(rng, n_vectors, D)
    checks = []
    for K in (1, 2):
        ordering_set = sample_ordering_set(D, K, seed=seed + 10 + K)
        for dist in (EmptyQueries(), FixedSizeQueries(1)):
            worst = 0.0
            for x in xs:
                exact = oapp_loss_exact(model, x, ordering_set, dist).value
                expect = oapp_estimator_expectation(model, x, ordering_set, dist)
                worst = max(worst, _rel_err(exact, expect))
            checks.append(OracleCheck(
                name=f"query-aware estimator unbiased (D={D}, K={K}, {dist.describe()})",
                passed=worst <= tol,
                detail=f"max relative error {worst:.3e} (tolerance {tol:.0e})",
            ))
    return checks


def check_reductions(seed: int = 0, tol: float = 1e-10) -> list[OracleCheck]:
    D = 3
    rng = np.random.default_rng(seed)
    model = init_model(D, 5, 4, seed=seed + 3)
    xs = _random_bits(rng, 4, D)
    empty = EmptyQueries()

    full_set = sample_ordering_set(D, math.factorial(D), seed=seed + 20)
    worst_a = max(
        _rel_err(oapp_loss_exact(model, x, full_set, empty).value, oa_loss_exact(model, x).value)
        for x in xs
    )
    single = sample_ordering_set(D, 1, seed=seed + 21)
    worst_b = max(
        _rel_err(
            oapp_loss_exact(model, x, single, empty).value,
            fixed_order_chain_nll(model, x, single.orderings[0]),
        )
        for x in xs
    )
    return [
        OracleCheck(
            name="K=D! with empty queries reduces to the order-averaged loss",
            passed=worst_a <= tol,
            detail=f"max relative error {worst_a:.3e}",
        ),
        OracleCheck(
            name="K=1 with empty queries reduces to the fixed-order chain NLL",
            passed=worst_b <= tol,
            detail=f"max relative error {worst_b:.3e}",
        ),
    ]


def check_estimator_gradients(seed: int = 0, tol: float = 1e-5, step: float = 1e-5) -> list[OracleCheck]:
    D = 5
    model = init_model(D, 4, 4, seed=seed + 4)
    rng = np.random.default_rng(seed + 5)
    x = _random_bits(rng, 1, D)[0]
    ordering_set = sample_ordering_set(D, 2, seed=seed + 6)
    dist = FixedSizeQueries(2)

    _, _, oa_ctx = oa_loss_estimate(model, x, rng)
    _, _, oapp_ctx = oapp_loss_estimate(model, x, ordering_set, dist, rng)

    def make_loss_fn(estimator, ctx, *args):
        def loss_fn(params):
            probe = model.copy()
            probe.set_parameters(dict(zip(PARAM_NAMES, params)))
            loss, grads, _ = estimator(probe, x, *args, context=ctx)
            return loss.value, [grads[n] for n in PARAM_NAMES]
        return loss_fn

    checks = []
    for label, fn in (
        ("baseline", make_loss_fn(oa_loss_estimate, oa_ctx)),
        ("query-aware", make_loss_fn(oapp_loss_estimate, oapp_ctx, ordering_set, dist)),
    ):
        report = numerics.check_gradient(fn, list(model.parameters().values()), step=step)
        checks.append(OracleCheck(
            name=f"{label} estimator gradient vs central differences (D={D})",
            passed=report.max_relative_error <= tol,
            detail=(
                f"max relative error {report.max_relative_error:.3e} over "
                f"{report.num_parameters} parameters"
            ),
        ))
    return checks


def check_counting(max_D: int = 10, brute_D: int = 5) -> list[OracleCheck]:
    ok_sum = all(
        sum(count_conditionals_of_size(D, d) for d in range(1, D + 1)) == D * 2 ** (D - 1)
        for D in range(1, max_D + 1)
    )
    ok_fewer = all(
        count_trained_conditionals_oapp(D, 1) < D * 2 ** (D - 1) for D in range(2, max_D + 1)
    )
    ok_brute = True
    for D in range(1, brute_D + 1):
        per_size = {d: 0 for d in range(1, D + 1)}
        for s in range(D):
            for subset in itertools.combinations(range(D), s):
                for t in range(D):
                    if t not in subset:
                        per_size[s + 1] += 1
        if any(per_size[d] != count_conditionals_of_size(D, d) for d in range(1, D + 1)):
            ok_brute = False
    return [
        OracleCheck(
            name=f"conditional counts sum to D*2^(D-1) for D<={max_D}",
            passed=ok_sum,
            detail="closed form vs sum over sizes",
        ),
        OracleCheck(
            name=f"K=1 trains 2^D-1 < D*2^(D-1) conditionals for 2<=D<={max_D}",
            passed=ok_fewer,
            detail="strict inequality",
        ),
        OracleCheck(
            name=f"counts match brute-force (subset, target) enumeration for D<={brute_D}",
            passed=ok_brute,
            detail="exhaustive enumeration",
        ),
    ]


def run_oracle_suite(seed: int = 0) -> list[OracleCheck]:
    checks = [check_oa_unbiasedness(seed)]
    checks.extend(check_oapp_unbiasedness(seed))
    checks.extend(check_reductions(seed))
    checks.extend(check_estimator_gradients(seed))
    checks.extend(check_counting())
    return checks
