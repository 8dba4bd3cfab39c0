"""Dense numerics with bit-reproducible reductions.

Everything here works on float64 numpy arrays. Matrix products accumulate
left-to-right over the inner dimension, so results are reproducible across
runs and machines and match a naive triple loop exactly (BLAS reorders and
may fuse multiply-adds, which breaks that contract).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit as _njit

    @_njit(cache=True)
    def _matmul_kernel(a, b, out):  # pragma: no cover - exercised via matmul
        m, kk = a.shape
        n = b.shape[1]
        for i in range(m):
            for k in range(kk):
                aik = a[i, k]
                for j in range(n):
                    out[i, j] += aik * b[k, j]

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with deterministic left-to-right inner summation.

    Each output entry accumulates a[i, k] * b[k, j] in increasing k, one
    rounded multiply and one rounded add per term, exactly like the scalar
    triple loop. The compiled kernel and the numpy fallback perform the
    same IEEE operations in the same order (no fused multiply-add), so the
    result is bit-identical either way; tests pin both against a pure
    Python triple loop.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D arrays, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} x {b.shape}")
    m, n = a.shape[0], b.shape[1]
    out = np.zeros((m, n))
    if _HAVE_NUMBA:
        _matmul_kernel(np.ascontiguousarray(a), np.ascontiguousarray(b), out)
        return out
    tmp = np.empty((m, n))
    for k in range(a.shape[1]):
        np.multiply(a[:, k, None], b[k, :], out=tmp)
        out += tmp
    return out


def sigmoid(z):
    """Logistic function 1/(1+exp(-z)), stable for large |z|.

    Uses the exp(-|z|) branch on each side so the exponential never
    overflows. Accepts scalars or arrays; returns the same shape.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def log_sigmoid(z):
    """log(sigmoid(z)) without underflow: -softplus(-z)."""
    z = np.asarray(z, dtype=np.float64)
    out = -(np.maximum(-z, 0.0) + np.log1p(np.exp(-np.abs(z))))
    if out.ndim == 0:
        return float(out)
    return out


def bernoulli_nll(logit, x):
    """Negative log-likelihood of bit x under a Bernoulli given its logit.

    Equals softplus(logit) for x=0 and softplus(-logit) for x=1, computed
    in that branch form: algebraically the same as -[x log p +
    (1-x) log(1-p)] for p = sigmoid(logit), but finite for every finite
    logit and free of the cancellation that softplus(z) - x*z suffers for
    confident correct predictions. Nonnegative by construction.
    """
    z = np.asarray(logit, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    t = np.where(x == 0.0, z, -z)
    out = np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))
    if out.ndim == 0:
        return float(out)
    return out


def bernoulli_nll_grad(logit, x):
    """Derivative of bernoulli_nll with respect to the logit: sigmoid(z) - x."""
    return sigmoid(logit) - np.asarray(x, dtype=np.float64)


def logmeanexp(values) -> float:
    """log of the mean of exp(values), max-shifted for stability."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("logmeanexp of an empty collection")
    m = float(np.max(v))
    return m + float(np.log(np.mean(np.exp(v - m))))


@dataclass
class GradCheckReport:
    max_relative_error: float
    worst_parameter_index: int
    num_parameters: int


def check_gradient(loss_fn, params: list[np.ndarray], step: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    loss_fn(params) must return (value, grads) with grads shaped like
    params, and must be deterministic (freeze any sampling before calling).
    Relative error per parameter uses max(|analytic|, |numeric|, 1e-8) as
    the denominator.
    """
    params = [np.asarray(p, dtype=np.float64) for p in params]
    value, grads = loss_fn(params)
    if not np.isfinite(value):
        raise ValueError(f"loss is non-finite: {value}")
    if len(grads) != len(params):
        raise ValueError("loss_fn returned a gradient list of the wrong length")

    worst_err = 0.0
    worst_index = 0
    flat_index = 0
    total = 0
    for p_idx, p in enumerate(params):
        g = np.asarray(grads[p_idx], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient {p_idx} has shape {g.shape}, expected {p.shape}")
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        total += flat_p.size
        for i in range(flat_p.size):
            orig = flat_p[i]
            perturbed = [q.copy() for q in params]
            perturbed[p_idx].reshape(-1)[i] = orig + step
            f_plus, _ = loss_fn(perturbed)
            perturbed[p_idx].reshape(-1)[i] = orig - step
            f_minus, _ = loss_fn(perturbed)
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise ValueError("loss is non-finite at a perturbed point")
            numeric = (f_plus - f_minus) / (2.0 * step)
            denom = max(abs(flat_g[i]), abs(numeric), 1e-8)
            err = abs(flat_g[i] - numeric) / denom
            if err > worst_err:
                worst_err = err
                worst_index = flat_index
            flat_index += 1

    return GradCheckReport(
        max_relative_error=worst_err,
        worst_parameter_index=worst_index,
        num_parameters=total,
    )
