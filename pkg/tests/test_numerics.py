import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nadecomplete import numerics


def naive_matmul(a, b):
    """Triple-loop oracle: left-to-right accumulation over the inner index."""
    m, kk = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for k in range(kk):
                acc += float(a[i, k]) * float(b[k, j])
            out[i, j] = acc
    return out


class TestMatmul:
    def test_identity(self):
        out = numerics.matmul([[1, 0], [0, 1]], [[3], [4]])
        assert np.array_equal(out, [[3], [4]])

    def test_hand_computed(self):
        out = numerics.matmul([[1, 2]], [[3], [4]])
        assert np.array_equal(out, [[11]])

    def test_matches_triple_loop_5x7x3(self):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((5, 7)), rng.standard_normal((7, 3))
        assert np.array_equal(numerics.matmul(a, b), naive_matmul(a, b))

    def test_matches_triple_loop_all_shapes_to_8(self):
        rng = np.random.default_rng(1)
        for m in range(1, 9):
            for k in range(1, 9):
                for n in range(1, 9):
                    a = rng.standard_normal((m, k))
                    b = rng.standard_normal((k, n))
                    assert np.array_equal(numerics.matmul(a, b), naive_matmul(a, b))

    def test_matches_triple_loop_larger_and_views(self):
        # guards the compiled kernel: no fused multiply-add, no reordering
        rng = np.random.default_rng(2)
        a = rng.standard_normal((33, 57)) * 1e3
        b = rng.standard_normal((57, 21)) * 1e-3
        expect = naive_matmul(a, b)
        assert np.array_equal(numerics.matmul(a, b), expect)
        assert np.array_equal(numerics.matmul(a.T.T, b), expect)  # non-contiguous view

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            numerics.matmul(np.ones((2, 3)), np.ones((2, 3)))
        with pytest.raises(ValueError):
            numerics.matmul(np.ones(3), np.ones((3, 1)))


class TestSigmoid:
    def test_zero(self):
        assert numerics.sigmoid(0.0) == 0.5

    def test_no_underflow_at_minus_745(self):
        # must stay positive so log never sees exactly 0; the stable
        # log-sigmoid path keeps full precision where the direct log cannot
        s = numerics.sigmoid(-745.0)
        assert s > 0.0
        assert numerics.log_sigmoid(-745.0) == -745.0
        for z in (-30.0, -5.0, 0.0, 5.0, 30.0):
            assert math.isclose(
                math.log(numerics.sigmoid(z)), numerics.log_sigmoid(z), rel_tol=1e-12
            )

    @given(st.floats(min_value=-700, max_value=700, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, z):
        assert abs(numerics.sigmoid(z) + numerics.sigmoid(-z) - 1.0) <= 1e-15

    def test_vectorized(self):
        z = np.array([-5.0, 0.0, 5.0])
        out = numerics.sigmoid(z)
        assert out.shape == (3,)
        assert np.all((out > 0) & (out < 1))


class TestBernoulliNll:
    def test_logit_zero(self):
        assert math.isclose(numerics.bernoulli_nll(0.0, 1), math.log(2), rel_tol=1e-15)
        assert math.isclose(numerics.bernoulli_nll(0.0, 0), math.log(2), rel_tol=1e-15)

    def test_confident_correct(self):
        # -log sigmoid(50) = log1p(exp(-50)) ~ exp(-50): tiny but not zero
        got = numerics.bernoulli_nll(50.0, 1)
        expect = math.log1p(math.exp(-50.0))
        assert got == expect
        assert 0.0 < got < 1e-21

    def test_confident_wrong(self):
        got = numerics.bernoulli_nll(-50.0, 1)
        assert math.isfinite(got)
        assert math.isclose(got, 50.0, rel_tol=1e-12)
        assert math.isclose(got, -numerics.log_sigmoid(-50.0), rel_tol=1e-12)

    @given(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        st.sampled_from([0, 1]),
    )
    @settings(max_examples=300, deadline=None)
    def test_nonnegative(self, logit, x):
        assert numerics.bernoulli_nll(logit, x) >= 0.0

    def test_grad_is_sigmoid_minus_x(self):
        z = np.linspace(-4, 4, 9)
        got = numerics.bernoulli_nll_grad(z, np.ones_like(z))
        assert np.allclose(got, numerics.sigmoid(z) - 1.0, atol=1e-15)


class TestLogMeanExp:
    def test_single_value_identity(self):
        assert numerics.logmeanexp([-3.5]) == -3.5

    def test_matches_direct_computation(self):
        vals = [-1.0, -2.0, -0.5]
        direct = math.log(sum(math.exp(v) for v in vals) / 3)
        assert math.isclose(numerics.logmeanexp(vals), direct, rel_tol=1e-14)

    def test_extreme_values_stable(self):
        out = numerics.logmeanexp([-1000.0, -1001.0])
        assert math.isfinite(out)
        assert -1001.0 <= out <= -1000.0 + math.log(1)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            numerics.logmeanexp([])


class TestCheckGradient:
    def test_linear_loss(self):
        c = np.array([[2.0, -3.0], [0.5, 4.0]])

        def loss_fn(params):
            (theta,) = params
            return float(np.sum(c * theta)), [c.copy()]

        report = numerics.check_gradient(loss_fn, [np.ones((2, 2))], step=1e-5)
        assert report.num_parameters == 4
        assert report.max_relative_error <= 1e-9

    def test_zero_parameters(self):
        report = numerics.check_gradient(lambda p: (1.0, []), [], step=1e-5)
        assert report.num_parameters == 0
        assert report.max_relative_error == 0.0

    def test_nonfinite_loss_raises(self):
        with pytest.raises(ValueError):
            numerics.check_gradient(lambda p: (math.inf, [np.zeros(1)]), [np.zeros(1)])

    def test_quadratic_worst_index(self):
        # gradient of sum(theta^2) is 2*theta; corrupt one entry on purpose
        def loss_fn(params):
            (theta,) = params
            g = 2.0 * theta
            g.reshape(-1)[2] += 1.0  # wrong on the third parameter
            return float(np.sum(theta**2)), [g]

        report = numerics.check_gradient(loss_fn, [np.arange(4.0).reshape(2, 2)])
        assert report.worst_parameter_index == 2
        assert report.max_relative_error > 0.1
