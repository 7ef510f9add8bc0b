"""Target density tests: frozen values, quadrature normalization, conditionals."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from interchain.targets import (
    GaussianMixture,
    JointConditional,
    TargetDensity,
    conditional_from_joint,
    mixture_log_density,
    three_mode_benchmark,
)

LOG_INV_2PI = -np.log(2.0 * np.pi)


def test_single_standard_normal_at_mode():
    m = GaussianMixture(weights=[1.0], means=[[0.0, 0.0]], covariances=[np.eye(2)])
    assert mixture_log_density(m, np.zeros(2)) == pytest.approx(LOG_INV_2PI, abs=1e-14)


def test_benchmark_mixture_at_third_mode_matches_direct_summation():
    # direct summation with an independent pdf implementation
    m = three_mode_benchmark()
    x = np.array([-5.0, 5.0])
    expected = np.log(
        sum(
            w * multivariate_normal(mean, np.eye(2)).pdf(x)
            for w, mean in zip([0.1, 0.3, 0.6], [(-10, -10), (5, 0), (-5, 5)])
        )
    )
    assert mixture_log_density(m, x) == pytest.approx(expected, rel=1e-12)
    # the third component dominates: the value sits just above log(0.6/(2*pi))
    assert abs(mixture_log_density(m, x) - (np.log(0.6) + LOG_INV_2PI)) < 1e-6


def test_symmetric_two_component_mixture():
    # equal weights placed symmetrically: density is mirror-symmetric about x=0
    m = GaussianMixture(
        weights=[0.5, 0.5],
        means=[[-3.0, 0.0], [3.0, 0.0]],
        covariances=[np.eye(2), np.eye(2)],
    )
    for point in ([0.7, -0.4], [2.1, 1.3], [-0.2, 0.0]):
        x = np.asarray(point)
        mirrored = x * np.array([-1.0, 1.0])
        assert mixture_log_density(m, x) == pytest.approx(
            mixture_log_density(m, mirrored), rel=1e-14
        )


def test_mixture_log_density_finite_far_out():
    m = three_mode_benchmark()
    assert np.isfinite(mixture_log_density(m, np.array([300.0, -450.0])))


def test_density_integrates_to_one_1d():
    m = GaussianMixture(
        weights=[0.25, 0.75], means=[[-2.0], [3.0]], covariances=[[[0.5]], [[2.0]]]
    )
    xs = np.linspace(-2.0 - 8 * np.sqrt(0.5), 3.0 + 8 * np.sqrt(2.0), 20001)
    dens = np.exp(m.log_density_many(xs[:, None]))
    assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=1e-6)


def test_density_integrates_to_one_2d():
    m = three_mode_benchmark()
    xs = np.linspace(-18.0, 13.0, 401)
    ys = np.linspace(-18.0, 13.0, 401)
    grid = np.dstack(np.meshgrid(xs, ys)).reshape(-1, 2)
    dens = np.exp(m.log_density_many(grid)).reshape(len(ys), len(xs))
    total = np.trapezoid(np.trapezoid(dens, xs, axis=1), ys)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_dimension_mismatch_raises():
    m = three_mode_benchmark()
    with pytest.raises(ValueError):
        m.log_density(np.zeros(3))
    with pytest.raises(ValueError):
        m.log_density_many(np.zeros((4, 3)))


def test_weight_validation():
    with pytest.raises(ValueError):
        GaussianMixture(weights=[0.5, 0.6], means=[[0.0], [1.0]], covariances=[[[1.0]], [[1.0]]])
    with pytest.raises(ValueError):
        GaussianMixture(weights=[1.0, 0.0], means=[[0.0], [1.0]], covariances=[[[1.0]], [[1.0]]])


def test_covariance_validation():
    with pytest.raises(ValueError):
        GaussianMixture(weights=[1.0], means=[[0.0, 0.0]], covariances=[[[1.0, 2.0], [0.0, 1.0]]])
    with pytest.raises(ValueError):
        GaussianMixture(
            weights=[1.0], means=[[0.0, 0.0]], covariances=[[[1.0, 2.0], [2.0, 1.0]]]
        )


class HalfPlane(TargetDensity):
    """Gaussian restricted to x0 > 0; zero density elsewhere."""

    dim = 2

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        if x[0] <= 0.0:
            return -np.inf
        return -0.5 * float(x @ x)


def test_conditional_from_joint_zero_region_is_minus_inf():
    t = HalfPlane()
    assert conditional_from_joint(t, 0, -1.0, np.array([0.3])) == -np.inf
    assert np.isfinite(conditional_from_joint(t, 0, 1.0, np.array([0.3])))


def test_conditional_from_joint_independent_product():
    # for an independent product, the conditional is the marginal up to a constant
    m = GaussianMixture(weights=[1.0], means=[[1.0, -2.0]], covariances=[np.diag([2.0, 3.0])])
    rest = np.array([5.0])
    base = conditional_from_joint(m, 0, 0.0, rest)
    for xi in (-1.0, 0.5, 2.0):
        diff = conditional_from_joint(m, 0, xi, rest) - base
        expected = -0.5 * ((xi - 1.0) ** 2 - 1.0) / 2.0
        assert diff == pytest.approx(expected, rel=1e-12)


def test_conditional_from_joint_correlated_gaussian_closed_form():
    rho, s1, s2 = 0.8, 1.5, 0.7
    cov = np.array([[s1**2, rho * s1 * s2], [rho * s1 * s2, s2**2]])
    m = GaussianMixture(weights=[1.0], means=[[0.0, 0.0]], covariances=[cov])
    x2 = 1.3
    # quadratic fit of the log conditional recovers mean and variance
    xs = np.array([-1.0, 0.0, 1.0])
    vals = np.array([conditional_from_joint(m, 0, xi, np.array([x2])) for xi in xs])
    curv = vals[0] - 2 * vals[1] + vals[2]  # = -1/var
    slope = (vals[2] - vals[0]) / 2.0       # = (mean - x at 0) / var at midpoint
    var = -1.0 / curv
    mean = slope * var
    assert var == pytest.approx(s1**2 * (1 - rho**2), rel=1e-9)
    assert mean == pytest.approx(rho * s1 / s2 * x2, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    ell=st.integers(min_value=0, max_value=1),
    xi=st.floats(-8, 8),
    xi2=st.floats(-8, 8),
    r=st.floats(-8, 8),
)
def test_conditional_differences_match_joint(ell, xi, xi2, r):
    m = three_mode_benchmark()
    rest = np.array([r])
    lhs = conditional_from_joint(m, ell, xi2, rest) - conditional_from_joint(m, ell, xi, rest)
    a = np.insert(rest, ell, xi)
    b = np.insert(rest, ell, xi2)
    rhs = m.log_density(b) - m.log_density(a)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_joint_conditional_many_matches_scalar():
    m = three_mode_benchmark()
    ct = JointConditional(m)
    xis = np.array([-3.0, 0.0, 4.0])
    rest = np.array([1.0])
    batch = ct.log_conditional_many(1, xis, rest)
    single = [ct.log_conditional(1, float(v), rest) for v in xis]
    np.testing.assert_array_equal(batch, single)
