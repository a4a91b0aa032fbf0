"""Gaussian type, densities, entropy, KL, squared distance, geodesic."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gauss_eot import (
    DegenerateMatrix,
    DimensionMismatch,
    Gaussian,
    MarginalMismatch,
    SpdMatrix,
    TOutOfRange,
    entropy,
    kl_divergence,
    kl_identity_check,
    log_density,
    optimal_plan,
    sample,
    w2_distance_sq,
    w2_geodesic,
)

from conftest import gaussian_pairs, make_gaussian


def test_gaussian_validates_and_freezes():
    g = Gaussian([1.0, 2.0], SpdMatrix([[2.0, 0.5], [0.5, 1.0]]))
    assert g.dim == 2
    assert not g.mean.flags.writeable
    with pytest.raises(DimensionMismatch):
        Gaussian([1.0], SpdMatrix([[1.0, 0.0], [0.0, 1.0]]))


def test_gaussian_coerces_plain_covariance_arrays():
    g = Gaussian([0.0, 0.0], np.eye(2))
    assert isinstance(g.cov, SpdMatrix)
    assert g.cov.eigvals == pytest.approx([1.0, 1.0])
    with pytest.raises(DegenerateMatrix):
        Gaussian([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])  # indefinite


def test_gaussian_dict_roundtrip():
    g = Gaussian([1.0, -0.5], SpdMatrix([[2.0, 0.3], [0.3, 1.0]]))
    back = Gaussian.from_dict(g.to_dict())
    assert np.array_equal(back.mean, g.mean)
    assert np.array_equal(back.cov.array, g.cov.array)


def test_log_density_standard_normal():
    g = Gaussian([0.0], SpdMatrix([[1.0]]))
    assert log_density(g, [0.0]) == pytest.approx(-0.5 * np.log(2.0 * np.pi))
    assert log_density(g, [1.0]) == pytest.approx(-0.5 * np.log(2.0 * np.pi) - 0.5)


def test_entropy_standard_normal():
    g = Gaussian([0.0], SpdMatrix([[1.0]]))
    assert entropy(g) == pytest.approx(0.5 * (1.0 + np.log(2.0 * np.pi)))


def test_entropy_shift_invariant_scale_covariant():
    k = SpdMatrix([[2.0, 0.4], [0.4, 1.0]])
    g = Gaussian([0.0, 0.0], k)
    shifted = Gaussian([5.0, -3.0], k)
    assert entropy(g) == entropy(shifted)
    doubled = Gaussian([0.0, 0.0], SpdMatrix(4.0 * k.array))
    assert entropy(doubled) == pytest.approx(entropy(g) + 2.0 * np.log(2.0))


def test_kl_of_identical_inputs_is_exactly_zero():
    g = Gaussian([1.0, 2.0], SpdMatrix([[2.0, 0.3], [0.3, 1.0]]))
    assert kl_divergence(g, g) == 0.0


def test_kl_scalar_closed_form():
    g0 = Gaussian([0.0], SpdMatrix([[1.0]]))
    g1 = Gaussian([1.0], SpdMatrix([[2.0]]))
    expected = 0.5 * (0.5 + 0.5 + np.log(2.0) - 1.0)
    assert kl_divergence(g0, g1) == pytest.approx(expected, abs=1e-12)


@given(gaussian_pairs())
def test_kl_nonnegative_and_asymmetric_in_general(pair):
    g0, g1 = pair
    assert kl_divergence(g0, g1) >= 0.0
    assert kl_divergence(g1, g0) >= 0.0


@given(gaussian_pairs(max_dim=3))
def test_kl_monte_carlo_agreement(pair):
    g0, g1 = pair
    xs = sample(g0, 40_000, seed=99)
    logs = log_density(g0, xs) - log_density(g1, xs)
    se = float(np.std(logs, ddof=1) / np.sqrt(len(logs)))
    assert abs(float(np.mean(logs)) - kl_divergence(g0, g1)) < 5.0 * se + 1e-12


def test_kl_identity_for_entropic_plans(rng):
    for _ in range(5):
        dim = int(rng.integers(1, 4))
        g0 = make_gaussian(rng, dim)
        g1 = make_gaussian(rng, dim)
        plan = optimal_plan(g0, g1, 1.5)
        kl, combo, diff = kl_identity_check(g0, g1, plan)
        assert diff < 1e-9
        assert kl == pytest.approx(combo, abs=1e-9)


def test_kl_identity_rejects_foreign_plan(rng):
    g0 = make_gaussian(rng, 2)
    g1 = make_gaussian(rng, 2)
    other = make_gaussian(rng, 2)
    plan = optimal_plan(g0, g1, 1.0)
    with pytest.raises(MarginalMismatch):
        kl_identity_check(other, g1, plan)


def test_sample_is_seeded_and_matches_moments():
    g = Gaussian([1.0, -2.0], SpdMatrix([[2.0, 0.6], [0.6, 1.0]]))
    xs = sample(g, 200_000, seed=5)
    assert np.array_equal(xs, sample(g, 200_000, seed=5))
    assert np.allclose(xs.mean(axis=0), g.mean, atol=0.02)
    assert np.allclose(np.cov(xs.T), g.cov.array, atol=0.05)


def test_w2_scalar_closed_form():
    g0 = Gaussian([0.0], SpdMatrix([[1.0]]))
    g1 = Gaussian([3.0], SpdMatrix([[4.0]]))
    assert w2_distance_sq(g0, g1) == pytest.approx(9.0 + (2.0 - 1.0) ** 2)


@given(gaussian_pairs())
def test_w2_is_symmetric_and_zero_on_diagonal(pair):
    g0, g1 = pair
    assert w2_distance_sq(g0, g1) == pytest.approx(w2_distance_sq(g1, g0), abs=1e-9)
    assert w2_distance_sq(g0, g0) <= 1e-10


def test_w2_commuting_case_reduces_to_eigenvalue_formula():
    k0 = SpdMatrix(np.diag([1.0, 4.0]))
    k1 = SpdMatrix(np.diag([9.0, 1.0]))
    g0 = Gaussian([0.0, 0.0], k0)
    g1 = Gaussian([0.0, 0.0], k1)
    expected = (1.0 - 3.0) ** 2 + (2.0 - 1.0) ** 2
    assert w2_distance_sq(g0, g1) == pytest.approx(expected, abs=1e-10)


def test_geodesic_endpoints_and_midpoint():
    g0 = Gaussian([0.0], SpdMatrix([[1.0]]))
    g1 = Gaussian([2.0], SpdMatrix([[4.0]]))
    assert np.array_equal(w2_geodesic(g0, g1, 0.0).cov.array, g0.cov.array)
    assert np.array_equal(w2_geodesic(g0, g1, 1.0).cov.array, g1.cov.array)
    mid = w2_geodesic(g0, g1, 0.5)
    assert mid.mean[0] == pytest.approx(1.0)
    assert mid.cov.array[0, 0] == pytest.approx(2.25)
    with pytest.raises(TOutOfRange):
        w2_geodesic(g0, g1, 1.5)


@given(gaussian_pairs(max_dim=4), st.floats(min_value=0.0, max_value=1.0))
def test_geodesic_distance_is_linear_in_t(pair, t):
    g0, g1 = pair
    total = np.sqrt(w2_distance_sq(g0, g1))
    gt = w2_geodesic(g0, g1, float(t))
    partial = np.sqrt(max(w2_distance_sq(g0, gt), 0.0))
    assert partial == pytest.approx(t * total, abs=1e-6)
