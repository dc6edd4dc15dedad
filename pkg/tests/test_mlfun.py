"""
Unit tests for the mlfun module.
"""

import math

import numpy as np
import pytest
from scipy import linalg, special

from src.core import mlfun
from src.core.errors import DomainError, NumericFailure
from src.core.mlfun import MLParams


def test_params_validation():
    """Indices outside their ranges are rejected."""
    with pytest.raises(DomainError):
        MLParams(0.0, 1.0)
    with pytest.raises(DomainError):
        MLParams(1.2, 1.0)
    with pytest.raises(DomainError):
        MLParams(0.5, 0.0)
    with pytest.raises(DomainError):
        MLParams(float("nan"), 1.0)


def test_exponential_case():
    """E_{1,1} is the exponential function."""
    params = MLParams(1.0, 1.0)
    for z in (-2.0, 0.0, 1.0):
        assert mlfun.ml_scalar(params, z) == pytest.approx(math.exp(z), rel=1e-14)


def test_constant_term():
    """E_{a,b}(0) = 1/Gamma(b)."""
    value = mlfun.ml_scalar(MLParams(0.7, 0.7), 0.0)
    assert value.real == pytest.approx(1.0 / math.gamma(0.7), rel=1e-14)
    assert value.real == pytest.approx(0.769111, abs=1e-6)


def test_half_index_closed_form():
    """E_{1/2,1}(-x) = exp(x^2) erfc(x) across the series and integral regimes."""
    params = MLParams(0.5, 1.0)
    assert mlfun.ml_scalar(params, -1.0).real == pytest.approx(
        math.e * math.erfc(1.0), rel=1e-10
    )
    for x in (0.5, 3.0, 10.0, 100.0):
        assert mlfun.ml_scalar(params, -x).real == pytest.approx(special.erfcx(x), rel=1e-10)


def test_series_oracle_matches_closed_form():
    """The extended-precision series reproduces the closed form with a fixed term count."""
    value = mlfun.ml_scalar_series(MLParams(0.5, 1.0), -1.0, terms=200)
    assert value.real == pytest.approx(math.e * math.erfc(1.0), rel=1e-14)


def test_alpha_one_general_beta():
    """E_{1,2}(z) = (e^z - 1) / z."""
    params = MLParams(1.0, 2.0)
    for z in (-3.0, 0.5, 2.0):
        assert mlfun.ml_scalar(params, z).real == pytest.approx(math.expm1(z) / z, rel=1e-12)


def test_regime_overlap():
    """Series and asymptotic expansion agree on the negative axis."""
    params = MLParams(0.5, 1.0)
    for z in (-10.0, -20.0, -30.0):
        series = mlfun.ml_scalar_series(params, z)
        asymptotic = mlfun.ml_scalar_asymptotic(params, z)
        assert abs(series - asymptotic) <= 1e-8 * abs(series)


def test_integral_regime_matches_series():
    """The integral representation agrees with the series oracle."""
    for alpha in (0.7, 0.9):
        params = MLParams(alpha, 1.0)
        for z in (-6.0, -10.0, -20.0):
            series = mlfun.ml_scalar_series(params, z)
            assert abs(mlfun.ml_scalar(params, z) - series) <= 1e-8 * abs(series)


def test_recurrence_for_large_beta():
    """E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z."""
    alpha, beta, z = 0.6, 1.8, -12.0
    lower = mlfun.ml_scalar(MLParams(alpha, beta - alpha), z)
    expected = (lower - 1.0 / math.gamma(beta - alpha)) / z
    assert mlfun.ml_scalar(MLParams(alpha, beta), z) == pytest.approx(expected, rel=1e-9)


def test_asymptotic_poles_vanish():
    """Terms with 1/Gamma at a pole contribute nothing: E_{1/2,1/2}(z) decays like z^-2."""
    value = mlfun.ml_scalar_asymptotic(MLParams(0.5, 0.5), -1e4)
    leading = -(1e4**-2) / math.gamma(0.5 - 1.0)
    assert value.real == pytest.approx(leading, rel=1e-3)


def test_non_finite_argument():
    """Infinite or NaN arguments raise DomainError."""
    with pytest.raises(DomainError):
        mlfun.ml_scalar(MLParams(0.5, 1.0), float("inf"))
    with pytest.raises(DomainError):
        mlfun.ml_scalar(MLParams(0.5, 1.0), complex(0.0, float("nan")))


def test_asymptotic_fails_for_small_argument():
    """The expansion refuses arguments where it cannot reach working accuracy."""
    with pytest.raises(NumericFailure):
        mlfun.ml_scalar_asymptotic(MLParams(0.5, 1.0), -2.0)


def test_as_square_validation():
    """Non-square and non-finite matrices are rejected."""
    with pytest.raises(DomainError):
        mlfun.as_square(np.ones((2, 3)))
    with pytest.raises(DomainError):
        mlfun.as_square(np.array([[np.inf]]))


def test_matrix_exponential_agreement():
    """E_{1,1}(A) equals expm(A)."""
    a = np.array([[-2.0, 1.0, 0.5], [0.3, -1.0, 0.2], [0.0, 0.4, -0.7]])
    np.testing.assert_allclose(
        mlfun.ml_matrix(MLParams(1.0, 1.0), a), linalg.expm(a), rtol=1e-10, atol=1e-14
    )


def test_diagonal_matrix_is_elementwise():
    """On a diagonal matrix the function acts on the eigenvalues."""
    params = MLParams(0.6, 0.6)
    eigenvalues = np.array([-0.5, -3.0, -12.0])
    result = mlfun.ml_matrix(params, np.diag(eigenvalues))
    expected = [mlfun.ml_scalar(params, z).real for z in eigenvalues]
    np.testing.assert_allclose(np.diag(result), expected, rtol=1e-12)
    assert np.allclose(result - np.diag(np.diag(result)), 0.0)


def test_jordan_block_matches_series():
    """A defective matrix goes through the non-spectral path and matches the series."""
    jordan = np.array([[-1.0, 1.0], [0.0, -1.0]])
    params = MLParams(0.6, 0.6)
    result = mlfun.ml_matrix(params, jordan)
    np.testing.assert_allclose(
        result, mlfun.ml_matrix_series(params, jordan, terms=300), rtol=1e-8, atol=1e-12
    )
    assert result[0, 0] == pytest.approx(mlfun.ml_scalar(params, -1.0).real, rel=1e-8)


def test_small_jordan_chain_matches_series():
    """A 3x3 chain inside the series radius also passes the built-in cross-check."""
    jordan = np.array([[-0.25, 0.5, 0.0], [0.0, -0.25, 0.5], [0.0, 0.0, -0.25]])
    params = MLParams(0.6, 1.0)
    np.testing.assert_allclose(
        mlfun.ml_matrix(params, jordan),
        mlfun.ml_matrix_series(params, jordan),
        rtol=1e-8,
        atol=1e-12,
    )


def test_functional_calculus_on_known_eigenbasis():
    """E(V diag(lambda) V^-1) = V diag(E(lambda)) V^-1, complex pairs included."""
    pair = np.array([[1.0, 1.0], [1.0j, -1.0j]])
    vectors = np.array([[2.0, 0.5, 0.1], [0.3, 3.0, -0.4], [0.0, 0.2, 2.5]]) @ linalg.block_diag(
        pair, 1.0
    )
    eigenvalues = np.array([-1.0 + 2.0j, -1.0 - 2.0j, -6.0])
    inverse = np.linalg.inv(vectors)
    a = (vectors @ np.diag(eigenvalues) @ inverse).real
    params = MLParams(0.7, 0.9)
    expected = vectors @ np.diag(mlfun.ml_values(params, eigenvalues)) @ inverse
    result = mlfun.ml_matrix(params, a)
    assert np.isrealobj(result)
    gap = np.max(np.abs(result - expected))
    assert gap <= 1e-9 * (1.0 + np.linalg.cond(vectors))


def test_exponential_semigroup():
    """E_{1,1}(A) E_{1,1}(-A) = I."""
    rng = np.random.default_rng(5)
    exp_params = MLParams(1.0, 1.0)
    for p in (2, 3):
        a = rng.normal(scale=0.5, size=(p, p))
        product = mlfun.ml_matrix(exp_params, a) @ mlfun.ml_matrix(exp_params, -a)
        np.testing.assert_allclose(product, np.eye(p), atol=1e-10)


def test_jordan_block_large_norm():
    """A defective matrix outside the series radius is still finite and upper triangular."""
    jordan = np.array([[-4.0, 1.0], [0.0, -4.0]])
    result = mlfun.ml_matrix(MLParams(0.8, 1.0), jordan)
    assert np.all(np.isfinite(result))
    assert abs(result[1, 0]) < 1e-8
    assert result[0, 0] == pytest.approx(mlfun.ml_scalar(MLParams(0.8, 1.0), -4.0).real, rel=1e-8)


def test_spectral_condition():
    """Symmetric matrices have perfectly conditioned eigenvectors."""
    info = mlfun.spectral(np.array([[-2.0, 1.0], [1.0, -2.0]]))
    assert info.condition == pytest.approx(1.0)
    assert sorted(info.eigenvalues.real) == pytest.approx([-3.0, -1.0])


def test_fractional_power_composition():
    """(-T)^-0.3 (-T)^-0.7 = (-T)^-1."""
    t = np.array([[-3.0, 1.0, 0.5], [0.2, -2.0, 1.0], [0.1, 0.1, -1.0]])
    product = mlfun.matrix_neg_fractional_power(t, 0.3) @ mlfun.matrix_neg_fractional_power(
        t, 0.7
    )
    np.testing.assert_allclose(product, np.linalg.inv(-t), rtol=1e-9)


@pytest.mark.parametrize("s1", [0.3, 0.5, 1.0])
@pytest.mark.parametrize("s2", [0.3, 0.5, 1.0])
def test_fractional_power_exponents_add(s1, s2):
    """(-T)^-s1 (-T)^-s2 = (-T)^-(s1+s2) for every pair of exponents."""
    t = np.array([[-3.0, 1.0, 0.5], [0.2, -2.0, 1.0], [0.1, 0.1, -1.0]])
    product = mlfun.matrix_neg_fractional_power(t, s1) @ mlfun.matrix_neg_fractional_power(t, s2)
    combined = mlfun.matrix_neg_fractional_power(t, s1 + s2)
    np.testing.assert_allclose(product, combined, rtol=1e-9, atol=1e-12)


def test_fractional_power_defective():
    """The Schur-Pade fallback handles a defective matrix."""
    t = np.array([[-2.0, 2.0], [0.0, -2.0]])
    half = mlfun.matrix_neg_fractional_power(t, 0.5)
    np.testing.assert_allclose(half @ half, np.linalg.inv(-t), rtol=1e-9)


def test_fractional_power_validation():
    """Nonpositive exponents and unstable matrices are rejected."""
    with pytest.raises(DomainError):
        mlfun.matrix_neg_fractional_power(np.array([[-1.0]]), 0.0)
    with pytest.raises(DomainError):
        mlfun.matrix_neg_fractional_power(np.array([[1.0]]), 0.5)
