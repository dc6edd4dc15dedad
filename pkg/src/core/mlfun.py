"""
Mittag-Leffler functions of scalar and matrix argument.

The scalar function E_{a,b}(z) = sum_k z^k / Gamma(a k + b) is evaluated in
three regimes: the power series near the origin (accumulated with mpmath when
cancellation is possible), the asymptotic expansion far out on the negative
real axis, and an integral representation everywhere else. Matrix arguments go
through the spectral decomposition, a Schur-Parlett recurrence, or the Cauchy
integral on a circle around the spectrum, in that order.
"""

import cmath
import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, linalg, special

from src.core import config
from src.core.errors import DomainError, NumericFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MLParams:
    """Indices (alpha, beta) of E_{alpha,beta}."""

    alpha: float
    beta: float

    def __post_init__(self):
        alpha = float(self.alpha)
        beta = float(self.beta)
        if not (math.isfinite(alpha) and 0.0 < alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (math.isfinite(beta) and beta > 0.0):
            raise DomainError(f"beta must be positive, got {self.beta}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)


@dataclass(frozen=True)
class SpectralInfo:
    """
    Eigen-decomposition of a square matrix.

    Attributes:
        eigenvalues (np.ndarray): Complex eigenvalues, one per dimension.
        vectors (np.ndarray): Right eigenvectors as columns.
        condition (float): 2-norm condition number of ``vectors``; infinity
            when the eigenvector matrix is numerically singular.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    condition: float


def as_square(a, name: str = "matrix") -> np.ndarray:
    """
    Converts input to a finite square 2-D array.

    Args:
        a: Array-like matrix.
        name (str): Label used in error messages.

    Returns:
        np.ndarray: The matrix (float64 unless the input is complex).

    Raises:
        DomainError: If the input is not square, is empty, or is not finite.
    """
    arr = np.asarray(a)
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DomainError(f"{name} must be a non-empty square matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def _finite_complex(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"argument must be finite, got {z}")
    return z


def _rgamma(x: float) -> float:
    # 1/Gamma is exactly zero at the poles; snap near-integers produced by a*k
    nearest = round(x)
    if nearest <= 0 and abs(x - nearest) < 1e-12:
        return 0.0
    return float(special.rgamma(x))


# ---------------------------------------------------------------------------
# Scalar regimes
# ---------------------------------------------------------------------------


def ml_scalar(params: MLParams, z) -> complex:
    """
    Evaluates the Mittag-Leffler function E_{alpha,beta}(z).

    Args:
        params (MLParams): The indices.
        z: Finite real or complex argument.

    Returns:
        complex: The function value.

    Raises:
        DomainError: If z is not finite.
        NumericFailure: If two evaluation regimes disagree or overflow occurs.
    """
    z = _finite_complex(z)
    return _ml_cached(params.alpha, params.beta, z)


def ml_values(params: MLParams, zs) -> np.ndarray:
    """Vectorised ml_scalar over a 1-D array of arguments."""
    return np.array([ml_scalar(params, z) for z in np.ravel(zs)], dtype=complex)


@lru_cache(maxsize=config.ML_CACHE_SIZE)
def _ml_cached(alpha: float, beta: float, z: complex) -> complex:
    if z == 0:
        return complex(_rgamma(beta))
    if alpha == 1.0:
        return _alpha_one(beta, z)

    r = abs(z)
    if _series_feasible(alpha, z):
        return _series(alpha, beta, z)

    if z.imag == 0.0 and z.real <= config.ASYMPTOTIC_THRESHOLD:
        value = _asymptotic(alpha, beta, z)
        if value is not None:
            logger.debug("E(%s,%s) at %s: asymptotic regime", alpha, beta, z)
            return value

    if beta >= 1.0 + alpha:
        # E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
        lower = _ml_cached(alpha, beta - alpha, z)
        return (lower - _rgamma(beta - alpha)) / z

    logger.debug("E(%s,%s) at %s: integral regime (|z|=%g)", alpha, beta, z, r)
    return _integral(alpha, beta, z)


def _series_feasible(alpha: float, z: complex) -> bool:
    r = abs(z)
    if r <= config.SERIES_FLOAT_RADIUS:
        return True
    return r <= config.SERIES_RADIUS and r ** (1.0 / alpha) <= config.SERIES_MAX_GROWTH


def _alpha_one(beta: float, z: complex) -> complex:
    try:
        if beta == 1.0:
            value = cmath.exp(z)
        else:
            value = complex(special.hyp1f1(1.0, beta, z)) * _rgamma(beta)
    except OverflowError as e:
        raise NumericFailure(f"E(1,{beta}) overflows at z={z}") from e
    if not cmath.isfinite(value):
        raise NumericFailure(f"E(1,{beta}) is not finite at z={z}")
    return value


def _series(alpha: float, beta: float, z: complex) -> complex:
    r = abs(z)
    if r <= config.SERIES_FLOAT_RADIUS or (z.imag == 0.0 and z.real > 0.0):
        # no cancellation: terms are bounded by 1/Gamma or share one sign
        count = int(math.ceil(25.0 / alpha)) + 2
        while count <= config.SERIES_MAX_TERMS:
            k = np.arange(count)
            with np.errstate(all="ignore"):
                terms = np.power(z, k) * special.rgamma(alpha * k + beta)
            terms = np.nan_to_num(terms)
            value = complex(math.fsum(terms.real), math.fsum(terms.imag))
            if abs(terms[-1]) <= 1e-20 * max(abs(value), 1e-300):
                return value
            count *= 2
    return _series_mp(alpha, beta, z, None)


def _series_mp(alpha: float, beta: float, z: complex, terms: int | None) -> complex:
    r = abs(z)
    growth = r ** (1.0 / alpha) if r > 0 else 0.0
    dps = config.SERIES_GUARD_DIGITS + int(growth / math.log(10.0)) + 1
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z.real, z.imag)
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        cutoff = mpmath.mpf(10) ** (-(config.SERIES_GUARD_DIGITS - 8))
        peak = growth / alpha + 2
        limit = terms if terms is not None else config.SERIES_MAX_TERMS

        total = mpmath.mpc(0)
        power = mpmath.mpc(1)
        for k in range(limit):
            term = power * mpmath.rgamma(a * k + b)
            total += term
            if terms is None and k > peak and abs(term) <= cutoff * abs(total):
                break
            power *= zz
        else:
            if terms is None:
                raise NumericFailure(
                    f"series for E({alpha},{beta}) did not converge at z={z}",
                    candidates=(complex(total),),
                )
        return complex(total)


def ml_scalar_series(params: MLParams, z, terms: int | None = None) -> complex:
    """
    Power series of E_{alpha,beta}(z) accumulated in extended precision.

    Args:
        params (MLParams): The indices.
        z: Finite argument.
        terms (int | None): Exact number of terms to sum; by default the sum
            runs until a term falls below 1e-17 of the partial sum.

    Returns:
        complex: The series value.
    """
    z = _finite_complex(z)
    return _series_mp(params.alpha, params.beta, z, terms)


def _asymptotic(alpha: float, beta: float, z: complex) -> complex | None:
    total = 0j
    power = 1.0 + 0j
    inv = 1.0 / z
    last = math.inf
    for k in range(1, config.ASYMPTOTIC_MAX_TERMS):
        power *= inv
        g = _rgamma(beta - alpha * k)
        if g == 0.0:
            continue
        term = -power * g
        size = abs(term)
        if size > last:
            # terms started growing before reaching the target accuracy
            return None
        total += term
        last = size
        if size <= 1e-17 * abs(total):
            return total
    return None


def ml_scalar_asymptotic(params: MLParams, z) -> complex:
    """
    Asymptotic expansion -sum_{k>=1} z^-k / Gamma(beta - alpha k).

    Only meaningful for large |z| with |arg z| > alpha*pi and alpha < 1.

    Raises:
        NumericFailure: If the expansion cannot reach working accuracy at z.
    """
    z = _finite_complex(z)
    if z == 0:
        raise DomainError("asymptotic expansion is undefined at z = 0")
    value = _asymptotic(params.alpha, params.beta, z)
    if value is None:
        raise NumericFailure(f"asymptotic expansion does not converge at z={z}")
    return value


def _integral(alpha: float, beta: float, z: complex) -> complex:
    phase = abs(cmath.phase(z))
    edge = alpha * math.pi
    if abs(phase - edge) < config.RAY_GUARD:
        return _series_mp(alpha, beta, z, None)

    s1 = math.sin(math.pi * (1.0 - beta))
    s2 = math.sin(math.pi * (1.0 - beta + alpha))
    c = math.cos(edge)
    expo = (1.0 - beta) / alpha
    inv_alpha = 1.0 / alpha
    scale = 1.0 / (alpha * math.pi)
    r = abs(z)

    if z.imag == 0.0:
        x = z.real

        def kernel(chi):
            den = chi * chi - 2.0 * chi * x * c + x * x
            return chi**expo * math.exp(-(chi**inv_alpha)) * (chi * s1 - x * s2) / den

        value, error = _quad_parts(kernel, r, abs(c))
        value = complex(value, 0.0)
    else:

        def kernel_re(chi):
            return _complex_kernel(chi, z, s1, s2, c, expo, inv_alpha).real

        def kernel_im(chi):
            return _complex_kernel(chi, z, s1, s2, c, expo, inv_alpha).imag

        real, real_err = _quad_parts(kernel_re, r, abs(c))
        imag, imag_err = _quad_parts(kernel_im, r, abs(c))
        value = complex(real, imag)
        error = real_err + imag_err
    value *= scale
    error *= scale

    if phase < edge:
        try:
            value += inv_alpha * z**expo * cmath.exp(z**inv_alpha)
        except OverflowError as e:
            raise NumericFailure(f"E({alpha},{beta}) overflows at z={z}") from e
    if not cmath.isfinite(value):
        raise NumericFailure(f"E({alpha},{beta}) is not finite at z={z}")

    if error > 1e-9 * max(abs(value), 1e-300) and error > 1e-15:
        return _settle(alpha, beta, z, value)
    return value


def _settle(alpha: float, beta: float, z: complex, quad_value: complex) -> complex:
    """Resolves an inaccurate quadrature against the extended-precision series."""
    if abs(z) ** (1.0 / alpha) > config.SERIES_SETTLE_GROWTH:
        raise NumericFailure(
            f"integral representation of E({alpha},{beta}) inaccurate at z={z}",
            candidates=(quad_value,),
        )
    series_value = _series_mp(alpha, beta, z, None)
    gap = abs(series_value - quad_value)
    if gap > 1e-8 * max(abs(series_value), 1e-300):
        raise NumericFailure(
            f"regimes for E({alpha},{beta}) disagree at z={z}",
            candidates=(quad_value, series_value),
        )
    logger.info("E(%s,%s) at %s settled by the series", alpha, beta, z)
    return series_value


def _complex_kernel(chi, z, s1, s2, c, expo, inv_alpha) -> complex:
    den = chi * chi - 2.0 * chi * z * c + z * z
    return chi**expo * math.exp(-(chi**inv_alpha)) * (chi * s1 - z * s2) / den


def _quad_parts(kernel, r: float, cos_abs: float) -> tuple[float, float]:
    """Integrates kernel over (0, inf), hinting the near-singular abscissae."""
    upper = 2.0 * r
    hints = sorted({p for p in (r * cos_abs, r) if 0.0 < p < upper})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, head_err = integrate.quad(
            kernel,
            0.0,
            upper,
            points=hints or None,
            epsabs=config.QUAD_EPSABS,
            epsrel=config.QUAD_EPSREL,
            limit=config.QUAD_LIMIT,
        )
        tail, tail_err = integrate.quad(
            kernel,
            upper,
            np.inf,
            epsabs=config.QUAD_EPSABS,
            epsrel=config.QUAD_EPSREL,
            limit=config.QUAD_LIMIT,
        )
    return head + tail, head_err + tail_err


# ---------------------------------------------------------------------------
# Matrix functions
# ---------------------------------------------------------------------------


def spectral(a) -> SpectralInfo:
    """
    Computes eigenvalues, right eigenvectors and their conditioning.

    Args:
        a: Square matrix.

    Returns:
        SpectralInfo: The decomposition.

    Raises:
        NumericFailure: If the eigenvalue iteration does not converge.
    """
    a = as_square(a)
    try:
        values, vectors = np.linalg.eig(a)
    except np.linalg.LinAlgError as e:
        raise NumericFailure(f"eigenvalue iteration did not converge: {e}") from e

    with np.errstate(all="ignore"):
        condition = float(np.linalg.cond(vectors))
    if not math.isfinite(condition) or condition * np.finfo(float).eps >= 1.0:
        condition = math.inf
    return SpectralInfo(
        eigenvalues=values.astype(complex),
        vectors=vectors.astype(complex),
        condition=condition,
    )


def _maybe_real(a: np.ndarray, result: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(a):
        return result
    return np.real(result).copy()


def _from_spectrum(info: SpectralInfo, values: np.ndarray) -> np.ndarray:
    scaled = info.vectors * values[np.newaxis, :]
    # scaled @ inv(V), computed as a solve against V^T
    return np.linalg.solve(info.vectors.T, scaled.T).T


def ml_matrix(params: MLParams, a) -> np.ndarray:
    """
    Evaluates E_{alpha,beta}(A) for a square matrix A.

    Args:
        params (MLParams): The indices.
        a: Square matrix.

    Returns:
        np.ndarray: The matrix function, real when A is real.

    Raises:
        NumericFailure: If the contour quadrature does not converge or the
            series cross-check disagrees with the computed value.
    """
    a = as_square(a)
    if params.alpha == 1.0 and params.beta == 1.0:
        return linalg.expm(a)

    info = spectral(a)
    if info.condition < config.SPECTRAL_COND_MAX:
        values = ml_values(params, info.eigenvalues)
        return _maybe_real(a, _from_spectrum(info, values))

    result = _parlett(params, a)
    method = "schur-parlett"
    if result is None:
        result = _contour(params, a, info)
        method = "contour"
    logger.debug(
        "E(%s,%s) of a %d-dim matrix via %s", params.alpha, params.beta, a.shape[0], method
    )

    if np.linalg.norm(a, 1) <= config.SERIES_CHECK_NORM:
        check = ml_matrix_series(params, a)
        gap = float(np.max(np.abs(check - result)))
        if gap > config.SERIES_CHECK_TOL * max(1.0, float(np.max(np.abs(check)))):
            raise NumericFailure(
                f"{method} and series disagree by {gap:.3g}",
                candidates=(result, check),
            )
    return _maybe_real(a, result)


def _parlett(params: MLParams, a: np.ndarray) -> np.ndarray | None:
    def func(diagonal):
        return ml_values(params, diagonal)

    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        try:
            result, error = linalg.funm(a, func, disp=False)
        except (np.linalg.LinAlgError, ValueError, ZeroDivisionError):
            return None
    if not (np.isfinite(error) and error < config.PARLETT_ERR_MAX):
        return None
    if not np.all(np.isfinite(result)):
        return None
    return np.asarray(result, dtype=complex)


def _contour(params: MLParams, a: np.ndarray, info: SpectralInfo) -> np.ndarray:
    centre = complex(np.mean(info.eigenvalues))
    spread = float(np.max(np.abs(info.eigenvalues - centre)))
    radius = 1.5 * spread + 1.0

    nodes = config.CONTOUR_MIN_NODES
    previous = _trapezoid(params, a, centre, radius, nodes)
    while nodes < config.CONTOUR_MAX_NODES:
        nodes *= 2
        current = _trapezoid(params, a, centre, radius, nodes)
        change = float(np.max(np.abs(current - previous)))
        if change < config.CONTOUR_TOL * max(1.0, float(np.max(np.abs(current)))):
            logger.debug("contour converged with %d nodes", nodes)
            return current
        previous = current
    raise NumericFailure(
        f"contour quadrature did not converge with {nodes} nodes",
        candidates=(previous,),
    )


def _trapezoid(params, a, centre: complex, radius: float, nodes: int) -> np.ndarray:
    dim = a.shape[0]
    eye = np.eye(dim)
    total = np.zeros((dim, dim), dtype=complex)
    for theta in 2.0 * np.pi * np.arange(nodes) / nodes:
        shift = radius * cmath.exp(1j * theta)
        z = centre + shift
        resolvent = np.linalg.solve(z * eye - a, eye)
        total += ml_scalar(params, z) * shift * resolvent
    return total / nodes


def ml_matrix_series(params: MLParams, a, terms: int | None = None) -> np.ndarray:
    """
    Truncated power series sum_k A^k / Gamma(alpha k + beta).

    Args:
        params (MLParams): The indices.
        a: Square matrix; intended for small norms.
        terms (int | None): Exact number of terms; by default the sum stops
            once a term is below 1e-17 of the partial sum.

    Returns:
        np.ndarray: The truncated series.
    """
    a = as_square(a)
    dim = a.shape[0]
    result = np.zeros((dim, dim), dtype=a.dtype)
    power = np.eye(dim, dtype=a.dtype)
    limit = terms if terms is not None else config.SERIES_MAX_TERMS
    for k in range(limit):
        coeff = _rgamma(params.alpha * k + params.beta)
        term = coeff * power
        result = result + term
        if terms is None and k > 0:
            size = np.max(np.abs(term))
            if coeff != 0.0 and size <= 1e-17 * max(np.max(np.abs(result)), 1e-300):
                break
        power = power @ a
    return result


def matrix_neg_fractional_power(t, s: float) -> np.ndarray:
    """
    Computes (-T)^(-s) for a matrix whose negation has spectrum in Re > 0.

    Args:
        t: Square matrix (typically a sub-intensity matrix).
        s (float): Positive exponent.

    Returns:
        np.ndarray: The principal power.

    Raises:
        DomainError: If s is not positive or -T has spectrum off the open
            right half-plane.
    """
    t = as_square(t, "T")
    s = float(s)
    if not (math.isfinite(s) and s > 0.0):
        raise DomainError(f"exponent must be positive, got {s}")

    neg = -t
    info = spectral(neg)
    if np.any(info.eigenvalues.real <= 0.0):
        raise DomainError("spectrum of -T must lie in the open right half-plane")

    if s.is_integer():
        inverse = np.linalg.solve(neg, np.eye(neg.shape[0]))
        return np.linalg.matrix_power(inverse, int(s))
    if info.condition < config.SPECTRAL_COND_MAX:
        values = info.eigenvalues ** (-s)
        return _maybe_real(neg, _from_spectrum(info, values))

    logger.debug("(-T)^(-%s) via Schur-Pade", s)
    result = linalg.fractional_matrix_power(neg, -s)
    if not np.all(np.isfinite(result)):
        raise NumericFailure(f"fractional power (-T)^(-{s}) is not finite")
    return _maybe_real(neg, np.asarray(result))
