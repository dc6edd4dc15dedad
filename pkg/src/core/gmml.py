"""
Matrix Mittag-Leffler (MML) and generalized MML distributions.

Univariate MML laws with Laplace transform pi (u^alpha I - T)^-1 t, their
block generalization with one index per block of states, the multivariate
GMML class built on an MPH* backbone, the feed-forward subclass with an
explicit joint density, and power transforms X^(1/nu) with their moments.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from src.core import config
from src.core.errors import (
    DomainError,
    ModelError,
    MomentDoesNotExistError,
    OutOfDomainError,
)
from src.core.mlfun import MLParams, ml_matrix, spectral
from src.core.phasetype import (
    FeedForwardRep,
    MPHStarRep,
    PhaseTypeRep,
    ff_joint_fractional_moment,
    ff_to_mph,
    frozen_array,
    left_solve,
    ph_density,
    ph_fractional_moment,
    ph_survival,
    project_rates,
)
from src.utils.quadrature import heavy_tail_split

logger = logging.getLogger(__name__)


def _alpha(alpha) -> float:
    alpha = float(alpha)
    if not (math.isfinite(alpha) and 0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


def _alpha_vector(alphas, n: int) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if alphas.shape[0] != n:
        raise ModelError(f"expected {n} alphas, got {alphas.shape[0]}")
    if not np.all(np.isfinite(alphas)) or np.any(alphas <= 0.0) or np.any(alphas > 1.0):
        raise ModelError(f"every alpha must lie in (0, 1], got {alphas.tolist()}")
    return frozen_array(alphas)


def _positive(x, name: str = "x") -> float:
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"{name} must be positive, got {x}")
    return x


def _nonnegative(x, name: str = "x") -> float:
    x = float(x)
    if not (math.isfinite(x) and x >= 0.0):
        raise DomainError(f"{name} must be nonnegative, got {x}")
    return x


def _vector(v, n: int, name: str, strict: bool) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise DomainError(f"{name} must have {n} entries, got {v.shape[0]}")
    bad = (v <= 0.0) if strict else (v < 0.0)
    if not np.all(np.isfinite(v)) or np.any(bad):
        sign = "positive" if strict else "nonnegative"
        raise DomainError(f"{name} must be finite and {sign}")
    return v


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaBlocks:
    """
    Index vector of a block-generalized MML law.

    Attributes:
        alphas (tuple[float, ...]): One index in (0, 1] per block.
        dims (tuple[int, ...]): Number of states in each block.
    """

    alphas: tuple
    dims: tuple

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        dims = tuple(int(d) for d in self.dims)
        if len(alphas) != len(dims) or not alphas:
            raise ModelError("alphas and dims must be non-empty and of equal length")
        if any(not (0.0 < a <= 1.0) for a in alphas):
            raise ModelError(f"every alpha must lie in (0, 1], got {alphas}")
        if any(d < 1 for d in dims):
            raise ModelError(f"block dimensions must be positive, got {dims}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "dims", dims)

    @property
    def size(self) -> int:
        return sum(self.dims)

    def per_state(self) -> np.ndarray:
        """Index attached to each state, in state order."""
        return np.repeat(np.array(self.alphas), self.dims)


@dataclass(frozen=True, eq=False)
class GMMLUnivariateRep:
    """Univariate GMML law: a PH representation with block indices."""

    blocks: AlphaBlocks
    rep: PhaseTypeRep

    def __post_init__(self):
        if self.blocks.size != self.rep.dim:
            raise ModelError(
                f"alpha blocks cover {self.blocks.size} states, T has {self.rep.dim}"
            )


@dataclass(frozen=True, eq=False)
class GMMLRep:
    """
    Multivariate GMML law on an MPH* backbone.

    Attributes:
        alphas (np.ndarray): One index in (0, 1] per coordinate.
        base (MPHStarRep): The backbone representation.
    """

    alphas: np.ndarray
    base: MPHStarRep

    def __post_init__(self):
        object.__setattr__(self, "alphas", _alpha_vector(self.alphas, self.base.n))

    @property
    def n(self) -> int:
        return self.base.n


@dataclass(frozen=True)
class PowerParams:
    """Power exponents nu of the transform Y = X^(1/nu)."""

    nu: tuple

    def __post_init__(self):
        nu = tuple(float(v) for v in np.ravel(self.nu))
        if not nu or any(not (math.isfinite(v) and v > 0.0) for v in nu):
            raise ModelError(f"nu must be a non-empty positive vector, got {nu}")
        object.__setattr__(self, "nu", nu)

    def tail_index(self, alphas) -> np.ndarray:
        """Tail indices nu * alpha of the power-transformed coordinates."""
        alphas = np.asarray(alphas, dtype=float)
        if alphas.shape != (len(self.nu),):
            raise ModelError("alphas and nu must have the same length")
        return np.array(self.nu) * alphas


@dataclass(frozen=True, eq=False)
class FFGMMLRep:
    """Feed-forward chain whose i-th block carries the index alphas[i]."""

    ff: FeedForwardRep
    alphas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alphas", _alpha_vector(self.alphas, self.ff.n))

    @property
    def n(self) -> int:
        return self.ff.n


# ---------------------------------------------------------------------------
# Univariate MML
# ---------------------------------------------------------------------------


def mml_density(alpha, rep: PhaseTypeRep, x) -> float:
    """
    Density x^(alpha-1) pi E_{alpha,alpha}(T x^alpha) t.

    Args:
        alpha: Index in (0, 1].
        rep (PhaseTypeRep): The representation (pi, T).
        x: Positive point.

    Returns:
        float: The density value.
    """
    alpha = _alpha(alpha)
    x = _positive(x)
    if alpha == 1.0:
        return ph_density(rep, x)
    kernel = ml_matrix(MLParams(alpha, alpha), rep.T * x**alpha)
    return float(x ** (alpha - 1.0) * (rep.pi @ kernel @ rep.exit_vector))


def mml_survival(alpha, rep: PhaseTypeRep, x) -> float:
    """Survival function pi E_{alpha,1}(T x^alpha) e."""
    alpha = _alpha(alpha)
    x = _nonnegative(x)
    if alpha == 1.0:
        return ph_survival(rep, x)
    if x == 0.0:
        return rep.mass
    kernel = ml_matrix(MLParams(alpha, 1.0), rep.T * x**alpha)
    return float(rep.pi @ kernel @ np.ones(rep.dim))


def mml_cdf(alpha, rep: PhaseTypeRep, x) -> float:
    """
    Distribution function 1 - pi E_{alpha,1}(T x^alpha) e.

    As for phase-type laws, a defective representation yields the
    distribution of its absolutely continuous part.
    """
    return rep.mass - mml_survival(alpha, rep, x)


def mml_laplace(alpha, rep: PhaseTypeRep, u) -> float:
    """Laplace transform pi (u^alpha I - T)^-1 t."""
    alpha = _alpha(alpha)
    u = _nonnegative(u, "u")
    shifted = u**alpha * np.eye(rep.dim) - rep.T
    return float(left_solve(rep.pi, shifted) @ rep.exit_vector)


def mml_tail_constant(alpha, rep: PhaseTypeRep) -> float:
    """
    Constant c in the survival asymptotics 1 - F(x) ~ c x^(-alpha).

    Raises:
        DomainError: For alpha = 1, where the tail is exponential.
    """
    alpha = _alpha(alpha)
    if alpha == 1.0:
        raise DomainError("alpha = 1 laws have exponential tails")
    green_row = left_solve(rep.pi, -rep.T)
    return float(green_row.sum() * special.rgamma(1.0 - alpha))


def mml_survival_asymptotic(alpha, rep: PhaseTypeRep, x, terms: int = 3) -> float:
    """
    Large-x expansion -sum_k pi T^-k e x^(-alpha k) / Gamma(1 - alpha k).

    Used as the analytic tail beyond a quadrature split point.
    """
    alpha = _alpha(alpha)
    x = _positive(x)
    total = 0.0
    column = np.ones(rep.dim)
    for k in range(1, terms + 1):
        column = np.linalg.solve(rep.T, column)
        total -= float(rep.pi @ column) * x ** (-alpha * k) * special.rgamma(
            1.0 - alpha * k
        )
    return total


def mml_tail_split(alpha, rep: PhaseTypeRep) -> float:
    """Quadrature split point beyond which the tail expansion is accurate."""
    scale = float(np.min(np.abs(spectral(rep.T).eigenvalues)))
    return heavy_tail_split(_alpha(alpha), scale)


def stable_moment(alpha, q) -> float:
    """
    Moment E S^q of a positive stable variable with Laplace transform exp(-u^alpha).

    Raises:
        MomentDoesNotExistError: If alpha < 1 and q >= alpha.
    """
    alpha = _alpha(alpha)
    q = _nonnegative(q, "q")
    if alpha == 1.0 or q == 0.0:
        return 1.0
    if q >= alpha:
        raise MomentDoesNotExistError(
            f"stable moment of order {q} does not exist for alpha={alpha}"
        )
    return float(special.gamma(1.0 - q / alpha) * special.rgamma(1.0 - q))


def mml_fractional_moment(alpha, rep: PhaseTypeRep, theta) -> float:
    """
    Moment E X^theta = Gamma(1+theta/alpha) Gamma(1-theta/alpha) / Gamma(1-theta)
    * pi (-T)^(-theta/alpha) e.

    Raises:
        MomentDoesNotExistError: If alpha < 1 and theta >= alpha.
    """
    alpha = _alpha(alpha)
    theta = _positive(theta, "theta")
    if alpha == 1.0:
        return ph_fractional_moment(rep, theta)
    factor = stable_moment(alpha, theta)
    return factor * ph_fractional_moment(rep, theta / alpha)


def gmml_univariate_from_mml(alpha, rep: PhaseTypeRep) -> GMMLUnivariateRep:
    """Wraps an MML law as a single-block GMML law."""
    return GMMLUnivariateRep(AlphaBlocks((_alpha(alpha),), (rep.dim,)), rep)


def gmml_univ_laplace(rep: GMMLUnivariateRep, u) -> float:
    """Laplace transform pi (Delta(u^alpha_1 I_1, ..., u^alpha_n I_n) - T)^-1 t."""
    u = _nonnegative(u, "u")
    shift = np.diag(u ** rep.blocks.per_state())
    row = left_solve(rep.rep.pi, shift - rep.rep.T)
    return float(row @ rep.rep.exit_vector)


# ---------------------------------------------------------------------------
# Closure operations
# ---------------------------------------------------------------------------


def _chain(first: PhaseTypeRep, second: PhaseTypeRep) -> tuple[np.ndarray, np.ndarray]:
    p1, p2 = first.dim, second.dim
    t = np.zeros((p1 + p2, p1 + p2))
    t[:p1, :p1] = first.T
    t[:p1, p1:] = np.outer(first.exit_vector, second.pi)
    t[p1:, p1:] = second.T
    # a defective first summand starts the second one with its missing mass
    pi = np.concatenate([first.pi, (1.0 - first.mass) * second.pi])
    return pi, t


def convolve_same_index(
    first: tuple[float, PhaseTypeRep], second: tuple[float, PhaseTypeRep]
) -> tuple[float, PhaseTypeRep]:
    """
    Sum of two independent MML variables sharing the same index.

    Args:
        first: ``(alpha, rep)`` of the first summand.
        second: ``(alpha, rep)`` of the second summand.

    Returns:
        tuple[float, PhaseTypeRep]: ``(alpha, rep)`` with T = [[T1, t1 pi2], [0, T2]].

    Raises:
        DomainError: If the indices differ; use convolve_mixed instead.
    """
    a1, rep1 = _alpha(first[0]), first[1]
    a2, rep2 = _alpha(second[0]), second[1]
    if a1 != a2:
        raise DomainError(f"indices differ ({a1} vs {a2}); use convolve_mixed")
    pi, t = _chain(rep1, rep2)
    return a1, PhaseTypeRep(pi, t)


def convolve_mixed(
    first: GMMLUnivariateRep, second: GMMLUnivariateRep
) -> GMMLUnivariateRep:
    """Sum of two independent GMML variables; the index blocks concatenate."""
    pi, t = _chain(first.rep, second.rep)
    blocks = AlphaBlocks(
        first.blocks.alphas + second.blocks.alphas,
        first.blocks.dims + second.blocks.dims,
    )
    return GMMLUnivariateRep(blocks, PhaseTypeRep(pi, t))


def scale(alpha, rep: PhaseTypeRep, c) -> PhaseTypeRep:
    """Representation of cX: (pi, c^-alpha T)."""
    alpha = _alpha(alpha)
    c = _positive(c, "c")
    return PhaseTypeRep(rep.pi, rep.T * c ** (-alpha))


# ---------------------------------------------------------------------------
# Multivariate GMML
# ---------------------------------------------------------------------------


def gmml_joint_laplace(rep: GMMLRep, u) -> float:
    """
    Joint Laplace transform pi (Delta(R u^alpha) - T)^-1 t, with u^alpha taken
    coordinatewise; a defective pi adds its missing mass.
    """
    u = _vector(u, rep.n, "u", strict=False)
    base = rep.base
    shift = np.diag(base.R @ u**rep.alphas)
    row = left_solve(base.pi, shift - base.T)
    return float(1.0 - base.pi.sum() + row @ base.exit_vector)


def gmml_project(rep: GMMLRep, w) -> tuple[float, GMMLUnivariateRep]:
    """
    Law of <X, w> for a GMML vector X.

    Each retained state inherits the index of the coordinates it earns reward
    in; the states are regrouped so that equal indices form contiguous blocks.

    Args:
        rep (GMMLRep): The joint law.
        w: Nonnegative, nonzero weights.

    Returns:
        tuple[float, GMMLUnivariateRep]: The atom at zero and the GMML law of
        the absolutely continuous part.

    Raises:
        DomainError: If w is negative or zero.
        ModelError: If a retained state earns reward in coordinates with
            different indices.
        DegenerateDistributionError: If no state earns reward under w.
    """
    w = _vector(w, rep.n, "w", strict=False)
    if not np.any(w > 0.0):
        raise DomainError("w must have a positive entry")
    base = rep.base
    contributions = base.R * (w**rep.alphas)[np.newaxis, :]
    rates = contributions.sum(axis=1)
    projected = project_rates(base.pi, base.T, rates)

    # same relative cut as the zero-reward split, taken per state
    earning = contributions > config.ZERO_REWARD_RTOL * rates[:, np.newaxis]
    state_alpha = np.empty(projected.reordering.size)
    for slot, state in enumerate(projected.reordering):
        indices = np.unique(rep.alphas[earning[state]])
        if indices.size != 1:
            raise ModelError(
                f"state {state} earns reward under indices {indices.tolist()}"
            )
        state_alpha[slot] = indices[0]

    order = np.argsort(state_alpha, kind="stable")
    values, counts = np.unique(state_alpha, return_counts=True)
    law = PhaseTypeRep(projected.rep.pi[order], projected.rep.T[np.ix_(order, order)])
    blocks = AlphaBlocks(tuple(values.tolist()), tuple(counts.tolist()))
    return projected.atom, GMMLUnivariateRep(blocks, law)


# ---------------------------------------------------------------------------
# Feed-forward GMML
# ---------------------------------------------------------------------------


def ff_to_gmml(rep: FFGMMLRep) -> GMMLRep:
    """GMML form of a feed-forward law on its assembled MPH* backbone."""
    return GMMLRep(rep.alphas, ff_to_mph(rep.ff))


def ff_gmml_laplace(rep: FFGMMLRep, u) -> float:
    """Joint Laplace transform pi prod (u_i^alpha_i I - C_i)^-1 D_i e."""
    u = _vector(u, rep.n, "u", strict=False)
    row = rep.ff.pi
    for c, d, ui, ai in zip(rep.ff.C, rep.ff.D, u, rep.alphas):
        row = left_solve(row, ui**ai * np.eye(c.shape[0]) - c) @ d
    return float(1.0 - rep.ff.pi.sum() + row.sum())


def _block_kernel(c: np.ndarray, alpha: float, nu: float, x: float) -> np.ndarray:
    """nu x^(alpha nu - 1) E_{alpha,alpha}(C x^(alpha nu))."""
    power = alpha * nu
    return nu * x ** (power - 1.0) * ml_matrix(MLParams(alpha, alpha), c * x**power)


def _chain_density(rep: FFGMMLRep, nu: np.ndarray, x: np.ndarray) -> float:
    row = rep.ff.pi
    for c, d, ai, ni, xi in zip(rep.ff.C, rep.ff.D, rep.alphas, nu, x):
        row = row @ _block_kernel(c, ai, ni, xi) @ d
    return float(row.sum())


def ff_gmml_density(rep: FFGMMLRep, x) -> float:
    """Joint density pi prod x_i^(alpha_i-1) E_{alpha_i,alpha_i}(C_i x_i^alpha_i) D_i e."""
    x = _vector(x, rep.n, "x", strict=True)
    return _chain_density(rep, np.ones(rep.n), x)


def ff_gmml_density_grid(rep: FFGMMLRep, axes, nu=None) -> np.ndarray:
    """
    Joint density on the tensor grid spanned by ``axes``.

    Each block's matrix function is evaluated once per node of its own axis,
    and the chain is contracted axis by axis.

    Args:
        rep (FFGMMLRep): The joint law.
        axes: One 1-D array of positive nodes per coordinate.
        nu: Optional power exponents; the density of X^(1/nu) is returned.

    Returns:
        np.ndarray: Array of shape ``(len(axes[0]), ..., len(axes[n-1]))``.
    """
    if len(axes) != rep.n:
        raise DomainError(f"expected {rep.n} axes, got {len(axes)}")
    nu = np.ones(rep.n) if nu is None else _vector(nu, rep.n, "nu", strict=True)
    acc = None
    for c, d, ai, ni, axis in zip(rep.ff.C, rep.ff.D, rep.alphas, nu, axes):
        axis = np.asarray(axis, dtype=float).reshape(-1)
        if not np.all(np.isfinite(axis)) or np.any(axis <= 0.0):
            raise DomainError("grid nodes must be finite and positive")
        stack = np.stack([_block_kernel(c, ai, ni, xi) @ d for xi in axis])
        if acc is None:
            acc = np.einsum("a,jab->jb", rep.ff.pi, stack)
        else:
            acc = np.einsum("...a,jab->...jb", acc, stack)
    logger.debug("density grid of shape %s", acc.shape[:-1])
    return acc.sum(axis=-1)


def ff_gmml_marginal(rep: FFGMMLRep, i: int) -> tuple[float, PhaseTypeRep]:
    """
    Marginal law of coordinate i (0-based): MML(alpha_i, beta_i, C_i) with
    beta_i = pi prod_{j<i} (-C_j)^-1 D_j.
    """
    if not 0 <= i < rep.n:
        raise DomainError(f"coordinate {i} out of range for n={rep.n}")
    row = rep.ff.pi
    for c, d in zip(rep.ff.C[:i], rep.ff.D[:i]):
        row = left_solve(row, -c) @ d
    return float(rep.alphas[i]), PhaseTypeRep(np.clip(row, 0.0, 1.0), rep.ff.C[i])


# ---------------------------------------------------------------------------
# Power transforms
# ---------------------------------------------------------------------------


def power_density(alpha, rep: PhaseTypeRep, beta, x) -> float:
    """Density (beta/alpha) x^(beta-1) pi E_{alpha,alpha}(T x^beta) t of X^(alpha/beta)."""
    alpha = _alpha(alpha)
    beta = _positive(beta, "beta")
    x = _positive(x)
    kernel = _block_kernel(rep.T, alpha, beta / alpha, x)
    return float(rep.pi @ kernel @ rep.exit_vector)


def power_cdf(alpha, rep: PhaseTypeRep, beta, x) -> float:
    """Distribution function 1 - pi E_{alpha,1}(T x^beta) e."""
    alpha = _alpha(alpha)
    beta = _positive(beta, "beta")
    x = _nonnegative(x)
    if x == 0.0:
        return 0.0
    # P(X^(alpha/beta) <= x) = P(X <= x^(beta/alpha))
    return mml_cdf(alpha, rep, x ** (beta / alpha))


def power_laplace(alpha, rep: PhaseTypeRep, nu, s) -> float:
    """
    Laplace transform of X^(1/nu) by its series in s^(-nu alpha):
    s^(-nu alpha) pi sum_k Gamma(nu alpha (k+1)) / Gamma(alpha (k+1))
    (s^(-nu alpha) T)^k t.

    For nu > 1 the series is asymptotic; it is truncated at its smallest term
    and accepted when that term is negligible.

    Raises:
        DomainError: If nu < 1 or s is not positive.
        OutOfDomainError: If the terms never become small enough.
    """
    alpha = _alpha(alpha)
    nu = float(nu)
    if not (math.isfinite(nu) and nu >= 1.0):
        raise DomainError(f"nu must be at least 1, got {nu}")
    s = _positive(s, "s")

    rate = s ** (-nu * alpha)
    step = rate * rep.T
    column = rep.exit_vector.copy()
    total = 0.0
    best_size, best_total = math.inf, 0.0
    for k in range(config.WRIGHT_MAX_TERMS):
        log_coeff = special.gammaln(nu * alpha * (k + 1)) - special.gammaln(alpha * (k + 1))
        size = float(np.max(np.abs(column)))
        if size == 0.0:
            return rate * total
        log_size = log_coeff + math.log(size)
        if log_size > 700.0:
            break
        coeff = math.exp(log_coeff)
        total += coeff * float(rep.pi @ column)
        size = coeff * size
        if size <= config.WRIGHT_TOL * abs(total):
            return rate * total
        if size < best_size:
            best_size, best_total = size, total
        column = step @ column

    if best_size <= config.WRIGHT_ASYMPTOTIC_TOL * abs(best_total):
        logger.debug("power transform series truncated at term size %.3g", best_size)
        return rate * best_total
    raise OutOfDomainError(
        f"power transform series diverges at s={s} (smallest term {best_size:.3g})"
    )


def power_fractional_moment(alpha, rep: PhaseTypeRep, nu, theta) -> float:
    """Moment E Y^theta of Y = X^(1/nu), i.e. E X^(theta/nu)."""
    nu = _positive(nu, "nu")
    theta = _positive(theta, "theta")
    return mml_fractional_moment(alpha, rep, theta / nu)


def ff_power_joint_density(rep: FFGMMLRep, nu, x) -> float:
    """Joint density pi prod nu_i x_i^(alpha_i nu_i - 1) E(C_i x_i^(alpha_i nu_i)) D_i e."""
    nu = _vector(nu, rep.n, "nu", strict=True)
    x = _vector(x, rep.n, "x", strict=True)
    return _chain_density(rep, nu, x)


def ff_power_joint_moment(rep: FFGMMLRep, nu, theta) -> float:
    """
    Joint moment E prod Y_i^theta_i of Y = X^(1/nu).

    Written as prod E S_i^(theta_i/nu_i) times the feed-forward moment of the
    backbone at exponents theta_i / (nu_i alpha_i). Zero exponents leave their
    coordinate out.

    Raises:
        MomentDoesNotExistError: If theta_i >= nu_i alpha_i for some alpha_i < 1.
    """
    nu = _vector(nu, rep.n, "nu", strict=True)
    theta = _vector(theta, rep.n, "theta", strict=False)
    factor = 1.0
    for ai, ni, ti in zip(rep.alphas, nu, theta):
        if ai < 1.0 and ti >= ni * ai:
            raise MomentDoesNotExistError(
                f"moment of order {ti} needs nu*alpha > {ti}, got {ni * ai:.6g}"
            )
        factor *= stable_moment(ai, ti / ni)
    exponents = theta / (nu * rep.alphas)
    return factor * ff_joint_fractional_moment(rep.ff, exponents)


def correlation_power(rep: FFGMMLRep, nu, pair: tuple[int, int] = (0, 1)) -> float:
    """
    Pearson correlation of two coordinates of Y = X^(1/nu).

    Raises:
        MomentDoesNotExistError: If a coordinate with alpha < 1 has nu*alpha <= 2.
    """
    nu = _vector(nu, rep.n, "nu", strict=True)
    i, j = pair
    if i == j or not (0 <= i < rep.n and 0 <= j < rep.n):
        raise DomainError(f"invalid coordinate pair {pair}")
    for k in pair:
        if rep.alphas[k] < 1.0 and nu[k] * rep.alphas[k] <= 2.0:
            raise MomentDoesNotExistError(
                f"coordinate {k} has no variance (nu*alpha = {nu[k] * rep.alphas[k]:.6g})"
            )

    def moment(orders: dict[int, float]) -> float:
        theta = np.zeros(rep.n)
        for k, order in orders.items():
            theta[k] = order
        return ff_power_joint_moment(rep, nu, theta)

    mean_i, mean_j = moment({i: 1.0}), moment({j: 1.0})
    var_i = moment({i: 2.0}) - mean_i**2
    var_j = moment({j: 2.0}) - mean_j**2
    cross = moment({i: 1.0, j: 1.0})
    return (cross - mean_i * mean_j) / math.sqrt(var_i * var_j)
