"""
Phase-type and MPH* representation algebra.

Representations are immutable and validated once at construction. Univariate
functionals (density, cdf, Laplace transform, fractional moments), the MPH*
joint Laplace transform, reward projections with their atom at zero, and the
feed-forward block chains with explicit joint densities all live here.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from src.core import config
from src.core.errors import (
    DegenerateDistributionError,
    DomainError,
    ModelError,
    NumericFailure,
)
from src.core.mlfun import matrix_neg_fractional_power

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    """A single broken invariant, with the offending index when there is one."""

    rule: str
    index: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        where = f" at index {self.index}" if self.index is not None else ""
        extra = f" ({self.detail})" if self.detail else ""
        return f"{self.rule}{where}{extra}"


@dataclass(frozen=True)
class Diagnostics:
    """Outcome of validate(); empty when every invariant holds."""

    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "pass"
        return "; ".join(str(v) for v in self.violations)


def frozen_array(arr: np.ndarray) -> np.ndarray:
    """Read-only float copy of an array."""
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _scale_tol(t: np.ndarray) -> float:
    return config.SUBINTENSITY_TOL * max(1.0, float(np.max(np.abs(t))))


def subintensity_violations(t) -> list[Violation]:
    """
    Lists the sub-intensity invariants broken by a matrix.

    Args:
        t: Candidate square matrix.

    Returns:
        list[Violation]: Empty when T is a valid sub-intensity matrix.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
        return [Violation("T must be square", detail=f"shape {t.shape}")]
    if not np.all(np.isfinite(t)):
        return [Violation("finite entries")]

    tol = _scale_tol(t)
    found = []
    off = t - np.diag(np.diag(t))
    for i, j in zip(*np.nonzero(off < -tol)):
        found.append(Violation("off-diagonal entries ≥ 0", int(i), f"column {j}"))
    for i in np.nonzero(np.diag(t) >= 0.0)[0]:
        found.append(Violation("diagonal entries < 0", int(i)))
    sums = t.sum(axis=1)
    for i in np.nonzero(sums > tol)[0]:
        found.append(Violation("row sums ≤ 0", int(i), f"sum {sums[i]:.6g}"))
    if not np.any(sums < -tol):
        found.append(Violation("exit vector has a positive entry"))
    if not found:
        values = np.linalg.eigvals(t)
        if np.max(values.real) >= 0.0:
            found.append(
                Violation(
                    "spectrum in the open left half-plane",
                    detail=f"max real part {np.max(values.real):.3g}",
                )
            )
    return found


def _pi_violations(pi, dim: int) -> list[Violation]:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.shape[0] != dim:
        return [Violation("pi length equals dim of T", detail=f"shape {pi.shape}")]
    if not np.all(np.isfinite(pi)):
        return [Violation("finite entries")]
    found = []
    for i in np.nonzero((pi < -config.SUBINTENSITY_TOL) | (pi > 1.0 + 1e-12))[0]:
        found.append(Violation("pi entries in [0,1]", int(i)))
    if pi.sum() > 1.0 + 1e-12:
        found.append(Violation("sum(pi) ≤ 1", detail=f"sum {pi.sum():.15g}"))
    return found


def _reward_violations(r, dim: int) -> list[Violation]:
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != dim or r.shape[1] < 1:
        return [Violation("R has one row per state", detail=f"shape {r.shape}")]
    if not np.all(np.isfinite(r)):
        return [Violation("finite entries")]
    found = []
    for i, k in zip(*np.nonzero(r < 0.0)):
        found.append(Violation("rewards ≥ 0", int(i), f"column {k}"))
    for k in np.nonzero(~np.any(r > 0.0, axis=0))[0]:
        found.append(Violation("degenerate coordinate", int(k)))
    return found


def validate(pi, t=None, r=None) -> Diagnostics:
    """
    Checks a (pi, T[, R]) triple against the MPH* invariants.

    Args:
        pi: Initial vector, or a PhaseTypeRep / MPHStarRep whose fields are
            checked in its place.
        t: Sub-intensity matrix; omitted when a representation is passed.
        r: Optional reward matrix (one row per state).

    Returns:
        Diagnostics: ``pass`` or the list of violated invariants with indices.

    Raises:
        DomainError: If a representation is combined with explicit T or R,
            or T is missing.
    """
    if isinstance(pi, (PhaseTypeRep, MPHStarRep)):
        if t is not None or r is not None:
            raise DomainError("pass either a representation or (pi, T[, R]), not both")
        pi, t, r = pi.pi, pi.T, getattr(pi, "R", None)
    elif t is None:
        raise DomainError("validate needs T alongside pi")
    found = subintensity_violations(t)
    dim = np.asarray(t).shape[0] if np.ndim(t) == 2 else -1
    found += _pi_violations(pi, dim)
    if r is not None:
        found += _reward_violations(r, dim)
    return Diagnostics(tuple(found))


def _require(diagnostics: Diagnostics, what: str) -> None:
    if not diagnostics.ok:
        raise ModelError(f"invalid {what}: {diagnostics}")


@dataclass(frozen=True, eq=False)
class PhaseTypeRep:
    """
    A (possibly defective) phase-type representation (pi, T).

    Attributes:
        pi (np.ndarray): Initial distribution over transient states.
        T (np.ndarray): Sub-intensity matrix.
    """

    pi: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        _require(validate(self.pi, self.T), "phase-type representation")
        object.__setattr__(self, "pi", frozen_array(np.maximum(self.pi, 0.0)))
        object.__setattr__(self, "T", frozen_array(self.T))

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @property
    def exit_vector(self) -> np.ndarray:
        return -self.T.sum(axis=1)

    @property
    def mass(self) -> float:
        return float(self.pi.sum())


@dataclass(frozen=True, eq=False)
class MPHStarRep:
    """
    An MPH* representation (pi, T, R).

    Attributes:
        pi (np.ndarray): Initial distribution.
        T (np.ndarray): Sub-intensity matrix.
        R (np.ndarray): p x n nonnegative reward matrix.
    """

    pi: np.ndarray
    T: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        _require(validate(self.pi, self.T, self.R), "MPH* representation")
        object.__setattr__(self, "pi", frozen_array(np.maximum(self.pi, 0.0)))
        object.__setattr__(self, "T", frozen_array(self.T))
        object.__setattr__(self, "R", frozen_array(self.R))

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @property
    def n(self) -> int:
        return self.R.shape[1]

    @property
    def exit_vector(self) -> np.ndarray:
        return -self.T.sum(axis=1)


@dataclass(frozen=True, eq=False)
class FeedForwardRep:
    """
    Feed-forward block chain: coordinate i is the time spent in block i.

    Attributes:
        pi (np.ndarray): Initial vector on the first block.
        C (tuple[np.ndarray, ...]): Diagonal sub-intensity blocks.
        D (tuple[np.ndarray, ...]): Coupling blocks; D_i is p_i x p_{i+1}
            and the last one is p_n x p_n.
    """

    pi: np.ndarray
    C: tuple
    D: tuple

    def __post_init__(self):
        if len(self.C) != len(self.D) or not self.C:
            raise ModelError("feed-forward rep needs one D block per C block")
        blocks = tuple(frozen_array(c) for c in self.C)
        couplings = tuple(frozen_array(d) for d in self.D)
        problems = []
        for i, c in enumerate(blocks):
            problems += [
                Violation(f"C_{i + 1}: {v.rule}", v.index, v.detail)
                for v in subintensity_violations(c)
            ]
        problems += _pi_violations(self.pi, blocks[0].shape[0])
        if not problems:
            problems += _coupling_violations(blocks, couplings)
        _require(Diagnostics(tuple(problems)), "feed-forward representation")
        object.__setattr__(self, "pi", frozen_array(np.maximum(self.pi, 0.0)))
        object.__setattr__(self, "C", blocks)
        object.__setattr__(self, "D", couplings)

    @property
    def n(self) -> int:
        return len(self.C)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[0] for c in self.C)


def _coupling_violations(blocks, couplings) -> list[Violation]:
    found = []
    n = len(blocks)
    for i, (c, d) in enumerate(zip(blocks, couplings)):
        rows = c.shape[0]
        cols = blocks[i + 1].shape[0] if i + 1 < n else rows
        if d.shape != (rows, cols):
            found.append(Violation(f"D_{i + 1} shape", detail=f"{d.shape}"))
            continue
        for r, k in zip(*np.nonzero(d < 0.0)):
            found.append(Violation(f"D_{i + 1} entries ≥ 0", int(r), f"column {k}"))
        gap = -c.sum(axis=1) - d.sum(axis=1)
        tol = config.BALANCE_TOL * max(1.0, float(np.max(np.abs(c))))
        for r in np.nonzero(np.abs(gap) > tol)[0]:
            found.append(
                Violation(
                    f"-C_{i + 1} e = D_{i + 1} e", int(r), f"residual {gap[r]:.3g}"
                )
            )
    return found


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """
    Law of a nonnegative linear functional of an MPH* vector.

    Attributes:
        atom (float): Probability mass at zero.
        rep (PhaseTypeRep): Possibly defective representation of the rest.
        reordering (np.ndarray): Original indices of the retained states.
    """

    atom: float
    rep: PhaseTypeRep
    reordering: np.ndarray


# ---------------------------------------------------------------------------
# Univariate functionals
# ---------------------------------------------------------------------------


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


def left_solve(vector: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Returns vector @ inv(matrix) without forming the inverse."""
    try:
        return np.linalg.solve(matrix.T, vector)
    except np.linalg.LinAlgError as e:
        raise NumericFailure(f"singular linear system: {e}") from e


def ph_density(rep: PhaseTypeRep, x) -> float:
    """
    Density pi exp(Tx) t.

    Raises:
        DomainError: If x is not positive.
    """
    x = _positive(x)
    return float(rep.pi @ linalg.expm(rep.T * x) @ rep.exit_vector)


def ph_survival(rep: PhaseTypeRep, x) -> float:
    """Survival function pi exp(Tx) e of the absolutely continuous part."""
    x = _nonnegative(x)
    return float(rep.pi @ linalg.expm(rep.T * x) @ np.ones(rep.dim))


def ph_cdf(rep: PhaseTypeRep, x) -> float:
    """
    Distribution function 1 - pi exp(Tx) e.

    For a defective representation the returned function is the distribution
    of the absolutely continuous part, rising from 0 to sum(pi).
    """
    return rep.mass - ph_survival(rep, x)


def ph_laplace(rep: PhaseTypeRep, s) -> float:
    """Laplace transform pi (sI - T)^-1 t, by a linear solve."""
    s = _nonnegative(s, "s")
    shifted = s * np.eye(rep.dim) - rep.T
    return float(left_solve(rep.pi, shifted) @ rep.exit_vector)


def ph_fractional_moment(rep: PhaseTypeRep, a) -> float:
    """
    Fractional moment Gamma(a+1) pi (-T)^-a e.

    Raises:
        DomainError: If a is not positive.
    """
    a = _positive(a, "a")
    power = matrix_neg_fractional_power(rep.T, a)
    return float(special.gamma(a + 1.0) * (rep.pi @ power @ np.ones(rep.dim)))


# ---------------------------------------------------------------------------
# MPH*
# ---------------------------------------------------------------------------


def _reward_argument(u, n: int, name: str = "u") -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != n:
        raise DomainError(f"{name} must have {n} entries, got {u.shape[0]}")
    if not np.all(np.isfinite(u)) or np.any(u < 0.0):
        raise DomainError(f"{name} must be finite and nonnegative")
    return u


def mph_laplace(rep: MPHStarRep, u) -> float:
    """
    Joint Laplace transform pi (Delta(Ru) - T)^-1 t.

    A defective initial vector contributes its missing mass as an atom at the
    origin, so the transform at u = 0 is always 1.
    """
    u = _reward_argument(u, rep.n)
    shifted = np.diag(rep.R @ u) - rep.T
    value = left_solve(rep.pi, shifted) @ rep.exit_vector
    return float(1.0 - rep.pi.sum() + value)


def project(rep: MPHStarRep, w) -> ProjectionResult:
    """
    Law of <X, w> for an MPH* vector X and nonnegative weights w.

    States earning zero reward under w are censored out; the probability of
    absorbing before ever earning reward becomes an atom at zero.

    Args:
        rep (MPHStarRep): The joint representation.
        w: Nonnegative, nonzero weight vector of length n.

    Returns:
        ProjectionResult: The atom and the (possibly defective) PH part.

    Raises:
        DomainError: If w is negative or identically zero.
        DegenerateDistributionError: If no state earns reward under w.
    """
    w = _reward_argument(w, rep.n, "w")
    if not np.any(w > 0.0):
        raise DomainError("w must have a positive entry")
    return project_rates(rep.pi, rep.T, rep.R @ w)


def project_rates(pi: np.ndarray, t: np.ndarray, rates: np.ndarray) -> ProjectionResult:
    """
    Censors the states with zero reward rate and time-changes the rest.

    Args:
        pi (np.ndarray): Initial vector.
        t (np.ndarray): Sub-intensity matrix.
        rates (np.ndarray): Nonnegative reward rate of each state.

    Returns:
        ProjectionResult: Atom at zero and the law of the accumulated reward.
    """
    top = float(np.max(rates))
    if top <= 0.0:
        raise DegenerateDistributionError("the functional is almost surely zero")
    plus = rates > config.ZERO_REWARD_RTOL * top
    keep = np.nonzero(plus)[0]
    drop = np.nonzero(~plus)[0]

    t_pp = t[np.ix_(keep, keep)]
    pi_w = pi[keep].copy()
    atom = 1.0 - float(pi.sum())
    if drop.size:
        t_00 = t[np.ix_(drop, drop)]
        t_0p = t[np.ix_(drop, keep)]
        t_p0 = t[np.ix_(keep, drop)]
        try:
            green = np.linalg.solve(-t_00, t_0p)
        except np.linalg.LinAlgError as e:
            raise NumericFailure(f"zero-reward block is singular: {e}") from e
        reached = pi[drop] @ green
        pi_w = pi_w + reached
        t_pp = t_pp + t_p0 @ green
        atom += float(pi[drop].sum() - reached.sum())
        logger.debug("projection censored %d zero-reward states", drop.size)

    t_w = t_pp / rates[keep][:, np.newaxis]
    atom = min(max(atom, 0.0), 1.0)
    projected = PhaseTypeRep(np.minimum(np.maximum(pi_w, 0.0), 1.0), t_w)
    return ProjectionResult(atom=atom, rep=projected, reordering=keep)


def mph_marginal(rep: MPHStarRep, k: int) -> ProjectionResult:
    """Law of coordinate k (0-based), i.e. the projection on e_k."""
    if not 0 <= k < rep.n:
        raise DomainError(f"coordinate {k} out of range for n={rep.n}")
    return project(rep, np.eye(rep.n)[k])


def mph_moments(rep: MPHStarRep) -> tuple[np.ndarray, np.ndarray]:
    """
    First moments and second cross moments of an MPH* vector.

    Returns:
        tuple[np.ndarray, np.ndarray]: ``(mean, second)`` with
        ``second[i, j] = E[X_i X_j]``.
    """
    green = np.linalg.solve(-rep.T, np.eye(rep.dim))
    row = rep.pi @ green
    mean = row @ rep.R
    paths = green @ rep.R
    n = rep.n
    second = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            second[i, j] = row @ (rep.R[:, i] * paths[:, j]) + row @ (
                rep.R[:, j] * paths[:, i]
            )
    return mean, second


# ---------------------------------------------------------------------------
# Feed-forward chains
# ---------------------------------------------------------------------------


def _coordinates(x, n: int, strict: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DomainError(f"expected {n} coordinates, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DomainError("coordinates must be finite")
    if strict and np.any(x <= 0.0):
        raise DomainError("coordinates must be positive")
    if not strict and np.any(x < 0.0):
        raise DomainError("coordinates must be nonnegative")
    return x


def ff_joint_density(rep: FeedForwardRep, x) -> float:
    """Joint density pi exp(C_1 x_1) D_1 ... exp(C_n x_n) D_n e."""
    x = _coordinates(x, rep.n, strict=True)
    row = rep.pi
    for c, d, xi in zip(rep.C, rep.D, x):
        row = row @ linalg.expm(c * xi) @ d
    return float(row.sum())


def ff_laplace(rep: FeedForwardRep, u) -> float:
    """Joint Laplace transform pi prod (u_i I - C_i)^-1 D_i e."""
    u = _coordinates(u, rep.n, strict=False)
    row = rep.pi
    for c, d, ui in zip(rep.C, rep.D, u):
        row = left_solve(row, ui * np.eye(c.shape[0]) - c) @ d
    return float(1.0 - rep.pi.sum() + row.sum())


def ff_joint_fractional_moment(rep: FeedForwardRep, theta) -> float:
    """
    Joint moment E prod X_i^theta_i = prod Gamma(theta_i + 1) pi prod
    (-C_i)^(-theta_i - 1) D_i e.

    A zero exponent leaves its coordinate unweighted.
    """
    theta = _coordinates(theta, rep.n, strict=False)
    row = rep.pi
    for c, d, th in zip(rep.C, rep.D, theta):
        row = row @ matrix_neg_fractional_power(c, th + 1.0) @ d
    factor = float(np.prod(special.gamma(theta + 1.0)))
    return factor * float(row.sum())


def ff_to_mph(rep: FeedForwardRep) -> MPHStarRep:
    """
    Assembles the block bidiagonal MPH* form of a feed-forward chain.

    Block i sits on the diagonal with D_i immediately to its right; the last
    block exits through D_n e. R is the block indicator matrix.
    """
    dims = rep.dims
    offsets = np.concatenate([[0], np.cumsum(dims)])
    size = int(offsets[-1])
    t = np.zeros((size, size))
    r = np.zeros((size, rep.n))
    for i, (c, d) in enumerate(zip(rep.C, rep.D)):
        lo, hi = offsets[i], offsets[i + 1]
        t[lo:hi, lo:hi] = c
        r[lo:hi, i] = 1.0
        if i + 1 < rep.n:
            t[lo:hi, hi : offsets[i + 2]] = d
    pi = np.zeros(size)
    pi[: dims[0]] = rep.pi
    return MPHStarRep(pi, t, r)


# ---------------------------------------------------------------------------
# Random test representations
# ---------------------------------------------------------------------------


def random_subintensity(rng: np.random.Generator, p: int) -> np.ndarray:
    """
    Draws a sub-intensity matrix: off-diagonal and exit rates Uniform(0,1),
    diagonal set so each row balances.
    """
    t = rng.uniform(0.0, 1.0, size=(p, p))
    np.fill_diagonal(t, 0.0)
    exits = rng.uniform(0.0, 1.0, size=p)
    np.fill_diagonal(t, -(t.sum(axis=1) + exits))
    return t


def random_ph(rng: np.random.Generator, p: int) -> PhaseTypeRep:
    """Random proper phase-type representation of dimension p."""
    return PhaseTypeRep(rng.dirichlet(np.ones(p)), random_subintensity(rng, p))


def random_mph(
    rng: np.random.Generator, p: int, n: int, zero_fraction: float = 0.3
) -> MPHStarRep:
    """
    Random MPH* representation with some zero rewards.

    Each reward is Uniform(0,1) and set to zero with probability
    ``zero_fraction``; every column keeps at least one positive entry.
    """
    r = rng.uniform(0.0, 1.0, size=(p, n))
    r[rng.uniform(size=(p, n)) < zero_fraction] = 0.0
    for k in range(n):
        if not np.any(r[:, k] > 0.0):
            r[rng.integers(p), k] = rng.uniform(0.1, 1.0)
    return MPHStarRep(rng.dirichlet(np.ones(p)), random_subintensity(rng, p), r)
