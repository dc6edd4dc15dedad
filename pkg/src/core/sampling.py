"""
Exact random variate generation.

Positive stable variables come from the Kanter representation, MPH* reward
vectors from simulating the embedded jump chain until absorption, and GMML
vectors from the product W^(1/alpha) * S_alpha of the two. Every stream is
derived from an explicit RngState; batches are cut into fixed-size chunks with
their own child seed so the result does not depend on the number of threads.
"""

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from src.core import config
from src.core.errors import DomainError, ModelError, NumericFailure
from src.core.gmml import FFGMMLRep, GMMLRep, ff_to_gmml
from src.core.phasetype import MPHStarRep

logger = logging.getLogger(__name__)

BIT_GENERATORS = {
    "philox": np.random.Philox,
    "pcg64": np.random.PCG64,
}


@dataclass(frozen=True)
class RngState:
    """
    Seed and bit-generator name of a reproducible random stream.

    Attributes:
        seed (int): Unsigned 64-bit seed.
        algorithm (str): Key of BIT_GENERATORS.
    """

    seed: int = config.DEFAULT_SEED
    algorithm: str = config.RNG_ALGORITHM

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise DomainError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.algorithm not in BIT_GENERATORS:
            raise DomainError(
                f"unknown generator '{self.algorithm}', expected one of {sorted(BIT_GENERATORS)}"
            )
        object.__setattr__(self, "seed", int(self.seed))

    def generator(self, chunk: int = 0) -> np.random.Generator:
        """Independent generator for one chunk of a batch."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(chunk,))
        return np.random.Generator(BIT_GENERATORS[self.algorithm](sequence))


@dataclass(frozen=True)
class StableSpec:
    """Positive stable law with Laplace transform exp(-u^alpha)."""

    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and 0.0 < alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """
    A block of draws with the fingerprint of its payload.

    Attributes:
        values (np.ndarray): Array of shape (rows, n), entries >= 0.
        fingerprint (str): SHA-256 of the little-endian float64 payload.
        rng (RngState): The stream the draws came from.
    """

    values: np.ndarray
    fingerprint: str
    rng: RngState

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def fingerprint(values: np.ndarray) -> str:
    """SHA-256 hex digest of an array's little-endian float64 bytes."""
    payload = np.ascontiguousarray(values, dtype="<f8")
    return hashlib.sha256(payload.tobytes()).hexdigest()


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngState):
        return rng.generator()
    raise DomainError(f"expected RngState or numpy Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# Positive stable
# ---------------------------------------------------------------------------


def sample_stable_batch(spec: StableSpec, size: int, gen: np.random.Generator) -> np.ndarray:
    """
    Kanter draws from one uniform angle and one unit exponential each:
    sin(aU) / sin(U)^(1/a) * (sin((1-a)U) / E)^((1-a)/a).

    Args:
        spec (StableSpec): The index.
        size (int): Number of draws.
        gen (np.random.Generator): Source of randomness.

    Returns:
        np.ndarray: Positive draws; all ones when alpha = 1.
    """
    a = spec.alpha
    if a == 1.0:
        return np.ones(size)
    guard = config.STABLE_UNIFORM_GUARD
    u = np.clip(gen.uniform(0.0, np.pi, size), guard, np.pi - guard)
    e = gen.standard_exponential(size)
    head = np.sin(a * u) / np.sin(u) ** (1.0 / a)
    tail = (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
    return head * tail


def sample_positive_stable(spec: StableSpec, rng) -> float:
    """Single positive stable draw; alpha = 1 gives the constant 1."""
    return float(sample_stable_batch(spec, 1, _as_generator(rng))[0])


# ---------------------------------------------------------------------------
# MPH* reward paths
# ---------------------------------------------------------------------------


def _jump_table(rep: MPHStarRep) -> tuple[np.ndarray, np.ndarray]:
    """Holding rates and cumulative jump probabilities (last column = absorb)."""
    rates = -np.diag(rep.T)
    moves = rep.T / rates[:, np.newaxis]
    np.fill_diagonal(moves, 0.0)
    table = np.hstack([moves, (rep.exit_vector / rates)[:, np.newaxis]])
    table = np.clip(table, 0.0, None)
    cumulative = np.cumsum(table, axis=1)
    cumulative /= cumulative[:, -1:]
    cumulative[:, -1] = 1.0
    return rates, cumulative


def sample_mph_batch(rep: MPHStarRep, size: int, gen: np.random.Generator) -> np.ndarray:
    """
    Simulates ``size`` reward vectors by running the embedded chain of every
    path in lockstep.

    Each visit to state i lasts Exp(-t_ii) and earns r_ik per unit time in
    coordinate k. A defective initial vector starts some paths absorbed, which
    yields the atom at the origin.

    Returns:
        np.ndarray: Array of shape (size, n).
    """
    p = rep.dim
    rates, cumulative = _jump_table(rep)
    start = np.cumsum(np.append(rep.pi, max(0.0, 1.0 - rep.pi.sum())))
    start[-1] = 1.0
    state = np.searchsorted(start, gen.uniform(size=size), side="right")
    state = np.minimum(state, p)

    out = np.zeros((size, rep.n))
    alive = np.nonzero(state < p)[0]
    rounds = 0
    while alive.size:
        current = state[alive]
        sojourn = gen.standard_exponential(alive.size) / rates[current]
        out[alive] += sojourn[:, np.newaxis] * rep.R[current]
        u = gen.uniform(size=alive.size)
        nxt = (u[:, np.newaxis] >= cumulative[current]).sum(axis=1)
        state[alive] = np.minimum(nxt, p)
        alive = alive[state[alive] < p]
        rounds += 1
        if rounds > config.MAX_JUMPS:
            raise NumericFailure(f"paths still alive after {rounds} jumps")
    logger.debug("simulated %d paths in %d jump rounds", size, rounds)
    return out


def sample_mph_rewards(rep: MPHStarRep, rng) -> np.ndarray:
    """One MPH* reward vector."""
    return sample_mph_batch(rep, 1, _as_generator(rng))[0]


# ---------------------------------------------------------------------------
# GMML
# ---------------------------------------------------------------------------


def _as_gmml(rep) -> GMMLRep:
    if isinstance(rep, GMMLRep):
        return rep
    if isinstance(rep, FFGMMLRep):
        return ff_to_gmml(rep)
    if isinstance(rep, MPHStarRep):
        return GMMLRep(np.ones(rep.n), rep)
    raise ModelError(f"cannot sample from {type(rep).__name__}")


def _power(nu, n: int) -> np.ndarray:
    if nu is None:
        return np.ones(n)
    nu = np.asarray(nu, dtype=float).reshape(-1)
    if nu.shape[0] != n or not np.all(np.isfinite(nu)) or np.any(nu <= 0.0):
        raise DomainError(f"nu must be {n} positive numbers")
    return nu


def sample_gmml_batch(
    rep: GMMLRep, size: int, gen: np.random.Generator, nu=None
) -> np.ndarray:
    """
    Draws (W_i^(1/alpha_i) S_i)^(1/nu_i) with W from the MPH* backbone and
    independent positive stable S_i.
    """
    nu = _power(nu, rep.n)
    backbone = sample_mph_batch(rep.base, size, gen)
    out = np.empty_like(backbone)
    for k, (a, v) in enumerate(zip(rep.alphas, nu)):
        stable = sample_stable_batch(StableSpec(a), size, gen)
        out[:, k] = (backbone[:, k] ** (1.0 / a) * stable) ** (1.0 / v)
    return out


def sample_gmml(rep, rng, nu=None) -> np.ndarray:
    """One GMML (or power GMML when nu is given) vector."""
    return sample_gmml_batch(_as_gmml(rep), 1, _as_generator(rng), nu)[0]


def sample_batch(
    rep, n: int, rng: RngState, nu=None, threads: int = 1
) -> SampleBatch:
    """
    Draws ``n`` vectors in seeded chunks, optionally on a thread pool.

    Chunk c always uses ``rng.generator(c)`` and the chunks are concatenated
    in order, so the batch is identical for every thread count.

    Args:
        rep: GMMLRep, FFGMMLRep or MPHStarRep.
        n (int): Number of rows.
        rng (RngState): Stream seed.
        nu: Optional power exponents.
        threads (int): Worker threads.

    Returns:
        SampleBatch: The draws with their fingerprint.
    """
    if n < 1:
        raise DomainError(f"sample size must be at least 1, got {n}")
    if threads < 1:
        raise DomainError(f"threads must be at least 1, got {threads}")
    law = _as_gmml(rep)
    nu = _power(nu, law.n)
    chunk = config.SAMPLE_CHUNK_SIZE
    sizes = [min(chunk, n - start) for start in range(0, n, chunk)]

    def run(index: int) -> np.ndarray:
        return sample_gmml_batch(law, sizes[index], rng.generator(index), nu)

    if threads == 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    values = np.vstack(parts)
    logger.info("drew %d rows in %d chunks (%d threads)", n, len(sizes), threads)
    return SampleBatch(values=values, fingerprint=fingerprint(values), rng=rng)


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------


def _mean_and_error(samples: np.ndarray) -> tuple[float, float]:
    count = samples.shape[0]
    mean = float(np.mean(samples))
    if count < 2:
        return mean, math.inf
    return mean, float(np.std(samples, ddof=1) / math.sqrt(count))


def empirical_laplace(batch: SampleBatch, u) -> tuple[float, float]:
    """Estimate of E exp(-<u, X>) and its standard error."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != batch.n or np.any(u < 0.0):
        raise DomainError(f"u must be {batch.n} nonnegative numbers")
    return _mean_and_error(np.exp(-batch.values @ u))


def empirical_moment(batch: SampleBatch, theta) -> tuple[float, float]:
    """Estimate of E prod X_i^theta_i and its standard error."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != batch.n or np.any(theta < 0.0):
        raise DomainError(f"theta must be {batch.n} nonnegative numbers")
    return _mean_and_error(np.prod(batch.values**theta, axis=1))


def tabulated_cdf(values: np.ndarray, cdf, nodes: int | None = None):
    """
    Piecewise-linear stand-in for ``cdf`` with knots at empirical quantiles.

    The analytic CDF is evaluated once per knot, so comparing 10^5 draws
    costs ``nodes`` evaluations instead of one per draw.

    Args:
        values (np.ndarray): One-dimensional draws.
        cdf: Callable of one positive float.
        nodes (int | None): Number of quantile levels, config.KS_TABLE_NODES by default.

    Returns:
        Callable[[np.ndarray], np.ndarray]: The vectorized interpolant.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    nodes = config.KS_TABLE_NODES if nodes is None else nodes
    if values.size == 0 or nodes < 2:
        raise DomainError("need draws and at least two knots")
    knots = np.unique(np.quantile(values, np.linspace(0.0, 1.0, nodes)))
    table = np.array([cdf(float(k)) for k in knots])
    return lambda x: np.interp(x, knots, table)


def ks_ratio(values: np.ndarray, cdf, nodes: int | None = None) -> float:
    """
    Kolmogorov-Smirnov statistic of ``values`` against ``cdf`` over the
    critical value at level config.KS_LEVEL; at most 1 means no rejection.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    result = stats.kstest(values, tabulated_cdf(values, cdf, nodes))
    critical = stats.kstwo.ppf(config.KS_LEVEL, values.size)
    logger.debug("KS statistic %.4g against critical value %.4g", result.statistic, critical)
    return float(result.statistic / critical)
