"""
Built-in invariant checks behind the ``validate`` command.

Each check computes one nonnegative residual (a relative error, a count of
standard errors, a KS ratio) and passes when it does not exceed the tolerance
of the same name in config.tolerances(). Checks are grouped by the library
module they exercise so a subset can be run on its own.
"""

import itertools
import logging
import math
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, linalg, special, stats

from src.core import config, gmml, mlfun, models, phasetype, sampling
from src.core.errors import ConfigError, DegenerateDistributionError, MMLError
from src.utils import quadrature

logger = logging.getLogger(__name__)

MODULES = ("mlfun", "phasetype", "gmml", "sampling", "models")


@dataclass(frozen=True)
class Check:
    """A named residual computation; ``name`` is also its tolerance key."""

    name: str
    module: str
    run: Callable[[], float]


@dataclass(frozen=True)
class CheckResult:
    name: str
    module: str
    residual: float
    tolerance: float
    elapsed: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.residual <= self.tolerance


@dataclass(frozen=True)
class ValidationReport:
    results: tuple

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]


class CheckPrinter:
    """
    Progress callback printing one status line per finished check.
    """

    def __init__(self, start_time, stream=None):
        """
        Args:
            start_time (float): Timestamp when the suite started.
            stream: Text stream for the progress line, stderr by default.
        """
        self.__start_time = start_time
        self.__count = 0
        self.__stream = stream if stream is not None else sys.stderr

    def on_check(self, result: CheckResult) -> None:
        self.__count += 1
        elapsed = time.time() - self.__start_time
        self.__stream.write(
            f"\r  > Check #{self.__count} {result.name} | "
            f"Residual: {result.residual:.3g} | Time: {elapsed:.2f}s\033[K"
        )
        self.__stream.flush()


def _rel(value, reference) -> float:
    value, reference = np.asarray(value), np.asarray(reference)
    scale = max(float(np.max(np.abs(reference))), 1e-300)
    return float(np.max(np.abs(value - reference))) / scale


def _rng() -> np.random.Generator:
    return np.random.default_rng(config.DEFAULT_SEED)


# ---------------------------------------------------------------------------
# mlfun
# ---------------------------------------------------------------------------


def check_ml_regime_overlap() -> float:
    worst = 0.0
    half = mlfun.MLParams(0.5, 1.0)
    for z in (-10.0, -20.0, -30.0):
        series = mlfun.ml_scalar_series(half, z)
        worst = max(worst, _rel(mlfun.ml_scalar_asymptotic(half, z), series))
    for alpha in (0.7, 0.9):
        params = mlfun.MLParams(alpha, 1.0)
        for z in (-6.0, -10.0, -20.0):
            series = mlfun.ml_scalar_series(params, z)
            worst = max(worst, _rel(mlfun.ml_scalar(params, z), series))
    return worst


def check_ml_exp_agreement() -> float:
    exp_params = mlfun.MLParams(1.0, 1.0)
    worst = max(
        _rel(mlfun.ml_scalar(exp_params, z), math.exp(z)) for z in (-2.0, 0.5, 3.0)
    )
    rng = _rng()
    for p in (2, 3, 4):
        a = phasetype.random_subintensity(rng, p)
        worst = max(worst, _rel(mlfun.ml_matrix(exp_params, a), linalg.expm(a)))
    return worst


def check_ml_jordan_series() -> float:
    jordan = np.array([[-1.0, 1.0], [0.0, -1.0]])
    params = mlfun.MLParams(0.6, 0.6)
    series = mlfun.ml_matrix_series(params, jordan, terms=300)
    return _rel(mlfun.ml_matrix(params, jordan), series)


def check_ml_closed_form() -> float:
    half = mlfun.MLParams(0.5, 1.0)
    worst = max(
        _rel(mlfun.ml_scalar(half, -x), special.erfcx(x)) for x in (0.5, 1.0, 3.0, 10.0)
    )
    shifted = mlfun.MLParams(1.0, 2.0)
    for z in (-3.0, 0.5):
        worst = max(worst, _rel(mlfun.ml_scalar(shifted, z), math.expm1(z) / z))
    return worst


def check_fractional_power_composition() -> float:
    rng = _rng()
    worst = 0.0
    exponents = (0.3, 0.5, 1.0)
    for p in (2, 3):
        t = phasetype.random_subintensity(rng, p)
        powers = {s: mlfun.matrix_neg_fractional_power(t, s) for s in exponents}
        for s1 in exponents:
            for s2 in exponents:
                combined = mlfun.matrix_neg_fractional_power(t, s1 + s2)
                worst = max(worst, _rel(powers[s1] @ powers[s2], combined))
    return worst


def check_ml_functional_calculus() -> float:
    """
    E(A) against V diag(E(lambda_i)) V^-1 for matrices built from a known
    eigenbasis with one complex pair; the error is scaled by 1 + cond(V).
    """
    rng = _rng()
    pair = np.array([[1.0, 1.0], [1.0j, -1.0j]])
    worst = 0.0
    for alpha, beta in ((0.7, 0.9), (0.5, 1.0), (0.9, 0.9)):
        params = mlfun.MLParams(alpha, beta)
        vectors = (rng.normal(size=(3, 3)) + 3.0 * np.eye(3)) @ linalg.block_diag(pair, 1.0)
        re, im = -rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)
        eigenvalues = np.array([re + 1j * im, re - 1j * im, -rng.uniform(0.5, 8.0)])
        inverse = np.linalg.inv(vectors)
        a = (vectors @ np.diag(eigenvalues) @ inverse).real
        expected = vectors @ np.diag(mlfun.ml_values(params, eigenvalues)) @ inverse
        gap = float(np.max(np.abs(mlfun.ml_matrix(params, a) - expected)))
        worst = max(worst, gap / (1.0 + np.linalg.cond(vectors)))
    return worst


def check_ml_semigroup() -> float:
    rng = _rng()
    exp_params = mlfun.MLParams(1.0, 1.0)
    worst = 0.0
    for p in (2, 3, 4):
        a = rng.normal(scale=0.5, size=(p, p))
        product = mlfun.ml_matrix(exp_params, a) @ mlfun.ml_matrix(exp_params, -a)
        worst = max(worst, float(np.max(np.abs(product - np.eye(p)))))
    return worst


# ---------------------------------------------------------------------------
# phasetype
# ---------------------------------------------------------------------------


def check_semigroup() -> float:
    rng = _rng()
    worst = 0.0
    for p in (1, 2, 4):
        rep = phasetype.random_ph(rng, p)
        s, t = 0.7, 1.3
        shifted = phasetype.PhaseTypeRep(rep.pi @ linalg.expm(rep.T * s), rep.T)
        worst = max(
            worst, _rel(phasetype.ph_survival(shifted, t), phasetype.ph_survival(rep, s + t))
        )
    return worst


def _quad(func) -> float:
    value, _ = integrate.quad(func, 0.0, math.inf, epsabs=1e-12, epsrel=1e-10, limit=200)
    return value


def check_laplace_density_duality() -> float:
    rng = _rng()
    worst = 0.0
    for _ in range(20):
        rep = phasetype.random_ph(rng, int(rng.integers(1, 6)))
        for s in (0.1, 1.0, 10.0):
            numeric = _quad(lambda x: math.exp(-s * x) * phasetype.ph_density(rep, x))
            worst = max(worst, abs(numeric - phasetype.ph_laplace(rep, s)))
    return worst


def check_ff_marginalization() -> float:
    """Integrating one coordinate out of the chain density leaves the MPH* marginal."""
    rng = _rng()
    grid = np.geomspace(0.05, 5.0, 20)
    worst = 0.0
    for p1, p2 in ((2, 3), (3, 2)):
        ff = _random_ff(rng, p1, p2)
        mph = phasetype.ff_to_mph(ff)
        first = phasetype.mph_marginal(mph, 0).rep
        second = phasetype.mph_marginal(mph, 1).rep
        for x in grid:
            numeric = _quad(lambda y: phasetype.ff_joint_density(ff, (x, y)))
            worst = max(worst, abs(numeric - phasetype.ph_density(first, x)))
            numeric = _quad(lambda y: phasetype.ff_joint_density(ff, (y, x)))
            worst = max(worst, abs(numeric - phasetype.ph_density(second, x)))
    return worst


def check_projection_identity() -> float:
    rng = _rng()
    worst = 0.0
    points = np.geomspace(0.1, 10.0, 10)
    for _ in range(20):
        p, n = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        rep = phasetype.random_mph(rng, p, n)
        w = rng.uniform(0.1, 1.0, size=n)
        try:
            result = phasetype.project(rep, w)
        except DegenerateDistributionError:
            continue
        for u in points:
            joint = phasetype.mph_laplace(rep, u * w)
            split = result.atom + phasetype.ph_laplace(result.rep, u)
            worst = max(worst, abs(joint - split))
    return worst


# ---------------------------------------------------------------------------
# gmml
# ---------------------------------------------------------------------------


def _random_ff(rng: np.random.Generator, p1: int, p2: int) -> phasetype.FeedForwardRep:
    first = phasetype.random_ph(rng, p1)
    second = phasetype.random_ph(rng, p2)
    return phasetype.FeedForwardRep(
        first.pi,
        (first.T, second.T),
        (np.outer(first.exit_vector, second.pi), np.diag(second.exit_vector)),
    )


def check_alpha_one_collapse() -> float:
    rng = _rng()
    worst = 0.0
    for p in range(1, 6):
        rep = phasetype.random_ph(rng, p)
        for u in (0.5, 2.0):
            worst = max(worst, _rel(gmml.mml_laplace(1.0, rep, u), phasetype.ph_laplace(rep, u)))
        mph = phasetype.random_mph(rng, p, 2)
        u = np.array([0.4, 1.5])
        worst = max(
            worst,
            _rel(
                gmml.gmml_joint_laplace(gmml.GMMLRep(np.ones(2), mph), u),
                phasetype.mph_laplace(mph, u),
            ),
        )
    for p1, p2 in ((1, 2), (2, 2), (3, 1), (2, 3), (1, 1)):
        ff = _random_ff(rng, p1, p2)
        lifted = gmml.FFGMMLRep(ff, np.ones(2))
        x = np.array([0.8, 1.7])
        worst = max(worst, _rel(gmml.ff_gmml_density(lifted, x), phasetype.ff_joint_density(ff, x)))
    return worst


def check_transform_factorization() -> float:
    rng = _rng()
    r1, r2 = phasetype.random_ph(rng, 2), phasetype.random_ph(rng, 3)
    mixed = gmml.convolve_mixed(
        gmml.gmml_univariate_from_mml(0.6, r1), gmml.gmml_univariate_from_mml(0.8, r2)
    )
    same = gmml.convolve_same_index((0.6, r1), (0.6, r2))
    scaled = gmml.scale(0.6, r1, 2.5)
    worst = 0.0
    for u in (0.3, 1.0, 4.0):
        product = gmml.mml_laplace(0.6, r1, u) * gmml.mml_laplace(0.8, r2, u)
        worst = max(worst, abs(gmml.gmml_univ_laplace(mixed, u) - product))
        product = gmml.mml_laplace(0.6, r1, u) * gmml.mml_laplace(0.6, r2, u)
        worst = max(worst, abs(gmml.mml_laplace(*same, u) - product))
        worst = max(
            worst, abs(gmml.mml_laplace(0.6, scaled, u) - gmml.mml_laplace(0.6, r1, 2.5 * u))
        )
    return worst


def check_joint_laplace_duality() -> float:
    """Tensor quadrature of exp(-<u, x>) f(x) against the closed-form joint transform."""
    rep = gmml.FFGMMLRep(_random_ff(_rng(), 2, 2), np.array([0.6, 0.8]))
    axes, weights = quadrature.tensor_rule(
        [quadrature.power_rule(a, config.JOINT_LAPLACE_CUTOFF) for a in rep.alphas]
    )
    density = gmml.ff_gmml_density_grid(rep, axes)
    worst = 0.0
    for u in itertools.product((0.5, 1.0, 2.0), repeat=2):
        damping = np.multiply.outer(np.exp(-u[0] * axes[0]), np.exp(-u[1] * axes[1]))
        numeric = float(np.sum(weights * density * damping))
        worst = max(worst, abs(numeric - gmml.ff_gmml_laplace(rep, u)))
    return worst


def green_tail(alpha: float, t: np.ndarray, hi: float, terms: int = 4) -> np.ndarray:
    """
    Integral of x^(alpha-1) E_{alpha,alpha}(T x^alpha) over (hi, inf) from the
    large-argument expansion: -(1/alpha) sum_{k>=2} T^-k U^(1-k) / ((k-1) Gamma(alpha - alpha k)).
    """
    u = hi**alpha
    inverse = np.linalg.inv(t)
    power = inverse
    total = np.zeros_like(t)
    for k in range(2, terms + 2):
        power = power @ inverse
        total -= power * u ** (1 - k) * special.rgamma(alpha - alpha * k) / (k - 1)
    return total / alpha


def green_integral(alpha: float, t: np.ndarray) -> np.ndarray:
    """Quadrature plus analytic tail of x^(alpha-1) E_{alpha,alpha}(T x^alpha) over (0, inf)."""
    scale = float(np.min(np.abs(mlfun.spectral(t).eigenvalues)))
    hi = quadrature.heavy_tail_split(alpha, scale)
    nodes, weights = quadrature.power_rule(alpha, hi)
    params = mlfun.MLParams(alpha, alpha)
    body = sum(
        w * x ** (alpha - 1.0) * mlfun.ml_matrix(params, t * x**alpha)
        for x, w in zip(nodes, weights)
    )
    return body + green_tail(alpha, t, hi)


def check_green_matrix() -> float:
    rng = _rng()
    worst = 0.0
    for p in (1, 2, 3):
        t = phasetype.random_subintensity(rng, p)
        green = np.linalg.inv(-t)
        for alpha in (0.5, 0.9):
            worst = max(worst, _rel(green_integral(alpha, t), green))
    return worst


def check_density_normalization() -> float:
    rng = _rng()
    rep = phasetype.random_ph(rng, 2)
    worst = 0.0
    for alpha in (0.7, 0.9):
        hi = gmml.mml_tail_split(alpha, rep)
        nodes, weights = quadrature.power_rule(alpha, hi)
        mass = sum(w * gmml.mml_density(alpha, rep, x) for x, w in zip(nodes, weights))
        mass += gmml.mml_survival_asymptotic(alpha, rep, hi)
        worst = max(worst, abs(mass - 1.0))
    return worst


def check_tail_regular_variation() -> float:
    reps = (
        phasetype.PhaseTypeRep(np.array([1.0]), np.array([[-1.0]])),
        phasetype.PhaseTypeRep(np.array([0.4, 0.6]), np.diag([-1.0, -3.0])),
        phasetype.PhaseTypeRep(np.array([1.0, 0.0]), np.array([[-2.0, 1.0], [0.0, -1.0]])),
    )
    x = 1e6
    worst = 0.0
    for alpha in (0.5, 0.6, 0.9):
        for rep in reps:
            scaled = x**alpha * gmml.mml_survival(alpha, rep, x)
            worst = max(worst, _rel(scaled, gmml.mml_tail_constant(alpha, rep)))
    return worst


def check_ff_marginal_sum() -> float:
    worst = 0.0
    for name in ("fig1", "fig3", "fig4"):
        ff = models.build_figure_config(name).ff
        for i in range(ff.n):
            _, marginal = gmml.ff_gmml_marginal(ff, i)
            worst = max(worst, abs(1.0 - marginal.mass))
    return worst


def check_figure_correlation() -> float:
    worst = 0.0
    for name in ("fig3", "fig4"):
        bundle = models.build_figure_config(name)
        value = gmml.correlation_power(bundle.ff, bundle.nu)
        worst = max(worst, abs(value - bundle.expected))
    return worst


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def check_stable_ks() -> float:
    n = 100_000
    gen = sampling.RngState().generator()
    draws = sampling.sample_stable_batch(sampling.StableSpec(0.5), n, gen)
    # S = 1 / (2 Z^2) for alpha = 1/2
    result = stats.kstest(draws, lambda x: special.erfc(0.5 / np.sqrt(x)))
    return float(result.statistic / stats.kstwo.ppf(0.99, n))


def check_monte_carlo_se() -> float:
    state = sampling.RngState()
    stable = sampling.sample_stable_batch(sampling.StableSpec(0.7), 100_000, state.generator(0))
    batch = sampling.SampleBatch(stable[:, np.newaxis], sampling.fingerprint(stable), state)
    worst = 0.0
    for u in (0.5, 1.0, 2.0):
        estimate, error = sampling.empirical_laplace(batch, [u])
        worst = max(worst, abs(estimate - math.exp(-(u**0.7))) / error)

    atom_rep = phasetype.MPHStarRep(
        np.array([0.3, 0.7]), np.diag([-1.0, -2.0]), np.array([[1.0], [0.0]])
    )
    draws = sampling.sample_batch(atom_rep, 100_000, sampling.RngState(config.DEFAULT_SEED + 1))
    zeros = float(np.mean(draws.values[:, 0] == 0.0))
    worst = max(worst, abs(zeros - 0.7) / math.sqrt(0.21 / draws.rows))
    return worst


def check_ks_marginal() -> float:
    """
    KS ratio of sampled coordinates against their analytic marginals: an
    exponential MPH*, a univariate MML law and both coordinates of a
    feed-forward GMML law.
    """
    n = 100_000
    one, reward = np.array([1.0]), np.array([[1.0]])
    exponential = phasetype.MPHStarRep(one, np.array([[-2.0]]), reward)
    state = sampling.RngState(config.DEFAULT_SEED + 2)
    draws = sampling.sample_batch(exponential, n, state).values[:, 0]
    worst = sampling.ks_ratio(draws, lambda x: -math.expm1(-2.0 * x))

    unit = phasetype.PhaseTypeRep(one, np.array([[-1.0]]))
    univariate = gmml.GMMLRep(np.array([0.6]), phasetype.MPHStarRep(one, unit.T, reward))
    state = sampling.RngState(config.DEFAULT_SEED + 3)
    draws = sampling.sample_batch(univariate, n, state).values[:, 0]
    worst = max(worst, sampling.ks_ratio(draws, lambda x: gmml.mml_cdf(0.6, unit, x)))

    joint = gmml.FFGMMLRep(_random_ff(_rng(), 2, 2), np.array([0.6, 0.8]))
    state = sampling.RngState(config.DEFAULT_SEED + 4)
    batch = sampling.sample_batch(joint, n, state, threads=config.DEFAULT_THREADS)
    for i in range(joint.n):
        alpha, marginal = gmml.ff_gmml_marginal(joint, i)
        worst = max(
            worst,
            sampling.ks_ratio(
                batch.values[:, i], lambda x: gmml.mml_cdf(alpha, marginal, x)
            ),
        )
    return worst


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


def check_eigen_residual() -> float:
    cfg = models.OrderStatConfig(6, 1.0, 2.0, models.identity_matrix(6))
    basis = models.orderstat_eigenbasis(cfg)
    k = np.arange(1, cfg.m + 1, dtype=float)
    eye = np.eye(cfg.m)
    residuals = (
        _rel(cfg.S @ basis.V, basis.V * (-k * cfg.lam)),
        _rel(cfg.S_tilde @ basis.W, basis.W * (-k * cfg.mu)),
        _rel(basis.V @ basis.V_inv, eye),
        _rel(basis.W @ basis.W_inv, eye),
    )
    return max(residuals)


def check_orderstat_equivalence() -> float:
    bundle = models.build_figure_config("fig1")
    cfg = bundle.orderstat
    axis = np.linspace(0.2, 3.0, 5)
    generic = gmml.ff_gmml_density_grid(bundle.ff, [axis, axis])
    worst = 0.0
    for (i, x1), (j, x2) in itertools.product(enumerate(axis), repeat=2):
        spectral_value = models.bivariate_ml_density(cfg, bundle.ff.alphas, (x1, x2))
        worst = max(worst, _rel(spectral_value, generic[i, j]))
    return worst


def check_figure_log_correlation() -> float:
    worst = 0.0
    for name in ("fig1", "fig2"):
        bundle = models.build_figure_config(name)
        batch = sampling.sample_batch(bundle.model, bundle.sample_size, sampling.RngState())
        worst = max(worst, abs(models.log_correlation(batch) - bundle.expected))
    return worst


def check_tail_independence() -> float:
    bundle = models.build_figure_config("fig1")
    batch = sampling.sample_batch(
        bundle.model, 1_000_000, sampling.RngState(), threads=config.DEFAULT_THREADS
    )
    return models.tail_exceedance(batch)


CHECKS = (
    Check("ml_regime_overlap", "mlfun", check_ml_regime_overlap),
    Check("ml_exp_agreement", "mlfun", check_ml_exp_agreement),
    Check("ml_jordan_series", "mlfun", check_ml_jordan_series),
    Check("ml_closed_form", "mlfun", check_ml_closed_form),
    Check("fractional_power_composition", "mlfun", check_fractional_power_composition),
    Check("ml_functional_calculus", "mlfun", check_ml_functional_calculus),
    Check("ml_semigroup", "mlfun", check_ml_semigroup),
    Check("semigroup", "phasetype", check_semigroup),
    Check("laplace_density_duality", "phasetype", check_laplace_density_duality),
    Check("ff_marginalization", "phasetype", check_ff_marginalization),
    Check("projection_identity", "phasetype", check_projection_identity),
    Check("alpha_one_collapse", "gmml", check_alpha_one_collapse),
    Check("transform_factorization", "gmml", check_transform_factorization),
    Check("joint_laplace_duality", "gmml", check_joint_laplace_duality),
    Check("green_matrix", "gmml", check_green_matrix),
    Check("density_normalization", "gmml", check_density_normalization),
    Check("tail_regular_variation", "gmml", check_tail_regular_variation),
    Check("ff_marginal_sum", "gmml", check_ff_marginal_sum),
    Check("figure_correlation", "gmml", check_figure_correlation),
    Check("stable_ks", "sampling", check_stable_ks),
    Check("monte_carlo_se", "sampling", check_monte_carlo_se),
    Check("ks_marginal", "sampling", check_ks_marginal),
    Check("eigen_residual", "models", check_eigen_residual),
    Check("orderstat_equivalence", "models", check_orderstat_equivalence),
    Check("figure_log_correlation", "models", check_figure_log_correlation),
    Check("tail_independence", "models", check_tail_independence),
)


def select_checks(modules=None) -> list[Check]:
    """
    Checks belonging to ``modules`` (all of them when empty).

    Raises:
        ConfigError: If a module name is unknown.
    """
    if not modules:
        return list(CHECKS)
    unknown = sorted(set(modules) - set(MODULES))
    if unknown:
        raise ConfigError(
            f"unknown module(s) {', '.join(unknown)}, expected one of {', '.join(MODULES)}"
        )
    return [c for c in CHECKS if c.module in modules]


def run_check(check: Check, tolerance: float) -> CheckResult:
    """Runs one check; library errors become a failed result."""
    start = time.time()
    try:
        residual = float(check.run())
        error = None
    except MMLError as e:
        logger.warning("check %s raised %s: %s", check.name, type(e).__name__, e)
        residual, error = math.inf, f"{type(e).__name__}: {e}"
    return CheckResult(
        name=check.name,
        module=check.module,
        residual=residual,
        tolerance=tolerance,
        elapsed=time.time() - start,
        error=error,
    )


def run_suite(modules=None, printer: CheckPrinter | None = None) -> ValidationReport:
    """
    Runs the selected checks against the effective tolerance table.

    Args:
        modules: Iterable of module names from MODULES, or None for all.
        printer (CheckPrinter | None): Optional progress callback.

    Returns:
        ValidationReport: One result per check, in registry order.
    """
    table = config.tolerances()
    results = []
    for check in select_checks(modules):
        result = run_check(check, table[check.name])
        logger.info(
            "%s: residual %.3g (tolerance %.3g) %s",
            check.name,
            result.residual,
            result.tolerance,
            "ok" if result.passed else "FAILED",
        )
        if printer is not None:
            printer.on_check(result)
        results.append(result)
    return ValidationReport(tuple(results))
