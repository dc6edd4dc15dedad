"""
Worked example models.

The order-statistics bivariate exponential backbone and its Mittag-Leffler
lift (with the explicit eigenvector formulas for both blocks), the two power
GMML mixtures with diagonal and permuted coupling, and the summary statistics
used to compare simulated data with those models.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from src.core import config
from src.core.errors import ConfigError, DomainError, ModelError
from src.core.gmml import FFGMMLRep, GMMLRep, ff_gmml_marginal, ff_to_gmml, power_density
from src.core.mlfun import MLParams, ml_values
from src.core.phasetype import FeedForwardRep, MPHStarRep, ff_to_mph, frozen_array
from src.core.sampling import SampleBatch

logger = logging.getLogger(__name__)

FIGURE_NAMES = ("fig1", "fig2", "fig3", "fig4")


# ---------------------------------------------------------------------------
# Doubly stochastic couplings
# ---------------------------------------------------------------------------


def identity_matrix(m: int) -> np.ndarray:
    """P = I: minimal correlation of the backbone."""
    return np.eye(m)


def anti_identity(m: int) -> np.ndarray:
    """P = {delta_(i, m-i+1)}: maximal correlation of the backbone."""
    return np.fliplr(np.eye(m))


def uniform_doubly_stochastic(m: int) -> np.ndarray:
    """P = E/m: independent coordinates."""
    return np.full((m, m), 1.0 / m)


def doubly_stochastic_violations(p: np.ndarray) -> list[str]:
    """Lists why a matrix is not doubly stochastic (empty when it is)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return [f"P must be square, got shape {p.shape}"]
    problems = []
    if np.any(p < 0.0):
        problems.append("P has negative entries")
    tol = config.DOUBLY_STOCHASTIC_TOL
    if np.any(np.abs(p.sum(axis=1) - 1.0) > tol):
        problems.append("row sums of P differ from 1")
    if np.any(np.abs(p.sum(axis=0) - 1.0) > tol):
        problems.append("column sums of P differ from 1")
    return problems


# ---------------------------------------------------------------------------
# Order-statistics construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OrderStatConfig:
    """
    Parameters of the order-statistics bivariate exponential backbone.

    Attributes:
        m (int): Number of order statistics.
        lam (float): Rate of the first marginal.
        mu (float): Rate of the second marginal.
        P (np.ndarray): m x m doubly stochastic coupling.
    """

    m: int
    lam: float
    mu: float
    P: np.ndarray

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ModelError(f"m must be a positive integer, got {self.m}")
        for name in ("lam", "mu"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0.0):
                raise ModelError(f"{name} must be a positive rate, got {value}")
            object.__setattr__(self, name, value)
        p = np.asarray(self.P, dtype=float)
        if p.shape != (self.m, self.m):
            raise ModelError(f"P must be {self.m}x{self.m}, got {p.shape}")
        problems = doubly_stochastic_violations(p)
        if problems:
            raise ModelError("; ".join(problems))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "P", frozen_array(p))

    @property
    def S(self) -> np.ndarray:
        """First block: diagonal -(m-i+1) lam, superdiagonal (m-i) lam."""
        k = np.arange(self.m, 0, -1, dtype=float)
        return self.lam * (np.diag(-k) + np.diag(k[:-1] - 1.0, 1))

    @property
    def S_tilde(self) -> np.ndarray:
        """Second block: diagonal -i mu, superdiagonal i mu."""
        k = np.arange(1, self.m + 1, dtype=float)
        return self.mu * (np.diag(-k) + np.diag(k[:-1], 1))


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """
    Eigenvectors of both order-statistics blocks.

    Column k-1 of V belongs to the eigenvalue -k lam of S and column k-1 of W
    to -k mu of S_tilde. The inverses are exact binomial sums; W is its own
    inverse.
    """

    V: np.ndarray
    W: np.ndarray
    V_inv: np.ndarray
    W_inv: np.ndarray


def build_orderstat_ff(cfg: OrderStatConfig) -> FeedForwardRep:
    """Feed-forward form: C = (S, S_tilde), D = (lam P, Delta(-S_tilde e))."""
    pi = np.zeros(cfg.m)
    pi[0] = 1.0
    s_tilde = cfg.S_tilde
    exit_block = np.diag(-s_tilde.sum(axis=1))
    return FeedForwardRep(pi, (cfg.S, s_tilde), (cfg.lam * cfg.P, exit_block))


def build_orderstat_bivariate(cfg: OrderStatConfig) -> MPHStarRep:
    """
    Bivariate exponential MPH*(e_1, [[S, lam P], [0, S_tilde]], block indicators).

    The marginals are Exp(lam) and Exp(mu); P = E/m makes them independent.
    """
    return ff_to_mph(build_orderstat_ff(cfg))


def orderstat_ffgmml(cfg: OrderStatConfig, alphas) -> FFGMMLRep:
    """Mittag-Leffler lift of the backbone with indices (alpha_1, alpha_2)."""
    return FFGMMLRep(build_orderstat_ff(cfg), alphas)


def orderstat_eigenbasis(cfg: OrderStatConfig) -> EigenBasis:
    """
    Builds V and W from their recursions
    v_1 = 1, v_(i+1) = (1 - (k-1)/(m-i)) v_i and w_1 = 1, w_(i+1) = (1 - k/i) w_i.
    """
    m = cfg.m
    v = np.ones((m, m))
    w = np.ones((m, m))
    for k in range(1, m + 1):
        for i in range(1, m):
            v[i, k - 1] = (1.0 - (k - 1) / (m - i)) * v[i - 1, k - 1]
            w[i, k - 1] = (1.0 - k / i) * w[i - 1, k - 1]

    idx = np.arange(m)
    # V = Delta(C(m-1, i))^-1 C(m-1-k, i); invert the reversed Pascal factor
    rows, cols = np.meshgrid(idx, idx, indexing="ij")
    top = m - 1 - rows
    signs = np.where((top + cols) % 2 == 0, 1.0, -1.0)
    v_inv = signs * special.comb(cols, top) * special.comb(m - 1, cols)
    return EigenBasis(
        V=frozen_array(v), W=frozen_array(w), V_inv=frozen_array(v_inv), W_inv=frozen_array(w)
    )


def bivariate_ml_density(cfg: OrderStatConfig, alphas, x) -> float:
    """
    Joint density of the lifted order-statistics model through the explicit
    eigen-decompositions:
    m lam mu x1^(a1-1) x2^(a2-1) e_1' V Delta(E(-k lam x1^a1)) V^-1 P
    W Delta(E(-k mu x2^a2)) W^-1 e_m.
    """
    a1, a2 = (float(a) for a in alphas)
    x1, x2 = (float(v) for v in x)
    if not (x1 > 0.0 and x2 > 0.0):
        raise DomainError(f"x must be positive, got {(x1, x2)}")
    basis = orderstat_eigenbasis(cfg)
    k = np.arange(1, cfg.m + 1, dtype=float)
    f1 = ml_values(MLParams(a1, a1), -k * cfg.lam * x1**a1).real
    f2 = ml_values(MLParams(a2, a2), -k * cfg.mu * x2**a2).real

    # the first row of V is all ones
    left = (f1 @ basis.V_inv) @ cfg.P
    right = basis.W @ (f2 * basis.W_inv[:, -1])
    scale = cfg.m * cfg.lam * cfg.mu * x1 ** (a1 - 1.0) * x2 ** (a2 - 1.0)
    return float(scale * (left @ right))


# ---------------------------------------------------------------------------
# Figure configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FigureBundle:
    """
    A fully parameterized example model with the statistic it should reproduce.

    Attributes:
        name (str): Figure identifier.
        model (GMMLRep): Joint law on the MPH* backbone.
        ff (FFGMMLRep): The same law in feed-forward form.
        nu (np.ndarray): Power exponents (ones for plain GMML).
        statistic (str): ``log_correlation`` or ``pearson_correlation``.
        expected (float): Value quoted for the statistic.
        tolerance (float): Accepted deviation from ``expected``.
        sample_size (int): Default number of draws.
        grid (tuple): Per-coordinate ``(min, max, count, spacing)`` of the
            density surface.
        orderstat (OrderStatConfig | None): Backbone parameters, if any.
    """

    name: str
    model: GMMLRep
    ff: FFGMMLRep
    nu: np.ndarray
    statistic: str
    expected: float
    tolerance: float
    sample_size: int
    grid: tuple
    orderstat: OrderStatConfig | None = field(default=None)


def _orderstat_bundle(name: str, coupling: np.ndarray, expected: float) -> FigureBundle:
    cfg = OrderStatConfig(m=20, lam=1.0, mu=2.0, P=coupling)
    ff = orderstat_ffgmml(cfg, (0.6, 0.7))
    return FigureBundle(
        name=name,
        model=ff_to_gmml(ff),
        ff=ff,
        nu=np.ones(2),
        statistic="log_correlation",
        expected=expected,
        tolerance=0.1,
        sample_size=1000,
        grid=((1e-3, 1e2, 100, "log"), (1e-3, 1e2, 100, "log")),
        orderstat=cfg,
    )


def _mixture_bundle(name: str, coupling: np.ndarray, expected: float) -> FigureBundle:
    blocks = np.diag([-10.0, -1.0, -0.1])
    ff = FeedForwardRep(np.full(3, 1.0 / 3.0), (blocks, blocks), (coupling, -blocks))
    alphas = np.array([0.6, 0.7])
    rep = FFGMMLRep(ff, alphas)
    return FigureBundle(
        name=name,
        model=ff_to_gmml(rep),
        ff=rep,
        nu=3.0 / alphas,
        statistic="pearson_correlation",
        expected=expected,
        tolerance=0.01,
        sample_size=100_000,
        grid=((0.05, 4.0, 100, "lin"), (0.05, 4.0, 100, "lin")),
    )


def build_figure_config(name: str) -> FigureBundle:
    """
    Returns one of the four published example models.

    fig1/fig2 lift the order-statistics backbone (m=20, lam=1, mu=2) with
    indices (0.6, 0.7) and P = I or the anti-identity. fig3/fig4 are power
    GMML mixtures with tail indices (3, 3) and diagonal or permuted coupling.

    Raises:
        ConfigError: If the name is unknown.
    """
    if name == "fig1":
        return _orderstat_bundle(name, identity_matrix(20), -0.53)
    if name == "fig2":
        return _orderstat_bundle(name, anti_identity(20), 0.55)
    if name == "fig3":
        return _mixture_bundle(name, np.diag([10.0, 1.0, 0.1]), 0.35)
    if name == "fig4":
        permuted = np.array([[0.0, 0.0, 10.0], [0.0, 1.0, 0.0], [0.1, 0.0, 0.0]])
        return _mixture_bundle(name, permuted, -0.32)
    raise ConfigError(f"unknown figure '{name}', expected one of {', '.join(FIGURE_NAMES)}")


def mixture_marginal_density(name: str, i: int, x) -> float:
    """
    Marginal density of coordinate i (0-based) of fig3/fig4: a three-component
    mixture (beta/alpha) x^(beta-1) sum_j w_j lam_j E_{a,a}(-lam_j x^beta).
    """
    if name not in ("fig3", "fig4"):
        raise ConfigError(f"mixture marginals exist for fig3 and fig4, not '{name}'")
    bundle = build_figure_config(name)
    alpha, marginal = ff_gmml_marginal(bundle.ff, i)
    return power_density(alpha, marginal, bundle.nu[i] * alpha, x)


# ---------------------------------------------------------------------------
# Sample statistics
# ---------------------------------------------------------------------------


def _pair(batch: SampleBatch) -> np.ndarray:
    if batch.n < 2 or batch.rows < 2:
        raise DomainError("need at least two rows of a bivariate batch")
    return batch.values[:, :2]


def pearson_correlation(batch: SampleBatch) -> float:
    """Sample correlation of the first two coordinates."""
    values = _pair(batch)
    return float(np.corrcoef(values[:, 0], values[:, 1])[0, 1])


def log_correlation(batch: SampleBatch) -> float:
    """
    Sample correlation of the logarithms of the first two coordinates.

    Raises:
        DomainError: If an entry is not strictly positive.
    """
    values = _pair(batch)
    if np.any(values <= 0.0):
        raise DomainError("log-correlation needs strictly positive draws")
    logs = np.log(values)
    return float(np.corrcoef(logs[:, 0], logs[:, 1])[0, 1])


def tail_exceedance(batch: SampleBatch, level: float = 0.99) -> float:
    """
    Empirical P(X_2 > q_2 | X_1 > q_1) at the marginal ``level`` quantiles.
    Tends to zero for tail-independent pairs.
    """
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    values = _pair(batch)
    q1, q2 = np.quantile(values[:, 0], level), np.quantile(values[:, 1], level)
    above = values[:, 0] > q1
    if not np.any(above):
        raise DomainError("no exceedances of the first coordinate")
    return float(np.mean(values[above, 1] > q2))
