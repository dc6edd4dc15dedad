"""
Uniform access to every model kind.

A Model wraps whatever representation a config describes (PH, MPH*, MML,
GMML, feed-forward GMML, the order-statistics backbone or a built-in example)
and answers density, CDF, Laplace transform, moment, projection and sampling
requests by dispatching to the matching library operation. Univariate kinds
are carried as their (alpha, PH) pair, everything else as a GMML law with an
optional feed-forward form and power exponents.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.core import gmml, models, phasetype, sampling
from src.core.errors import (
    ConfigError,
    DomainError,
    ModelError,
    MomentDoesNotExistError,
)
from src.core.gmml import FFGMMLRep, GMMLRep, GMMLUnivariateRep
from src.core.model_loader import Matrix, ModelConfig
from src.core.phasetype import FeedForwardRep, MPHStarRep, PhaseTypeRep

logger = logging.getLogger(__name__)

UNIVARIATE_KINDS = ("ph", "mml")


@dataclass(frozen=True, eq=False)
class ProjectionReport:
    """Atom, projected law and transform residuals of a linear functional."""

    atom: float
    law: GMMLUnivariateRep
    residuals: tuple


@dataclass(frozen=True)
class MomentRow:
    """Analytic value of one moment; ``None`` marks a moment that is infinite."""

    theta: tuple
    analytic: float | None


@dataclass(frozen=True, eq=False)
class Model:
    """
    A built model.

    Attributes:
        kind (str): Config kind it was built from.
        joint (GMMLRep): Joint law (a one-coordinate law for univariate kinds).
        nu (np.ndarray): Power exponents, ones unless the kind is a power law.
        univariate (tuple | None): ``(alpha, PhaseTypeRep)`` for ph and mml.
        ff (FFGMMLRep | None): Feed-forward form, when one exists.
        figure (models.FigureBundle | None): Bundle of a built-in example.
    """

    kind: str
    joint: GMMLRep
    nu: np.ndarray
    univariate: tuple | None = None
    ff: FFGMMLRep | None = None
    figure: models.FigureBundle | None = field(default=None)

    @property
    def n(self) -> int:
        return self.joint.n

    @property
    def is_power(self) -> bool:
        return bool(np.any(self.nu != 1.0))

    # -- densities ---------------------------------------------------------

    def density(self, x) -> float:
        """Density at one point (a scalar for univariate kinds)."""
        if self.univariate is not None:
            alpha, rep = self.univariate
            x = float(np.ravel(x)[0])
            if self.is_power:
                return gmml.power_density(alpha, rep, self.nu[0] * alpha, x)
            return gmml.mml_density(alpha, rep, x)
        if self.ff is None:
            raise ModelError(f"kind '{self.kind}' has no closed-form joint density")
        if self.is_power:
            return gmml.ff_power_joint_density(self.ff, self.nu, x)
        return gmml.ff_gmml_density(self.ff, x)

    def density_grid(self, axes) -> np.ndarray:
        """Density on the tensor grid of ``axes``, flattened in row-major order."""
        if len(axes) != self.n:
            raise DomainError(f"expected {self.n} axes, got {len(axes)}")
        if self.univariate is not None:
            return np.array([self.density(x) for x in axes[0]])
        if self.ff is None:
            raise ModelError(f"kind '{self.kind}' has no closed-form joint density")
        return gmml.ff_gmml_density_grid(self.ff, axes, self.nu).ravel()

    # -- distribution functions --------------------------------------------

    def marginal_cdf(self, k: int, x) -> float:
        """
        P(Y_k <= x) for coordinate k (0-based), the atom at zero included.
        """
        if not 0 <= k < self.n:
            raise DomainError(f"coordinate {k} out of range for n={self.n}")
        if self.univariate is not None:
            alpha, rep = self.univariate
            atom = 1.0 - rep.mass
        elif self.ff is not None:
            alpha, rep = gmml.ff_gmml_marginal(self.ff, k)
            atom = 1.0 - rep.mass
        else:
            weights = np.zeros(self.n)
            weights[k] = 1.0
            atom, law = gmml.gmml_project(self.joint, weights)
            alpha, rep = law.blocks.alphas[0], law.rep
        return atom + gmml.power_cdf(alpha, rep, self.nu[k] * alpha, x)

    # -- transforms ----------------------------------------------------------

    def laplace(self, u) -> float:
        """Joint Laplace transform E exp(-<u, Y>)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.univariate is not None:
            alpha, rep = self.univariate
            atom = 1.0 - rep.mass
            if self.is_power:
                return atom + gmml.power_laplace(alpha, rep, self.nu[0], u[0])
            return atom + gmml.mml_laplace(alpha, rep, u[0])
        if self.is_power:
            raise ModelError("joint Laplace transforms of power laws are not available")
        if self.ff is not None:
            return gmml.ff_gmml_laplace(self.ff, u)
        return gmml.gmml_joint_laplace(self.joint, u)

    # -- moments -------------------------------------------------------------

    def moment(self, theta) -> MomentRow:
        """
        Analytic E prod Y_i^theta_i.

        Returns a row with ``analytic=None`` when the moment is infinite.

        Raises:
            ModelError: If no closed form is available for this kind.
        """
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.n,) or np.any(theta < 0.0) or not np.any(theta > 0.0):
            raise DomainError(f"theta must be {self.n} nonnegative numbers, not all zero")
        key = tuple(float(t) for t in theta)
        try:
            return MomentRow(key, self._moment(theta))
        except MomentDoesNotExistError:
            return MomentRow(key, None)

    def _moment(self, theta: np.ndarray) -> float:
        if self.univariate is not None:
            alpha, rep = self.univariate
            return gmml.power_fractional_moment(alpha, rep, self.nu[0], theta[0])
        if self.ff is not None:
            return gmml.ff_power_joint_moment(self.ff, self.nu, theta)
        if np.all(self.joint.alphas == 1.0) and not self.is_power:
            return _mph_moment(self.joint.base, theta)
        raise ModelError(f"kind '{self.kind}' has no closed-form moment of order {theta}")

    # -- projection ----------------------------------------------------------

    def project(self, w, points=(0.5, 1.0, 2.0)) -> ProjectionReport:
        """
        Law of <X, w> with transform residuals at ``points``.

        The residual at u compares the joint transform at u*w with the atom
        plus the transform of the projected law.
        """
        if self.is_power:
            raise ModelError("projections of power laws are not available")
        w = np.atleast_1d(np.asarray(w, dtype=float))
        atom, law = gmml.gmml_project(self.joint, w)
        residuals = tuple(
            abs(
                gmml.gmml_joint_laplace(self.joint, u * w)
                - atom
                - gmml.gmml_univ_laplace(law, u)
            )
            for u in points
        )
        logger.info("projection atom %.6g, worst residual %.3g", atom, max(residuals))
        return ProjectionReport(atom, law, residuals)

    # -- sampling ------------------------------------------------------------

    def sample(self, n: int, rng: sampling.RngState, threads: int = 1):
        """Draws ``n`` rows; see sampling.sample_batch."""
        return sampling.sample_batch(self.joint, n, rng, nu=self.nu, threads=threads)


def _mph_moment(base: MPHStarRep, theta: np.ndarray) -> float:
    """First and second order joint moments of an MPH* vector."""
    orders = theta.astype(int)
    if not np.array_equal(orders, theta) or orders.sum() > 2:
        raise ModelError("MPH* moments are available up to total order 2")
    mean, second = phasetype.mph_moments(base)
    active = np.nonzero(orders)[0]
    if orders.sum() == 1:
        return float(mean[active[0]])
    if active.size == 1:
        return float(second[active[0], active[0]])
    return float(second[active[0], active[1]])


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------


def _array(m: Matrix) -> np.ndarray:
    return np.array(m.data, dtype=float).reshape(m.rows, m.cols)


def _nu(cfg: ModelConfig, n: int) -> np.ndarray:
    if cfg.nu is None:
        return np.ones(n)
    nu = np.array(cfg.nu, dtype=float)
    if nu.shape != (n,) or np.any(nu <= 0.0):
        raise ModelError(f"nu must hold {n} positive numbers, got {list(cfg.nu)}")
    return nu


def _coupling(cfg: ModelConfig) -> np.ndarray:
    section = cfg.orderstat
    if section.P is not None:
        return _array(section.P)
    if section.m < 1:
        raise ModelError(f"m must be a positive integer, got {section.m}")
    if section.coupling == "anti-identity":
        return models.anti_identity(section.m)
    if section.coupling == "uniform":
        return models.uniform_doubly_stochastic(section.m)
    return models.identity_matrix(section.m)


def _univariate(kind: str, alpha: float, rep: PhaseTypeRep, nu: np.ndarray) -> Model:
    base = MPHStarRep(rep.pi, rep.T, np.ones((rep.dim, 1)))
    return Model(
        kind=kind,
        joint=GMMLRep(np.array([alpha]), base),
        nu=nu,
        univariate=(alpha, rep),
    )


def _feed_forward(kind: str, rep: FFGMMLRep, nu: np.ndarray) -> Model:
    return Model(kind=kind, joint=gmml.ff_to_gmml(rep), nu=nu, ff=rep)


def build_model(cfg: ModelConfig) -> Model:
    """
    Turns a parsed config into a Model, validating the representation.

    Raises:
        ModelError: If the representation violates its invariants.
        ConfigError: If a figure name is unknown.
    """
    kind = cfg.kind
    if kind == "figure":
        bundle = models.build_figure_config(cfg.figure)
        return Model(kind=kind, joint=bundle.model, nu=bundle.nu, ff=bundle.ff, figure=bundle)

    if kind == "orderstat":
        section = cfg.orderstat
        os_cfg = models.OrderStatConfig(section.m, section.lam, section.mu, _coupling(cfg))
        alphas = cfg.alphas if cfg.alphas is not None else (1.0, 1.0)
        return _feed_forward(kind, models.orderstat_ffgmml(os_cfg, alphas), np.ones(2))

    if kind in ("ff-gmml", "power-ff-gmml"):
        if len(cfg.C) != len(cfg.D):
            raise ModelError(f"{len(cfg.C)} C blocks but {len(cfg.D)} D blocks")
        ff = FeedForwardRep(
            np.array(cfg.pi),
            tuple(_array(m) for m in cfg.C),
            tuple(_array(m) for m in cfg.D),
        )
        rep = FFGMMLRep(ff, np.array(cfg.alphas))
        return _feed_forward(kind, rep, _nu(cfg, rep.n))

    pi, t = np.array(cfg.pi), _array(cfg.T)
    if kind in UNIVARIATE_KINDS:
        alpha = 1.0
        if kind == "mml":
            if len(cfg.alphas) != 1:
                raise ModelError(f"mml takes one alpha, got {len(cfg.alphas)}")
            alpha = cfg.alphas[0]
            if not 0.0 < alpha <= 1.0:
                raise ModelError(f"alpha must lie in (0, 1], got {alpha}")
        return _univariate(kind, alpha, PhaseTypeRep(pi, t), _nu(cfg, 1))

    base = MPHStarRep(pi, t, _array(cfg.R))
    alphas = np.ones(base.n) if kind == "mph" else np.array(cfg.alphas)
    if alphas.shape != (base.n,):
        raise ModelError(f"need {base.n} alphas, got {alphas.size}")
    return Model(kind=kind, joint=GMMLRep(alphas, base), nu=np.ones(base.n))


def figure_model(name: str) -> Model:
    """Model of a built-in example by name."""
    if name not in models.FIGURE_NAMES:
        raise ConfigError(
            f"unknown figure '{name}', expected one of {', '.join(models.FIGURE_NAMES)}"
        )
    return build_model(ModelConfig(kind="figure", figure=name))
