"""
Unit tests for the gmml module.
"""

import math

import numpy as np
import pytest
from scipy import special

from src.core import gmml, phasetype
from src.core.errors import DomainError, ModelError, MomentDoesNotExistError, OutOfDomainError
from src.core.gmml import AlphaBlocks, FFGMMLRep, GMMLRep, GMMLUnivariateRep
from src.core.phasetype import FeedForwardRep, MPHStarRep, PhaseTypeRep
from src.utils import quadrature


def exp_rep(rate=1.0):
    return PhaseTypeRep(np.array([1.0]), np.array([[-rate]]))


def scalar_chain(alphas=(0.5, 0.7)):
    one = np.array([[-1.0]])
    ff = FeedForwardRep(np.array([1.0]), (one, one), (np.array([[1.0]]), np.array([[1.0]])))
    return FFGMMLRep(ff, np.array(alphas))


def test_alpha_blocks_validation():
    """Blocks need matching lengths, indices in (0, 1] and positive sizes."""
    with pytest.raises(ModelError):
        AlphaBlocks((0.5,), (1, 2))
    with pytest.raises(ModelError):
        AlphaBlocks((1.5,), (1,))
    with pytest.raises(ModelError):
        AlphaBlocks((0.5,), (0,))
    blocks = AlphaBlocks((0.5, 0.8), (2, 1))
    assert blocks.size == 3
    np.testing.assert_allclose(blocks.per_state(), [0.5, 0.5, 0.8])


def test_univariate_rep_dimension_check():
    """Blocks must cover exactly the states of T."""
    with pytest.raises(ModelError):
        GMMLUnivariateRep(AlphaBlocks((0.5,), (2,)), exp_rep())


def test_gmml_rep_alpha_count():
    """One index per coordinate."""
    base = MPHStarRep(np.array([1.0]), np.array([[-1.0]]), np.array([[1.0, 1.0]]))
    with pytest.raises(ModelError):
        GMMLRep(np.array([0.5]), base)


def test_mml_laplace_exponential():
    """MML(1/2) with T = -1 at u = 4 gives 1 / (sqrt(4) + 1)."""
    assert gmml.mml_laplace(0.5, exp_rep(), 4.0) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_alpha_one_collapses_to_phase_type():
    """At alpha = 1 the MML functionals are the phase-type ones."""
    rep = phasetype.random_ph(np.random.default_rng(1), 3)
    for x in (0.3, 1.0, 4.0):
        assert gmml.mml_density(1.0, rep, x) == pytest.approx(phasetype.ph_density(rep, x))
        assert gmml.mml_cdf(1.0, rep, x) == pytest.approx(phasetype.ph_cdf(rep, x))
    assert gmml.mml_laplace(1.0, rep, 2.0) == pytest.approx(phasetype.ph_laplace(rep, 2.0))


def test_half_index_survival():
    """With T = -1 and alpha = 1/2 the survival is erfcx(sqrt(x))."""
    rep = exp_rep()
    for x in (0.25, 4.0, 100.0):
        assert gmml.mml_survival(0.5, rep, x) == pytest.approx(
            special.erfcx(math.sqrt(x)), rel=1e-9
        )
    assert gmml.mml_cdf(0.5, rep, 4.0) == pytest.approx(1.0 - special.erfcx(2.0), rel=1e-9)
    assert gmml.mml_survival(0.5, rep, 0.0) == 1.0


def test_density_integrates_to_one():
    """Quadrature up to the split point plus the analytic tail gives unit mass."""
    rep = PhaseTypeRep(np.array([0.4, 0.6]), np.array([[-2.0, 1.0], [0.5, -1.5]]))
    alpha = 0.8
    hi = gmml.mml_tail_split(alpha, rep)
    nodes, weights = quadrature.power_rule(alpha, hi)
    mass = sum(w * gmml.mml_density(alpha, rep, x) for x, w in zip(nodes, weights))
    mass += gmml.mml_survival_asymptotic(alpha, rep, hi)
    assert mass == pytest.approx(1.0, abs=1e-3)


def test_tail_constant():
    """x^alpha (1 - F(x)) tends to pi (-T)^-1 e / Gamma(1 - alpha)."""
    rep = exp_rep()
    c = gmml.mml_tail_constant(0.5, rep)
    assert c == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-12)
    x = 1e6
    assert x**0.5 * gmml.mml_survival(0.5, rep, x) == pytest.approx(c, rel=1e-2)
    with pytest.raises(DomainError):
        gmml.mml_tail_constant(1.0, rep)


def test_survival_asymptotic_expansion():
    """The expansion matches the closed form far in the tail."""
    x = 1e4
    assert gmml.mml_survival_asymptotic(0.5, exp_rep(), x) == pytest.approx(
        special.erfcx(100.0), rel=1e-7
    )


def test_stable_moment():
    """E S^q = Gamma(1 - q/alpha) / Gamma(1 - q), only for q < alpha."""
    assert gmml.stable_moment(0.5, 0.25) == pytest.approx(
        math.gamma(0.5) / math.gamma(0.75), rel=1e-12
    )
    assert gmml.stable_moment(1.0, 3.0) == 1.0
    with pytest.raises(MomentDoesNotExistError):
        gmml.stable_moment(0.5, 0.5)


def test_fractional_moment():
    """Moments of MML laws factor into stable and phase-type parts."""
    rep = exp_rep()
    assert gmml.mml_fractional_moment(1.0, rep, 2.0) == pytest.approx(2.0, rel=1e-12)
    expected = math.gamma(0.5) / math.gamma(0.75) * math.gamma(1.5)
    assert gmml.mml_fractional_moment(0.5, rep, 0.25) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(MomentDoesNotExistError):
        gmml.mml_fractional_moment(0.5, rep, 1.0)


def test_convolution_same_index():
    """The transform of a sum is the product of transforms."""
    rng = np.random.default_rng(2)
    r1, r2 = phasetype.random_ph(rng, 2), phasetype.random_ph(rng, 3)
    alpha, rep = gmml.convolve_same_index((0.6, r1), (0.6, r2))
    assert alpha == 0.6 and rep.dim == 5
    for u in (0.2, 1.0, 3.0):
        product = gmml.mml_laplace(0.6, r1, u) * gmml.mml_laplace(0.6, r2, u)
        assert gmml.mml_laplace(0.6, rep, u) == pytest.approx(product, rel=1e-12)
    with pytest.raises(DomainError):
        gmml.convolve_same_index((0.6, r1), (0.7, r2))


def test_convolution_mixed_indices():
    """Different indices concatenate into a two-block law."""
    rng = np.random.default_rng(4)
    r1, r2 = phasetype.random_ph(rng, 2), phasetype.random_ph(rng, 2)
    mixed = gmml.convolve_mixed(
        gmml.gmml_univariate_from_mml(0.5, r1), gmml.gmml_univariate_from_mml(0.9, r2)
    )
    assert mixed.blocks.alphas == (0.5, 0.9)
    for u in (0.5, 2.0):
        product = gmml.mml_laplace(0.5, r1, u) * gmml.mml_laplace(0.9, r2, u)
        assert gmml.gmml_univ_laplace(mixed, u) == pytest.approx(product, rel=1e-12)


def test_scaling():
    """cX has representation (pi, c^-alpha T)."""
    rep = phasetype.random_ph(np.random.default_rng(6), 3)
    scaled = gmml.scale(0.6, rep, 2.5)
    for u in (0.3, 1.7):
        assert gmml.mml_laplace(0.6, scaled, u) == pytest.approx(
            gmml.mml_laplace(0.6, rep, 2.5 * u), rel=1e-12
        )
    with pytest.raises(DomainError):
        gmml.scale(0.6, rep, 0.0)


def test_joint_laplace_alpha_one():
    """With all indices 1 the GMML transform is the MPH* transform."""
    base = phasetype.random_mph(np.random.default_rng(8), 4, 2)
    law = GMMLRep(np.ones(2), base)
    for u in ([0.5, 0.5], [2.0, 0.1]):
        assert gmml.gmml_joint_laplace(law, u) == pytest.approx(
            phasetype.mph_laplace(base, u), rel=1e-12
        )


def test_projection_identity():
    """joint(u w) = atom + univariate(u) when each state earns under one index."""
    rng = np.random.default_rng(9)
    t = phasetype.random_subintensity(rng, 3)
    r = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    law = GMMLRep(np.array([0.6, 0.8]), MPHStarRep(np.array([0.5, 0.3, 0.2]), t, r))
    w = np.array([0.7, 1.3])
    atom, univariate = gmml.gmml_project(law, w)
    assert univariate.blocks.alphas == (0.6, 0.8)
    assert 0.0 < atom < 1.0
    for u in (0.1, 1.0, 5.0):
        joint = gmml.gmml_joint_laplace(law, u * w)
        assert joint == pytest.approx(atom + gmml.gmml_univ_laplace(univariate, u), abs=1e-10)


def test_projection_mixed_state_rejected():
    """A state earning under two different indices has no GMML projection."""
    base = MPHStarRep(np.array([1.0]), np.array([[-1.0]]), np.array([[1.0, 1.0]]))
    with pytest.raises(ModelError):
        gmml.gmml_project(GMMLRep(np.array([0.5, 0.7]), base), [1.0, 1.0])
    with pytest.raises(DomainError):
        gmml.gmml_project(GMMLRep(np.array([0.5, 0.5]), base), [0.0, 0.0])


def test_projection_ignores_negligible_cross_reward():
    """A reward below the zero-reward cut does not count as earning under its index."""
    t = np.array([[-2.0, 1.0], [0.5, -1.0]])
    r = np.array([[1.0, 1e-20], [0.0, 1.0]])
    law = GMMLRep(np.array([0.6, 0.8]), MPHStarRep(np.array([0.5, 0.5]), t, r))
    atom, univariate = gmml.gmml_project(law, [1.0, 1.0])
    assert atom == pytest.approx(0.0, abs=1e-14)
    assert univariate.blocks.alphas == (0.6, 0.8)
    assert univariate.blocks.dims == (1, 1)


def test_feed_forward_transform_matches_backbone():
    """The chain transform equals the transform of the assembled GMML form."""
    rep = scalar_chain()
    law = gmml.ff_to_gmml(rep)
    for u in ([0.5, 2.0], [3.0, 0.0]):
        assert gmml.ff_gmml_laplace(rep, u) == pytest.approx(
            gmml.gmml_joint_laplace(law, u), rel=1e-12
        )


def test_feed_forward_density_factorizes():
    """A scalar chain has independent MML coordinates."""
    rep = scalar_chain()
    x = (0.8, 2.5)
    expected = gmml.mml_density(0.5, exp_rep(), x[0]) * gmml.mml_density(0.7, exp_rep(), x[1])
    assert gmml.ff_gmml_density(rep, x) == pytest.approx(expected, rel=1e-10)


def test_power_joint_density():
    """Power coordinates of a scalar chain are independent power MML laws."""
    rep = scalar_chain()
    x = (0.8, 1.7)
    np.testing.assert_allclose(
        gmml.ff_power_joint_density(rep, [1.0, 1.0], x), gmml.ff_gmml_density(rep, x), rtol=1e-10
    )
    nu = (2.0, 3.0)
    expected = gmml.power_density(0.5, exp_rep(), 1.0, x[0]) * gmml.power_density(
        0.7, exp_rep(), 2.1, x[1]
    )
    assert gmml.ff_power_joint_density(rep, nu, x) == pytest.approx(expected, rel=1e-10)


def test_density_grid_matches_pointwise():
    """The tensor grid evaluation agrees with single-point evaluation."""
    ff = phasetype.FeedForwardRep(
        np.array([0.6, 0.4]),
        (np.array([[-2.0, 1.0], [0.0, -1.0]]), np.array([[-1.5]])),
        (np.array([[1.0], [1.0]]), np.array([[1.5]])),
    )
    rep = FFGMMLRep(ff, np.array([0.7, 0.9]))
    axes = [np.array([0.5, 1.0, 3.0]), np.array([0.2, 2.0])]
    grid = gmml.ff_gmml_density_grid(rep, axes)
    assert grid.shape == (3, 2)
    for a, x1 in enumerate(axes[0]):
        for b, x2 in enumerate(axes[1]):
            assert grid[a, b] == pytest.approx(gmml.ff_gmml_density(rep, [x1, x2]), rel=1e-10)
    with pytest.raises(DomainError):
        gmml.ff_gmml_density_grid(rep, axes[:1])


def test_joint_laplace_matches_density_quadrature():
    """Integrating exp(-<u, x>) against the joint density gives the closed-form transform."""
    ff = phasetype.FeedForwardRep(
        np.array([0.6, 0.4]),
        (np.array([[-2.0, 1.0], [0.0, -1.0]]), np.array([[-1.5]])),
        (np.array([[1.0], [1.0]]), np.array([[1.5]])),
    )
    rep = FFGMMLRep(ff, np.array([0.6, 0.8]))
    axes, weights = quadrature.tensor_rule(
        [quadrature.power_rule(a, 80.0) for a in rep.alphas]
    )
    density = gmml.ff_gmml_density_grid(rep, axes)
    for u1 in (0.5, 1.0, 2.0):
        for u2 in (0.5, 1.0, 2.0):
            damping = np.multiply.outer(np.exp(-u1 * axes[0]), np.exp(-u2 * axes[1]))
            numeric = float(np.sum(weights * density * damping))
            assert numeric == pytest.approx(gmml.ff_gmml_laplace(rep, [u1, u2]), abs=1e-3)


def test_feed_forward_marginal():
    """Coordinate i is MML(alpha_i) with the propagated initial vector."""
    alpha, rep = gmml.ff_gmml_marginal(scalar_chain(), 1)
    assert alpha == 0.7
    np.testing.assert_allclose(rep.pi, [1.0])
    np.testing.assert_allclose(rep.T, [[-1.0]])
    with pytest.raises(DomainError):
        gmml.ff_gmml_marginal(scalar_chain(), 2)


def test_power_transform_without_power():
    """nu = 1 leaves the law unchanged."""
    rep = phasetype.random_ph(np.random.default_rng(10), 2)
    for x in (0.4, 2.0):
        assert gmml.power_density(0.7, rep, 0.7, x) == pytest.approx(
            gmml.mml_density(0.7, rep, x), rel=1e-10
        )
        assert gmml.power_cdf(0.7, rep, 0.7, x) == pytest.approx(
            gmml.mml_cdf(0.7, rep, x), rel=1e-10
        )
    assert gmml.power_cdf(0.7, rep, 0.7, 0.0) == 0.0


def test_power_laplace_exponential():
    """Exp(1) with nu = 1 sums the geometric series 1 / (1 + s)."""
    assert gmml.power_laplace(1.0, exp_rep(), 1.0, 4.0) == pytest.approx(0.2, rel=1e-10)


def test_power_laplace_divergent():
    """Terms that never shrink raise OutOfDomainError."""
    with pytest.raises(OutOfDomainError):
        gmml.power_laplace(1.0, exp_rep(), 1.0, 0.5)
    with pytest.raises(DomainError):
        gmml.power_laplace(1.0, exp_rep(), 0.5, 4.0)


def test_power_moments():
    """E Y^theta = E X^(theta/nu)."""
    rep = exp_rep()
    assert gmml.power_fractional_moment(0.5, rep, 4.0, 1.0) == pytest.approx(
        gmml.mml_fractional_moment(0.5, rep, 0.25), rel=1e-12
    )


def test_joint_power_moment_existence():
    """Orders at or beyond nu * alpha have no moment."""
    rep = scalar_chain()
    with pytest.raises(MomentDoesNotExistError):
        gmml.ff_power_joint_moment(rep, [2.0, 2.0], [1.0, 0.0])
    value = gmml.ff_power_joint_moment(rep, [4.0, 4.0], [1.0, 1.0])
    expected = gmml.power_fractional_moment(0.5, exp_rep(), 4.0, 1.0) * (
        gmml.power_fractional_moment(0.7, exp_rep(), 4.0, 1.0)
    )
    assert value == pytest.approx(expected, rel=1e-10)


def test_correlation_of_independent_coordinates():
    """Independent coordinates are uncorrelated; missing variances are rejected."""
    rep = scalar_chain()
    assert gmml.correlation_power(rep, [6.0, 6.0]) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(MomentDoesNotExistError):
        gmml.correlation_power(rep, [4.0, 6.0])
    with pytest.raises(DomainError):
        gmml.correlation_power(rep, [6.0, 6.0], (0, 0))
