"""
Unit tests for the model_interface module.
"""

import math

import numpy as np
import pytest
from scipy import special

from src.core import gmml, model_interface, model_loader
from src.core.errors import ConfigError, DomainError, ModelError
from src.core.model_loader import Matrix, ModelConfig, OrderStatSection
from src.core.sampling import RngState


def exp_config(kind="mml", alphas=(0.5,), nu=None):
    return ModelConfig(
        kind=kind, alphas=alphas, nu=nu, pi=(1.0,), T=Matrix(1, 1, (-1.0,))
    )


def atom_config():
    return ModelConfig(
        kind="mph",
        pi=(0.3, 0.7),
        T=Matrix(2, 2, (-1.0, 0.0, 0.0, -2.0)),
        R=Matrix(2, 1, (1.0, 0.0)),
    )


def test_build_mml():
    """A univariate MML config answers density, CDF and transform queries."""
    model = model_interface.build_model(exp_config())
    assert model.n == 1 and not model.is_power
    assert model.laplace([4.0]) == pytest.approx(1.0 / 3.0)
    assert model.marginal_cdf(0, 4.0) == pytest.approx(1.0 - special.erfcx(2.0), rel=1e-9)
    x = 2.0
    assert model.density([x]) == pytest.approx(gmml.mml_density(0.5, model.univariate[1], x))
    assert model.density_grid([np.array([1.0, 2.0])]).shape == (2,)


def test_build_ph_moments():
    """ph kind: alpha 1 and exponential moments."""
    model = model_interface.build_model(exp_config(kind="ph", alphas=None))
    assert model.univariate[0] == 1.0
    assert model.moment([2.0]).analytic == pytest.approx(2.0)


def test_mml_alpha_checks():
    """mml needs exactly one alpha in (0, 1]."""
    with pytest.raises(ModelError):
        model_interface.build_model(exp_config(alphas=(0.5, 0.6)))
    with pytest.raises(ModelError):
        model_interface.build_model(exp_config(alphas=(1.5,)))


def test_invalid_representation_is_model_error():
    """A well-formed file with a positive diagonal fails at build time."""
    cfg = ModelConfig(kind="ph", pi=(1.0,), T=Matrix(1, 1, (1.0,)))
    with pytest.raises(ModelError):
        model_interface.build_model(cfg)


def test_infinite_moment_row():
    """Moments beyond the tail index are reported as missing."""
    model = model_interface.build_model(exp_config())
    row = model.moment([0.7])
    assert row.theta == (0.7,)
    assert row.analytic is None
    with pytest.raises(DomainError):
        model.moment([0.0])


def test_power_univariate():
    """nu turns the model into Y = X^(1/nu)."""
    model = model_interface.build_model(exp_config(nu=(4.0,)))
    assert model.is_power
    expected = gmml.mml_fractional_moment(0.5, model.univariate[1], 0.25)
    assert model.moment([1.0]).analytic == pytest.approx(expected)
    with pytest.raises(ModelError):
        model.project([1.0])


def test_atom_projection():
    """The zero-reward example projects to an atom 0.7 with small residuals."""
    model = model_interface.build_model(atom_config())
    report = model.project([1.0])
    assert report.atom == pytest.approx(0.7)
    assert report.law.blocks.alphas == (1.0,)
    assert max(report.residuals) < 1e-12
    assert model.marginal_cdf(0, 0.0) == pytest.approx(0.7)
    assert model.marginal_cdf(0, 50.0) == pytest.approx(1.0)


def test_mph_moments_and_density():
    """MPH* models have moments up to order 2 but no joint density."""
    model = model_interface.build_model(atom_config())
    assert model.moment([1.0]).analytic == pytest.approx(0.3)
    assert model.moment([2.0]).analytic == pytest.approx(0.6)
    with pytest.raises(ModelError):
        model.moment([3.0])
    with pytest.raises(ModelError):
        model.density([1.0])


def test_gmml_without_closed_moment():
    """A GMML law with alpha < 1 on a general backbone has no moment formula."""
    cfg = ModelConfig(
        kind="gmml",
        alphas=(0.5,),
        pi=(1.0,),
        T=Matrix(1, 1, (-1.0,)),
        R=Matrix(1, 1, (1.0,)),
    )
    model = model_interface.build_model(cfg)
    assert model.laplace([4.0]) == pytest.approx(1.0 / 3.0)
    with pytest.raises(ModelError):
        model.moment([0.2])


def test_orderstat_model():
    """The order-statistics kind defaults to exponential marginals."""
    cfg = ModelConfig(kind="orderstat", orderstat=OrderStatSection(3, 1.0, 2.0, "uniform"))
    model = model_interface.build_model(cfg)
    assert model.n == 2
    assert model.laplace([1.0, 2.0]) == pytest.approx(0.5 * 0.5)
    assert model.marginal_cdf(1, 1.0) == pytest.approx(1.0 - math.exp(-2.0))


def test_feed_forward_model_from_file():
    """A power feed-forward config gives a density, moments and a sampler."""
    text = (
        'kind = "power-ff-gmml"\nalphas = [0.6, 0.7]\nnu = [5.0, 5.0]\npi = [1.0]\n'
        "[[C]]\nrows = 1\ncols = 1\ndata = [-1.0]\n"
        "[[C]]\nrows = 1\ncols = 1\ndata = [-1.0]\n"
        "[[D]]\nrows = 1\ncols = 1\ndata = [1.0]\n"
        "[[D]]\nrows = 1\ncols = 1\ndata = [1.0]\n"
    )
    model = model_interface.build_model(model_loader.parse_config(text))
    assert model.is_power
    assert model.density([1.0, 1.0]) > 0.0
    assert model.moment([1.0, 1.0]).analytic == pytest.approx(
        model.moment([1.0, 0.0]).analytic * model.moment([0.0, 1.0]).analytic
    )
    with pytest.raises(ModelError):
        model.laplace([1.0, 1.0])
    batch = model.sample(10, RngState(seed=1))
    assert batch.values.shape == (10, 2)


def test_figure_model():
    """Built-in examples are reachable by name."""
    model = model_interface.figure_model("fig3")
    assert model.figure.statistic == "pearson_correlation"
    assert model.is_power
    with pytest.raises(ConfigError):
        model_interface.figure_model("fig9")


def test_coordinate_range():
    model = model_interface.build_model(atom_config())
    with pytest.raises(DomainError):
        model.marginal_cdf(1, 1.0)
    with pytest.raises(DomainError):
        model.density_grid([np.ones(2), np.ones(2)])
