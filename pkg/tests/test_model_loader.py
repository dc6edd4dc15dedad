"""
Unit tests for the model_loader module.
"""

import pytest

from src.core import model_loader
from src.core.errors import ConfigError
from src.core.model_loader import Matrix, ModelConfig, OrderStatSection

MML_DOC = """
kind = "mml"
alphas = [0.6]
pi = [0.3, 0.7]

[T]
rows = 2
cols = 2
data = [-1.0, 0.5, 0.0, -2.0]
"""

FF_DOC = """
kind = "power-ff-gmml"
alphas = [0.6, 0.7]
nu = [5.0, 4.0]
pi = [1.0]

[[C]]
rows = 1
cols = 1
data = [-1.0]

[[C]]
rows = 1
cols = 1
data = [-2.0]

[[D]]
rows = 1
cols = 1
data = [1.0]

[[D]]
rows = 1
cols = 1
data = [2.0]
"""


def test_parse_mml():
    """A univariate document parses into its fields."""
    cfg = model_loader.parse_config(MML_DOC)
    assert cfg.kind == "mml"
    assert cfg.alphas == (0.6,)
    assert cfg.pi == (0.3, 0.7)
    assert cfg.T == Matrix(2, 2, (-1.0, 0.5, 0.0, -2.0))
    assert cfg.T.to_nested() == [[-1.0, 0.5], [0.0, -2.0]]
    assert cfg.R is None


def test_parse_feed_forward():
    """Arrays of matrix tables become C and D blocks."""
    cfg = model_loader.parse_config(FF_DOC)
    assert len(cfg.C) == 2 and len(cfg.D) == 2
    assert cfg.nu == (5.0, 4.0)
    assert cfg.D[1].data == (2.0,)


def test_parse_orderstat_and_figure():
    """Named couplings, explicit P and figure references."""
    cfg = model_loader.parse_config(
        'kind = "orderstat"\nalphas = [0.6, 0.7]\n[orderstat]\nm = 4\nlam = 1.0\nmu = 2.0\n'
        'coupling = "anti-identity"\n'
    )
    assert cfg.orderstat == OrderStatSection(4, 1.0, 2.0, "anti-identity")
    explicit = model_loader.parse_config(
        'kind = "orderstat"\n[orderstat]\nm = 1\nlam = 1.0\nmu = 2.0\n'
        "[orderstat.P]\nrows = 1\ncols = 1\ndata = [1.0]\n"
    )
    assert explicit.orderstat.coupling == "explicit"
    assert explicit.alphas is None
    assert model_loader.parse_config('kind = "figure"\nfigure = "fig3"').figure == "fig3"


@pytest.mark.parametrize(
    "text",
    [
        "kind = [",
        'kind = "weird"',
        'kind = "ph"\npi = [1.0]',
        'kind = "ph"\npi = [1.0]\nextra = 1\n[T]\nrows = 1\ncols = 1\ndata = [-1.0]',
        'kind = "ph"\npi = [1.0]\n[T]\nrows = 2\ncols = 1\ndata = [-1.0]',
        'kind = "ph"\npi = ["a"]\n[T]\nrows = 1\ncols = 1\ndata = [-1.0]',
        'kind = "ph"\npi = [1.0]\n[T]\nrows = 1.5\ncols = 1\ndata = [-1.0]',
        'kind = "ph"\npi = [1.0]\n[T]\nrows = 1\ncols = 1\ndata = [-1.0]\nfoo = 2',
        'kind = "mph"\npi = [1.0]\n[T]\nrows = 1\ncols = 1\ndata = [-1.0]',
        'kind = "figure"\nfigure = 3',
        'kind = "orderstat"\n[orderstat]\nm = 3\nlam = 1.0\nmu = 1.0\ncoupling = "random"',
        'kind = "orderstat"\n[orderstat]\nm = 3\nlam = 1.0',
    ],
)
def test_parse_rejects(text):
    """Malformed documents raise ConfigError."""
    with pytest.raises(ConfigError):
        model_loader.parse_config(text)


def test_round_trip():
    """parse_config(dump_config(c)) == c."""
    for text in (MML_DOC, FF_DOC):
        cfg = model_loader.parse_config(text)
        assert model_loader.parse_config(model_loader.dump_config(cfg)) == cfg
    cfg = ModelConfig(
        kind="orderstat",
        alphas=(0.6, 0.7),
        orderstat=OrderStatSection(2, 1.0, 2.0, "explicit", Matrix(2, 2, (0.5, 0.5, 0.5, 0.5))),
    )
    assert model_loader.parse_config(model_loader.dump_config(cfg)) == cfg


def test_matrix_from_array():
    m = Matrix.from_array([[1, 2], [3, 4]])
    assert (m.rows, m.cols) == (2, 2)
    assert m.data == (1.0, 2.0, 3.0, 4.0)


def test_load_config(tmp_path):
    """Files are read as UTF-8; missing files raise ConfigError."""
    path = tmp_path / "model.toml"
    path.write_text(MML_DOC, encoding="utf-8")
    assert model_loader.load_config(path).kind == "mml"
    with pytest.raises(ConfigError):
        model_loader.load_config(tmp_path / "missing.toml")
