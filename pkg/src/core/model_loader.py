"""
Model configuration files.

A model is described by one TOML document. Matrices are tables with explicit
``rows``/``cols`` and a row-major ``data`` array, feed-forward blocks are
arrays of such tables::

    kind = "mml"
    alphas = [0.6]
    pi = [0.3, 0.7]

    [T]
    rows = 2
    cols = 2
    data = [-1.0, 0.5, 0.0, -2.0]

Parsing only checks the document's shape. The representation invariants are
enforced when the model is built, so a well-formed file describing an invalid
law fails with ModelError instead of ConfigError.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import toml

from src.core.errors import ConfigError

logger = logging.getLogger(__name__)

KINDS = ("ph", "mph", "mml", "gmml", "ff-gmml", "power-ff-gmml", "orderstat", "figure")
COUPLINGS = ("identity", "anti-identity", "uniform")

# Keys each kind reads; anything else in the document is rejected.
_KEYS = {
    "ph": {"pi", "T"},
    "mph": {"pi", "T", "R"},
    "mml": {"alphas", "nu", "pi", "T"},
    "gmml": {"alphas", "pi", "T", "R"},
    "ff-gmml": {"alphas", "pi", "C", "D"},
    "power-ff-gmml": {"alphas", "nu", "pi", "C", "D"},
    "orderstat": {"alphas", "orderstat"},
    "figure": {"figure"},
}


@dataclass(frozen=True)
class Matrix:
    """Row-major matrix as stored in a config file."""

    rows: int
    cols: int
    data: tuple

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"matrix dimensions must be positive, got {self.rows}x{self.cols}")
        if len(self.data) != self.rows * self.cols:
            raise ConfigError(
                f"matrix declares {self.rows}x{self.cols} but holds {len(self.data)} entries"
            )

    def to_nested(self) -> list[list[float]]:
        return [
            list(self.data[i * self.cols : (i + 1) * self.cols]) for i in range(self.rows)
        ]

    @classmethod
    def from_array(cls, array) -> "Matrix":
        rows = [list(map(float, row)) for row in array]
        return cls(len(rows), len(rows[0]), tuple(v for row in rows for v in row))


@dataclass(frozen=True)
class OrderStatSection:
    """``[orderstat]`` table: m, rates and the coupling (named or explicit)."""

    m: int
    lam: float
    mu: float
    coupling: str = "identity"
    P: Matrix | None = None


@dataclass(frozen=True)
class ModelConfig:
    """
    In-memory form of a model file.

    Attributes:
        kind (str): One of KINDS.
        alphas (tuple | None): Indices, one per coordinate.
        nu (tuple | None): Power exponents, one per coordinate.
        pi (tuple | None): Initial vector.
        T (Matrix | None): Sub-intensity matrix.
        R (Matrix | None): Reward matrix.
        C (tuple[Matrix, ...]): Feed-forward diagonal blocks.
        D (tuple[Matrix, ...]): Feed-forward coupling blocks.
        orderstat (OrderStatSection | None): Order-statistics parameters.
        figure (str | None): Name of a built-in example model.
    """

    kind: str
    alphas: tuple | None = None
    nu: tuple | None = None
    pi: tuple | None = None
    T: Matrix | None = None
    R: Matrix | None = None
    C: tuple = field(default=())
    D: tuple = field(default=())
    orderstat: OrderStatSection | None = None
    figure: str | None = None


def _floats(value, key: str) -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{key}' must be a non-empty array of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"'{key}' must contain only numbers, found {v!r}")
        if not math.isfinite(v):
            raise ConfigError(f"'{key}' must contain finite numbers, found {v!r}")
        out.append(float(v))
    return tuple(out)


def _integer(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer, found {value!r}")
    return value


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, found {value!r}")
    return float(value)


def _matrix(value, key: str) -> Matrix:
    if not isinstance(value, dict):
        raise ConfigError(f"'{key}' must be a table with rows, cols and data")
    missing = {"rows", "cols", "data"} - set(value)
    if missing:
        raise ConfigError(f"'{key}' is missing {', '.join(sorted(missing))}")
    extra = set(value) - {"rows", "cols", "data"}
    if extra:
        raise ConfigError(f"'{key}' has unknown keys {', '.join(sorted(extra))}")
    return Matrix(
        _integer(value["rows"], f"{key}.rows"),
        _integer(value["cols"], f"{key}.cols"),
        _floats(value["data"], f"{key}.data"),
    )


def _blocks(value, key: str) -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{key}' must be a non-empty array of matrix tables")
    return tuple(_matrix(item, f"{key}[{i}]") for i, item in enumerate(value))


def _orderstat(value) -> OrderStatSection:
    if not isinstance(value, dict):
        raise ConfigError("'orderstat' must be a table")
    extra = set(value) - {"m", "lam", "mu", "coupling", "P"}
    if extra:
        raise ConfigError(f"'orderstat' has unknown keys {', '.join(sorted(extra))}")
    for key in ("m", "lam", "mu"):
        if key not in value:
            raise ConfigError(f"'orderstat' is missing '{key}'")
    if "P" in value:
        if "coupling" in value:
            raise ConfigError("'orderstat' takes either 'coupling' or 'P', not both")
        return OrderStatSection(
            m=_integer(value["m"], "orderstat.m"),
            lam=_number(value["lam"], "orderstat.lam"),
            mu=_number(value["mu"], "orderstat.mu"),
            coupling="explicit",
            P=_matrix(value["P"], "orderstat.P"),
        )
    coupling = value.get("coupling", "identity")
    if coupling not in COUPLINGS:
        raise ConfigError(
            f"unknown coupling '{coupling}', expected one of {', '.join(COUPLINGS)}"
        )
    return OrderStatSection(
        m=_integer(value["m"], "orderstat.m"),
        lam=_number(value["lam"], "orderstat.lam"),
        mu=_number(value["mu"], "orderstat.mu"),
        coupling=coupling,
    )


def _require(doc: dict, kind: str, *keys: str) -> None:
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ConfigError(f"kind '{kind}' needs {', '.join(missing)}")


def config_from_dict(doc: dict) -> ModelConfig:
    """
    Builds a ModelConfig from a decoded TOML document.

    Raises:
        ConfigError: On a missing or unknown key, a wrong type or a matrix
            whose data does not match its declared dimensions.
    """
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"'kind' must be one of {', '.join(KINDS)}, found {kind!r}")
    unknown = set(doc) - _KEYS[kind] - {"kind"}
    if unknown:
        raise ConfigError(f"kind '{kind}' does not take {', '.join(sorted(unknown))}")

    if kind == "figure":
        _require(doc, kind, "figure")
        if not isinstance(doc["figure"], str):
            raise ConfigError("'figure' must be a string")
        return ModelConfig(kind=kind, figure=doc["figure"])
    if kind == "orderstat":
        _require(doc, kind, "orderstat")
        return ModelConfig(
            kind=kind,
            alphas=_floats(doc["alphas"], "alphas") if "alphas" in doc else None,
            orderstat=_orderstat(doc["orderstat"]),
        )

    if kind in ("ff-gmml", "power-ff-gmml"):
        _require(doc, kind, "alphas", "pi", "C", "D")
    elif kind in ("mml", "gmml"):
        _require(doc, kind, "alphas", "pi", "T")
    else:
        _require(doc, kind, "pi", "T")
    if kind in ("mph", "gmml"):
        _require(doc, kind, "R")
    if kind == "power-ff-gmml":
        _require(doc, kind, "nu")

    return ModelConfig(
        kind=kind,
        alphas=_floats(doc["alphas"], "alphas") if "alphas" in doc else None,
        nu=_floats(doc["nu"], "nu") if "nu" in doc else None,
        pi=_floats(doc["pi"], "pi"),
        T=_matrix(doc["T"], "T") if "T" in doc else None,
        R=_matrix(doc["R"], "R") if "R" in doc else None,
        C=_blocks(doc["C"], "C") if "C" in doc else (),
        D=_blocks(doc["D"], "D") if "D" in doc else (),
    )


def parse_config(text: str) -> ModelConfig:
    """
    Parses a model document.

    Args:
        text (str): TOML source.

    Returns:
        ModelConfig: The parsed configuration.

    Raises:
        ConfigError: If the text is not TOML or does not describe a model.
    """
    try:
        doc = toml.loads(text)
    except toml.TomlDecodeError as e:
        raise ConfigError(f"model file is not valid TOML: {e}") from e
    return config_from_dict(doc)


def load_config(path) -> ModelConfig:
    """Reads and parses a model file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read model file '{path}': {e.strerror}") from e
    cfg = parse_config(text)
    logger.info("loaded %s model from %s", cfg.kind, path)
    return cfg


def _matrix_dict(m: Matrix) -> dict:
    return {"rows": m.rows, "cols": m.cols, "data": list(m.data)}


def config_to_dict(cfg: ModelConfig) -> dict:
    """Inverse of config_from_dict."""
    doc = {"kind": cfg.kind}
    if cfg.figure is not None:
        doc["figure"] = cfg.figure
    for key in ("alphas", "nu", "pi"):
        value = getattr(cfg, key)
        if value is not None:
            doc[key] = list(value)
    for key in ("T", "R"):
        value = getattr(cfg, key)
        if value is not None:
            doc[key] = _matrix_dict(value)
    if cfg.C:
        doc["C"] = [_matrix_dict(m) for m in cfg.C]
    if cfg.D:
        doc["D"] = [_matrix_dict(m) for m in cfg.D]
    if cfg.orderstat is not None:
        section = cfg.orderstat
        table = {"m": section.m, "lam": section.lam, "mu": section.mu}
        if section.P is not None:
            table["P"] = _matrix_dict(section.P)
        else:
            table["coupling"] = section.coupling
        doc["orderstat"] = table
    return doc


def dump_config(cfg: ModelConfig) -> str:
    """Serializes a ModelConfig; ``parse_config(dump_config(c)) == c``."""
    return toml.dumps(config_to_dict(cfg))
