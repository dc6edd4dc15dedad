"""
Helper utilities for evaluation grids.

Grids are written on the command line as comma-separated axes, each
``min:max:count[:lin|log]``. The same helpers turn a parsed grid into node
arrays and into the row-major list of points written to CSV.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from src.core.errors import ConfigError

SPACINGS = ("lin", "log")


@dataclass(frozen=True)
class AxisSpec:
    """
    One grid axis.

    Attributes:
        lo (float): Smallest node, strictly positive.
        hi (float): Largest node.
        count (int): Number of nodes, at least 2.
        spacing (str): ``lin`` or ``log``.
    """

    lo: float
    hi: float
    count: int
    spacing: str = "lin"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError("grid limits must be finite")
        if self.lo <= 0.0:
            raise ConfigError(f"grid min must be > 0, got {self.lo}")
        if not self.lo < self.hi:
            raise ConfigError(f"grid min must be below max, got {self.lo} >= {self.hi}")
        if self.count < 2:
            raise ConfigError(f"grid count must be at least 2, got {self.count}")
        if self.spacing not in SPACINGS:
            raise ConfigError(f"grid spacing must be lin or log, got '{self.spacing}'")

    def nodes(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid, one AxisSpec per coordinate."""

    axes: tuple

    @property
    def dim(self) -> int:
        return len(self.axes)

    def nodes(self) -> list[np.ndarray]:
        return [axis.nodes() for axis in self.axes]

    def points(self) -> np.ndarray:
        """All grid points in row-major order, shape (size, dim)."""
        return np.array(list(itertools.product(*self.nodes())), dtype=float)

    def to_text(self) -> str:
        return ",".join(
            f"{a.lo!r}:{a.hi!r}:{a.count}:{a.spacing}" for a in self.axes
        )


def _number(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError as e:
        raise ConfigError(f"{what} '{token}' is not a number") from e


def parse_axis(text: str) -> AxisSpec:
    """Parses ``min:max:count[:lin|log]``."""
    parts = [p.strip() for p in text.strip().split(":")]
    if len(parts) not in (3, 4):
        raise ConfigError(f"axis '{text}' must look like min:max:count[:lin|log]")
    lo = _number(parts[0], "grid min")
    hi = _number(parts[1], "grid max")
    try:
        count = int(parts[2])
    except ValueError as e:
        raise ConfigError(f"grid count '{parts[2]}' is not an integer") from e
    spacing = parts[3] if len(parts) == 4 else "lin"
    return AxisSpec(lo, hi, count, spacing)


def parse_grid(text: str, dim: int | None = None) -> GridSpec:
    """
    Parses a comma-separated list of axes.

    Args:
        text (str): e.g. ``"0.01:10:50:log,0.01:10:50:log"``.
        dim (int | None): Expected number of axes; a single axis is broadcast
            to every coordinate.

    Returns:
        GridSpec: The parsed grid.

    Raises:
        ConfigError: On malformed text or a dimension mismatch.
    """
    if not text or not text.strip():
        raise ConfigError("empty grid")
    axes = tuple(parse_axis(chunk) for chunk in text.split(","))
    if dim is not None and len(axes) != dim:
        if len(axes) == 1:
            axes = axes * dim
        else:
            raise ConfigError(f"grid has {len(axes)} axes, model has {dim} coordinates")
    return GridSpec(axes)


def parse_values(text: str) -> np.ndarray:
    """
    Parses a one-dimensional list of real values: either explicit numbers
    separated by commas or ``min:max:count`` (linear, any sign).
    """
    if not text or not text.strip():
        raise ConfigError("empty value list")
    text = text.strip()
    if ":" in text:
        parts = [p.strip() for p in text.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"range '{text}' must look like min:max:count")
        lo, hi = _number(parts[0], "range min"), _number(parts[1], "range max")
        try:
            count = int(parts[2])
        except ValueError as e:
            raise ConfigError(f"range count '{parts[2]}' is not an integer") from e
        if count < 1 or (count > 1 and not lo < hi):
            raise ConfigError(f"invalid range '{text}'")
        return np.linspace(lo, hi, count)
    return np.array([_number(tok.strip(), "value") for tok in text.split(",")])
