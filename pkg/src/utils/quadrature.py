"""
Quadrature rules for heavy-tailed integrands.

Every rule returns ``(nodes, weights)`` so that ``weights @ f(nodes)``
approximates the integral. Densities of Mittag-Leffler type behave like
x^(alpha-1) at the origin and x^(-alpha-1) at infinity, so the rules here work
in the variable u = x^alpha (which removes the singularity) and in log space
(which resolves the slow decay).
"""

import math

import numpy as np
import numpy.polynomial as pln

from src.core import config
from src.core.errors import DomainError


def legendre_rule(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [lo, hi]."""
    if not hi > lo:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    x, w = pln.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def log_legendre_rule(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule in log t on [lo, hi], for integrands spread over decades.

    Args:
        lo (float): Positive lower limit.
        hi (float): Upper limit, larger than lo.
        n (int): Number of nodes.

    Returns:
        tuple[np.ndarray, np.ndarray]: Nodes and weights in the original variable.
    """
    if not 0.0 < lo < hi:
        raise DomainError(f"log rule needs 0 < lo < hi, got [{lo}, {hi}]")
    s, w = legendre_rule(math.log(lo), math.log(hi), n)
    nodes = np.exp(s)
    return nodes, w * nodes


def laguerre_rule(n: int, rate: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Laguerre rule for plain integrals over (0, inf).

    The exponential weight is folded back into the weights, so the rule
    applies to integrands that decay roughly like exp(-rate x).
    """
    x, w = pln.laguerre.laggauss(n)
    return x / rate, w * np.exp(x) / rate


def heavy_tail_split(alpha: float, scale: float) -> float:
    """
    Point beyond which the first asymptotic term describes the tail.

    Args:
        alpha (float): Tail index in (0, 1].
        scale (float): Smallest eigenvalue modulus of the sub-intensity matrix.

    Returns:
        float: The split point X.
    """
    if not scale > 0.0:
        raise DomainError(f"scale must be positive, got {scale}")
    by_factor = config.TAIL_SPLIT_FACTOR * scale ** (-1.0 / alpha)
    by_argument = (config.TAIL_SPLIT_Z / scale) ** (1.0 / alpha)
    return max(by_factor, by_argument)


def power_rule(
    alpha: float, hi: float, n: int = config.LOG_QUAD_NODES
) -> tuple[np.ndarray, np.ndarray]:
    """
    Rule on (0, hi] for integrands behaving like x^(alpha-1) at the origin.

    Integrates in u = x^alpha: a short Gauss-Legendre panel next to the origin
    followed by a log-spaced panel up to hi^alpha.

    Args:
        alpha (float): Exponent of the substitution, in (0, 1].
        hi (float): Upper limit.
        n (int): Nodes of the log-spaced panel.

    Returns:
        tuple[np.ndarray, np.ndarray]: Nodes and weights in x.
    """
    top = hi**alpha
    floor = top * config.LOG_QUAD_FLOOR
    head_u, head_w = legendre_rule(0.0, floor, 8)
    body_u, body_w = log_legendre_rule(floor, top, n)
    u = np.concatenate([head_u, body_u])
    wu = np.concatenate([head_w, body_w])
    # dx = (1/alpha) u^(1/alpha - 1) du
    return u ** (1.0 / alpha), wu * u ** (1.0 / alpha - 1.0) / alpha


def tensor_rule(rules: list[tuple[np.ndarray, np.ndarray]]) -> tuple[list, np.ndarray]:
    """
    Tensor product of one-dimensional rules.

    Returns:
        tuple[list, np.ndarray]: The per-axis node arrays and the weight array
        of shape ``(len(nodes_1), ..., len(nodes_n))``.
    """
    axes = [nodes for nodes, _ in rules]
    weights = rules[0][1]
    for _, w in rules[1:]:
        weights = np.multiply.outer(weights, w)
    return axes, weights
