"""
Composite Gauss-Legendre rules on panels split at kernel features.

Resolvent kernels have kinks on x = x' and at every interaction center; the
panel edges are placed there so each panel integrates a smooth function.
"""

from functools import lru_cache
from typing import Iterable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=32)
def _reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return leggauss(order)


def refine_edges(edges: Iterable[float], max_width: float) -> np.ndarray:
    """Sorted unique edges, subdividing every gap wider than max_width"""
    edges = np.unique(np.asarray(list(edges), dtype=float))
    if max_width <= 0 or len(edges) < 2:
        return edges
    pieces = [edges[:1]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, int(np.ceil((hi - lo) / max_width)))
        pieces.append(np.linspace(lo, hi, n + 1)[1:])
    return np.concatenate(pieces)


def gauss_legendre_panels(edges: Iterable[float], order: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the order-point rule on every panel [e_i, e_{i+1}]"""
    edges = np.asarray(list(edges), dtype=float)
    ref_x, ref_w = _reference_rule(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * ref_x[None, :]
    weights = half * ref_w[None, :]
    return nodes.ravel(), weights.ravel()


def clip_edges(edges: Iterable[float], lo: float, hi: float) -> np.ndarray:
    """Feature points inside (lo, hi) plus the interval ends"""
    inner = [e for e in edges if lo < e < hi]
    return np.unique(np.asarray([lo, *inner, hi], dtype=float))
