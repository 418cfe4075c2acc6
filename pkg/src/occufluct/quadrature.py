"""Panel Gauss-Legendre helpers used by the deterministic integrators."""

from __future__ import annotations

import numpy as np

_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEGGAUSS_CACHE[n]


def gauss_panels(edges, n: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on the union of panels given by `edges`."""
    x, w = leggauss(n)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def geometric_edges(lo: float, hi: float, n_panels: int) -> np.ndarray:
    """Panel edges geometrically spaced from lo to hi (lo > 0)."""
    if lo <= 0:
        raise ValueError("geometric_edges needs lo > 0")
    return np.geomspace(lo, hi, n_panels + 1)


def graded_edges(hi: float, n_panels: int, lo_frac: float = 1e-4) -> np.ndarray:
    """Edges on [0, hi], geometrically refined toward 0."""
    inner = np.geomspace(hi * lo_frac, hi, n_panels)
    return np.concatenate(([0.0], inner))


def symmetric_heavy_edges(scale: float, vmax: float) -> np.ndarray:
    """Panel edges on [-vmax, vmax] resolving a unit-scale peak at 0 and a
    slowly decaying tail; used for integrals against heavy-tailed densities."""
    pos = scale * np.array([0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
    pos = pos[pos < vmax]
    tail = np.geomspace(max(8.0 * scale, 1e-3), vmax, 12)[1:]
    pos = np.unique(np.concatenate((pos, tail, [vmax])))
    return np.concatenate((-pos[::-1], [0.0], pos))
