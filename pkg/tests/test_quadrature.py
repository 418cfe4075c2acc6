"""Panel Gauss-Legendre helpers: exactness and edge-grading properties."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from occufluct.quadrature import (gauss_panels, geometric_edges, graded_edges,
                                  leggauss, symmetric_heavy_edges)


def test_leggauss_cached_and_consistent():
    x1, w1 = leggauss(8)
    x2, w2 = leggauss(8)
    assert x1 is x2 and w1 is w2
    assert np.isclose(w1.sum(), 2.0)


@given(st.integers(min_value=1, max_value=15))
def test_polynomial_exactness(deg):
    # n-point Gauss is exact for degree <= 2n-1; use n=8 on [0, 3]
    x, w = gauss_panels([0.0, 1.2, 3.0], 8)
    approx = float(np.sum(w * x**deg))
    exact = 3.0 ** (deg + 1) / (deg + 1)
    assert abs(approx - exact) < 1e-10 * max(1.0, exact)


def test_panels_partition_total_weight():
    edges = np.array([0.0, 0.5, 0.7, 2.0])
    _, w = gauss_panels(edges, 5)
    assert np.isclose(w.sum(), 2.0)


def test_gaussian_integral_on_panels():
    x, w = gauss_panels(np.linspace(-10.0, 10.0, 21), 12)
    val = float(np.sum(w * np.exp(-0.5 * x**2)))
    assert abs(val - np.sqrt(2.0 * np.pi)) < 1e-12


def test_geometric_edges_bounds_and_monotone():
    e = geometric_edges(1e-3, 10.0, 12)
    assert len(e) == 13
    assert np.isclose(e[0], 1e-3) and np.isclose(e[-1], 10.0)
    assert np.all(np.diff(e) > 0)
    with pytest.raises(ValueError):
        geometric_edges(0.0, 1.0, 4)


def test_graded_edges_start_at_zero():
    e = graded_edges(2.0, 9, lo_frac=1e-5)
    assert e[0] == 0.0
    assert np.isclose(e[-1], 2.0)
    assert np.all(np.diff(e) > 0)


def test_graded_edges_resolve_endpoint_singularity():
    # int_0^1 s^(-1/2) ds = 2, integrable singularity at 0
    x, w = gauss_panels(graded_edges(1.0, 24, 1e-10), 10)
    assert abs(np.sum(w / np.sqrt(x)) - 2.0) < 1e-6


def test_symmetric_heavy_edges_symmetric():
    e = symmetric_heavy_edges(0.3, 50.0)
    assert np.allclose(e, -e[::-1])
    assert np.all(np.diff(e) > 0)
    # resolves a Cauchy-type integrand: int dx / (pi (1 + x^2)) ~ 1
    x, w = gauss_panels(e, 12)
    val = float(np.sum(w / (np.pi * (1.0 + x**2))))
    assert abs(val - (1.0 - 2.0 / np.pi * np.arctan(1.0 / 50.0))) < 1e-8
