import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grasstool.errors import DimensionMismatch, InadmissibleScale
from grasstool.grassmann import certify
from grasstool.operators import dagger, identity, op_norm, random_projection, trace_norm
from grasstool.retraction import (
    DyadicGrid,
    compression_D,
    dilate,
    dyadic_exponent,
    haar_matrix,
    haar_weak_dist,
    phi,
    restriction_R,
    retraction_Phi,
    weak_limit_scan,
    weak_observation,
)

seeds = st.integers(0, 2**32 - 1)


def ginibre(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def test_grid_basics():
    g = DyadicGrid(3)
    assert g.m == 8 and g.width == 0.125
    assert g.coarsen(2).m == 2 and g.refine(1).m == 16
    # the inner product carries the cell width, so 1 has unit norm
    assert g.norm(np.ones(8)) == pytest.approx(1.0)
    with pytest.raises(InadmissibleScale):
        g.coarsen(4)
    with pytest.raises(ValueError):
        DyadicGrid(-1)


@pytest.mark.parametrize("t, j", [(1.0, 0), (0.5, 1), (0.125, 3), (0.3, None), (0.0, None), (0.75, None)])
def test_dyadic_exponent(t, j):
    assert dyadic_exponent(t) == j


def test_restriction_partial_cell():
    R = restriction_R(DyadicGrid(2), 0.6)
    np.testing.assert_allclose(np.diag(R).real, [1, 1, 0.4, 0], atol=1e-15)


def test_compression_example():
    D = compression_D(DyadicGrid(2), 0.5)
    np.testing.assert_allclose(D.apply([1, 2, 3, 4]) * math.sqrt(2), [1, 1, 2, 2], atol=1e-14)


@pytest.mark.parametrize("level", [0, 3, 6])
def test_compression_matches_dilation(level):
    g = DyadicGrid(level)
    f = np.random.default_rng(level).standard_normal(g.m)
    for j in range(level + 1):
        t = 2.0**-j
        np.testing.assert_allclose(compression_D(g, t).apply(f), dilate(g, f, t, level), atol=1e-12)


@pytest.mark.parametrize("j", range(7))
def test_coisometry_exact(j):
    g = DyadicGrid(6)
    D = compression_D(g, 2.0**-j)
    M = D.matrix
    assert D.exact and D.target_cells == g.m >> j
    np.testing.assert_array_equal(M @ dagger(M), identity(D.target_cells))
    np.testing.assert_array_equal(dagger(M) @ M, restriction_R(g, 2.0**-j))


@pytest.mark.parametrize("t", [0.0, -0.1, 1.5, float("nan"), 0.3, 2.0**-7])
def test_compression_rejects(t):
    with pytest.raises(InadmissibleScale):
        compression_D(DyadicGrid(6), t)


@pytest.mark.parametrize("level", [4, 6, 8])
@pytest.mark.parametrize("t", [0.3, 0.55, 0.7, 0.99])
def test_approx_mode_within_10_over_m(level, t):
    g = DyadicGrid(level)
    D = compression_D(g, t, exact=False)
    M = D.matrix
    n = D.target_cells
    assert not D.exact and n == round(t * g.m)
    assert trace_norm(M @ dagger(M) - identity(n)) / n <= 10 / g.m
    assert trace_norm(dagger(M) @ M - restriction_R(g, t)) / g.m <= 10 / g.m
    rng = np.random.default_rng(level)
    A, B = ginibre(rng, n), ginibre(rng, n)
    err = trace_norm(phi(g, t, A @ B, exact=False) - phi(g, t, A, exact=False) @ phi(g, t, B, exact=False))
    assert err / g.m <= 10 / g.m * op_norm(A) * op_norm(B)


def test_phi_endpoints():
    g = DyadicGrid(3)
    A = ginibre(np.random.default_rng(0), 8)
    np.testing.assert_array_equal(phi(g, 1.0, A), A)
    np.testing.assert_array_equal(phi(g, 0.0, A), np.zeros((8, 8)))
    with pytest.raises(DimensionMismatch):
        phi(g, 0.5, A)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, 5))
def test_phi_is_star_homomorphism(seed, j):
    g = DyadicGrid(5)
    rng = np.random.default_rng(seed)
    n = g.m >> j
    A, B = ginibre(rng, n), ginibre(rng, n)
    t = 2.0**-j
    assert op_norm(phi(g, t, A @ B) - phi(g, t, A) @ phi(g, t, B)) < 1e-12 * op_norm(A) * op_norm(B) * g.m
    np.testing.assert_array_equal(phi(g, t, dagger(A)), dagger(phi(g, t, A)))
    # linearity
    np.testing.assert_allclose(phi(g, t, 2 * A + B), 2 * phi(g, t, A) + phi(g, t, B), atol=1e-12)


def test_retraction_endpoints_bit_exact():
    g = DyadicGrid(4)
    P = certify(random_projection(g.m, 3, 1))
    assert retraction_Phi(g, 0.0, P) is P
    end = retraction_Phi(g, 1.0, P)
    assert end.rank == 0
    np.testing.assert_array_equal(end.op, np.zeros((16, 16)))


@pytest.mark.parametrize("j", [1, 2, 3])
def test_retraction_ladder(j):
    g = DyadicGrid(3)
    P = certify(random_projection(g.m, 2, j))
    Q = retraction_Phi(g, 1.0 - 2.0**-j, P)
    assert Q.dim == g.m << j and Q.rank == 2


def test_retraction_rejects_off_ladder():
    g = DyadicGrid(3)
    P = certify(random_projection(8, 2, 0))
    with pytest.raises(InadmissibleScale):
        retraction_Phi(g, 0.3, P)
    with pytest.raises(DimensionMismatch):
        retraction_Phi(DyadicGrid(4), 0.5, P)


def test_haar_matrix_orthogonal():
    H = haar_matrix(DyadicGrid(5))
    np.testing.assert_allclose(H @ H.T, np.eye(32), atol=1e-13)


@pytest.mark.parametrize("j", range(4))
def test_weak_observation_matches_dense(j):
    # grids stay below the 64-function window, so nothing is truncated
    g = DyadicGrid(3)
    P = certify(random_projection(g.m, 2, 5))
    dense = retraction_Phi(g, 1.0 - 2.0**-j, P)
    fine = g.refine(j)
    H = haar_matrix(fine)
    np.testing.assert_allclose(weak_observation(g, 2.0**-j, P.op), H @ dense.op @ H.T, atol=1e-13)
    row = weak_limit_scan(g, P)[j]
    assert row.weak_dist == pytest.approx(haar_weak_dist(fine, dense.op, 0 * dense.op), abs=1e-14)


def test_scan_shape_and_monotonicity():
    g = DyadicGrid(6)
    P = certify(random_projection(g.m, 3, 2))
    rows = weak_limit_scan(g, P)
    assert [r.t for r in rows] == [1 - 2.0**-j for j in range(7)] + [1.0]
    traces = [r.trace for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(traces, traces[1:]))
    assert [r.rank for r in rows] == [3] * 7 + [0]
    dists = [r.weak_dist for r in rows]
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_scan_decay_rate_is_linear_in_s():
    # <1, Phi(1 - s, P) 1> = s <1, P 1> on the first cells, so the distance
    # halves at every rung once the leading entry dominates.
    g = DyadicGrid(8)
    P = certify(random_projection(g.m, 3, 7))
    d = [r.weak_dist for r in weak_limit_scan(g, P, include_endpoint=False)]
    ratios = np.array(d[4:]) / np.array(d[3:-1])
    np.testing.assert_allclose(ratios, 0.5, atol=0.05)


def test_dilate_strong_continuity():
    g = DyadicGrid(8)
    f = np.sin(2 * np.pi * g.midpoints())
    base = dilate(g, f, 0.5, 8)
    gaps = [np.linalg.norm(dilate(g, f, 0.5 + h, 8) - base) / 16 for h in (0.1, 0.01, 0.001)]
    assert gaps[0] > gaps[1] > gaps[2]
