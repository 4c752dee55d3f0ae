import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grasstool.errors import DimensionMismatch, NearSingular, NonFiniteError
from grasstool.operators import (
    Tolerances,
    WeakMetric,
    as_operator,
    dagger,
    dumps_operator,
    embed,
    identity,
    loads_operator,
    op_norm,
    polar_decompose,
    random_projection,
    random_unitary,
    trace_norm,
    weak_dist,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 9)


def ginibre(d, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def test_as_operator_rejects_bad_input():
    with pytest.raises(DimensionMismatch):
        as_operator(np.zeros((2, 3)))
    with pytest.raises(NonFiniteError):
        as_operator(np.array([[np.nan, 0], [0, 1]]))


def test_norms_on_diagonal():
    A = np.diag([3.0, -1.0, 0.5])
    assert op_norm(A) == pytest.approx(3.0)
    assert trace_norm(A) == pytest.approx(4.5)


@pytest.mark.parametrize("tol", [dict(algebraic=0), dict(spectral=-1), dict(rank_gap=1.0)])
def test_tolerances_validated(tol):
    with pytest.raises(ValueError):
        Tolerances(**tol)


def test_weak_metric_weights_and_decay():
    w = WeakMetric(6).weights
    np.testing.assert_array_equal(w, 2.0 ** -np.arange(1, 7))
    for k in range(1, 7):
        E = np.zeros((6, 6))
        E[k - 1, k - 1] = 1
        assert weak_dist(E, 0 * E) == 4.0**-k


def test_weak_dist_dimension_check():
    with pytest.raises(DimensionMismatch):
        weak_dist(np.eye(2), np.eye(3))


def test_weak_dist_below_norm():
    A = ginibre(7, 3)
    assert weak_dist(A, 0 * A) <= op_norm(A) * 0.5 + 1e-12


def test_polar_2x2_oracle():
    # A = U H with U a rotation and H diagonal positive
    c, s = math.cos(0.3), math.sin(0.3)
    U = np.array([[c, -s], [s, c]])
    H = np.diag([2.0, 0.5])
    U2, H2 = polar_decompose(U @ H)
    np.testing.assert_allclose(U2, U, atol=1e-13)
    np.testing.assert_allclose(H2, H, atol=1e-13)


def test_polar_rejects_singular():
    with pytest.raises(NearSingular):
        polar_decompose(np.diag([1.0, 1e-14]))


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_polar_properties(d, seed):
    A = ginibre(d, seed)
    U, H = polar_decompose(A)
    assert op_norm(dagger(U) @ U - identity(d)) < 1e-10
    assert op_norm(H - dagger(H)) < 1e-10
    assert np.linalg.eigvalsh(H).min() > 0
    assert op_norm(U @ H - A) < 1e-10 * max(1.0, op_norm(A))


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_random_unitary_reproducible(d, seed):
    U = random_unitary(d, seed)
    np.testing.assert_array_equal(U, random_unitary(d, seed))
    assert op_norm(dagger(U) @ U - identity(d)) < 1e-12


def test_haar_phases_are_uniform():
    # Phase normalisation makes the mean of U[0, 0] vanish on average.
    vals = np.array([random_unitary(3, s)[0, 0] for s in range(4000)])
    assert abs(vals.mean()) < 0.03
    assert np.mean(np.abs(vals) ** 2) == pytest.approx(1 / 3, abs=0.02)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.data())
def test_random_projection(d, data):
    n = data.draw(st.integers(0, d))
    P = random_projection(d, n, data.draw(seeds))
    assert op_norm(P @ P - P) < 1e-12
    assert op_norm(P - dagger(P)) < 1e-13
    assert np.trace(P).real == pytest.approx(n)


def test_embed():
    A = ginibre(2, 0)
    B = embed(A, 4)
    np.testing.assert_array_equal(B[:2, :2], A)
    assert not B[2:].any() and not B[:, 2:].any()
    with pytest.raises(DimensionMismatch):
        embed(np.eye(3), 2)


@settings(max_examples=30, deadline=None)
@given(dims, seeds)
def test_json_round_trip_exact(d, seed):
    A = ginibre(d, seed)
    np.testing.assert_array_equal(loads_operator(dumps_operator(A)), A)


def test_json_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        loads_operator('{"dim": 3, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}')
