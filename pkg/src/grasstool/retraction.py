"""Compression retraction of finite-rank projections on a dyadic model of L^2([0, 1]).

Grid functions are piecewise constant on ``m = 2**J`` cells. Operators on a
grid are matrices in the orthonormal basis of normalised cell indicators
``sqrt(m) chi_c``; because every cell has the same width this is also the
matrix acting on raw cell values.

The compression ``D_t = sigma_t pi_t`` with ``(sigma_t f)(x) = sqrt(t) f(t x)``
sends a level-J function to a level-(J - j) function when ``t = 2**-j``: in
cell coordinates it keeps the first ``t m`` cells. As a map between the two
grids it is a co-isometry, ``D D* = 1`` on the coarse grid and
``D* D = R_t`` on the fine grid, so ``phi_t(A) = D* A D`` is an exact
*-homomorphism from operators on the coarse grid into operators on the
fine grid. No single m x m matrix can satisfy both identities (the two
products would have equal rank), which is why ``phi_t`` changes grids.

Weak closeness is measured against a fixed orthonormal basis of L^2([0, 1]),
the Haar basis ordered coarse to fine, so the same test functions are used
whatever grid an operator lives on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, InadmissibleScale
from .grassmann import GrassmannPoint, certify
from .operators import WeakMetric, as_operator, dagger

__all__ = [
    "DyadicGrid",
    "CompressionOperator",
    "dyadic_exponent",
    "restriction_R",
    "compression_D",
    "phi",
    "retraction_Phi",
    "haar_matrix",
    "haar_weak_dist",
    "haar_values",
    "weak_observation",
    "weak_limit_scan",
    "ScanRow",
    "dilate",
    "MAX_DENSE_DIM",
]

# Largest dense operator retraction_Phi will materialise.
MAX_DENSE_DIM = 4096

# Haar test functions beyond this index carry weight below 2**-64.
_HAAR_WINDOW = 64


@dataclass(frozen=True)
class DyadicGrid:
    """Uniform partition of [0, 1] into ``2**level`` cells."""

    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("grid level must be >= 0")

    @property
    def m(self) -> int:
        return 1 << self.level

    @property
    def width(self) -> float:
        return math.ldexp(1.0, -self.level)

    def coarsen(self, j: int) -> DyadicGrid:
        if j > self.level:
            raise InadmissibleScale(f"cannot coarsen level {self.level} by {j}")
        return DyadicGrid(self.level - j)

    def refine(self, j: int) -> DyadicGrid:
        return DyadicGrid(self.level + j)

    def inner(self, f, g) -> complex:
        """``<f, g> = (1/m) sum conj(f_i) g_i`` on cell values."""
        f = np.asarray(f, dtype=complex)
        g = np.asarray(g, dtype=complex)
        return complex(np.vdot(f, g) / self.m)

    def norm(self, f) -> float:
        return math.sqrt(max(self.inner(f, f).real, 0.0))

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * self.width


def dyadic_exponent(t: float) -> int | None:
    """``j`` with ``t == 2**-j`` exactly, or ``None``."""
    if not 0 < t <= 1:
        return None
    mant, exp = math.frexp(t)
    return 1 - exp if mant == 0.5 else None


def _check_unit(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0 or math.isnan(t):
        raise InadmissibleScale(f"t = {t} outside [0, 1]")
    return t


def restriction_R(grid: DyadicGrid, t: float) -> np.ndarray:
    """Multiplication by the indicator of [0, t], compressed to the grid.

    Exact projection when ``t`` is cell aligned; a partially covered cell
    gets its covered fraction on the diagonal.
    """
    t = _check_unit(t)
    m = grid.m
    lo = np.arange(m) / m
    frac = np.clip((t - lo) * m, 0.0, 1.0)
    return np.diag(frac).astype(complex)


@dataclass(frozen=True)
class CompressionOperator:
    """``D_t`` from ``grid`` (level J) onto a coarser target grid.

    ``matrix`` has shape ``(target_cells, grid.m)`` in orthonormal cell
    coordinates. In exact mode (``t = 2**-j``) the target is the level
    ``J - j`` grid and ``matrix = [1 | 0]``. Otherwise ``t`` is snapped to
    the cell-aligned scale ``k/m`` with ``k = round(t m)``, whose dilation
    maps fine cell ``i`` onto target cell ``i`` of a ``k``-cell grid; the
    co-isometry identities then hold exactly for ``k/m`` and ``D* D``
    differs from ``R_t`` on one partial cell only, an O(1/m) error in
    normalised trace norm.
    """

    grid: DyadicGrid
    t: float
    matrix: np.ndarray
    exact: bool

    @property
    def target_cells(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def grid_matrix(self) -> np.ndarray:
        """``D_t`` as an m x m map on the fine grid: the output function re-sampled on the fine cells."""
        n, m = self.matrix.shape
        up = _upsample(n, m)
        return up @ self.matrix

    def apply(self, f) -> np.ndarray:
        """Cell values of ``(sigma_t pi_t f)`` on the fine grid."""
        f = np.asarray(f, dtype=complex)
        if f.shape != (self.grid.m,):
            raise DimensionMismatch(f"expected {self.grid.m} cell values, got {f.shape}")
        return self.grid_matrix @ f


def _upsample(n: int, m: int) -> np.ndarray:
    """Isometric inclusion of functions on ``n`` uniform cells into ``m`` uniform cells (orthonormal coords)."""
    if n == m:
        return np.eye(m, dtype=complex)
    M = np.zeros((m, n), dtype=complex)
    fine = np.arange(m)
    for i in range(n):
        lo, hi = i / n, (i + 1) / n
        ov = np.clip(np.minimum((fine + 1) / m, hi) - np.maximum(fine / m, lo), 0.0, None)
        M[:, i] = ov * math.sqrt(m * n)
    return M


def compression_D(grid: DyadicGrid, t: float, exact: bool = True) -> CompressionOperator:
    """Build ``D_t = sigma_t pi_t`` on ``grid``.

    Raises
    ------
    InadmissibleScale
        ``t <= 0``, ``t > 1``, or (exact mode) ``t`` is not ``2**-j`` with ``j <= J``.
    """
    t = _check_unit(t)
    if t == 0.0:
        raise InadmissibleScale("D_t is undefined at t = 0")
    m = grid.m
    j = dyadic_exponent(t)
    if j is not None and j <= grid.level:
        n = m >> j
        M = np.zeros((n, m), dtype=complex)
        M[:, :n] = np.eye(n)
        return CompressionOperator(grid, t, M, True)
    if exact:
        raise InadmissibleScale(f"t = {t} is not 2**-j with j <= {grid.level}")
    n = max(1, int(round(t * m)))
    M = np.zeros((n, m), dtype=complex)
    M[:, :n] = np.eye(n)
    return CompressionOperator(grid, t, M, False)


def phi(grid: DyadicGrid, t: float, A, exact: bool = True) -> np.ndarray:
    """``phi_t(A) = D_t* A D_t``.

    ``grid`` is the grid the result acts on; ``A`` acts on the target grid of
    ``D_t`` (``2**-j m`` cells in exact mode). ``phi_0`` is the zero map.
    """
    t = _check_unit(t)
    A = as_operator(A)
    if t == 0.0:
        return np.zeros((grid.m, grid.m), dtype=complex)
    D = compression_D(grid, t, exact=exact)
    if A.shape[0] != D.target_cells:
        raise DimensionMismatch(
            f"phi_{t} on a {grid.m}-cell grid takes operators on {D.target_cells} cells, got {A.shape[0]}"
        )
    if D.exact:
        n = D.target_cells
        out = np.zeros((grid.m, grid.m), dtype=complex)
        out[:n, :n] = A
        return out
    M = D.matrix
    return dagger(M) @ A @ M


def _ladder_exponent(t: float) -> int:
    """``j`` with ``1 - t == 2**-j``; raises for other t in (0, 1)."""
    j = dyadic_exponent(1.0 - t)
    if j is None:
        raise InadmissibleScale(f"1 - t = {1.0 - t} is not a dyadic scale 2**-j")
    return j


def retraction_Phi(grid: DyadicGrid, t: float, P: GrassmannPoint) -> GrassmannPoint:
    """``Phi(t, P) = phi_{1-t}(P)`` for a projection ``P`` on ``grid``.

    For ``1 - t = 2**-j`` the result is a certified projection on the grid
    refined ``j`` times (``2**j m`` cells). ``Phi(0, P)`` is ``P`` itself and
    ``Phi(1, P)`` is the zero operator on ``grid``.
    """
    t = _check_unit(t)
    if P.dim != grid.m:
        raise DimensionMismatch(f"P has dim {P.dim}, grid has {grid.m} cells")
    if t == 0.0:
        return P
    if t == 1.0:
        return GrassmannPoint(np.zeros((grid.m, grid.m), dtype=complex), 0, P.tol)
    j = _ladder_exponent(t)
    fine = grid.refine(j)
    if fine.m > MAX_DENSE_DIM:
        raise MemoryError(f"Phi({t}, P) lives on {fine.m} cells; use weak_observation instead")
    return certify(phi(fine, 1.0 - t, P.op), P.tol)


# Haar basis ------------------------------------------------------------------


def _haar_index(a: int) -> tuple[int, int]:
    """(scale l, shift k) of the 1-based Haar index ``a >= 2``; ``a = 2**l + k + 1``."""
    l = (a - 1).bit_length() - 1
    return l, a - 1 - (1 << l)


def haar_values(a: int, x) -> np.ndarray:
    """Values of the ``a``-th orthonormal Haar function (1-based, ``a = 1`` constant) at points ``x``."""
    x = np.asarray(x, dtype=float)
    if a == 1:
        return np.ones_like(x)
    l, k = _haar_index(a)
    y = x * (1 << l) - k
    amp = math.sqrt(1 << l)
    return np.where((y >= 0) & (y < 0.5), amp, np.where((y >= 0.5) & (y < 1), -amp, 0.0))


def haar_matrix(grid: DyadicGrid) -> np.ndarray:
    """Real orthogonal change of basis from cell coordinates to Haar coordinates.

    Row ``a - 1`` holds the orthonormal cell coefficients of the ``a``-th
    Haar function; the first ``2**L`` rows span every coarser grid ``L``.
    """
    x = grid.midpoints()
    scale = math.sqrt(grid.width)
    return np.stack([haar_values(a, x) * scale for a in range(1, grid.m + 1)])


def haar_weak_dist(grid: DyadicGrid, A, B, metric: WeakMetric | None = None) -> float:
    """Weak distance of grid operators measured in Haar coordinates."""
    A = as_operator(A)
    B = as_operator(B)
    if A.shape != (grid.m, grid.m) or B.shape != A.shape:
        raise DimensionMismatch("operators must act on the grid")
    H = haar_matrix(grid)
    X = H @ (A - B) @ H.T
    w = (metric or WeakMetric(grid.m)).weights
    if w.shape[0] != grid.m:
        raise DimensionMismatch("metric dim must equal the number of cells")
    return float(np.linalg.norm(w[:, None] * X * w[None, :]))


def weak_observation(grid: DyadicGrid, s: float, P) -> np.ndarray:
    """Haar-basis matrix elements ``<h_a, phi_s(P) h_b>`` for the leading test functions.

    ``P`` acts on ``grid`` and ``s = 2**-j``; ``phi_s(P)`` would live on
    ``2**j m`` cells but only ``D_s h_a`` restricted to ``grid`` is needed:
    ``<h_a, D* P D h_b> = <D h_a, P D h_b>``. Haar functions finer than
    the refined grid are orthogonal to ``phi_s(P)`` and are skipped.
    """
    P = as_operator(P)
    if P.shape[0] != grid.m:
        raise DimensionMismatch("P must act on the grid")
    if s == 0.0:
        return np.zeros((1, 1), dtype=complex)
    j = dyadic_exponent(s)
    if j is None:
        raise InadmissibleScale(f"s = {s} is not 2**-j")
    fine = grid.refine(j)
    K = min(fine.m, _HAAR_WINDOW)
    # Orthonormal coefficients of h_a on the first m cells of the fine grid,
    # which D maps one-to-one onto the cells of ``grid``.
    x = (np.arange(grid.m) + 0.5) * fine.width
    Dh = np.stack([haar_values(a, x) for a in range(1, K + 1)], axis=1) * math.sqrt(fine.width)
    return dagger(Dh) @ P @ Dh


def _weighted(G: np.ndarray) -> float:
    w = WeakMetric(G.shape[0]).weights
    return float(np.linalg.norm(w[:, None] * G * w[None, :]))


@dataclass(frozen=True)
class ScanRow:
    t: float
    weak_dist: float
    trace: float
    rank: int


def weak_limit_scan(grid: DyadicGrid, P: GrassmannPoint, include_endpoint: bool = True) -> list[ScanRow]:
    """Weak distance of ``Phi(t, P)`` from 0 along ``t = 1 - 2**-j``, j = 0..J.

    Distances use weights ``2**-a`` on the Haar basis; entries past the
    64th test function are dropped (their weight is below ``2**-64``). The
    trace of ``Phi(t, P)`` equals ``trace(D* P D) = trace(P)`` because ``D``
    is a co-isometry, and drops to 0 only at ``t = 1``.
    """
    if P.dim != grid.m:
        raise DimensionMismatch(f"P has dim {P.dim}, grid has {grid.m} cells")
    rows = []
    for j in range(grid.level + 1):
        s = math.ldexp(1.0, -j)
        G = weak_observation(grid, s, P.op)
        rows.append(ScanRow(1.0 - s, _weighted(G), float(np.trace(P.op).real), P.rank))
    if include_endpoint:
        rows.append(ScanRow(1.0, 0.0, 0.0, 0))
    return rows


def dilate(grid: DyadicGrid, f, t: float, level: int) -> np.ndarray:
    """Cell averages of ``sqrt(t) f(t x)`` on a grid of ``2**level`` cells.

    Used to compare ``D_t f`` for different ``t`` as functions on [0, 1].
    """
    f = np.asarray(f, dtype=complex)
    if f.shape != (grid.m,):
        raise DimensionMismatch("f must be given by its cell values on the grid")
    t = _check_unit(t)
    if t == 0.0:
        raise InadmissibleScale("dilation undefined at t = 0")
    n = 1 << level
    out = np.zeros(n, dtype=complex)
    edges = np.arange(grid.m + 1) / grid.m
    for i in range(n):
        lo, hi = t * i / n, t * (i + 1) / n
        ov = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        out[i] = math.sqrt(t) * np.dot(ov, f) / (hi - lo)
    return out
