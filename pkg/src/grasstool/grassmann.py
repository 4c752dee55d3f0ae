"""Rank-n Grassmannian at finite truncation.

Certified projections, the neighbourhood ``O_0`` of a base projection, the
local section ``P -> U_P`` of the bundle ``U -> U P0 U*``, and geodesic paths
between equal-rank projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatch,
    NotAProjection,
    NotUnitary,
    OutsideNeighbourhood,
    RankAmbiguous,
    RankMismatch,
)
from .operators import (
    DEFAULT_TOL,
    Tolerances,
    as_operator,
    dagger,
    identity,
    op_norm,
    operator_from_dict,
    operator_to_dict,
    polar_decompose,
)

__all__ = [
    "GrassmannPoint",
    "Neighbourhood",
    "certify",
    "complement",
    "range_frame",
    "in_neighbourhood",
    "in_neighbourhood_entrywise",
    "build_A",
    "section",
    "bundle_projection",
    "connect",
    "principal_angles",
    "rank_separation",
    "sample_neighbourhood",
    "default_eps",
    "neighbourhood_deviation",
    "point_to_dict",
    "point_from_dict",
    "neighbourhood_to_dict",
    "neighbourhood_from_dict",
]


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    """An operator certified as an orthogonal projection of integer rank."""

    op: np.ndarray
    rank: int
    tol: Tolerances = DEFAULT_TOL
    _complement_of: GrassmannPoint | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.op.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.op if dtype is None else self.op.astype(dtype)


def certify(A, tol: Tolerances = DEFAULT_TOL) -> GrassmannPoint:
    """Check ``A* = A = A^2`` and integrality of the trace.

    Raises
    ------
    NotAProjection
        Self-adjointness, idempotence or the 0/1 spectrum fails.
    RankAmbiguous
        The trace is farther than ``tol.rank_gap`` from every integer.
    """
    A = as_operator(A)
    sa = op_norm(dagger(A) - A)
    if not sa < tol.algebraic:
        raise NotAProjection(f"not self-adjoint: ||A* - A|| = {sa:.3e}")
    idem = op_norm(A @ A - A)
    if not idem < tol.algebraic:
        raise NotAProjection(f"not idempotent: ||A^2 - A|| = {idem:.3e}")
    tr = float(np.trace(A).real)
    rank = int(round(tr))
    if abs(tr - rank) > tol.rank_gap:
        raise RankAmbiguous(f"trace {tr} is not near an integer")
    if not abs(tr - rank) < tol.algebraic:
        raise NotAProjection(f"trace {tr} deviates from rank {rank}")
    ev = np.linalg.eigvalsh(0.5 * (A + dagger(A)))
    if not np.all(np.minimum(np.abs(ev), np.abs(ev - 1.0)) < tol.spectral):
        raise NotAProjection("spectrum is not contained in {0, 1}")
    return GrassmannPoint(A, rank, tol)


def complement(P: GrassmannPoint) -> GrassmannPoint:
    """The reciprocal projection ``1 - P``; the complement of a complement is the original."""
    if P._complement_of is not None:
        return P._complement_of
    return GrassmannPoint(identity(P.dim) - P.op, P.dim - P.rank, P.tol, _complement_of=P)


def range_frame(P: GrassmannPoint) -> np.ndarray:
    """Orthonormal columns spanning ``Ran(P)``, taken from the spectral decomposition.

    Columns are ordered by descending eigenvalue with a lexicographic
    tie-break on the (phase-normalised) entries, so the frame is a
    deterministic function of ``P``.
    """
    if P.rank == 0:
        return np.zeros((P.dim, 0), dtype=complex)
    w, V = np.linalg.eigh(0.5 * (P.op + dagger(P.op)))
    w = w[-P.rank:]
    V = V[:, -P.rank:]
    pivot = np.argmax(np.abs(V) > np.abs(V).max(axis=0) * (1 - 1e-8), axis=0)
    phases = V[pivot, np.arange(V.shape[1])]
    V = V * (np.abs(phases) / phases)[None, :]
    keys = [
        (-round(float(w[c]), 8), tuple(np.round(np.concatenate([V[:, c].real, V[:, c].imag]), 12)))
        for c in range(V.shape[1])
    ]
    order = sorted(range(V.shape[1]), key=lambda c: keys[c])
    return V[:, order]


@dataclass(frozen=True, eq=False)
class Neighbourhood:
    """The set ``O_0`` of rank-k projections with ``||(P - P0) b_j|| < eps`` for a frame ``b`` of ``Ran(P0)``."""

    base: GrassmannPoint
    eps: float
    frame: np.ndarray

    def __post_init__(self):
        k = self.base.rank
        if k < 1:
            raise ValueError("neighbourhood base must have rank >= 1")
        if not math.sqrt(k) * self.eps < 1:
            raise ValueError(f"need sqrt(k) * eps < 1, got {math.sqrt(k) * self.eps}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        F = self.frame
        if F.shape != (self.base.dim, k):
            raise DimensionMismatch(f"frame shape {F.shape} does not match base ({self.base.dim}, {k})")
        if op_norm(dagger(F) @ F - np.eye(k)) >= self.base.tol.algebraic:
            raise ValueError("frame is not orthonormal")

    @classmethod
    def around(cls, base: GrassmannPoint, eps: float | None = None) -> Neighbourhood:
        """Neighbourhood with the default ``eps = 1/(2 sqrt(k))`` and the spectral frame."""
        if eps is None:
            eps = default_eps(base.rank)
        return cls(base, float(eps), range_frame(base))

    @property
    def k(self) -> int:
        return self.base.rank

    @property
    def c_k(self) -> float:
        """Lower bound ``sqrt(1 - k eps^2)`` on ``||P f|| / ||f||`` for ``f`` in ``Ran(P0)``."""
        return math.sqrt(1.0 - self.k * self.eps**2)

    def translate(self, V) -> Neighbourhood:
        """Transport the neighbourhood by the unitary ``V``: base ``V P0 V*`` and frame ``V b``."""
        V = as_operator(V)
        base = GrassmannPoint(V @ self.base.op @ dagger(V), self.base.rank, self.base.tol)
        return Neighbourhood(base, self.eps, V @ self.frame)


def default_eps(k: int) -> float:
    if k < 1:
        raise ValueError("neighbourhood base must have rank >= 1")
    return 1.0 / (2.0 * math.sqrt(k))


def _check_same_rank(P: GrassmannPoint, Q: GrassmannPoint) -> None:
    if P.dim != Q.dim:
        raise DimensionMismatch(f"dims differ: {P.dim} vs {Q.dim}")
    if P.rank != Q.rank:
        raise RankMismatch(f"ranks differ: {P.rank} vs {Q.rank}")


def neighbourhood_deviation(P: GrassmannPoint, N: Neighbourhood) -> float:
    """``max_j ||(P - P0) b_j||``."""
    _check_same_rank(P, N.base)
    return float(np.max(np.linalg.norm((P.op - N.base.op) @ N.frame, axis=0)))


def in_neighbourhood(P: GrassmannPoint, N: Neighbourhood) -> bool:
    return neighbourhood_deviation(P, N) < N.eps


def in_neighbourhood_entrywise(P: GrassmannPoint, N: Neighbourhood) -> bool:
    """Membership via ``max_ij |<b_i, (P - P0) b_j>| < eps``."""
    _check_same_rank(P, N.base)
    G = dagger(N.frame) @ (P.op - N.base.op) @ N.frame
    return bool(np.max(np.abs(G)) < N.eps)


def build_A(P: GrassmannPoint, P0: GrassmannPoint) -> np.ndarray:
    """``A_P = P P0 + (1 - P)(1 - P0)``."""
    if P.dim != P0.dim:
        raise DimensionMismatch(f"dims differ: {P.dim} vs {P0.dim}")
    one = identity(P.dim)
    return P.op @ P0.op + (one - P.op) @ (one - P0.op)


def section(P: GrassmannPoint, N: Neighbourhood, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Local section ``s(P) = U_P``, the unitary polar factor of ``A_P``.

    ``U_P P0 U_P* = P`` for every ``P`` in the neighbourhood.

    Raises
    ------
    OutsideNeighbourhood
        ``P`` fails the membership test of ``N``.
    NearSingular
        ``A_P`` is numerically singular.
    """
    if not in_neighbourhood(P, N):
        raise OutsideNeighbourhood(
            f"max_j ||(P - P0) b_j|| = {neighbourhood_deviation(P, N):.4f} >= eps = {N.eps:.4f}"
        )
    U, _ = polar_decompose(build_A(P, N.base), tol)
    return U


def bundle_projection(U, P0: GrassmannPoint) -> GrassmannPoint:
    """``pi(U) = U P0 U*``."""
    U = as_operator(U)
    if U.shape != P0.op.shape:
        raise DimensionMismatch(f"unitary shape {U.shape} does not match base {P0.op.shape}")
    defect = op_norm(dagger(U) @ U - identity(P0.dim))
    if not defect < P0.tol.algebraic:
        raise NotUnitary(f"||U*U - 1|| = {defect:.3e}")
    Q = U @ P0.op @ dagger(U)
    return certify(0.5 * (Q + dagger(Q)), P0.tol)


def principal_angles(P: GrassmannPoint, Q: GrassmannPoint) -> np.ndarray:
    """Principal angles between ``Ran(P)`` and ``Ran(Q)`` in ascending order."""
    _check_same_rank(P, Q)
    s = np.linalg.svd(dagger(range_frame(P)) @ range_frame(Q), compute_uv=False)
    return np.sort(np.arccos(np.clip(s, -1.0, 1.0)))


def _geodesic(P: GrassmannPoint, Q: GrassmannPoint):
    """Frames ``A``, ``W`` and angles with ``Y(tau) = A cos(theta tau) + W sin(theta tau)``."""
    Y0 = range_frame(P)
    Y1 = range_frame(Q)
    U, c, Vh = np.linalg.svd(dagger(Y0) @ Y1)
    c = np.clip(c, -1.0, 1.0)
    theta = np.arccos(c)
    A = Y0 @ U
    B = Y1 @ dagger(Vh)
    # Columns of B - A c are mutually orthogonal, orthogonal to A, with norms sin(theta).
    R = B - A * c[None, :]
    s = np.sin(theta)
    W = np.where(s[None, :] > 1e-12, R / np.where(s > 1e-12, s, 1.0)[None, :], 0.0)
    return A, W, theta


def connect(P: GrassmannPoint, Q: GrassmannPoint, steps: int) -> list[GrassmannPoint]:
    """Geodesic path of ``steps + 1`` certified projections from ``P`` to ``Q``.

    The path rotates ``Ran(P)`` onto ``Ran(Q)`` along the principal angles,
    so consecutive points differ in operator norm by at most
    ``max(theta) / steps <= pi / (2 steps)``. When ``||P - Q|| < 1`` the
    endpoint is cross-checked against the direct rotation ``U_Q`` obtained
    from the local section around ``P``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    _check_same_rank(P, Q)
    tol = P.tol
    if P.rank == 0 or P.rank == P.dim:
        return [P] * steps + [Q]
    A, W, theta = _geodesic(P, Q)
    path = [P]
    for i in range(1, steps):
        tau = i / steps
        Y = A * np.cos(theta * tau)[None, :] + W * np.sin(theta * tau)[None, :]
        Y, _ = np.linalg.qr(Y)
        M = Y @ dagger(Y)
        path.append(certify(0.5 * (M + dagger(M)), tol))
    end = A * np.cos(theta)[None, :] + W * np.sin(theta)[None, :]
    end_gap = op_norm(end @ dagger(end) - Q.op)
    if end_gap > 1e3 * tol.algebraic:
        raise ArithmeticError(f"geodesic misses its endpoint by {end_gap:.3e}")
    if op_norm(P.op - Q.op) < 1.0:
        U, _ = polar_decompose(build_A(Q, P), tol)
        rotated = U @ P.op @ dagger(U)
        if op_norm(rotated - end @ dagger(end)) > 1e3 * tol.algebraic:
            raise ArithmeticError("direct rotation and geodesic disagree on the endpoint")
    path.append(Q)
    return path


def rank_separation(P: GrassmannPoint, Q: GrassmannPoint) -> float:
    """``||P - Q||``; at least 1 whenever the ranks differ."""
    if P.dim != Q.dim:
        raise DimensionMismatch(f"dims differ: {P.dim} vs {Q.dim}")
    return op_norm(P.op - Q.op)


def _random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = 0.5 * (Z + dagger(Z))
    return H / op_norm(H)


def sample_neighbourhood(
    N: Neighbourhood, count: int, seed: int, max_tries: int = 100_000
) -> Iterator[GrassmannPoint]:
    """Draw ``count`` points of ``O_0`` by rejection from random unitary tilts of the base.

    Tilts ``exp(i a H)`` with ``||H|| = 1`` and ``a`` uniform on ``(0, 2 eps)``
    cover the neighbourhood up to its boundary.
    """
    rng = np.random.default_rng(seed)
    produced = 0
    for _ in range(max_tries):
        if produced == count:
            return
        H = _random_hermitian(N.base.dim, rng)
        a = rng.uniform(0.0, 2.0 * N.eps)
        V = expm(1j * a * H)
        M = V @ N.base.op @ dagger(V)
        P = certify(0.5 * (M + dagger(M)), N.base.tol)
        if in_neighbourhood(P, N):
            produced += 1
            yield P
    raise RuntimeError(f"rejection sampler produced only {produced} of {count} points")


def point_to_dict(P: GrassmannPoint) -> dict[str, Any]:
    return {**operator_to_dict(P.op), "rank": P.rank}


def point_from_dict(data: dict[str, Any], tol: Tolerances = DEFAULT_TOL) -> GrassmannPoint:
    P = certify(operator_from_dict(data), tol)
    if "rank" in data and int(data["rank"]) != P.rank:
        raise RankMismatch(f"declared rank {data['rank']} but trace gives {P.rank}")
    return P


def neighbourhood_to_dict(N: Neighbourhood) -> dict[str, Any]:
    return {"base": point_to_dict(N.base), "eps": N.eps}


def neighbourhood_from_dict(data: dict[str, Any], tol: Tolerances = DEFAULT_TOL) -> Neighbourhood:
    return Neighbourhood.around(point_from_dict(data["base"], tol), float(data["eps"]))

