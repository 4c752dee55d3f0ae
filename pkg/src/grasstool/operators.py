"""Dense complex operator kernel.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``; entry
``A[i, j]`` is the matrix element <e_i, A e_j> in a fixed orthonormal basis.
Everything here is a pure function of its inputs (seeds included).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from .errors import DimensionMismatch, NearSingular, NonFiniteError

__all__ = [
    "Tolerances",
    "WeakMetric",
    "as_operator",
    "dagger",
    "identity",
    "op_norm",
    "trace_norm",
    "singular_values",
    "weak_dist",
    "polar_decompose",
    "random_unitary",
    "random_projection",
    "embed",
    "operator_to_dict",
    "operator_from_dict",
    "dumps_operator",
    "loads_operator",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used when certifying identities."""

    algebraic: float = 1e-10
    spectral: float = 1e-8
    rank_gap: float = 0.5

    def __post_init__(self):
        for name in ("algebraic", "spectral", "rank_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be strictly positive")
        if not self.rank_gap < 1:
            raise ValueError("rank_gap must be < 1")

    def as_dict(self) -> dict[str, float]:
        return {"algebraic": self.algebraic, "spectral": self.spectral, "rank_gap": self.rank_gap}


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class WeakMetric:
    """Weighted entrywise metric with weights ``w_i = 2**-i`` (i = 1..dim).

    High-index entries are damped so strongly that a sequence which only
    moves mass to larger indices converges to zero in this metric while
    keeping unit operator norm.
    """

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("WeakMetric needs dim >= 1")

    @cached_property
    def weights(self) -> np.ndarray:
        return np.ldexp(1.0, -np.arange(1, self.dim + 1))


def as_operator(A: Any) -> np.ndarray:
    """Validate and coerce ``A`` into a square, finite complex matrix."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError("operator has non-finite entries")
    return A


def dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(A).T


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def singular_values(A) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(as_operator(A), compute_uv=False)


def op_norm(A) -> float:
    """Operator (spectral) norm: the largest singular value."""
    return float(singular_values(A)[0])


def trace_norm(A) -> float:
    """Schatten-1 norm: the sum of singular values."""
    return float(np.sum(singular_values(A)))


def weak_dist(A, B, metric: WeakMetric | None = None) -> float:
    """Weighted entrywise distance ``(sum_ij w_i^2 w_j^2 |(A-B)_ij|^2)^(1/2)``."""
    A = as_operator(A)
    B = as_operator(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    d = A.shape[0]
    metric = metric or WeakMetric(d)
    if metric.dim != d:
        raise DimensionMismatch(f"metric dim {metric.dim} does not match operator dim {d}")
    w = metric.weights
    return float(np.linalg.norm(w[:, None] * (A - B) * w[None, :]))


def polar_decompose(A, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Polar decomposition ``A = U H`` on the invertible branch.

    Returns the unitary factor ``U`` and ``H = (A* A)^(1/2)``.

    Raises
    ------
    NearSingular
        If the smallest singular value of ``A`` is at most ``tol.spectral``;
        the unitary factor is then not uniquely determined.
    """
    A = as_operator(A)
    W, s, Vh = np.linalg.svd(A)
    if s[-1] <= tol.spectral:
        raise NearSingular(f"smallest singular value {s[-1]:.3e} <= {tol.spectral:.1e}")
    U = W @ Vh
    H = dagger(Vh) @ (s[:, None] * Vh)
    H = 0.5 * (H + dagger(H))
    return U, H


def random_unitary(d: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR factorization of a complex Ginibre matrix."""
    if d < 1:
        raise ValueError("random_unitary needs d >= 1")
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    diag = np.diagonal(R)
    return Q * (diag / np.abs(diag))[None, :]


def random_projection(d: int, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """Rank-``n`` orthogonal projection ``U diag(1^n, 0^(d-n)) U*`` with Haar ``U``."""
    if not 0 <= n <= d:
        raise ValueError(f"rank {n} outside [0, {d}]")
    if n == 0:
        return np.zeros((d, d), dtype=complex)
    if n == d:
        return identity(d)
    Y = random_unitary(d, seed)[:, :n]
    P = Y @ dagger(Y)
    return 0.5 * (P + dagger(P))


def embed(A, D: int) -> np.ndarray:
    """Zero-pad ``A`` to the block operator ``A (+) 0`` of dimension ``D``."""
    A = as_operator(A)
    d = A.shape[0]
    if D < d:
        raise DimensionMismatch(f"cannot embed dim {d} into smaller dim {D}")
    out = np.zeros((D, D), dtype=complex)
    out[:d, :d] = A
    return out


def operator_to_dict(A) -> dict[str, Any]:
    A = as_operator(A)
    return {"dim": int(A.shape[0]), "re": A.real.tolist(), "im": A.imag.tolist()}


def operator_from_dict(data: dict[str, Any]) -> np.ndarray:
    re = np.asarray(data["re"], dtype=float)
    im = np.asarray(data["im"], dtype=float)
    A = as_operator(re + 1j * im)
    if A.shape[0] != int(data["dim"]):
        raise DimensionMismatch(f"declared dim {data['dim']} but matrix is {A.shape}")
    return A


def dumps_operator(A) -> str:
    # json writes the shortest repr of each float, which round-trips exactly.
    return json.dumps(operator_to_dict(A))


def loads_operator(text: str) -> np.ndarray:
    return operator_from_dict(json.loads(text))
