"""Normalised trace states of finite-rank projections and their continuity certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DimensionMismatch, RankMismatch, RankZero
from .grassmann import GrassmannPoint, certify
from .operators import as_operator, dagger, identity, op_norm, trace_norm

__all__ = [
    "TraceState",
    "UnitaryDecomposition",
    "state_eval",
    "four_unitaries",
    "ContinuityCertificate",
    "continuity_certificate",
    "rotate_toward",
    "continuity_scan",
]


@dataclass(frozen=True)
class TraceState:
    """``omega(A) = Tr(P A) / Tr(P)`` for a projection of rank at least one."""

    projection: GrassmannPoint

    def __post_init__(self):
        if self.projection.rank < 1:
            raise RankZero("the null projection carries no state")

    def __call__(self, A) -> complex:
        return state_eval(self, A)


def state_eval(s: TraceState, A) -> complex:
    P = s.projection.op
    A = as_operator(A)
    if A.shape != P.shape:
        raise DimensionMismatch(f"operator shape {A.shape} does not match state dim {P.shape[0]}")
    # Tr(P A) without forming the product
    return complex(np.sum(P.T * A) / np.trace(P).real)


@dataclass(frozen=True)
class UnitaryDecomposition:
    """``A = sum_j a_j U_j`` with at most four unitary terms."""

    terms: list[tuple[complex, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.terms)

    def reconstruct(self, dim: int) -> np.ndarray:
        out = np.zeros((dim, dim), dtype=complex)
        for a, U in self.terms:
            out += a * U
        return out


def _unitary_pair(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``X = (U+ + U-)/2`` with ``U+- = X +- i sqrt(1 - X^2)`` for a self-adjoint contraction."""
    lam, V = np.linalg.eigh(0.5 * (X + dagger(X)))
    lam = np.clip(lam, -1.0, 1.0)
    root = np.sqrt(np.clip(1.0 - lam**2, 0.0, 1.0))
    Vh = dagger(V)
    U_plus = (V * (lam + 1j * root)[None, :]) @ Vh
    U_minus = (V * (lam - 1j * root)[None, :]) @ Vh
    return U_plus, U_minus


def four_unitaries(A) -> UnitaryDecomposition:
    """Write ``A`` as a combination of at most four unitaries with ``|a_j| = ||A||/2``.

    The real and imaginary parts of ``A/||A||`` are self-adjoint
    contractions, and each is the mean of two unitaries. A part that
    vanishes exactly contributes no terms; a multiple of a unitary is
    returned as two equal terms so the coefficient bound still holds.
    """
    A = as_operator(A)
    d = A.shape[0]
    norm = op_norm(A)
    if norm == 0.0:
        return UnitaryDecomposition([])
    X = A / norm
    half = norm / 2
    if op_norm(dagger(X) @ X - identity(d)) < 1e-12:
        return UnitaryDecomposition([(complex(half), X), (complex(half), X)])
    re = 0.5 * (X + dagger(X))
    im = -0.5j * (X - dagger(X))
    terms = []
    for coeff, part in ((half, re), (1j * half, im)):
        if not np.any(part):
            continue
        U_plus, U_minus = _unitary_pair(part)
        terms.append((complex(coeff), U_plus))
        terms.append((complex(coeff), U_minus))
    return UnitaryDecomposition(terms)


@dataclass(frozen=True)
class ContinuityCertificate:
    lhs: float
    bound: float
    term_bounds: list[float]
    coefficients: list[complex]
    trace_dist: float
    op_dist: float
    rank: int
    slack: float = 1e-9

    @property
    def verdict(self) -> bool:
        return self.lhs <= self.bound + self.slack

    def as_dict(self) -> dict[str, Any]:
        return {
            "lhs": self.lhs,
            "bound": self.bound,
            "term_bounds": self.term_bounds,
            "coefficients": [[c.real, c.imag] for c in self.coefficients],
            "trace_norm_gap": self.trace_dist,
            "op_norm_gap": self.op_dist,
            "rank": self.rank,
            "verdict": self.verdict,
        }


def continuity_certificate(P: GrassmannPoint, Q: GrassmannPoint, A) -> ContinuityCertificate:
    """Bound ``|omega_P(A) - omega_Q(A)|`` through the four-unitary decomposition of ``A``.

    Each unitary term obeys ``|omega_P(U) - omega_Q(U)| <= ||(P - Q) U||_1 / M``,
    so the total is at most ``(1/M) sum_j |a_j| ||(P - Q) U_j||_1``.
    """
    if P.dim != Q.dim:
        raise DimensionMismatch(f"dims differ: {P.dim} vs {Q.dim}")
    if P.rank != Q.rank:
        raise RankMismatch(f"ranks differ: {P.rank} vs {Q.rank}")
    if P.rank < 1:
        raise RankZero("the null projection carries no state")
    A = as_operator(A)
    M = P.rank
    lhs = abs(state_eval(TraceState(P), A) - state_eval(TraceState(Q), A))
    diff = P.op - Q.op
    dec = four_unitaries(A)
    term_bounds = [abs(a) * trace_norm(diff @ U) / M for a, U in dec.terms]
    return ContinuityCertificate(
        lhs=float(lhs),
        bound=math.fsum(term_bounds),
        term_bounds=term_bounds,
        coefficients=[a for a, _ in dec.terms],
        trace_dist=trace_norm(diff),
        op_dist=op_norm(diff),
        rank=M,
    )


def rotate_toward(P: GrassmannPoint, gap: float, seed: int) -> GrassmannPoint:
    """A projection ``Q`` of the same rank with ``||P - Q|| = gap``.

    One range vector ``b`` of ``P`` is turned by the angle ``asin(gap)``
    toward a random unit vector ``c`` orthogonal to ``Ran(P)``.
    """
    if not 0 <= gap <= 1:
        raise ValueError("gap must lie in [0, 1]")
    if P.rank < 1 or P.rank == P.dim:
        raise ValueError("need 0 < rank < dim to rotate")
    rng = np.random.default_rng(seed)
    one = identity(P.dim)

    def unit_in(proj):
        v = proj @ (rng.standard_normal(P.dim) + 1j * rng.standard_normal(P.dim))
        return v / np.linalg.norm(v)

    b = unit_in(P.op)
    c = unit_in(one - P.op)
    theta = math.asin(gap)
    b2 = math.cos(theta) * b + math.sin(theta) * c
    Q = P.op - np.outer(b, b.conj()) + np.outer(b2, b2.conj())
    return certify(0.5 * (Q + dagger(Q)), P.tol)


def continuity_scan(P: GrassmannPoint, A, ks, seed: int) -> list[dict[str, float]]:
    """Certificates along ``Q_k -> P`` with ``||Q_k - P|| = 2**-k``."""
    rows = []
    for k in ks:
        Q = rotate_toward(P, math.ldexp(1.0, -k), seed)
        cert = continuity_certificate(P, Q, A)
        rows.append(
            {
                "k": int(k),
                "op_norm_gap": cert.op_dist,
                "trace_norm_gap": cert.trace_dist,
                "lhs": cert.lhs,
                "bound": cert.bound,
                "verdict": cert.verdict,
            }
        )
    return rows
