"""First Chern numbers of projection families over closed meshed surfaces.

The number is the total lattice Berry flux: for every oriented plaquette the
frames at its corners are chained by overlap matrices ``Y_a* Y_b`` and the
phase of the determinant of the loop product is the flux through it.

Sign convention: plaquettes are oriented by the outward normal (S^2) or by
the standard ``(theta_1, theta_2)`` order (T^2), and the flux of a loop is
``-Arg det(prod Y_a* Y_b)``, the Berry phase. Under this convention the
monopole family ``(1 + x.sigma)/2`` has ``c1 = -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import CoarseMesh, DimensionMismatch, RankMismatch, SingularOverlap
from .grassmann import GrassmannPoint, certify, range_frame
from .operators import DEFAULT_TOL, Tolerances, dagger, embed, operator_from_dict, operator_to_dict

__all__ = [
    "MeshKind",
    "ParameterMesh",
    "ProjectionFamily",
    "ChernReport",
    "PAULI",
    "cubed_sphere",
    "torus",
    "frame_of",
    "plaquette_phases",
    "chern_report",
    "chern_number",
    "constant_family",
    "monopole_family",
    "qwz_family",
    "complement_family",
    "perturb_family",
    "random_gauge",
    "family_to_dict",
    "family_from_dict",
]

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# Guards: fail loudly on under-resolved families instead of rounding garbage.
MAX_PLAQUETTE_PHASE = 0.95 * math.pi
INTEGRALITY_SLACK = 0.05
MIN_OVERLAP_DET = 1e-8


class MeshKind(str, Enum):
    S2_CUBED = "S2_CUBED"
    TORUS2 = "TORUS2"


@dataclass(frozen=True, eq=False)
class ParameterMesh:
    kind: MeshKind
    resolution: int
    vertices: np.ndarray  # (V, 3) unit vectors or (V, 2) angle pairs
    plaquettes: np.ndarray  # (F, 4) vertex indices, positively oriented

    def edge_multiset(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for quad in self.plaquettes:
            for a, b in zip(quad, np.roll(quad, -1)):
                counts[(int(a), int(b))] = counts.get((int(a), int(b)), 0) + 1
        return counts

    def is_closed(self) -> bool:
        """Every directed edge occurs once and its reverse occurs once."""
        counts = self.edge_multiset()
        return all(c == 1 and counts.get((b, a)) == 1 for (a, b), c in counts.items())


# (normal, u-axis, v-axis) with u x v = normal
_CUBE_FACES = (
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
)


def cubed_sphere(r: int) -> ParameterMesh:
    """Equiangular cubed sphere: 6 faces of ``r x r`` quadrilaterals, outward oriented."""
    if r < 1:
        raise ValueError("resolution must be >= 1")
    index: dict[tuple[int, int, int], int] = {}
    keys: list[tuple[int, int, int]] = []
    quads = []
    for n, u, v in _CUBE_FACES:
        n, u, v = np.array(n), np.array(u), np.array(v)
        ids = np.empty((r + 1, r + 1), dtype=int)
        for i in range(r + 1):
            for k in range(r + 1):
                # integer lattice point on the cube of half-width r, shared exactly by adjacent faces
                key = tuple(int(c) for c in n * r + (2 * i - r) * u + (2 * k - r) * v)
                if key not in index:
                    index[key] = len(keys)
                    keys.append(key)
                ids[i, k] = index[key]
        for i in range(r):
            for k in range(r):
                quads.append((ids[i, k], ids[i + 1, k], ids[i + 1, k + 1], ids[i, k + 1]))
    lattice = np.array(keys, dtype=float)
    cube = np.tan(0.25 * math.pi * lattice / r)
    verts = cube / np.linalg.norm(cube, axis=1, keepdims=True)
    return ParameterMesh(MeshKind.S2_CUBED, r, verts, np.array(quads, dtype=int))


def torus(r: int) -> ParameterMesh:
    """Periodic ``r x r`` grid of angle pairs on ``[0, 2 pi)^2``."""
    if r < 1:
        raise ValueError("resolution must be >= 1")
    ang = 2 * math.pi * np.arange(r) / r
    verts = np.array([(a, b) for a in ang for b in ang])
    idx = lambda i, k: (i % r) * r + (k % r)  # noqa: E731
    quads = [(idx(i, k), idx(i + 1, k), idx(i + 1, k + 1), idx(i, k + 1)) for i in range(r) for k in range(r)]
    return ParameterMesh(MeshKind.TORUS2, r, verts, np.array(quads, dtype=int))


def make_mesh(kind: MeshKind | str, r: int) -> ParameterMesh:
    kind = MeshKind(kind)
    return cubed_sphere(r) if kind is MeshKind.S2_CUBED else torus(r)


@dataclass(frozen=True, eq=False)
class ProjectionFamily:
    """A rank-n projection attached to every mesh vertex."""

    mesh: ParameterMesh
    rank: int
    points: Sequence[GrassmannPoint] = field(repr=False)

    def __post_init__(self):
        if len(self.points) != len(self.mesh.vertices):
            raise DimensionMismatch(f"{len(self.points)} points for {len(self.mesh.vertices)} vertices")
        dims = {p.dim for p in self.points}
        if len(dims) != 1:
            raise DimensionMismatch(f"points have mixed dims {sorted(dims)}")
        if any(p.rank != self.rank for p in self.points):
            raise RankMismatch(f"every point must have rank {self.rank}")

    @property
    def dim(self) -> int:
        return self.points[0].dim


@dataclass(frozen=True)
class ChernReport:
    c1: int
    raw: float
    residual: float
    max_plaquette_phase: float

    def as_dict(self) -> dict[str, Any]:
        return {"c1": self.c1, "residual": self.residual, "max_plaquette_phase": self.max_plaquette_phase}


def frame_of(P: GrassmannPoint) -> np.ndarray:
    """Orthonormal ``d x n`` frame of ``Ran(P)`` (any gauge)."""
    return range_frame(P)


def plaquette_phases(F: ProjectionFamily, frames: np.ndarray | None = None) -> np.ndarray:
    """Berry flux through each plaquette, in ``(-pi, pi]``.

    Raises
    ------
    SingularOverlap
        Some edge overlap ``det(Y_a* Y_b)`` has modulus below ``1e-8``.
    """
    if frames is None:
        frames = np.stack([frame_of(p) for p in F.points])
    Q = F.mesh.plaquettes
    Y = frames[Q]  # (F, 4, d, n)
    Yn = frames[np.roll(Q, -1, axis=1)]
    M = np.einsum("fcia,fcib->fcab", np.conj(Y), Yn)  # edge overlaps (F, 4, n, n)
    dets = np.linalg.det(M)
    worst = float(np.min(np.abs(dets)))
    if worst < MIN_OVERLAP_DET:
        raise SingularOverlap(f"edge overlap determinant {worst:.2e} below {MIN_OVERLAP_DET:.0e}")
    loop = M[:, 0] @ M[:, 1] @ M[:, 2] @ M[:, 3]
    ph = -np.angle(np.linalg.det(loop))
    # map the boundary value -pi onto +pi so phases lie in (-pi, pi]
    return np.where(ph <= -math.pi, ph + 2 * math.pi, ph)


def chern_report(F: ProjectionFamily, frames: np.ndarray | None = None) -> ChernReport:
    """Total flux / 2 pi, with guards against coarse meshes.

    Raises
    ------
    CoarseMesh
        A plaquette phase exceeds ``0.95 pi`` or the total is not within
        0.05 of an integer.
    SingularOverlap
        See :func:`plaquette_phases`.
    """
    ph = plaquette_phases(F, frames)
    biggest = float(np.max(np.abs(ph)))
    if biggest > MAX_PLAQUETTE_PHASE:
        raise CoarseMesh(f"plaquette phase {biggest:.3f} exceeds 0.95 pi; refine the mesh")
    # reduced in plaquette order for bitwise reproducibility
    raw = math.fsum(ph.tolist()) / (2 * math.pi)
    c1 = int(round(raw))
    residual = abs(raw - c1)
    if residual > INTEGRALITY_SLACK:
        raise CoarseMesh(f"total flux {raw:.4f} is {residual:.3f} away from an integer")
    return ChernReport(c1, raw, residual, biggest)


def chern_number(F: ProjectionFamily) -> int:
    return chern_report(F).c1


def random_gauge(F: ProjectionFamily, seed: int) -> np.ndarray:
    """Frames of ``F`` each multiplied by an independent Haar ``n x n`` unitary."""
    from .operators import random_unitary

    rng = np.random.default_rng(seed)
    return np.stack([frame_of(p) @ random_unitary(F.rank, rng) for p in F.points])


def _family(mesh: ParameterMesh, fn: Callable[[np.ndarray], np.ndarray], tol: Tolerances) -> list[GrassmannPoint]:
    return [certify(fn(x), tol) for x in mesh.vertices]


def constant_family(mesh: ParameterMesh, P0, tol: Tolerances = DEFAULT_TOL) -> ProjectionFamily:
    P0 = P0 if isinstance(P0, GrassmannPoint) else certify(P0, tol)
    return ProjectionFamily(mesh, P0.rank, [P0] * len(mesh.vertices))


def monopole_family(mesh: ParameterMesh, d: int = 2, tol: Tolerances = DEFAULT_TOL) -> ProjectionFamily:
    """``P(x) = (1 + x.sigma)/2 (+) 0`` on the unit sphere, rank 1."""
    if mesh.kind is not MeshKind.S2_CUBED:
        raise ValueError("monopole_family needs an S2 mesh")
    if d < 2:
        raise ValueError("monopole_family needs d >= 2")

    def proj(x):
        h = x[0] * PAULI[0] + x[1] * PAULI[1] + x[2] * PAULI[2]
        return embed(0.5 * (np.eye(2) + h), d)

    return ProjectionFamily(mesh, 1, _family(mesh, proj, tol))


def qwz_family(mesh: ParameterMesh, mass: float = 1.0, d: int = 2, tol: Tolerances = DEFAULT_TOL) -> ProjectionFamily:
    """Two-band torus family ``(1 + n(k).sigma)/2`` with ``n ~ (sin k1, sin k2, mass + cos k1 + cos k2)``.

    Gapped (and so well defined) for ``mass`` not in {-2, 0, 2}.
    """
    if mesh.kind is not MeshKind.TORUS2:
        raise ValueError("qwz_family needs a torus mesh")

    def proj(k):
        h = np.array([math.sin(k[0]), math.sin(k[1]), mass + math.cos(k[0]) + math.cos(k[1])])
        nrm = np.linalg.norm(h)
        if nrm < 1e-9:
            raise SingularOverlap(f"gap closes at k = {tuple(k)}")
        h = h / nrm
        return embed(0.5 * (np.eye(2) + sum(c * s for c, s in zip(h, PAULI))), d)

    return ProjectionFamily(mesh, 1, _family(mesh, proj, tol))


def complement_family(F: ProjectionFamily, block: int | None = None, tol: Tolerances = DEFAULT_TOL) -> ProjectionFamily:
    """``1_block - P(x)`` inside the leading ``block x block`` corner (default: the whole space)."""
    block = F.dim if block is None else block
    one = embed(np.eye(block), F.dim)
    pts = [certify(one - p.op, tol) for p in F.points]
    return ProjectionFamily(F.mesh, block - F.rank, pts)


def _smooth_coordinates(mesh: ParameterMesh) -> np.ndarray:
    if mesh.kind is MeshKind.S2_CUBED:
        return mesh.vertices
    a, b = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return np.stack([np.cos(a), np.sin(a), np.cos(b), np.sin(b)], axis=1)


def perturb_family(F: ProjectionFamily, amplitude: float, seed: int) -> ProjectionFamily:
    """Conjugate each ``P(x)`` by ``exp(i amplitude H(x))``.

    ``H(x) = (H_0 + sum_k c_k(x) H_k) / (K + 1)`` with seeded random
    Hermitian ``H_k`` of unit norm and smooth coordinate functions ``c_k``,
    so ``||H(x)|| <= 1``.
    """
    if amplitude == 0:
        return ProjectionFamily(F.mesh, F.rank, list(F.points))
    rng = np.random.default_rng(seed)
    coords = _smooth_coordinates(F.mesh)
    K = coords.shape[1]
    Hs = []
    for _ in range(K + 1):
        Z = rng.standard_normal((F.dim, F.dim)) + 1j * rng.standard_normal((F.dim, F.dim))
        H = 0.5 * (Z + dagger(Z))
        Hs.append(H / np.linalg.norm(H, 2))
    pts = []
    for c, p in zip(coords, F.points):
        H = (Hs[0] + sum(ck * Hk for ck, Hk in zip(c, Hs[1:]))) / (K + 1)
        V = expm(1j * amplitude * H)
        M = V @ p.op @ dagger(V)
        pts.append(certify(0.5 * (M + dagger(M)), p.tol))
    return ProjectionFamily(F.mesh, F.rank, pts)


def family_to_dict(F: ProjectionFamily) -> dict[str, Any]:
    return {
        "mesh": {"kind": F.mesh.kind.value, "resolution": F.mesh.resolution},
        "rank": F.rank,
        "points": [[v.tolist(), operator_to_dict(p.op)] for v, p in zip(F.mesh.vertices, F.points)],
    }


def family_from_dict(data: dict[str, Any], tol: Tolerances = DEFAULT_TOL) -> ProjectionFamily:
    mesh = make_mesh(data["mesh"]["kind"], int(data["mesh"]["resolution"]))
    entries = data["points"]
    if len(entries) != len(mesh.vertices):
        raise DimensionMismatch(f"{len(entries)} points for a mesh with {len(mesh.vertices)} vertices")
    pts = []
    for (vertex, op), expected in zip(entries, mesh.vertices):
        if not np.allclose(vertex, expected, atol=1e-12):
            raise ValueError(f"vertex {vertex} does not match mesh vertex {expected.tolist()}")
        pts.append(certify(operator_from_dict(op), tol))
    return ProjectionFamily(mesh, int(data["rank"]), pts)
