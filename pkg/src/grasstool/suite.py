"""The acceptance battery behind ``grasstool suite``.

Each check returns a :class:`CheckResult` whose ``details`` hold only
deterministic numbers, so two runs with the same seed serialise to the same
bytes. Wall-clock timings are reported separately.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import chern, grassmann, retraction, states
from .grassmann import Neighbourhood, certify
from .operators import (
    WeakMetric,
    dagger,
    identity,
    op_norm,
    random_projection,
    singular_values,
    weak_dist,
)
from .parallel import pmap

__all__ = ["CheckResult", "CHECKS", "run_suite", "section_samples", "weak_decay"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0


def _ginibre(rng: np.random.Generator, d: int) -> np.ndarray:
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def section_samples(dim: int, seed: int, k: int = 3, count: int = 100) -> tuple[np.ndarray, Neighbourhood]:
    """Per-sample (section residual, unitarity defect, ||P_perp P0||, smin(A_P)) over points of O_0."""
    P0 = certify(random_projection(dim, k, seed))
    N = Neighbourhood.around(P0)
    one = identity(dim)
    rows = []
    for P in grassmann.sample_neighbourhood(N, count, seed + 1):
        U = grassmann.section(P, N)
        rows.append(
            (
                op_norm(U @ P0.op @ dagger(U) - P.op),
                op_norm(dagger(U) @ U - one),
                op_norm((one - P.op) @ P0.op),
                float(singular_values(grassmann.build_A(P, P0))[-1]),
            )
        )
    return np.array(rows), N


def check_section(r: np.ndarray, N: Neighbourhood) -> CheckResult:
    return CheckResult(
        "section",
        bool(np.all(r[:, 0] < 1e-8) and np.all(r[:, 1] < 1e-10)),
        {
            "dim": N.base.dim,
            "k": N.k,
            "eps": N.eps,
            "samples": len(r),
            "max_section_residual": float(r[:, 0].max()),
            "max_unitarity_defect": float(r[:, 1].max()),
        },
    )


def check_bounds(r: np.ndarray, N: Neighbourhood) -> CheckResult:
    cap = math.sqrt(N.k) * N.eps
    ok = bool(np.all(r[:, 2] < cap) and np.all(r[:, 3] >= N.c_k - 1e-8))
    return CheckResult(
        "bound_chain",
        ok,
        {
            "sqrt_k_eps": cap,
            "max_perp_overlap": float(r[:, 2].max()),
            "c_k": N.c_k,
            "min_smallest_singular_value": float(r[:, 3].min()),
        },
    )


def check_connect(seed: int, dim: int = 12, pairs: int = 50, steps: int = 8) -> CheckResult:
    worst_gap = 0.0
    ok = True
    for i in range(pairs):
        n = 1 + i % 6
        P = certify(random_projection(dim, n, seed + 2 * i))
        Q = certify(random_projection(dim, n, seed + 2 * i + 1))
        path = grassmann.connect(P, Q, steps)
        ok &= len(path) == steps + 1 and path[0].op is P.op and path[-1].op is Q.op
        ok &= all(p.rank == n for p in path)
        gap = max(op_norm(a.op - b.op) for a, b in zip(path, path[1:]))
        worst_gap = max(worst_gap, gap)
    ok &= worst_gap < math.pi / (2 * steps) + 1e-9
    return CheckResult("connect", bool(ok), {"dim": dim, "pairs": pairs, "steps": steps, "max_step_gap": worst_gap})


def weak_decay(dim: int) -> list[float]:
    """``weak_dist(|e_k><e_k|, 0)`` for k = 1..dim."""
    metric = WeakMetric(dim)
    out = []
    for k in range(1, dim + 1):
        E = np.zeros((dim, dim), dtype=complex)
        E[k - 1, k - 1] = 1.0
        out.append(weak_dist(E, 0 * E, metric))
    return out


def check_separation(seed: int, dim: int = 10, pairs: int = 500) -> CheckResult:
    rng = np.random.default_rng(seed)
    smallest = math.inf
    for i in range(pairs):
        n = int(rng.integers(0, dim))
        m = int(rng.integers(n + 1, dim + 1))
        P = certify(random_projection(dim, n, rng))
        Q = certify(random_projection(dim, m, rng))
        smallest = min(smallest, grassmann.rank_separation(P, Q))
    decay = weak_decay(dim)
    exact = all(decay[k - 1] == 4.0**-k for k in range(1, dim + 1))
    return CheckResult(
        "rank_separation",
        bool(smallest >= 1 - 1e-9 and exact),
        {"pairs": pairs, "min_separation": smallest, "weak_decay": decay},
    )


def check_compression_algebra(seed: int, level: int = 8, pairs: int = 100) -> CheckResult:
    grid = retraction.DyadicGrid(level)
    m = grid.m
    rng = np.random.default_rng(seed)
    worst_mult = worst_adj = worst_dd = worst_dtd = 0.0
    for j in range(level + 1):
        t = math.ldexp(1.0, -j)
        D = retraction.compression_D(grid, t)
        worst_dd = max(worst_dd, op_norm(D.matrix @ dagger(D.matrix) - identity(D.target_cells)))
        worst_dtd = max(worst_dtd, op_norm(dagger(D.matrix) @ D.matrix - retraction.restriction_R(grid, t)))
        n = D.target_cells
        for _ in range(pairs):
            A, B = _ginibre(rng, n), _ginibre(rng, n)
            scale = op_norm(A) * op_norm(B) * m
            phiA = retraction.phi(grid, t, A)
            # Frobenius norms bound the operator norm from above.
            err = np.linalg.norm(retraction.phi(grid, t, A @ B) - phiA @ retraction.phi(grid, t, B))
            worst_mult = max(worst_mult, float(err) / scale)
            worst_adj = max(worst_adj, float(np.linalg.norm(retraction.phi(grid, t, dagger(A)) - dagger(phiA))))
    ok = worst_mult < 1e-12 and worst_adj < 1e-12 and worst_dd < 1e-12 and worst_dtd < 1e-12
    return CheckResult(
        "compression_algebra",
        bool(ok),
        {
            "m": m,
            "scales": level + 1,
            "pairs_per_scale": pairs,
            "max_relative_multiplicativity_error": worst_mult,
            "max_adjoint_error": worst_adj,
            "max_DDstar_error": worst_dd,
            "max_DstarD_minus_R_error": worst_dtd,
        },
    )


def check_retraction(seed: int, level: int = 8, rank: int = 3) -> CheckResult:
    grid = retraction.DyadicGrid(level)
    P = certify(random_projection(grid.m, rank, seed))
    start = retraction.retraction_Phi(grid, 0.0, P)
    end = retraction.retraction_Phi(grid, 1.0, P)
    start_exact = bool(np.array_equal(start.op, P.op))
    end_exact = bool(np.array_equal(end.op, np.zeros_like(P.op)))
    rows = retraction.weak_limit_scan(grid, P)
    last_rung = [r for r in rows if r.t == 1.0 - 1.0 / grid.m][0]
    traces = [r.trace for r in rows]
    monotone = all(b <= a + 1e-9 for a, b in zip(traces, traces[1:]))
    decayed = last_rung.weak_dist < 1e-6
    return CheckResult(
        "retraction",
        start_exact and end_exact and monotone and decayed,
        {
            "m": grid.m,
            "rank": rank,
            "phi0_bit_exact": start_exact,
            "phi1_zero_bit_exact": end_exact,
            "trace_non_increasing": monotone,
            "weak_dist_at_last_rung": last_rung.weak_dist,
            "threshold": 1e-6,
            "scan": [[r.t, r.weak_dist, r.trace, r.rank] for r in rows],
        },
    )


def check_chern(seed: int, resolution: int = 12) -> CheckResult:
    mesh = chern.cubed_sphere(resolution)
    F = chern.monopole_family(mesh, 2)
    rep = chern.chern_report(F)
    comp = chern.chern_number(chern.complement_family(F))
    const = chern.chern_number(chern.constant_family(mesh, F.points[0]))
    perturbed = [chern.chern_number(chern.perturb_family(F, 0.1, seed + s)) for s in range(20)]
    gauged = chern.chern_report(F, chern.random_gauge(F, seed)).c1
    fine = chern.cubed_sphere(2 * resolution)
    F2 = chern.monopole_family(fine, 2)
    fine_c1 = chern.chern_number(F2)
    fine_comp = chern.chern_number(chern.complement_family(F2))
    ok = (
        rep.c1 == -1
        and rep.residual < 0.05
        and comp == 1
        and const == 0
        and all(c == -1 for c in perturbed)
        and gauged == -1
        and fine_c1 == -1
        and fine_comp == 1
    )
    return CheckResult(
        "chern",
        bool(ok),
        {
            "resolution": resolution,
            "monopole": rep.as_dict(),
            "complement_c1": comp,
            "constant_c1": const,
            "perturbed_c1": perturbed,
            "gauge_randomized_c1": gauged,
            "refined_c1": fine_c1,
            "refined_complement_c1": fine_comp,
        },
    )


def check_states(dim: int, seed: int, rank: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_margin = math.inf
    all_hold = True
    for _ in range(100):
        P = certify(random_projection(dim, rank, rng))
        Q = certify(random_projection(dim, rank, rng))
        cert = states.continuity_certificate(P, Q, _ginibre(rng, dim))
        all_hold &= cert.verdict
        worst_margin = min(worst_margin, cert.bound - cert.lhs)
    P = certify(random_projection(dim, rank, rng))
    A = _ginibre(rng, dim)
    A = A / op_norm(A)
    scan = states.continuity_scan(P, A, range(0, 21), seed)
    decayed = scan[-1]["lhs"] < 1e-6
    worst_rec = worst_coeff = 0.0
    for _ in range(200):
        A = _ginibre(rng, dim)
        dec = states.four_unitaries(A)
        nA = op_norm(A)
        worst_rec = max(worst_rec, op_norm(dec.reconstruct(dim) - A))
        worst_coeff = max(worst_coeff, max(abs(a) for a, _ in dec.terms) - nA / 2)
    ok = all_hold and decayed and worst_rec < 1e-9 and worst_coeff <= 1e-12
    return CheckResult(
        "state_continuity",
        bool(ok),
        {
            "dim": dim,
            "rank": rank,
            "triples": 100,
            "min_bound_margin": worst_margin,
            "lhs_at_gap_2^-20": scan[-1]["lhs"],
            "scan": [[r["k"], r["op_norm_gap"], r["lhs"], r["bound"]] for r in scan],
            "max_reconstruction_error": worst_rec,
            "max_coefficient_excess": worst_coeff,
        },
    )


def _timed(fn: Callable[[], Any]) -> tuple[Any, float]:
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def run_suite(dim: int = 16, seed: int = 7) -> list[CheckResult]:
    """Run every acceptance check; results are ordered as listed in :data:`CHECKS`."""
    (samples, N), t_sec = _timed(lambda: section_samples(dim, seed))
    sec = check_section(samples, N)
    sec.seconds = t_sec
    bounds = check_bounds(samples, N)
    jobs = [
        lambda: check_connect(seed),
        lambda: check_separation(seed),
        lambda: check_compression_algebra(seed),
        lambda: check_retraction(seed),
        lambda: check_chern(seed),
        lambda: check_states(dim, seed),
    ]
    rest = []
    for res, secs in pmap(_timed, jobs):
        res.seconds = secs
        rest.append(res)
    return [sec, bounds, *rest]


CHECKS = (
    "section",
    "bound_chain",
    "connect",
    "rank_separation",
    "compression_algebra",
    "retraction",
    "chern",
    "state_continuity",
)
