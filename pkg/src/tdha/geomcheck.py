"""Self-contained verification suite for the ball geometry invariants.

Each check measures a worst-case error against an independent reference
(closed forms, metric axioms, the iterative mean) and compares it to a
fixed tolerance. The geometry callables are injectable so the suite can be
turned on itself in tests (feed it a broken distance and watch it fail).
"""

from __future__ import annotations

import numpy as np

from . import poincare
from .seeding import derive_rng

_DIMS = (2, 8, 512)


def _random_points(rng: np.random.Generator, count: int, dim: int, max_norm: float) -> np.ndarray:
    dirs = rng.normal(size=(count, dim))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    radii = rng.uniform(0.0, max_norm, size=(count, 1))
    return dirs * radii


def _check(name: str, samples: int, max_error: float, tolerance: float) -> dict:
    return {
        "name": name,
        "samples": samples,
        "max_error": float(max_error),
        "tolerance": tolerance,
        "passed": bool(max_error <= tolerance),
    }


def check_radial_closed_form(distance_fn=poincare.distance, seed: int = 0, count: int = 1000) -> dict:
    """d(0, (r, 0)) must equal 2*artanh(r), relative error <= 1e-9."""
    rng = derive_rng(seed, "geom", "radial")
    # Cover the whole radius range plus both numerically delicate ends.
    r = np.concatenate(
        [
            rng.uniform(1e-12, 1.0 - 1e-6, size=count - count // 2),
            10.0 ** rng.uniform(-12.0, -1.0, size=count // 4),
            1.0 - 10.0 ** rng.uniform(-5.99, -0.5, size=count - count // 2 - count // 4 - 2),
            np.array([1e-12, 1.0 - 1.001e-6]),
        ]
    )
    a = np.zeros((r.size, 2))
    b = np.stack([r, np.zeros_like(r)], axis=-1)
    got = np.asarray(distance_fn(a, b), dtype=np.float64)
    want = 2.0 * np.arctanh(r)
    rel = np.abs(got - want) / want
    return _check("radial_closed_form", r.size, np.max(rel), 1e-9)


def check_round_trip(
    exp_fn=poincare.exp_map_origin,
    log_fn=poincare.log_map_origin,
    seed: int = 0,
    count: int = 400,
) -> dict:
    """log(exp(w)) must return w within 1e-9 * (1 + ||w||) for ||w|| <= 5."""
    worst = 0.0
    samples = 0
    for dim in _DIMS:
        rng = derive_rng(seed, "geom", "roundtrip", dim)
        w = _random_points(rng, count, dim, 5.0)
        w[0] = 0.0
        w[1] *= 5.0 / max(np.linalg.norm(w[1]), 1e-300)
        norms = np.linalg.norm(w, axis=-1)
        err = np.linalg.norm(log_fn(exp_fn(w)) - w, axis=-1) / (1.0 + norms)
        worst = max(worst, float(np.max(err)))
        samples += count
    return _check("exp_log_round_trip", samples, worst, 1e-9)


def check_metric_axioms(distance_fn=poincare.distance, seed: int = 0, count: int = 1000) -> list[dict]:
    """Symmetry, identity, and the triangle inequality on random triples."""
    sym_worst = 0.0
    id_worst = 0.0
    tri_worst = 0.0
    samples = 0
    for dim in _DIMS:
        rng = derive_rng(seed, "geom", "axioms", dim)
        a = _random_points(rng, count, dim, 1.0 - 1e-6)
        b = _random_points(rng, count, dim, 1.0 - 1e-6)
        c = _random_points(rng, count, dim, 1.0 - 1e-6)
        dab = np.asarray(distance_fn(a, b), dtype=np.float64)
        dba = np.asarray(distance_fn(b, a), dtype=np.float64)
        dac = np.asarray(distance_fn(a, c), dtype=np.float64)
        dbc = np.asarray(distance_fn(b, c), dtype=np.float64)
        daa = np.asarray(distance_fn(a, a), dtype=np.float64)
        sym_worst = max(sym_worst, float(np.max(np.abs(dab - dba))))
        id_worst = max(id_worst, float(np.max(np.abs(daa))))
        tri_worst = max(tri_worst, float(np.max(dac - (dab + dbc))))
        samples += count
    return [
        _check("distance_symmetry", samples, sym_worst, 1e-12),
        _check("distance_identity", samples, id_worst, 0.0),
        _check("triangle_inequality", samples, tri_worst, 1e-9),
    ]


def check_rotation_isometry(distance_fn=poincare.distance, seed: int = 0, count: int = 100) -> dict:
    """Distance must be invariant under a shared orthogonal transform."""
    worst = 0.0
    samples = 0
    for dim in _DIMS:
        rng = derive_rng(seed, "geom", "rotation", dim)
        q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        a = _random_points(rng, count, dim, 1.0 - 1e-6)
        b = _random_points(rng, count, dim, 1.0 - 1e-6)
        before = np.asarray(distance_fn(a, b), dtype=np.float64)
        after = np.asarray(distance_fn(a @ q.T, b @ q.T), dtype=np.float64)
        worst = max(worst, float(np.max(np.abs(after - before))))
        samples += count
    return _check("rotation_isometry", samples, worst, 1e-9)


def check_frechet_approximation(seed: int = 0, clouds: int = 100) -> dict:
    """Tangent mean within 1e-3 geodesic distance of the iterative mean.

    Clouds of up to 10 points with max norm 0.1 in dim 8, matching the
    regime where the first-order approximation is claimed.
    """
    rng = derive_rng(seed, "geom", "frechet")
    worst = 0.0
    for _ in range(clouds):
        n = int(rng.integers(1, 11))
        pts = _random_points(rng, n, 8, 0.1)
        gap = float(poincare.distance(poincare.tangent_mean(pts), poincare.frechet_mean_oracle(pts)))
        worst = max(worst, gap)
    return _check("frechet_first_order", clouds, worst, 1e-3)


def frechet_gap_by_norm(seed: int = 0, clouds: int = 20, max_norms=(0.1, 0.2, 0.3, 0.4, 0.5)) -> list[dict]:
    """Report-only: how the tangent-mean gap grows with cloud radius."""
    out = []
    for max_norm in max_norms:
        rng = derive_rng(seed, "geom", "frechet-degradation", max_norm)
        worst = 0.0
        for _ in range(clouds):
            n = int(rng.integers(2, 11))
            pts = _random_points(rng, n, 8, max_norm)
            gap = float(
                poincare.distance(poincare.tangent_mean(pts), poincare.frechet_mean_oracle(pts))
            )
            worst = max(worst, gap)
        out.append({"max_norm": max_norm, "worst_gap": worst})
    return out


def check_mean_agreement(seed: int = 0, clouds: int = 50) -> dict:
    """Ambient and tangent means coincide to 1e-6 for tiny-norm clouds."""
    rng = derive_rng(seed, "geom", "mean-agreement")
    worst = 0.0
    for _ in range(clouds):
        n = int(rng.integers(2, 11))
        pts = _random_points(rng, n, 8, 0.01)
        gap = float(poincare.distance(poincare.ambient_mean(pts), poincare.tangent_mean(pts)))
        worst = max(worst, gap)
    return _check("ambient_tangent_agreement", clouds, worst, 1e-6)


def run_geometry_checks(
    seed: int = 0,
    distance_fn=poincare.distance,
    exp_fn=poincare.exp_map_origin,
    log_fn=poincare.log_map_origin,
    frechet_clouds: int = 100,
) -> dict:
    """Full invariant suite; ``passed`` is the conjunction of every check."""
    checks = [
        check_radial_closed_form(distance_fn, seed),
        check_round_trip(exp_fn, log_fn, seed),
        *check_metric_axioms(distance_fn, seed),
        check_rotation_isometry(distance_fn, seed),
        check_frechet_approximation(seed, clouds=frechet_clouds),
        check_mean_agreement(seed),
    ]
    return {
        "command": "geom-check",
        "config": {"seed": seed},
        "checks": checks,
        "frechet_gap_by_norm": frechet_gap_by_norm(seed),
        "passed": all(c["passed"] for c in checks),
    }
