"""Synthetic clusters on S² and the error-rate study of the sphere test."""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .pns import fit_subsphere
from .sphere_test import small_sphere_test


def _tangent_frame(center):
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    q, _ = np.linalg.qr(np.column_stack([c, np.eye(c.size)]))
    return c, q[:, 1:c.size]


def _from_tangent(t, c, frame):
    # orthogonal projection back onto the sphere: x = sqrt(1 - |t|²) c + t
    v = t @ frame.T
    h = np.sqrt(np.clip(1.0 - np.sum(t * t, axis=1), 0.0, None))
    return h[:, None] * c + v


def simulate_null_cluster(n, sigma, rng, center=(0.0, 0.0, 1.0)):
    """Isotropic normal in the tangent plane, truncated at radius 2σ."""
    if n < 1 or not 0 < sigma < 0.5:
        raise InvalidInputError("need n >= 1 and 0 < sigma < 0.5")
    c, frame = _tangent_frame(center)
    k = frame.shape[1]
    out = np.empty((0, k))
    while out.shape[0] < n:
        t = rng.normal(0.0, sigma, size=(2 * (n - out.shape[0]) + 8, k))
        t = t[np.linalg.norm(t, axis=1) <= 2.0 * sigma]
        out = np.vstack([out, t])
    return _from_tangent(out[:n], c, frame)


def simulate_ring_cluster(n, mu_r, sigma_r, rng, center=(0.0, 0.0, 1.0)):
    """Ring around ``center`` with uniform angle and radius ~ N(μ_r, σ_r).

    Radii are geodesic distances from the center, truncated to (0, π).
    """
    if n < 1 or not 0 < mu_r < np.pi or sigma_r <= 0:
        raise InvalidInputError("need n >= 1, 0 < mu_r < pi, sigma_r > 0")
    c, frame = _tangent_frame(center)
    if frame.shape[1] != 2:
        raise InvalidInputError("ring clusters are defined on S² only")
    radii = np.empty(0)
    while radii.size < n:
        r = rng.normal(mu_r, sigma_r, size=2 * (n - radii.size) + 8)
        radii = np.concatenate([radii, r[(r > 0.0) & (r < np.pi)]])
    radii = radii[:n]
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    u = np.column_stack([np.cos(ang), np.sin(ang)]) @ frame.T
    return np.cos(radii)[:, None] * c + np.sin(radii)[:, None] * u


def random_center(rng, dim=3):
    z = rng.normal(size=dim)
    return z / np.linalg.norm(z)


def cluster_verdict(X, alpha=0.05, seed=0):
    """Fit a small circle to S² data and run the sphere test on it."""
    sub = fit_subsphere(X, seed=seed)
    dist = np.arccos(np.clip(X @ sub.axis, -1.0, 1.0))
    return small_sphere_test(dist, 2, alpha=alpha, seed=seed)


def error_rate_study(sizes=(30, 100, 300, 1000), trials=1000, alpha=0.05, seed=0):
    """Monte Carlo error rates of the small-sphere test on S².

    Each null trial draws σ ~ U[0.1, 0.45]; each ring trial draws
    μ_r ~ U[0.1, 0.5] and σ_r ~ U[0.01 μ_r, 0.5 μ_r].  Centers are uniform
    on the sphere.  Kind-1 errors are "small" verdicts on null clusters,
    kind-2 errors are "great" verdicts on ring clusters.

    Returns
    -------
    list of dict
        One row per size with keys ``size``, ``kind1_rate``,
        ``kind2_rate``, ``se1`` and ``se2``.
    """
    root = np.random.SeedSequence(seed)
    rows = []
    for size, ss in zip(sizes, root.spawn(len(sizes))):
        e1 = e2 = 0
        for child in ss.spawn(trials):
            rng_n, rng_r = (np.random.default_rng(s) for s in child.spawn(2))
            sigma = rng_n.uniform(0.1, 0.45)
            Xn = simulate_null_cluster(size, sigma, rng_n, random_center(rng_n))
            mu_r = rng_r.uniform(0.1, 0.5)
            sigma_r = rng_r.uniform(0.01 * mu_r, 0.5 * mu_r)
            Xr = simulate_ring_cluster(size, mu_r, sigma_r, rng_r, random_center(rng_r))
            e1 += cluster_verdict(Xn, alpha).small
            e2 += not cluster_verdict(Xr, alpha).small
        p1, p2 = e1 / trials, e2 / trials
        rows.append(
            {
                "size": int(size),
                "kind1_rate": p1,
                "kind2_rate": p2,
                "se1": float(np.sqrt(p1 * (1 - p1) / trials)),
                "se2": float(np.sqrt(p2 * (1 - p2) / trials)),
            }
        )
    return rows
