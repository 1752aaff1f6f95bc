import numpy as np
import pytest

TWO_PI = 2.0 * np.pi

# criterion lines collected by test_acceptance.py, echoed in the summary
ACCEPTANCE_LINES = []


def two_moons(rng, n=150, radius=1.0, noise=0.05):
    """Two interleaved noisy half circles on T², centred at (π, π)."""
    a = rng.uniform(0.0, np.pi, n)
    b = rng.uniform(0.0, np.pi, n)
    upper = np.column_stack([np.cos(a), np.sin(a)])
    lower = np.column_stack([1.0 - np.cos(b), 0.5 - np.sin(b)])
    X = radius * np.vstack([upper, lower]) + rng.normal(0.0, noise, (2 * n, 2)) + np.pi
    labels = np.repeat([0, 1], n)
    return np.mod(X, TWO_PI), labels


def curved_cluster(rng, n=200, D=7, radius=0.5, noise=0.02):
    """Concentrated cluster bent into a circle in the last two angles."""
    base = rng.uniform(0.0, TWO_PI, D)
    t = rng.uniform(0.0, TWO_PI, n)
    X = np.tile(base, (n, 1)) + rng.normal(0.0, noise, (n, D))
    X[:, D - 2] += radius * np.cos(t)
    X[:, D - 1] += radius * np.sin(t)
    return np.mod(X, TWO_PI)


def random_torus_cloud(seed):
    """Random-dimension, random-spread cloud used for invariant sweeps."""
    rng = np.random.default_rng(seed)
    D = int(rng.integers(2, 6))
    n = int(rng.integers(20, 80))
    X = rng.uniform(0, TWO_PI, D) + rng.normal(0, rng.uniform(0.1, 0.8), (n, D))
    return np.mod(X, TWO_PI)


def unit_rows(X):
    return X / np.linalg.norm(X, axis=1)[:, None]


def small_circle(axis, r, t, noise=0.0, rng=None):
    """Points at angle ``r`` from ``axis``; ``noise`` is tangential to the sphere."""
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    q, _ = np.linalg.qr(np.column_stack([axis, np.eye(axis.size)]))
    u, w = q[:, 1], q[:, 2]
    X = np.cos(r) * axis + np.sin(r) * (np.outer(np.cos(t), u) + np.outer(np.sin(t), w))
    if noise:
        e = rng.normal(0, noise, X.shape)
        e -= np.sum(e * X, axis=1)[:, None] * X  # tangent component only
        X = unit_rows(X + e)
    return X


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _fibonacci_sphere(m):
    k = np.arange(m) + 0.5
    z = 1.0 - 2.0 * k / m
    t = np.pi * (1.0 + 5.0**0.5) * k
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(t), s * np.sin(t), z])


def grid_subsphere_oracle(X, great=False, coarse=4000, levels=5):
    """Brute-force (axis, r) on S²: Fibonacci grid, then shrinking local grids.

    For a fixed axis the optimal radius is the mean angle to the axis, so
    only the axis is searched.
    """

    def cost(axes):
        ang = np.arccos(np.clip(X @ axes.T, -1.0, 1.0))
        r = np.full(axes.shape[0], np.pi / 2) if great else ang.mean(axis=0)
        if not great:
            r = np.minimum(r, np.pi - r)
            ang = np.where(ang.mean(axis=0) > np.pi / 2, np.pi - ang, ang)
        return ((ang - r) ** 2).sum(axis=0), r

    axes = _fibonacci_sphere(coarse)
    c, r = cost(axes)
    k = int(np.argmin(c))
    best, best_c, best_r = axes[k], c[k], r[k]
    step = 2.0 * np.sqrt(4.0 * np.pi / coarse)
    for _ in range(levels):
        e1 = np.cross(best, [1.0, 0.0, 0.0] if abs(best[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(best, e1)
        g = np.linspace(-step, step, 41)
        a, b = np.meshgrid(g, g)
        cand = best + a.reshape(-1, 1) * e1 + b.reshape(-1, 1) * e2
        cand /= np.linalg.norm(cand, axis=1)[:, None]
        c, r = cost(cand)
        k = int(np.argmin(c))
        if c[k] < best_c:
            best, best_c, best_r = cand[k], c[k], r[k]
        step /= 10.0
    return best, float(best_r), float(best_c)
