"""Angle arithmetic and Fréchet statistics on the circle and the flat torus.

All angles are radians.  Torus points are rows of an ``(n, D)`` array.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * np.pi

# relative/absolute tolerance for declaring two Fréchet function values equal
_TIE_RTOL = 1e-10
_TIE_ATOL = 1e-13


class CircularMean(NamedTuple):
    mean: float
    variance: float  # sum of squared arc lengths to the mean
    degenerate: bool  # more than one global minimizer


class GapCenter(NamedTuple):
    center: float
    gap: float
    degenerate: bool


def wrap_angle(x):
    """Map angles to ``[0, 2π)``.

    Works elementwise on scalars and arrays.  Raises
    :class:`InvalidInputError` for non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("angles must be finite")
    out = np.mod(arr, TWO_PI)
    # np.mod can round up to exactly 2π for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def signed_circle_diff(a, b):
    """Difference ``a - b`` taken modulo 2π into ``(-π, π]``."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI)
    d = np.where(d > np.pi, d - TWO_PI, d)
    # -π can only appear through rounding; the range excludes it
    d = np.where(d <= -np.pi, d + TWO_PI, d)
    if d.ndim == 0:
        return float(d)
    return d


def _as_points(points, name="points", allow_nan=False):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-d array of angles")
    finite = np.isfinite(arr) | (np.isnan(arr) if allow_nan else False)
    if not np.all(finite):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def torus_distance(p, q):
    """Flat torus distance between points (broadcasts over leading axes).

    Parameters
    ----------
    p, q : array_like, shape (..., D)
        Angles in radians.

    Returns
    -------
    float or ndarray
        ``sqrt(sum_i min(|p_i - q_i|, 2π - |p_i - q_i|)**2)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise InvalidInputError(
            f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]}"
        )
    # |p - q| on wrapped inputs keeps the result exactly symmetric
    diff = np.abs(np.mod(p, TWO_PI) - np.mod(q, TWO_PI))
    diff = np.minimum(diff, TWO_PI - diff)
    out = np.sqrt(np.sum(diff * diff, axis=-1))
    if np.ndim(out) == 0:
        return float(out)
    return out


def pairwise_torus_distances(points):
    """Condensed pairwise distance vector (scipy ``pdist`` layout)."""
    x = _as_points(points)
    n = x.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    sq = np.zeros(iu.shape[0])
    for k in range(x.shape[1]):
        d = np.abs(x[iu, k] - x[ju, k])
        d = np.minimum(d, TWO_PI - d)
        sq += d * d
    return np.sqrt(sq)


def _sample(values, min_size=1):
    v = np.asarray(values, dtype=float).ravel()
    if v.size < min_size:
        raise InvalidInputError(f"need at least {min_size} angle(s), got {v.size}")
    return wrap_angle(v).reshape(-1)


def _frechet_direct(values, mu):
    s = signed_circle_diff(values, mu)
    return float(np.dot(s, s))


def circular_frechet(values) -> CircularMean:
    """Exact circular intrinsic mean and Fréchet variance.

    Every local minimizer of ``F(μ) = Σ d(ψ_i, μ)²`` has the form
    ``mean(ψ) + 2πj/n``, so ``F`` is screened at all ``n`` candidates
    with prefix sums (O(n log n)) and the best ones are re-evaluated
    directly.  Ties resolve to the smallest angle and set ``degenerate``.
    """
    psi = np.sort(_sample(values))
    n = psi.size
    cand = wrap_angle(psi.mean() + TWO_PI * np.arange(n) / n)

    P = np.concatenate([[0.0], np.cumsum(psi)])
    Q = np.concatenate([[0.0], np.cumsum(psi * psi)])
    a = np.searchsorted(psi, cand - np.pi, side="right")
    b = np.searchsorted(psi, cand + np.pi, side="right")
    # shifted up by 2π: indices < a; shifted down by 2π: indices >= b
    sy = P[n] + TWO_PI * a - TWO_PI * (n - b)
    syy = (
        Q[n]
        + 2.0 * TWO_PI * P[a]
        + TWO_PI**2 * a
        - 2.0 * TWO_PI * (P[n] - P[b])
        + TWO_PI**2 * (n - b)
    )
    f_fast = syy - 2.0 * cand * sy + n * cand * cand

    fmin = f_fast.min()
    scale = max(abs(fmin), float(np.max(np.abs(syy))), 1.0)
    close = np.flatnonzero(f_fast <= fmin + 1e-8 * scale)
    f_exact = np.array([_frechet_direct(psi, cand[j]) for j in close])
    best = f_exact.min()
    tied = close[f_exact <= best + _TIE_RTOL * best + _TIE_ATOL]
    tied_angles = np.unique(cand[tied])
    mu = float(tied_angles.min())
    return CircularMean(mu, _frechet_direct(psi, mu), tied_angles.size > 1)


def circular_intrinsic_mean(values) -> float:
    """Circular intrinsic (Fréchet) mean of a sample of angles."""
    return circular_frechet(values).mean


def gap_center(values) -> GapCenter:
    """Antipode of the midpoint of the largest gap between neighbours.

    Equal gaps are resolved in favour of the one starting at the smallest
    angle, and the result is flagged as degenerate.
    """
    psi = np.sort(_sample(values, min_size=2))
    gaps = np.diff(np.concatenate([psi, [psi[0] + TWO_PI]]))
    g = gaps.max()
    tied = np.flatnonzero(gaps >= g - 1e-12 * max(g, 1.0))
    i = int(tied[0])  # psi is sorted, so the first tied gap starts lowest
    center = wrap_angle(psi[i] + 0.5 * gaps[i] + np.pi)
    return GapCenter(center, float(g), tied.size > 1)


def gap_antipode_center(values) -> float:
    return gap_center(values).center


def largest_gap(values) -> float:
    """Length of the largest cyclic gap of a sample (2π for a single value)."""
    psi = np.sort(_sample(values))
    if psi.size == 1:
        return TWO_PI
    return float(np.diff(np.concatenate([psi, [psi[0] + TWO_PI]])).max())


def angular_spread(values, mu) -> float:
    """Sum of squared signed differences of a sample about ``mu``."""
    psi = _sample(values)
    return _frechet_direct(psi, wrap_angle(mu))


def torus_frechet_variance(points):
    """Total variance of torus data and the point attaining it.

    The squared torus distance separates over coordinates, so each
    coordinate is minimized exactly and independently.

    Returns
    -------
    (float, ndarray)
        ``V0`` and the minimizing torus point.
    """
    x = _as_points(points)
    if x.shape[0] == 0:
        raise InvalidInputError("need at least one point")
    fits = [circular_frechet(x[:, k]) for k in range(x.shape[1])]
    v0 = float(sum(f.variance for f in fits))
    return v0, np.array([f.mean for f in fits])
