"""Multiscale detection of density minima on the circle and mode splitting.

Minimum regions come from local monotonicity tests on arcs spanned by
cyclic order statistics.  On the arc from ``X_(j)`` to ``X_(j+m)`` the
``m - 1`` interior points, rescaled to ``U_i ∈ (0, 1)``, are i.i.d.
uniform whenever the density is locally constant, so

    T = sqrt(3 / (m - 1)) * Σ (2 U_i - 1)

is centred with unit variance.  Large positive ``T`` indicates an
increasing density, large negative ``T`` a decreasing one.  Arcs are
scored by ``|T| - sqrt(2 log(e n / m))`` and the simultaneous critical
value is calibrated by Monte Carlo under the circular uniform law.
A significant decrease followed counter-clockwise by a significant
increase brackets a local minimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError
from .geometry import TWO_PI, signed_circle_diff, wrap_angle

MIN_SAMPLE = 10
N_CALIBRATION = 10_000
GRID_SIZE = 2048
BANDWIDTH_STEP = 1.25
MAX_ESCALATIONS = 50
_TAIL = 1e-12


@dataclass(frozen=True)
class MinimumRegion:
    start: float  # counter-clockwise arc from start to end, radians
    end: float
    scale: int  # number of order-statistic gaps of the detecting windows

    @property
    def length(self) -> float:
        return float(np.mod(self.end - self.start, TWO_PI))

    def contains(self, theta) -> np.ndarray:
        return np.mod(np.asarray(theta) - self.start, TWO_PI) <= self.length


@dataclass
class ModeHuntResult:
    regions: list
    flags: list = field(default_factory=list)


def _scales(n):
    out, m = [], 2
    while m < n:
        out.append(m)
        m = max(m + 1, int(np.floor(m * 1.25)))
    return np.array(out, dtype=int)


def _local_stats(x_sorted):
    """Raw monotonicity statistics for all (scale, start) pairs.

    ``x_sorted`` may be one sorted sample or a batch of shape ``(R, n)``.

    Returns
    -------
    t : ndarray, shape (n_scales, [R,] n)
        Statistic of the arc starting at each order statistic.
    pen : ndarray, shape (n_scales,)
    scales : ndarray
    """
    x = np.atleast_2d(x_sorted)
    n = x.shape[-1]
    ext = np.concatenate([x, x + TWO_PI], axis=-1)
    zero = np.zeros(x.shape[:-1] + (1,))
    csum = np.concatenate([zero, np.cumsum(ext, axis=-1)], axis=-1)
    scales = _scales(n)
    j = np.arange(n)
    t = np.empty((scales.size,) + x.shape)
    for a, m in enumerate(scales):
        left, right = ext[..., j], ext[..., j + m]
        width = np.maximum(right - left, 1e-300)
        inner = csum[..., j + m] - csum[..., j + 1] - (m - 1) * left
        t[a] = (2.0 * inner / width - (m - 1)) * np.sqrt(3.0 / (m - 1))
    pen = np.sqrt(2.0 * np.log(np.e * n / scales))
    if np.ndim(x_sorted) == 1:
        t = t[:, 0, :]
    return t, pen, scales


@lru_cache(maxsize=64)
def critical_value(n, alpha=0.05, seed=0, replicates=N_CALIBRATION) -> float:
    """Monte Carlo ``1 - α`` quantile of the maximal penalized statistic."""
    rng = np.random.default_rng([seed, n])
    batch = max(1, 200_000 // n)
    sims = []
    for start in range(0, replicates, batch):
        r = min(batch, replicates - start)
        x = np.sort(rng.uniform(0.0, TWO_PI, (r, n)), axis=1)
        t, pen, _ = _local_stats(x)
        sims.append((np.abs(t) - pen[:, None, None]).max(axis=(0, 2)))
    return float(np.quantile(np.concatenate(sims), 1.0 - alpha))


def find_minimum_regions(sample, alpha=0.05, seed=0, replicates=N_CALIBRATION):
    """Arcs that contain a local density minimum at simultaneous level ``α``.

    Returns
    -------
    ModeHuntResult
        Disjoint regions sorted by start angle.  Samples with fewer than
        ten points give no regions and the flag ``too-few-points``.
    """
    x = wrap_angle(np.asarray(sample, dtype=float).ravel())
    x = np.atleast_1d(x)
    n = x.size
    if n < MIN_SAMPLE:
        return ModeHuntResult([], ["too-few-points"])
    xs = np.sort(x)
    if xs[-1] - xs[0] < 1e-12:
        return ModeHuntResult([], ["degenerate-sample"])
    kappa = critical_value(n, alpha, seed, replicates)
    t, pen, scales = _local_stats(xs)
    thr = pen[:, None] + kappa
    ext = np.concatenate([xs, xs + TWO_PI])

    def arcs(mask):
        sc, j = np.nonzero(mask)
        return ext[j], ext[j + scales[sc]], scales[sc]

    dec = arcs(t < -thr)
    inc = arcs(t > thr)
    if not dec[0].size or not inc[0].size:
        return ModeHuntResult([])
    cands = _pair_arcs(dec, inc)
    if not cands:
        return ModeHuntResult([])
    return ModeHuntResult(_merge(_minimal(cands)))


def _pair_arcs(dec, inc):
    """Tightest region per decrease arc: the increase arc that starts after
    it ends (counter-clockwise) and finishes first.

    Returns ``(start, end, scale, core_start, core_end)`` tuples with
    ``start`` in ``[0, 2π)`` and ``end - start < 2π``.  The core is the gap
    between the two arcs, where the minimum must lie.
    """
    a1, b1, m1 = dec
    a2, b2, m2 = inc
    s2 = np.mod(a2, TWO_PI)
    e2 = s2 + (b2 - a2)
    # two extra turns so that every later start is represented
    starts = np.concatenate([s2, s2 + TWO_PI, s2 + 2 * TWO_PI])
    ends = np.concatenate([e2, e2 + TWO_PI, e2 + 2 * TWO_PI])
    sc = np.tile(m2, 3)
    order = np.argsort(starts, kind="stable")
    starts, ends, sc = starts[order], ends[order], sc[order]
    # suffix argmin of ends
    rev = ends[::-1]
    hit = rev == np.minimum.accumulate(rev)
    last = np.maximum.accumulate(np.where(hit, np.arange(rev.size), 0))
    arg = (ends.size - 1 - last)[::-1]
    s1 = np.mod(a1, TWO_PI)
    e1 = s1 + (b1 - a1)
    idx = np.searchsorted(starts, e1 - 1e-15, side="left")
    ok = idx < ends.size
    out = []
    for s, e, i, m in zip(s1[ok], e1[ok], idx[ok], m1[ok]):
        k = arg[i]
        if ends[k] - s < TWO_PI:
            core = (float(min(e, starts[k])), float(starts[k]))
            out.append((float(s), float(ends[k]), int(max(m, sc[k]))) + core)
    return out


def _minimal(cands):
    """Drop every candidate arc that strictly contains another one."""
    cands = sorted(set(cands))
    starts = np.array([c[0] for c in cands])
    ends = np.array([c[1] for c in cands])
    s_all = np.concatenate([starts, starts + TWO_PI])
    e_all = np.concatenate([ends, ends + TWO_PI])
    order = np.argsort(s_all, kind="stable")
    s_all, e_all = s_all[order], e_all[order]
    keep = []
    for c in cands:
        s, e = c[0], c[1]
        lo = np.searchsorted(s_all, s, side="left")
        hi = np.searchsorted(s_all, e, side="right")
        ss, ee = s_all[lo:hi], e_all[lo:hi]
        inner = (ee <= e) & ~((ss == s) & (ee == e))
        if not inner.any():
            keep.append(c)
    return keep


def _merge(arcs):
    """Disjoint regions from overlapping ccw arcs.

    Overlapping arcs are united when the core of one reaches into the
    other.  Arcs that overlap only on their flanks straddle a mode; they are
    trimmed at a point between the two cores, so that two distinct minima
    are never fused into one region.
    """
    # (start, end, scale, core_start, core_end) with start in [0, 2π)
    items = sorted(arcs)
    groups = []
    for s, e, m, cs, ce in items:
        if groups:
            g = groups[-1]
            if s <= g[1] and (cs <= g[1] or g[4] >= s):
                groups[-1] = [g[0], max(g[1], e), max(g[2], m), g[3], max(g[4], ce)]
                continue
        groups.append([s, e, m, cs, ce])
    # close the circle: the last core may reach the first one
    a, b = groups[-1], groups[0]
    if len(groups) > 1 and b[0] + TWO_PI <= a[1] and (b[3] + TWO_PI <= a[1] or a[4] >= b[0] + TWO_PI):
        a, b = groups.pop(), groups[0]
        groups[0] = [a[0], max(a[1], b[1] + TWO_PI), max(a[2], b[2]), a[3], max(a[4], b[4] + TWO_PI)]
        groups.sort()
    k = len(groups)
    if k == 1:
        g = groups[0]
        g[1] = min(g[1], g[0] + TWO_PI)
    for i in range(k if k > 1 else 0):
        a, b = groups[i], groups[(i + 1) % k]
        shift = TWO_PI if i == k - 1 else 0.0
        bs, bcs = b[0] + shift, b[3] + shift
        if a[1] > bs:
            lo, hi = max(bs, a[4]), min(a[1], bcs)
            cut = 0.5 * (lo + hi)
            a[1] = cut
            b[0] = np.nextafter(cut, np.inf) - shift
    return sorted(
        (MinimumRegion(float(wrap_angle(s)), float(wrap_angle(e)), int(m)) for s, e, m, _, _ in groups),
        key=lambda r: r.start,
    )


def _wrap_count(h):
    # shifts |j| <= J keep the neglected Gaussian mass below the tail bound
    z = np.sqrt(2.0 * np.log(1.0 / _TAIL))
    return int(np.ceil((np.pi + z * h) / TWO_PI))


def wrapped_gaussian_density(sample, bandwidth, grid=None):
    """Wrapped Gaussian kernel density evaluated on ``grid``.

    The grid defaults to ``GRID_SIZE`` equispaced angles on ``[0, 2π)``.
    """
    if not bandwidth > 0:
        raise InvalidInputError("bandwidth must be positive")
    x = np.atleast_1d(wrap_angle(np.asarray(sample, dtype=float).ravel()))
    if grid is None:
        grid = np.arange(GRID_SIZE) * (TWO_PI / GRID_SIZE)
    grid = np.asarray(grid, dtype=float)
    J = _wrap_count(bandwidth)
    out = np.zeros(grid.shape)
    norm = 1.0 / (x.size * bandwidth * np.sqrt(TWO_PI))
    chunk = max(1, 2_000_000 // max(grid.size, 1))
    for start in range(0, x.size, chunk):
        d = signed_circle_diff(grid[:, None], x[None, start:start + chunk])
        for j in range(-J, J + 1):
            z = (d + TWO_PI * j) / bandwidth
            out += np.exp(-0.5 * z * z).sum(axis=1)
    return out * norm


def _circular_std(x):
    r = np.hypot(np.cos(x).mean(), np.sin(x).mean())
    return float(np.sqrt(-2.0 * np.log(max(r, 1e-300))))


def _local_minima(values):
    """Grid indices of local minima on a circular grid, plateaus as midpoints."""
    n = values.size
    v = values
    rtol = 1e-12 * max(float(np.max(np.abs(v))), 1e-300)
    diff = np.diff(np.append(v, v[0]))
    step = np.where(np.abs(diff) <= rtol, 0, np.sign(diff))
    if not np.any(step):
        return []
    # rotate so that index 0 begins right after a strict change
    first = int(np.flatnonzero(step)[0]) + 1
    out = []
    k = 0
    while k < n:
        i = (first + k) % n
        prev = step[(i - 1) % n]
        if prev < 0:
            # descended into i; walk over the plateau
            run = 0
            while step[(i + run) % n] == 0 and run < n:
                run += 1
            if step[(i + run) % n] > 0:
                out.append((i + run // 2) % n)
            k += run + 1
        else:
            k += 1
    return sorted(out)


@dataclass
class SplitResult:
    labels: np.ndarray  # part index per point
    cuts: list  # cut angles, radians, sorted
    bandwidths: list
    flags: list = field(default_factory=list)

    @property
    def n_parts(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


def split_at_minima(sample, regions, grid_size=GRID_SIZE) -> SplitResult:
    """Cut the circle once inside every region and label the arcs.

    For each region the bandwidth grows geometrically from a
    Silverman-type start until the smoothed density has exactly one local
    minimum inside the region; the circle is cut there.  Regions where
    this fails are dropped and flagged.  Zero or one cut leaves a single
    part, ``k >= 2`` cuts give ``k`` parts.
    """
    x = np.atleast_1d(wrap_angle(np.asarray(sample, dtype=float).ravel()))
    grid = np.arange(grid_size) * (TWO_PI / grid_size)
    h0 = max(_circular_std(x), 1e-3) * x.size ** (-0.2)
    cuts, bws, flags = [], [], []
    cache = {}

    def density(step):
        if step not in cache:
            cache[step] = wrapped_gaussian_density(x, h0 * BANDWIDTH_STEP**step, grid)
        return cache[step]

    for reg in regions:
        inside = reg.contains(grid)
        done = False
        for step in range(MAX_ESCALATIONS + 1):
            mins = [i for i in _local_minima(density(step)) if inside[i]]
            if len(mins) == 1:
                cuts.append(float(grid[mins[0]]))
                bws.append(h0 * BANDWIDTH_STEP**step)
                done = True
                break
            if not mins:
                break
        if not done:
            flags.append(f"split-failure:{np.degrees(reg.start):.1f}")

    cuts = sorted(set(cuts))
    if len(cuts) < 2:
        return SplitResult(np.zeros(x.size, dtype=int), cuts, bws, flags)
    # part k is the arc (cut_k, cut_{k+1}]; the wrap-around arc joins part 0
    lab = np.searchsorted(np.array(cuts), x, side="left") % len(cuts)
    return SplitResult(lab.astype(int), cuts, bws, flags)
