"""Data-adaptive deformation of the torus T^D onto the sphere S^D.

Torus coordinate ``p[k]`` is placed into polar slot ``k`` via

    φ_k = π/2 + α_k · ((ψ_{p[k]} - μ_{p[k]}) mod 2π in (-π, π])

Slots are 0-based here; slot ``D-1`` is the innermost, fully periodic
angle and is never scaled.  Halved slots (α = 1/2) carry the
identification φ_k = 0 ≡ φ_k = π that keeps the torus periodicity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, PolarDegenerateError, SingularityError
from .geometry import (
    _as_points,
    angular_spread,
    circular_frechet,
    gap_center,
    largest_gap,
    signed_circle_diff,
    torus_distance,
    wrap_angle,
)

CENTERINGS = ("MC", "GC")
ORDERINGS = ("SI", "SO")

SINGULAR_TOL = 1e-12
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class DeformationSpec:
    """The chart P: T^D -> S^D.

    Attributes
    ----------
    permutation : tuple of int
        ``permutation[k]`` is the torus coordinate placed in slot ``k``.
    centers : tuple of float
        Central angle per torus coordinate (radians, [0, 2π)).
    scalings : tuple of float
        α per slot, each 1/2 or 1; the last slot is always 1.
    centering, ordering : str
        Variant tags ("MC"/"GC", "SI"/"SO").
    flags : tuple of str
        Degeneracies met while building the chart.
    """

    permutation: tuple
    centers: tuple
    scalings: tuple
    centering: str = "MC"
    ordering: str = "SI"
    flags: tuple = field(default=())

    def __post_init__(self):
        D = len(self.permutation)
        if sorted(self.permutation) != list(range(D)):
            raise InvalidInputError("permutation must be a bijection on 0..D-1")
        if len(self.centers) != D or len(self.scalings) != D:
            raise InvalidInputError("centers/scalings must have length D")
        if any(a not in (0.5, 1.0) for a in self.scalings):
            raise InvalidInputError("scalings must be 1/2 or 1")
        if self.scalings[-1] != 1.0:
            raise InvalidInputError("the innermost slot must stay unscaled")

    @property
    def dim(self) -> int:
        return len(self.permutation)

    @property
    def inverse_permutation(self) -> tuple:
        inv = [0] * self.dim
        for slot, coord in enumerate(self.permutation):
            inv[coord] = slot
        return tuple(inv)

    @property
    def glued_slots(self) -> tuple:
        return tuple(k for k in range(self.dim - 1) if self.scalings[k] == 0.5)

    @property
    def tag(self) -> str:
        scal = "".join("H" if a == 0.5 else "U" for a in self.scalings[:-1])
        return f"{self.centering}-{self.ordering}[{scal}]"

    def to_record(self) -> dict:
        return {
            "variant": f"{self.centering}-{self.ordering}",
            "permutation": [int(p) + 1 for p in self.permutation],
            "centers_deg": [round(float(np.degrees(c)), 6) for c in self.centers],
            "scalings": [float(a) for a in self.scalings],
            "glued_slots": [k + 1 for k in self.glued_slots],
            "flags": list(self.flags),
        }


def choose_scalings(data, permutation) -> tuple:
    """Halve every non-innermost slot whose data spread over more than π.

    A coordinate stays unscaled when all its values fit into an arc of
    length π, i.e. when its largest cyclic gap is at least π.
    """
    x = _as_points(data)
    D = x.shape[1]
    alphas = []
    for slot in range(D - 1):
        gap = largest_gap(x[:, permutation[slot]])
        alphas.append(1.0 if gap >= np.pi else 0.5)
    alphas.append(1.0)
    return tuple(alphas)


def build_spec(data, centering="MC", ordering="SI") -> DeformationSpec:
    x = _as_points(data)
    if x.shape[0] < 2:
        raise InvalidInputError("need at least two points to build a chart")
    if centering not in CENTERINGS or ordering not in ORDERINGS:
        raise InvalidInputError(f"unknown variant {centering}-{ordering}")
    D = x.shape[1]
    flags = []

    centers = []
    for k in range(D):
        if centering == "MC":
            fit = circular_frechet(x[:, k])
            centers.append(fit.mean)
        else:
            fit = gap_center(x[:, k])
            centers.append(fit.center)
        if fit.degenerate:
            flags.append(f"tied-center:{k + 1}")

    spreads = np.array([angular_spread(x[:, k], centers[k]) for k in range(D)])
    if np.ptp(spreads) <= 1e-12 * max(spreads.max(), 1.0):
        perm = tuple(range(D))
        flags.append("equal-spreads")
    elif ordering == "SI":
        perm = tuple(int(i) for i in np.argsort(spreads, kind="stable"))
    else:
        perm = tuple(int(i) for i in np.argsort(-spreads, kind="stable"))

    return DeformationSpec(
        permutation=perm,
        centers=tuple(float(c) for c in centers),
        scalings=choose_scalings(x, perm),
        centering=centering,
        ordering=ordering,
        flags=tuple(flags),
    )


def _slot_arrays(spec):
    perm = np.asarray(spec.permutation)
    mu = np.asarray(spec.centers)[perm]
    alpha = np.asarray(spec.scalings)
    return perm, mu, alpha


def chart_violations(spec: DeformationSpec, psi) -> np.ndarray:
    """Mask of points an unscaled outer slot would push outside [0, π]."""
    x = _as_points(psi)
    perm, mu, alpha = _slot_arrays(spec)
    diff = signed_circle_diff(x[:, perm], mu)
    phi = np.pi / 2 + alpha * diff
    outer = phi[:, :-1]
    bad = (outer < 0.0) | (outer > np.pi)
    return bad.any(axis=1)


def deform(spec: DeformationSpec, psi) -> np.ndarray:
    """Torus points ``(n, D)`` to polar angles ``(n, D)``.

    Unscaled outer slots are clamped into [0, π]; see
    :func:`chart_violations` for the affected points.
    """
    x = _as_points(psi)
    if x.shape[1] != spec.dim:
        raise InvalidInputError("dimension mismatch between data and chart")
    perm, mu, alpha = _slot_arrays(spec)
    phi = np.pi / 2 + alpha * signed_circle_diff(x[:, perm], mu)
    phi[:, :-1] = np.clip(phi[:, :-1], 0.0, np.pi)
    phi[:, -1] = wrap_angle(phi[:, -1])
    return phi


def singular_mask(spec: DeformationSpec, phi) -> np.ndarray:
    phi = _as_points(phi, "phi", allow_nan=True)
    mask = np.any(np.isnan(phi), axis=1)
    for k in spec.glued_slots:
        mask |= (np.abs(phi[:, k]) < SINGULAR_TOL) | (
            np.abs(phi[:, k] - np.pi) < SINGULAR_TOL
        )
    return mask


def inverse_deform(spec: DeformationSpec, phi, strict=True) -> np.ndarray:
    """Polar angles back to torus angles.

    Points on the singular set of a halved slot raise
    :class:`SingularityError`, or become NaN rows when ``strict`` is False.
    NaN input rows (degenerate polar points) pass through when not strict.
    """
    phi = _as_points(phi, "phi", allow_nan=not strict)
    if phi.shape[1] != spec.dim:
        raise InvalidInputError("dimension mismatch between polar point and chart")
    bad = singular_mask(spec, phi)
    if strict and bad.any():
        raise SingularityError(
            f"{int(bad.sum())} point(s) lie on the singular set of the chart"
        )
    perm, mu, alpha = _slot_arrays(spec)
    psi = np.full_like(phi, np.nan)
    good = ~bad
    psi[np.ix_(good, perm)] = wrap_angle(mu + (phi[good] - np.pi / 2) / alpha)
    return psi


def polar_to_cartesian(phi) -> np.ndarray:
    """Polar angles ``(n, D)`` to unit vectors ``(n, D+1)``.

    ``x_1 = cos φ_1``, ``x_k = (Π_{j<k} sin φ_j) cos φ_k`` and
    ``x_{D+1} = Π_j sin φ_j``.
    """
    phi = _as_points(phi, "phi")
    n, D = phi.shape
    s = np.sin(phi)
    c = np.cos(phi)
    x = np.empty((n, D + 1))
    prod = np.ones(n)
    for k in range(D):
        x[:, k] = prod * c[:, k]
        prod = prod * s[:, k]
    x[:, D] = prod
    return x


def cartesian_to_polar(x, strict=True) -> np.ndarray:
    """Unit vectors ``(n, D+1)`` to polar angles ``(n, D)``.

    Raises :class:`PolarDegenerateError` when the last two coordinates
    vanish (some prefix product of sines is zero); with ``strict=False``
    those rows are NaN instead.
    """
    x = _as_points(x, "x")
    n, Dp1 = x.shape
    D = Dp1 - 1
    if D < 1:
        raise InvalidInputError("need at least two Cartesian coordinates")
    tail = np.sqrt(np.cumsum((x * x)[:, ::-1], axis=1)[:, ::-1])
    bad = tail[:, D - 1] < DEGENERATE_TOL
    if strict and bad.any():
        raise PolarDegenerateError(f"{int(bad.sum())} point(s) are polar-degenerate")
    phi = np.empty((n, D))
    for k in range(D - 1):
        phi[:, k] = np.arctan2(tail[:, k + 1], x[:, k])
    phi[:, D - 1] = wrap_angle(np.arctan2(x[:, D], x[:, D - 1]))
    phi[bad] = np.nan
    return phi


# --- gluing -----------------------------------------------------------------


def _arc(x, y):
    return np.arccos(np.clip(np.sum(x * y, axis=-1), -1.0, 1.0))


def _closest_on_boundary(x, j, side):
    """Closest point to ``x`` on {φ_j = 0} (side=+1) or {φ_j = π} (side=-1).

    That set is the half great sphere of span(e_0..e_j) with
    ``side * x_j >= 0``.
    """
    u = np.zeros_like(x)
    u[..., : j + 1] = x[..., : j + 1]
    wrong = side * u[..., j] < 0
    u[..., j] = np.where(wrong, 0.0, u[..., j])
    norm = np.linalg.norm(u, axis=-1)
    fallback = np.zeros(x.shape[-1])
    fallback[j] = side
    tiny = norm < 1e-15
    norm = np.where(tiny, 1.0, norm)
    a = u / norm[..., None]
    return np.where(tiny[..., None], fallback, a)


def _reflect(a, j):
    b = a.copy()
    b[..., j] = -b[..., j]
    return b


def glued_path(spec: DeformationSpec, x, y):
    """Shortest through-boundary path found between ``x`` and ``y``.

    Each candidate path runs spherically from ``x`` to a boundary point,
    jumps to the identified point, and continues spherically to ``y``.
    The boundary point is anchored at the closest point to either end,
    so every candidate is an admissible path (an upper bound on the
    glued geodesic).

    Returns
    -------
    length : ndarray
        Path length, ``inf`` where no slot is glued.
    proxy : ndarray
        The identified boundary point from which the path continues to ``y``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.broadcast_to(np.asarray(y, dtype=float), x.shape)
    best = np.full(x.shape[0], np.inf)
    proxy = np.array(x, copy=True)
    for j in spec.glued_slots:
        for side in (1.0, -1.0):
            a = _closest_on_boundary(x, j, side)
            a2 = _reflect(a, j)
            b2 = _closest_on_boundary(y, j, -side)
            b = _reflect(b2, j)
            for start, landing in ((a, a2), (b, b2)):
                length = _arc(x, start) + _arc(landing, y)
                better = length < best
                best = np.where(better, length, best)
                proxy = np.where(better[:, None], landing, proxy)
    return best, proxy


def glued_distance(spec: DeformationSpec, x, y):
    """Spherical distance shortened through the self-glued boundaries."""
    x2 = np.atleast_2d(np.asarray(x, dtype=float))
    y2 = np.broadcast_to(np.asarray(y, dtype=float), x2.shape)
    d = _arc(x2, y2)
    if spec.glued_slots:
        g, _ = glued_path(spec, x2, y2)
        d = np.minimum(d, g)
    if np.ndim(x) == 1 and np.ndim(y) == 1:
        return float(d[0])
    return d


def pullback(spec: DeformationSpec, x, strict=True) -> np.ndarray:
    """Sphere points ``(n, D+1)`` to torus points through the chart."""
    return inverse_deform(spec, cartesian_to_polar(x, strict=strict), strict=strict)


def deformed_metric(spec: DeformationSpec, x, y):
    """Torus distance between the pullbacks of two sphere points."""
    px = pullback(spec, np.atleast_2d(x))
    py = pullback(spec, np.atleast_2d(y))
    d = torus_distance(px, py)
    if np.ndim(x) == 1 and np.ndim(y) == 1:
        return float(np.asarray(d).ravel()[0])
    return d


def to_sphere(spec: DeformationSpec, psi) -> np.ndarray:
    """Shorthand for ``polar_to_cartesian(deform(spec, psi))``."""
    return polar_to_cartesian(deform(spec, psi))
