"""Principal nested spheres on the (possibly self-glued) deformed sphere.

Points on S^d are rows of an ``(n, d+1)`` array of unit vectors.  Each
level fits a codimension-one subsphere, projects onto it and re-expresses
the foot points on a unit S^{d-1}.  Gluing of the deformation chart is
honoured only in the top-level projection, never in the fit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr

from .deformation import DeformationSpec, glued_path
from .errors import FitFailure, InvalidInputError
from .geometry import circular_frechet, signed_circle_diff, wrap_angle
from .sphere_test import TestVerdict, small_sphere_test

N_RESTARTS = 5
MAX_ITER = 200
GTOL = 1e-10
_AXIS_EPS = 1e-12


@dataclass
class Subsphere:
    """Subsphere {x : angle(axis, x) = radius} of S^d."""

    axis: np.ndarray
    radius: float
    cost: float = 0.0
    flags: list = field(default_factory=list)

    @property
    def ambient_dim(self) -> int:
        return self.axis.size - 1

    @property
    def is_great(self) -> bool:
        return abs(self.radius - np.pi / 2) < 1e-15


@dataclass
class TestConfig:
    alpha: float = 0.05
    enabled: bool = True
    seed: int = 0


@dataclass
class Level:
    dim: int  # the sphere S^dim the subsphere was fitted in
    subsphere: Subsphere
    rotation: np.ndarray  # maps the axis to the last basis vector
    verdict: TestVerdict | None
    residuals: np.ndarray
    glued: np.ndarray  # points projected through the glued boundary
    flags: list = field(default_factory=list)


def _unit_rows(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise InvalidInputError("points must be an (n, d+1) array with d >= 1")
    norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise InvalidInputError("points must be unit vectors")
    return X / norms[:, None]


def _tangent_basis(v):
    q, _ = qr(v[:, None], mode="full")
    return q[:, 1:]


def _angles(X, v):
    c = np.clip(X @ v, -1.0, 1.0)
    return np.arccos(c), np.sqrt(np.maximum(1.0 - c * c, 0.0))


def _exp(v, t):
    nt = np.linalg.norm(t)
    if nt < 1e-300:
        return v
    w = np.cos(nt) * v + np.sin(nt) * t / nt
    return w / np.linalg.norm(w)


def _system(X, v, r, free_r):
    theta, s = _angles(X, v)
    res = theta - r
    B = _tangent_basis(v)
    J = -(X @ B) / np.maximum(s, 1e-12)[:, None]
    if free_r:
        J = np.hstack([J, -np.ones((X.shape[0], 1))])
    return res, B, J, J.T @ res


def _step(v, r, B, step, free_r):
    dv = step[:-1] if free_r else step
    return _exp(v, B @ dv), (r + step[-1] if free_r else r)


def _lm(X, v, radius=None):
    """Levenberg-Marquardt on (axis, radius) with a moving tangent chart."""
    free_r = radius is None
    theta, _ = _angles(X, v)
    r = float(theta.mean()) if free_r else radius
    res = theta - r
    cost = float(res @ res)
    lam = 1e-3
    for it in range(MAX_ITER):
        res, B, J, g = _system(X, v, r, free_r)
        if np.linalg.norm(g) < GTOL:
            break
        A = J.T @ J
        diag = np.diag(A).copy() + 1e-12
        improved = False
        for _ in range(30):
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            v_new, r_new = _step(v, r, B, step, free_r)
            th_new, _ = _angles(X, v_new)
            res_new = th_new - r_new
            c_new = float(res_new @ res_new)
            if c_new <= cost:
                improved = cost - c_new > 1e-16 * max(cost, 1e-300)
                v, r, cost = v_new, r_new, c_new
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
        if not improved:
            break
    # cost differences drown in rounding near the optimum; polish with
    # Gauss-Newton steps as long as the gradient keeps shrinking
    res, B, J, g = _system(X, v, r, free_r)
    for _ in range(5):
        gn = np.linalg.norm(g)
        if gn < GTOL:
            break
        try:
            step = np.linalg.solve(J.T @ J, -g)
        except np.linalg.LinAlgError:
            break
        v_new, r_new = _step(v, r, B, step, free_r)
        sys_new = _system(X, v_new, r_new, free_r)
        if not np.linalg.norm(sys_new[3]) < gn:
            break
        v, r = v_new, r_new
        res, B, J, g = sys_new
        cost = float(res @ res)
    return v, r, cost, it


def _initial_axes(X, great, rng):
    starts = []
    if great:
        w, V = np.linalg.eigh(X.T @ X)
        starts.append(V[:, 0])
    else:
        Xc = X - X.mean(axis=0)
        w, V = np.linalg.eigh(Xc.T @ Xc)
        starts.append(V[:, 0])
        m = X.mean(axis=0)
        if np.linalg.norm(m) > 1e-12:
            starts.append(m / np.linalg.norm(m))
    for _ in range(N_RESTARTS):
        z = rng.normal(size=X.shape[1])
        starts.append(z / np.linalg.norm(z))
    return starts


def _orient(v, X):
    # deterministic sign for great spheres: most data on the positive side
    return -v if (X @ v).sum() < 0 else v


def fit_subsphere(X, seed=0) -> Subsphere:
    """Least-squares small subsphere: minimize Σ (angle(axis, x_i) - r)²."""
    X = _unit_rows(X)
    d = X.shape[1] - 1
    if X.shape[0] < d + 2:
        sub = fit_great_subsphere(X, seed=seed)
        sub.flags.append("too-few-points:great-forced")
        return sub
    rng = np.random.default_rng(seed)
    best = None
    for v0 in _initial_axes(X, great=False, rng=rng):
        v, r, cost, _ = _lm(X, v0)
        if np.isfinite(cost) and (best is None or cost < best[2] - 1e-15):
            best = (v, r, cost)
    if best is None:
        raise FitFailure("small subsphere fit failed", {"n": X.shape[0], "d": d})
    v, r, cost = best
    if r > np.pi / 2:
        v, r = -v, np.pi - r
    return Subsphere(axis=v, radius=float(r), cost=cost)


def fit_great_subsphere(X, seed=0) -> Subsphere:
    """Least-squares great subsphere: minimize Σ (angle(axis, x_i) - π/2)²."""
    X = _unit_rows(X)
    if X.shape[0] < 2:
        raise InvalidInputError("need at least two points")
    rng = np.random.default_rng(seed)
    best = None
    for v0 in _initial_axes(X, great=True, rng=rng):
        v, _, cost, _ = _lm(X, v0, radius=np.pi / 2)
        if np.isfinite(cost) and (best is None or cost < best[2] - 1e-15):
            best = (v, np.pi / 2, cost)
    if best is None:
        raise FitFailure("great subsphere fit failed", {"n": X.shape[0]})
    return Subsphere(axis=_orient(best[0], X), radius=np.pi / 2, cost=best[2])


def _axis_distances(X, sub, spec):
    """Distances to the axis and, where shorter, the glued-path proxies."""
    rho = np.arccos(np.clip(X @ sub.axis, -1.0, 1.0))
    glued = np.zeros(X.shape[0], dtype=bool)
    proxy = X
    if spec is not None and spec.glued_slots and X.shape[1] == spec.dim + 1:
        length, prox = glued_path(spec, X, sub.axis)
        glued = length < rho - 1e-12
        rho = np.where(glued, length, rho)
        proxy = np.where(glued[:, None], prox, X)
    return rho, glued, proxy


def signed_residuals(X, sub: Subsphere, spec: DeformationSpec | None = None):
    """Signed distances ``r - ρ_i``: positive inside the cap around the axis."""
    X = _unit_rows(X)
    rho, _, _ = _axis_distances(X, sub, spec)
    return sub.radius - rho


def _foot_points(X, sub):
    v = sub.axis
    c = X @ v
    perp = X - c[:, None] * v
    norm = np.linalg.norm(perp, axis=1)
    at_axis = norm < _AXIS_EPS
    if at_axis.any():
        e = np.zeros_like(v)
        # first coordinate direction not parallel to the axis
        e[int(np.flatnonzero(np.abs(v) < 1.0 - 1e-12)[0])] = 1.0
        bumped = X[at_axis] + 1e-9 * e
        bumped /= np.linalg.norm(bumped, axis=1)[:, None]
        perp_b = bumped - (bumped @ v)[:, None] * v
        perp[at_axis] = perp_b
        norm[at_axis] = np.linalg.norm(perp_b, axis=1)
    foot = np.cos(sub.radius) * v + np.sin(sub.radius) * perp / norm[:, None]
    return foot, at_axis


def rotation_to_pole(v):
    """Orthogonal matrix taking the unit vector ``v`` to the last basis vector."""
    n = v.size
    b = np.zeros(n)
    b[-1] = 1.0
    cos_a = float(np.clip(v @ b, -1.0, 1.0))
    if cos_a > 1.0 - 1e-15:
        return np.eye(n)
    if cos_a < -1.0 + 1e-15:
        R = np.eye(n)
        R[0, 0] = R[-1, -1] = -1.0
        return R
    c = v - b * cos_a
    c /= np.linalg.norm(c)
    sin_a = np.sqrt(1.0 - cos_a * cos_a)
    return (
        np.eye(n)
        + sin_a * (np.outer(b, c) - np.outer(c, b))
        + (cos_a - 1.0) * (np.outer(b, b) + np.outer(c, c))
    )


def project_to_subsphere(X, sub: Subsphere, spec: DeformationSpec | None = None):
    """Project onto the subsphere and re-coordinatize onto a unit S^{d-1}.

    Returns
    -------
    coords : ndarray, shape (n, d)
        Foot points as unit vectors of the lower sphere.
    foot : ndarray, shape (n, d+1)
        Foot points in the coordinates of S^d.
    info : dict
        ``rotation``, ``glued`` (through-boundary projections) and
        ``at_axis`` (points nudged off the axis).
    """
    X = _unit_rows(X)
    _, glued, proxy = _axis_distances(X, sub, spec)
    foot, at_axis = _foot_points(proxy, sub)
    R = rotation_to_pole(sub.axis)
    z = foot @ R.T
    coords = z[:, :-1] / np.sin(sub.radius)
    coords /= np.linalg.norm(coords, axis=1)[:, None]
    return coords, foot, {"rotation": R, "glued": glued, "at_axis": at_axis}


def lift(u, rotation, radius):
    """Inverse re-coordinatization: points of S^{d-1} back into S^d."""
    u = np.atleast_2d(u)
    z = np.hstack([np.sin(radius) * u, np.full((u.shape[0], 1), np.cos(radius))])
    return z @ rotation


@dataclass
class NestedDecomposition:
    """Result of :func:`pns_decompose`.

    ``levels[0]`` is the fit in the ambient S^D; ``coords[d]`` holds the
    level-d representation of every point as unit vectors of S^d.
    ``residuals`` has one column per level, outermost first, with the last
    column the signed deviation on S¹ from the nested mean.
    """

    levels: list
    coords: dict
    circle_angles: np.ndarray
    mean_angle: float
    residuals: np.ndarray
    spec: DeformationSpec | None = None
    flags: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.levels) + 1

    def _level_for(self, d):
        # subsphere fitted in S^d
        return self.levels[self.dim - d]

    def to_ambient(self, u, d):
        """Map level-d coordinates (unit vectors of S^d) into S^D."""
        y = np.atleast_2d(u)
        for k in range(d + 1, self.dim + 1):
            lev = self._level_for(k)
            y = lift(y, lev.rotation, lev.subsphere.radius)
        return y

    @property
    def nested_mean(self) -> np.ndarray:
        m = np.array([[np.cos(self.mean_angle), np.sin(self.mean_angle)]])
        return self.to_ambient(m, 1)[0]

    def projections(self, d) -> np.ndarray:
        """Π_d of every point, in ambient coordinates ``(n, D+1)``."""
        if not 0 <= d <= self.dim:
            raise InvalidInputError(f"level must be in 0..{self.dim}")
        if d == 0:
            n = self.circle_angles.size
            return np.repeat(self.nested_mean[None, :], n, axis=0)
        return self.to_ambient(self.coords[d], d)

    def chain_projection(self, index, d) -> np.ndarray:
        return self.projections(d)[index]

    def level_records(self) -> list:
        out = []
        for lev in self.levels:
            v = lev.verdict
            out.append(
                {
                    "sphere_dim": lev.dim,
                    "axis": [float(a) for a in lev.subsphere.axis],
                    "radius_deg": float(np.degrees(lev.subsphere.radius)),
                    "verdict": "great" if lev.subsphere.is_great else "small",
                    "lambda": None if v is None else float(v.lam),
                    "rho_mle": None if v is None else float(v.rho_mle),
                    "glued_projections": int(lev.glued.sum()),
                    "flags": list(lev.flags),
                }
            )
        return out


def pns_decompose(X, spec: DeformationSpec | None = None, test=None, seed=0):
    """Backward nested-sphere decomposition S^D ⊃ … ⊃ S¹ ⊃ {μ}.

    At each level a small subsphere is fitted and kept only if the
    folded-normal likelihood-ratio test prefers it; otherwise a great
    subsphere is fitted instead.
    """
    test = test or TestConfig()
    X = _unit_rows(X)
    n, Dp1 = X.shape
    D = Dp1 - 1
    if n < 3:
        raise InvalidInputError("need at least three points")
    levels = []
    coords = {D: X}
    cur = X
    for d in range(D, 1, -1):
        lev_seed = seed + 7919 * (D - d)
        sub = fit_subsphere(cur, seed=lev_seed)
        flags = list(sub.flags)
        verdict = None
        if sub.is_great:
            pass
        elif test.enabled:
            dist = np.arccos(np.clip(cur @ sub.axis, -1.0, 1.0))
            verdict = small_sphere_test(dist, d, alpha=test.alpha, seed=test.seed)
            flags += verdict.flags
            if not verdict.small:
                sub = fit_great_subsphere(cur, seed=lev_seed)
        top_spec = spec if d == D else None
        res = signed_residuals(cur, sub, top_spec)
        lower, _, info = project_to_subsphere(cur, sub, top_spec)
        if info["at_axis"].any():
            flags.append(f"at-axis:{int(info['at_axis'].sum())}")
        levels.append(
            Level(d, sub, info["rotation"], verdict, res, info["glued"], flags)
        )
        cur = lower
        coords[d - 1] = cur

    angles = wrap_angle(np.arctan2(cur[:, 1], cur[:, 0]))
    fit = circular_frechet(angles)
    flags = ["tied-nested-mean"] if fit.degenerate else []
    resid = np.column_stack(
        [lev.residuals for lev in levels] + [signed_circle_diff(angles, fit.mean)]
    )
    return NestedDecomposition(
        levels=levels,
        coords=coords,
        circle_angles=angles,
        mean_angle=fit.mean,
        residuals=resid,
        spec=spec,
        flags=flags,
    )
