"""Residual variances of nested approximations, measured on the torus."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deformation import DeformationSpec, pullback
from .errors import InvalidInputError
from .geometry import _as_points, signed_circle_diff, torus_distance, wrap_angle, torus_frechet_variance
from .pns import NestedDecomposition


@dataclass
class VarianceProfile:
    """Residual variance for every approximation dimension ``d = 0..D``."""

    cluster: int
    absolute: np.ndarray
    relative: np.ndarray
    tag: str
    excluded: np.ndarray = None  # per-level count of singular pullbacks
    flags: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.absolute.size - 1

    def rows(self):
        for d, (a, r) in enumerate(zip(self.absolute, self.relative)):
            yield {"cluster": self.cluster, "d": d, "absolute": float(a), "relative": float(r)}


def residual_variance_profile(
    points, decomp: NestedDecomposition, spec: DeformationSpec, v0=None, cluster=0
) -> VarianceProfile:
    """Sum of squared torus distances between each point and its
    projection at every level, pulled back through the chart.

    Parameters
    ----------
    points : array_like, shape (n, D)
        The torus data the decomposition was computed on.
    v0 : float, optional
        Normalizing total variance; defaults to that of ``points``.
    """
    psi = _as_points(points)
    n, D = psi.shape
    if decomp.dim != D or spec.dim != D:
        raise InvalidInputError("decomposition, spec and data dimensions differ")
    if v0 is None:
        v0, _ = torus_frechet_variance(psi)
    if not v0 > 0:
        raise InvalidInputError("total variance must be positive")
    absolute = np.zeros(D + 1)
    excluded = np.zeros(D + 1, dtype=int)
    for d in range(D):
        back = pullback(spec, decomp.projections(d), strict=False)
        ok = np.all(np.isfinite(back), axis=1)
        excluded[d] = int(n - ok.sum())
        dist = torus_distance(psi[ok], back[ok])
        absolute[d] = float(np.sum(dist * dist))
    flags = []
    if excluded.any():
        flags.append(f"singular-pullbacks:{int(excluded.max())}")
        if excluded.max() > 1e-3 * n:
            flags.append("invalid:too-many-singular-pullbacks")
    return VarianceProfile(cluster, absolute, absolute / v0, spec.tag, excluded, flags)


def tangent_pca_profile(points, v0=None, cluster=0) -> VarianceProfile:
    """Baseline: Euclidean PCA of angle differences about the intrinsic mean."""
    psi = _as_points(points)
    n, D = psi.shape
    if n < 2:
        raise InvalidInputError("need at least two points")
    v_own, mean = torus_frechet_variance(psi)
    if v0 is None:
        v0 = v_own
    if not v0 > 0:
        raise InvalidInputError("total variance must be positive")
    z = signed_circle_diff(psi, mean)
    zc = z - z.mean(axis=0)
    _, _, vt = np.linalg.svd(zc, full_matrices=False)
    absolute = np.zeros(D + 1)
    for d in range(D):
        basis = vt[:d]
        recon = z.mean(axis=0) + (zc @ basis.T) @ basis
        back = wrap_angle(recon + mean)
        dist = torus_distance(psi, back)
        absolute[d] = float(np.sum(dist * dist))
    return VarianceProfile(cluster, absolute, absolute / v0, "tangent-PCA",
                           np.zeros(D + 1, dtype=int))
