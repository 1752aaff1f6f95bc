"""End-to-end orchestration: variant search, pre-clustering, mode hunting."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import adaptive_branch_cut
from .deformation import DeformationSpec, build_spec, chart_violations, pullback, to_sphere
from .errors import ConfigError, FitFailure, InvalidInputError, TorusPCAError
from .geometry import _as_points, torus_frechet_variance
from .modehunt import find_minimum_regions, split_at_minima
from .pns import NestedDecomposition, TestConfig, pns_decompose
from .variance import VarianceProfile, residual_variance_profile

VARIANTS = (("MC", "SI"), ("MC", "SO"), ("GC", "SI"), ("GC", "SO"))
MAX_DEPTH = 10
_TIE_RTOL = 1e-9


def parse_variants(text):
    """``"MC-SI,GC-SO"`` or ``"all"`` to a tuple of (centering, ordering)."""
    if text is None or text.strip().lower() == "all":
        return VARIANTS
    out = []
    for item in text.split(","):
        parts = tuple(p.strip().upper() for p in item.split("-"))
        if parts not in VARIANTS:
            raise ConfigError(f"unknown variant {item!r}; use e.g. MC-SI")
        out.append(parts)
    return tuple(sorted(set(out), key=VARIANTS.index))


@dataclass(frozen=True)
class RunConfig:
    threshold: float = 0.20
    alpha: float = 0.05
    min_cluster: int = 15
    max_outlier_deg: float = 50.0
    variants: tuple = VARIANTS
    seed: int = 0
    unit: str = "deg"
    workers: int = 1
    calibration_replicates: int = 10_000

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if not 0 < self.alpha < 0.5:
            raise ConfigError("alpha must lie in (0, 0.5)")
        if self.min_cluster < 1:
            raise ConfigError("min_cluster must be positive")
        if not self.max_outlier_deg > 0:
            raise ConfigError("max_outlier_deg must be positive")
        if self.unit not in ("deg", "rad"):
            raise ConfigError("unit must be 'deg' or 'rad'")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise ConfigError("variants must be a non-empty subset of MC/GC x SI/SO")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    @property
    def max_outlier(self) -> float:
        return float(np.deg2rad(self.max_outlier_deg))


@dataclass
class Fit:
    spec: DeformationSpec
    decomposition: NestedDecomposition
    profile: VarianceProfile
    candidates: dict = field(default_factory=dict)  # tag -> d=1 relative variance
    flags: list = field(default_factory=list)

    @property
    def tag(self) -> str:
        return f"{self.spec.centering}-{self.spec.ordering}"

    @property
    def rel1(self) -> float:
        return float(self.profile.relative[1])


def dtpns_best(points, config: RunConfig = None, v0=None) -> Fit:
    """Deform and decompose with every variant; keep the best 1-D fit.

    The winner has the smallest relative residual variance at ``d = 1``;
    values equal up to a relative 1e-9 go to the earlier variant in
    MC-SI, MC-SO, GC-SI, GC-SO order.
    """
    config = config or RunConfig()
    psi = _as_points(points)
    if v0 is None:
        v0, _ = torus_frechet_variance(psi)
    test = TestConfig(alpha=config.alpha, seed=config.seed)
    best, cands, flags = None, {}, []
    for centering, ordering in config.variants:
        tag = f"{centering}-{ordering}"
        try:
            spec = build_spec(psi, centering, ordering)
            dec = pns_decompose(to_sphere(spec, psi), spec, test, seed=config.seed)
            prof = residual_variance_profile(psi, dec, spec, v0)
        except (TorusPCAError, np.linalg.LinAlgError) as exc:
            flags.append(f"{tag}:failed:{type(exc).__name__}")
            continue
        rel = float(prof.relative[1])
        cands[tag] = rel
        if best is None or rel < best.rel1 * (1 - _TIE_RTOL) - 1e-300:
            fit_flags = list(spec.flags) + list(dec.flags) + list(prof.flags)
            nbad = int(chart_violations(spec, psi).sum())
            if nbad:
                fit_flags.append(f"chart-clamped:{nbad}")
            best = Fit(spec, dec, prof, flags=fit_flags)
    if best is None:
        raise FitFailure("no deformation variant could be fitted", {"flags": flags})
    best.candidates = cands
    best.flags = flags + best.flags
    return best


@dataclass
class FinalCluster:
    id: int
    members: np.ndarray
    fit: Fit | None
    path: list
    task_id: int = 0
    parent: int | None = None  # task id of the cluster this one was split from
    parent_rel1: float | None = None

    @property
    def size(self) -> int:
        return int(self.members.size)

    @property
    def nested_mean_deg(self):
        if self.fit is None:
            return None
        m = pullback(self.fit.spec, self.fit.decomposition.nested_mean[None, :], strict=False)[0]
        return np.degrees(m) % 360.0


@dataclass
class TpcaResult:
    clusters: list
    outliers: np.ndarray
    n: int
    dim: int
    v0: float
    full_fit: Fit | None
    preclusters: list  # index arrays from pre-clustering, or []
    config: RunConfig
    log: list = field(default_factory=list)

    def labels(self) -> np.ndarray:
        out = np.full(self.n, -1, dtype=int)
        for c in self.clusters:
            out[c.members] = c.id
        return out


@dataclass
class _Task:
    id: int
    members: np.ndarray
    depth: int
    parent: int | None
    path: list
    parent_rel1: float | None = None


def _process(task: _Task, psi, v0, config: RunConfig):
    """One flow-chart step for one cluster: final or a list of child index sets."""
    n, D = psi.shape
    path = list(task.path)
    if task.members.size < D + 3:
        return path + ["too-small:final"], None, []
    try:
        fit = dtpns_best(psi[task.members], config, v0)
    except FitFailure:
        return path + ["unfittable:final"], None, []
    path.append(f"dtpns:{fit.tag}:{fit.rel1:.4f}")
    if fit.rel1 > config.threshold:
        return path + ["above-threshold:final"], fit, []
    if task.depth >= MAX_DEPTH:
        return path + ["depth-cap:final"], fit, []
    scores = fit.decomposition.circle_angles
    hunt = find_minimum_regions(
        scores, config.alpha, config.seed, config.calibration_replicates
    )
    split = split_at_minima(scores, hunt.regions)
    fit.flags += hunt.flags + split.flags
    if split.n_parts < 2:
        return path + [f"modehunt:regions={len(hunt.regions)}:no-split:final"], fit, []
    children = [task.members[split.labels == k] for k in range(split.n_parts)]
    children = [c for c in children if c.size]
    return path + [f"modehunt:split={len(children)}"], fit, children


def run_tpca(data, config: RunConfig = None) -> TpcaResult:
    """Full pipeline on torus data in radians, shape ``(n, D)``."""
    config = config or RunConfig()
    psi = _as_points(data)
    n, D = psi.shape
    if n < 2 or D < 2:
        raise InvalidInputError("need n >= 2 points in D >= 2 angles")
    v0, _ = torus_frechet_variance(psi)
    if not v0 > 0:
        raise InvalidInputError("all points coincide")
    run_log = []
    full = None
    try:
        full = dtpns_best(psi, config, v0)
        run_log.append(f"full:dtpns:{full.tag}:{full.rel1:.4f}")
    except FitFailure:
        run_log.append("full:unfittable")

    outliers = np.empty(0, dtype=int)
    pre = []
    if full is not None and full.rel1 <= config.threshold:
        run_log.append("full:below-threshold:skip-preclustering")
        roots = [np.arange(n)]
    else:
        pc = adaptive_branch_cut(psi, config.min_cluster, config.max_outlier)
        pre = pc.clusters
        outliers = pc.outliers
        run_log.append(
            f"precluster:clusters={len(pc.clusters)}:outliers={outliers.size}"
            + ("".join(f":{f}" for f in pc.flags))
        )
        roots = pc.clusters

    next_id = 0
    queue = []
    for k, members in enumerate(roots):
        origin = "full" if not pre else f"precluster:{k}"
        queue.append(_Task(next_id, members, 0, None, [origin]))
        next_id += 1

    finals = []
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        while queue:
            if pool is None:
                results = [_process(t, psi, v0, config) for t in queue]
            else:
                futs = [pool.submit(_process, t, psi, v0, config) for t in queue]
                results = [f.result() for f in futs]  # merged in cluster-id order
            nxt = []
            for task, (path, fit, children) in zip(queue, results):
                if not children:
                    finals.append(
                        FinalCluster(task.id, np.sort(task.members), fit, path,
                                     task.id, task.parent, task.parent_rel1)
                    )
                    continue
                for c in children:
                    nxt.append(_Task(next_id, c, task.depth + 1, task.id,
                                     path + [f"child-of:{task.id}"], fit.rel1))
                    next_id += 1
            queue = nxt
    finally:
        if pool is not None:
            pool.shutdown()

    finals.sort(key=lambda c: c.id)
    # renumber final clusters consecutively, keeping the provenance in the path
    for k, c in enumerate(finals):
        c.path.append(f"final-id:{k}")
        c.id = k
    return TpcaResult(finals, outliers, n, D, v0, full, pre, config, run_log)
