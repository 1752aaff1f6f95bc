"""CSV ingestion and run-report emission."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .geometry import wrap_angle


@dataclass
class AngleTable:
    ids: list
    names: list
    values: np.ndarray  # radians in [0, 2π)

    @property
    def shape(self):
        return self.values.shape


def read_angles(path, unit="deg") -> AngleTable:
    """Read a CSV of angles with a header row and an optional ``id`` column.

    Raises
    ------
    ParseError
        For a missing header, ragged rows, non-numeric cells or fewer
        than two angle columns.  The message carries the line number.
    """
    if unit not in ("deg", "rad"):
        raise ParseError(f"unknown unit {unit!r}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file", 1)
    line, header = rows[0]
    header = [h.strip() for h in header]
    if all(_is_number(h) for h in header):
        raise ParseError("missing header row", line)
    id_col = next((k for k, h in enumerate(header) if h.lower() == "id"), None)
    names = [h for k, h in enumerate(header) if k != id_col]
    if len(names) < 2:
        raise ParseError("need at least two angle columns", line)
    ids, vals = [], []
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
        rec = []
        for k, cell in enumerate(row):
            if k == id_col:
                ids.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric value {cell.strip()!r} in column {header[k]!r}", line) from None
            if not np.isfinite(v):
                raise ParseError(f"non-finite value in column {header[k]!r}", line)
            rec.append(v)
        vals.append(rec)
    if not vals:
        raise ParseError("no data rows", rows[0][0])
    arr = np.array(vals, dtype=float)
    if unit == "deg":
        arr = np.deg2rad(arr)
    if id_col is None:
        ids = [str(i + 1) for i in range(arr.shape[0])]
    return AngleTable(ids, names, wrap_angle(arr))


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _fmt(x, digits=6):
    return f"{x:.{digits}f}"


def write_membership(path, ids, result):
    labels = result.labels()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "cluster", "outlier"])
        for rid, lab in zip(ids, labels):
            w.writerow([rid, int(lab), int(lab < 0)])


def variance_rows(result):
    for c in result.clusters:
        if c.fit is None:
            continue
        for row in c.fit.profile.rows():
            yield {**row, "cluster": c.id}


def write_variance_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "d", "absolute", "relative"])
        for r in rows:
            w.writerow([r["cluster"], r["d"], _fmt(r["absolute"], 8), _fmt(r["relative"], 8)])


def projection_rows(result, ids):
    """Orthographic coordinates of each cluster's S² level.

    The view looks down the axis of the fitted circle, so the circle
    itself is centred at the origin with radius ``sin r``.
    """
    for c in result.clusters:
        if c.fit is None:
            continue
        dec = c.fit.decomposition
        lev = dec.levels[-1]  # subsphere fitted inside S²
        z = dec.coords[2] @ lev.rotation.T
        for k, idx in enumerate(c.members):
            yield {
                "id": ids[idx],
                "cluster": c.id,
                "x": float(z[k, 0]),
                "y": float(z[k, 1]),
                "front": int(z[k, 2] >= 0),
                "circle_radius": float(np.sin(lev.subsphere.radius)),
            }


def write_projection_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "cluster", "x", "y", "front", "circle_radius"])
        for r in rows:
            w.writerow([r["id"], r["cluster"], _fmt(r["x"]), _fmt(r["y"]), r["front"], _fmt(r["circle_radius"])])


def _report_text(result, names):
    cfg = result.config
    out = [
        "T-PCA run report",
        "================",
        f"points: {result.n}   angles: {result.dim}   total variance V0: {result.v0:.6f}",
        f"threshold: {cfg.threshold}   alpha: {cfg.alpha}   min cluster: {cfg.min_cluster}"
        f"   max outlier distance: {cfg.max_outlier_deg} deg   seed: {cfg.seed}",
        "",
        "Run log",
        "-------",
        *[f"  {line}" for line in result.log],
        "",
    ]
    if result.preclusters:
        out += ["Pre-clusters", "------------"]
        labels = result.labels()
        for k, idx in enumerate(result.preclusters):
            finals = sorted(set(int(v) for v in labels[idx] if v >= 0))
            out.append(f"  pre-cluster {k}: size {idx.size} -> final clusters {finals}")
        out.append(f"  outliers: {result.outliers.size}")
        if result.outliers.size:
            out.append("  outlier rows: " + " ".join(str(int(i) + 1) for i in result.outliers))
        out.append("")
    out += ["Final clusters", "--------------"]
    for c in result.clusters:
        out.append(f"cluster {c.id}: size {c.size}")
        out.append("  path: " + " -> ".join(c.path))
        if c.fit is None:
            out.append("  no decomposition")
            continue
        out.append(f"  variant: {c.fit.tag}  chart: {c.fit.spec.tag}")
        cand = ", ".join(f"{k}={v:.4f}" for k, v in c.fit.candidates.items())
        out.append(f"  d=1 relative variance per variant: {cand}")
        mean = c.nested_mean_deg
        out.append("  nested mean (deg): " + ", ".join(
            f"{n}={m:.2f}" if np.isfinite(m) else f"{n}=undefined" for n, m in zip(names, mean)))
        out.append("  relative residual variance by d: " + " ".join(
            f"{d}:{100 * v:.2f}%" for d, v in enumerate(c.fit.profile.relative)))
        for rec in c.fit.decomposition.level_records():
            lam = "-" if rec["lambda"] is None else f"{rec['lambda']:.3f}"
            out.append(
                f"  level S^{rec['sphere_dim']}: {rec['verdict']} radius {rec['radius_deg']:.3f} deg"
                f"  lambda {lam}  glued {rec['glued_projections']}"
            )
        if c.fit.flags:
            out.append("  flags: " + ", ".join(c.fit.flags))
    return "\n".join(out) + "\n"


def _summary_text(result):
    lines = [
        f"n={result.n}",
        f"dim={result.dim}",
        f"v0={result.v0:.8f}",
        f"clusters={len(result.clusters)}",
        f"outliers={result.outliers.size}",
    ]
    for c in result.clusters:
        rec = [f"cluster={c.id}", f"size={c.size}"]
        if c.fit is not None:
            rec += [
                f"variant={c.fit.tag}",
                f"rel1={c.fit.rel1:.8f}",
                "nested_mean_deg=" + ";".join(f"{m:.4f}" for m in c.nested_mean_deg),
            ]
        rec.append("path=" + "|".join(c.path))
        lines.append(" ".join(rec))
    return "\n".join(lines) + "\n"


def write_report(result, table: AngleTable, out_dir, plots=True):
    """Write membership, report, summary, variance and projection files."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "membership": os.path.join(out_dir, "membership.csv"),
        "report": os.path.join(out_dir, "report.txt"),
        "summary": os.path.join(out_dir, "summary.txt"),
        "variance": os.path.join(out_dir, "variance.csv"),
        "projection": os.path.join(out_dir, "projection.csv"),
    }
    write_membership(paths["membership"], table.ids, result)
    with open(paths["report"], "w") as fh:
        fh.write(_report_text(result, table.names))
    with open(paths["summary"], "w") as fh:
        fh.write(_summary_text(result))
    write_variance_csv(paths["variance"], variance_rows(result))
    write_projection_csv(paths["projection"], projection_rows(result, table.ids))
    if plots:
        from .plots import plot_from_csv

        paths.update(plot_from_csv(out_dir))
    return paths
