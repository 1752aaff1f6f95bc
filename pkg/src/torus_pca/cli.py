"""Command line interface: ``tpca run|decompose|precluster|simulate-test|plot``."""
from __future__ import annotations

import csv
import functools
import os
import sys

import click

from .cluster import adaptive_branch_cut
from .errors import ConfigError, ParseError
from .geometry import torus_frechet_variance
from .io import read_angles, write_report, write_variance_csv
from .pipeline import RunConfig, dtpns_best, parse_variants, run_tpca
from .plots import plot_from_csv
from .simulation import error_rate_study

EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4


def _guard(fn):
    """Map package errors to exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as exc:
            click.secho(f"parse error: {exc}", fg="red", err=True)
            sys.exit(EXIT_PARSE)
        except ConfigError as exc:
            click.secho(f"config error: {exc}", fg="red", err=True)
            sys.exit(EXIT_CONFIG)
        except (click.ClickException, click.exceptions.Exit, SystemExit):
            raise
        except Exception as exc:  # noqa: BLE001
            click.secho(f"internal failure: {type(exc).__name__}: {exc}", fg="red", err=True)
            sys.exit(EXIT_INTERNAL)

    return wrapper


def _common(fn):
    opts = [
        click.option("--input", "input_path", type=click.Path(), required=True, help="CSV of angles with a header row."),
        click.option("--unit", type=click.Choice(["deg", "rad"]), default="deg", show_default=True),
        click.option("--threshold", type=float, default=0.20, show_default=True, help="d=1 relative variance threshold."),
        click.option("--alpha", type=float, default=0.05, show_default=True, help="Test and mode-hunting level."),
        click.option("--min-cluster", type=int, default=15, show_default=True, help="Minimum pre-cluster size m."),
        click.option("--max-outlier-deg", type=float, default=50.0, show_default=True, help="Outlier linkage distance."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--variants", default="all", show_default=True, help="Comma list such as MC-SI,GC-SO."),
        click.option("--out-dir", type=click.Path(), default="tpca_out", show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(threshold, alpha, min_cluster, max_outlier_deg, seed, variants, unit, workers=1):
    return RunConfig(
        threshold=threshold,
        alpha=alpha,
        min_cluster=min_cluster,
        max_outlier_deg=max_outlier_deg,
        variants=parse_variants(variants),
        seed=seed,
        unit=unit,
        workers=workers,
    )


def _load(path, unit):
    if not os.path.exists(path):
        raise ParseError(f"no such file: {path}")
    return read_angles(path, unit)


@click.group()
def main():
    """Torus PCA for multivariate angular data."""


@main.command()
@_common
@click.option("--workers", type=int, default=1, show_default=True, help="Processes for the cluster queue.")
@click.option("--no-plots", is_flag=True, help="Skip SVG rendering.")
@_guard
def run(input_path, unit, threshold, alpha, min_cluster, max_outlier_deg, seed, variants, out_dir, workers, no_plots):
    """Full pipeline: variant search, pre-clustering and mode hunting."""
    cfg = _config(threshold, alpha, min_cluster, max_outlier_deg, seed, variants, unit, workers)
    table = _load(input_path, unit)
    click.echo(f"read {table.shape[0]} points in {table.shape[1]} angles")
    result = run_tpca(table.values, cfg)
    paths = write_report(result, table, out_dir, plots=not no_plots)
    click.echo(f"{len(result.clusters)} final clusters, {result.outliers.size} outliers")
    for key in sorted(paths):
        click.echo(f"  {key}: {paths[key]}")


@main.command()
@_common
@_guard
def decompose(input_path, unit, threshold, alpha, min_cluster, max_outlier_deg, seed, variants, out_dir):
    """DT-PNS on the whole data set for the chosen variants."""
    cfg = _config(threshold, alpha, min_cluster, max_outlier_deg, seed, variants, unit)
    table = _load(input_path, unit)
    v0, _ = torus_frechet_variance(table.values)
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    lines = []
    for k, variant in enumerate(cfg.variants):
        fit = dtpns_best(table.values, RunConfig(**{**cfg.__dict__, "variants": (variant,)}), v0)
        rows += [{**r, "cluster": k} for r in fit.profile.rows()]
        prof = " ".join(f"{d}:{100 * v:.2f}%" for d, v in enumerate(fit.profile.relative))
        lines.append(f"{k} {fit.tag} [{fit.spec.tag}] {prof}")
        for rec in fit.decomposition.level_records():
            lam = "-" if rec["lambda"] is None else f"{rec['lambda']:.3f}"
            lines.append(f"    S^{rec['sphere_dim']}: {rec['verdict']} radius {rec['radius_deg']:.3f} deg lambda {lam}")
    write_variance_csv(os.path.join(out_dir, "variance.csv"), rows)
    with open(os.path.join(out_dir, "decompose.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    click.echo("\n".join(lines))


@main.command()
@_common
@_guard
def precluster(input_path, unit, threshold, alpha, min_cluster, max_outlier_deg, seed, variants, out_dir):
    """Single-linkage pre-clustering only."""
    cfg = _config(threshold, alpha, min_cluster, max_outlier_deg, seed, variants, unit)
    table = _load(input_path, unit)
    pc = adaptive_branch_cut(table.values, cfg.min_cluster, cfg.max_outlier)
    os.makedirs(out_dir, exist_ok=True)
    labels = pc.labels(table.shape[0])
    with open(os.path.join(out_dir, "precluster.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "cluster", "outlier"])
        for rid, lab in zip(table.ids, labels):
            w.writerow([rid, int(lab), int(lab < 0)])
    for k, idx in enumerate(pc.clusters):
        click.echo(f"pre-cluster {k}: {idx.size} points")
    click.echo(f"outliers: {pc.outliers.size}")


@main.command("simulate-test")
@click.option("--sizes", default="30,100,300,1000", show_default=True)
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), default=None, help="Write study.csv here instead of stdout.")
@_guard
def simulate_test(sizes, trials, alpha, seed, out_dir):
    """Error rates of the small-sphere test on simulated clusters."""
    try:
        size_list = tuple(int(s) for s in sizes.split(","))
    except ValueError:
        raise ConfigError(f"bad --sizes {sizes!r}") from None
    if trials < 1 or any(s < 3 for s in size_list) or not 0 < alpha < 0.5:
        raise ConfigError("need trials >= 1, sizes >= 3 and alpha in (0, 0.5)")
    rows = error_rate_study(size_list, trials, alpha, seed)
    fh = sys.stdout
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        fh = open(os.path.join(out_dir, "study.csv"), "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "kind1_rate", "kind2_rate", "se1", "se2"])
        for r in rows:
            w.writerow([r["size"]] + [f"{r[k]:.4f}" for k in ("kind1_rate", "kind2_rate", "se1", "se2")])
    finally:
        if fh is not sys.stdout:
            fh.close()


@main.command()
@click.option("--out-dir", type=click.Path(), required=True, help="Directory holding variance.csv / projection.csv.")
@_guard
def plot(out_dir):
    """Render SVG plots from report CSVs."""
    paths = plot_from_csv(out_dir)
    if not paths:
        raise ParseError(f"no report CSVs found in {out_dir}")
    for key in sorted(paths):
        click.echo(f"{key}: {paths[key]}")


if __name__ == "__main__":
    main()
