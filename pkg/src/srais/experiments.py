"""Experiment drivers: replicated runs, delimited outputs, figures.

Outputs per experiment directory:

- ``trace_rep<i>.csv``   one row per pass (iteration 0 is the
  initialization batch), byte-identical across reruns of the same
  config and seed
- ``timing_rep<i>.csv``  wall clock per pass, kept separate because
  timings are not reproducible
- ``aggregate.csv``      per-iteration statistics across replicates
- ``eta_quantiles.csv``  per-iteration exponent quantiles
- ``meta.txt``           config echo, versions, replicate status
- ``fig_*.png``          rendered summaries unless figures are disabled
"""

import csv
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import EmdConfig, to_toml
from .densities import Gaussian, LogisticPosterior, toy_target
from .datasets import load_dataset
from .emd import GridDensity, verify_lemma2
from .errors import DegenerateWeightsError, SraisError
from .estimators import classify_accuracy
from .sampler import SamplerSettings, run


@dataclass
class Bundle:
    """Everything a replicate needs besides randomness."""

    target: object
    safe_density: object
    true_mean: object
    extra_metrics: object = None
    dataset: object = None


@dataclass
class ReplicateResult:
    index: int
    records: list
    error: str = None
    wall_s: float = 0.0

    @property
    def failed(self):
        return self.error is not None


@dataclass
class ExperimentResult:
    config: object
    replicates: list
    out_dir: Path = None

    @property
    def completed(self):
        return [r for r in self.replicates if not r.failed]


def build_bundle(config):
    """Construct target, safe density, and metrics for a run config."""
    if config.kind == "toy":
        target, initial, true_mean = toy_target(config.name, config.dim, config.student_df)
        return Bundle(target=target, safe_density=initial, true_mean=true_mean)
    if config.kind == "diagnostic":
        # target equals the safe density: raw weights start at exactly 1
        target = Gaussian(np.zeros(config.dim), 1.0)
        return Bundle(target=target, safe_density=target, true_mean=np.zeros(config.dim))
    if config.kind == "blr":
        dataset = load_dataset(
            config.dataset,
            binarization=config.binarization,
            train_fraction=config.train_fraction,
            seed=config.seed,
        )
        target = LogisticPosterior(dataset.train_features, dataset.train_labels)
        safe = Gaussian(np.zeros(target.dim), 5.0)

        def accuracy(points, weights):
            return {
                "accuracy": classify_accuracy(
                    dataset.test_features, dataset.test_labels, points, weights
                )
            }

        return Bundle(
            target=target,
            safe_density=safe,
            true_mean=None,
            extra_metrics=accuracy,
            dataset=dataset,
        )
    raise ValueError(f"no bundle for experiment kind {config.kind!r}")


def _settings(config):
    return SamplerSettings(
        subsample_mode=config.subsample_mode,
        estimate_weights=config.estimate_weights,
        per_particle_bandwidth=config.per_particle_bandwidth,
    )


def replicate_rng(seed, index):
    """Generator for one replicate, split off the experiment seed."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(index + 1)[index])


def run_replicate(config, bundle, index):
    rng = replicate_rng(config.seed, index)
    schedule = config.schedule()
    started = time.perf_counter()
    try:
        records = run(
            bundle.target,
            bundle.safe_density,
            schedule,
            rng=rng,
            settings=_settings(config),
            true_mean=bundle.true_mean,
            extra_metrics=bundle.extra_metrics,
        )
        return ReplicateResult(index=index, records=records, wall_s=time.perf_counter() - started)
    except (DegenerateWeightsError, SraisError) as exc:
        return ReplicateResult(
            index=index, records=[], error=f"{type(exc).__name__}: {exc}",
            wall_s=time.perf_counter() - started,
        )


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _trace_header(config):
    cols = ["replicate", "iteration", "eta", "lambda", "h", "n_particles", "ess", "d_n"]
    cols += [f"est_{i}" for i in range(config.dim)]
    cols += ["squared_error"]
    if config.kind == "blr":
        cols += ["accuracy"]
    return cols


def write_trace(path, config, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_trace_header(config))
        for rec in result.records:
            row = [
                result.index,
                rec.iteration,
                _fmt(rec.eta),
                _fmt(rec.lam),
                _fmt(rec.h),
                rec.n_particles,
                _fmt(rec.ess),
                _fmt(rec.d_n),
            ]
            row += [_fmt(float(v)) for v in rec.estimate]
            row += [_fmt(rec.squared_error)]
            if config.kind == "blr":
                row += [_fmt(rec.extras.get("accuracy"))]
            writer.writerow(row)


def write_timing(path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["replicate", "iteration", "wall_ms"])
        for rec in result.records:
            writer.writerow([result.index, rec.iteration, _fmt(rec.wall_ms)])


def aggregate_rows(config, replicates):
    """Per-iteration summary across completed replicates.

    Columns: iteration, n_replicates, then mean/std of log squared error
    plus the log of the mean squared error (toy and diagnostic runs), or
    mean accuracy (logistic regression runs).
    """
    done = [r for r in replicates if not r.failed]
    rows = []
    for it in range(config.iterations + 1):
        row = {"iteration": it, "n_replicates": len(done)}
        if config.kind == "blr":
            accs = [r.records[it].extras.get("accuracy") for r in done]
            accs = [a for a in accs if a is not None]
            row["mean_accuracy"] = float(np.mean(accs)) if accs else None
        else:
            errs = np.array([r.records[it].squared_error for r in done], dtype=float)
            errs = errs[np.isfinite(errs) & (errs > 0)]
            if errs.size:
                logs = np.log(errs)
                row["mean_log_sq_error"] = float(logs.mean())
                row["std_log_sq_error"] = float(logs.std(ddof=1)) if logs.size > 1 else None
                row["log_mean_sq_error"] = float(np.log(errs.mean()))
            else:
                row["mean_log_sq_error"] = None
                row["std_log_sq_error"] = None
                row["log_mean_sq_error"] = None
        rows.append(row)
    return rows


def eta_quantile_rows(config, replicates):
    done = [r for r in replicates if not r.failed]
    rows = []
    for it in range(config.iterations + 1):
        etas = np.array([r.records[it].eta for r in done], dtype=float)
        if etas.size == 0:
            continue
        q = np.percentile(etas, [0, 25, 50, 75, 100])
        rows.append(
            {
                "iteration": it,
                "eta_min": float(q[0]),
                "eta_q25": float(q[1]),
                "eta_median": float(q[2]),
                "eta_q75": float(q[3]),
                "eta_max": float(q[4]),
            }
        )
    return rows


def _write_dict_rows(path, rows):
    if not rows:
        return
    header = list(rows[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in header])


def write_meta(path, config, replicates, extra_lines=()):
    lines = [
        f"label: {config.label}",
        f"srais version: {__version__}",
        f"python: {sys.version.split()[0]}",
        f"numpy: {np.__version__}",
        "",
    ]
    lines.extend(extra_lines)
    for rep in replicates:
        status = "failed: " + rep.error if rep.failed else "ok"
        lines.append(f"replicate {rep.index}: {status} ({rep.wall_s:.2f}s)")
    lines += ["", "config:", to_toml(config).rstrip()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_experiment(config, out_dir=None, replicates=None):
    """Run every replicate of ``config`` and write the output bundle.

    ``out_dir=None`` keeps everything in memory (no files). Failed
    replicates are recorded in the result and excluded from aggregates.
    """
    if isinstance(config, EmdConfig):
        raise ValueError("mirror descent verification runs through verify_emd")
    if replicates is not None:
        config = config.with_overrides(replicates=replicates)
    bundle = build_bundle(config)
    results = [run_replicate(config, bundle, i) for i in range(config.replicates)]
    experiment = ExperimentResult(config=config, replicates=results)
    failed = [r for r in results if r.failed]
    for rep in failed:
        print(f"warning: replicate {rep.index} failed ({rep.error})", file=sys.stderr)
    if not experiment.completed:
        raise SraisError("every replicate failed; nothing to aggregate")

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        experiment.out_dir = out_dir
        for rep in results:
            if not rep.failed:
                write_trace(out_dir / f"trace_rep{rep.index}.csv", config, rep)
                write_timing(out_dir / f"timing_rep{rep.index}.csv", rep)
        _write_dict_rows(out_dir / "aggregate.csv", aggregate_rows(config, results))
        _write_dict_rows(out_dir / "eta_quantiles.csv", eta_quantile_rows(config, results))
        extra = []
        if bundle.dataset is not None:
            ds = bundle.dataset
            extra = [
                f"dataset: {ds.source} ({ds.n_rows} rows, {ds.n_features} features)",
                f"binarization: {ds.binarization}",
                f"majority test accuracy: {ds.majority_accuracy!r}",
                "",
            ]
        write_meta(out_dir / "meta.txt", config, results, extra)
        if config.figures:
            from . import figures

            figures.render_run_figures(config, results, out_dir)
    return experiment


def verify_emd(config, out_dir=None):
    """Run the mirror descent bound verification described by ``config``.

    Returns ``{schedule label: [EmdStepReport, ...]}`` and optionally
    writes ``emd_report.csv`` (schedule, step, eta, tv, bound, slack)
    plus a figure.
    """
    f = GridDensity.from_density(
        Gaussian([config.f_mean], config.f_var), config.grid_lo, config.grid_hi, config.grid_points
    )
    start = GridDensity.from_density(
        Gaussian([config.start_mean], config.start_var),
        config.grid_lo,
        config.grid_hi,
        config.grid_points,
    )
    reports = {}
    for spec in config.schedules:
        reports[spec.label] = verify_lemma2(f, start, spec.etas(config.steps))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "emd_report.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["schedule", "step", "eta", "tv", "bound", "slack"])
            for label, steps in reports.items():
                for rep in steps:
                    writer.writerow(
                        [label, rep.step, _fmt(rep.eta), _fmt(rep.tv), _fmt(rep.bound), _fmt(rep.slack)]
                    )
        if config.figures:
            from . import figures

            figures.render_emd_figure(reports, out_dir)
    return reports
