"""Replicated runs, file outputs, aggregation, and the grid verification driver."""

import dataclasses

import numpy as np
import pytest

from srais import Gaussian, LogisticPosterior
from srais.config import RunConfig, load_config
from srais.experiments import (
    Bundle,
    ReplicateResult,
    aggregate_rows,
    build_bundle,
    eta_quantile_rows,
    replicate_rng,
    run_experiment,
    run_replicate,
    verify_emd,
)


def tiny_toy(**overrides):
    cfg = RunConfig(
        label="tiny",
        kind="toy",
        name="cold_start",
        dim=1,
        n0=60,
        batch=40,
        iterations=2,
        replicates=2,
        seed=7,
        figures=False,
    )
    return cfg.with_overrides(**overrides) if overrides else cfg


def tiny_blr(**overrides):
    cfg = RunConfig(
        label="tiny-blr",
        kind="blr",
        name="logistic",
        dim=22,
        n0=80,
        batch=40,
        iterations=3,
        replicates=1,
        seed=5,
        figures=False,
    )
    return cfg.with_overrides(**overrides) if overrides else cfg


class TestBundles:
    def test_toy_bundle(self):
        bundle = build_bundle(tiny_toy())
        assert bundle.target.dim == 1
        assert bundle.safe_density.can_sample
        assert bundle.true_mean.shape == (1,)
        assert bundle.extra_metrics is None

    def test_diagnostic_bundle_matches_target_and_safe(self):
        cfg = RunConfig(label="d", kind="diagnostic", name="dn-convergence", dim=1)
        bundle = build_bundle(cfg)
        assert bundle.target is bundle.safe_density
        assert isinstance(bundle.target, Gaussian)

    def test_blr_bundle(self):
        bundle = build_bundle(tiny_blr())
        assert isinstance(bundle.target, LogisticPosterior)
        assert bundle.target.dim == 22
        assert bundle.true_mean is None
        # accuracy metric consumes (points, weights) and returns a float
        pts = np.zeros((3, 22))
        out = bundle.extra_metrics(pts, np.full(3, 1.0 / 3.0))
        assert set(out) == {"accuracy"}
        assert 0.0 <= out["accuracy"] <= 1.0

    def test_unknown_kind(self):
        cfg = dataclasses.replace(tiny_toy(), kind="diagnostic")
        build_bundle(cfg)  # fine
        with pytest.raises(ValueError, match="no bundle"):
            build_bundle(_Bogus())


class _Bogus:
    kind = "bogus"


class _Dead:
    """Target with zero density everywhere: every batch degenerates."""

    dim = 1

    def log_density(self, x):
        return np.full(np.atleast_2d(x).shape[0], -np.inf)


class TestReplicates:
    def test_replicate_rng_is_deterministic_and_distinct(self):
        a = replicate_rng(9, 0).standard_normal(4)
        b = replicate_rng(9, 0).standard_normal(4)
        c = replicate_rng(9, 1).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_run_replicate_records(self):
        cfg = tiny_toy()
        rep = run_replicate(cfg, build_bundle(cfg), 0)
        assert not rep.failed
        assert len(rep.records) == cfg.iterations + 1
        assert rep.wall_s > 0.0

    def test_run_replicate_catches_degeneracy(self):
        cfg = tiny_toy()
        bundle = build_bundle(cfg)
        bundle.target = _Dead()
        rep = run_replicate(cfg, bundle, 0)
        assert rep.failed
        assert "DegenerateWeightsError" in rep.error


class TestAggregation:
    def test_toy_aggregate_columns(self):
        cfg = tiny_toy()
        bundle = build_bundle(cfg)
        reps = [run_replicate(cfg, bundle, i) for i in range(2)]
        rows = aggregate_rows(cfg, reps)
        assert len(rows) == cfg.iterations + 1
        for row in rows:
            assert row["n_replicates"] == 2
            assert np.isfinite(row["mean_log_sq_error"])
            assert np.isfinite(row["log_mean_sq_error"])

    def test_failed_replicates_are_excluded(self):
        cfg = tiny_toy()
        bundle = build_bundle(cfg)
        good = run_replicate(cfg, bundle, 0)
        bad = ReplicateResult(index=1, records=[], error="boom")
        rows = aggregate_rows(cfg, [good, bad])
        assert all(row["n_replicates"] == 1 for row in rows)
        quants = eta_quantile_rows(cfg, [good, bad])
        assert len(quants) == cfg.iterations + 1

    def test_eta_quantiles_are_ordered(self):
        cfg = tiny_toy(replicates=3)
        bundle = build_bundle(cfg)
        reps = [run_replicate(cfg, bundle, i) for i in range(3)]
        for row in eta_quantile_rows(cfg, reps):
            assert (
                row["eta_min"]
                <= row["eta_q25"]
                <= row["eta_median"]
                <= row["eta_q75"]
                <= row["eta_max"]
            )


class TestRunExperiment:
    def test_in_memory_run(self):
        result = run_experiment(tiny_toy())
        assert result.out_dir is None
        assert len(result.completed) == 2

    def test_output_bundle(self, tmp_path):
        out = tmp_path / "toy"
        result = run_experiment(tiny_toy(), out_dir=out)
        assert result.out_dir == out
        for name in (
            "trace_rep0.csv",
            "trace_rep1.csv",
            "timing_rep0.csv",
            "timing_rep1.csv",
            "aggregate.csv",
            "eta_quantiles.csv",
            "meta.txt",
        ):
            assert (out / name).is_file(), name
        header = (out / "trace_rep0.csv").read_text().splitlines()[0]
        assert header.split(",")[:8] == [
            "replicate",
            "iteration",
            "eta",
            "lambda",
            "h",
            "n_particles",
            "ess",
            "d_n",
        ]
        assert "est_0" in header and "squared_error" in header
        meta = (out / "meta.txt").read_text()
        assert "replicate 0: ok" in meta and "[experiment]" in meta

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = tiny_toy()
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, out_dir=a)
        run_experiment(cfg, out_dir=b)
        for name in ("trace_rep0.csv", "trace_rep1.csv", "aggregate.csv", "eta_quantiles.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_figures_rendered_when_enabled(self, tmp_path):
        out = tmp_path / "figs"
        run_experiment(tiny_toy(figures=True), out_dir=out)
        assert (out / "fig_error.png").stat().st_size > 0
        assert (out / "fig_eta.png").stat().st_size > 0

    def test_blr_outputs(self, tmp_path):
        out = tmp_path / "blr"
        result = run_experiment(tiny_blr(figures=True), out_dir=out)
        assert len(result.completed) == 1
        header = (out / "trace_rep0.csv").read_text().splitlines()[0]
        assert header.endswith("accuracy")
        agg_header = (out / "aggregate.csv").read_text().splitlines()[0]
        assert "mean_accuracy" in agg_header
        assert (out / "fig_accuracy.png").stat().st_size > 0
        assert "dataset: builtin:waveform-synthetic" in (out / "meta.txt").read_text()

    def test_replicate_count_override(self):
        result = run_experiment(tiny_toy(), replicates=1)
        assert len(result.replicates) == 1

    def test_emd_config_is_rejected(self):
        with pytest.raises(ValueError, match="verify_emd"):
            run_experiment(load_config("emd-lemma2"))

    def test_all_failures_raise(self, monkeypatch):
        cfg = tiny_toy(replicates=1)
        safe = build_bundle(cfg).safe_density
        import srais.experiments as ex

        monkeypatch.setattr(
            ex,
            "build_bundle",
            lambda c: Bundle(target=_Dead(), safe_density=safe, true_mean=None),
        )
        with pytest.raises(ex.SraisError, match="every replicate failed"):
            run_experiment(cfg)


class TestVerifyEmd:
    def test_reports_and_files(self, tmp_path):
        cfg = load_config("emd-lemma2")
        cfg = dataclasses.replace(cfg, grid_points=1024, steps=10, figures=False)
        out = tmp_path / "emd"
        reports = verify_emd(cfg, out_dir=out)
        assert set(reports) == {s.label for s in cfg.schedules}
        for steps in reports.values():
            assert len(steps) == 10
            assert all(r.slack >= -1e-6 for r in steps)
        lines = (out / "emd_report.csv").read_text().splitlines()
        assert lines[0] == "schedule,step,eta,tv,bound,slack"
        assert len(lines) == 1 + 10 * len(cfg.schedules)

    def test_figure_rendered_when_enabled(self, tmp_path):
        cfg = load_config("emd-lemma2")
        cfg = dataclasses.replace(cfg, grid_points=1024, steps=5)
        verify_emd(cfg, out_dir=tmp_path)
        pngs = list(tmp_path.glob("*.png"))
        assert pngs and all(p.stat().st_size > 0 for p in pngs)

    def test_in_memory_only(self):
        cfg = load_config("emd-lemma2")
        cfg = dataclasses.replace(cfg, grid_points=512, steps=3)
        reports = verify_emd(cfg)
        assert len(reports) == 3
