"""Schedule policies, horizon arithmetic, and the assumption checker."""

import math

import numpy as np
import pytest

from srais import (
    BandwidthPolicy,
    EtaPolicy,
    Gaussian,
    LambdaPolicy,
    Schedule,
    StudentT,
    validate_assumptions,
)
from conftest import quick_schedule


class TestPolicies:
    def test_constant_policies(self):
        s = quick_schedule()
        assert s.lambda_at(0) == 0.5 == s.lambda_at(7)
        assert s.h_at(0) == 0.5 == s.h_at(7)
        assert s.eta_at(0) == 1.0

    def test_power_lambda_counts_passes_from_one(self):
        s = quick_schedule(lambda_policy=LambdaPolicy("power", 1.0, 0.5), iterations=299)
        assert s.lambda_at(0) == 1.0
        assert s.lambda_at(3) == pytest.approx(0.5, abs=1e-15)  # 1 / sqrt(4)
        assert s.lambda_at(299) == pytest.approx(1.0 / math.sqrt(300), rel=1e-14)

    def test_power_bandwidth_uses_kde_rate(self):
        s = quick_schedule(bandwidth_policy=BandwidthPolicy("power", 2.0), dim=4)
        # exponent is 1 / (4 + dim) = 1/8
        assert s.h_at(0) == 2.0
        assert s.h_at(255) == pytest.approx(2.0 * 256.0 ** (-1.0 / 8.0), rel=1e-14)

    def test_kde_power_tracks_subsample_size(self):
        s = quick_schedule(
            lambda_policy=LambdaPolicy("kde_power", 0.25),
            bandwidth_policy=BandwidthPolicy("kde_power", 0.12),
            dim=16,
            n0=4000,
            batch=1800,
            iterations=20,
        )
        for p in (0, 2, 20):
            ell = math.isqrt(4000 + p * 1800)
            assert s.subsample_size(s.store_size(p)) == ell
            assert s.lambda_at(p) == pytest.approx(0.25 * ell ** (-2.0 / 20.0), rel=1e-14)
            assert s.h_at(p) == pytest.approx(0.12 * ell ** (-1.0 / 20.0), rel=1e-14)

    def test_store_and_subsample_sizes(self):
        s = quick_schedule(n0=400, batch=100)
        assert s.store_size(0) == 400
        assert s.store_size(3) == 700
        assert s.subsample_size(400) == 20
        assert s.subsample_size(401) == 20  # floor of the root
        none = quick_schedule(subsample_rule="none")
        assert none.subsample_size(400) == 400

    def test_eta_sequence_and_adaptive(self):
        seq = quick_schedule(
            eta_policy=EtaPolicy("sequence", values=(0.2, 0.4, 0.6, 0.8)), iterations=3
        )
        assert [seq.eta_at(p) for p in range(4)] == [0.2, 0.4, 0.6, 0.8]
        adaptive = quick_schedule(eta_policy=EtaPolicy("rar", alpha=0.5))
        assert adaptive.eta_at(0) is None

    def test_horizon_arrays(self):
        s = quick_schedule(
            lambda_policy=LambdaPolicy("power", 0.5, 1.0),
            eta_policy=EtaPolicy("rar", alpha=0.5),
            iterations=5,
        )
        lam, h, eta = s.horizon()
        assert lam.shape == h.shape == eta.shape == (6,)
        assert np.all(np.diff(lam) < 0)
        assert np.all(np.isnan(eta))


class TestScheduleValidation:
    def test_rejects_bad_policies(self):
        with pytest.raises(ValueError, match="unknown lambda policy"):
            quick_schedule(lambda_policy=LambdaPolicy("bogus"))
        with pytest.raises(ValueError, match="unknown bandwidth policy"):
            quick_schedule(bandwidth_policy=BandwidthPolicy("bogus"))
        with pytest.raises(ValueError, match="unknown eta policy"):
            quick_schedule(eta_policy=EtaPolicy("bogus"))

    def test_rejects_out_of_range_values(self):
        with pytest.raises(ValueError, match="lambda not in"):
            quick_schedule(lambda_policy=LambdaPolicy("constant", 0.0))
        with pytest.raises(ValueError, match="lambda not in"):
            quick_schedule(lambda_policy=LambdaPolicy("constant", 1.5))
        with pytest.raises(ValueError, match="bandwidth must be positive"):
            quick_schedule(bandwidth_policy=BandwidthPolicy("constant", 0.0))
        with pytest.raises(ValueError, match="eta not in"):
            quick_schedule(eta_policy=EtaPolicy("constant", 1.5))
        with pytest.raises(ValueError, match="alpha not in"):
            quick_schedule(eta_policy=EtaPolicy("rar", alpha=2.0))
        with pytest.raises(ValueError, match="exponent must be nonnegative"):
            quick_schedule(lambda_policy=LambdaPolicy("power", 0.5, -1.0))

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="dim"):
            quick_schedule(dim=0)
        with pytest.raises(ValueError, match="batch size"):
            quick_schedule(batch=0)
        with pytest.raises(ValueError, match="iterations"):
            quick_schedule(iterations=-1)
        with pytest.raises(ValueError, match="subsample rule"):
            quick_schedule(subsample_rule="all")

    def test_eta_sequence_must_cover_the_horizon(self):
        with pytest.raises(ValueError, match="needs 4"):
            quick_schedule(eta_policy=EtaPolicy("sequence", values=(0.5, 0.5)), iterations=3)
        with pytest.raises(ValueError, match="lie in"):
            quick_schedule(
                eta_policy=EtaPolicy("sequence", values=(0.5, 0.5, 0.5, 1.5)), iterations=3
            )

    def test_problems_are_aggregated(self):
        with pytest.raises(ValueError) as err:
            quick_schedule(lambda_policy=LambdaPolicy("constant", 0.0), dim=0)
        assert "lambda" in str(err.value) and "dim" in str(err.value)


def _levels(report):
    return {c.name: c.level for c in report.checks}


class TestValidateAssumptions:
    def test_decaying_schedules_are_clean(self):
        s = quick_schedule(
            lambda_policy=LambdaPolicy("power", 1.0, 0.5),
            bandwidth_policy=BandwidthPolicy("power", 0.3),
            eta_policy=EtaPolicy("rar", alpha=0.2),
            iterations=299,
        )
        report = validate_assumptions(s)
        assert not report.errors
        levels = _levels(report)
        assert levels["lambda-limit"] == "ok"
        assert levels["h-limit"] == "ok"
        assert levels["lambda-rate"] == "ok"
        assert levels["eta-limit"] == "ok"

    def test_constant_schedules_warn_but_pass(self):
        report = validate_assumptions(quick_schedule(iterations=20))
        assert not report.errors
        levels = _levels(report)
        assert levels["lambda-limit"] == "warning"
        assert levels["h-limit"] == "warning"

    def test_constant_eta_below_one_warns(self):
        s = quick_schedule(eta_policy=EtaPolicy("constant", 0.5), iterations=20)
        levels = _levels(validate_assumptions(s))
        assert levels["eta-limit"] == "warning"

    def test_safety_ratio_is_probed(self):
        s = quick_schedule(iterations=5)
        target = Gaussian([0.0], 1.0)
        safe = StudentT([0.0], [1.0], 3.0)
        report = validate_assumptions(
            s, target=target, safe_density=safe, rng=np.random.default_rng(1)
        )
        assert report.empirical_safe_ratio is not None
        assert 0.0 < report.empirical_safe_ratio < 1.5
        assert _levels(report)["safe-ratio"] == "ok"

    def test_summary_mentions_every_check(self):
        report = validate_assumptions(quick_schedule(iterations=4))
        text = report.summary()
        for check in report.checks:
            assert check.name in text
