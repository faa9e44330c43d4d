"""Shared helpers for the test suite."""

import numpy as np
import pytest

from srais import BandwidthPolicy, EtaPolicy, LambdaPolicy, Schedule


def quick_schedule(**overrides):
    """A 1-d schedule small enough for unit tests. Override any field."""
    kwargs = dict(
        lambda_policy=LambdaPolicy("constant", 0.5),
        bandwidth_policy=BandwidthPolicy("constant", 0.5),
        eta_policy=EtaPolicy("constant", 1.0),
        dim=1,
        n0=50,
        batch=50,
        iterations=3,
        subsample_rule="sqrt",
    )
    kwargs.update(overrides)
    policies = (
        kwargs.pop("lambda_policy"),
        kwargs.pop("bandwidth_policy"),
        kwargs.pop("eta_policy"),
    )
    return Schedule(*policies, **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
