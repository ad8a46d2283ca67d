"""Holding-cost families.  Frozen values derived by exact rational arithmetic."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpslb.costs import (
    LinearCost,
    MeanVarianceCost,
    cost_from_config,
    cost_to_config,
    cost_value,
    cost_values,
    expected_cost,
    validate_monotone,
)
from lpslb.errors import CostMonotonicityError
from lpslb.queueing import ServerParams


def test_linear_cost_values():
    s = ServerParams.fcfs(0.5)
    assert cost_value(LinearCost(2.5), s, 4) == pytest.approx(10.0)
    assert cost_value(LinearCost(1.0), s, 0) == 0.0


def test_mean_variance_exact_value():
    # beta*n + (1-beta) * E[R^2 - theta*R] with R ~ Binomial(2, 0.15) at n=2
    s = ServerParams(q=0.3, d=2)
    spec = MeanVarianceCost(beta=0.001, theta=0.9)
    assert cost_value(spec, s, 2) == pytest.approx(0.076925, abs=1e-12)


def test_mean_variance_zero_at_empty():
    s = ServerParams.ps(0.4)
    assert cost_value(MeanVarianceCost(beta=0.2, theta=0.5), s, 0) == 0.0


def test_expected_cost_frozen():
    # stationary vector [27/65, 6/13, 8/65] under linear cost: E = 46/65
    s = ServerParams.fcfs(0.6)
    dist = np.array([27 / 65, 6 / 13, 8 / 65])
    assert expected_cost(dist, LinearCost(1.0), s) == pytest.approx(46 / 65, abs=1e-14)


@settings(max_examples=60)
@given(
    st.floats(0.05, 0.95),
    st.one_of(st.none(), st.integers(1, 8)),
    st.floats(0.0, 0.05),
    st.floats(0.0, 0.5),
)
def test_mean_variance_monotone_for_small_theta(q, d, beta, theta):
    # for theta below 1 the second-moment penalty grows with the service
    # batch, so the cost is non-decreasing
    s = ServerParams(q=q, d=d)
    validate_monotone(MeanVarianceCost(beta=beta, theta=theta), s, 30)


def test_validate_monotone_rejects_decreasing():
    # large theta makes the penalty negative and initially decreasing
    s = ServerParams(q=0.9, d=None)
    with pytest.raises(CostMonotonicityError):
        validate_monotone(MeanVarianceCost(beta=0.0, theta=5.0), s, 20)


def test_cost_values_vector():
    s = ServerParams.fcfs(0.5)
    np.testing.assert_allclose(cost_values(LinearCost(1.5), s, 3), [0, 1.5, 3.0, 4.5])


def test_config_round_trip():
    for spec in (LinearCost(2.0), MeanVarianceCost(beta=0.001, theta=0.9)):
        assert cost_from_config(cost_to_config(spec)) == spec
    with pytest.raises(ValueError):
        cost_from_config({"type": "cubic"})


def test_invalid_parameters():
    with pytest.raises(ValueError):
        LinearCost(-1.0)
    with pytest.raises(ValueError):
        MeanVarianceCost(beta=1.5, theta=0.5)
    with pytest.raises(ValueError):
        MeanVarianceCost(beta=0.5, theta=-0.1)
