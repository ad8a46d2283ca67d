"""Departure kernels and threshold-chain stationary measures.

Frozen numeric values were derived with an exact rational-arithmetic
reimplementation (fractions.Fraction chains solved by Gaussian elimination).
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpslb.queueing import (
    ServerParams,
    build_threshold_chain,
    cumulative_mass_increment,
    departure_kernel,
    departure_kernel_row,
    fcfs_stationary_closed_form,
    stationary_distribution,
    threshold_stationary,
    threshold_transition_matrix,
)

server_st = st.builds(
    ServerParams,
    q=st.floats(0.05, 0.95),
    d=st.one_of(st.none(), st.integers(1, 10)),
)


def test_kernel_lps2_exact():
    s = ServerParams(q=0.6, d=2)
    row = departure_kernel_row(s, 5)
    assert row == pytest.approx([0.49, 0.42, 0.09], abs=1e-15)
    assert departure_kernel(s, 5, 2) == pytest.approx(0.09, abs=1e-15)


def test_kernel_ps_exact():
    s = ServerParams.ps(0.6)
    assert departure_kernel_row(s, 3) == pytest.approx(
        [0.512, 0.384, 0.096, 0.008], abs=1e-15
    )


def test_kernel_fcfs_single_departure():
    s = ServerParams.fcfs(0.6)
    assert departure_kernel_row(s, 4) == pytest.approx([0.4, 0.6], abs=1e-15)
    assert departure_kernel(s, 4, 2) == 0.0


def test_kernel_empty_queue_point_mass():
    s = ServerParams(q=0.3, d=4)
    assert departure_kernel_row(s, 0) == pytest.approx([1.0])


@settings(max_examples=150)
@given(server_st, st.integers(0, 60))
def test_kernel_row_is_pmf_with_mean_q(params, n):
    row = np.asarray(departure_kernel_row(params, n))
    assert np.all(row >= 0)
    assert row.sum() == pytest.approx(1.0, abs=1e-12)
    if n > 0:
        # total expected departures equal q regardless of the share limit
        assert row @ np.arange(len(row)) == pytest.approx(params.q, abs=1e-12)


def test_threshold_matrix_fcfs_row():
    s = ServerParams.fcfs(0.6)
    P = threshold_transition_matrix(s, p=0.4, n=1)
    assert P[1] == pytest.approx([0.36, 0.48, 0.16], abs=1e-15)
    assert np.allclose(P.sum(axis=1), 1.0)


def test_threshold_matrix_lps2_row():
    s = ServerParams(q=0.6, d=2)
    P = threshold_transition_matrix(s, p=0.4, n=2)
    assert P[2] == pytest.approx([0.054, 0.288, 0.462, 0.196], abs=1e-15)


def test_threshold_matrix_passive_top_row():
    s = ServerParams(q=0.6, d=2)
    P = threshold_transition_matrix(s, p=0.4, n=1)
    # top state admits nothing: departures only
    assert P[2, 2] == pytest.approx(0.49, abs=1e-15)
    assert P[2, 1] == pytest.approx(0.42, abs=1e-15)
    assert P[2, 0] == pytest.approx(0.09, abs=1e-15)


def test_threshold_stationary_exact_fractions():
    # exact rational solution: [27/65, 6/13, 8/65]
    s = ServerParams.fcfs(0.6)
    pi = threshold_stationary(s, p=0.4, n=1)
    assert pi == pytest.approx([27 / 65, 6 / 13, 8 / 65], abs=1e-14)


@settings(max_examples=80)
@given(server_st, st.floats(0.05, 0.9), st.integers(0, 20))
def test_threshold_stationary_is_distribution(params, p, n):
    pi = threshold_stationary(params, p, n)
    assert len(pi) == n + 2
    assert np.all(pi >= 0)
    assert pi.sum() == pytest.approx(1.0, abs=1e-10)
    # stationarity: pi P = pi
    P = threshold_transition_matrix(params, p, n)
    assert np.allclose(pi @ P, pi, atol=1e-12)


@settings(max_examples=60)
@given(st.floats(0.05, 0.9), st.floats(0.05, 0.9), st.integers(0, 25))
def test_fcfs_closed_form_matches_generic_solver(p, q, n):
    if abs(p - q) < 1e-3:
        return
    s = ServerParams.fcfs(q)
    closed = fcfs_stationary_closed_form(p, q, n)
    P = threshold_transition_matrix(s, p, n)
    numeric = stationary_distribution(P)
    assert np.allclose(closed, numeric, rtol=1e-9, atol=1e-13)


@settings(max_examples=60)
@given(server_st, st.floats(0.05, 0.9), st.integers(1, 30))
def test_cumulative_mass_increment_positive(params, p, n):
    inc = cumulative_mass_increment(params, p, n)
    assert inc > -1e-12
    # active mass of chain n is 1 - pi^n(n+1), so the increment equals
    # pi^{n-1}(n) - pi^n(n+1)
    pi_prev = threshold_stationary(params, p, n - 1)
    pi_cur = threshold_stationary(params, p, n)
    ref = pi_prev[n] - pi_cur[n + 1]
    assert inc == pytest.approx(ref, rel=1e-6, abs=1e-12)


def test_build_threshold_chain_shape():
    s = ServerParams(q=0.5, d=3)
    chain = build_threshold_chain(s, p=0.3, n=4)
    assert chain.matrix.shape == (6, 6)
    assert chain.stationary.shape == (6,)
    assert chain.threshold == 4
    assert chain.arrival_prob == 0.3


def test_server_params_validation():
    with pytest.raises(ValueError):
        ServerParams(q=0.0, d=1)
    with pytest.raises(ValueError):
        ServerParams(q=1.2, d=1)
    with pytest.raises(ValueError):
        ServerParams(q=0.5, d=0)
    assert ServerParams.fcfs(0.5).is_fcfs
    assert not ServerParams.ps(0.5).is_fcfs
