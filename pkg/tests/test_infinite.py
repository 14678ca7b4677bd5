import math

import numpy as np
import pytest

from blockfade import markov
from blockfade.infinite import (
    ServiceTimePMF,
    busy_idle_stats,
    mean_delay,
    mean_queue_length,
    mean_vestige,
    phi,
    queue_pgf,
    stationary_pmf,
    variance_queue_length,
    virtual_overflow,
)
from blockfade.special import poisson_pmf

THETAS = (0.2, 0.5, 0.8)


def matrix_pmf(theta, size=200):
    """Independent oracle: stationary law of the truncated departure chain."""
    return markov.solve_stationary(markov.build_infinite_truncated(theta, size))


def midpoint_vestige(theta, panels=1_000_000):
    x = (np.arange(panels) + 0.5) / panels
    return 0.5 + float(np.mean((x - 1.0) * np.exp(-theta / x)))


class TestQueuePgf:
    def test_normalization_at_one(self):
        for theta in THETAS:
            assert queue_pgf(theta, 1.0) == pytest.approx(1.0, abs=1e-9)

    def test_empty_probability_at_zero(self):
        for theta in THETAS:
            assert queue_pgf(theta, 0.0) == pytest.approx(1.0 - theta, rel=1e-12)

    def test_matches_series(self):
        theta, z = 0.5, 0.5
        pmf = stationary_pmf(theta, max_k=80)
        series = float(np.sum(pmf.probabilities * z ** np.arange(81)))
        assert queue_pgf(theta, z) == pytest.approx(series, abs=1e-8)

    def test_taylor_coefficients_are_pmf(self):
        # numeric Taylor coefficients at 0 via a Chebyshev interpolant
        theta = 0.5
        f = np.vectorize(lambda z: queue_pgf(theta, float(z)))
        cheb = np.polynomial.chebyshev.Chebyshev.interpolate(f, 14, domain=[0, 0.9])
        coeffs = cheb.convert(kind=np.polynomial.Polynomial).coef
        pmf = stationary_pmf(theta, max_k=6).probabilities
        for k in range(6):
            assert coeffs[k] == pytest.approx(pmf[k], abs=1e-5)

    def test_domain(self):
        with pytest.raises(ValueError):
            queue_pgf(1.0, 0.5)
        with pytest.raises(ValueError):
            queue_pgf(0.5, 1.5)


class TestMoments:
    def test_mean_at_half(self):
        assert mean_queue_length(0.5) == pytest.approx(0.75, rel=1e-12)

    def test_mean_vanishes_at_light_load(self):
        assert mean_queue_length(1e-9) < 1e-8

    def test_variance_direct_arithmetic(self):
        expect = (6 - 4.5 + 1.25 - 0.0625) / 3
        assert variance_queue_length(0.5) == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("theta", (0.3, 0.6))
    def test_variance_vs_numeric_pgf_derivatives(self, theta):
        # one-sided finite differences at z=1 (domain ends there)
        h = 1e-3
        f = [queue_pgf(theta, 1.0 - i * h) for i in range(5)]
        d1 = (25 * f[0] - 48 * f[1] + 36 * f[2] - 16 * f[3] + 3 * f[4]) / (12 * h)
        d2 = (35 * f[0] - 104 * f[1] + 114 * f[2] - 56 * f[3] + 11 * f[4]) / (12 * h * h)
        var = d2 + d1 - d1 * d1
        assert var == pytest.approx(variance_queue_length(theta), abs=1e-5)


class TestPhi:
    def test_defined_start(self):
        for theta in THETAS:
            assert phi(theta, -1) == 1.0

    def test_phi0_equals_theta(self):
        for theta in (0.1, 0.3, 0.5, 0.7, 0.9):
            assert phi(theta, 0) == pytest.approx(theta, abs=1e-10)

    def test_tail_against_matrix_oracle(self):
        pi = matrix_pmf(0.5)
        assert phi(0.5, 3) == pytest.approx(float(pi[4:].sum()), abs=1e-7)

    def test_strictly_decreasing_positive(self):
        for theta in THETAS:
            vals = [phi(theta, k) for k in range(-1, 15)]
            assert all(v > 0 for v in vals)
            assert all(a > b for a, b in zip(vals, vals[1:]))


class TestStationaryPmf:
    def test_empty_probability(self):
        for theta in THETAS:
            pmf = stationary_pmf(theta, max_k=10)
            assert pmf.probabilities[0] == pytest.approx(1 - theta, abs=1e-10)

    def test_telescoping_identity(self):
        pmf = stationary_pmf(0.5, max_k=30)
        total = float(pmf.probabilities.sum()) + pmf.tail_mass
        assert total == pytest.approx(1.0, abs=1e-13)

    def test_against_matrix_oracle(self):
        pmf = stationary_pmf(0.5, max_k=30)
        oracle = matrix_pmf(0.5)[:31]
        assert np.abs(pmf.probabilities - oracle).max() < 1e-7

    def test_nonnegative(self):
        for theta in THETAS:
            pmf = stationary_pmf(theta, max_k=40)
            assert np.all(pmf.probabilities >= 0)


class TestBusyIdle:
    def test_mean_busy_at_half(self):
        assert busy_idle_stats(0.5).mean_busy == pytest.approx(1.0, rel=1e-12)

    def test_pgf_normalization_via_lambert_identity(self):
        for theta in (0.05, 0.2, 0.5, 0.8, 0.95):
            assert busy_idle_stats(theta).pgf_at(1.0) == pytest.approx(1.0, rel=1e-11)

    def test_means(self):
        theta = 0.3
        s = busy_idle_stats(theta)
        assert s.mean_busy == pytest.approx(theta / (1 - theta), rel=1e-12)
        assert s.mean_idle == pytest.approx(1 / (math.exp(theta) - 1), rel=1e-12)
        assert s.packets_per_busy == pytest.approx(1 / (1 - theta), rel=1e-12)

    def test_pgf_domain(self):
        with pytest.raises(ValueError):
            busy_idle_stats(0.5).pgf_at(0.0)


class TestVestige:
    def test_zero_load(self):
        assert mean_vestige(0.0) == 0.0

    def test_against_midpoint_oracle(self):
        v = mean_vestige(0.5)
        assert 0.0 < v < 0.5
        assert v == pytest.approx(midpoint_vestige(0.5), abs=1e-8)

    def test_monotone_and_bounded(self):
        grid = [0.1 * i for i in range(1, 10)]
        vals = [mean_vestige(t) for t in grid]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert all(0 < v < 0.5 for v in vals)


class TestMeanDelay:
    def test_vanishes_at_light_load(self):
        assert mean_delay(1e-7).mean_total < 1e-5

    def test_littles_law_split(self):
        for theta in THETAS:
            d = mean_delay(theta)
            assert d.mean_service + d.mean_wait == pytest.approx(
                mean_queue_length(theta), abs=1e-12)

    def test_total_matches_closed_form(self):
        theta = 0.5
        d = mean_delay(theta)
        closed = (0.5 + theta + theta**2 / (2 * (1 - theta))
                  + (midpoint_vestige(theta) - 0.5))
        assert d.mean_total == pytest.approx(closed, abs=1e-8)


class TestVirtualOverflow:
    def test_k0_is_theta(self):
        for theta in THETAS:
            assert virtual_overflow(theta, 0) == pytest.approx(theta, abs=1e-10)

    def test_monotone_decreasing_in_k(self):
        vals = [virtual_overflow(0.5, k) for k in range(12)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_against_matrix_oracle(self):
        pi = matrix_pmf(0.5)
        assert virtual_overflow(0.5, 10) == pytest.approx(
            float(pi[11:].sum()), abs=1e-7)


class TestServiceTimePMF:
    def test_matches_poisson_and_normalizes(self):
        law = ServiceTimePMF(0.5)
        assert law.mean == 0.5
        total = sum(law.pmf(k) for k in range(100))
        assert total == pytest.approx(1.0, abs=1e-12)
        for k in range(8):
            assert law.pmf(k) == pytest.approx(poisson_pmf(k, 0.5), rel=1e-14)

    def test_pgf(self):
        law = ServiceTimePMF(0.4)
        series = sum(law.pmf(k) * 0.7**k for k in range(80))
        assert law.pgf(0.7) == pytest.approx(series, rel=1e-12)
