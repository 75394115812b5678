import math

import numpy as np
import pytest

from tanglesim import (
    DegenerateDelayError,
    ExponentialDelay,
    FixedDelay,
    UniformDelay,
    predict_mean_tips,
    solve_stationary,
    stationary_profile,
)
from tanglesim.delays import DelayModel

# root of the exponential-delay equilibrium equation at mu = 0.2, found by
# a brute-force scan of F(l) - l over [5, 20] at step 1e-4 plus bisection
# (single sign change between 6.4192 and 6.4193)
EXP_ROOT_SCAN = 6.419239877717805


class TestProfile:
    def test_unit_at_age_zero(self):
        for delay in (FixedDelay(5.0), ExponentialDelay(0.2), UniformDelay(1, 11)):
            assert stationary_profile(delay, 3.7, 0.0) == 1.0

    def test_fixed_flat_below_delay(self):
        assert stationary_profile(FixedDelay(5.0), 10.0, 5.0) == 1.0

    def test_fixed_exponential_tail(self):
        # e^{-2 (v - h)/l} at v=10, h=5, l=10
        got = stationary_profile(FixedDelay(5.0), 10.0, 10.0)
        assert got == pytest.approx(0.36787944117144233, abs=1e-15)

    def test_nonincreasing(self):
        v = np.linspace(0, 100, 2000)
        for delay in (FixedDelay(5.0), ExponentialDelay(0.2), UniformDelay(1, 11)):
            g = stationary_profile(delay, 9.0, v)
            assert np.all(np.diff(g) <= 1e-15)

    def test_nonpositive_count_rejected(self):
        with pytest.raises(ValueError):
            stationary_profile(FixedDelay(5.0), 0.0, 1.0)


class TestSolve:
    @pytest.mark.parametrize("h", [0.1, 1.0, 5.0, 50.0])
    def test_fixed_delay_closed_form(self, h):
        result = solve_stationary(FixedDelay(h))
        assert abs(result.scaled_tips - 2.0 * h) <= 1e-9
        assert result.iterations == 0

    def test_exponential_matches_reference_ratio(self):
        result = solve_stationary(ExponentialDelay(0.2))
        assert abs(result.scaled_tips - 1.2839 * 5.0) <= 1e-3

    def test_exponential_matches_scan_oracle(self):
        result = solve_stationary(ExponentialDelay(0.2))
        assert abs(result.scaled_tips - EXP_ROOT_SCAN) <= 2e-4

    def test_exponential_scan_bracket_reproduced(self):
        # independent check: dense-grid trapezoid of the profile (no quad,
        # no solver code) must flip sign inside the scan bracket
        mu = 0.2
        v = np.arange(0.0, 200.0, 5e-4)
        a = v + np.expm1(-mu * v) / mu
        def gap(l):
            return np.trapezoid(np.exp(-(2.0 / l) * a), v) - l
        assert gap(6.4192) > 0 > gap(6.4193)

    def test_uniform_matches_reference_value(self):
        result = solve_stationary(UniformDelay(1.0, 11.0))
        assert abs(result.scaled_tips - 10.69) <= 1e-2

    def test_uniform_matches_specialized_equation(self):
        # same root from the width-parametrized form of the equilibrium
        # equation: l = h0 + (l/2) e^{-b^2/l} + b * int_0^b e^{-w^2/l} dw
        h0, h1 = 1.0, 11.0
        b = math.sqrt(h1 - h0)

        def gap(l):
            integral = 0.5 * math.sqrt(math.pi * l) * math.erf(b / math.sqrt(l))
            return h0 + 0.5 * l * math.exp(-b * b / l) + b * integral - l

        lo, hi = 6.0, 24.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if gap(mid) > 0 else (lo, mid)
        root = 0.5 * (lo + hi)
        got = solve_stationary(UniformDelay(h0, h1)).scaled_tips
        assert abs(got - root) < 1e-6

    @pytest.mark.parametrize("delay", [
        FixedDelay(5.0), ExponentialDelay(0.2), UniformDelay(1.0, 11.0),
    ])
    def test_residual_below_tolerance(self, delay):
        result = solve_stationary(delay, tol=1e-9)
        assert result.residual < 1e-9

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_scale_covariance(self, c):
        # the equilibrium equation is homogeneous in time units
        pairs = [
            (ExponentialDelay(0.2), ExponentialDelay(0.2 / c)),
            (UniformDelay(1.0, 11.0), UniformDelay(c * 1.0, c * 11.0)),
            (FixedDelay(5.0), FixedDelay(5.0 * c)),
        ]
        for base, scaled in pairs:
            l0 = solve_stationary(base).scaled_tips
            l1 = solve_stationary(scaled).scaled_tips
            assert l1 == pytest.approx(c * l0, rel=1e-6)

    def test_equilibrium_ordering_of_reference_cases(self):
        exp = solve_stationary(ExponentialDelay(0.2)).scaled_tips
        fix = solve_stationary(FixedDelay(5.0)).scaled_tips
        uni = solve_stationary(UniformDelay(1.0, 11.0)).scaled_tips
        assert exp < fix <= uni

    def test_profile_integral_self_consistency(self):
        result = solve_stationary(UniformDelay(1.0, 11.0))
        v = np.linspace(0, 400, 400_001)
        mass = np.trapezoid(result.profile(v), v)
        assert mass == pytest.approx(result.scaled_tips, abs=1e-5)

    def test_bad_tolerance_rejected(self):
        with pytest.raises(ValueError):
            solve_stationary(FixedDelay(5.0), tol=0.0)


class _TwoPointDelay(DelayModel):
    """Mass 0.9 just above zero and 0.1 at 10: equilibrium below the mean."""

    def mean(self):
        return 0.9 * 0.001 + 0.1 * 10.0

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        out = np.where(v >= 10.0, 1.0, np.where(v >= 0.001, 0.9, 0.0))
        return float(out) if out.ndim == 0 else out

    def integrated_cdf(self, v):
        v = np.asarray(v, dtype=float)
        out = 0.9 * np.maximum(0.0, v - 0.001) + 0.1 * np.maximum(0.0, v - 10.0)
        return float(out) if out.ndim == 0 else out

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        out = np.where(u < 0.9, 0.001, 10.0)
        return float(out) if out.ndim == 0 else out

    def support(self):
        return (0.001, 10.0)

    def to_config(self):
        return {"type": "two-point"}


class _ZeroMeanDelay(_TwoPointDelay):
    def mean(self):
        return 0.0


class TestEdgeCases:
    def test_custom_delay_bracket_widens_downward(self):
        # most of the mass attaches almost immediately, so the root sits
        # below the mean and the initial bracket must widen
        result = solve_stationary(_TwoPointDelay(), tol=1e-8)
        l = result.scaled_tips
        assert 0 < l < _TwoPointDelay().mean()
        assert result.residual < 1e-7

    def test_zero_mean_delay_rejected(self):
        with pytest.raises(DegenerateDelayError):
            solve_stationary(_ZeroMeanDelay())


class TestPrediction:
    def test_fixed_case(self):
        assert predict_mean_tips(FixedDelay(5.0), 20.0) == pytest.approx(200.0)

    def test_exponential_case(self):
        # 1.2839 * 5 * 20 = 128.39
        assert predict_mean_tips(ExponentialDelay(0.2), 20.0) == pytest.approx(
            128.39, abs=0.02
        )

    def test_uniform_case(self):
        # 1.782 * 6 * 20 = 213.8
        assert predict_mean_tips(UniformDelay(1.0, 11.0), 20.0) == pytest.approx(
            213.8, abs=0.2
        )

    def test_bad_rate_rejected(self):
        with pytest.raises(ValueError):
            predict_mean_tips(FixedDelay(5.0), 0.0)
