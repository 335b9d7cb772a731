import math

import numpy as np
import pytest
from mpmath import mp, mpf

from avgdist.categorical import SupportGrid
from avgdist.schedules import (
    TauAccumulator,
    constant_schedule,
    iid_constants,
    markov_two_phase_info,
    phase_exponent,
    phase_kappa,
    polynomial_schedule,
    rate_guide,
    tail_sum,
    tau,
    threshold_iteration,
    two_phase_iid_schedule,
    two_phase_markov_schedule,
)


def holds_at(k: int, eps: float, kappa: float, dps: int = 120) -> bool:
    """Exact evaluation of the threshold inequality at integer k."""
    with mp.workdps(dps):
        return mp.power(k + 1, mpf(eps)) <= mpf(kappa) * mp.log(k + 1)


class TestStepSize:
    def test_polynomial_first_step(self):
        assert polynomial_schedule(1.0).step_size(1) == pytest.approx(0.5)

    def test_two_phase_iid_branches(self):
        sched = two_phase_iid_schedule(0.75, threshold=100)
        assert sched.step_size(50) == pytest.approx((51.0) ** -0.75)
        assert sched.step_size(200) == pytest.approx((201.0) ** (-2.0 / 3.0))

    def test_two_phase_markov_continuity_at_override_threshold(self):
        sched = two_phase_markov_schedule(0.9, threshold=500)
        assert abs(sched.step_size(501) - sched.step_size(500)) <= 1e-12

    def test_two_phase_markov_continuity_at_analytic_threshold(self):
        sched = two_phase_markov_schedule(0.9)
        T = sched.threshold
        assert abs(sched.step_size(T + 1) - sched.step_size(T)) <= 1e-12

    def test_all_schedules_stay_in_unit_interval(self):
        scheds = [
            constant_schedule(0.5),
            polynomial_schedule(0.7),
            two_phase_iid_schedule(0.75, threshold=1000),
            two_phase_markov_schedule(0.85, threshold=1000),
        ]
        ks = np.unique(np.logspace(0, 6, 200).astype(int))
        for sched in scheds:
            for k in ks:
                a = sched.step_size(int(k))
                assert 0.0 < a < 1.0

    def test_inverse_increment_bound_in_phase_interiors(self):
        # alpha_k^{-1} - alpha_{k-1}^{-1} <= 1, the induction step behind the
        # averaged-noise bound
        for sched in (
            two_phase_iid_schedule(0.75, threshold=10_000),
            two_phase_markov_schedule(0.85, threshold=10_000),
        ):
            for k in list(range(2, 2000)) + list(range(10_002, 12_000)):
                inc = 1.0 / sched.step_size(k) - 1.0 / sched.step_size(k - 1)
                assert inc <= 1.0 + 1e-12

    def test_markov_two_phase_globally_nonincreasing(self):
        sched = two_phase_markov_schedule(0.9, threshold=777)
        vals = [sched.step_size(k) for k in range(1, 3000)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            constant_schedule(1.0)
        with pytest.raises(ValueError):
            polynomial_schedule(0.0)
        with pytest.raises(ValueError):
            two_phase_iid_schedule(0.5)
        with pytest.raises(ValueError):
            two_phase_markov_schedule(0.75)


class TestTau:
    def test_constant_half(self):
        assert tau(constant_schedule(0.5), 4) == pytest.approx(1.0)

    def test_polynomial_first_term(self):
        assert tau(polynomial_schedule(1.0), 1) == pytest.approx(0.25)

    def test_increment_identity(self):
        sched = polynomial_schedule(0.8)
        for k in (2, 5, 17, 100):
            a = sched.step_size(k)
            assert tau(sched, k) - tau(sched, k - 1) == pytest.approx(a * (1 - a), abs=1e-15)

    def test_strictly_increasing(self):
        acc = TauAccumulator(two_phase_markov_schedule(0.85, threshold=50))
        prev = 0.0
        for k in range(1, 200):
            cur = acc.advance_to(k)
            assert cur > prev
            prev = cur

    def test_markov_tail_growth_sandwich(self):
        # past the threshold tau grows like (k+1)^(1/5); checked on an
        # override schedule whose tail is actually reachable
        sched = two_phase_markov_schedule(0.85, threshold=100)
        acc = TauAccumulator(sched)
        ks = np.unique(np.logspace(2.1, 6, 25).astype(int))
        ratios = []
        for k in ks:
            ratios.append(acc.advance_to(int(k)) / (k + 1.0) ** 0.2)
        assert max(ratios) / min(ratios) < 3.0


class TestThreshold:
    def test_epsilon_and_kappa_for_three_quarters(self):
        eps = phase_exponent(0.75, "iid")
        assert eps == 1.0 / 24.0
        assert phase_kappa(eps) == pytest.approx(2.0 ** (1.0 / 24.0) / math.log(2.0), abs=1e-15)

    def test_markov_epsilon_formula(self):
        assert phase_exponent(0.9, "markov") == pytest.approx(0.05, abs=1e-15)

    def test_equality_at_first_iteration(self):
        for a1, regime in ((0.75, "iid"), (0.9, "markov")):
            eps = phase_exponent(a1, regime)
            kappa = phase_kappa(eps)
            assert 2.0 ** eps == pytest.approx(kappa * math.log(2.0), abs=1e-14)
            assert threshold_iteration(a1, regime) >= 1

    def test_boundary_is_exact(self):
        # the inequality holds through T and first fails at T + 1
        rng = np.random.default_rng(0)
        cases = [(float(a1), "iid") for a1 in rng.uniform(0.70, 0.99, size=20)]
        cases += [(float(a1), "markov") for a1 in rng.uniform(0.81, 0.99, size=20)]
        for a1, regime in cases:
            eps = phase_exponent(a1, regime)
            kappa = phase_kappa(eps)
            T = threshold_iteration(a1, regime)
            digits = int(math.log10(T)) + 40
            assert holds_at(T, eps, kappa, dps=digits)
            assert not holds_at(T + 1, eps, kappa, dps=digits)

    def test_prefix_scan_never_fails_early(self):
        # a literal scan over the reachable prefix agrees that the
        # inequality keeps holding (the true crossing is far beyond)
        for a1, regime in ((0.75, "iid"), (0.97, "iid"), (0.85, "markov")):
            eps = phase_exponent(a1, regime)
            kappa = phase_kappa(eps)
            ks = np.arange(1, 2_000_001, dtype=float)
            assert np.all((ks + 1.0) ** eps <= kappa * np.log(ks + 1.0) + 1e-12)
            assert threshold_iteration(a1, regime) > 2_000_000

    def test_threshold_grows_as_exponent_shrinks(self):
        t_big = threshold_iteration(0.99, "iid")
        t_small = threshold_iteration(0.72, "iid")
        assert t_small > t_big


class TestConstants:
    @pytest.mark.parametrize("a1", [0.70, 0.75, 0.85, 0.95])
    def test_all_fields_positive(self, a1):
        grid = SupportGrid.from_range(-2.0, 0.6, 51)
        c = iid_constants(a1, grid, 5)
        for name in ("epsilon", "kappa", "D", "M2", "S", "omega", "nu", "eta_c", "R_const", "K", "B_T", "C_iid"):
            assert getattr(c, name) > 0.0, name

    def test_kappa_at_least_one(self):
        for a1 in (0.7, 0.8, 0.99):
            c = iid_constants(a1, SupportGrid.from_range(0.0, 1.0, 11), 3)
            assert c.kappa >= 1.0

    def test_shared_epsilon_kappa_with_threshold(self):
        grid = SupportGrid.from_range(-1.0, 1.0, 21)
        c = iid_constants(0.75, grid, 4)
        assert c.epsilon == phase_exponent(0.75, "iid")
        assert c.kappa == phase_kappa(c.epsilon)

    def test_tail_sum_within_partial_sum_bracket(self):
        # S lies between the partial sum plus integral tail bounds
        for a1 in (0.75, 0.9):
            s = 1.5 * a1
            t0 = 10_000_000
            partial = float(np.sum((np.arange(1, t0 + 1) + 1.0) ** (-s)))
            upper_tail = (t0 + 1.0) ** (1.0 - s) / (s - 1.0)
            lower_tail = (t0 + 2.0) ** (1.0 - s) / (s - 1.0)
            S = tail_sum(a1)
            assert partial + lower_tail - 1e-9 <= S <= partial + upper_tail + 1e-9

    def test_diameter_and_m2(self):
        grid = SupportGrid.from_range(-2.0, 0.6, 51)
        c = iid_constants(0.8, grid, 5)
        assert c.D == pytest.approx(math.sqrt(2.6))
        assert c.M2 == pytest.approx(math.sqrt(5) * c.D)

    def test_markov_info_fields(self):
        info = markov_two_phase_info(0.9)
        assert info["epsilon"] == pytest.approx(0.05)
        assert info["kappa"] >= 1.0
        assert info["threshold"] >= 1
        assert info["gamma"] > 0.0

    def test_out_of_range_rejected(self):
        grid = SupportGrid.from_range(0.0, 1.0, 5)
        with pytest.raises(ValueError):
            iid_constants(0.5, grid, 3)
        with pytest.raises(ValueError):
            markov_two_phase_info(0.79)


class TestRateGuide:
    def test_two_phase_min_prefers_polynomial_branch_early(self):
        # while the threshold inequality holds the polynomial slack is the min
        eps = phase_exponent(0.75, "iid")
        kappa = phase_kappa(eps)
        k = 1000
        guide = rate_guide("iid-two-phase", 0.75, k)
        assert guide == pytest.approx((k + 1.0) ** (-1.0 / 6.0) * (k + 1.0) ** eps)
        assert (k + 1.0) ** eps < kappa * math.log(k + 1.0)

    def test_fixed_exponent_value(self):
        a = 2.0 / 3.0 + 0.1
        assert rate_guide("iid", a, 99) == pytest.approx(100.0 ** (-(1.0 - a) / 2.0))

    def test_monotone_nonincreasing(self):
        ks = np.arange(2, 1_000_001)
        for regime, a in (
            ("iid", 0.75),
            ("markov", 0.85),
            ("iid-two-phase", 0.75),
            ("markov-two-phase", 0.85),
        ):
            vals = rate_guide(regime, a, ks)
            assert np.all(np.diff(vals) <= 1e-15)

    def test_invalid_regime_rejected(self):
        with pytest.raises(ValueError):
            rate_guide("discounted", 0.9, 10)
        with pytest.raises(ValueError):
            rate_guide("iid", 0.5, 10)
