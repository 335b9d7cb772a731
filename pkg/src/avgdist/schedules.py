"""Step-size schedules, two-phase thresholds, and the explicit constant stack.

Two families of schedules drive the recursions. Fixed-exponent schedules
use alpha_k = (k+1)^(-a). Two-phase schedules run a supercritical exponent
a1 up to a threshold iteration T and then switch to the critical tail
exponent of their regime (2/3 under independent sampling, 4/5 along a
chain trajectory); the Markov variant carries a matching factor gamma_T
that makes the switch continuous.

The threshold T is defined as the largest integer such that

    (k+1)^eps <= kappa * log(k+1)   for all 1 <= k <= T,

with kappa = 2^eps / log 2 chosen so that equality holds at k = 1. The
ratio (k+1)^eps / log(k+1) dips below kappa immediately after k = 1 and
only climbs back at a crossing far beyond exp(1/eps), so the first
failure sits at that crossing. For every admissible exponent the crossing
is far too large to reach by literal scanning (10^9 and beyond), so T is
located by solving the crossing equation in high precision and then
verifying the defining inequality at the neighbouring integers exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpf
from scipy.special import zeta as hurwitz_zeta

IID_RANGE = (2.0 / 3.0, 1.0)
MARKOV_RANGE = (4.0 / 5.0, 1.0)
IID_TAIL = 2.0 / 3.0
MARKOV_TAIL = 4.0 / 5.0


def phase_exponent(a1: float, regime: str) -> float:
    """Slack exponent eps of the two-phase threshold inequality."""
    if regime == "iid":
        lo, hi = IID_RANGE
        if not lo < a1 < hi:
            raise ValueError(f"iid two-phase exponent must lie in ({lo:.6g}, {hi:.6g}) open, got {a1}")
        return (3.0 * a1 - 2.0) / 6.0
    if regime == "markov":
        lo, hi = MARKOV_RANGE
        if not lo < a1 < hi:
            raise ValueError(f"markov two-phase exponent must lie in ({lo:.6g}, {hi:.6g}) open, got {a1}")
        return (5.0 * a1 - 4.0) / 10.0
    raise ValueError(f"unknown regime {regime!r}")


def phase_kappa(eps: float) -> float:
    """kappa = 2^eps / log 2; equality holds at k = 1 by construction."""
    return 2.0 ** eps / math.log(2.0)


def threshold_iteration(a1: float, regime: str) -> int:
    """Largest integer T through which (k+1)^eps <= kappa log(k+1) holds.

    The crossing x* of x^eps = kappa log x beyond exp(1/eps) satisfies
    t - log t = log(kappa/eps) with t = eps log x. It is found by bisection
    at a working precision wide enough to pin the neighbouring integers,
    and the result is confirmed against the defining inequality evaluated
    in exact integer arithmetic.
    """
    eps = phase_exponent(a1, regime)
    kappa = phase_kappa(eps)
    c = math.log(kappa / eps)
    # float-level solve of t - log t = c to size the working precision
    t = max(c + 1.0, 2.0)
    for _ in range(80):
        t = c + math.log(t)
    digits = int(t / eps / math.log(10.0)) + 40
    with mp.workdps(digits):
        e_mp = mpf(eps)
        k_mp = mpf(kappa)
        c_mp = mp.log(k_mp / e_mp)
        lo, hi = mpf(1.0) + mpf("1e-9"), mpf(t + 10.0)
        f = lambda x: x - mp.log(x) - c_mp
        if f(hi) < 0:
            raise RuntimeError("two-phase threshold bracketing failed")
        for _ in range(40 + int(3.5 * digits)):
            mid = (lo + hi) / 2
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        x_star = mp.e ** (((lo + hi) / 2) / e_mp)
        T = int(mp.floor(x_star)) - 1

        def holds(k: int) -> bool:
            return mp.power(k + 1, e_mp) <= k_mp * mp.log(k + 1)

        while T >= 1 and not holds(T):
            T -= 1
        while holds(T + 1):
            T += 1
    if T < 1:
        raise RuntimeError("two-phase threshold collapsed below 1")
    return T


def markov_tail_factor(a1: float, threshold: int) -> float:
    """gamma_T = (T+1)^(-a1) (T+2)^(4/5), evaluated in logs for huge T."""
    return math.exp(-a1 * math.log(threshold + 1) + MARKOV_TAIL * math.log(threshold + 2))


@dataclass(frozen=True)
class StepSchedule:
    """One of: constant, polynomial, two_phase_iid, two_phase_markov.

    `threshold` and `gamma` are derived for the two-phase kinds. Passing an
    explicit threshold overrides the analytic value; the override exists so
    the tail phase can be exercised directly, since the analytic threshold
    exceeds any reachable iteration count.
    """

    kind: str
    alpha: float | None = None
    a: float | None = None
    threshold: int | None = None
    gamma: float | None = None

    def step_size(self, k: int) -> float:
        """alpha_k for iteration index k >= 1; always in (0, 1)."""
        if k < 1:
            raise ValueError(f"iteration index must be >= 1, got {k}")
        if self.kind == "constant":
            return self.alpha
        if self.kind == "polynomial":
            return (k + 1.0) ** (-self.a)
        if self.kind == "two_phase_iid":
            if k <= self.threshold:
                return math.exp(-self.a * math.log(k + 1))
            return math.exp(-IID_TAIL * math.log(k + 1))
        if self.kind == "two_phase_markov":
            if k <= self.threshold:
                return math.exp(-self.a * math.log(k + 1))
            v = self.gamma * math.exp(-MARKOV_TAIL * math.log(k + 1))
            if k == self.threshold + 1:
                # gamma makes the phases equal here up to rounding; clamp so
                # the schedule is non-increasing without a one-ulp seam
                v = min(v, math.exp(-self.a * math.log(k)))
            return v
        raise ValueError(f"unknown schedule kind {self.kind!r}")


def constant_schedule(alpha: float) -> StepSchedule:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"constant step size must lie in (0, 1), got {alpha}")
    return StepSchedule("constant", alpha=alpha)


def polynomial_schedule(a: float) -> StepSchedule:
    if not 0.0 < a <= 1.0:
        raise ValueError(f"polynomial exponent must lie in (0, 1], got {a}")
    return StepSchedule("polynomial", a=a)


def two_phase_iid_schedule(a1: float, threshold: int | None = None) -> StepSchedule:
    phase_exponent(a1, "iid")  # range check
    if threshold is None:
        threshold = threshold_iteration(a1, "iid")
    return StepSchedule("two_phase_iid", a=a1, threshold=threshold)


def two_phase_markov_schedule(a1: float, threshold: int | None = None) -> StepSchedule:
    phase_exponent(a1, "markov")  # range check
    if threshold is None:
        threshold = threshold_iteration(a1, "markov")
    return StepSchedule(
        "two_phase_markov", a=a1, threshold=threshold, gamma=markov_tail_factor(a1, threshold)
    )


class TauAccumulator:
    """Incremental tau_k = sum_{t=1..k} alpha_t (1 - alpha_t); strictly increasing."""

    def __init__(self, schedule: StepSchedule):
        self.schedule = schedule
        self._k = 0
        self._value = 0.0

    def advance_to(self, k: int) -> float:
        if k < self._k:
            raise ValueError("tau accumulator cannot move backwards")
        while self._k < k:
            self._k += 1
            a = self.schedule.step_size(self._k)
            self._value += a * (1.0 - a)
        return self._value


def tau(schedule: StepSchedule, k: int) -> float:
    """tau_k computed from scratch; use TauAccumulator inside loops."""
    return TauAccumulator(schedule).advance_to(k)


# ---------------------------------------------------------------------------
# explicit constant stack for the two-phase residual bound (iid regime)


@dataclass(frozen=True)
class TwoPhaseConstants:
    """Every displayed constant of the two-phase residual bound.

    D is the metric diameter sqrt(theta_d - theta_1) of the coefficient
    space, M2 = sqrt(m) D bounds the averaged-noise second moment, S is
    the tail sum over (t+1)^(-3 a1 / 2), and C_iid is the final constant
    max{K + 6 M2, K B_T + 2 M2 sqrt(6/pi) + 6 M2}.
    """

    epsilon: float
    kappa: float
    D: float
    M2: float
    S: float
    omega: float
    nu: float
    eta_c: float
    R_const: float
    K: float
    B_T: float
    C_iid: float


def tail_sum(a1: float) -> float:
    """S_{3 a1 / 2} = sum_{t >= 1} (t+1)^(-3 a1 / 2), an off-by-one zeta value."""
    s = 1.5 * a1
    if s <= 1.0:
        raise ValueError("tail sum diverges for 3 a1 / 2 <= 1")
    return float(hurwitz_zeta(s, 2.0))


def iid_constants(a1: float, grid, num_states: int, threshold: int | None = None) -> TwoPhaseConstants:
    eps = phase_exponent(a1, "iid")
    kappa = phase_kappa(eps)
    if threshold is None:
        threshold = threshold_iteration(a1, "iid")
    D = grid.diameter_metric
    M2 = math.sqrt(num_states) * D
    S = tail_sum(a1)
    omega = (1.0 - 2.0 ** (-a1)) / 2.0
    nu = (1.0 - 2.0 ** (-a1)) / (1.0 - a1)
    eta_c = 1.0 - (3.0 / 4.0) ** (1.0 - a1)
    R_const = (4.0 / 3.0) ** a1 / (1.0 - 4.0 ** (-a1))
    K = D / math.sqrt(math.pi * omega) + (2.0 * M2 / math.sqrt(math.pi)) * (
        S / math.sqrt(nu * eta_c) + 2.0 ** (1.0 + a1 / 2.0) * R_const / math.sqrt(1.0 - a1)
    )
    B_T = max(2.0 / math.sqrt(3.0), 8.0 ** (1.0 / 6.0) * math.exp(eps * math.log(threshold + 2)))
    C_iid = max(K + 6.0 * M2, K * B_T + 2.0 * M2 * math.sqrt(6.0) / math.sqrt(math.pi) + 6.0 * M2)
    return TwoPhaseConstants(eps, kappa, D, M2, S, omega, nu, eta_c, R_const, K, B_T, C_iid)


def markov_two_phase_info(a1: float, threshold: int | None = None) -> dict:
    """eps, kappa, T, gamma_T for the Markov regime; the final constant of its
    residual bound depends on an uncomputed chain-specific quantity, so only
    the schedule-level values are materialized."""
    eps = phase_exponent(a1, "markov")
    if threshold is None:
        threshold = threshold_iteration(a1, "markov")
    return {
        "epsilon": eps,
        "kappa": phase_kappa(eps),
        "threshold": threshold,
        "gamma": markov_tail_factor(a1, threshold),
    }


# ---------------------------------------------------------------------------
# theoretical decay envelopes for the residual plots


def rate_guide(regime: str, a_or_a1: float, k) -> np.ndarray:
    """Unnormalized decay envelope at iteration(s) k.

    Fixed-exponent regimes decay like (k+1)^(-(1-a)/2); the two-phase
    regimes decay like the critical rate times the smaller of the log and
    polynomial slack factors.
    """
    k = np.asarray(k, dtype=float)
    if regime == "iid":
        lo, hi = IID_RANGE
        if not lo < a_or_a1 <= hi:
            raise ValueError(f"iid rate guide needs a in ({lo:.6g}, {hi:.6g}], got {a_or_a1}")
        return (k + 1.0) ** (-(1.0 - a_or_a1) / 2.0)
    if regime == "markov":
        lo, hi = MARKOV_RANGE
        if not lo < a_or_a1 <= hi:
            raise ValueError(f"markov rate guide needs a in ({lo:.6g}, {hi:.6g}], got {a_or_a1}")
        return (k + 1.0) ** (-(1.0 - a_or_a1) / 2.0)
    if regime in ("iid-two-phase", "markov-two-phase"):
        base = regime.split("-")[0]
        eps = phase_exponent(a_or_a1, base)
        kappa = phase_kappa(eps)
        slack = np.minimum(kappa * np.log(k + 1.0), (k + 1.0) ** eps)
        power = -1.0 / 6.0 if base == "iid" else -1.0 / 10.0
        return (k + 1.0) ** power * slack
    raise ValueError(f"unknown rate-guide regime {regime!r}")
