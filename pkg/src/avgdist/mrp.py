"""Finite Markov reward processes: model, stationary analysis, sampling.

The reward attached to a transition (i, j) is a finite discrete law on
[0, 1]; a deterministic reward is a single atom. All scalar reference
quantities (stationary distribution, expected rewards, gain, bias) are
computed by dense linear algebra, which is exact at these sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10
POISSON_TOL = 1e-8


@dataclass(frozen=True)
class MarkovRewardProcess:
    """Row-stochastic transition matrix plus per-transition reward laws.

    reward_laws maps (i, j) to a pair of arrays (values, probabilities)
    for every transition with positive probability.
    """

    num_states: int
    transition: np.ndarray
    reward_laws: dict

    def __post_init__(self):
        object.__setattr__(self, "transition", np.asarray(self.transition, dtype=float))

    def reward_law(self, i: int, j: int):
        return self.reward_laws[(i, j)]

    def mean_reward(self, i: int, j: int) -> float:
        values, probs = self.reward_laws[(i, j)]
        return float(np.dot(values, probs))


def deterministic_rewards(num_states: int, transition, rewards) -> MarkovRewardProcess:
    """Build an MRP whose reward on (i, j) is the single atom rewards[i][j]."""
    transition = np.asarray(transition, dtype=float)
    rewards = np.asarray(rewards, dtype=float)
    laws = {}
    for i in range(num_states):
        for j in range(num_states):
            if transition[i, j] > 0.0:
                laws[(i, j)] = (np.array([rewards[i, j]]), np.array([1.0]))
    return MarkovRewardProcess(num_states, transition, laws)


@dataclass(frozen=True)
class StationaryDistribution:
    mu: np.ndarray
    mu_min: float


@dataclass(frozen=True)
class ScalarSolution:
    """Expected rewards, gain, and bias pinned by bias[0] = 0."""

    expected_reward: np.ndarray
    gain: float
    bias: np.ndarray


@dataclass(frozen=True, slots=True)
class Transition:
    from_state: int
    reward: float
    to_state: int
    centered: bool = False


@dataclass(frozen=True)
class SamplerConfig:
    """IID mode draws the source state from state_law each step; MARKOV mode
    follows one trajectory starting at initial_state."""

    mode: str  # "iid" | "markov"
    seed: int
    state_law: np.ndarray | None = None
    initial_state: int = 0

    def __post_init__(self):
        if self.mode not in ("iid", "markov"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.mode == "iid":
            if self.state_law is None:
                raise ValueError("iid mode needs a state_law")
            law = np.asarray(self.state_law, dtype=float)
            if abs(law.sum() - 1.0) > 1e-10 or law.min() <= 0.0:
                raise ValueError("state_law must be a strictly positive distribution")
            object.__setattr__(self, "state_law", law)


# ---------------------------------------------------------------------------
# structural checks


def _reachability(mask: np.ndarray) -> np.ndarray:
    # boolean transitive closure by repeated squaring
    m = mask.shape[0]
    closure = mask | np.eye(m, dtype=bool)
    for _ in range(int(math.ceil(math.log2(m))) + 1):
        closure = closure | (closure @ closure)
    return closure


def _period(mask: np.ndarray) -> int:
    # gcd of (level(u) + 1 - level(v)) over edges of a strongly connected graph
    m = mask.shape[0]
    level = np.full(m, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.nonzero(mask[u])[0]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    g = 0
    for u in range(m):
        for v in np.nonzero(mask[u])[0]:
            g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g)


def is_irreducible(transition: np.ndarray) -> bool:
    return bool(np.all(_reachability(np.asarray(transition) > 0.0)))


def is_aperiodic(transition: np.ndarray) -> bool:
    return _period(np.asarray(transition) > 0.0) == 1


def validate(mrp: MarkovRewardProcess) -> list:
    """Collect invariant violations; empty list means the MRP is valid."""
    violations = []
    P = mrp.transition
    m = mrp.num_states
    if P.shape != (m, m):
        violations.append(f"transition matrix has shape {P.shape}, expected ({m}, {m})")
        return violations
    if np.any(P < 0.0):
        i, j = np.argwhere(P < 0.0)[0]
        violations.append(f"transition entry ({i}, {j}) is negative: {P[i, j]:.6g}")
    for i in range(m):
        s = P[i].sum()
        if abs(s - 1.0) > ROW_SUM_TOL:
            violations.append(f"row {i} sums to {s:.6g}")
    for i in range(m):
        for j in range(m):
            if P[i, j] > 0.0 and (i, j) not in mrp.reward_laws:
                violations.append(f"missing reward law for transition ({i}, {j})")
    for (i, j), (values, probs) in sorted(mrp.reward_laws.items()):
        if P[i, j] <= 0.0:
            violations.append(f"reward law given for zero-probability transition ({i}, {j})")
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if abs(probs.sum() - 1.0) > ROW_SUM_TOL:
            violations.append(f"reward law ({i}, {j}) probabilities sum to {probs.sum():.6g}")
        if np.any(probs < 0.0):
            violations.append(f"reward law ({i}, {j}) has a negative probability")
        if np.any(values < 0.0) or np.any(values > 1.0):
            violations.append(f"reward law ({i}, {j}) has a value outside [0, 1]")
    if not violations:
        if not is_irreducible(P):
            violations.append("chain is not irreducible")
        elif not is_aperiodic(P):
            violations.append("chain is not aperiodic")
    return violations


# ---------------------------------------------------------------------------
# stationary analysis


def stationary_distribution(mrp: MarkovRewardProcess, tol: float = STATIONARY_TOL) -> StationaryDistribution:
    """Stationary distribution via the augmented solve (I - P^T + 11^T) mu = 1."""
    P = mrp.transition
    m = mrp.num_states
    A = np.eye(m) - P.T + np.ones((m, m))
    try:
        mu = np.linalg.solve(A, np.ones(m))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"stationary solve failed: {exc}") from exc
    mu = mu / mu.sum()
    resid = float(np.max(np.abs(mu @ P - mu)))
    if resid > tol:
        raise RuntimeError(f"stationary residual {resid:.3e} exceeds tolerance {tol:.3e}")
    mu_min = float(mu.min())
    if mu_min <= 0.0:
        raise RuntimeError("stationary distribution has a non-positive entry")
    return StationaryDistribution(mu, mu_min)


def stationary_power_iteration(
    mrp: MarkovRewardProcess, tol: float = STATIONARY_TOL, max_iters: int = 200_000
) -> np.ndarray:
    """Cross-check route: iterate mu <- mu P until the update stalls."""
    P = mrp.transition
    mu = np.full(mrp.num_states, 1.0 / mrp.num_states)
    for _ in range(max_iters):
        nxt = mu @ P
        if np.max(np.abs(nxt - mu)) < tol / 10.0:
            return nxt / nxt.sum()
        mu = nxt
    raise RuntimeError(f"power iteration did not converge within {max_iters} iterations")


def expected_reward_vector(mrp: MarkovRewardProcess) -> np.ndarray:
    P = mrp.transition
    r = np.zeros(mrp.num_states)
    for (i, j), (values, probs) in mrp.reward_laws.items():
        r[i] += P[i, j] * float(np.dot(values, probs))
    return r


def gain(mrp: MarkovRewardProcess) -> float:
    mu = stationary_distribution(mrp).mu
    return float(mu @ expected_reward_vector(mrp))


def solve_poisson(mrp: MarkovRewardProcess) -> ScalarSolution:
    """Bias from v = (I - P + 1 mu^T)^{-1}(r - gain 1), renormalized to v[0] = 0."""
    P = mrp.transition
    m = mrp.num_states
    mu = stationary_distribution(mrp).mu
    r = expected_reward_vector(mrp)
    g = float(mu @ r)
    try:
        v = np.linalg.solve(np.eye(m) - P + np.outer(np.ones(m), mu), r - g)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"Poisson solve failed: {exc}") from exc
    v = v - v[0]
    resid = float(np.max(np.abs(v - (r - g + P @ v))))
    if resid > POISSON_TOL:
        raise RuntimeError(f"Poisson residual {resid:.3e} exceeds {POISSON_TOL:.0e}")
    return ScalarSolution(r, g, v)


def center(t: Transition, g: float) -> Transition:
    """Subtract the centering constant g from a raw transition's reward."""
    if t.centered:
        raise ValueError("transition is already centered")
    return Transition(t.from_state, t.reward - g, t.to_state, centered=True)


# ---------------------------------------------------------------------------
# sampling

_BUFFER = 8192


class TransitionSampler:
    """Seeded one-step sampler; the stream is a pure function of (mrp, config).

    Uses the counter-based Philox generator so identical seeds reproduce
    identical streams bit-for-bit across platforms. Single-owner state.
    """

    def __init__(self, mrp: MarkovRewardProcess, config: SamplerConfig):
        self.mrp = mrp
        self.config = config
        self._rng = np.random.Generator(np.random.Philox(config.seed))
        self._buf = np.empty(0)
        self._pos = 0
        self._cum_rows = np.cumsum(mrp.transition, axis=1)
        self._state_cum = None if config.state_law is None else np.cumsum(config.state_law)
        self._state = config.initial_state
        # (values, cumulative probs) per transition; None marks a single atom
        self._reward_cum = {}
        for key, (values, probs) in mrp.reward_laws.items():
            if len(values) == 1:
                self._reward_cum[key] = (float(values[0]), None)
            else:
                self._reward_cum[key] = (np.asarray(values, dtype=float), np.cumsum(probs))

    def _uniform(self) -> float:
        if self._pos >= self._buf.shape[0]:
            self._buf = self._rng.random(_BUFFER)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def draw(self) -> Transition:
        if self.config.mode == "iid":
            s = int(np.searchsorted(self._state_cum, self._uniform()))
        else:
            s = self._state
        sp = int(np.searchsorted(self._cum_rows[s], self._uniform()))
        values, cum = self._reward_cum[(s, sp)]
        if cum is None:
            r = values
        else:
            r = float(values[int(np.searchsorted(cum, self._uniform()))])
        if self.config.mode == "markov":
            self._state = sp
        return Transition(s, r, sp, centered=False)


class SynchronousSampler:
    """Draws one (successor, reward) pair for every state per call."""

    def __init__(self, mrp: MarkovRewardProcess, seed: int):
        self.mrp = mrp
        self._rng = np.random.Generator(np.random.Philox(seed))
        self._cum_rows = np.cumsum(mrp.transition, axis=1)

    def draw(self) -> list:
        out = []
        for i in range(self.mrp.num_states):
            sp = int(np.searchsorted(self._cum_rows[i], self._rng.random()))
            values, probs = self.mrp.reward_laws[(i, sp)]
            if len(values) == 1:
                r = float(values[0])
            else:
                r = float(values[int(np.searchsorted(np.cumsum(probs), self._rng.random()))])
            out.append((sp, r))
        return out
