"""Iteration drivers producing residual traces.

Five modes share one trace format: the deterministic relaxation of the
exact projected operator, the centered one-state recursions under
independent and trajectory sampling, the gain-coupled recursion on raw
rewards, and the wrong-centering ablation that keeps the centering
constant pinned at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .categorical import SupportGrid, cramer_sup, uniform_family
from .mrp import MarkovRewardProcess, SamplerConfig, TransitionSampler
from .operators import OperatorContext, apply_G_g, mean_field
from .schedules import (
    IID_RANGE,
    MARKOV_RANGE,
    StepSchedule,
    TauAccumulator,
    rate_guide,
)

MODES = ("exact_km", "skm_iid", "skm_markov", "skm_coupled", "ablation_g0")

TRACE_COLUMNS = (
    "k",
    "alpha",
    "residual_G",
    "residual_h",
    "gain_est",
    "gain_err",
    "product_residual",
    "rate_guide",
)


def default_log_points(num_iterations: int, count: int = 60) -> np.ndarray:
    """Log-spaced iteration indices in [1, num_iterations], deduplicated."""
    if num_iterations < 1:
        raise ValueError("need at least one iteration")
    pts = np.unique(
        np.round(np.logspace(0.0, math.log10(num_iterations), count)).astype(np.int64)
    )
    return pts[(pts >= 1) & (pts <= num_iterations)]


@dataclass
class RunConfig:
    mrp: MarkovRewardProcess
    grid: SupportGrid
    schedule: StepSchedule
    num_iterations: int
    seed: int
    mode: str
    rho: np.ndarray | None = None  # skm_iid state-sampling law, default uniform
    initial_state: int = 0
    lam: float | None = None  # skm_coupled product-metric weight
    g0: float = 0.5
    log_points: np.ndarray | None = None
    initial_coeffs: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown run mode {self.mode!r}")
        if self.num_iterations < 1:
            raise ValueError("num_iterations must be >= 1")
        if self.log_points is None:
            self.log_points = default_log_points(self.num_iterations)
        else:
            self.log_points = np.asarray(self.log_points, dtype=np.int64)
            if self.log_points.size and (
                self.log_points.min() < 1 or self.log_points.max() > self.num_iterations
            ):
                raise ValueError("log_points must lie in [1, num_iterations]")
        if self.mode == "skm_coupled":
            min_lam = self.grid.stride ** -0.5
            if self.lam is None:
                self.lam = min_lam
            elif self.lam < min_lam:
                raise ValueError(
                    f"product-metric weight must be at least stride^(-1/2) = {min_lam:.6g}"
                )
            if not 0.0 <= self.g0 <= 1.0:
                raise ValueError("initial gain estimate must lie in [0, 1]")


@dataclass
class IterateTrace:
    """Residual log rows plus the terminal state of the run."""

    mode: str
    columns: dict
    final_coeffs: np.ndarray
    final_gain: float | None = None

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            n = len(self.columns["k"])
            for r in range(n):
                cells = []
                for name in TRACE_COLUMNS:
                    vals = self.columns.get(name)
                    if vals is None:
                        cells.append("")
                        continue
                    v = vals[r]
                    if v is None or (isinstance(v, float) and math.isnan(v)):
                        cells.append("")
                    elif name == "k":
                        cells.append(str(int(v)))
                    else:
                        cells.append(f"{v:.17g}")
                fh.write(",".join(cells) + "\n")


def _check_schedule(cfg: RunConfig) -> None:
    sched = cfg.schedule
    if cfg.mode == "skm_iid":
        if sched.kind == "polynomial":
            lo, hi = IID_RANGE
            if not lo < sched.a <= hi:
                raise ValueError(
                    f"independent-sampling recursion needs exponent a with {lo:.6g} < a <= {hi:.6g}, got {sched.a}"
                )
        elif sched.kind != "two_phase_iid":
            raise ValueError(f"schedule kind {sched.kind!r} is not admissible for skm_iid")
    elif cfg.mode in ("skm_markov", "skm_coupled", "ablation_g0"):
        if sched.kind == "polynomial":
            lo, hi = MARKOV_RANGE
            if not lo < sched.a <= hi:
                raise ValueError(
                    f"trajectory recursion needs exponent a with {lo:.6g} < a <= {hi:.6g}, got {sched.a}"
                )
        elif sched.kind != "two_phase_markov":
            raise ValueError(f"schedule kind {sched.kind!r} is not admissible for {cfg.mode}")


def _guide_value(cfg: RunConfig, ctx: OperatorContext, tau_k: float, k: int) -> float:
    sched = cfg.schedule
    if cfg.mode == "exact_km":
        # deterministic relaxation envelope D / sqrt(pi tau_k)
        return ctx.grid.diameter_metric / math.sqrt(math.pi * tau_k)
    if cfg.mode == "ablation_g0":
        return math.nan
    if cfg.mode == "skm_iid":
        regime = "iid" if sched.kind == "polynomial" else "iid-two-phase"
    else:
        regime = "markov" if sched.kind == "polynomial" else "markov-two-phase"
    return float(rate_guide(regime, sched.a, k))


def run(cfg: RunConfig) -> IterateTrace:
    """Dispatch on cfg.mode; every driver logs at cfg.log_points."""
    if cfg.mode == "exact_km":
        return run_exact_km(cfg)
    if cfg.mode == "skm_iid":
        return run_skm_iid(cfg)
    if cfg.mode == "skm_markov":
        return run_skm_markov(cfg)
    if cfg.mode == "skm_coupled":
        return run_skm_coupled(cfg)
    return run_ablation_g0(cfg)


def _init_coeffs(cfg: RunConfig) -> np.ndarray:
    if cfg.initial_coeffs is not None:
        return np.array(cfg.initial_coeffs, dtype=float)
    return uniform_family(cfg.mrp.num_states, cfg.grid)


def _new_columns() -> dict:
    return {name: [] for name in TRACE_COLUMNS}


def run_exact_km(cfg: RunConfig) -> IterateTrace:
    """Deterministic p <- p + alpha (G(p) - p) on the exact projected operator.

    The iterate logged at index k is the one produced by the first k
    updates, matching the convention tau_k = sum_{t=1..k} alpha_t(1-alpha_t).
    """
    ctx = OperatorContext.create(cfg.mrp, cfg.grid)
    p = _init_coeffs(cfg)
    gmat = ctx.operator_matrix(ctx.gain_ref)
    m, d = p.shape
    cols = _new_columns()
    log_set = set(int(x) for x in cfg.log_points)
    tau_acc = TauAccumulator(cfg.schedule)
    for k in range(1, cfg.num_iterations + 1):
        alpha = cfg.schedule.step_size(k)
        tau_k = tau_acc.advance_to(k)
        Gp = (gmat @ p.reshape(m * d)).reshape(m, d)
        p = p + alpha * (Gp - p)
        p /= p.sum(axis=1, keepdims=True)
        if k in log_set:
            Gp = (gmat @ p.reshape(m * d)).reshape(m, d)
            _log_row(cols, cfg, ctx, k, alpha, p, Gp, tau_k, None)
    return IterateTrace("exact_km", cols, p)


def _log_row(cols, cfg, ctx, k, alpha, p, Gp, tau_k, extra) -> None:
    res_G = cramer_sup(p, Gp, cfg.grid)
    cols["k"].append(k)
    cols["alpha"].append(alpha)
    cols["residual_G"].append(res_G)
    cols["rate_guide"].append(_guide_value(cfg, ctx, tau_k, k))
    if extra is None:
        # deterministic relaxation: the mean-field column repeats res_G
        cols["residual_h"].append(res_G)
        cols["gain_est"].append(None)
        cols["gain_err"].append(None)
        cols["product_residual"].append(None)
    else:
        cols["residual_h"].append(extra.get("residual_h"))
        cols["gain_est"].append(extra.get("gain_est"))
        cols["gain_err"].append(extra.get("gain_err"))
        cols["product_residual"].append(extra.get("product_residual"))


def _stochastic_loop(cfg: RunConfig, center_mode: str) -> IterateTrace:
    """Shared driver for the sampling modes.

    center_mode: "gain" subtracts the reference gain, "zero" subtracts
    nothing (the wrong-centering ablation), "estimate" subtracts the
    running gain estimate and updates it from the same samples.
    """
    _check_schedule(cfg)
    ctx = OperatorContext.create(cfg.mrp, cfg.grid)
    mu = None
    if cfg.mode != "skm_iid":
        from .mrp import stationary_distribution

        mu = stationary_distribution(cfg.mrp).mu
    rho = cfg.rho
    if cfg.mode == "skm_iid":
        if rho is None:
            rho = np.full(cfg.mrp.num_states, 1.0 / cfg.mrp.num_states)
        else:
            rho = np.asarray(rho, dtype=float)
        sampler_cfg = SamplerConfig(mode="iid", seed=cfg.seed, state_law=rho)
    else:
        sampler_cfg = SamplerConfig(mode="markov", seed=cfg.seed, initial_state=cfg.initial_state)
    sampler = TransitionSampler(cfg.mrp, sampler_cfg)

    p = _init_coeffs(cfg)
    g = cfg.g0 if center_mode == "estimate" else (ctx.gain_ref if center_mode == "gain" else 0.0)
    grid = cfg.grid
    cols = _new_columns()
    log_set = set(int(x) for x in cfg.log_points)
    tau_acc = TauAccumulator(cfg.schedule)
    from .categorical import shift_project

    for k in range(1, cfg.num_iterations + 1):
        alpha = cfg.schedule.step_size(k)
        tau_k = tau_acc.advance_to(k)
        t = sampler.draw()
        row = shift_project(p[t.to_state], t.reward - g, grid)
        ps = p[t.from_state]
        ps *= 1.0 - alpha
        ps += alpha * row
        ps /= ps.sum()
        if center_mode == "estimate":
            g += alpha * (t.reward - g)
        if k in log_set:
            Gp = ctx.apply_matrix(p, ctx.gain_ref)
            extra = {}
            if cfg.mode == "skm_iid":
                h = p + rho[:, None] * (Gp - p)
                extra["residual_h"] = cramer_sup(p, h, grid)
            elif cfg.mode == "skm_markov":
                h = p + mu[:, None] * (Gp - p)
                extra["residual_h"] = cramer_sup(p, h, grid)
            elif cfg.mode == "ablation_g0":
                # the ablated recursion targets the zero-centered operator,
                # so its mean-field residual is measured against that map
                h0 = mean_field(p, mu, 0.0, ctx)
                extra["residual_h"] = cramer_sup(p, h0, grid)
            else:
                hg = mean_field(p, mu, g, ctx)
                res_h = cramer_sup(p, hg, grid)
                extra["residual_h"] = res_h
                extra["gain_est"] = g
                extra["gain_err"] = abs(g - ctx.gain_ref)
                extra["product_residual"] = res_h + cfg.lam * abs(g - ctx.gain_ref)
            _log_row(cols, cfg, ctx, k, alpha, p, Gp, tau_k, extra)
    final_gain = g if center_mode == "estimate" else None
    return IterateTrace(cfg.mode, cols, p, final_gain)


def run_skm_iid(cfg: RunConfig) -> IterateTrace:
    """Centered recursion with independent one-step samples."""
    if cfg.mode != "skm_iid":
        raise ValueError("config mode must be skm_iid")
    return _stochastic_loop(cfg, "gain")


def run_skm_markov(cfg: RunConfig) -> IterateTrace:
    """Centered recursion along a single chain trajectory."""
    if cfg.mode != "skm_markov":
        raise ValueError("config mode must be skm_markov")
    return _stochastic_loop(cfg, "gain")


def run_skm_coupled(cfg: RunConfig) -> IterateTrace:
    """Raw-reward recursion coupled with an online gain estimate."""
    if cfg.mode != "skm_coupled":
        raise ValueError("config mode must be skm_coupled")
    return _stochastic_loop(cfg, "estimate")


def run_ablation_g0(cfg: RunConfig) -> IterateTrace:
    """Trajectory recursion with the centering constant frozen at zero.

    residual_G is still measured against the correctly-centered operator;
    residual_h is measured against the zero-centered mean-field map the
    recursion actually follows.
    """
    if cfg.mode != "ablation_g0":
        raise ValueError("config mode must be ablation_g0")
    return _stochastic_loop(cfg, "zero")


def residual_against_g(p: np.ndarray, g: float, ctx: OperatorContext) -> float:
    """Convenience: sup-Cramer residual of p under the g-centered operator."""
    return cramer_sup(p, apply_G_g(p, g, ctx), ctx.grid)
