"""Exact and projected distributional operators and their residuals.

Two routes compute the projected operator: a per-sample enumeration over
successors and reward atoms (apply_G_g), and a precomputed linear-map
route used by the iteration drivers (OperatorContext.apply_matrix). Tests
hold the two against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .categorical import (
    ExactLawFamily,
    SupportGrid,
    cramer,
    cramer_sup,
    merge_atoms,
    normalize_family,
    shift_matrix,
    shift_project,
)
from .mrp import MarkovRewardProcess, Transition, gain as mrp_gain

GAIN_CACHE_TOL = 1e-10


@dataclass
class OperatorContext:
    """Immutable bundle of an MRP, a grid, and the reference gain.

    Caches the linear-map form of the projected operator per centering
    constant; shareable across threads once constructed.
    """

    mrp: MarkovRewardProcess
    grid: SupportGrid
    gain_ref: float
    _matrices: dict = field(default_factory=dict, repr=False)

    @classmethod
    def create(cls, mrp: MarkovRewardProcess, grid: SupportGrid) -> "OperatorContext":
        return cls(mrp, grid, mrp_gain(mrp))

    def operator_matrix(self, g: float) -> np.ndarray:
        """(m*d, m*d) matrix whose action on stacked coefficients is the
        g-centered projected operator."""
        key = float(g)
        M = self._matrices.get(key)
        if M is None:
            m = self.mrp.num_states
            d = self.grid.num_atoms
            P = self.mrp.transition
            A = np.zeros((m, d, m, d))
            for (i, j), (values, probs) in self.mrp.reward_laws.items():
                for rv, rw in zip(values, probs):
                    A[i, :, j, :] += P[i, j] * rw * shift_matrix(rv - g, self.grid)
            M = A.reshape(m * d, m * d)
            self._matrices[key] = M
        return M

    def apply_matrix(self, p: np.ndarray, g: float) -> np.ndarray:
        m, d = p.shape
        out = (self.operator_matrix(g) @ p.reshape(m * d)).reshape(m, d)
        return normalize_family(out)


def apply_T_g(eta: ExactLawFamily, g: float, ctx: OperatorContext) -> ExactLawFamily:
    """Exact g-centered operator on finite law families.

    Output state i mixes, over successors j and reward atoms r, the law of
    state j translated by r - g. Atom locations within 1e-12 are pooled.
    The family's common shift passes through unchanged.
    """
    P = ctx.mrp.transition
    m = ctx.mrp.num_states
    out = []
    for i in range(m):
        locs_parts = []
        mass_parts = []
        for j in range(m):
            if P[i, j] <= 0.0:
                continue
            values, probs = ctx.mrp.reward_laws[(i, j)]
            locs_j, mass_j = eta.laws[j]
            locs_j = np.asarray(locs_j, dtype=float)
            mass_j = np.asarray(mass_j, dtype=float)
            for rv, rw in zip(values, probs):
                locs_parts.append(locs_j + (rv - g))
                mass_parts.append(P[i, j] * rw * mass_j)
        locs, mass = merge_atoms(np.concatenate(locs_parts), np.concatenate(mass_parts))
        out.append((locs, mass))
    return ExactLawFamily(out, eta.common_shift)


def apply_T(eta: ExactLawFamily, ctx: OperatorContext) -> ExactLawFamily:
    return apply_T_g(eta, ctx.gain_ref, ctx)


def apply_G_g(p: np.ndarray, g: float, ctx: OperatorContext) -> np.ndarray:
    """Projected g-centered operator, block i = sum_j P_ij E[L_{R_ij - g} p_j]."""
    P = ctx.mrp.transition
    m, d = p.shape
    out = np.zeros((m, d))
    for (i, j), (values, probs) in ctx.mrp.reward_laws.items():
        for rv, rw in zip(values, probs):
            out[i] += P[i, j] * rw * shift_project(p[j], rv - g, ctx.grid)
    return normalize_family(out)


def apply_G(p: np.ndarray, ctx: OperatorContext) -> np.ndarray:
    """Correctly-centered projected operator (linear-map route)."""
    return ctx.apply_matrix(p, ctx.gain_ref)


def mean_field(p: np.ndarray, rho: np.ndarray, g: float, ctx: OperatorContext) -> np.ndarray:
    """Asynchronous relaxation h(p)_i = (1 - rho_i) p_i + rho_i G_g(p)_i."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("state-sampling law must be nonnegative")
    Gp = apply_G_g(p, g, ctx)
    return normalize_family(p + rho[:, None] * (Gp - p))


def one_sample_backup(p: np.ndarray, t: Transition, ctx: OperatorContext) -> np.ndarray:
    """Replace block s with the shift-projected successor block; the sample
    must carry a centered reward."""
    if not t.centered:
        raise ValueError("one_sample_backup requires a centered transition")
    out = p.copy()
    out[t.from_state] = shift_project(p[t.to_state], t.reward, ctx.grid)
    return out


def one_sample_backup_gain(p: np.ndarray, t: Transition, g: float, ctx: OperatorContext) -> np.ndarray:
    """Gain-parameterized backup on a raw sample: block s gets L_{r-g} p_{s'}."""
    if t.centered:
        raise ValueError("one_sample_backup_gain expects a raw transition")
    out = p.copy()
    out[t.from_state] = shift_project(p[t.to_state], t.reward - g, ctx.grid)
    return out


def augmented_update(z, t: Transition, ctx: OperatorContext):
    """One step of the gain-coupled backup: ((H_g(p, y), r) for z = (p, g)."""
    p, g = z
    return one_sample_backup_gain(p, t, g, ctx), t.reward


def product_metric(z1, z2, lam: float, grid: SupportGrid) -> float:
    """d_lambda((p, g), (q, g')) = sup-Cramer(p, q) + lambda |g - g'|."""
    min_lam = grid.stride ** -0.5
    if lam < min_lam:
        raise ValueError(f"lambda must be at least stride^(-1/2) = {min_lam:.6g}, got {lam:.6g}")
    p, g = z1
    q, gp = z2
    return cramer_sup(p, q, grid) + lam * abs(g - gp)


# ---------------------------------------------------------------------------
# residual diagnostics


def residual_G(p: np.ndarray, ctx: OperatorContext) -> float:
    return cramer_sup(p, apply_G(p, ctx), ctx.grid)


def residual_G_g(p: np.ndarray, g: float, ctx: OperatorContext) -> float:
    return cramer_sup(p, ctx.apply_matrix(p, g), ctx.grid)


def residual_mean_field(p: np.ndarray, rho: np.ndarray, ctx: OperatorContext) -> float:
    return cramer_sup(p, mean_field(p, rho, ctx.gain_ref, ctx), ctx.grid)


def residual_product(z, lam: float, mu: np.ndarray, ctx: OperatorContext) -> float:
    """Distance from z = (p, g) to (h^(g)_mu(p), gain_ref) in d_lambda."""
    p, g = z
    target = mean_field(p, mu, g, ctx)
    return product_metric((p, g), (target, ctx.gain_ref), lam, ctx.grid)


def gain_error(z, ctx: OperatorContext) -> float:
    return abs(z[1] - ctx.gain_ref)


# ---------------------------------------------------------------------------
# synchronous exact sample map


def synchronous_backup(eta: ExactLawFamily, sample: list, g: float, ctx: OperatorContext) -> ExactLawFamily:
    """Exact synchronous backup: block i becomes the law of the sampled
    successor translated by the sampled reward minus g.

    `sample` is a list of (successor, reward) pairs, one per state; each
    pair must be feasible for the MRP.
    """
    P = ctx.mrp.transition
    if len(sample) != ctx.mrp.num_states:
        raise ValueError("synchronous sample must cover every state")
    out = []
    for i, (sp, r) in enumerate(sample):
        if P[i, sp] <= 0.0:
            raise ValueError(f"sample uses zero-probability transition ({i}, {sp})")
        values, _ = ctx.mrp.reward_laws[(i, sp)]
        if not np.any(np.isclose(values, r, atol=1e-12)):
            raise ValueError(f"reward {r} is not an atom of the law on ({i}, {sp})")
        locs, mass = eta.laws[sp]
        out.append((np.asarray(locs, dtype=float) + (r - g), np.asarray(mass, dtype=float).copy()))
    return ExactLawFamily(out, eta.common_shift)
