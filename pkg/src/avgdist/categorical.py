"""Fixed-stride categorical supports, projection, and Cramer geometry.

A law is represented either by a weight vector on the grid atoms (one row
per state for a family), or exactly as a finite list of (location, mass)
atoms together with one common shift shared by all states of a family.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NEG_CLAMP = 1e-12  # weights in [-NEG_CLAMP, 0) are treated as exact zeros
SUM_TOL = 1e-10


@dataclass(frozen=True)
class SupportGrid:
    """Ordered support theta_k = theta_1 + (k-1)*stride, k = 1..num_atoms."""

    theta_1: float
    stride: float
    num_atoms: int

    def __post_init__(self):
        if self.num_atoms < 2:
            raise ValueError(f"grid needs at least 2 atoms, got {self.num_atoms}")
        if self.stride <= 0:
            raise ValueError(f"grid stride must be positive, got {self.stride}")

    @classmethod
    def from_range(cls, theta_min: float, theta_max: float, num_atoms: int) -> "SupportGrid":
        if theta_max <= theta_min:
            raise ValueError("theta_max must exceed theta_min")
        if num_atoms < 2:
            raise ValueError(f"grid needs at least 2 atoms, got {num_atoms}")
        stride = (theta_max - theta_min) / (num_atoms - 1)
        return cls(theta_min, stride, num_atoms)

    @property
    def theta_d(self) -> float:
        return self.theta_1 + self.stride * (self.num_atoms - 1)

    @property
    def atoms(self) -> np.ndarray:
        return self.theta_1 + self.stride * np.arange(self.num_atoms)

    @property
    def diameter_metric(self) -> float:
        """Largest Cramer distance between two laws on this support."""
        return float(np.sqrt(self.theta_d - self.theta_1))


def normalize_weights(w: np.ndarray) -> np.ndarray:
    """Clamp tiny negative entries to zero and rescale to unit mass."""
    w = np.asarray(w, dtype=float)
    if np.any(w < -NEG_CLAMP):
        raise ValueError(f"weight vector has entry {w.min():.3e} below -{NEG_CLAMP:.0e}")
    w = np.where(w < 0.0, 0.0, w)
    s = w.sum()
    if abs(s - 1.0) > 1e-6:
        raise ValueError(f"weight vector sums to {s:.8g}, too far from 1 to renormalize")
    return w / s


def normalize_family(p: np.ndarray) -> np.ndarray:
    """Apply weight hygiene to every state block of an (m, d) family."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -NEG_CLAMP):
        raise ValueError("coefficient family has an entry below the negative clamp")
    p = np.where(p < 0.0, 0.0, p)
    return p / p.sum(axis=1, keepdims=True)


def uniform_family(num_states: int, grid: SupportGrid) -> np.ndarray:
    return np.full((num_states, grid.num_atoms), 1.0 / grid.num_atoms)


def project(locations, masses, grid: SupportGrid) -> np.ndarray:
    """Categorical projection of a finite atomic law onto the grid.

    An atom at x <= theta_1 contributes all mass to theta_1, one at
    x >= theta_d all mass to theta_d, and an interior atom splits its mass
    between the bracketing grid points with linear interpolation weights.
    """
    locations = np.asarray(locations, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if locations.size == 0:
        raise ValueError("cannot project an empty law")
    d = grid.num_atoms
    idx = np.clip((locations - grid.theta_1) / grid.stride, 0.0, d - 1.0)
    lo = np.floor(idx).astype(np.intp)
    frac = idx - lo
    hi = np.minimum(lo + 1, d - 1)
    out = np.zeros(d)
    np.add.at(out, lo, masses * (1.0 - frac))
    np.add.at(out, hi, masses * frac)
    return normalize_weights(out)


def shift_project(p: np.ndarray, b: float, grid: SupportGrid) -> np.ndarray:
    """Shift a grid-supported law by b and project back onto the same grid.

    Equals project() applied to the law with atoms (theta_k + b, p_k), but
    exploits the fact that every atom moves by the same fractional stride.
    """
    d = grid.num_atoms
    s = b / grid.stride
    f = int(np.floor(s))
    r = s - f
    out = np.zeros(d)
    _add_shifted(out, p * (1.0 - r), f)
    if r > 0.0:
        _add_shifted(out, p * r, f + 1)
    return out / out.sum()


def _add_shifted(out: np.ndarray, w: np.ndarray, t: int) -> None:
    # accumulate source bin k into target bin k + t, clipping at the edges
    d = out.shape[0]
    if t >= d:
        out[-1] += w.sum()
    elif t <= -d:
        out[0] += w.sum()
    elif t >= 0:
        out[t:] += w[: d - t]
        if t > 0:
            out[-1] += w[d - t :].sum()
    else:
        out[:t] += w[-t:]
        out[0] += w[:-t].sum()


def shift_matrix(b: float, grid: SupportGrid) -> np.ndarray:
    """Matrix M with M @ p == shift_project(p, b, grid) for every p."""
    d = grid.num_atoms
    idx = np.clip(np.arange(d) + b / grid.stride, 0.0, d - 1.0)
    lo = np.floor(idx).astype(np.intp)
    frac = idx - lo
    hi = np.minimum(lo + 1, d - 1)
    M = np.zeros((d, d))
    cols = np.arange(d)
    M[lo, cols] += 1.0 - frac
    M[hi, cols] += frac
    return M


def cumulative(p: np.ndarray) -> np.ndarray:
    """Partial sums F_p(theta_k) for k = 1..d-1."""
    return np.cumsum(p)[:-1]


def cramer(p: np.ndarray, q: np.ndarray, grid: SupportGrid) -> float:
    """Coordinate Cramer distance sqrt(stride * sum_k (F_p - F_q)^2)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.shape[-1] != grid.num_atoms:
        raise ValueError(f"weight shape mismatch: {p.shape} vs {q.shape} on d={grid.num_atoms}")
    F = np.cumsum(p - q)[:-1]
    return float(np.sqrt(grid.stride * np.dot(F, F)))


def cramer_sup(p: np.ndarray, q: np.ndarray, grid: SupportGrid) -> float:
    """Maximum over states of the per-block coordinate Cramer distance."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.shape[1] != grid.num_atoms:
        raise ValueError(f"family shape mismatch: {p.shape} vs {q.shape} on d={grid.num_atoms}")
    F = np.cumsum(p - q, axis=1)[:, :-1]
    return float(np.sqrt(grid.stride * np.max(np.einsum("ik,ik->i", F, F))))


def coeff_mean(p: np.ndarray, grid: SupportGrid, shift: float = 0.0) -> float:
    """Mean of the represented law, sum_k p_k (theta_k + shift)."""
    return float(np.dot(np.asarray(p, dtype=float), grid.atoms)) + shift


def family_means(p: np.ndarray, grid: SupportGrid, shift: float = 0.0) -> np.ndarray:
    return np.asarray(p, dtype=float) @ grid.atoms + shift


# ---------------------------------------------------------------------------
# exact finitely-supported laws


@dataclass
class ExactLawFamily:
    """Per-state finite atomic laws plus one explicit common shift.

    `laws[i]` is a pair (locations, masses); the represented law of state i
    places mass masses[k] at locations[k] + common_shift. Keeping the shift
    explicit makes equality up to a common translation a first-class notion.
    """

    laws: list
    common_shift: float = 0.0

    @property
    def num_states(self) -> int:
        return len(self.laws)

    def materialized(self) -> list:
        """Laws with the common shift folded into the atom locations."""
        return [
            (np.asarray(locs, dtype=float) + self.common_shift, np.asarray(ms, dtype=float))
            for locs, ms in self.laws
        ]

    def translated(self, c: float) -> "ExactLawFamily":
        return ExactLawFamily(self.laws, self.common_shift + c)

    def validate(self) -> None:
        for i, (locs, ms) in enumerate(self.laws):
            locs = np.asarray(locs, dtype=float)
            ms = np.asarray(ms, dtype=float)
            if not np.all(np.isfinite(locs)):
                raise ValueError(f"state {i} law has non-finite locations")
            if abs(ms.sum() - 1.0) > SUM_TOL:
                raise ValueError(f"state {i} law masses sum to {ms.sum():.12g}")


def merge_atoms(locations, masses, tol: float = 1e-12):
    """Sort atoms and pool masses of locations closer than tol.

    The first member of each group is kept as the representative location,
    so merging never perturbs coordinates that were already exact.
    """
    locations = np.asarray(locations, dtype=float)
    masses = np.asarray(masses, dtype=float)
    order = np.argsort(locations, kind="stable")
    locs = locations[order]
    ms = masses[order]
    if locs.size <= 1:
        return locs, ms
    groups = np.concatenate([[0], np.cumsum(np.diff(locs) > tol)])
    ngroups = groups[-1] + 1
    out_m = np.zeros(ngroups)
    np.add.at(out_m, groups, ms)
    first_idx = np.searchsorted(groups, np.arange(ngroups), side="left")
    return locs[first_idx], out_m


def cramer_exact(law_a, law_b) -> float:
    """Cramer distance between two finite atomic laws by CDF integration.

    Each law is a (locations, masses) pair. The squared distance is the
    integral of the squared CDF difference, computed exactly over the
    piecewise-constant segments between the pooled breakpoints.
    """
    la, ma = law_a
    lb, mb = law_b
    la = np.asarray(la, dtype=float)
    lb = np.asarray(lb, dtype=float)
    xs = np.concatenate([la, lb])
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    wa = np.concatenate([np.asarray(ma, dtype=float), np.zeros(len(lb))])[order]
    wb = np.concatenate([np.zeros(len(la)), np.asarray(mb, dtype=float)])[order]
    Fa = np.cumsum(wa)[:-1]
    Fb = np.cumsum(wb)[:-1]
    dx = np.diff(xs)
    return float(np.sqrt(np.sum((Fa - Fb) ** 2 * dx)))


def cramer_sup_exact(fam_a: ExactLawFamily, fam_b: ExactLawFamily) -> float:
    if fam_a.num_states != fam_b.num_states:
        raise ValueError("family sizes differ")
    mats_a = fam_a.materialized()
    mats_b = fam_b.materialized()
    return max(cramer_exact(a, b) for a, b in zip(mats_a, mats_b))


def family_from_coeffs(p: np.ndarray, grid: SupportGrid, shift: float = 0.0) -> ExactLawFamily:
    """Representative exact-law family of a coefficient family."""
    atoms = grid.atoms
    return ExactLawFamily([(atoms.copy(), np.asarray(row, dtype=float).copy()) for row in p], shift)


def equal_up_to_translation(fam_a: ExactLawFamily, fam_b: ExactLawFamily, tol: float = 1e-10):
    """Return the common shift c with translate(A, c) == B, or None.

    The candidate c comes from the minimal-location atoms of the first
    state, and is then verified on every state after merging atoms closer
    than tol/10.
    """
    if fam_a.num_states != fam_b.num_states:
        return None
    merge_tol = tol / 10.0
    mats_a = [merge_atoms(l, m, merge_tol) for l, m in fam_a.materialized()]
    mats_b = [merge_atoms(l, m, merge_tol) for l, m in fam_b.materialized()]
    la0, _ = mats_a[0]
    lb0, _ = mats_b[0]
    if la0.size == 0 or lb0.size == 0:
        return None
    c = float(lb0[0] - la0[0])
    for (la, ma), (lb, mb) in zip(mats_a, mats_b):
        if la.size != lb.size:
            return None
        if np.max(np.abs(la + c - lb)) > tol or np.max(np.abs(ma - mb)) > tol:
            return None
    return c


def align_common_shift(fam_a: np.ndarray, fam_b: np.ndarray, grid: SupportGrid) -> float:
    """Least-squares common shift matching the means of A to those of B.

    Minimizes sum_i (mean(A_i) + c - mean(B_i))^2, whose closed form is the
    average over states of the mean differences. Visualization-grade only.
    """
    fam_a = np.asarray(fam_a, dtype=float)
    fam_b = np.asarray(fam_b, dtype=float)
    if fam_a.shape != fam_b.shape:
        raise ValueError("families must have matching shapes")
    return float(np.mean(family_means(fam_b, grid) - family_means(fam_a, grid)))


# ---------------------------------------------------------------------------
# CSV serialization of coefficient families


def write_coeff_csv(path, p: np.ndarray, grid: SupportGrid) -> None:
    """Write a family as CSV rows (state, atom_index, theta, weight)."""
    atoms = grid.atoms
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("state,atom_index,theta,weight\n")
        for i, row in enumerate(np.asarray(p, dtype=float)):
            for k, w in enumerate(row):
                fh.write(f"{i},{k},{atoms[k]:.17g},{w:.17g}\n")


def read_coeff_csv(path):
    """Read a family written by write_coeff_csv; returns (weights, thetas)."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "state,atom_index,theta,weight":
            raise ValueError(f"unexpected coefficient CSV header: {header!r}")
        for line in fh:
            s, k, th, w = line.strip().split(",")
            rows.append((int(s), int(k), float(th), float(w)))
    if not rows:
        raise ValueError("coefficient CSV has no data rows")
    m = max(r[0] for r in rows) + 1
    d = max(r[1] for r in rows) + 1
    weights = np.zeros((m, d))
    thetas = np.zeros(d)
    for s, k, th, w in rows:
        weights[s, k] = w
        thetas[k] = th
    return weights, thetas
