import numpy as np
import pytest

from avgdist.categorical import (
    ExactLawFamily,
    SupportGrid,
    align_common_shift,
    coeff_mean,
    cramer,
    cramer_exact,
    cramer_sup,
    cumulative,
    equal_up_to_translation,
    family_from_coeffs,
    merge_atoms,
    normalize_weights,
    project,
    read_coeff_csv,
    shift_matrix,
    shift_project,
    write_coeff_csv,
)

from conftest import random_exact_family


def grid012():
    return SupportGrid.from_range(0.0, 2.0, 3)


def step_cdf(law, xs):
    locs, mass = law
    order = np.argsort(locs)
    cum = np.cumsum(mass[order])
    idx = np.searchsorted(locs[order], xs, side="right")
    return np.where(idx == 0, 0.0, cum[np.clip(idx - 1, 0, None)])


def cramer_quadrature(law_a, law_b, n=1_000_001):
    """Independent check: Riemann sum of the squared CDF gap on a fine grid."""
    la, _ = law_a
    lb, _ = law_b
    lo = min(la.min(), lb.min()) - 1.0
    hi = max(la.max(), lb.max()) + 1.0
    xs = np.linspace(lo, hi, n)
    gap = step_cdf(law_a, xs) - step_cdf(law_b, xs)
    return np.sqrt(np.sum(gap**2) * (xs[1] - xs[0]))


class TestGrid:
    def test_atoms_and_diameter(self):
        g = SupportGrid.from_range(-1.0, 1.0, 5)
        np.testing.assert_allclose(g.atoms, [-1.0, -0.5, 0.0, 0.5, 1.0])
        assert g.diameter_metric == pytest.approx(np.sqrt(2.0))

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            SupportGrid(0.0, 0.0, 3)
        with pytest.raises(ValueError):
            SupportGrid.from_range(0.0, 1.0, 1)


class TestProject:
    def test_on_grid_atom(self):
        np.testing.assert_allclose(
            project([1.0], [1.0], grid012()), [0.0, 1.0, 0.0], atol=0
        )

    def test_clips_below_support(self):
        np.testing.assert_allclose(
            project([-5.0], [1.0], grid012()), [1.0, 0.0, 0.0], atol=0
        )

    def test_interpolates_interior_atom(self):
        np.testing.assert_allclose(
            project([0.5], [1.0], grid012()), [0.5, 0.5, 0.0], atol=1e-15
        )

    def test_empty_law_rejected(self):
        with pytest.raises(ValueError):
            project([], [], grid012())

    def test_mass_preserved_and_interior_mean_preserved(self):
        rng = np.random.default_rng(0)
        g = SupportGrid.from_range(-1.0, 1.0, 21)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            locs = rng.uniform(-1.0, 1.0, size=n)
            mass = rng.dirichlet(np.ones(n))
            w = project(locs, mass, g)
            assert w.sum() == pytest.approx(1.0, abs=5e-16)
            assert coeff_mean(w, g) == pytest.approx(float(locs @ mass), abs=1e-10)

    def test_projection_nonexpansive_in_cramer(self):
        # projected distance never exceeds the input distance
        rng = np.random.default_rng(1)
        g = SupportGrid.from_range(-1.0, 1.0, 11)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            locs = rng.uniform(-0.99, 0.99, size=n)
            m1 = rng.dirichlet(np.ones(n))
            m2 = rng.dirichlet(np.ones(n))
            before = cramer_exact((locs, m1), (locs, m2))
            pa, pb = project(locs, m1, g), project(locs, m2, g)
            after = cramer(pa, pb, g)
            assert after <= before + 1e-10


class TestShiftProject:
    def test_zero_shift_is_identity(self):
        p = np.array([0.2, 0.5, 0.3])
        np.testing.assert_array_equal(shift_project(p, 0.0, grid012()), p)

    def test_on_grid_shift(self):
        np.testing.assert_allclose(
            shift_project(np.array([1.0, 0.0, 0.0]), 1.0, grid012()), [0.0, 1.0, 0.0], atol=0
        )

    def test_clip_at_top_atom(self):
        # atom at 0.5 moved by 0.7 lands beyond the top of {0, 0.5, 1}
        g = SupportGrid.from_range(0.0, 1.0, 3)
        np.testing.assert_allclose(
            shift_project(np.array([0.0, 1.0, 0.0]), 0.7, g), [0.0, 0.0, 1.0], atol=1e-15
        )

    def test_matches_generic_projection(self):
        rng = np.random.default_rng(2)
        g = SupportGrid.from_range(-2.0, 2.0, 17)
        for _ in range(100):
            p = rng.dirichlet(np.ones(g.num_atoms))
            b = rng.uniform(-5.0, 5.0)
            via_project = project(g.atoms + b, p, g)
            np.testing.assert_allclose(shift_project(p, b, g), via_project, atol=1e-12)

    def test_matches_matrix_route(self):
        rng = np.random.default_rng(3)
        g = SupportGrid.from_range(-1.0, 3.0, 9)
        for _ in range(50):
            p = rng.dirichlet(np.ones(g.num_atoms))
            b = rng.uniform(-6.0, 6.0)
            np.testing.assert_allclose(shift_matrix(b, g) @ p, shift_project(p, b, g), atol=1e-12)

    def test_linear_in_weights(self):
        rng = np.random.default_rng(4)
        g = SupportGrid.from_range(0.0, 1.0, 6)
        p = rng.dirichlet(np.ones(6))
        q = rng.dirichlet(np.ones(6))
        lam, b = 0.3, 0.27
        mix = shift_project(lam * p + (1 - lam) * q, b, g)
        parts = lam * shift_project(p, b, g) + (1 - lam) * shift_project(q, b, g)
        np.testing.assert_allclose(mix, parts, atol=1e-12)

    def test_shift_equivariance_exact_on_dyadic_data(self):
        # projecting a c-shifted law onto the c-shifted grid reproduces the
        # unshifted coefficients exactly; dyadic inputs make the floating
        # point arithmetic exact
        rng = np.random.default_rng(5)
        for _ in range(50):
            d = int(rng.integers(3, 9))
            theta1 = rng.integers(-64, 64) / 16.0
            stride = rng.integers(1, 5) / 8.0
            g = SupportGrid(theta1, stride, d)
            n = int(rng.integers(1, 5))
            locs = (rng.integers(-256, 256, size=n)) / 32.0
            mass = rng.dirichlet(np.ones(n))
            c = rng.integers(-128, 128) / 16.0
            gc = SupportGrid(theta1 + c, stride, d)
            base = project(locs, mass, g)
            shifted = project(locs + c, mass, gc)
            np.testing.assert_array_equal(base, shifted)

    def test_lipschitz_in_shift(self):
        # cramer(L_b p, L_b' q) <= cramer(p, q) + stride^(-1/2) |b - b'|
        rng = np.random.default_rng(6)
        g = SupportGrid.from_range(-1.0, 1.0, 9)
        bound_const = g.stride ** -0.5
        for _ in range(200):
            p = rng.dirichlet(np.ones(9))
            q = rng.dirichlet(np.ones(9))
            b1, b2 = rng.uniform(-1.5, 1.5, size=2)
            lhs = cramer(shift_project(p, b1, g), shift_project(q, b2, g), g)
            rhs = cramer(p, q, g) + bound_const * abs(b1 - b2)
            assert lhs <= rhs + 1e-10


class TestCramer:
    def test_identity_of_indiscernibles(self):
        p = np.array([0.3, 0.3, 0.4])
        assert cramer(p, p, grid012()) == 0.0

    def test_two_atom_gap(self):
        g = SupportGrid.from_range(0.0, 1.0, 2)
        assert cramer(np.array([1.0, 0.0]), np.array([0.0, 1.0]), g) == pytest.approx(1.0)

    def test_endpoint_masses_on_half_stride(self):
        g = SupportGrid(0.0, 0.5, 3)
        p = np.array([1.0, 0.0, 0.0])
        q = np.array([0.0, 0.0, 1.0])
        assert cramer(p, q, g) == pytest.approx(1.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cramer(np.ones(3) / 3, np.ones(4) / 4, grid012())

    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(7)
        g = SupportGrid.from_range(-1.0, 1.0, 7)
        for _ in range(200):
            p, q, r = rng.dirichlet(np.ones(7), size=3)
            dpq = cramer(p, q, g)
            assert dpq == pytest.approx(cramer(q, p, g), abs=1e-14)
            assert dpq <= cramer(p, r, g) + cramer(r, q, g) + 1e-12

    def test_sup_matches_per_block_maximum(self):
        rng = np.random.default_rng(8)
        g = SupportGrid.from_range(0.0, 1.0, 6)
        for _ in range(50):
            P = rng.dirichlet(np.ones(6), size=4)
            Q = rng.dirichlet(np.ones(6), size=4)
            brute = max(cramer(P[i], Q[i], g) for i in range(4))
            assert cramer_sup(P, Q, g) == pytest.approx(brute, abs=1e-14)

    def test_sup_of_identical_families_is_zero(self):
        P = np.full((3, 4), 0.25)
        assert cramer_sup(P, P, SupportGrid.from_range(0.0, 1.0, 4)) == 0.0

    def test_coordinate_metric_equals_cdf_integral(self):
        # the coordinate formula reproduces the law-level Cramer distance of
        # the representatives for any common shift
        rng = np.random.default_rng(9)
        g = SupportGrid.from_range(-1.0, 2.0, 8)
        for _ in range(100):
            p = rng.dirichlet(np.ones(8))
            q = rng.dirichlet(np.ones(8))
            c = rng.uniform(-3.0, 3.0)
            exact = cramer_exact((g.atoms + c, p), (g.atoms + c, q))
            assert cramer(p, q, g) == pytest.approx(exact, abs=1e-10)

    def test_cdf_integral_against_quadrature(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            n1, n2 = rng.integers(2, 5, size=2)
            a = (rng.uniform(-1, 1, n1), rng.dirichlet(np.ones(n1)))
            b = (rng.uniform(-1, 1, n2), rng.dirichlet(np.ones(n2)))
            assert cramer_exact(a, b) == pytest.approx(cramer_quadrature(a, b), abs=1e-4)


class TestCumulativeAndMean:
    def test_point_mass_bottom(self):
        np.testing.assert_allclose(cumulative(np.array([1.0, 0.0, 0.0])), [1.0, 1.0])

    def test_point_mass_top(self):
        np.testing.assert_allclose(cumulative(np.array([0.0, 0.0, 1.0])), [0.0, 0.0])

    def test_uniform(self):
        np.testing.assert_allclose(cumulative(np.ones(3) / 3), [1 / 3, 2 / 3])

    def test_mean_of_point_mass(self):
        assert coeff_mean(np.array([0.0, 1.0, 0.0]), grid012()) == pytest.approx(1.0)

    def test_mean_of_uniform_grid(self):
        assert coeff_mean(np.ones(3) / 3, grid012()) == pytest.approx(1.0)

    def test_mean_shift(self):
        rng = np.random.default_rng(11)
        p = rng.dirichlet(np.ones(3))
        c = 0.37
        assert coeff_mean(p, grid012(), c) == pytest.approx(coeff_mean(p, grid012()) + c)


class TestExactLawUtilities:
    def test_merge_pools_coincident_atoms(self):
        locs, mass = merge_atoms([0.5, 0.5 + 1e-14, 1.0], [0.25, 0.25, 0.5])
        assert len(locs) == 2
        np.testing.assert_allclose(mass, [0.5, 0.5])

    def test_translation_is_detected(self):
        rng = np.random.default_rng(12)
        fam = random_exact_family(rng, 3)
        shifted = fam.translated(0.3)
        assert equal_up_to_translation(fam, shifted) == pytest.approx(0.3, abs=1e-12)

    def test_per_state_shift_is_rejected(self):
        fam = ExactLawFamily([(np.array([0.0]), np.array([1.0])), (np.array([1.0]), np.array([1.0]))])
        other = ExactLawFamily(
            [(np.array([0.3]), np.array([1.0])), (np.array([1.5]), np.array([1.0]))]
        )
        assert equal_up_to_translation(fam, other) is None

    def test_self_comparison_gives_zero(self):
        rng = np.random.default_rng(13)
        fam = random_exact_family(rng, 2)
        assert equal_up_to_translation(fam, fam) == pytest.approx(0.0, abs=0)

    def test_align_identical_families(self):
        rng = np.random.default_rng(14)
        g = SupportGrid.from_range(-1.0, 1.0, 9)
        fam = rng.dirichlet(np.ones(9), size=4)
        assert align_common_shift(fam, fam, g) == 0.0

    def test_align_constant_mean_offset(self):
        g = SupportGrid.from_range(0.0, 4.0, 5)
        a = np.zeros((2, 5))
        a[:, 1] = 1.0  # both means at 1.0
        b = np.zeros((2, 5))
        b[:, 2] = 1.0  # both means at 2.0
        assert align_common_shift(a, b, g) == pytest.approx(1.0)

    def test_align_matches_grid_scan(self):
        rng = np.random.default_rng(15)
        g = SupportGrid.from_range(-1.0, 1.0, 11)
        a = rng.dirichlet(np.ones(11), size=3)
        b = rng.dirichlet(np.ones(11), size=3)
        best = align_common_shift(a, b, g)
        cs = np.linspace(best - 0.5, best + 0.5, 2001)
        means_a = a @ g.atoms
        means_b = b @ g.atoms
        objective = [np.sum((means_a + c - means_b) ** 2) for c in cs]
        assert abs(cs[int(np.argmin(objective))] - best) <= cs[1] - cs[0]

    def test_family_from_coeffs_roundtrip(self):
        rng = np.random.default_rng(16)
        g = SupportGrid.from_range(0.0, 1.0, 4)
        p = rng.dirichlet(np.ones(4), size=2)
        fam = family_from_coeffs(p, g, shift=0.25)
        mats = fam.materialized()
        np.testing.assert_allclose(mats[0][0], g.atoms + 0.25)
        np.testing.assert_allclose(mats[1][1], p[1])


class TestWeightHygiene:
    def test_tiny_negative_clamped(self):
        w = normalize_weights(np.array([0.5, 0.5, -1e-13]))
        assert w.min() == 0.0 and w.sum() == pytest.approx(1.0, abs=0)

    def test_grossly_negative_rejected(self):
        with pytest.raises(ValueError):
            normalize_weights(np.array([1.1, -0.1]))


class TestCoeffCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(17)
        g = SupportGrid.from_range(-1.0, 1.0, 5)
        p = rng.dirichlet(np.ones(5), size=3)
        path = tmp_path / "fam.csv"
        write_coeff_csv(path, p, g)
        q, thetas = read_coeff_csv(path)
        np.testing.assert_array_equal(p, q)
        np.testing.assert_allclose(thetas, g.atoms)

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            read_coeff_csv(path)
