import math

import numpy as np
import pytest

from heisenberg_hls.concentration import (
    DiscreteMeasure,
    brezis_lieb_defect,
    classify_trichotomy,
    dichotomy_split,
    levy_concentration,
    split_family,
    spread_family,
    strict_subadditivity_gap,
    translate_family,
)
from heisenberg_hls.grids import GridSpec, sample
from heisenberg_hls.group import GroupPoint, distance, norm


def point_mass(coords, mass=1.0):
    return DiscreteMeasure(1, np.array([coords]), np.array([mass]))


class TestLevyConcentration:
    def test_unit_mass_at_origin(self):
        mu = point_mass([0.0, 0.0, 0.0])
        for R in (0.1, 1.0, 10.0):
            assert levy_concentration(mu, R) == 1.0

    def test_two_atoms_at_distance(self):
        pts = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]])
        mu = DiscreteMeasure(1, pts, np.array([0.5, 0.5]))
        assert levy_concentration(mu, 4.0) == 0.5
        assert levy_concentration(mu, 11.0) == 1.0

    def test_monotone_in_R(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((40, 3)) * 2.0
        masses = rng.uniform(0.0, 1.0, 40)
        mu = DiscreteMeasure(1, pts, masses)
        vals = [levy_concentration(mu, R) for R in (0.5, 1.0, 2.0, 4.0, 8.0)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] <= mu.total_mass + 1e-12

    def test_requires_positive_R(self):
        with pytest.raises(ValueError):
            levy_concentration(point_mass([0, 0, 0]), 0.0)


class TestDichotomySplit:
    def test_all_mass_inside(self):
        mu = point_mass([0.0, 0.0, 0.0])
        p1, p2 = dichotomy_split(mu, GroupPoint(1, np.zeros(2), 0.0), 1.0)
        assert p1.total_mass == 1.0 and p2.total_mass == 0.0

    def test_partition_exact(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((60, 3)) * 3.0
        masses = rng.uniform(0.0, 1.0, 60)
        mu = DiscreteMeasure(1, pts, masses)
        c = GroupPoint(1, np.array([0.5, -0.2]), 0.3)
        p1, p2 = dichotomy_split(mu, c, 2.0)
        assert p1.total_mass + p2.total_mass == pytest.approx(mu.total_mass, rel=1e-14)
        assert np.allclose(p1.masses + p2.masses, mu.masses)

    def test_supports_respect_ball(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((60, 3)) * 3.0
        mu = DiscreteMeasure(1, pts, np.ones(60))
        c = GroupPoint(1, np.zeros(2), 0.0)
        R = 1.5
        p1, p2 = dichotomy_split(mu, c, R)
        for pt, m in zip(p1.points, p1.masses):
            if m > 0:
                assert distance(c, GroupPoint(1, pt[:2], pt[2])) < R
        for pt, m in zip(p2.points, p2.masses):
            if m > 0:
                assert distance(c, GroupPoint(1, pt[:2], pt[2])) >= R


class TestClassifier:
    def test_spread_is_vanishing(self):
        v = classify_trichotomy(spread_family(10, 0))
        assert v.kind == "vanishing"
        assert v.diagnostics["k_sup"] < 0.05

    def test_translate_is_compactness(self):
        v = classify_trichotomy(translate_family(10, 0))
        assert v.kind == "compactness"
        assert v.centers is not None and len(v.centers) == 10

    def test_translate_centers_recovered(self):
        fam = translate_family(8, 3, step=4.0)
        v = classify_trichotomy(fam)
        # recovered center must sit inside the translated cloud (radius 1)
        for j, c in enumerate(v.centers, start=1):
            z = np.zeros(2)
            z[0] = 4.0 * j
            true_u = GroupPoint(1, z, 0.5 * j)
            assert distance(true_u, c) <= 1.0 + 1e-9

    def test_split_is_dichotomy_with_k(self):
        v = classify_trichotomy(split_family(10, 0, k=0.3))
        assert v.kind == "dichotomy"
        assert v.k == pytest.approx(0.3, abs=0.05)
        p1, p2 = v.split
        assert p1.total_mass + p2.total_mass == pytest.approx(1.0, rel=1e-12)

    def test_twenty_seeded_instances(self):
        for seed in range(20):
            assert classify_trichotomy(spread_family(10, seed)).kind == "vanishing"
            assert classify_trichotomy(translate_family(10, seed)).kind == "compactness"
            v = classify_trichotomy(split_family(10, seed, k=0.3))
            assert v.kind == "dichotomy" and abs(v.k - 0.3) <= 0.05

    def test_translation_invariance_of_verdicts(self):
        u = GroupPoint(1, np.array([7.0, -2.0]), 11.0)
        for fam_fn in (spread_family, translate_family):
            fam = fam_fn(9, 4)
            v0 = classify_trichotomy(fam)
            v1 = classify_trichotomy([mu.translated(u) for mu in fam])
            assert v0.kind == v1.kind
        fam = split_family(9, 4, k=0.3)
        v0 = classify_trichotomy(fam)
        v1 = classify_trichotomy([mu.translated(u) for mu in fam])
        assert v0.kind == v1.kind == "dichotomy"
        assert v1.k == pytest.approx(v0.k, abs=1e-9)

    def test_rejects_unnormalized(self):
        mu = point_mass([0, 0, 0], mass=2.0)
        with pytest.raises(ValueError):
            classify_trichotomy([mu, mu, mu])

    def test_rejects_short_sequences(self):
        mu = point_mass([0, 0, 0])
        with pytest.raises(ValueError):
            classify_trichotomy([mu, mu])

    def test_dichotomy_k_against_other_fraction(self):
        v = classify_trichotomy(split_family(10, 1, k=0.7))
        assert v.kind == "dichotomy"
        assert v.k == pytest.approx(0.7, abs=0.05)


class TestBrezisLiebDefect:
    SPEC = GridSpec(n=1, n_rho=24, rho_min=1e-2, rho_max=20.0, n_t=48, t_max=20.0)

    def bump(self, center, width=1.0):
        return sample(
            lambda R, T: np.exp(-(R ** 2) / width - ((T - center) / width) ** 2), self.SPEC
        )

    def test_equal_functions_zero(self):
        f = self.bump(0.0)
        assert brezis_lieb_defect(f, f, 4.0 / 3.0) == 0.0

    def test_disjoint_supports_zero(self):
        f = self.bump(0.0)
        g = self.bump(10.0)
        fs = f.with_values(np.where(f.values > 1e-6, f.values, 0.0))
        gs = g.with_values(np.where(g.values > 1e-6, g.values, 0.0))
        assert np.all(fs.values * gs.values == 0.0)  # genuinely disjoint
        fj = fs.with_values(fs.values + gs.values)
        assert brezis_lieb_defect(fj, fs, 4.0 / 3.0) == 0.0

    def test_escaping_bump_defect_decays(self):
        f = self.bump(0.0)
        fs = f.with_values(np.where(f.values > 1e-6, f.values, 0.0))
        defects = []
        for D in (0.0, 2.0, 5.0, 10.0, 16.0):
            b = self.bump(D)
            bs = b.with_values(np.where(b.values > 1e-6, b.values, 0.0))
            fj = fs.with_values(fs.values + bs.values)
            defects.append(brezis_lieb_defect(fj, fs, 4.0 / 3.0))
        assert defects[-1] < 1e-3 * defects[0]
        assert all(b <= a + 1e-12 for a, b in zip(defects[1:], defects[2:]))

    def test_p1_nonneg_dominating_case(self):
        # p = 1 with f_j >= f >= 0 pointwise: integrand vanishes identically
        f = self.bump(0.0)
        fj = f.with_values(f.values * 1.7)
        assert brezis_lieb_defect(fj, f, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_grid_mismatch_rejected(self):
        f = self.bump(0.0)
        other = sample(lambda R, T: R * 0.0, GridSpec(n_rho=16, n_t=16))
        with pytest.raises(ValueError):
            brezis_lieb_defect(f, other, 2.0)


class TestStrictSubadditivityGap:
    def test_boundary_values(self):
        assert strict_subadditivity_gap(0.0, 1.0, 2.0) == 0.0
        assert strict_subadditivity_gap(1.0, 1.0, 2.0) == 0.0

    def test_half_with_ratio_two(self):
        assert strict_subadditivity_gap(0.5, 1.0, 2.0) == pytest.approx(0.5, rel=1e-14)

    @pytest.mark.parametrize("ratio", [1.5, 2.0, 3.0])
    def test_positive_on_open_interval(self, ratio):
        ks = np.linspace(0.0, 1.0, 1002)[1:-1]
        gaps = np.array([strict_subadditivity_gap(float(k), 1.0, ratio) for k in ks])
        assert np.all(gaps > 0.0)

    def test_rejects_bad_exponents(self):
        with pytest.raises(ValueError):
            strict_subadditivity_gap(0.5, 2.0, 2.0)
        with pytest.raises(ValueError):
            strict_subadditivity_gap(1.5, 1.0, 2.0)


class TestDiscreteMeasure:
    def test_from_grid_function_mass(self):
        spec = GridSpec(n=1, n_rho=24, rho_min=1e-2, rho_max=20.0, n_t=48, t_max=20.0)
        f = sample(lambda R, T: np.exp(-(R ** 2) - T ** 2), spec)
        from heisenberg_hls.grids import lp_norm

        mu = DiscreteMeasure.from_grid_function(f, 4.0 / 3.0)
        assert mu.total_mass == pytest.approx(lp_norm(f, 4.0 / 3.0) ** (4.0 / 3.0), rel=1e-12)

    def test_translated_preserves_masses_and_distances(self):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal((30, 3))
        mu = DiscreteMeasure(1, pts, np.ones(30) / 30)
        u = GroupPoint(1, np.array([2.0, 1.0]), -3.0)
        nu = mu.translated(u)
        assert nu.total_mass == pytest.approx(1.0)
        # left translation preserves pairwise distances
        a = GroupPoint(1, pts[0, :2], pts[0, 2])
        b = GroupPoint(1, pts[1, :2], pts[1, 2])
        a2 = GroupPoint(1, nu.points[0, :2], nu.points[0, 2])
        b2 = GroupPoint(1, nu.points[1, :2], nu.points[1, 2])
        assert distance(a2, b2) == pytest.approx(distance(a, b), rel=1e-10)

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            DiscreteMeasure(1, np.zeros((1, 3)), np.array([-0.1]))
