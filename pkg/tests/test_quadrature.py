import math

import numpy as np
import pytest

from heisenberg_hls.constants import diagonal_params
from heisenberg_hls.grids import GridSpec, ball_indicator, lp_norm, sample
from heisenberg_hls.group import GroupPoint, dilate, from_polar, identity
from heisenberg_hls.quadrature import (
    angular_average_kernel,
    bilinear_energy,
    fractional_integral,
    fractional_integral_grid,
    hls_quotient,
    kbar_many,
    kernel_table,
    riesz_kernel,
    weights_row,
)

# small grid reused across tests; table build is the expensive part
SMALL = GridSpec(n=1, n_rho=28, rho_min=5e-3, rho_max=25.0, n_t=56, t_max=25.0)


def H_profile(spec, lam=2.0):
    expo = (2 * 4 - lam) / 4.0
    return sample(lambda R, T: ((1 + R ** 2) ** 2 + T ** 2) ** (-expo), spec)


class TestRieszKernel:
    def test_unit_distance(self):
        u = identity(1)
        v = from_polar(1, 1.0, 0.0)
        assert riesz_kernel(u, v, 2.0) == pytest.approx(1.0, rel=1e-14)

    def test_singular_sentinel(self):
        u = from_polar(1, 0.7, 0.3)
        assert riesz_kernel(u, u, 2.0) == math.inf

    def test_homogeneity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            u = GroupPoint(1, rng.standard_normal(2), rng.standard_normal())
            v = GroupPoint(1, rng.standard_normal(2), rng.standard_normal())
            d = rng.uniform(0.2, 4.0)
            lam = rng.uniform(0.3, 3.7)
            k1 = riesz_kernel(dilate(d, u), dilate(d, v), lam)
            assert k1 == pytest.approx(d ** (-lam) * riesz_kernel(u, v, lam), rel=1e-10)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            u = GroupPoint(1, rng.standard_normal(2), rng.standard_normal())
            v = GroupPoint(1, rng.standard_normal(2), rng.standard_normal())
            assert riesz_kernel(u, v, 1.3) == pytest.approx(riesz_kernel(v, u, 1.3), rel=1e-12)

    def test_lambda_range(self):
        with pytest.raises(ValueError):
            riesz_kernel(identity(1), from_polar(1, 1.0, 0.0), 4.5)


class TestAngularAverage:
    def test_axis_case_closed_form(self):
        # rho' = 0: no angular dependence
        val = angular_average_kernel(1.5, 0.0, 0.3, 2.0)
        assert val == pytest.approx(((1.5 ** 2) ** 2 + 0.3 ** 2) ** (-0.5), rel=1e-12)

    def test_tau_sign_symmetry(self):
        a = angular_average_kernel(1.0, 1.4, 0.7, 2.5)
        b = angular_average_kernel(1.0, 1.4, -0.7, 2.5)
        assert a == pytest.approx(b, rel=1e-12)

    def test_frozen_reference_values(self):
        # frozen from a 2*10^6-node trapezoid evaluation
        assert angular_average_kernel(1.0, 2.0, 0.0, 2.0) == pytest.approx(
            0.25404984002426473, rel=1e-10
        )
        assert angular_average_kernel(1.0, 1.05, 0.1, 2.0) == pytest.approx(
            1.2332787495617306, rel=1e-10
        )

    def test_singular_point_sentinel(self):
        assert angular_average_kernel(1.0, 1.0, 0.0, 2.0) == math.inf

    def test_near_singular_matches_asymptotic(self):
        # leading behavior B_lam d^(2-lam) / (4 pi rho rho') for lam > 2
        from heisenberg_hls.constants import log_gamma

        lam, rho, d = 3.0, 1.3, 1e-5
        B = math.sqrt(math.pi) * math.exp(log_gamma(lam / 4 - 0.5) - log_gamma(lam / 4))
        asym = B * d ** (2 - lam) / (4 * math.pi * rho * rho)
        val = angular_average_kernel(rho, rho + d, 0.0, lam)
        assert val == pytest.approx(asym, rel=2e-3)

    def test_rho_swap_symmetric(self):
        a = kbar_many([0.8], [1.7], [0.4], 1.5)[0]
        b = kbar_many([1.7], [0.8], [0.4], 1.5)[0]
        assert a == pytest.approx(b, rel=1e-11)


class TestFractionalIntegral:
    def test_zero_function(self):
        spec = SMALL
        f = sample(lambda R, T: 0.0 * R, spec)
        assert fractional_integral(f, 2.0, identity(1)) == 0.0

    def test_linearity(self):
        spec = SMALL
        f = sample(lambda R, T: np.exp(-(R ** 2) - T ** 2), spec)
        g = sample(lambda R, T: 1.0 / (1.0 + R ** 4 + T ** 2), spec)
        u = from_polar(1, 0.9, 0.4)
        a1 = fractional_integral(f, 2.0, u)
        a2 = fractional_integral(g, 2.0, u)
        combo = f.with_values(2.0 * f.values - 3.0 * g.values)
        assert fractional_integral(combo, 2.0, u) == pytest.approx(2 * a1 - 3 * a2, rel=1e-10)

    def test_ball_oracle_at_origin(self):
        # I_2(chi_B1)(0) = Q |B1| / (Q - lambda) = pi^2
        spec = GridSpec(n=1, n_rho=96, rho_min=1e-3, rho_max=2.0, n_t=257, t_max=2.0)
        chi = ball_indicator(spec)
        val = fractional_integral(chi, 2.0, identity(1))
        assert val == pytest.approx(math.pi ** 2, rel=1e-2)

    def test_grid_evaluation_matches_point_evaluation(self):
        spec = SMALL
        f = H_profile(spec)
        If = fractional_integral_grid(f, 2.0)
        i, j = 14, 28
        u = from_polar(1, float(f.rho_nodes[i]), float(f.t_nodes[j]))
        val = fractional_integral(f, 2.0, u)
        assert val == pytest.approx(If.values[i, j], rel=1e-6)

    def test_exact_identity_at_extremal(self):
        # I_2 H = 2 pi H^(1/3) for n = 1, lambda = 2
        spec = SMALL
        f = H_profile(spec)
        If = fractional_integral_grid(f, 2.0)
        ref = 2 * math.pi * ((1 + f.rho_nodes[:, None] ** 2) ** 2 + f.t_nodes[None, :] ** 2) ** (-0.5)
        core = (f.rho_nodes[:, None] < 4.0) & (np.abs(f.t_nodes[None, :]) < 4.0)
        rel = np.abs(If.values - ref) / ref
        assert rel[core].max() < 0.05

    def test_rejects_n2(self):
        spec = GridSpec(n=2, n_rho=8, n_t=8)
        f = sample(lambda R, T: np.exp(-R - T ** 2), spec)
        with pytest.raises(ValueError):
            fractional_integral_grid(f, 2.0)

    def test_rejects_bad_lambda(self):
        f = H_profile(SMALL)
        with pytest.raises(ValueError):
            fractional_integral(f, 5.0, identity(1))


class TestBilinearEnergy:
    def test_zero(self):
        f = sample(lambda R, T: 0.0 * R, SMALL)
        g = H_profile(SMALL)
        assert bilinear_energy(f, g, 2.0) == 0.0

    def test_exact_symmetry(self):
        spec = SMALL
        f = sample(lambda R, T: np.exp(-(R ** 2) - (T - 1.0) ** 2), spec)
        g = sample(lambda R, T: 1.0 / (1.0 + (R ** 2 + T ** 2) ** 2), spec)
        assert bilinear_energy(f, g, 2.0) == bilinear_energy(g, f, 2.0)

    def test_grid_mismatch_rejected(self):
        f = H_profile(SMALL)
        g = H_profile(GridSpec(n=1, n_rho=16, rho_min=5e-3, rho_max=25.0, n_t=56, t_max=25.0))
        with pytest.raises(ValueError):
            bilinear_energy(f, g, 2.0)

    def test_extremal_energy_close_to_sharp(self):
        # E[H, H] -> C |H|_r^2 with C = 4; coarse grid gives a few percent
        f = H_profile(SMALL)
        e = bilinear_energy(f, f, 2.0)
        nrm = lp_norm(f, 4.0 / 3.0)
        assert e / nrm ** 2 == pytest.approx(4.0, rel=0.05)


class TestHlsQuotient:
    def test_scale_invariance(self):
        params = diagonal_params(1, 2.0)
        f = H_profile(SMALL)
        q1 = hls_quotient(f, params)
        q2 = hls_quotient(f.with_values(0.037 * f.values), params)
        assert q2 == pytest.approx(q1, rel=1e-12)

    def test_extremal_attains_sharp_constant(self):
        params = diagonal_params(1, 2.0)
        f = H_profile(SMALL)
        assert hls_quotient(f, params) == pytest.approx(4.0, rel=0.05)

    def test_zero_rejected(self):
        params = diagonal_params(1, 2.0)
        f = sample(lambda R, T: 0.0 * R, SMALL)
        with pytest.raises(ValueError):
            hls_quotient(f, params)

    def test_suboptimal_profile_below_sharp(self):
        params = diagonal_params(1, 2.0)
        g = sample(lambda R, T: np.exp(-(R ** 2) - T ** 2), SMALL)
        q = hls_quotient(g, params)
        assert q < 4.0

    def test_dilation_invariance(self):
        from heisenberg_hls.extremal import dilate_grid_function

        params = diagonal_params(1, 2.0)
        f = H_profile(SMALL)
        fd = dilate_grid_function(f, 1.5, params.p)
        q1 = hls_quotient(f, params)
        q2 = hls_quotient(fd, params)
        assert q2 == pytest.approx(q1, rel=2e-2)


class TestWeightsRow:
    def test_row_total_is_integral_of_kernel(self):
        # sum of weights approximates int over the grid of |u^-1 v|^-lam dv
        spec = SMALL
        f = H_profile(spec)
        row = weights_row(f, 2.0, 1.0, 0.0)
        ones = np.ones_like(f.values)
        # against the dense table row at a matching node
        tab = kernel_table(spec, 2.0)
        i = int(np.argmin(np.abs(f.rho_nodes - 1.0)))
        u = from_polar(1, float(f.rho_nodes[i]), float(f.t_nodes[28]))
        row2 = weights_row(f, 2.0, float(f.rho_nodes[i]), float(f.t_nodes[28]))
        I_tab = tab.apply(ones)[i, 28]
        assert float((row2 * ones).sum()) == pytest.approx(I_tab, rel=1e-6)
        assert np.all(row >= 0.0)

    def test_tail_control_energy(self):
        # truncating H beyond |u| = T on a fixed grid changes E[H,H] by less
        # than the analytic tail bound from the decay H <= |u|^(-(2Q-lam))
        from heisenberg_hls.group import ball_volume

        big = GridSpec(n=1, n_rho=48, rho_min=5e-3, rho_max=40.0, n_t=96, t_max=40.0)
        f = H_profile(big)
        T = 20.0
        R, Tm = np.meshgrid(f.rho_nodes, f.t_nodes, indexing="ij")
        inside = (R ** 4 + Tm ** 2) < T ** 4
        f_in = f.with_values(np.where(inside, f.values, 0.0))
        Eb = bilinear_energy(f, f, 2.0)
        Es = bilinear_energy(f_in, f_in, 2.0)
        nrm = lp_norm(f, 4.0 / 3.0)
        # |H chi_{|u|>T}|_r <= (|B1| T^-Q)^(1/r) via the pointwise bound
        tail_norm = (ball_volume(1) * T ** (-4.0)) ** (3.0 / 4.0)
        bound = 4.0 * (2.0 * nrm * tail_norm + tail_norm ** 2) * 1.2  # grid-error slack
        assert 0.0 < Eb - Es < bound
