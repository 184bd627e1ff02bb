import numpy as np
import pytest
from scipy.integrate import quad

from nfcovert.detection import (NoiseUncertainty, dep, detection_report,
                                leakage_power, max_leakage, min_dep, noise_pdf,
                                optimal_threshold)


def make_u(sigma_sq=1e-14, rho_db=3.0, m_w=4):
    return NoiseUncertainty(sigma_sq=sigma_sq, rho=10 ** (rho_db / 10), m_w=m_w)


class TestNoisePdf:
    def test_zero_outside_support(self):
        u = make_u()
        lo, hi = u.support
        assert noise_pdf(lo * 0.5, u) == 0.0
        assert noise_pdf(hi * 2.0, u) == 0.0

    def test_integrates_to_one(self):
        u = make_u(sigma_sq=2.3e-14, rho_db=4.0)
        lo, hi = u.support
        total, err = quad(lambda x: noise_pdf(x, u), lo, hi)
        assert abs(total - 1.0) < 1e-9

    def test_density_at_nominal(self):
        u = make_u(sigma_sq=1e-13, rho_db=3.0)
        rho = 10 ** 0.3
        expected = 1.0 / (2 * np.log(rho) * 1e-13)
        assert np.isclose(noise_pdf(1e-13, u), expected, rtol=1e-12)

    def test_vectorized(self):
        u = make_u()
        xs = np.linspace(u.support[0], u.support[1], 5)
        assert noise_pdf(xs, u).shape == (5,)


class TestLeakagePower:
    def test_zero_precoder(self):
        rng = np.random.default_rng(0)
        f = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        g = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        w_rf = np.exp(1j * rng.uniform(0, 2 * np.pi, (4, 2)))
        assert leakage_power(f, v, g, w_rf, np.zeros((2, 1))) == 0.0

    def test_all_scalar_unit(self):
        one = np.ones((1, 1))
        assert np.isclose(leakage_power(one, np.ones(1), one, one, one), 1.0)

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(5)
        m_w, n, m_a, l = 2, 2, 2, 2
        f = rng.standard_normal((m_w, n)) + 1j * rng.standard_normal((m_w, n))
        g = rng.standard_normal((n, m_a)) + 1j * rng.standard_normal((n, m_a))
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        w_rf = rng.standard_normal((m_a, l)) + 1j * rng.standard_normal((m_a, l))
        w_bb = rng.standard_normal((l, l)) + 1j * rng.standard_normal((l, l))

        # naive elementwise product chain
        total = 0.0
        for i in range(m_w):
            for j in range(l):
                acc = 0.0 + 0.0j
                for a in range(n):
                    for b in range(m_a):
                        for c in range(l):
                            acc += f[i, a] * v[a] * g[a, b] * w_rf[b, c] * w_bb[c, j]
                total += abs(acc) ** 2
        assert np.isclose(leakage_power(f, v, g, w_rf, w_bb), total, rtol=1e-10)

    def test_accepts_diagonal_matrix(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        g = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        v = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        w = rng.standard_normal((2, 1)) + 1j * rng.standard_normal((2, 1))
        eye = np.eye(1)
        assert np.isclose(leakage_power(f, v, g, w, eye),
                          leakage_power(f, np.diag(v), g, w, eye))


class TestOptimalThreshold:
    def test_zero_leakage(self):
        u = make_u()
        assert np.isclose(optimal_threshold(0.0, u), u.m_w * u.sigma_sq / u.rho)

    def test_cap_for_huge_leakage(self):
        u = make_u()
        assert np.isclose(optimal_threshold(1.0, u), u.rho * u.m_w * u.sigma_sq)

    def test_branches_meet_at_zmax(self):
        u = make_u()
        z = u.z_max
        assert np.isclose(u.m_w * u.sigma_sq / u.rho + z,
                          u.rho * u.m_w * u.sigma_sq)


class TestDep:
    def test_identical_hypotheses(self):
        u = make_u()
        gamma = u.m_w * u.sigma_sq  # inside the scaled support
        assert dep(gamma, 0.0, u) == 1.0

    def test_threshold_below_support(self):
        u = make_u()
        gamma = 0.5 * u.m_w * u.support[0]
        assert dep(gamma, u.z_max / 2, u) == 1.0

    def test_optimal_threshold_beats_grid(self):
        u = make_u(sigma_sq=3e-14, rho_db=5.0)
        rng = np.random.default_rng(9)
        z = 0.4 * u.z_max
        best = dep(optimal_threshold(z, u), z, u)
        for gamma in rng.uniform(0.1 * u.m_w * u.support[0],
                                 2.0 * u.m_w * u.support[1], 200):
            assert best <= dep(gamma, z, u) + 1e-12

    def test_grid_minimizer_near_threshold(self):
        u = make_u()
        z = 0.3 * u.z_max
        grid = np.linspace(0.5 * u.m_w * u.support[0],
                           1.5 * u.m_w * u.support[1], 10_000)
        vals = [dep(g, z, u) for g in grid]
        g_star = grid[int(np.argmin(vals))]
        step = grid[1] - grid[0]
        assert abs(g_star - optimal_threshold(z, u)) <= step


class TestMinDep:
    def test_no_leakage(self):
        assert min_dep(0.0, make_u()) == 1.0

    def test_boundary_exactly_zero(self):
        u = make_u()
        assert min_dep(u.z_max, u) == 0.0
        assert min_dep(u.z_max * 1.5, u) == 0.0

    def test_half_point(self):
        # z = M s^2 (rho - 1)/rho makes the log argument rho, hence DEP 1/2
        u = make_u(rho_db=6.0)
        z = u.m_w * u.sigma_sq * (u.rho - 1.0) / u.rho
        assert abs(min_dep(z, u) - 0.5) < 1e-12

    def test_agrees_with_threshold_dep(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            u = make_u(sigma_sq=10 ** rng.uniform(-16, -10),
                       rho_db=rng.uniform(0.5, 10.0),
                       m_w=int(rng.integers(1, 9)))
            z = rng.uniform(0.0, 1.2) * u.z_max
            assert abs(min_dep(z, u) - dep(optimal_threshold(z, u), z, u)) <= 1e-12

    def test_nonincreasing_in_leakage(self):
        u = make_u()
        zs = np.linspace(0.0, 1.2 * u.z_max, 50)
        vals = [min_dep(z, u) for z in zs]
        assert np.all(np.diff(vals) <= 1e-15)
        for z, val in zip(zs, vals):
            assert (val == 0.0) == (z >= u.z_max)


class TestMaxLeakage:
    def test_zero_covertness_level(self):
        assert max_leakage(0.0, make_u()) == 0.0

    def test_second_branch_active_below_half(self):
        # for kappa < 0.5 the exponential branch is the smaller one
        for rho_db in (1.0, 3.0, 6.0):
            for kappa in (0.01, 0.1, 0.49):
                u = make_u(rho_db=rho_db)
                budget = np.expm1(2 * kappa * np.log(u.rho)) * u.m_w * u.sigma_sq / u.rho
                assert np.isclose(max_leakage(kappa, u), budget)
                assert budget < u.z_max

    def test_monotone_in_kappa(self):
        u = make_u()
        ks = np.linspace(0.0, 0.9, 40)
        vals = [max_leakage(k, u) for k in ks]
        assert np.all(np.diff(vals) >= 0.0)

    def test_covertness_constraint_chain(self):
        # any leakage within the budget keeps the DEP above 1 - kappa
        rng = np.random.default_rng(13)
        for _ in range(100):
            u = make_u(sigma_sq=10 ** rng.uniform(-15, -11),
                       rho_db=rng.uniform(1.0, 8.0),
                       m_w=int(rng.integers(1, 6)))
            kappa = rng.uniform(0.001, 0.4)
            budget = max_leakage(kappa, u)
            z = rng.uniform(0.0, 1.0) * budget
            assert min_dep(z, u) >= 1.0 - kappa - 1e-12


class TestDetectionReport:
    def test_fields_consistent(self):
        u = make_u()
        rep = detection_report(0.2 * u.z_max, 0.05, u)
        assert rep.threshold <= u.rho * u.m_w * u.sigma_sq
        assert rep.p_leak > 0.0
        assert 0.0 <= rep.min_dep <= 1.0

    def test_rejects_bad_dep(self):
        with pytest.raises(ValueError):
            detection_report(-1.0, 0.1, make_u())


class TestNoiseUncertaintyValidation:
    def test_rejects_rho_below_one(self):
        with pytest.raises(ValueError):
            NoiseUncertainty(sigma_sq=1e-14, rho=0.9, m_w=2)

    def test_rejects_nonpositive_power(self):
        with pytest.raises(ValueError):
            NoiseUncertainty(sigma_sq=0.0, rho=2.0, m_w=2)
