import numpy as np
import pytest

from nfcovert.channel import (ArrayGeometry, ArrayKind, ChannelParameterError,
                              GeometryError, build_far_field_channel,
                              build_near_field_los_channel, build_channels,
                              free_space_gain, near_field_rows,
                              path_loss_alice_ris, rayleigh_distance,
                              ris_geometry, scenario_rayleigh_distance,
                              ula_response, upa_response)
from nfcovert.config import SPEED_OF_LIGHT, PolarPosition, SystemConfig


def small_cfg(**kw):
    base = dict(m_a=8, m_b=2, m_w=2, m_rf=2, n_streams=1, n_y=8, n_z=4,
                n_clusters=2, n_rays=3, realizations=1)
    base.update(kw)
    return SystemConfig(**base)


class TestUlaResponse:
    def test_broadside_is_uniform(self):
        a = ula_response(0.0, 4, 0.005, 0.01)
        assert np.allclose(a, 0.5 * np.ones(4))

    def test_endfire_half_wavelength(self):
        a = ula_response(np.pi / 2, 2, 0.005, 0.01)
        expected = np.array([1.0, -1.0]) / np.sqrt(2)
        assert np.allclose(a, expected, atol=1e-12)

    def test_entry_phases_match_direct_formula(self):
        lam = 0.01
        a = ula_response(np.pi / 6, 8, lam / 2, lam)
        assert abs(np.linalg.norm(a) - 1.0) < 1e-12
        # entry m carries phase pi (m-1) / 2 at theta = pi/6, d = lam/2
        phase3 = np.angle(a[2])
        assert abs(phase3 - np.pi) < 1e-12 or abs(phase3 + np.pi) < 1e-12
        for m in range(8):
            expected = np.exp(1j * 2 * np.pi * (lam / 2) / lam * m * np.sin(np.pi / 6))
            assert abs(a[m] * np.sqrt(8) - expected) < 1e-12

    def test_parameter_errors(self):
        with pytest.raises(ChannelParameterError):
            ula_response(0.0, 0, 0.005, 0.01)
        with pytest.raises(ChannelParameterError):
            ula_response(0.0, 4, -1.0, 0.01)
        with pytest.raises(ChannelParameterError):
            ula_response(0.0, 4, 0.005, 0.0)


class TestUpaResponse:
    def test_broadside_is_uniform(self):
        a = upa_response(0.0, 0.0, 3, 5, 0.005, 0.01)
        assert np.allclose(a, np.ones(15) / np.sqrt(15))

    def test_degenerates_to_ula(self):
        a = upa_response(0.4, 0.0, 6, 1, 0.005, 0.01)
        b = ula_response(0.4, 6, 0.005, 0.01)
        assert np.allclose(a, b, atol=1e-14)

    def test_matches_elementwise_formula(self):
        lam, d = 0.01, 0.004
        theta, phi = np.pi / 4, np.pi / 3
        a = upa_response(theta, phi, 3, 2, d, lam)
        assert abs(np.linalg.norm(a) - 1.0) < 1e-12
        for ky in range(3):
            for kz in range(2):
                expected = np.exp(1j * 2 * np.pi * d / lam
                                  * (ky * np.sin(theta) * np.cos(phi)
                                     + kz * np.sin(phi))) / np.sqrt(6)
                assert abs(a[ky * 2 + kz] - expected) < 1e-12


class TestRayleighDistance:
    def test_zero_aperture(self):
        assert rayleigh_distance(0.0, 0.0, 28e9) == 0.0

    def test_paper_default_surface(self):
        cfg = SystemConfig()
        d_r = scenario_rayleigh_distance(cfg)
        assert abs(d_r - 42.78) / 42.78 < 0.01

    def test_quadratic_scaling(self):
        base = rayleigh_distance(0.3, 0.1, 28e9)
        assert np.isclose(rayleigh_distance(0.6, 0.2, 28e9), 4.0 * base)


class TestPathLoss:
    def test_reference_distance(self):
        assert np.isclose(10 * np.log10(path_loss_alice_ris(1.0)), -69.4)

    def test_fifty_meters(self):
        db = 10 * np.log10(path_loss_alice_ris(50.0))
        assert abs(db - (-(69.4 + 24.0 * np.log10(50.0)))) < 1e-9
        assert abs(db + 110.18) < 0.01

    def test_ten_meters(self):
        assert np.isclose(10 * np.log10(path_loss_alice_ris(10.0)), -93.4)

    def test_rejects_nonpositive(self):
        with pytest.raises(ChannelParameterError):
            path_loss_alice_ris(0.0)


class TestFarFieldChannel:
    def test_shape_and_determinism(self):
        cfg = small_cfg()
        g1 = build_far_field_channel(cfg, np.random.default_rng(7))
        g2 = build_far_field_channel(cfg, np.random.default_rng(7))
        assert g1.shape == (cfg.n_elements, cfg.m_a)
        assert np.array_equal(g1, g2)

    def test_frobenius_energy_concentrates(self):
        # law of large numbers: E ||G||_F^2 = M_A N chi
        cfg = small_cfg()
        chi = path_loss_alice_ris(cfg.alice.range_m)
        target = cfg.m_a * cfg.n_elements * chi
        rng = np.random.default_rng(3)
        energies = [np.linalg.norm(build_far_field_channel(cfg, rng)) ** 2
                    for _ in range(1000)]
        assert abs(np.mean(energies) - target) / target < 0.05

    def test_single_forced_path_is_rank_one(self):
        cfg = small_cfg(n_clusters=1, n_rays=1)

        class _OneRng:
            # forces alpha = 1 and all angles zero
            def uniform(self, lo, hi, size=None):
                return np.zeros(size)

            def normal(self, mu, sd, size=None):
                return np.zeros(size)

            def standard_normal(self, size=None):
                return np.ones(size)

        g = build_far_field_channel(cfg, _OneRng())
        chi = path_loss_alice_ris(cfg.alice.range_m)
        n, m_a = cfg.n_elements, cfg.m_a
        alpha = (1 + 1j) / np.sqrt(2)
        expected = (np.sqrt(m_a * n * chi) * alpha / np.sqrt(n * m_a)
                    * np.ones((n, m_a)))
        assert np.allclose(g, expected, rtol=1e-12)
        assert np.linalg.matrix_rank(g) == 1


class TestNearFieldChannel:
    def test_single_pair_gain_and_phase(self):
        ris = ArrayGeometry(ArrayKind.UPA, 1, 1, 0.005)
        f = 28e9
        h = build_near_field_los_channel(ris, PolarPosition(3.0, 0.7), 1, f)
        chi = SPEED_OF_LIGHT / (4 * np.pi * f * 3.0)
        assert h.shape == (1, 1)
        assert abs(h[0, 0] - chi) < 1e-15

    def test_entries_match_scalar_recomputation(self):
        cfg = small_cfg(n_y=2, n_z=2)
        ris = ris_geometry(cfg)
        pos = PolarPosition(2.5, np.pi / 5)
        h = build_near_field_los_channel(ris, pos, 3, cfg.carrier_hz)
        elem = ris.element_positions()
        rx_x, rx_y = pos.to_xy()
        d = ris.spacing_m
        for m in range(3):
            p = np.array([rx_x, rx_y + (m - 1.0) * d, 0.0])
            r_ref = np.linalg.norm(p)
            for n in range(4):
                r = np.linalg.norm(p - elem[n])
                chi = SPEED_OF_LIGHT / (4 * np.pi * cfg.carrier_hz * r)
                expected = chi * np.exp(-1j * 2 * np.pi * cfg.carrier_hz
                                        / SPEED_OF_LIGHT * (r - r_ref))
                assert abs(h[m, n] - expected) < 1e-12 * abs(expected)

    def test_magnitude_decreases_with_distance(self):
        ris = ArrayGeometry(ArrayKind.UPA, 16, 4, 0.0053)
        rows = near_field_rows(ris, np.array([[2.0, 1.0, 0.0]]), 28e9)
        elem = ris.element_positions()
        dists = np.linalg.norm(np.array([2.0, 1.0, 0.0]) - elem, axis=1)
        order = np.argsort(dists)
        mags = np.abs(rows[0])[order]
        assert np.all(np.diff(mags) <= 1e-18)

    def test_far_receiver_matches_planar_steering(self):
        cfg = small_cfg(n_y=16, n_z=4)
        ris = ris_geometry(cfg)
        lam = cfg.wavelength_m
        az = 0.35
        d_r = scenario_rayleigh_distance(cfg)
        h = build_near_field_los_channel(ris, PolarPosition(200.0 * d_r, az), 1,
                                         cfg.carrier_hz)
        row = h[0]
        a = upa_response(az, 0.0, cfg.n_y, cfg.n_z, cfg.d_x, lam)
        # remove the common gain and the global phase before comparing
        row_dir = row / np.linalg.norm(row)
        align = np.vdot(a, row_dir)
        row_dir = row_dir * np.exp(-1j * np.angle(align))
        rms = np.sqrt(np.mean(np.angle(row_dir / a) ** 2))
        assert rms < 1e-3

    def test_direction_converges_with_range(self):
        cfg = small_cfg(n_y=16, n_z=4)
        ris = ris_geometry(cfg)
        az = -0.5
        a = upa_response(az, 0.0, cfg.n_y, cfg.n_z, cfg.d_x, cfg.wavelength_m)
        sims = []
        for r in [5.0, 50.0, 5000.0]:
            h = build_near_field_los_channel(ris, PolarPosition(r, az), 1,
                                             cfg.carrier_hz)
            row = h[0] / np.linalg.norm(h[0])
            sims.append(abs(np.vdot(a, row)))
        assert sims[0] < sims[1] < sims[2]
        assert sims[-1] > 1.0 - 1e-6

    def test_probe_on_element_rejected(self):
        ris = ArrayGeometry(ArrayKind.UPA, 2, 2, 0.005)
        bad = ris.element_positions()[0][None, :]
        with pytest.raises(GeometryError):
            near_field_rows(ris, bad, 28e9)


class TestChannelSet:
    def test_build_channels_shapes_and_determinism(self):
        cfg = small_cfg()
        ch1 = build_channels(cfg, np.random.default_rng(11))
        ch2 = build_channels(cfg, np.random.default_rng(11))
        assert ch1.G.shape == (cfg.n_elements, cfg.m_a)
        assert ch1.H.shape == (cfg.m_b, cfg.n_elements)
        assert ch1.F.shape == (cfg.m_w, cfg.n_elements)
        assert np.array_equal(ch1.G, ch2.G)
        assert np.array_equal(ch1.H, ch2.H)
        assert np.array_equal(ch1.F, ch2.F)

    def test_warden_uses_same_construction(self):
        cfg = small_cfg(willie=PolarPosition(15.0, np.pi / 4), m_w=2, m_b=2)
        ch = build_channels(cfg, np.random.default_rng(0))
        # identical position and antenna count -> identical LoS channel
        assert np.allclose(ch.F, ch.H)


class TestSteeringNormInvariant:
    @pytest.mark.parametrize("theta", np.linspace(-1.4, 1.4, 7))
    def test_ula_unit_norm(self, theta):
        a = ula_response(theta, 13, 0.0051, 0.0107)
        assert abs(np.linalg.norm(a) - 1.0) < 1e-12

    @pytest.mark.parametrize("theta,phi", [(0.3, -0.2), (1.1, 0.8), (-0.7, 0.1)])
    def test_upa_unit_norm(self, theta, phi):
        a = upa_response(theta, phi, 9, 5, 0.0051, 0.0107)
        assert abs(np.linalg.norm(a) - 1.0) < 1e-12


def test_free_space_gain_formula():
    assert np.isclose(free_space_gain(28e9, 10.0),
                      SPEED_OF_LIGHT / (4 * np.pi * 28e9 * 10.0))
