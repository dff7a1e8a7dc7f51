import math

import numpy as np
import pytest

from mmw3d.radar import (C_LIGHT, AntennaLayout, ChirpConfig, GeometryError,
                         angle_to_phase, baseline_chirp, derive_params,
                         layout_names, layout_preset, phase_to_xyz,
                         steering_vector, wrap_phase)


def test_baseline_chirp_bandwidth_and_resolution():
    cfg = baseline_chirp()
    assert cfg.bandwidth == pytest.approx(4e9)
    dp = derive_params(cfg)
    assert dp.range_resolution == pytest.approx(C_LIGHT / 8e9)
    assert dp.range_resolution == pytest.approx(0.0375, abs=2e-4)


def test_baseline_velocity_figures():
    dp = derive_params(baseline_chirp())
    assert dp.max_unambiguous_velocity == pytest.approx(0.973, abs=1e-3)
    assert dp.velocity_resolution == pytest.approx(0.0389, abs=1e-4)
    assert dp.wavelength == pytest.approx(3.893e-3, rel=1e-3)


def test_chirp_invariants_rejected():
    cfg = baseline_chirp()
    with pytest.raises(ValueError):
        ChirpConfig(f0=cfg.f0, slope=-1.0, chirp_duration=cfg.chirp_duration,
                    adc_rate=cfg.adc_rate, samples_per_chirp=cfg.samples_per_chirp,
                    chirps_per_frame=cfg.chirps_per_frame,
                    chirp_interval=cfg.chirp_interval, frame_duration=cfg.frame_duration)
    with pytest.raises(ValueError):
        # more samples than the chirp can hold
        ChirpConfig(f0=cfg.f0, slope=cfg.slope, chirp_duration=cfg.chirp_duration,
                    adc_rate=cfg.adc_rate, samples_per_chirp=2000,
                    chirps_per_frame=cfg.chirps_per_frame,
                    chirp_interval=cfg.chirp_interval, frame_duration=cfg.frame_duration)
    with pytest.raises(ValueError):
        # chirp interval shorter than the ramp
        ChirpConfig(f0=cfg.f0, slope=cfg.slope, chirp_duration=cfg.chirp_duration,
                    adc_rate=cfg.adc_rate, samples_per_chirp=cfg.samples_per_chirp,
                    chirps_per_frame=cfg.chirps_per_frame,
                    chirp_interval=50e-6, frame_duration=cfg.frame_duration)
    with pytest.raises(ValueError):
        # infinite bandwidth
        ChirpConfig(f0=cfg.f0, slope=math.inf, chirp_duration=cfg.chirp_duration,
                    adc_rate=cfg.adc_rate, samples_per_chirp=cfg.samples_per_chirp,
                    chirps_per_frame=cfg.chirps_per_frame,
                    chirp_interval=cfg.chirp_interval, frame_duration=cfg.frame_duration)


def test_steering_vector_boresight_all_ones():
    lay = layout_preset("4x4")
    sv = steering_vector(lay, 0.0, 0.0)
    assert sv.shape == (16,)
    np.testing.assert_array_equal(sv, np.ones(16, dtype=complex))


def test_steering_vector_azimuth_pair():
    pair = AntennaLayout(name="1x2", positions=((0, 0), (1, 0)))
    sv = steering_vector(pair, np.pi, 0.0)
    np.testing.assert_allclose(sv, [1.0, -1.0], atol=1e-15)


def test_steering_vector_quarter_cycle():
    lay = layout_preset("4x4")
    sv = steering_vector(lay, np.pi / 2, 0.0)
    row = sv[:4]  # first azimuth row
    np.testing.assert_allclose(row, [1, 1j, -1, -1j], atol=1e-15)


def test_steering_vector_unit_magnitude_property():
    rng = np.random.default_rng(7)
    for name in layout_names():
        lay = layout_preset(name)
        for _ in range(20):
            pa, pe = rng.uniform(-np.pi, np.pi, 2)
            sv = steering_vector(lay, pa, pe)
            np.testing.assert_allclose(np.abs(sv), 1.0, atol=1e-12)


def test_angle_to_phase_examples():
    assert angle_to_phase(0.0, 0.0) == (0.0, 0.0)
    dpa, dpe = angle_to_phase(np.pi / 6, 0.0)
    assert dpa == pytest.approx(np.pi / 2)
    assert dpe == 0.0
    dpa, dpe = angle_to_phase(np.pi / 6, np.pi / 6)
    assert dpa == pytest.approx(np.pi * 0.5 * math.cos(np.pi / 6))
    assert dpa == pytest.approx(1.3603, abs=1e-4)
    assert dpe == pytest.approx(np.pi / 2)


def test_angle_to_phase_rejects_out_of_view():
    with pytest.raises(ValueError):
        angle_to_phase(np.pi / 2, 0.0)
    with pytest.raises(ValueError):
        angle_to_phase(0.0, -np.pi / 2)


def test_phase_to_xyz_examples():
    assert phase_to_xyz(2.0, 0.0, 0.0) == (0.0, 2.0, 0.0)
    x, y, z = phase_to_xyz(2.0, np.pi / 2, 0.0)
    assert (x, z) == (1.0, 0.0)
    assert y == pytest.approx(math.sqrt(3.0))
    x, y, z = phase_to_xyz(1.0, np.pi / 4, np.pi / 4)
    assert (x, z) == (0.25, 0.25)
    assert y == pytest.approx(math.sqrt(1 - 0.125))


def test_phase_to_xyz_rejects_outside_sphere():
    with pytest.raises(GeometryError):
        phase_to_xyz(1.0, 0.99 * np.pi, 0.99 * np.pi)
    with pytest.raises(ValueError):
        phase_to_xyz(-1.0, 0.0, 0.0)


def test_phase_to_xyz_norm_identity():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = rng.uniform(0.1, 50.0)
        pa, pe = rng.uniform(-0.6 * np.pi, 0.6 * np.pi, 2)
        try:
            x, y, z = phase_to_xyz(d, pa, pe)
        except GeometryError:
            continue
        assert x * x + y * y + z * z == pytest.approx(d * d, rel=1e-12)
        assert y >= 0


def test_angle_phase_roundtrip_against_spherical():
    # compare with the direct spherical-coordinate construction
    rng = np.random.default_rng(11)
    for _ in range(500):
        d = rng.uniform(0.5, 10.0)
        th_a = rng.uniform(-1.39, 1.39)  # within +-80 deg
        th_e = rng.uniform(-1.39, 1.39)
        x, y, z = phase_to_xyz(d, *angle_to_phase(th_a, th_e))
        ref = np.array([
            d * math.cos(th_e) * math.sin(th_a),
            d * math.cos(th_e) * math.cos(th_a),
            d * math.sin(th_e),
        ])
        np.testing.assert_allclose([x, y, z], ref, rtol=1e-9, atol=1e-12)


def test_presets_have_expected_sizes():
    sizes = {"2x2": 4, "3x3": 9, "4x4": 16, "6x6": 36,
             "iwr6843": 12, "ods": 12, "wide": 12}
    for name, n in sizes.items():
        lay = layout_preset(name)
        assert lay.n_rx == n
        assert len(set(lay.positions)) == n
        assert lay.supports_2d


def test_layout_validation():
    with pytest.raises(ValueError):
        AntennaLayout(name="dup", positions=((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        AntennaLayout(name="empty", positions=())
    with pytest.raises(ValueError):
        layout_preset("5x5")


def test_positions_m_sign_convention():
    # a larger lattice index must sit at more negative x/z so that a target
    # at +x yields phases increasing with the index
    lay = layout_preset("4x4")
    pos = lay.positions_m(wavelength=4e-3)
    az = lay.az_indices
    assert np.all(np.diff(pos[np.argsort(az)[:4], 0].round(12)) <= 0)
    np.testing.assert_allclose(np.abs(pos[:, 0].min()), 3 * 2e-3)


def test_wrap_phase():
    assert wrap_phase(np.pi) == pytest.approx(-np.pi)
    assert wrap_phase(-np.pi) == pytest.approx(-np.pi)
    assert wrap_phase(3 * np.pi / 2) == pytest.approx(-np.pi / 2)
    np.testing.assert_allclose(wrap_phase(np.array([0.1, 2 * np.pi + 0.1])),
                               [0.1, 0.1], atol=1e-12)
