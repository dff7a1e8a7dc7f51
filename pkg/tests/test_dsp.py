import numpy as np
import pytest

from mmw3d.dsp import (CfarParams, cfar_2d, covariance, doppler_fft,
                       mdl_order, next_pow2, range_fft, rd_heatmap)
from mmw3d.radar import ChirpConfig, baseline_chirp, layout_preset, steering_vector
from mmw3d.scene import Scene
from mmw3d.simulate import NoiseSpec, simulate_frame


def small_chirp(**over):
    base = dict(f0=77e9, slope=40e12, chirp_duration=100e-6, adc_rate=15e6,
                samples_per_chirp=300, chirps_per_frame=20,
                chirp_interval=1e-3, frame_duration=20e-3)
    base.update(over)
    return ChirpConfig(**base)


def test_next_pow2():
    assert next_pow2(1500) == 2048
    assert next_pow2(50) == 64
    assert next_pow2(64) == 64
    assert next_pow2(1) == 1


def test_range_fft_peak_bin_example():
    cfg = baseline_chirp()
    lay = layout_preset("2x2")
    cube = simulate_frame(Scene(points=[[0, 2, 0]], velocity=[0, 0, 0]), cfg, lay)
    rc = range_fft(cube, nfft=2048)
    assert rc.data.shape == (4, 50, 2048)
    for r in range(4):
        assert int(np.argmax(np.abs(rc.data[r, 0]))) == 73
    assert rc.range_bin_m == pytest.approx((15e6 / 2048) * 3e8 / (2 * 40e12), rel=1e-3)
    assert rc.bin_to_range(73) == pytest.approx(2.005, abs=2e-3)


def test_range_fft_zero_and_superposition():
    cfg = small_chirp()
    lay = layout_preset("2x2")
    zero = simulate_frame(Scene(points=[[0, 2, 0]], velocity=[0, 0, 0],
                                reflectivity=[0.0]), cfg, lay)
    rc = range_fft(zero)
    np.testing.assert_array_equal(rc.data, np.zeros_like(rc.data))
    two = simulate_frame(Scene(points=[[0, 2, 0], [0, 10, 0]], velocity=[0, 0, 0],
                               reflectivity=[1.0, 625.0]), cfg, lay)
    spec = np.abs(range_fft(two, nfft=512).data[0, 0])
    peaks = np.argsort(spec)[-2:]
    d = np.sort(range_fft(two, nfft=512).bin_to_range(peaks))
    assert d[0] == pytest.approx(2.0, abs=0.15)
    assert d[1] == pytest.approx(10.0, abs=0.15)


def test_range_fft_rejects_small_nfft():
    cfg = small_chirp()
    lay = layout_preset("2x2")
    cube = simulate_frame(Scene(points=[[0, 2, 0]], velocity=[0, 0, 0]), cfg, lay)
    with pytest.raises(ValueError):
        range_fft(cube, nfft=128)


def test_parseval_unnormalized_fft():
    rng = np.random.default_rng(0)
    x = rng.normal(size=300) + 1j * rng.normal(size=300)
    X = np.fft.fft(x, n=512)
    assert np.sum(np.abs(X) ** 2) == pytest.approx(512 * np.sum(np.abs(x) ** 2))


def test_doppler_fft_static_target_centered():
    cfg = small_chirp()
    lay = layout_preset("2x2")
    cube = simulate_frame(Scene(points=[[0, 2, 0]], velocity=[0, 0, 0]), cfg, lay)
    rd = doppler_fft(range_fft(cube))
    assert rd.data.shape == (4, 32, 512)
    rb = int(np.argmax(np.abs(rd.data[0]).max(axis=0)))
    db = int(np.argmax(np.abs(rd.data[0, :, rb])))
    assert db == 16  # zero-velocity bin after the shift
    assert rd.bin_to_velocity(db) == 0.0


def test_doppler_fft_velocity_recovery():
    cfg = baseline_chirp()
    lay = layout_preset("2x2")
    cube = simulate_frame(Scene(points=[[0, 2, 0]], velocity=[0, 0.5, 0]), cfg, lay)
    rd = doppler_fft(range_fft(cube))
    h = np.abs(rd.data[0]) ** 2
    db, rb = np.unravel_index(int(np.argmax(h)), h.shape)
    v = rd.bin_to_velocity(db)
    assert abs(v - 0.5) < rd.cfg.wavelength / (2 * 50 * cfg.chirp_interval)
    assert abs(v - 0.5) < 0.039


def test_doppler_aliasing_beyond_unambiguous():
    cfg = baseline_chirp()
    lay = layout_preset("2x2")
    v_true = 1.2  # above the 0.973 m/s limit
    cube = simulate_frame(Scene(points=[[0, 2, 0]], velocity=[0, v_true, 0]), cfg, lay)
    rd = doppler_fft(range_fft(cube))
    h = np.abs(rd.data[0]) ** 2
    db, _ = np.unravel_index(int(np.argmax(h)), h.shape)
    v_est = rd.bin_to_velocity(db)
    span = 2 * 0.9733521  # unambiguous interval width
    wrapped = (v_true + span / 2) % span - span / 2
    assert abs(v_est - wrapped) < 0.039


def test_rd_heatmap_is_receiver_mean_power():
    rng = np.random.default_rng(1)
    cfg = small_chirp()
    lay = layout_preset("2x2")
    cube = simulate_frame(Scene(points=[[0, 2, 0]], velocity=[0, 0, 0]), cfg, lay,
                          NoiseSpec(10.0), seed=2)
    rd = doppler_fft(range_fft(cube))
    h = rd_heatmap(rd)
    assert h.shape == rd.data.shape[1:]
    np.testing.assert_allclose(h, np.mean(np.abs(rd.data) ** 2, axis=0))
    assert np.all(h >= 0)
    # identical receivers -> heatmap equals the single-receiver power
    stacked = rd.data.copy()
    stacked[1:] = stacked[0]
    one = np.abs(stacked[0]) ** 2
    from dataclasses import replace
    np.testing.assert_allclose(rd_heatmap(replace(rd, data=stacked)), one)


def test_cfar_single_hot_cell():
    h = np.ones((32, 64))
    h[10, 20] = 100.0
    det = cfar_2d(h, CfarParams(train_range=4, train_doppler=4,
                                guard_range=2, guard_doppler=2, scale=5.0))
    assert len(det) == 1
    assert (det.doppler_bins[0], det.range_bins[0]) == (10, 20)
    assert det.powers[0] == 100.0
    assert det.thresholds[0] == pytest.approx(5.0)


def test_cfar_constant_heatmap_no_detections():
    h = np.full((16, 32), 3.7)
    det = cfar_2d(h, CfarParams(2, 2, 1, 1, 1.01))
    assert len(det) == 0


def test_cfar_positive_scale_invariance_exact():
    rng = np.random.default_rng(8)
    h = rng.random((24, 48)) ** 2
    h[5, 7] = 50.0
    h[20, 40] = 80.0
    p = CfarParams(4, 3, 1, 1, 4.0)
    base = cfar_2d(h, p)
    for c in (0.5, 2.0, 4.0, 1024.0):  # powers of two scale exactly in IEEE754
        det = cfar_2d(c * h, p)
        np.testing.assert_array_equal(det.doppler_bins, base.doppler_bins)
        np.testing.assert_array_equal(det.range_bins, base.range_bins)


def test_cfar_edge_clipping():
    # a hot cell in the corner must still be detectable: training clips
    h = np.ones((16, 16))
    h[0, 0] = 100.0
    det = cfar_2d(h, CfarParams(3, 3, 1, 1, 5.0))
    assert (0, 0) in list(zip(det.doppler_bins, det.range_bins))


def test_cfar_guard_excludes_leakage():
    # energy spread into guard cells must not raise the training mean
    h = np.ones((16, 32)) * 0.1
    h[8, 16] = 10.0
    h[8, 15] = h[8, 17] = 5.0  # shoulders inside the guard
    p_guarded = CfarParams(train_range=4, train_doppler=2,
                           guard_range=1, guard_doppler=1, scale=8.0)
    det = cfar_2d(h, p_guarded)
    cells = set(zip(det.doppler_bins, det.range_bins))
    assert (8, 16) in cells


def test_cfar_validation():
    with pytest.raises(ValueError):
        CfarParams(train_range=0, train_doppler=1, guard_range=1, guard_doppler=1, scale=2.0)
    with pytest.raises(ValueError):
        CfarParams(scale=0.0)
    with pytest.raises(ValueError):
        cfar_2d(np.zeros(16), CfarParams())


def test_covariance_rank_one_and_identity():
    rng = np.random.default_rng(2)
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    r = covariance(x[:, None])
    np.testing.assert_allclose(r, np.outer(x, x.conj()), atol=1e-12)
    # repeated steering vector snapshots
    lay = layout_preset("2x2")
    s = steering_vector(lay, 0.7, -0.3)
    snaps = np.tile(s[:, None], (1, 9))
    np.testing.assert_allclose(covariance(snaps), np.outer(s, s.conj()), atol=1e-12)


def test_covariance_of_white_noise_approaches_identity():
    rng = np.random.default_rng(3)
    n = 20000
    snaps = (rng.normal(size=(6, n)) + 1j * rng.normal(size=(6, n))) / np.sqrt(2)
    r = covariance(snaps)
    np.testing.assert_allclose(r, np.eye(6), atol=5 / np.sqrt(n))


def test_covariance_hermitian_psd_property():
    rng = np.random.default_rng(4)
    for _ in range(25):
        snaps = rng.normal(size=(5, 12)) + 1j * rng.normal(size=(5, 12))
        r = covariance(snaps)
        np.testing.assert_allclose(r, r.conj().T, atol=1e-12)
        lam = np.linalg.eigvalsh(r)
        assert lam.min() > -1e-9 * np.trace(r).real


def _mdl_brute(lams, n):
    p = len(lams)
    lams = np.maximum(np.asarray(lams, float), 1e-300)
    best, best_k = None, 0
    for k in range(p):
        tail = lams[k:]
        gm = np.exp(np.mean(np.log(tail)))
        am = np.mean(tail)
        cost = -n * (p - k) * np.log(gm / am) + 0.5 * k * (2 * p - k) * np.log(n)
        if best is None or cost < best - 1e-12:
            best, best_k = cost, k
    return best_k


def test_mdl_examples_against_brute_force():
    eigs = [10.0, 8.0] + [0.01] * 14
    assert mdl_order(eigs, 50) == _mdl_brute(eigs, 50) == 2
    flat = [1.0] * 8
    assert mdl_order(flat, 100) == 0
    one = [50.0] + [0.5] * 7
    assert mdl_order(one, 64) == _mdl_brute(one, 64) == 1


def test_mdl_random_against_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(50):
        lams = np.sort(rng.random(10))[::-1]
        n = int(rng.integers(2, 200))
        assert mdl_order(lams, n) == _mdl_brute(lams, n)


def test_mdl_recovers_source_count_monte_carlo():
    # well-separated unit sources at >= 20 dB, N >= 50 snapshots
    rng = np.random.default_rng(6)
    lay = layout_preset("4x4")
    hits = 0
    trials = 30
    for t in range(trials):
        m = int(rng.integers(1, 5))  # up to n_rx/4 sources here
        phases = rng.uniform(-2.5, 2.5, size=(m, 2))
        n = 80
        snaps = np.zeros((16, n), dtype=complex)
        for pa, pe in phases:
            s = steering_vector(lay, pa, pe)
            amp = (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2)
            snaps += s[:, None] * amp[None, :]
        sigma = 10 ** (-20 / 20)
        snaps += sigma * (rng.normal(size=(16, n)) + 1j * rng.normal(size=(16, n))) / np.sqrt(2)
        lam = np.linalg.eigvalsh(covariance(snaps))[::-1]
        if mdl_order(lam, n) == m:
            hits += 1
    assert hits >= 0.8 * trials


def test_mdl_never_exceeds_nrx_minus_one():
    rng = np.random.default_rng(7)
    for _ in range(30):
        lams = np.sort(rng.random(6) * 100)[::-1]
        assert 0 <= mdl_order(lams, 10) <= 5


def test_mdl_input_validation():
    with pytest.raises(ValueError):
        mdl_order([1.0, 2.0], 10)  # ascending
    with pytest.raises(ValueError):
        mdl_order([np.inf, 1.0], 10)
    with pytest.raises(ValueError):
        mdl_order([2.0, 1.0], 0)
