"""The two point-cloud construction chains and the super-resolution
resampling stage.

Chain 1: range FFT -> Doppler FFT -> receiver-averaged heatmap -> CA-CFAR ->
per-detection single-snapshot AoA -> Cartesian points (radial velocity from
the Doppler bin).

Chain 2: range FFT -> per range bin: chirps as snapshots -> covariance ->
MDL source count -> spectrum search -> Cartesian points.

The super-resolution stage redraws each detection's range and angle
coordinates from a linearly upsampled neighbourhood of its power spectrum,
keeping the total point count unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import aoa, dsp
from .pointcloud import PointCloud
from .radar import GeometryError, phase_to_xyz, wrap_phase
from .simulate import RawDataCube

__all__ = [
    "PipelineOptions",
    "SrpcParams",
    "run_pipeline",
    "run_dpc1",
    "run_dpc2",
    "run_with_srpc",
    "srpc_resample",
    "ESTIMATORS",
]

ESTIMATORS = ("fft", "conventional", "mvdr", "music")


@dataclass(frozen=True)
class SrpcParams:
    """Super-resolution resampling knobs.

    alpha scales how many samples a detection spawns (n_i = p_i*alpha/th,
    at least 1); upsample_factor is the linear-interpolation densification;
    neighborhood is the half-width, in original bins, samples may move.
    max_draws bounds n_i so a single dominant detection cannot blow up the
    candidate pool.
    """

    alpha: float = 2.0
    upsample_factor: int = 8
    neighborhood: int = 1
    max_draws: int = 16

    def __post_init__(self):
        if not (self.alpha > 0 and self.upsample_factor >= 2
                and self.neighborhood >= 1 and self.max_draws >= 1):
            raise ValueError("SRPC parameters must be positive "
                             "(upsample_factor >= 2, neighborhood >= 1)")

    def n_draws(self, power: float, threshold: float) -> int:
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        return int(min(max(1, round(power * self.alpha / threshold)), self.max_draws))


@dataclass(frozen=True)
class PipelineOptions:
    """Which chain, estimator and search to run, plus their hyperparameters."""

    dpc: int = 1
    estimator: str = "music"
    search: str = "subgrid"          # 1d | 2d | subgrid
    cfar: dsp.CfarParams = field(default_factory=dsp.CfarParams)
    angle_bins: int = 512
    range_nfft: int | None = None
    doppler_nfft: int | None = None
    loading: float = aoa.DEFAULT_LOADING
    subgrid_levels: tuple = (33, 7, 7)
    dpc1_source_count: object = 1    # sources per detection: int or "mdl"
    srpc: SrpcParams | None = None
    seed: int = 0

    def __post_init__(self):
        if self.dpc not in (1, 2):
            raise ValueError("dpc must be 1 or 2")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.search not in ("1d", "2d", "subgrid"):
            raise ValueError("search must be 1d, 2d or subgrid")
        if self.estimator == "fft":
            if self.dpc != 1:
                raise ValueError("the angle-FFT estimator is single-snapshot only (dpc=1)")
            if self.search == "subgrid":
                raise ValueError("angle-FFT supports 1d or 2d (full-grid) search only")
        if self.angle_bins < 2:
            raise ValueError("angle_bins must be >= 2")
        if self.srpc is not None and self.dpc == 2:
            raise ValueError("super-resolution resampling applies to dpc=1 only "
                             "(chain 2 has no detection threshold)")

    def strategy(self) -> aoa.SearchStrategy:
        return aoa.SearchStrategy(variant=self.search, levels=self.subgrid_levels)


def run_pipeline(cube: RawDataCube, opts: PipelineOptions) -> PointCloud:
    """Dispatch on chain and SRPC."""
    if opts.srpc is not None:
        return run_with_srpc(cube, opts)
    return run_dpc1(cube, opts) if opts.dpc == 1 else run_dpc2(cube, opts)


# ---------------------------------------------------------------------------
# chain 1

def _detections_sorted(det: dsp.CfarDetections):
    order = np.lexsort((det.doppler_bins, det.range_bins))
    return [(int(det.range_bins[i]), int(det.doppler_bins[i]),
             float(det.powers[i]), float(det.thresholds[i])) for i in order]


def _dpc1_m(snapshot, opts: PipelineOptions, n_rx: int) -> int:
    if opts.dpc1_source_count != "mdl":
        return int(opts.dpc1_source_count)
    r1 = np.outer(snapshot, snapshot.conj())
    eps = max(opts.loading, 1e-12) * (np.abs(snapshot) ** 2).sum() / n_rx
    lam = np.linalg.eigvalsh(0.5 * (r1 + r1.conj().T) + eps * np.eye(n_rx))[::-1]
    return max(dsp.mdl_order(np.maximum(lam, 0.0), 1), 1)


def _dpc1_aoa(snapshot, opts: PipelineOptions, layout):
    """Single-snapshot AoA of one detection.

    Returns (estimates, evaluator) where evaluator is None on the FFT path.
    """
    m = _dpc1_m(snapshot, opts, layout.n_rx)
    if opts.estimator == "fft":
        return aoa.angle_fft(snapshot, layout, mode=opts.search,
                             nbins=opts.angle_bins, m=m), None
    r1 = np.outer(snapshot, snapshot.conj())
    ev = aoa.SpectrumEvaluator(opts.estimator, 0.5 * (r1 + r1.conj().T), layout,
                               m=m, loading=max(opts.loading, 1e-12))
    res = aoa.search(ev, opts.strategy(), m, opts.angle_bins)
    return res.estimates, ev


def run_dpc1(cube: RawDataCube, opts: PipelineOptions) -> PointCloud:
    if opts.dpc != 1:
        raise ValueError("options are configured for chain 2")
    rc = dsp.range_fft(cube, opts.range_nfft)
    rd = dsp.doppler_fft(rc, opts.doppler_nfft)
    heat = dsp.rd_heatmap(rd)
    det = dsp.cfar_2d(heat, opts.cfar)
    points, powers, velocities = [], [], []
    for rb, db, power, _thr in _detections_sorted(det):
        dist = float(rd.bin_to_range(rb))
        if dist <= 0:
            continue
        snapshot = rd.data[:, db, rb]
        vel = float(rd.bin_to_velocity(db))
        ests, _ = _dpc1_aoa(snapshot, opts, cube.layout)
        for est in ests:
            try:
                xyz = phase_to_xyz(dist, est.dphi_a, est.dphi_e)
            except GeometryError:
                continue
            points.append(xyz)
            powers.append(power)
            velocities.append(vel)
    if not points:
        return PointCloud.empty()
    return PointCloud(points=np.array(points), power=np.array(powers),
                      velocity=np.array(velocities))


# ---------------------------------------------------------------------------
# chain 2

def run_dpc2(cube: RawDataCube, opts: PipelineOptions) -> PointCloud:
    if opts.dpc != 2:
        raise ValueError("options are configured for chain 1")
    rc = dsp.range_fft(cube, opts.range_nfft)
    n_chirps = cube.cfg.chirps_per_frame
    strategy = opts.strategy()
    points, powers = [], []
    for rb in range(rc.n_range_bins):
        dist = float(rc.bin_to_range(rb))
        if dist <= 0:
            continue
        cov = dsp.covariance(rc.data[:, :, rb])
        lam = np.linalg.eigvalsh(cov)[::-1]
        m = dsp.mdl_order(np.maximum(lam, 0.0), n_chirps)
        if m == 0:
            continue
        ev = aoa.SpectrumEvaluator(opts.estimator, cov, cube.layout,
                                   m=m, loading=opts.loading)
        res = aoa.search(ev, strategy, m, opts.angle_bins)
        for est in res.estimates:
            try:
                xyz = phase_to_xyz(dist, est.dphi_a, est.dphi_e)
            except GeometryError:
                continue
            points.append(xyz)
            powers.append(est.power)
    if not points:
        return PointCloud.empty()
    return PointCloud(points=np.array(points), power=np.array(powers),
                      velocity=np.zeros(len(points)))


# ---------------------------------------------------------------------------
# super-resolution resampling

def _upsample_linear(values: np.ndarray, factor: int):
    """Linear upsample of a 1D or 2D array; returns (fine_values, fine_axes)
    with axes in original-bin units."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        coarse = np.arange(len(values))
        fine = np.arange((len(values) - 1) * factor + 1) / factor
        return np.interp(fine, coarse, values), (fine,)
    if values.ndim == 2:
        fa = np.arange((values.shape[0] - 1) * factor + 1) / factor
        fb = np.arange((values.shape[1] - 1) * factor + 1) / factor
        rows = np.empty((values.shape[0], len(fb)))
        for i in range(values.shape[0]):
            rows[i] = np.interp(fb, np.arange(values.shape[1]), values[i])
        out = np.empty((len(fa), len(fb)))
        for j in range(len(fb)):
            out[:, j] = np.interp(fa, np.arange(values.shape[0]), rows[:, j])
        return out, (fa, fb)
    raise ValueError("spectrum must be 1D or 2D")


def srpc_resample(spectrum, peaks, th: float, params: SrpcParams,
                  k_out: int, seed) -> np.ndarray:
    """Redraw detected peaks against the upsampled power spectrum.

    spectrum: 1D or 2D nonnegative power array.
    peaks: iterable of (index, power); index an int for 1D or an (i, j) pair.
    Each peak spawns n_i = max(1, round(power*alpha/th)) draws from the
    upsampled amplitude within +-neighborhood original bins of the peak; the
    pooled draws are thinned uniformly (without replacement) to k_out.
    Returns (<=k_out, ndim) fractional positions in original-bin units.
    Deterministic per seed.
    """
    if th <= 0:
        raise ValueError("detection threshold must be positive")
    rng = np.random.default_rng(seed)
    fine, axes = _upsample_linear(spectrum, params.upsample_factor)
    ndim = len(axes)
    drawn = []
    for idx, power in peaks:
        idx = np.atleast_1d(np.asarray(idx, dtype=float))
        if len(idx) != ndim:
            raise ValueError("peak index rank does not match the spectrum")
        n_i = params.n_draws(float(power), th)
        masks = [np.abs(axes[ax] - idx[ax]) <= params.neighborhood + 1e-9
                 for ax in range(ndim)]
        if ndim == 1:
            window = fine[masks[0]]
            pos = axes[0][masks[0]][:, None]
        else:
            window = fine[np.ix_(masks[0], masks[1])].ravel()
            ga, ge = np.meshgrid(axes[0][masks[0]], axes[1][masks[1]], indexing="ij")
            pos = np.column_stack([ga.ravel(), ge.ravel()])
        weights = np.clip(window, 0.0, None)
        total = weights.sum()
        if total <= 0:
            # degenerate window: stay on the peak itself
            centre = int(np.argmin(np.sum((pos - idx[None, :]) ** 2, axis=1)))
            choice = np.full(n_i, centre)
        else:
            choice = rng.choice(len(weights), size=n_i, p=weights / total)
        drawn.append(pos[choice])
    pool = np.concatenate(drawn, axis=0) if drawn else np.zeros((0, ndim))
    if k_out < len(pool):
        keep = np.sort(rng.choice(len(pool), size=k_out, replace=False))
        pool = pool[keep]
    return pool


def _fft_power_grid(snapshot, layout, opts):
    """The FFT power surface the angle estimates came from (for patching)."""
    nbins = opts.angle_bins
    az = layout.az_indices.astype(int)
    if opts.search == "2d":
        el = layout.el_indices.astype(int)
        grid = np.zeros((nbins, nbins), dtype=complex)
        grid[az, el] = snapshot
        return np.abs(np.fft.fftshift(np.fft.fft2(grid))) ** 2
    az_row = layout.azimuth_row()
    sig = np.zeros(nbins, dtype=complex)
    sig[az[az_row]] = snapshot[az_row]
    return np.abs(np.fft.fftshift(np.fft.fft(sig))) ** 2


def _angle_patch(est, opts, evaluator, fft_power, bins, nb):
    """Power patch around an angle estimate at original-bin spacing, plus the
    phase values along each patch axis. For grid estimators the spectrum is
    re-evaluated (phases wrap); FFT patches are clipped at the grid edges."""
    step = 2.0 * np.pi / opts.angle_bins
    offs = np.arange(-nb, nb + 1)
    if evaluator is not None:
        pa = est.dphi_a + offs * step
        pe = est.dphi_e + offs * step
        ga, ge = np.meshgrid(pa, pe, indexing="ij")
        patch = evaluator(ga.ravel(), ge.ravel()).reshape(len(pa), len(pe))
        return patch, pa, pe
    ia = int(np.argmin(np.abs(bins - est.dphi_a)))
    ii = np.clip(ia + offs, 0, len(bins) - 1)
    if fft_power.ndim == 1:
        return fft_power[ii], bins[ii], None
    ie = int(np.argmin(np.abs(bins - est.dphi_e)))
    jj = np.clip(ie + offs, 0, len(bins) - 1)
    return fft_power[np.ix_(ii, jj)], bins[ii], bins[jj]


def run_with_srpc(cube: RawDataCube, opts: PipelineOptions) -> PointCloud:
    """Chain 1 with super-resolution resampling at the range-peak and
    angle-peak stages. Output size equals the SRPC-off output size."""
    if opts.srpc is None:
        raise ValueError("opts.srpc must be set")
    params = opts.srpc
    rc = dsp.range_fft(cube, opts.range_nfft)
    rd = dsp.doppler_fft(rc, opts.doppler_nfft)
    heat = dsp.rd_heatmap(rd)
    det = dsp.cfar_2d(heat, opts.cfar)
    bins = aoa.phase_bins(opts.angle_bins)
    nb = params.neighborhood
    bin_m = rd.range_bin_m

    pts, powers, vels = [], [], []
    k_plain = 0
    for d_idx, (rb, db, power, thr) in enumerate(_detections_sorted(det)):
        base_dist = rb * bin_m
        if base_dist <= 0:
            continue
        snapshot = rd.data[:, db, rb]
        vel = float(rd.bin_to_velocity(db))
        ests, evaluator = _dpc1_aoa(snapshot, opts, cube.layout)
        fft_power = _fft_power_grid(snapshot, cube.layout, opts) \
            if opts.estimator == "fft" else None
        n_i = params.n_draws(power, thr)

        # range profile: receiver-averaged range slice at this Doppler bin
        lo = max(rb - nb, 0)
        hi = min(rb + nb, rd.n_range_bins - 1)
        range_draws = srpc_resample(
            heat[db, lo:hi + 1], [(rb - lo, power)], thr, params, n_i,
            np.random.SeedSequence(entropy=opts.seed, spawn_key=(1, d_idx)),
        )
        dists = (range_draws[:, 0] + lo) * bin_m

        for e_idx, est in enumerate(ests):
            try:
                base_xyz = phase_to_xyz(base_dist, est.dphi_a, est.dphi_e)
            except GeometryError:
                continue  # the SRPC-off chain drops this estimate too
            k_plain += 1
            patch, ax_a, ax_e = _angle_patch(est, opts, evaluator, fft_power, bins, nb)
            centre = (nb,) if patch.ndim == 1 else (nb, nb)
            draws = srpc_resample(
                patch, [(centre, power)], thr, params, n_i,
                np.random.SeedSequence(entropy=opts.seed, spawn_key=(2, d_idx, e_idx)),
            )
            pa = wrap_phase(np.interp(draws[:, 0], np.arange(len(ax_a)), ax_a))
            if patch.ndim == 1:
                pe = np.full(len(draws), est.dphi_e)
            else:
                pe = wrap_phase(np.interp(draws[:, 1], np.arange(len(ax_e)), ax_e))
            for j in range(len(draws)):
                d_j = float(dists[j % len(dists)])
                try:
                    xyz = phase_to_xyz(d_j, float(pa[j]), float(pe[j])) \
                        if d_j > 0 else base_xyz
                except GeometryError:
                    xyz = base_xyz  # keep the count: fall back to the bin-centre point
                pts.append(xyz)
                powers.append(power)
                vels.append(vel)

    if not pts:
        return PointCloud.empty()
    cloud = PointCloud(points=np.array(pts), power=np.array(powers),
                       velocity=np.array(vels))
    if len(cloud) > k_plain:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=opts.seed, spawn_key=(3,)))
        keep = np.sort(rng.choice(len(cloud), size=k_plain, replace=False))
        cloud = cloud.take(keep)
    return cloud
