"""Spectral front-end shared by both processing chains: range and Doppler
FFTs, the receiver-averaged heatmap, 2D cell-averaging CFAR, covariance
estimation and MDL model-order selection.

FFTs are unnormalized forward transforms with rectangular windowing; sizes
default to the next power of two above the input length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radar import AntennaLayout, ChirpConfig, C_LIGHT

__all__ = [
    "RangeCube",
    "RangeDopplerCube",
    "CfarParams",
    "CfarDetections",
    "DetectionPeak",
    "next_pow2",
    "range_fft",
    "doppler_fft",
    "rd_heatmap",
    "cfar_2d",
    "covariance",
    "mdl_order",
]


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


@dataclass(frozen=True)
class RangeCube:
    """Range spectra per (receiver, chirp): (n_rx, n_chirps, n_range_bins)."""

    data: np.ndarray
    cfg: ChirpConfig
    layout: AntennaLayout

    @property
    def n_range_bins(self) -> int:
        return self.data.shape[2]

    @property
    def range_bin_m(self) -> float:
        """Distance per range bin: beat-frequency bin width times c/(2S)."""
        return (self.cfg.adc_rate / self.n_range_bins) * C_LIGHT / (2.0 * self.cfg.slope)

    def bin_to_range(self, bins) -> np.ndarray:
        return np.asarray(bins, dtype=float) * self.range_bin_m


@dataclass(frozen=True)
class RangeDopplerCube:
    """Doppler spectra per (receiver, range bin): (n_rx, n_doppler_bins,
    n_range_bins), zero velocity centred at bin n_doppler_bins // 2."""

    data: np.ndarray
    cfg: ChirpConfig
    layout: AntennaLayout

    @property
    def n_doppler_bins(self) -> int:
        return self.data.shape[1]

    @property
    def n_range_bins(self) -> int:
        return self.data.shape[2]

    @property
    def range_bin_m(self) -> float:
        return (self.cfg.adc_rate / self.n_range_bins) * C_LIGHT / (2.0 * self.cfg.slope)

    @property
    def velocity_bin_mps(self) -> float:
        lam = self.cfg.wavelength
        return lam / (2.0 * self.n_doppler_bins * self.cfg.chirp_interval)

    def bin_to_range(self, bins) -> np.ndarray:
        return np.asarray(bins, dtype=float) * self.range_bin_m

    def bin_to_velocity(self, bins) -> np.ndarray:
        """Signed radial velocity; positive moves away from the radar."""
        centred = np.asarray(bins, dtype=float) - self.n_doppler_bins // 2
        return centred * self.velocity_bin_mps


def range_fft(cube, nfft: int | None = None) -> RangeCube:
    """FFT along the sample axis; zero-padded to nfft (default next pow2)."""
    n_s = cube.data.shape[2]
    nfft = next_pow2(n_s) if nfft is None else int(nfft)
    if nfft < n_s:
        raise ValueError("nfft must be >= samples_per_chirp")
    return RangeCube(data=np.fft.fft(cube.data, n=nfft, axis=2), cfg=cube.cfg, layout=cube.layout)


def doppler_fft(rc: RangeCube, nfft: int | None = None) -> RangeDopplerCube:
    """FFT along the chirp axis, shifted so zero velocity is centred."""
    n_c = rc.data.shape[1]
    nfft = next_pow2(n_c) if nfft is None else int(nfft)
    if nfft < n_c:
        raise ValueError("nfft must be >= chirps_per_frame")
    spec = np.fft.fftshift(np.fft.fft(rc.data, n=nfft, axis=1), axes=1)
    return RangeDopplerCube(data=spec, cfg=rc.cfg, layout=rc.layout)


def rd_heatmap(rd: RangeDopplerCube) -> np.ndarray:
    """Mean over receivers of the squared magnitude: (n_doppler, n_range)."""
    return np.mean(np.abs(rd.data) ** 2, axis=0)


@dataclass(frozen=True)
class CfarParams:
    """Cell-averaging CFAR window: training/guard half-extents per axis and
    the threshold scale applied to the training mean."""

    train_range: int = 8
    train_doppler: int = 4
    guard_range: int = 2
    guard_doppler: int = 2
    scale: float = 4.0

    def __post_init__(self):
        if self.train_range < 1 or self.train_doppler < 1:
            raise ValueError("need at least one training cell per axis")
        if self.guard_range < 0 or self.guard_doppler < 0:
            raise ValueError("guard extents must be >= 0")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class CfarDetections:
    """Above-threshold cells of a heatmap, row-major order."""

    doppler_bins: np.ndarray
    range_bins: np.ndarray
    powers: np.ndarray
    thresholds: np.ndarray

    def __len__(self) -> int:
        return len(self.powers)


@dataclass(frozen=True)
class DetectionPeak:
    """One heatmap detection with its receiver snapshot attached."""

    range_bin: int
    doppler_bin: int
    power: float
    snapshot: np.ndarray
    threshold: float = 0.0


def _window_sums(h: np.ndarray, half_d: int, half_r: int):
    """Clipped-rectangle sums and counts centred on every cell."""
    nd, nr = h.shape
    acc = np.zeros((nd + 1, nr + 1))
    acc[1:, 1:] = h.cumsum(axis=0).cumsum(axis=1)
    d0 = np.clip(np.arange(nd) - half_d, 0, nd)
    d1 = np.clip(np.arange(nd) + half_d + 1, 0, nd)
    r0 = np.clip(np.arange(nr) - half_r, 0, nr)
    r1 = np.clip(np.arange(nr) + half_r + 1, 0, nr)
    sums = (acc[d1][:, r1] - acc[d1][:, r0] - acc[d0][:, r1] + acc[d0][:, r0])
    counts = (d1 - d0)[:, None] * (r1 - r0)[None, :]
    return sums, counts


def cfar_2d(heatmap: np.ndarray, params: CfarParams) -> CfarDetections:
    """2D cell-averaging CFAR. A cell is detected when its value exceeds
    scale times the mean of the training cells (guard block excluded);
    windows are clipped at the heatmap borders."""
    h = np.asarray(heatmap, dtype=float)
    if h.ndim != 2:
        raise ValueError("heatmap must be 2D (doppler x range)")
    outer_d = params.guard_doppler + params.train_doppler
    outer_r = params.guard_range + params.train_range
    big_sum, big_cnt = _window_sums(h, outer_d, outer_r)
    guard_sum, guard_cnt = _window_sums(h, params.guard_doppler, params.guard_range)
    train_cnt = big_cnt - guard_cnt
    train_mean = (big_sum - guard_sum) / train_cnt
    thresholds = params.scale * train_mean
    mask = h > thresholds
    dbins, rbins = np.nonzero(mask)
    return CfarDetections(
        doppler_bins=dbins,
        range_bins=rbins,
        powers=h[dbins, rbins],
        thresholds=thresholds[dbins, rbins],
    )


def covariance(snapshots: np.ndarray) -> np.ndarray:
    """Sample covariance (1/N) sum_t x(t) x(t)^H of column snapshots
    (n_rx, N). Result is exactly Hermitian."""
    x = np.asarray(snapshots)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("snapshots must be (n_rx, N) with N >= 1")
    r = x @ x.conj().T / x.shape[1]
    return 0.5 * (r + r.conj().T)


def mdl_order(eigenvalues, n_snapshots: int) -> int:
    """Number of sources minimizing the MDL criterion over k in [0, p-1]:

        -N (p-k) log(gm_k / am_k) + 0.5 k (2p - k) log N

    with gm_k/am_k the geometric/arithmetic means of the p-k smallest
    eigenvalues. Ties resolve to the smallest k.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or len(lam) < 1:
        raise ValueError("eigenvalues must be a 1D list")
    if not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite")
    if np.any(lam < -1e-12 * max(lam.max(), 1.0)) or np.any(np.diff(lam) > 1e-12 * max(lam.max(), 1.0)):
        raise ValueError("eigenvalues must be nonnegative and sorted descending")
    if n_snapshots < 1:
        raise ValueError("n_snapshots must be >= 1")
    p = len(lam)
    floor = max(lam.max(), 0.0) * 1e-15 + 1e-300
    lam = np.maximum(lam, floor)
    log_n = np.log(n_snapshots)
    costs = np.empty(p)
    for k in range(p):
        tail = lam[k:]
        data = np.mean(np.log(tail)) - np.log(np.mean(tail))
        costs[k] = -n_snapshots * (p - k) * data + 0.5 * k * (2 * p - k) * log_n
    return int(np.argmin(costs))
