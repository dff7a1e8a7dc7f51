"""Angle-of-arrival estimation: angle-FFT, conventional and MVDR beamforming,
MUSIC, and the three steering-vector search strategies (azimuth-then-
elevation, full 2D grid, coarse-to-fine sub-grids).

All grids are uniform in the inter-receiver phase differences (dphi_a,
dphi_e) over [-pi, pi); n bins per axis put bin k at -pi + 2*pi*k/n, which is
exactly the shifted-FFT bin layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .radar import AntennaLayout, wrap_phase

__all__ = [
    "AoaEstimate",
    "AngleSpectrum",
    "SearchStrategy",
    "SearchResult",
    "SpectrumEvaluator",
    "phase_bins",
    "conventional_spectrum",
    "mvdr_spectrum",
    "music_spectrum",
    "angle_fft",
    "search",
    "local_maxima_2d",
    "local_maxima_1d",
]

DEFAULT_LOADING = 1e-3


def phase_bins(n: int) -> np.ndarray:
    """n uniform phase bins covering [-pi, pi)."""
    if n < 2:
        raise ValueError("need at least 2 bins")
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


@dataclass(frozen=True)
class AoaEstimate:
    dphi_a: float
    dphi_e: float
    power: float


@dataclass(frozen=True)
class AngleSpectrum:
    """Nonnegative power over a (phi_a, phi_e) grid; power[i, j] belongs to
    (phi_a[i], phi_e[j])."""

    power: np.ndarray
    phi_a: np.ndarray
    phi_e: np.ndarray


def _check_covariance(r: np.ndarray, n_rx: int) -> np.ndarray:
    r = np.asarray(r)
    if r.shape != (n_rx, n_rx):
        raise ValueError(f"covariance shape {r.shape} does not match {n_rx} receivers")
    if not np.allclose(r, r.conj().T, atol=1e-10 * max(1.0, abs(np.trace(r)))):
        raise ValueError("covariance must be Hermitian")
    return 0.5 * (r + r.conj().T)


class SpectrumEvaluator:
    """Evaluates one of the angle power spectra at arbitrary phase pairs.

    kind: 'conventional' | 'mvdr' | 'music'
    m: assumed source count (MUSIC only)
    loading: diagonal loading as a fraction of trace(R)/n_rx (MVDR; also
             applied before the MUSIC eigendecomposition for conditioning)
    """

    def __init__(self, kind, r, layout: AntennaLayout, m: int = 1,
                 loading: float = DEFAULT_LOADING):
        if kind not in ("conventional", "mvdr", "music"):
            raise ValueError(f"unknown spectrum kind {kind!r}")
        self.kind = kind
        self.layout = layout
        self.m = int(m)
        self.loading = float(loading)
        self._az = layout.az_indices
        self._el = layout.el_indices
        r = _check_covariance(r, layout.n_rx)
        self._r = r
        n = layout.n_rx
        eps = self.loading * max(np.trace(r).real, 0.0) / n
        if kind == "mvdr":
            try:
                self._chol = scipy.linalg.cholesky(r + eps * np.eye(n), lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise ValueError("covariance singular; increase diagonal loading") from exc
        elif kind == "music":
            if not 1 <= self.m < n:
                raise ValueError(f"source count m={self.m} must be in [1, {n - 1}]")
            # loading shifts the spectrum, not the eigenvectors
            _, vec = np.linalg.eigh(r + eps * np.eye(n))
            self._noise_basis = vec[:, : n - self.m]

    def steering(self, dphi_a, dphi_e) -> np.ndarray:
        """Batch of steering vectors, shape (len(pairs), n_rx)."""
        pa = np.atleast_1d(np.asarray(dphi_a, dtype=float))
        pe = np.atleast_1d(np.asarray(dphi_e, dtype=float))
        return np.exp(1j * (pa[:, None] * self._az[None, :] + pe[:, None] * self._el[None, :]))

    def __call__(self, dphi_a, dphi_e) -> np.ndarray:
        """Spectrum power at paired phase arrays."""
        s = self.steering(dphi_a, dphi_e)
        if self.kind == "conventional":
            return np.einsum("cn,nm,cm->c", s.conj(), self._r, s).real
        if self.kind == "mvdr":
            x = scipy.linalg.solve_triangular(self._chol, s.T, lower=True)
            return 1.0 / np.sum(np.abs(x) ** 2, axis=0)
        proj = s.conj() @ self._noise_basis
        return 1.0 / np.sum(np.abs(proj) ** 2, axis=1)

    def azimuth_only(self) -> "AzimuthEvaluator":
        return AzimuthEvaluator(self)


class AzimuthEvaluator:
    """Same spectrum restricted to the el=0 azimuth row with azimuth-only
    steering vectors; used by the azimuth-then-elevation search."""

    def __init__(self, parent: SpectrumEvaluator):
        rows = parent.layout.azimuth_row()
        if len(rows) < 2:
            raise ValueError("layout lacks an azimuth row of >= 2 receivers")
        self._az = parent.layout.az_indices[rows]
        r = parent._r[np.ix_(rows, rows)]
        n = len(rows)
        self.kind = parent.kind
        eps = parent.loading * max(np.trace(r).real, 0.0) / n
        if self.kind == "mvdr":
            self._chol = scipy.linalg.cholesky(r + eps * np.eye(n), lower=True)
        elif self.kind == "music":
            m = min(parent.m, n - 1)
            _, vec = np.linalg.eigh(r + eps * np.eye(n))
            self._noise_basis = vec[:, : n - m]
        self._r = r

    def __call__(self, dphi_a) -> np.ndarray:
        pa = np.atleast_1d(np.asarray(dphi_a, dtype=float))
        s = np.exp(1j * pa[:, None] * self._az[None, :])
        if self.kind == "conventional":
            return np.einsum("cn,nm,cm->c", s.conj(), self._r, s).real
        if self.kind == "mvdr":
            x = scipy.linalg.solve_triangular(self._chol, s.T, lower=True)
            return 1.0 / np.sum(np.abs(x) ** 2, axis=0)
        proj = s.conj() @ self._noise_basis
        return 1.0 / np.sum(np.abs(proj) ** 2, axis=1)


def _full_grid(evaluator, grid) -> AngleSpectrum:
    if isinstance(grid, int):
        pa = pe = phase_bins(grid)
    else:
        pa, pe = (np.asarray(g, dtype=float) for g in grid)
    ga, ge = np.meshgrid(pa, pe, indexing="ij")
    power = evaluator(ga.ravel(), ge.ravel()).reshape(len(pa), len(pe))
    return AngleSpectrum(power=power, phi_a=pa, phi_e=pe)


def conventional_spectrum(r, layout, grid) -> AngleSpectrum:
    """P = s^H R s over the grid (grid: bin count or (phi_a, phi_e) arrays)."""
    return _full_grid(SpectrumEvaluator("conventional", r, layout), grid)


def mvdr_spectrum(r, layout, grid, loading: float = DEFAULT_LOADING) -> AngleSpectrum:
    """P = 1 / (s^H (R + eps I)^-1 s) with eps = loading * trace(R)/n_rx."""
    return _full_grid(SpectrumEvaluator("mvdr", r, layout, loading=loading), grid)


def music_spectrum(r, layout, grid, m: int) -> AngleSpectrum:
    """P = 1 / ||U^H s||^2 with U spanning the n_rx - m smallest eigenvectors."""
    return _full_grid(SpectrumEvaluator("music", r, layout, m=m), grid)


# ---------------------------------------------------------------------------
# peak picking

def local_maxima_2d(power: np.ndarray):
    """Cells strictly greater than their 8-neighbourhood, sorted by
    descending power then ascending linear index. Returns (i, j) pairs."""
    p = np.asarray(power)
    padded = np.full((p.shape[0] + 2, p.shape[1] + 2), -np.inf)
    padded[1:-1, 1:-1] = p
    mask = np.ones(p.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= p > padded[1 + di:padded.shape[0] - 1 + di,
                               1 + dj:padded.shape[1] - 1 + dj]
    ii, jj = np.nonzero(mask)
    order = np.lexsort((ii * p.shape[1] + jj, -p[ii, jj]))
    return list(zip(ii[order], jj[order]))


def local_maxima_1d(power: np.ndarray):
    p = np.asarray(power)
    padded = np.full(len(p) + 2, -np.inf)
    padded[1:-1] = p
    mask = (p > padded[:-2]) & (p > padded[2:])
    idx = np.nonzero(mask)[0]
    return list(idx[np.lexsort((idx, -p[idx]))])


# ---------------------------------------------------------------------------
# angle-FFT

def _fft1d_plan(layout: AntennaLayout):
    """Derive the azimuth-row / offset-elevation-row structure needed by the
    1D angle-FFT. Raises when the layout does not provide it."""
    if not layout.is_integer_lattice:
        raise ValueError("angle-FFT needs an integer receiver lattice")
    az_row = layout.azimuth_row()
    el_rows = np.flatnonzero(layout.el_indices == 1)
    if len(az_row) < 2 or len(el_rows) < 2:
        raise ValueError("1D angle-FFT needs >= 2 receivers on both the el=0 "
                         "and el=1 rows")
    el_row = el_rows[np.argsort(layout.az_indices[el_rows])]
    return az_row, el_row


def angle_fft(snapshot, layout: AntennaLayout, mode: str, nbins: int, m: int = 1):
    """FFT-based AoA estimation of up to m sources from one snapshot.

    mode '2d': zero-embed the snapshot on the lattice and take a 2D FFT.
    mode '1d': azimuth FFT over the el=0 row gives dphi_a and the reference
    phase; an FFT over the el=1 row carries dphi_e on top of both, which the
    subtraction recovers.
    """
    x = np.asarray(snapshot)
    if x.shape != (layout.n_rx,):
        raise ValueError("snapshot length does not match the layout")
    if not layout.is_integer_lattice:
        raise ValueError("angle-FFT needs an integer receiver lattice")
    az = layout.az_indices.astype(int)
    el = layout.el_indices.astype(int)
    if az.min() < 0 or el.min() < 0 or az.max() >= nbins or el.max() >= nbins:
        raise ValueError("lattice indices must fit inside the FFT size")
    bins = phase_bins(nbins)

    if mode == "2d":
        if not layout.supports_2d:
            raise ValueError("2D angle-FFT needs >= 2 distinct indices per axis")
        grid = np.zeros((nbins, nbins), dtype=complex)
        grid[az, el] = x
        power = np.abs(np.fft.fftshift(np.fft.fft2(grid))) ** 2
        peaks = local_maxima_2d(power)[:m]
        if not peaks:
            flat = int(np.argmax(power))
            peaks = [np.unravel_index(flat, power.shape)]
        return [AoaEstimate(dphi_a=bins[i], dphi_e=bins[j], power=float(power[i, j]))
                for i, j in peaks]

    if mode != "1d":
        raise ValueError(f"unknown angle-FFT mode {mode!r}")
    az_row, el_row = _fft1d_plan(layout)
    sig_az = np.zeros(nbins, dtype=complex)
    sig_az[az[az_row]] = x[az_row]
    sig_el = np.zeros(nbins, dtype=complex)
    sig_el[az[el_row]] = x[el_row]
    spec_az = np.fft.fftshift(np.fft.fft(sig_az))
    spec_el = np.fft.fftshift(np.fft.fft(sig_el))
    power = np.abs(spec_az) ** 2
    peaks = local_maxima_1d(power)[:m] or [int(np.argmax(power))]
    out = []
    for k in peaks:
        # the linear leakage-phase terms cancel when both rows share the same
        # azimuth centroid, which all shipped presets do
        dphi_e = float(wrap_phase(np.angle(spec_el[k]) - np.angle(spec_az[k])))
        out.append(AoaEstimate(dphi_a=float(bins[k]), dphi_e=dphi_e, power=float(power[k])))
    return out


# ---------------------------------------------------------------------------
# search strategies

@dataclass(frozen=True)
class SearchStrategy:
    """How spectra are searched for peaks.

    variant: '1d' (azimuth then elevation), '2d' (every grid cell),
             'subgrid' (coarse grid, then per-peak windows of +-half the
             parent stride, re-gridded with `levels[i]` points per axis)
    """

    variant: str = "subgrid"
    levels: tuple = (33, 7, 7)

    def __post_init__(self):
        if self.variant not in ("1d", "2d", "subgrid"):
            raise ValueError(f"unknown search variant {self.variant!r}")
        if self.variant == "subgrid":
            if len(self.levels) < 1 or any(int(g) < 2 for g in self.levels):
                raise ValueError("subgrid levels must each have >= 2 points")
            object.__setattr__(self, "levels", tuple(int(g) for g in self.levels))

    def final_stride(self, nbins: int) -> float:
        """Finest step, in bins, the subgrid schedule reaches."""
        stride = (nbins - 1) / (self.levels[0] - 1)
        for g in self.levels[1:]:
            stride = stride / (g - 1)
        return stride


@dataclass(frozen=True)
class SearchResult:
    estimates: list
    n_evaluations: int


def _top_m(cands, m: int, nbins: int):
    cands = sorted(cands, key=lambda c: (-c[2], c[0] * nbins + c[1]))
    out = []
    seen = set()
    for c in cands:
        if (c[0], c[1]) in seen:
            continue
        seen.add((c[0], c[1]))
        out.append(c)
        if len(out) == m:
            break
    return out


def search(evaluator: SpectrumEvaluator, strategy: SearchStrategy,
           m_expected: int, nbins: int) -> SearchResult:
    """Locate the m_expected strongest spectrum peaks on an nbins x nbins
    phase grid. Returns the estimates plus the number of spectrum
    evaluations performed (repeat visits across subgrid levels count)."""
    if m_expected < 0:
        raise ValueError("m_expected must be >= 0")
    if m_expected == 0:
        return SearchResult(estimates=[], n_evaluations=0)
    bins = phase_bins(nbins)
    n_eval = 0

    if strategy.variant == "1d":
        az_eval = evaluator.azimuth_only()
        p_az = az_eval(bins)
        n_eval += nbins
        peaks = local_maxima_1d(p_az)[:m_expected] or [int(np.argmax(p_az))]
        cands = []
        for ia in peaks:
            p_el = evaluator(np.full(nbins, bins[ia]), bins)
            n_eval += nbins
            ie = int(np.argmax(p_el))
            cands.append((ia, ie, float(p_el[ie])))
        top = _top_m(cands, m_expected, nbins)
        return SearchResult(
            estimates=[AoaEstimate(bins[ia], bins[ie], pw) for ia, ie, pw in top],
            n_evaluations=n_eval,
        )

    if strategy.variant == "2d":
        ga, ge = np.meshgrid(bins, bins, indexing="ij")
        power = evaluator(ga.ravel(), ge.ravel()).reshape(nbins, nbins)
        n_eval += nbins * nbins
        peaks = local_maxima_2d(power)[:m_expected]
        if not peaks:
            peaks = [np.unravel_index(int(np.argmax(power)), power.shape)]
        ests = [AoaEstimate(bins[i], bins[j], float(power[i, j])) for i, j in peaks]
        return SearchResult(estimates=ests, n_evaluations=n_eval)

    # subgrid: refinement windows must reach single-bin resolution
    if strategy.final_stride(nbins) > 1.0 + 1e-9:
        raise ValueError("subgrid schedule too coarse to reach bin resolution; "
                         "add levels or points")
    g0 = strategy.levels[0]
    idx0 = np.unique(np.round(np.linspace(0, nbins - 1, min(g0, nbins))).astype(int))
    ga, ge = np.meshgrid(idx0, idx0, indexing="ij")
    power = evaluator(bins[ga.ravel()], bins[ge.ravel()]).reshape(len(idx0), len(idx0))
    n_eval += power.size
    coarse_peaks = local_maxima_2d(power)
    if not coarse_peaks:
        coarse_peaks = [np.unravel_index(int(np.argmax(power)), power.shape)]
    peaks = [[int(idx0[i]), int(idx0[j]), float(power[i, j])] for i, j in coarse_peaks]

    stride = (nbins - 1) / (min(g0, nbins) - 1)
    for g in strategy.levels[1:]:
        half = stride / 2.0
        new_peaks = []
        for pa, pe, _ in peaks:
            offs = np.linspace(-half, half, g)
            ia = np.unique(np.clip(np.round(pa + offs), 0, nbins - 1).astype(int))
            ie = np.unique(np.clip(np.round(pe + offs), 0, nbins - 1).astype(int))
            gga, gge = np.meshgrid(ia, ie, indexing="ij")
            pw = evaluator(bins[gga.ravel()], bins[gge.ravel()]).reshape(len(ia), len(ie))
            n_eval += pw.size
            best = np.unravel_index(int(np.argmax(pw)), pw.shape)
            new_peaks.append([int(ia[best[0]]), int(ie[best[1]]), float(pw[best])])
        peaks = new_peaks
        stride = stride / (g - 1)

    top = _top_m([tuple(p) for p in peaks], m_expected, nbins)
    ests = [AoaEstimate(bins[ia], bins[ie], pw) for ia, ie, pw in top]
    return SearchResult(estimates=ests, n_evaluations=n_eval)
