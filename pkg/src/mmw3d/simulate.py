"""Raw IF-signal frame synthesis and the binary cube file format.

One frame is a complex cube of shape (n_rx, n_chirps, n_samples). Each scene
point contributes a tone whose beat frequency and phase follow from its
two-way time of flight; amplitude falls off as reflectivity / d^4 with the
one-way transmitter distance. Motion is frozen within a chirp and advanced
chirp-to-chirp. Noise is circular complex white Gaussian, calibrated against
the mean noise-free signal power, drawn from per-(receiver, chirp) substreams
so the result does not depend on generation order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .radar import C_LIGHT, AntennaLayout, ChirpConfig
from .scene import Scene, positions_at

__all__ = [
    "NoiseSpec",
    "RawDataCube",
    "SimulationSizeError",
    "tof",
    "simulate_frame",
    "noise_for_cube",
    "write_cube",
    "read_cube",
    "CUBE_MAGIC",
]

CUBE_MAGIC = b"MMWCUBE1"
CUBE_FORMAT_VERSION = 1

# refuse to allocate cubes larger than this (complex128 working buffer)
MAX_CUBE_BYTES = 4 << 30


class SimulationSizeError(RuntimeError):
    """Requested cube exceeds the configured memory cap."""


@dataclass(frozen=True)
class NoiseSpec:
    """Target SNR in dB; snr_db=inf means no noise.

    The SNR convention is mean-signal-power: snr_db = 10*log10(P_s / var_n)
    with P_s the mean squared magnitude of the noise-free cube over all
    receivers, chirps and samples, and var_n the per-sample complex noise
    variance (i.i.d. per receiver and sample).
    """

    snr_db: float = math.inf

    def __post_init__(self):
        if math.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.snr_db) and self.snr_db > 0


@dataclass(frozen=True)
class RawDataCube:
    """One simulated frame plus the configuration that produced it."""

    data: np.ndarray          # (n_rx, n_chirps, n_samples) complex
    cfg: ChirpConfig
    layout: AntennaLayout
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        expected = (self.layout.n_rx, self.cfg.chirps_per_frame, self.cfg.samples_per_chirp)
        if self.data.shape != expected:
            raise ValueError(f"cube shape {self.data.shape} != {expected} from cfg/layout")

    @property
    def shape(self):
        return self.data.shape


def tof(point, rx, tx) -> float:
    """Two-way time of flight transmitter -> point -> receiver (s)."""
    point = np.asarray(point, dtype=float)
    d_tx = np.linalg.norm(point - np.asarray(tx, dtype=float))
    d_rx = np.linalg.norm(point - np.asarray(rx, dtype=float))
    if d_tx == 0.0 or d_rx == 0.0:
        raise ValueError("point coincides with an antenna")
    return (d_tx + d_rx) / C_LIGHT


def _signal_cube(scene: Scene, cfg: ChirpConfig, layout: AntennaLayout) -> np.ndarray:
    n_rx = layout.n_rx
    n_c = cfg.chirps_per_frame
    n_s = cfg.samples_per_chirp
    nbytes = 16 * n_rx * n_c * n_s
    if nbytes > MAX_CUBE_BYTES:
        raise SimulationSizeError(
            f"cube of {n_rx}x{n_c}x{n_s} needs {nbytes} bytes > cap {MAX_CUBE_BYTES}"
        )

    rx_pos = layout.positions_m(cfg.wavelength)          # (R, 3)
    tx_pos = np.zeros(3)                                 # single TX at the lattice origin
    chirp_times = np.arange(n_c) * cfg.chirp_interval
    # (K, M, 3) point positions frozen per chirp
    pts = positions_at(scene, 0.0)[None, :, :] + scene.velocity[None, None, :] * chirp_times[:, None, None]

    d_tx = np.linalg.norm(pts - tx_pos, axis=2)                         # (K, M)
    d_rx = np.linalg.norm(pts[:, :, None, :] - rx_pos[None, None, :, :], axis=3)  # (K, M, R)
    if np.any(d_tx == 0.0) or np.any(d_rx == 0.0):
        raise ValueError("a scene point coincides with an antenna")

    tau = (d_tx[:, :, None] + d_rx) / C_LIGHT
    amp = scene.reflectivity[None, :] / d_tx**4
    omega = (2.0 * np.pi * cfg.slope) * tau
    phi = (2.0 * np.pi * cfg.f0) * tau
    return kernels.accumulate_frame(
        np.ascontiguousarray(amp),
        np.ascontiguousarray(omega),
        np.ascontiguousarray(phi),
        1.0 / cfg.adc_rate,
        n_s,
    )


def noise_for_cube(shape, variance: float, seed: int) -> np.ndarray:
    """Circular complex Gaussian noise of the given per-sample variance.

    Each (receiver, chirp) stream comes from its own seed-derived substream,
    so the cube is identical regardless of generation order or worker count.
    """
    n_rx, n_c, n_s = shape
    out = np.empty(shape, dtype=np.complex128)
    sigma = math.sqrt(variance / 2.0)
    for r in range(n_rx):
        for k in range(n_c):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r, k)))
            block = rng.standard_normal((2, n_s))
            out[r, k] = sigma * (block[0] + 1j * block[1])
    return out


def simulate_frame(
    scene: Scene,
    cfg: ChirpConfig,
    layout: AntennaLayout,
    noise: NoiseSpec = NoiseSpec(),
    seed: int = 0,
) -> RawDataCube:
    """Synthesize one frame of raw IF samples. Deterministic per seed."""
    signal = _signal_cube(scene, cfg, layout)
    if not noise.noiseless:
        p_signal = float(np.mean(np.abs(signal) ** 2))
        variance = p_signal / 10.0 ** (noise.snr_db / 10.0)
        signal = signal + noise_for_cube(signal.shape, variance, seed)
    return RawDataCube(data=signal, cfg=cfg, layout=layout, snr_db=noise.snr_db, seed=seed)


# ---------------------------------------------------------------------------
# cube file format: magic, header (u32 version/dims, f64 waveform params),
# payload of float32 (real, imag) pairs, receiver-major; all little-endian

_HEADER = struct.Struct("<4I4d")


def write_cube(cube: RawDataCube, path) -> None:
    n_rx, n_c, n_s = cube.data.shape
    header = _HEADER.pack(
        CUBE_FORMAT_VERSION, n_rx, n_c, n_s,
        cube.cfg.f0, cube.cfg.slope, cube.cfg.chirp_interval, cube.cfg.adc_rate,
    )
    payload = np.empty((n_rx, n_c, n_s, 2), dtype="<f4")
    payload[..., 0] = cube.data.real
    payload[..., 1] = cube.data.imag
    with open(path, "wb") as fh:
        fh.write(CUBE_MAGIC)
        fh.write(header)
        fh.write(payload.tobytes())


def read_cube(path, layout: AntennaLayout, cfg: ChirpConfig | None = None) -> RawDataCube:
    """Read a cube file. The layout is not stored in the file and must be
    supplied; cfg, when given, fills in the fields the header does not carry
    (and is checked against it)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CUBE_MAGIC:
        raise ValueError("not a cube file (bad magic)")
    if len(blob) < 8 + _HEADER.size:
        raise ValueError("truncated cube header")
    version, n_rx, n_c, n_s, f0, slope, t_c, adc_rate = _HEADER.unpack_from(blob, 8)
    if version != CUBE_FORMAT_VERSION:
        raise ValueError(f"unsupported cube format version {version}")
    expected = 8 + _HEADER.size + 8 * n_rx * n_c * n_s
    if len(blob) != expected:
        raise ValueError(f"cube payload has {len(blob)} bytes, expected {expected}")
    raw = np.frombuffer(blob, dtype="<f4", offset=8 + _HEADER.size)
    raw = raw.reshape(n_rx, n_c, n_s, 2)
    data = raw[..., 0].astype(np.complex128) + 1j * raw[..., 1].astype(np.complex128)
    if layout.n_rx != n_rx:
        raise ValueError(f"layout has {layout.n_rx} receivers, file has {n_rx}")
    if cfg is None:
        cfg = ChirpConfig(
            f0=f0,
            slope=slope,
            chirp_duration=n_s / adc_rate,
            adc_rate=adc_rate,
            samples_per_chirp=n_s,
            chirps_per_frame=n_c,
            chirp_interval=t_c,
            frame_duration=n_c * t_c,
        )
    else:
        stored = (cfg.f0, cfg.slope, cfg.chirp_interval, cfg.adc_rate)
        if not np.allclose(stored, (f0, slope, t_c, adc_rate), rtol=1e-12):
            raise ValueError("cube header disagrees with the supplied chirp config")
        if (cfg.samples_per_chirp, cfg.chirps_per_frame) != (n_s, n_c):
            raise ValueError("cube dimensions disagree with the supplied chirp config")
    return RawDataCube(data=data, cfg=cfg, layout=layout)
