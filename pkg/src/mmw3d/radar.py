"""Radar waveform configuration, virtual antenna geometry and the
angle / phase-difference / Cartesian conversions used everywhere else.

Conventions
-----------
* Boresight is +y; azimuth is measured toward +x, elevation toward +z.
* Receiver lattice coordinates (az_index, el_index) are in units of half a
  wavelength. A target at positive azimuth produces a phase that *increases*
  with az_index (see ``AntennaLayout.positions_m`` for the sign handling).
* Angle grids are parameterized by the inter-receiver phase differences
  (dphi_a, dphi_e) in [-pi, pi), not by the angles themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C_LIGHT = 299_792_458.0  # m/s, exact

__all__ = [
    "C_LIGHT",
    "ChirpConfig",
    "AntennaLayout",
    "DerivedParams",
    "GeometryError",
    "baseline_chirp",
    "layout_preset",
    "layout_names",
    "steering_vector",
    "angle_to_phase",
    "phase_to_xyz",
    "derive_params",
    "wrap_phase",
]


class GeometryError(ValueError):
    """A phase pair maps outside the sphere of the given range."""


def wrap_phase(x):
    """Wrap phase(s) into [-pi, pi)."""
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class ChirpConfig:
    """FMCW waveform and frame timing.

    f0: chirp start frequency (Hz)
    slope: frequency ramp rate (Hz/s)
    chirp_duration: active ramp time of one chirp (s)
    adc_rate: IF sampling rate (samples/s)
    samples_per_chirp: ADC samples kept per chirp
    chirps_per_frame: chirps in one frame
    chirp_interval: chirp-to-chirp period (s)
    frame_duration: frame period (s)
    """

    f0: float
    slope: float
    chirp_duration: float
    adc_rate: float
    samples_per_chirp: int
    chirps_per_frame: int
    chirp_interval: float
    frame_duration: float

    def __post_init__(self):
        for name in ("f0", "slope", "chirp_duration", "adc_rate", "chirp_interval",
                     "frame_duration"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v!r}")
        if self.samples_per_chirp < 1 or self.chirps_per_frame < 1:
            raise ValueError("samples_per_chirp and chirps_per_frame must be >= 1")
        if self.samples_per_chirp - self.chirp_duration * self.adc_rate > 1e-6:
            raise ValueError("samples_per_chirp exceeds chirp_duration * adc_rate")
        if self.chirp_interval < self.chirp_duration:
            raise ValueError("chirp_interval shorter than the chirp itself")
        if self.frame_duration + 1e-12 < self.chirps_per_frame * self.chirp_interval:
            raise ValueError("frame_duration shorter than chirps_per_frame * chirp_interval")
        if not math.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise ValueError("swept bandwidth must be finite and positive")

    @property
    def bandwidth(self) -> float:
        """Bandwidth actually swept over the sampled portion of the chirp (Hz)."""
        return self.slope * self.samples_per_chirp / self.adc_rate

    @property
    def wavelength(self) -> float:
        """Wavelength at the chirp start frequency (m); fixes the lattice spacing."""
        return C_LIGHT / self.f0

    def sample_times(self) -> np.ndarray:
        """Intra-chirp sampling instants (s), length samples_per_chirp."""
        return np.arange(self.samples_per_chirp) / self.adc_rate


def baseline_chirp() -> ChirpConfig:
    """77-81 GHz setup: 40 MHz/us slope, 100 us chirps at 15 MHz ADC,
    50 chirps per 50 ms frame, 1500 samples per chirp."""
    return ChirpConfig(
        f0=77e9,
        slope=40e6 / 1e-6,
        chirp_duration=100e-6,
        adc_rate=15e6,
        samples_per_chirp=1500,
        chirps_per_frame=50,
        chirp_interval=1e-3,
        frame_duration=50e-3,
    )


@dataclass(frozen=True)
class AntennaLayout:
    """Virtual receiver lattice, one entry per receiver.

    positions holds (az_index, el_index) pairs in units of half a wavelength.
    Indices are usually integers; fractional positions are allowed but then
    only the beamforming/subspace estimators apply (no angle-FFT).
    """

    name: str
    positions: tuple

    def __post_init__(self):
        pos = tuple((float(a), float(e)) for a, e in self.positions)
        if len(pos) == 0:
            raise ValueError("layout needs at least one receiver")
        if len(set(pos)) != len(pos):
            raise ValueError("duplicate receiver positions")
        object.__setattr__(self, "positions", pos)

    @property
    def n_rx(self) -> int:
        return len(self.positions)

    @property
    def az_indices(self) -> np.ndarray:
        return np.array([p[0] for p in self.positions])

    @property
    def el_indices(self) -> np.ndarray:
        return np.array([p[1] for p in self.positions])

    @property
    def is_integer_lattice(self) -> bool:
        pos = np.array(self.positions)
        return bool(np.all(pos == np.round(pos)))

    @property
    def supports_2d(self) -> bool:
        """True when 2D AoA is resolvable (>= 2 distinct indices on each axis)."""
        return (len(set(self.az_indices)) >= 2) and (len(set(self.el_indices)) >= 2)

    def positions_m(self, wavelength: float) -> np.ndarray:
        """Physical receiver coordinates (N_rx, 3) in metres, array plane y=0.

        The lattice axes point toward -x/-z so that a target at positive
        azimuth/elevation is seen with a phase that increases with the lattice
        index, matching the steering-vector sign convention.
        """
        half = wavelength / 2.0
        out = np.zeros((self.n_rx, 3))
        out[:, 0] = -self.az_indices * half
        out[:, 2] = -self.el_indices * half
        return out

    def azimuth_row(self) -> np.ndarray:
        """Receiver indices lying on the el=0 row, sorted by az index."""
        idx = np.flatnonzero(self.el_indices == 0)
        return idx[np.argsort(self.az_indices[idx])]


# Square arrays plus the two TI-style 12-receiver layouts and a wide-azimuth
# automotive-style layout. The TI lattices are transcribed from the vendor's
# virtual-array drawings and are approximate where the drawings are.
def _square(n):
    return tuple((a, e) for e in range(n) for a in range(n))


_PRESETS = {
    "2x2": _square(2),
    "3x3": _square(3),
    "4x4": _square(4),
    "6x6": _square(6),
    # 8 azimuth receivers plus 4 elevated ones offset by 2 lattice steps
    "iwr6843": tuple((a, 0) for a in range(8)) + tuple((a, 1) for a in range(2, 6)),
    # near-square overhead-sensing lattice
    "ods": tuple((a, e) for e in range(2) for a in range(4))
    + tuple((a, e) for e in range(2, 4) for a in range(2, 4)),
    # wide azimuth row with a minimal elevation pair
    "wide": tuple((a, 0) for a in range(10)) + ((4, 1), (5, 1)),
}


def layout_names() -> tuple:
    return tuple(_PRESETS)


def layout_preset(name: str) -> AntennaLayout:
    try:
        return AntennaLayout(name=name, positions=_PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown layout preset {name!r}; known: {sorted(_PRESETS)}") from None


def steering_vector(layout: AntennaLayout, dphi_a: float, dphi_e: float) -> np.ndarray:
    """Unit-magnitude receiver phasors for a source at phase pair (dphi_a, dphi_e)."""
    return np.exp(1j * (layout.az_indices * dphi_a + layout.el_indices * dphi_e))


def angle_to_phase(theta_a: float, theta_e: float):
    """Map (azimuth, elevation) angles in rad to inter-receiver phase differences.

    The azimuth baseline sees the target direction projected onto the
    horizontal plane, hence the cos(theta_e) factor.
    """
    if not (abs(theta_a) < np.pi / 2 and abs(theta_e) < np.pi / 2):
        raise ValueError("angles must lie strictly inside the +-90 deg field of view")
    dphi_e = np.pi * math.sin(theta_e)
    dphi_a = np.pi * math.sin(theta_a) * math.cos(theta_e)
    return dphi_a, dphi_e


def phase_to_xyz(d: float, dphi_a: float, dphi_e: float):
    """Convert (range, phase pair) to Cartesian (x, y, z), y toward boresight.

    Raises GeometryError when the lateral components exceed the range,
    i.e. the phase pair is not realizable at distance d.
    """
    if d <= 0:
        raise ValueError("range must be positive")
    x = d * dphi_a / np.pi
    z = d * dphi_e / np.pi
    rem = d * d - x * x - z * z
    if rem < 0:
        raise GeometryError(f"phase pair maps outside the sphere of radius {d}")
    return x, math.sqrt(rem), z


@dataclass(frozen=True)
class DerivedParams:
    """Resolution/ambiguity figures implied by a chirp configuration."""

    wavelength: float
    range_resolution: float
    max_range: float
    velocity_resolution: float
    max_unambiguous_velocity: float


def derive_params(cfg: ChirpConfig) -> DerivedParams:
    lam = cfg.wavelength
    return DerivedParams(
        wavelength=lam,
        range_resolution=C_LIGHT / (2.0 * cfg.bandwidth),
        # complex (IQ) sampling: the full ADC band maps to beat frequency
        max_range=cfg.adc_rate * C_LIGHT / (2.0 * cfg.slope),
        velocity_resolution=lam / (2.0 * cfg.chirps_per_frame * cfg.chirp_interval),
        max_unambiguous_velocity=lam / (4.0 * cfg.chirp_interval),
    )
