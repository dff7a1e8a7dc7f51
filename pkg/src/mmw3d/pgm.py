"""16-bit PGM export for heatmaps (log-power grayscale)."""

import numpy as np

__all__ = ["write_pgm16"]


def write_pgm16(path, array, log_power: bool = True):
    """Write a 2D array as binary 16-bit PGM (P5, maxval 65535, big-endian).

    With log_power the values are mapped through 10*log10 before the min/max
    stretch, which is what makes radar heatmaps legible.
    """
    a = np.asarray(array, dtype=float)
    if a.ndim != 2:
        raise ValueError("PGM export needs a 2D array")
    if log_power:
        a = 10.0 * np.log10(np.maximum(a, 1e-300))
    lo, hi = float(a.min()), float(a.max())
    if hi > lo:
        scaled = (a - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(a)
    pixels = np.round(scaled * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n65535\n".encode())
        fh.write(pixels.tobytes())
