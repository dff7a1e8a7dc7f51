"""Pure-NumPy IF-sample accumulation, the fallback for (and oracle of) the
compiled kernel. Evaluates the complex exponentials directly, one
(points x samples) block per receiver and chirp."""

import numpy as np


def accumulate_frame(amp, omega, phi, dt, n_samples):
    """Return the accumulated IF cube (n_rx, n_chirps, n_samples) complex128.

    amp: (n_chirps, n_points) amplitudes
    omega: (n_chirps, n_points, n_rx) angular beat frequencies (rad/s)
    phi: (n_chirps, n_points, n_rx) phases at the chirp start (rad)
    """
    amp = np.asarray(amp, dtype=float)
    omega = np.asarray(omega, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n_chirps, n_points = amp.shape
    n_rx = omega.shape[2]
    if omega.shape != (n_chirps, n_points, n_rx) or phi.shape != omega.shape:
        raise ValueError("omega/phi shape mismatch")
    t = np.arange(n_samples) * dt
    out = np.empty((n_rx, n_chirps, n_samples), dtype=np.complex128)
    for k in range(n_chirps):
        for r in range(n_rx):
            phase = phi[k, :, r, None] + omega[k, :, r, None] * t
            out[r, k] = amp[k] @ np.exp(1j * phase)
    return out
