# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled IF-sample accumulation.

Sums, per (receiver, chirp), the contributions of every scene point:

    out[r, k, n] += amp[k, i] * exp(j * (omega[k, i, r] * n * dt + phi[k, i, r]))

The per-sample complex exponential is advanced by a phasor recurrence
(one complex multiply per sample) instead of calling cexp N_s times;
|step| == 1 up to rounding, so drift over a chirp stays ~1e-13 relative.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def accumulate_frame(
    double[:, ::1] amp,
    double[:, :, ::1] omega,
    double[:, :, ::1] phi,
    double dt,
    int n_samples,
):
    """Return the accumulated IF cube (n_rx, n_chirps, n_samples) complex128."""
    cdef Py_ssize_t n_chirps = amp.shape[0]
    cdef Py_ssize_t n_points = amp.shape[1]
    cdef Py_ssize_t n_rx = omega.shape[2]
    if omega.shape[0] != n_chirps or omega.shape[1] != n_points:
        raise ValueError("omega shape mismatch")
    if phi.shape[0] != n_chirps or phi.shape[1] != n_points or phi.shape[2] != n_rx:
        raise ValueError("phi shape mismatch")

    out_arr = np.zeros((n_rx, n_chirps, n_samples), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr

    cdef Py_ssize_t k, r, i, n
    cdef double w, p, a
    cdef double complex ph, step

    with nogil:
        for k in range(n_chirps):
            for r in range(n_rx):
                for i in range(n_points):
                    a = amp[k, i]
                    w = omega[k, i, r]
                    p = phi[k, i, r]
                    ph = a * (cos(p) + 1j * sin(p))
                    step = cos(w * dt) + 1j * sin(w * dt)
                    for n in range(n_samples):
                        out[r, k, n] = out[r, k, n] + ph
                        ph = ph * step
    return out_arr
