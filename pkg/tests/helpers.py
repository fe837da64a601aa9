"""Independent oracles shared by the test modules.

Everything here is built from the defining formulas with plain loops or a
different algorithm than the library uses, so a library bug cannot hide
in its own test.
"""

import numpy as np


def analysis_matrix(taps, length):
    """Dense single-level analysis operator: row p holds the periodized
    filter placed at offset 2p."""
    mat = np.zeros((length // 2, length))
    for p in range(length // 2):
        for k, tap in enumerate(taps):
            mat[p, (2 * p + k) % length] += tap
    return mat


def transform_matrix(pair, length, levels):
    """Dense multi-level transform; rows are the periodized basis vectors
    ordered like WaveletCoeffs.to_vector (approx, then coarse-to-fine
    details)."""
    a_op = np.eye(length)
    detail_ops = []
    for _ in range(levels):
        cur = a_op.shape[0]
        detail_ops.append(analysis_matrix(pair.highpass, cur) @ a_op)
        a_op = analysis_matrix(pair.lowpass, cur) @ a_op
    return np.vstack([a_op] + detail_ops[::-1])


def fd_grad(fn, x0, step=1e-6):
    """Central finite differences of a scalar function, coordinatewise."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros_like(x0)
    for i in np.ndindex(x0.shape):
        plus, minus = x0.copy(), x0.copy()
        plus[i] += step
        minus[i] -= step
        grad[i] = (fn(plus) - fn(minus)) / (2 * step)
    return grad


def rel_err(approx, exact):
    scale = np.max(np.abs(exact))
    if scale == 0:
        return np.max(np.abs(approx))
    return np.max(np.abs(np.asarray(approx) - np.asarray(exact))) / scale


def coeffs_inner(u, c):
    """<u, c> for two same-shaped WaveletCoeffs."""
    return float(np.dot(u.to_vector(), c.to_vector()))


def distance_oracle(values_a, values_b):
    """FFT-correlation re-implementation of the shift/flip wavelet
    distance (the library implementation is an explicit roll loop)."""
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    energy = a @ a + b @ b
    best = np.inf
    for cand in (a, a[::-1]):
        corr = np.fft.irfft(np.conj(np.fft.rfft(cand)) * np.fft.rfft(b), n=size)
        best = min(best, float(np.sqrt(max(0.0, energy - 2 * corr.max()))))
    return best
