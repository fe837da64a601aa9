"""Pure-numpy implementations of the strided periodic filter kernels.

These are the hot inner operations of every transform and gradient in the
package. The compiled twin in ``_kernels.pyx`` implements the identical
contracts; ``wavedistill.backend`` picks one at import time.

All kernels operate on batches: ``x`` has shape (batch, length) with an
even length, filters are 1D float64 arrays. Indices wrap periodically, so
filters longer than the signal are legal.
"""

import numpy as np

BACKEND_NAME = "python"


def analysis(x, f):
    """out[b, p] = sum_k f[k] * x[b, (2p + k) % L], p = 0 .. L/2 - 1."""
    n_batch, length = x.shape
    half = length // 2
    out = np.zeros((n_batch, half))
    base = 2 * np.arange(half)
    for k, fk in enumerate(f):
        out += fk * x[:, (base + k) % length]
    return out


def synthesis(c, f, length):
    """Adjoint of ``analysis``: out[b, (2p + k) % L] += f[k] * c[b, p]."""
    n_batch, half = c.shape
    out = np.zeros((n_batch, length))
    base = 2 * np.arange(half)
    for k, fk in enumerate(f):
        idx = (base + k) % length
        # idx has no duplicates for fixed k (2p + k spans a stride-2
        # residue class mod L), so fancy-index add is collision-free.
        out[:, idx] += fk * c
    return out


def tap_grad(x, u, n_taps):
    """g[k] = sum_{b,p} u[b, p] * x[b, (2p + k) % L]."""
    length = x.shape[1]
    base = 2 * np.arange(u.shape[1])
    out = np.empty(n_taps)
    for k in range(n_taps):
        out[k] = np.sum(u * x[:, (base + k) % length])
    return out
