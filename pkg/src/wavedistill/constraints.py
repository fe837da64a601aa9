"""Wavelet-validity penalties and the sparsity term.

Five soft penalties make the lowpass/highpass pair an orthonormal filter
bank when driven to zero:

* ``sum_h``:      (sum h - sqrt(2))^2
* ``sum_g``:      (sum g)^2
* ``unit_norm``:  (||h||^2 - 1)^2
* ``cmf``:        sum over the DFT grid w = 2*pi*k/N, k = 1..N, of
                  (|H(w)|^2 + |H(w + pi)|^2 - 2)^2
* ``shift_orth``: sum over shifts k >= 0 with nonempty overlap of
                  (sum_n h[n] h[n-2k] - [k == 0])^2

The shift sum uses plain (non-periodic) overlap, and the DFT grid runs to
k = N, so the w = 2*pi point duplicates w = 0. Both follow the defining
formulas literally. All weights are fixed at 1; only the sparsity term
carries a tunable factor.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .filters import highpass_adjoint

SQRT2 = np.sqrt(2.0)


@dataclass
class PenaltyBreakdown:
    sparsity: float = 0.0
    sum_h: float = 0.0
    sum_g: float = 0.0
    unit_norm: float = 0.0
    cmf: float = 0.0
    shift_orth: float = 0.0

    @property
    def total(self):
        return (self.sparsity + self.sum_h + self.sum_g + self.unit_norm
                + self.cmf + self.shift_orth)

    @property
    def validity(self):
        """Everything except the sparsity term."""
        return self.total - self.sparsity

    FIELDS = ("sparsity", "sum_h", "sum_g", "unit_norm", "cmf", "shift_orth")

    def as_dict(self):
        d = {name: getattr(self, name) for name in self.FIELDS}
        d["total"] = self.total
        return d


def _cmf_pairs(h):
    """Values |H(w_k)|^2 + |H(w_k + pi)|^2 - 2 for k = 1..N."""
    n = h.size
    spectrum = np.abs(np.fft.fft(h)) ** 2
    k = np.arange(1, n + 1)
    return spectrum[k % n] + spectrum[(k + n // 2) % n] - 2.0


def _shift_residuals(h):
    n = h.size
    out = []
    for k in range((n - 1) // 2 + 1):
        acc = float(np.dot(h[2 * k:], h[:n - 2 * k]))
        out.append(acc - (1.0 if k == 0 else 0.0))
    return np.array(out)


def wavelet_penalties(filters):
    """The five validity penalties for a filter pair (sparsity left 0)."""
    h = filters.lowpass
    g = filters.highpass
    return PenaltyBreakdown(
        sum_h=float(h.sum() - SQRT2) ** 2,
        sum_g=float(g.sum()) ** 2,
        unit_norm=float(h @ h - 1.0) ** 2,
        cmf=float(np.sum(_cmf_pairs(h) ** 2)),
        shift_orth=float(np.sum(_shift_residuals(h) ** 2)),
    )


def sparsity_term(coeffs, lam):
    """lam * l1 norm of every coefficient (approx and all details)."""
    if lam < 0:
        raise InvalidArgumentError(f"lambda must be >= 0, got {lam}")
    return lam * float(np.sum(np.abs(coeffs.to_vector())))


def wavelet_loss(filters, x, lam, config):
    """Full per-signal wavelet loss: sparsity plus the five penalties."""
    from .transform import dwt1d, dwt2d

    transform = dwt2d if np.asarray(x).ndim == 2 else dwt1d
    breakdown = wavelet_penalties(filters)
    breakdown.sparsity = sparsity_term(transform(x, filters, config), lam)
    return breakdown


def penalty_grad(filters):
    """Exact gradient of the five validity penalties w.r.t. the lowpass."""
    h = filters.lowpass
    g = filters.highpass
    n = h.size

    grad = np.full(n, 2.0 * (h.sum() - SQRT2))
    grad += 4.0 * (h @ h - 1.0) * h
    grad += highpass_adjoint(np.full(n, 2.0 * g.sum()))

    # CMF term: d|H(k)|^2 / dh[m] = 2 Re(conj(H[k]) e^{-2 pi i k m / N}).
    spectrum = np.fft.fft(h)
    k = np.arange(1, n + 1)
    residual = _cmf_pairs(h)
    phases = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    d_power = 2.0 * np.real(np.conj(spectrum)[None, :] * phases)  # (m, bin)
    grad += 2.0 * (d_power[:, k % n] + d_power[:, (k + n // 2) % n]) @ residual

    shifts = _shift_residuals(h)
    for k_idx, res in enumerate(shifts):
        shift = 2 * k_idx
        d = np.zeros(n)
        d[shift:] += h[:n - shift]
        d[:n - shift] += h[shift:]
        grad += 2.0 * res * d
    return grad
