"""Saliency attribution of wavelet coefficients via model reparameterization.

The teacher ``f`` acts on raw signals; reparameterizing it over the
coefficient domain as ``f'(w) = f(inverse_transform(w) + residual)`` lets
the chain rule push the input gradient through the (linear) synthesis
operator, yielding one score per coefficient. With this package's exactly
invertible transform the residual is identically zero for orthogonal
filters; it is carried anyway because the distillation loop visits
slightly non-orthogonal tap configurations.

``saliency_grad_filters`` differentiates the l1 norm of those scores with
respect to the lowpass taps, holding the residual fixed. Three paths are
chained: the analysis operator inside the coefficients, the synthesis
operator of the reconstruction, and the teacher's input Hessian
(a Hessian-vector product; zero almost everywhere for relu teachers).
"""

import numpy as np

from .errors import ShapeError
from .nnet import forward, hvp_batch, input_grad_batch
from .transform import (
    TransformConfig,
    WaveletCoeffs,
    dwt1d,
    dwt1d_batch,
    dwt2d,
    dwt_grad_batch,
    idwt1d,
    idwt1d_batch,
    idwt2d,
)


class AttributionMap(WaveletCoeffs):
    """Per-coefficient saliency scores, mirroring a WaveletCoeffs layout."""


def reparam_forward(model, coeffs, filters, residual):
    """Evaluate the teacher on ``inverse_transform(coeffs) + residual``."""
    inverse = idwt2d if coeffs.is_2d else idwt1d
    recon = inverse(coeffs, filters)
    residual = np.asarray(residual, dtype=float)
    if residual.shape != recon.shape:
        raise ShapeError(
            f"residual shape {residual.shape} != reconstruction shape "
            f"{recon.shape}"
        )
    return forward(model, np.ravel(recon + residual))


def saliency(model, coeffs, filters):
    """Gradient of the reparameterized teacher at ``coeffs``.

    The teacher gradient is taken at the reconstruction (which equals the
    original signal under exact reconstruction); the score for
    coefficient i is the i-th component of the synthesis adjoint applied
    to that gradient.
    """
    inverse = idwt2d if coeffs.is_2d else idwt1d
    transform = dwt2d if coeffs.is_2d else dwt1d
    recon = inverse(coeffs, filters)
    q = input_grad_batch(model, np.ravel(recon)[None, :])[0]
    scores = transform(q.reshape(recon.shape), filters,
                       TransformConfig(coeffs.levels))
    return AttributionMap(scores.approx, scores.details, scores.levels,
                          coeffs.original_length)


def interp_loss_batch(model, x, filters, levels):
    """Sum over the batch of ||saliency coefficients||_1.

    ``x`` has shape (batch, length); the evaluation point of the teacher
    gradient is the exact signal (zero residual path).
    """
    q = input_grad_batch(model, x)
    approx, details = dwt1d_batch(q, filters, levels)
    total = np.sum(np.abs(approx))
    for d in details:
        total += np.sum(np.abs(d))
    return float(total)


def interp_grad_batch(model, x, filters, levels):
    """Gradient of :func:`interp_loss_batch` w.r.t. the lowpass taps.

    The reconstruction residual is held fixed (detached) at its current
    value x - synth(analysis(x)), so the teacher gradient is evaluated at
    the signal itself while the tap dependence of the evaluation point
    still flows through the Hessian path.
    """
    x = np.ascontiguousarray(x, dtype=float)
    n_taps = filters.support

    coeff_a, coeff_d = dwt1d_batch(x, filters, levels)
    q = input_grad_batch(model, x)
    s_approx, s_details = dwt1d_batch(q, filters, levels)
    sgn_a = np.sign(s_approx)
    sgn_d = [np.sign(d) for d in s_details]

    # Path 1: the synthesis-adjoint structure, teacher gradient held fixed.
    _, grad = dwt_grad_batch(q, filters, levels, (sgn_a, sgn_d))

    # Path 2: evaluation-point motion through the teacher Hessian.
    u = idwt1d_batch(sgn_a, sgn_d, filters)
    hv = hvp_batch(model, x, u)
    hv = np.ascontiguousarray(hv)
    if np.any(hv):
        _, g2a = dwt_grad_batch(hv, filters, levels, (coeff_a, coeff_d))
        hv_a, hv_d = dwt1d_batch(hv, filters, levels)
        _, g2b = dwt_grad_batch(x, filters, levels, (hv_a, hv_d))
        grad = grad + g2a + g2b
    return grad


def saliency_grad_filters(model, x, filters, config):
    """Gradient of ||saliency(model, dwt(x))||_1 w.r.t. the lowpass taps.

    The |.| subgradient at 0 is taken as 0; the residual is held fixed at
    its current value while the analysis, synthesis, and teacher-Hessian
    dependences on the taps are all chained.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("saliency_grad_filters expects a 1D signal")
    levels = getattr(config, "levels", config)
    return interp_grad_batch(model, x[None, :], filters, levels)
