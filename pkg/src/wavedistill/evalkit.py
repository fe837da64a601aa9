"""Evaluation metrics and derived artifacts for distilled filter banks.

* sampled scaling/wavelet function curves via the two-scale refinement
  (cascade) iteration,
* the shift/flip-quotiented l2 distance between wavelet curves,
* compression rate of coefficient/attribution pairs,
* per-scale max-coefficient features with a ridge linear head,
* wavelet activation maps from top-k integrated-gradients attributions.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .attribution import AttributionMap
from .errors import InvalidArgumentError, ShapeError
from .nnet import input_grad_batch
from .transform import TransformConfig, dwt2d, idwt2d

SQRT2 = np.sqrt(2.0)


@dataclass
class WaveletCurve:
    """Samples of a scaling or wavelet function on a dyadic grid."""

    grid: np.ndarray
    values: np.ndarray
    iterations: int

    def __post_init__(self):
        if self.grid.shape != self.values.shape:
            raise ShapeError("grid/values length mismatch")

    @property
    def spacing(self):
        return 2.0 ** (-self.iterations)


def _upsample(f, step):
    out = np.zeros((f.size - 1) * step + 1)
    out[::step] = f
    return out


def cascade(filters, iterations):
    """Sampled scaling and wavelet functions from the filter pair.

    Runs the two-scale refinement ``phi <- sqrt(2) * (phi conv upsampled
    h)`` starting from a unit impulse; the wavelet curve follows by one
    convolution with the upsampled highpass at half scale. Both curves
    come back on the grid with spacing ``2**-iterations``.
    """
    if not 1 <= iterations <= 16:
        raise InvalidArgumentError(
            f"iterations must be in 1..16, got {iterations}"
        )
    phi = np.array([1.0])
    for it in range(iterations):
        phi = SQRT2 * np.convolve(_upsample(filters.lowpass, 1 << it), phi)
    psi_fine = SQRT2 * np.convolve(
        _upsample(filters.highpass, 1 << iterations), phi)
    psi = psi_fine[::2]
    spacing = 2.0 ** (-iterations)
    return (
        WaveletCurve(np.arange(phi.size) * spacing, phi, iterations),
        WaveletCurve(np.arange(psi.size) * spacing, psi, iterations),
    )


def wavelet_distance(curve_a, curve_b):
    """Minimum l2 distance between two sampled wavelets, quotiented by
    circular shifts and left/right flip.

    The shorter sample vector is zero-padded to the longer one's length;
    the minimization over shifts is exhaustive.
    """
    if abs(curve_a.spacing - curve_b.spacing) > 1e-12:
        raise ShapeError(
            f"grid spacings differ: {curve_a.spacing} vs {curve_b.spacing}"
        )
    a = np.asarray(curve_a.values, dtype=float)
    b = np.asarray(curve_b.values, dtype=float)
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    best = np.inf
    for cand in (a, a[::-1]):
        for k in range(size):
            dist = np.linalg.norm(np.roll(cand, k) - b)
            if dist < best:
                best = dist
    return float(best)


def compression_rate(coeff_sets, attributions, threshold):
    """Fraction of coefficients whose magnitude and attribution are both
    above ``threshold``."""
    if threshold <= 0:
        raise InvalidArgumentError(f"threshold must be > 0, got {threshold}")
    if len(coeff_sets) != len(attributions):
        raise ShapeError("coefficient and attribution lists differ in length")
    hits = 0
    total = 0
    for coeffs, attr in zip(coeff_sets, attributions):
        c = coeffs.to_vector()
        a = attr.to_vector()
        if c.size != a.size:
            raise ShapeError("coefficient/attribution shapes misaligned")
        hits += int(np.sum((np.abs(c) > threshold) & (np.abs(a) > threshold)))
        total += c.size
    return hits / total


def max_coeff_features(coeffs, per_scale, absolute=False):
    """Top ``per_scale`` detail coefficients at each scale, coarse to fine.

    Values are selected by signed magnitude by default (``absolute=True``
    ranks by |.| instead) and sorted descending within a scale. Circularly
    shifting the input by ``2**levels`` samples leaves the features
    unchanged because every band shifts without mixing.
    """
    if per_scale < 1:
        raise InvalidArgumentError("per_scale must be >= 1")
    parts = []
    for band in reversed(coeffs.details):
        band = np.ravel(band)
        if band.size < per_scale:
            raise ShapeError(
                f"detail band of size {band.size} is shorter than "
                f"per_scale={per_scale}"
            )
        key = np.abs(band) if absolute else band
        top = band[np.argsort(key, kind="stable")[::-1][:per_scale]]
        parts.append(np.sort(top)[::-1])
    return np.concatenate(parts)


def linear_head_fit(features, targets, ridge):
    """Closed-form ridge regression with an unpenalized intercept."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if ridge < 0:
        raise InvalidArgumentError("ridge must be >= 0")
    x_mean = x.mean(axis=0)
    y_mean = y.mean()
    xc = x - x_mean
    yc = y - y_mean
    if ridge == 0:
        weights = np.linalg.lstsq(xc, yc, rcond=None)[0]
    else:
        gram = xc.T @ xc + ridge * np.eye(x.shape[1])
        weights = np.linalg.solve(gram, xc.T @ yc)
    return weights, float(y_mean - x_mean @ weights)


def linear_head_predict(features, weights, intercept):
    return np.asarray(features, dtype=float) @ weights + intercept


def ridge_cv(features, targets, ridges, folds=5, seed=0):
    """Pick the ridge strength by k-fold cross-validated squared error."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if folds < 2 or folds > x.shape[0]:
        raise InvalidArgumentError(f"need 2 <= folds <= n, got {folds}")
    order = np.random.default_rng(seed).permutation(x.shape[0])
    chunks = np.array_split(order, folds)
    best = None
    for ridge in ridges:
        err = 0.0
        for k in range(folds):
            held = chunks[k]
            rest = np.concatenate([c for j, c in enumerate(chunks) if j != k])
            w, b = linear_head_fit(x[rest], y[rest], ridge)
            err += float(np.sum((linear_head_predict(x[held], w, b)
                                 - y[held]) ** 2))
        if best is None or err < best[0]:
            best = (err, ridge)
    return best[1]


def attributions_ig(model, coeffs, filters, steps=50):
    """Integrated-gradients attribution of 2D wavelet coefficients.

    Riemann-sum approximation with a zero coefficient baseline: the path
    scales the coefficients, reconstructions are fed to the teacher, and
    the coefficient-space gradients are averaged and multiplied by the
    coefficient values.
    """
    config = TransformConfig(coeffs.levels)
    x = idwt2d(coeffs, filters)
    grad_sum = None
    for k in range(1, steps + 1):
        scaled = coeffs.map(lambda band: band * (k / steps))
        point = idwt2d(scaled, filters)
        q = input_grad_batch(model, np.ravel(point)[None, :])[0]
        g = dwt2d(q.reshape(x.shape), filters, config).to_vector()
        grad_sum = g if grad_sum is None else grad_sum + g
    attr_vec = coeffs.to_vector() * grad_sum / steps
    scored = coeffs.with_vector(attr_vec)
    return AttributionMap(scored.approx, scored.details, scored.levels,
                          coeffs.original_length)


def activation_map(x, model, filters, top_k, levels, steps=50):
    """Reconstruction from only the top-k attributed 2D coefficients.

    Attributions come from :func:`attributions_ig`; all but the ``top_k``
    coefficients with the largest |attribution| are zeroed before the
    inverse transform.
    """
    x = np.asarray(x, dtype=float)
    coeffs = dwt2d(x, filters, TransformConfig(levels))
    total = coeffs.coeff_count()
    if not 0 <= top_k <= total:
        raise InvalidArgumentError(
            f"top_k must be in 0..{total}, got {top_k}"
        )
    attr = attributions_ig(model, coeffs, filters, steps=steps)
    scores = np.abs(attr.to_vector())
    keep = np.argsort(scores, kind="stable")[::-1][:top_k]
    mask = np.zeros(total)
    mask[keep] = 1.0
    masked = coeffs.with_vector(coeffs.to_vector() * mask)
    return idwt2d(masked, filters)


def dump_curve_csv(curve, path):
    """Two-column (t, value) CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "value"))
        for t, v in zip(curve.grid, curve.values):
            writer.writerow((repr(float(t)), repr(float(v))))


def dump_matrix_csv(matrix, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix):
            writer.writerow([repr(float(v)) for v in row])
