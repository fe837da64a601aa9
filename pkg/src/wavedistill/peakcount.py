"""Peak-counting inference on 2D maps.

Local maxima are detected on the interior of a map, scored with a small
steepness filter (raw height, a 3x3 Laplacian, Roberts-cross blocks, or a
3x3 subfilter cropped from a wavelet filter bank), histogrammed, and maps
are classified by minimum Mahalanobis distance to per-class histogram
statistics.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, ShapeError

logger = logging.getLogger(__name__)

# Zero-mean peak-minus-surround Laplacian. The defining matrix is scaled
# by 10/3 so an isolated unit spike scores +10/3; the surround weights
# sum to the negated center.
LAPLACE_KERNEL = (10.0 / 3.0) * np.array([
    [-0.05, -0.2, -0.05],
    [-0.2, 1.0, -0.2],
    [-0.05, -0.2, -0.05],
])

ROBERTS_X = np.array([[0.0, 1.0], [-1.0, 0.0]])
ROBERTS_Y = np.array([[1.0, 0.0], [0.0, -1.0]])

# Margin of interior pixels a peak needs for each scoring filter. Roberts
# uses 2x2 blocks cornered on the peak (margin 1 would do) but boundary
# peaks are skipped one pixel earlier to keep every block fully interior
# even on the downstream shifted grids.
_MARGINS = {"height": 0, "laplace": 1, "subfilter": 1, "roberts_cross": 2}


@dataclass(frozen=True)
class PeakFilter:
    kind: str
    kernel: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _MARGINS:
            raise InvalidArgumentError(f"unknown peak filter {self.kind!r}")
        if self.kind == "subfilter":
            if self.kernel is None or self.kernel.shape != (3, 3):
                raise ShapeError("subfilter kernels must be exactly 3x3")

    @property
    def margin(self):
        return _MARGINS[self.kind]


def find_peaks(image):
    """Interior pixels strictly greater than all 8 neighbours, row-major."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or min(image.shape) < 3:
        raise ShapeError("peak detection needs a matrix of at least 3x3")
    center = image[1:-1, 1:-1]
    mask = np.ones(center.shape, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            neighbour = image[1 + dr:image.shape[0] - 1 + dr,
                              1 + dc:image.shape[1] - 1 + dc]
            mask &= center > neighbour
    rows, cols = np.nonzero(mask)
    return [(int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)]


def _roberts_score(image, r, c):
    total = 0.0
    for r0, c0 in ((r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)):
        block = image[r0:r0 + 2, c0:c0 + 2]
        gx = float(np.sum(ROBERTS_X * block))
        gy = float(np.sum(ROBERTS_Y * block))
        total += np.hypot(gx, gy)
    return total


def steepness(image, peaks, peak_filter):
    """Score each peak with the filter; boundary-crowded peaks are skipped
    (and counted in a warning) rather than padded."""
    image = np.asarray(image, dtype=float)
    margin = peak_filter.margin
    values = []
    skipped = 0
    for r, c in peaks:
        if not (margin <= r < image.shape[0] - margin
                and margin <= c < image.shape[1] - margin):
            skipped += 1
            continue
        if peak_filter.kind == "height":
            values.append(image[r, c])
        elif peak_filter.kind == "roberts_cross":
            values.append(_roberts_score(image, r, c))
        else:
            kernel = (LAPLACE_KERNEL if peak_filter.kind == "laplace"
                      else peak_filter.kernel)
            patch = image[r - 1:r + 2, c - 1:c + 2]
            values.append(float(np.sum(kernel * patch)))
    if skipped:
        logger.warning("skipped %d peaks too close to the boundary for %s",
                       skipped, peak_filter.kind)
    return np.array(values)


@dataclass
class PeakHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if self.counts.size != self.bin_edges.size - 1:
            raise ShapeError("counts/bin_edges sizes inconsistent")


def histogram(values, lo, hi, width):
    """Uniform left-closed right-open bins; out-of-range values dropped."""
    if hi <= lo or width <= 0:
        raise InvalidArgumentError("need hi > lo and width > 0")
    n_float = (hi - lo) / width
    n_bins = round(n_float)
    if abs(n_float - n_bins) > 1e-9:
        raise InvalidArgumentError(
            f"(hi - lo) / width = {n_float} is not an integer bin count"
        )
    values = np.asarray(values, dtype=float)
    inside = values[(values >= lo) & (values < hi)]
    idx = np.floor((inside - lo) / width).astype(int)
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return PeakHistogram(lo + width * np.arange(n_bins + 1), counts)


@dataclass
class ClassModel:
    label: object
    mean: np.ndarray
    covariance: np.ndarray
    inverse: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.covariance.shape != (self.mean.size, self.mean.size):
            raise ShapeError("covariance/mean dimensions inconsistent")
        if np.max(np.abs(self.covariance - self.covariance.T)) > 1e-12:
            raise ShapeError("covariance must be symmetric")
        if self.inverse is None:
            dim = self.mean.size
            ridge = 1e-8 * np.trace(self.covariance) / dim
            if ridge <= 0:
                ridge = 1e-12
            self.inverse = np.linalg.inv(self.covariance + ridge * np.eye(dim))


def fit_classes(histograms_by_label):
    """Per-label sample mean and covariance (denominator n-1) of the
    count vectors; the cached inverse carries a small trace-scaled ridge."""
    models = []
    for label, hists in histograms_by_label.items():
        if len(hists) < 2:
            raise InvalidArgumentError(
                f"class {label!r} needs at least 2 histograms"
            )
        data = np.stack([h.counts.astype(float) for h in hists])
        mean = data.mean(axis=0)
        centered = data - mean
        cov = centered.T @ centered / (data.shape[0] - 1)
        cov = (cov + cov.T) / 2
        models.append(ClassModel(label=label, mean=mean, covariance=cov))
    return models


def mahalanobis(hist, model):
    diff = hist.counts.astype(float) - model.mean
    return float(diff @ model.inverse @ diff)


def classify(hist, classes):
    """Label of the class with the smallest Mahalanobis distance; ties go
    to the earlier class in the list."""
    if not classes:
        raise InvalidArgumentError("need at least one class model")
    for model in classes:
        if model.mean.size != hist.counts.size:
            raise ShapeError("histogram/class dimension mismatch")
    best = min(range(len(classes)),
               key=lambda i: (mahalanobis(hist, classes[i]), i))
    return classes[best].label


def map_histogram(image, peak_filter, lo, hi, width):
    """find_peaks -> steepness -> histogram for one map."""
    peaks = find_peaks(image)
    values = steepness(image, peaks, peak_filter)
    return histogram(values, lo, hi, width)


def fit_peak_pipeline(maps, labels, peak_filter, lo, hi, width):
    """Class models from labelled training maps."""
    grouped = {}
    for image, label in zip(maps, labels):
        grouped.setdefault(label, []).append(
            map_histogram(image, peak_filter, lo, hi, width))
    return fit_classes(grouped)


def classify_maps(maps, peak_filter, lo, hi, width, classes):
    return [classify(map_histogram(m, peak_filter, lo, hi, width), classes)
            for m in maps]


def tune_bin_range(train_maps, train_labels, val_maps, val_labels,
                   peak_filter, n_bins=22):
    """Pick the histogram range by validation accuracy over a small grid
    of percentile-derived (lo, hi) candidates; the bin count stays fixed.
    """
    pooled = np.concatenate([
        steepness(m, find_peaks(m), peak_filter) for m in train_maps
    ])
    lo_candidates = [float(np.percentile(pooled, p)) for p in (0, 2, 10)]
    hi_candidates = [float(np.percentile(pooled, p)) for p in (90, 98, 100)]
    best = None
    for lo in lo_candidates:
        for hi in hi_candidates:
            if hi <= lo:
                continue
            width = (hi - lo) / n_bins
            hi_adj = lo + width * n_bins
            classes = fit_peak_pipeline(train_maps, train_labels,
                                        peak_filter, lo, hi_adj, width)
            predicted = classify_maps(val_maps, peak_filter, lo, hi_adj,
                                      width, classes)
            accuracy = float(np.mean(
                [p == t for p, t in zip(predicted, val_labels)]))
            if best is None or accuracy > best[0] + 1e-12:
                best = (accuracy, lo, hi_adj, width)
    accuracy, lo, hi, width = best
    return lo, hi, width, accuracy


def extract_subfilters(filters):
    """Four 3x3 kernels (ll, lh, hl, hh) cropped from the separable 2D
    filter products at the window of maximal squared mass.

    Ties go to the smallest (row, col) window origin. Needs filter
    support >= 3.
    """
    if filters.support < 3:
        raise InvalidArgumentError(
            f"subfilter extraction needs support >= 3, got {filters.support}"
        )
    h, g = filters.lowpass, filters.highpass
    out = {}
    for name, (fa, fb) in (("ll", (h, h)), ("lh", (h, g)),
                           ("hl", (g, h)), ("hh", (g, g))):
        kernel = np.outer(fa, fb)
        best = None
        n = kernel.shape[0]
        for r in range(n - 2):
            for c in range(n - 2):
                mass = float(np.sum(kernel[r:r + 3, c:c + 3] ** 2))
                if best is None or mass > best[0] + 1e-15:
                    best = (mass, r, c)
        _, r, c = best
        out[name] = kernel[r:r + 3, c:c + 3].copy()
    return out
