"""Multi-level discrete wavelet transform, 1D and 2D, with exact gradients.

Conventions
-----------
Analysis follows ``a_{j+1}[p] = sum_n h[n - 2p] a_j[n]`` with all indices
taken modulo the current level length (periodic extension), equivalently
``a_{j+1}[p] = sum_k h[k] a_j[(2p + k) mod L]``. Synthesis is the exact
adjoint of analysis, so for orthogonal filter pairs the round trip is the
identity and energy is conserved.

Detail bands are stored finest first: ``details[0]`` is level 1 (length
L/2), ``details[levels-1]`` the coarsest. The canonical flattening used by
attribution vectors and the CSV dump is approx first, then details from
coarsest to finest.

Everything here is a pure function; gradients are analytic (the transform
is bilinear in the signal and the taps), which keeps the second-order
terms of the distillation objective tractable.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import ShapeError
from .filters import highpass_adjoint


@dataclass
class TransformConfig:
    levels: int
    boundary: str = "periodic"

    def __post_init__(self):
        if self.levels < 1:
            raise ShapeError(f"levels must be >= 1, got {self.levels}")
        if self.boundary != "periodic":
            raise ShapeError("only periodic boundary handling is supported")


@dataclass
class WaveletCoeffs:
    """One multi-level decomposition: approximation band plus per-level
    detail bands (one per level in 1D, three in 2D), finest first.
    """

    approx: np.ndarray
    details: list
    levels: int
    original_length: tuple = field(default=())

    @property
    def is_2d(self):
        return self.approx.ndim == 2

    def coeff_count(self):
        total = self.approx.size
        for bands in self.details:
            if isinstance(bands, tuple):
                total += sum(b.size for b in bands)
            else:
                total += bands.size
        return total

    def to_vector(self):
        """Flatten approx first, then details coarsest to finest."""
        parts = [np.ravel(self.approx)]
        for bands in reversed(self.details):
            if isinstance(bands, tuple):
                parts.extend(np.ravel(b) for b in bands)
            else:
                parts.append(np.ravel(bands))
        return np.concatenate(parts)

    def with_vector(self, vec):
        """Rebuild a structure like this one from a flat vector."""
        vec = np.asarray(vec, dtype=float)
        if vec.size != self.coeff_count():
            raise ShapeError(
                f"vector has {vec.size} entries, structure holds "
                f"{self.coeff_count()}"
            )
        pos = self.approx.size
        approx = vec[:pos].reshape(self.approx.shape)
        rev_details = []
        for bands in reversed(self.details):
            if isinstance(bands, tuple):
                new_bands = []
                for b in bands:
                    new_bands.append(vec[pos:pos + b.size].reshape(b.shape))
                    pos += b.size
                rev_details.append(tuple(new_bands))
            else:
                rev_details.append(vec[pos:pos + bands.size].reshape(bands.shape))
                pos += bands.size
        return type(self)(
            approx=approx,
            details=list(reversed(rev_details)),
            levels=self.levels,
            original_length=self.original_length,
        )

    def map(self, fn):
        """Apply ``fn`` to every band, keeping the structure."""
        details = []
        for bands in self.details:
            if isinstance(bands, tuple):
                details.append(tuple(fn(b) for b in bands))
            else:
                details.append(fn(bands))
        return type(self)(fn(self.approx), details, self.levels,
                          self.original_length)

    def zeros_like(self):
        return self.map(np.zeros_like)


_2D_BAND_NAMES = ("lh", "hl", "hh")


def _check_length(length, levels, what="signal"):
    if length % (1 << levels) != 0:
        for j in range(1, levels + 1):
            if (length >> (j - 1)) % 2 != 0:
                raise ShapeError(
                    f"{what} length {length} is not divisible by 2^{levels}; "
                    f"level {j} would need an even length, got "
                    f"{length >> (j - 1)}"
                )
    if length < 2:
        raise ShapeError(f"{what} length must be >= 2, got {length}")


def _as_batch(x):
    return np.ascontiguousarray(np.asarray(x, dtype=float)[None, :])


def dwt1d(x, filters, config):
    """Forward 1D transform via the periodic filter-bank cascade.

    Parameters
    ----------
    x : real vector with length divisible by ``2**config.levels``
    filters : FilterPair
    config : TransformConfig

    Returns
    -------
    WaveletCoeffs with critical sampling (as many coefficients as samples).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"dwt1d expects a 1D signal, got shape {x.shape}")
    _check_length(x.size, config.levels)
    approx = _as_batch(x)
    details = []
    for _ in range(config.levels):
        details.append(backend.analysis(approx, filters.highpass)[0])
        approx = backend.analysis(approx, filters.lowpass)
    return WaveletCoeffs(approx[0], details, config.levels, (x.size,))


def idwt1d(coeffs, filters):
    """Inverse (synthesis) transform; exact adjoint of :func:`dwt1d`."""
    a = _as_batch(coeffs.approx)
    for bands in reversed(coeffs.details):
        d = _as_batch(bands)
        if d.shape[1] != a.shape[1]:
            raise ShapeError(
                f"detail band of length {d.shape[1]} cannot pair with "
                f"approximation of length {a.shape[1]}"
            )
        length = 2 * a.shape[1]
        a = (backend.synthesis(a, filters.lowpass, length)
             + backend.synthesis(d, filters.highpass, length))
    return a[0]


def _analyze_rows(a, f):
    return backend.analysis(np.ascontiguousarray(a), f)


def _analyze_cols(a, f):
    return backend.analysis(np.ascontiguousarray(a.T), f).T


def _synth_rows(c, f, length):
    return backend.synthesis(np.ascontiguousarray(c), f, length)


def _synth_cols(c, f, length):
    return backend.synthesis(np.ascontiguousarray(c.T), f, length).T


def dwt2d(x, filters, config):
    """Separable 2D transform: rows then columns at every level.

    Each level yields an approximation plus (lh, hl, hh) detail bands,
    where the first letter is the filter applied along axis 0 and the
    second along axis 1.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"dwt2d expects a matrix, got shape {x.shape}")
    _check_length(x.shape[0], config.levels, "row count")
    _check_length(x.shape[1], config.levels, "column count")
    approx = x
    details = []
    for _ in range(config.levels):
        lo = _analyze_rows(approx, filters.lowpass)
        hi = _analyze_rows(approx, filters.highpass)
        lh = _analyze_cols(hi, filters.lowpass)
        hl = _analyze_cols(lo, filters.highpass)
        hh = _analyze_cols(hi, filters.highpass)
        approx = _analyze_cols(lo, filters.lowpass)
        details.append((lh, hl, hh))
    return WaveletCoeffs(approx, details, config.levels, x.shape)


def idwt2d(coeffs, filters):
    """Inverse separable 2D transform (adjoint of :func:`dwt2d`)."""
    a = coeffs.approx
    for lh, hl, hh in reversed(coeffs.details):
        for band in (lh, hl, hh):
            if band.shape != a.shape:
                raise ShapeError(
                    f"detail band shape {band.shape} does not match "
                    f"approximation shape {a.shape}"
                )
        rows = 2 * a.shape[0]
        lo = (_synth_cols(a, filters.lowpass, rows)
              + _synth_cols(hl, filters.highpass, rows))
        hi = (_synth_cols(lh, filters.lowpass, rows)
              + _synth_cols(hh, filters.highpass, rows))
        cols = 2 * a.shape[1]
        a = (_synth_rows(lo, filters.lowpass, cols)
             + _synth_rows(hi, filters.highpass, cols))
    return a


def dwt_grad(x, filters, config, upstream):
    """Gradients of ``<upstream, dwt(x)>`` w.r.t. the signal and the taps.

    The highpass dependence g(h) is chained through, so ``grad_lowpass``
    is the full derivative w.r.t. the lowpass taps. ``grad_x`` equals the
    synthesis recursion applied to ``upstream`` (the transform's adjoint).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        grads = dwt_grad_batch(x[None, :], filters, config,
                               _coeffs_to_batches(upstream))
        return grads[0][0], grads[1]
    if x.ndim == 2:
        return _dwt2d_grad(x, filters, config, upstream)
    raise ShapeError(f"unsupported signal rank {x.ndim}")


def _coeffs_to_batches(coeffs):
    return (coeffs.approx[None, :], [d[None, :] for d in coeffs.details])


def dwt1d_batch(x, filters, levels):
    """Batched 1D forward transform: returns (approx, [detail levels]),
    each of shape (batch, band length). Used by the optimization loops.
    """
    x = np.ascontiguousarray(x, dtype=float)
    _check_length(x.shape[1], levels)
    approx = x
    details = []
    for _ in range(levels):
        details.append(backend.analysis(approx, filters.highpass))
        approx = backend.analysis(approx, filters.lowpass)
    return approx, details


def idwt1d_batch(approx, details, filters):
    a = np.ascontiguousarray(approx, dtype=float)
    for d in reversed(details):
        length = 2 * a.shape[1]
        a = (backend.synthesis(a, filters.lowpass, length)
             + backend.synthesis(np.ascontiguousarray(d), filters.highpass,
                                 length))
    return a


def dwt_grad_batch(x, filters, levels_or_config, upstream):
    """Batched gradient of ``sum_b <upstream_b, dwt(x_b)>``.

    Returns (grad_x of shape like x, grad_lowpass of shape (taps,)).
    Per-signal contributions are summed into ``grad_lowpass``.
    """
    levels = getattr(levels_or_config, "levels", levels_or_config)
    x = np.ascontiguousarray(x, dtype=float)
    u_approx, u_details = upstream
    n_taps = filters.support

    # Forward pass, keeping every approximation level.
    approxes = [x]
    for _ in range(levels):
        approxes.append(backend.analysis(approxes[-1], filters.lowpass))

    grad_h = np.zeros(n_taps)
    grad_g = np.zeros(n_taps)
    cotangent = np.ascontiguousarray(u_approx, dtype=float)
    for j in range(levels - 1, -1, -1):
        a_prev = approxes[j]
        u_d = np.ascontiguousarray(u_details[j], dtype=float)
        grad_h += backend.tap_grad(a_prev, cotangent, n_taps)
        grad_g += backend.tap_grad(a_prev, u_d, n_taps)
        length = a_prev.shape[1]
        cotangent = (backend.synthesis(cotangent, filters.lowpass, length)
                     + backend.synthesis(u_d, filters.highpass, length))
    return cotangent, grad_h + highpass_adjoint(grad_g)


def _band_grads(a_prev, u_band, f_ax1, f_ax0, n_taps):
    """Gradients through one 2D band  <u, cols_{f_ax0}(rows_{f_ax1}(a))>.

    Returns (grad for the axis-1 filter, grad for the axis-0 filter,
    cotangent w.r.t. a_prev).
    """
    rows_out = _analyze_rows(a_prev, f_ax1)
    u_band = np.asarray(u_band, dtype=float)
    g_ax0 = backend.tap_grad(np.ascontiguousarray(rows_out.T),
                             np.ascontiguousarray(u_band.T), n_taps)
    cot_rows = _synth_cols(u_band, f_ax0, rows_out.shape[0])
    g_ax1 = backend.tap_grad(np.ascontiguousarray(a_prev),
                             np.ascontiguousarray(cot_rows), n_taps)
    cot_a = _synth_rows(cot_rows, f_ax1, a_prev.shape[1])
    return g_ax1, g_ax0, cot_a


def _dwt2d_grad(x, filters, config, upstream):
    n_taps = filters.support
    h, g = filters.lowpass, filters.highpass
    approxes = [x]
    for _ in range(config.levels):
        lo = _analyze_rows(approxes[-1], h)
        approxes.append(_analyze_cols(lo, h))

    grad_h = np.zeros(n_taps)
    grad_g = np.zeros(n_taps)
    cot = np.asarray(upstream.approx, dtype=float)
    for j in range(config.levels - 1, -1, -1):
        a_prev = approxes[j]
        u_lh, u_hl, u_hh = upstream.details[j]
        # Band letters name (axis 0, axis 1): lh = h on axis 0, g on axis 1.
        acc = np.zeros_like(a_prev)
        for u_band, f_ax0, f_ax1, sink_ax0, sink_ax1 in (
            (cot, h, h, grad_h, grad_h),
            (u_lh, h, g, grad_h, grad_g),
            (u_hl, g, h, grad_g, grad_h),
            (u_hh, g, g, grad_g, grad_g),
        ):
            g_ax1, g_ax0, cot_a = _band_grads(a_prev, u_band, f_ax1, f_ax0,
                                              n_taps)
            sink_ax0 += g_ax0
            sink_ax1 += g_ax1
            acc += cot_a
        cot = acc
    return cot, grad_h + highpass_adjoint(grad_g)


def dump_coeffs_csv(coeffs, path, attributions=None):
    """Write (level, band, index..., value[, attribution]) rows.

    Level 0 is the approximation; detail levels are numbered 1 (finest)
    to J. 2D rows carry (row, col) instead of a single index.
    """
    is_2d = coeffs.is_2d
    header = ["level", "band"]
    header += ["row", "col"] if is_2d else ["index"]
    header.append("value")
    if attributions is not None:
        header.append("attribution")

    def rows_for(level, band_name, values, attr):
        values = np.asarray(values)
        out = []
        for idx in np.ndindex(values.shape):
            row = [level, band_name, *idx, repr(float(values[idx]))]
            if attr is not None:
                row.append(repr(float(attr[idx])))
            out.append(row)
        return out

    attr_approx = attributions.approx if attributions is not None else None
    all_rows = rows_for(0, "approx", coeffs.approx, attr_approx)
    for lvl_idx, bands in enumerate(coeffs.details):
        level = lvl_idx + 1
        if isinstance(bands, tuple):
            for band_idx, (name, band) in enumerate(zip(_2D_BAND_NAMES, bands)):
                attr = None
                if attributions is not None:
                    attr = attributions.details[lvl_idx][band_idx]
                all_rows += rows_for(level, name, band, attr)
        else:
            attr = None
            if attributions is not None:
                attr = attributions.details[lvl_idx]
            all_rows += rows_for(level, "detail", bands, attr)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(all_rows)
