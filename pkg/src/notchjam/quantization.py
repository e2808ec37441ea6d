"""DAC amplitude quantization of complex waveforms and its spectral cost."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_sequence, check_waveforms
from .analysis import EDGE_GUARD_BINS, notch_depth, welch_psd

__all__ = [
    "step_size",
    "theory_variance",
    "quantize",
    "full_scale_normalize",
    "QuantizationReport",
    "quantization_report",
    "notch_degradation",
    "UniformQuantizer",
]

MAX_BITS = 52


def step_size(bits):
    """Quantization step ``2 / 2**bits`` for the interval [-1, 1]."""
    bits = check_positive_int(bits, "bits")
    return 2.0 / 2.0**bits


def theory_variance(bits):
    """Per-part error variance ``step**2 / 12`` of a uniform quantizer."""
    return step_size(bits) ** 2 / 12.0


def _quantize_real(x, bits):
    delta = step_size(bits)
    half = 2 ** (bits - 1)
    k = np.clip(np.floor(x / delta), -half, half - 1)
    return (k + 0.5) * delta


def quantize(c, bits):
    """Mid-rise quantization of real and imaginary parts with ``bits`` bits.

    Each part is rounded to the nearest of the ``2**bits`` levels
    ``-1 + step/2 + k step``. Parts must already lie in [-1, 1]; see
    :func:`full_scale_normalize`.
    """
    c = check_sequence(c)
    bits = check_positive_int(bits, "bits")
    if bits > MAX_BITS:
        raise ValueError(f"bits must be <= {MAX_BITS}")
    peak = max(float(np.max(np.abs(c.real))), float(np.max(np.abs(c.imag))))
    if peak > 1.0:
        raise ValueError(f"parts must lie in [-1, 1], peak is {peak:.6g}")
    return _quantize_real(c.real, bits) + 1j * _quantize_real(c.imag, bits)


def full_scale_normalize(c):
    """Scale ``c`` so its largest real or imaginary part has magnitude 1.

    Returns
    -------
    scaled : ndarray
    scale : float
        Factor applied; divide by it to undo.
    """
    c = check_sequence(c)
    peak = max(float(np.max(np.abs(c.real))), float(np.max(np.abs(c.imag))))
    if peak == 0:
        raise ValueError("cannot normalize an all-zero waveform")
    scale = 1.0 / peak
    return c * scale, scale


@dataclass
class QuantizationReport:
    bits: int
    step: float
    energy_diff: float
    est_variance_re: float
    est_variance_im: float
    theory_variance: float
    histogram_counts: np.ndarray
    histogram_edges: np.ndarray
    max_abs_error: float

    @property
    def relative_error_re(self):
        return abs(self.est_variance_re - self.theory_variance) / self.theory_variance


def quantization_report(c, bits, n_bins=50):
    """Error statistics of quantizing a full-scale waveform with ``bits`` bits.

    The histogram covers the real-part error over ``[-step/2, step/2]``.
    """
    c = check_sequence(c)
    q = quantize(c, bits)
    err = c - q
    delta = step_size(bits)
    counts, edges = np.histogram(err.real, bins=n_bins, range=(-delta / 2, delta / 2))
    return QuantizationReport(
        bits=int(bits),
        step=delta,
        energy_diff=float(np.sum(err.real**2 + err.imag**2)),
        est_variance_re=float(np.var(err.real)),
        est_variance_im=float(np.var(err.imag)),
        theory_variance=delta**2 / 12.0,
        histogram_counts=counts,
        histogram_edges=edges,
        max_abs_error=float(max(np.max(np.abs(err.real)), np.max(np.abs(err.imag)))),
    )


def notch_degradation(c, bands, bits_list, segment_len=1000, overlap=0.5, guard=EDGE_GUARD_BINS):
    """Notch depth of ``c`` after full-scale quantization at each bit depth.

    Returns a dict ``bits -> list of NotchDepth`` (one per band). The key
    ``None`` holds the unquantized waveform for comparison.
    """
    scaled, _ = full_scale_normalize(c)
    bands = list(bands)
    out = {None: notch_depth(welch_psd(scaled, segment_len, overlap), bands, guard)}
    for bits in bits_list:
        q = quantize(scaled, bits)
        out[int(bits)] = notch_depth(welch_psd(q, segment_len, overlap), bands, guard)
    return out


class UniformQuantizer(TransformerMixin, BaseEstimator):
    """Full-scale normalization followed by mid-rise quantization.

    ``fit`` learns the full-scale factor from the data (largest part over all
    rows), ``transform`` applies it and quantizes, ``inverse_transform``
    undoes the scaling only.

    Parameters
    ----------
    bits : int
    normalize : bool
        If False the input must already lie in [-1, 1] and ``scale_`` is 1.
    """

    def __init__(self, bits=16, normalize=True):
        self.bits = bits
        self.normalize = normalize

    def fit(self, X, y=None):
        X, _ = check_waveforms(X)
        check_positive_int(self.bits, "bits")
        if self.normalize:
            peak = max(float(np.max(np.abs(X.real))), float(np.max(np.abs(X.imag))))
            if peak == 0:
                raise ValueError("cannot normalize an all-zero waveform")
            self.scale_ = 1.0 / peak
        else:
            self.scale_ = 1.0
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X, squeeze = check_waveforms(X)
        out = np.stack([quantize(row * self.scale_, self.bits) for row in X])
        return out[0] if squeeze else out

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        X, squeeze = check_waveforms(X)
        out = X / self.scale_
        return out[0] if squeeze else out
