"""Spectral notching by orthogonal projection.

Removing the component of a reference waveform that lies in the span of the
stop-band steering vectors yields the closest waveform with perfect nulls on
those grid frequencies. On the N-point grid the steering vectors are
orthonormal DFT columns, so the projection is a DFT, a bin zeroing and an
inverse DFT.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_random_state, check_sequence, check_waveforms
from .spectral import StopBand, union_indices

__all__ = ["generate_reference", "project_notch", "ProjectionNotcher"]


def generate_reference(n, seed=None, kind="phase"):
    """Unit-energy noise-like reference waveform.

    Parameters
    ----------
    n : int
        Number of samples.
    seed : int, Generator or None
        Random source; a fixed integer gives a reproducible sequence.
    kind : {"phase", "gaussian"}
        ``"phase"`` draws ``exp(j 2 pi phi) / sqrt(n)`` with ``phi`` uniform on
        [0, 1); ``"gaussian"`` draws circular complex Gaussian samples and
        rescales them to unit energy.

    Returns
    -------
    numpy.ndarray
        Complex array of length ``n`` with unit Euclidean norm.
    """
    n = check_positive_int(n, "n")
    rng = check_random_state(seed)
    if kind == "phase":
        return np.exp(2j * np.pi * rng.random(n)) / np.sqrt(n)
    if kind == "gaussian":
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return z / np.linalg.norm(z)
    raise ValueError(f"unknown reference kind {kind!r}")


def project_notch(c0, bands):
    """Project ``c0`` onto the orthogonal complement of the stop-band subspace.

    Every grid frequency inside any band is nulled; the rest of the spectrum
    is untouched, so the output norm drops by exactly the removed energy.
    Band energy caps are ignored.
    """
    c0 = check_sequence(c0, "c0")
    idx = union_indices(list(bands), c0.size)
    if idx.size == 0:
        return c0.copy()
    spectrum = np.fft.fft(c0)
    spectrum[idx] = 0.0
    return np.fft.ifft(spectrum)


class ProjectionNotcher(TransformerMixin, BaseEstimator):
    """Transformer that nulls stop bands in complex waveforms.

    Parameters
    ----------
    bands : sequence of StopBand
        Normalized stop bands. Their energy caps are not used.

    Attributes
    ----------
    n_samples_ : int
        Waveform length seen during ``fit``.
    null_indices_ : ndarray
        Grid bins removed by ``transform``.
    """

    def __init__(self, bands=()):
        self.bands = bands

    def fit(self, X, y=None):
        X, _ = check_waveforms(X)
        bands = list(self.bands)
        if not all(isinstance(b, StopBand) for b in bands):
            raise TypeError("bands must be StopBand instances")
        self.n_samples_ = X.shape[1]
        self.null_indices_ = union_indices(bands, self.n_samples_)
        return self

    def transform(self, X):
        check_is_fitted(self, "null_indices_")
        X, squeeze = check_waveforms(X)
        if X.shape[1] != self.n_samples_:
            raise ValueError(f"fitted for length {self.n_samples_}, got {X.shape[1]}")
        spectrum = np.fft.fft(X, axis=1)
        spectrum[:, self.null_indices_] = 0.0
        out = np.fft.ifft(spectrum, axis=1)
        return out[0] if squeeze else out
