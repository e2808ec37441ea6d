"""Spectral and correlation measurements for designed waveforms.

PSDs are two-sided on the normalized axis ``[-0.5, 0.5)``; band membership
is tested on ``f mod 1`` so stop bands given on ``[0, 1)`` line up.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import signal

from ._validation import check_positive_int, check_sequence

__all__ = [
    "PsdEstimate",
    "Spectrogram",
    "AcfResult",
    "NotchDepth",
    "welch_psd",
    "mean_psd_level",
    "spectrogram",
    "autocorrelation",
    "psll",
    "notch_depth",
    "band_mask",
    "DEFAULT_WINDOW",
    "EDGE_GUARD_BINS",
]

# 4-term Blackman-Harris, -92 dB sidelobes.
DEFAULT_WINDOW = "blackmanharris"
# Half-width of the 4-term Blackman-Harris mainlobe, in bins.
EDGE_GUARD_BINS = 4

_TINY = 1e-300


@dataclass
class PsdEstimate:
    """Welch PSD on a two-sided normalized axis.

    ``power`` is linear and already divided by ``normalization``;
    ``power_db`` is its dB value.
    """

    frequencies: np.ndarray
    power: np.ndarray
    normalization: float
    sample_rate: float = None
    n_segments: int = 1

    @property
    def power_db(self):
        return 10.0 * np.log10(np.maximum(self.power, _TINY))

    @property
    def frequencies_hz(self):
        if self.sample_rate is None:
            raise ValueError("PSD has no sample rate")
        return self.frequencies * self.sample_rate


def _segment_args(n, segment_len, overlap):
    segment_len = check_positive_int(segment_len, "segment_len")
    if segment_len > n:
        raise ValueError(f"segment_len {segment_len} exceeds signal length {n}")
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must lie in [0, 1), got {overlap}")
    noverlap = int(round(overlap * segment_len))
    return segment_len, min(noverlap, segment_len - 1)


def _raw_welch(c, segment_len, overlap, window):
    nperseg, noverlap = _segment_args(c.size, segment_len, overlap)
    f, p = signal.welch(
        c,
        fs=1.0,
        window=window,
        nperseg=nperseg,
        noverlap=noverlap,
        return_onesided=False,
        detrend=False,
        scaling="density",
    )
    order = np.argsort(np.fft.fftshift(f))
    f = np.fft.fftshift(f)[order]
    p = np.fft.fftshift(p)[order]
    n_segments = 1 + (c.size - nperseg) // (nperseg - noverlap)
    return f, p, n_segments


def mean_psd_level(c, segment_len=1000, overlap=0.5, window=DEFAULT_WINDOW):
    """Mean of the linear Welch PSD; used to normalize other curves to ``c``."""
    c = check_sequence(c)
    _, p, _ = _raw_welch(c, segment_len, overlap, window)
    return float(np.mean(p))


def welch_psd(
    c,
    segment_len=1000,
    overlap=0.5,
    window=DEFAULT_WINDOW,
    normalize="mean",
    sample_rate=None,
):
    """Welch PSD estimate of a complex waveform.

    Parameters
    ----------
    c : array_like
        Complex samples.
    segment_len : int
        Samples per segment; also the number of output bins.
    overlap : float
        Fractional overlap of consecutive segments.
    window : str or tuple
        Any window spec accepted by :func:`scipy.signal.get_window`.
    normalize : {"mean", "absolute"} or float
        ``"mean"`` divides by the estimate's own mean, ``"absolute"`` leaves
        it as a density per unit normalized frequency, and a number divides
        by that level (e.g. a reference's :func:`mean_psd_level`).
    sample_rate : float, optional
        Stored so frequencies can be reported in Hz.
    """
    c = check_sequence(c)
    f, p, n_segments = _raw_welch(c, segment_len, overlap, window)
    if normalize == "mean":
        level = float(np.mean(p))
    elif normalize == "absolute":
        level = 1.0
    elif isinstance(normalize, (int, float)) and normalize > 0:
        level = float(normalize)
    else:
        raise ValueError(f"invalid normalize option {normalize!r}")
    if level <= 0:
        raise ValueError("cannot normalize an all-zero PSD")
    return PsdEstimate(f, p / level, level, sample_rate, n_segments)


@dataclass
class Spectrogram:
    times: np.ndarray  # first sample of each segment
    frequencies: np.ndarray
    power_db: np.ndarray  # (n_freq, n_times), max-normalized


def spectrogram(c, segment_len=200, overlap=0.5, window=DEFAULT_WINDOW):
    """Short-time PSD normalized to its global maximum (0 dB)."""
    c = check_sequence(c)
    nperseg, noverlap = _segment_args(c.size, segment_len, overlap)
    f, t, sxx = signal.spectrogram(
        c,
        fs=1.0,
        window=window,
        nperseg=nperseg,
        noverlap=noverlap,
        return_onesided=False,
        detrend=False,
        mode="psd",
    )
    peak = float(np.max(sxx))
    if not peak > 0:
        raise ValueError("spectrogram of an all-zero signal cannot be normalized")
    order = np.argsort(np.fft.fftshift(f))
    f = np.fft.fftshift(f)[order]
    sxx = np.fft.fftshift(sxx, axes=0)[order]
    starts = np.round(t - nperseg / 2).astype(int)
    return Spectrogram(starts, f, 10 * np.log10(np.maximum(sxx / peak, _TINY)))


@dataclass
class AcfResult:
    lags: np.ndarray
    magnitude_db: np.ndarray
    pslr_db: float


def autocorrelation(c, max_lag=None, mainlobe=2):
    """Aperiodic autocorrelation ``r(l) = sum_i c(i) conj(c(i - l))``.

    The modulus is normalized to ``r(0)``. The peak sidelobe level is the
    largest value over ``mainlobe <= |l| <= max_lag``; for sequences too
    short to leave any such lag the mainlobe shrinks to ``max_lag``.
    """
    c = check_sequence(c, min_length=2)
    n = c.size
    max_lag = n - 1 if max_lag is None else min(check_positive_int(max_lag, "max_lag"), n - 1)
    mainlobe = max(1, min(int(mainlobe), max_lag))
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.fft(c, nfft)
    r = np.fft.ifft(np.abs(spec) ** 2)
    r0 = r[0].real
    if r0 <= 0:
        raise ValueError("autocorrelation of an all-zero signal")
    pos = np.abs(r[: max_lag + 1]) / r0
    # |r(-l)| = |r(l)| for the aperiodic ACF
    mag = np.concatenate([pos[:0:-1], pos])
    lags = np.arange(-max_lag, max_lag + 1)
    mag_db = 20 * np.log10(np.maximum(mag, _TINY))
    mag_db[max_lag] = 0.0
    pslr = float(np.max(mag_db[np.abs(lags) >= mainlobe]))
    return AcfResult(lags, mag_db, pslr)


def psll(c, max_lag=None, mainlobe=2):
    return autocorrelation(c, max_lag, mainlobe).pslr_db


def band_mask(frequencies, band, pad=0.0):
    """Bins whose frequency lies in ``[f_lo - pad, f_hi + pad]`` modulo 1."""
    lo = band.f_lo - pad
    width = band.f_hi - band.f_lo + 2 * pad
    eps = 1e-9
    return np.mod(np.asarray(frequencies) - lo + eps, 1.0) <= width + 2 * eps


@dataclass
class NotchDepth:
    """Notch depths in dB below the passband level (positive = suppressed)."""

    band: object
    passband_db: float
    mean_db: float
    min_db: float
    max_db: float
    edge_lo_db: float
    edge_hi_db: float
    n_bins: int


def notch_depth(psd, bands, guard=EDGE_GUARD_BINS):
    """Measure how far each band sits below the passband.

    The passband level is the linear mean of all bins outside every band
    (and their guard zones). Inside a band, the first and last ``guard``
    bins are excluded from the statistics because window leakage dominates
    them; ``edge_lo_db``/``edge_hi_db`` report the outermost in-band bins.
    ``mean_db`` compares linear means, ``min_db`` uses the highest interior
    bin and ``max_db`` the lowest.
    """
    bands = list(bands)
    freqs = psd.frequencies
    power = psd.power
    df = float(np.median(np.diff(freqs)))
    covered = np.zeros(freqs.size, dtype=bool)
    per_band = []
    for band in bands:
        mask = band_mask(freqs, band)
        if not mask.any():
            raise ValueError(f"band [{band.f_lo}, {band.f_hi}] has no PSD bins")
        per_band.append(mask)
        covered |= band_mask(freqs, band, pad=guard * df)
    passband = ~covered
    if not passband.any():
        raise ValueError("no passband bins left to reference the notch depth")
    passband_db = 10 * math.log10(float(np.mean(power[passband])))
    out = []
    for band, mask in zip(bands, per_band):
        idx = np.flatnonzero(mask)
        idx = idx[np.argsort(np.mod(freqs[idx] - band.f_lo + 1e-9, 1.0))]
        interior = idx[guard : idx.size - guard] if idx.size > 2 * guard else idx
        p = np.maximum(power[interior], _TINY)
        depths = passband_db - 10 * np.log10(p)
        out.append(
            NotchDepth(
                band=band,
                passband_db=passband_db,
                mean_db=passband_db - 10 * math.log10(float(np.mean(p))),
                min_db=float(np.min(depths)),
                max_db=float(np.max(depths)),
                edge_lo_db=passband_db - 10 * math.log10(max(float(power[idx[0]]), _TINY)),
                edge_hi_db=passband_db - 10 * math.log10(max(float(power[idx[-1]]), _TINY)),
                n_bins=int(interior.size),
            )
        )
    return out
