"""Frequency-domain primitives: grid, steering vectors and stop-band energy.

A waveform ``c`` of length N is analysed on the N-point normalized grid
``f_i = i / N`` (0-based). The energy that ``c`` radiates in a stop band is
the average of ``|c^H p_f|^2`` over the grid frequencies inside the band,
scaled by the band width, where ``p_f`` is the unit-norm steering vector.
Since grid steering vectors are scaled DFT columns, all quadratic forms are
evaluated with one FFT and the interference matrix is never built.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_positive_int, check_sequence

__all__ = [
    "StopBand",
    "FrequencyGrid",
    "BandOperator",
    "BandCheck",
    "steering_vector",
    "band_grid_indices",
    "band_energy",
    "check_constraints",
    "depth_to_energy",
    "energy_to_depth",
    "bands_from_hz",
    "union_indices",
]

# Slack used when snapping band edges onto the grid, in units of grid cells.
_SNAP_EPS = 1e-9


def depth_to_energy(depth_db):
    """Convert a notch depth in dB to a maximum band energy.

    A unit-energy flat reference has band energy close to one, so the depth
    is measured relative to the flat level. ``None`` and ``inf`` mean a
    perfect null (energy 0).
    """
    if depth_db is None or math.isinf(depth_db) and depth_db > 0:
        return 0.0
    return 10.0 ** (-float(depth_db) / 10.0)


def energy_to_depth(energy):
    if energy <= 0:
        return math.inf
    if math.isinf(energy):
        return -math.inf
    return -10.0 * math.log10(energy)


@dataclass(frozen=True)
class StopBand:
    """Normalized frequency interval ``[f_lo, f_hi]`` with an energy cap.

    ``max_energy`` may be ``inf`` to monitor a band without constraining it.
    """

    f_lo: float
    f_hi: float
    max_energy: float = 0.0

    def __post_init__(self):
        f_lo, f_hi, e = float(self.f_lo), float(self.f_hi), float(self.max_energy)
        if not (0.0 <= f_lo < 1.0):
            raise ValueError(f"f_lo must lie in [0, 1), got {f_lo}")
        if not (0.0 < f_hi <= 1.0):
            raise ValueError(f"f_hi must lie in (0, 1], got {f_hi}")
        if not f_lo < f_hi:
            raise ValueError(f"f_lo must be < f_hi, got [{f_lo}, {f_hi}]")
        if math.isnan(e) or e < 0:
            raise ValueError(f"max_energy must be >= 0, got {e}")
        object.__setattr__(self, "f_lo", f_lo)
        object.__setattr__(self, "f_hi", f_hi)
        object.__setattr__(self, "max_energy", e)

    @classmethod
    def from_depth(cls, f_lo, f_hi, depth_db=None):
        return cls(f_lo, f_hi, depth_to_energy(depth_db))

    @property
    def width(self):
        return self.f_hi - self.f_lo

    @property
    def depth_db(self):
        return energy_to_depth(self.max_energy)

    def with_energy(self, max_energy):
        return StopBand(self.f_lo, self.f_hi, max_energy)


def bands_from_hz(lo_hz, hi_hz, sample_rate, depth_db=None):
    """Map a baseband interval in Hz onto normalized :class:`StopBand` objects.

    Frequencies are wrapped with ``(f / fs) mod 1``. An interval straddling
    DC comes back as two bands sharing the same depth.
    """
    fs = float(sample_rate)
    if fs <= 0:
        raise ValueError("sample_rate must be positive")
    if not lo_hz < hi_hz:
        raise ValueError(f"band must satisfy lo < hi, got [{lo_hz}, {hi_hz}] Hz")
    if lo_hz < -fs / 2 or hi_hz > fs / 2:
        raise ValueError(f"band [{lo_hz}, {hi_hz}] Hz lies outside [-fs/2, fs/2]")
    lo = (lo_hz / fs) % 1.0
    hi = lo + (hi_hz - lo_hz) / fs
    energy = depth_to_energy(depth_db)
    if hi <= 1.0 + 1e-15:
        return [StopBand(lo, min(hi, 1.0), energy)]
    # straddles DC; the upper piece's closed edge at 1.0 already covers f = 0
    out = [StopBand(lo, 1.0, energy)]
    if hi - 1.0 > 1e-15:
        out.append(StopBand(0.0, hi - 1.0, energy))
    return out


@dataclass(frozen=True)
class FrequencyGrid:
    n_points: int

    def __post_init__(self):
        check_positive_int(self.n_points, "n_points")

    @property
    def spacing(self):
        return 1.0 / self.n_points

    @property
    def frequencies(self):
        return np.arange(self.n_points) / self.n_points


def steering_vector(f, n):
    """Unit-norm steering vector ``p_f(m) = exp(j 2 pi f m) / sqrt(n)``.

    The sign makes ``|c^H p_f|^2 = |sum_m c(m) exp(-j 2 pi f m)|^2 / n``, so
    ``p_f`` is a tone at +f and the measured energy agrees with an FFT-based
    PSD.
    """
    n = check_positive_int(n, "n")
    f = float(f)
    if not 0.0 <= f < 1.0:
        raise ValueError(f"f must lie in [0, 1), got {f}")
    m = np.arange(n)
    return np.exp(2j * np.pi * f * m) / np.sqrt(n)


def band_grid_indices(band, grid):
    """0-based indices of the grid frequencies inside the closed band.

    ``grid`` is a :class:`FrequencyGrid` or a plain length. The upper edge
    ``f_hi = 1`` wraps to DC.
    """
    n = grid.n_points if isinstance(grid, FrequencyGrid) else check_positive_int(grid, "grid")
    i_lo = math.ceil(band.f_lo * n - _SNAP_EPS)
    i_hi = math.floor(band.f_hi * n + _SNAP_EPS)
    if i_hi < i_lo:
        raise ValueError(
            f"band [{band.f_lo}, {band.f_hi}] contains no point of the {n}-point grid"
        )
    return np.unique(np.arange(i_lo, i_hi + 1) % n)


def union_indices(bands, n):
    if not bands:
        return np.zeros(0, dtype=np.intp)
    return np.unique(np.concatenate([band_grid_indices(b, n) for b in bands]))


@dataclass
class BandOperator:
    """Stop band snapped onto an ``n``-point grid.

    The operator's columns are the steering vectors at the in-band grid
    frequencies. They are orthonormal, so ``coefficients`` (``Q^H c``) is a
    slice of the scaled DFT.
    """

    band: StopBand
    n: int
    indices: np.ndarray = field(init=False)

    def __post_init__(self):
        self.n = check_positive_int(self.n, "n")
        self.indices = band_grid_indices(self.band, self.n)

    @property
    def width(self):
        return self.band.width

    @property
    def n_cols(self):
        return self.indices.size

    @property
    def frequencies(self):
        return self.indices / self.n

    def columns(self, rows=None):
        """Dense ``Q`` (n x S); ``rows`` optionally restricts the sample positions."""
        m = np.arange(self.n) if rows is None else np.asarray(rows)
        return np.exp(2j * np.pi * np.outer(m, self.indices) / self.n) / np.sqrt(self.n)

    def coefficients(self, c):
        c = np.asarray(c)
        if c.shape[-1] != self.n:
            raise ValueError(f"sequence length {c.shape[-1]} != operator length {self.n}")
        return np.fft.fft(c, axis=-1)[..., self.indices] / np.sqrt(self.n)

    def energy(self, c):
        q = self.coefficients(c)
        return float(np.sum(np.abs(q) ** 2) / self.width)


def band_energy(c, op):
    """Average interference energy ``c^H R c`` of ``c`` in the operator's band."""
    c = check_sequence(c)
    return op.energy(c)


@dataclass(frozen=True)
class BandCheck:
    band: StopBand
    energy: float
    max_energy: float

    @property
    def slack(self):
        return self.max_energy - self.energy

    def feasible(self, rtol=1e-9, atol=1e-20):
        return self.energy <= self.max_energy * (1 + rtol) + atol


def check_constraints(c, bands, grid=None):
    """Evaluate every band's energy against its cap.

    Returns one :class:`BandCheck` per band; the waveform is feasible when
    all of them are.
    """
    c = check_sequence(c)
    n = c.size if grid is None else (grid.n_points if isinstance(grid, FrequencyGrid) else grid)
    if n != c.size:
        raise ValueError(f"grid size {n} != sequence length {c.size}")
    spectrum = np.fft.fft(c)
    out = []
    for band in bands:
        idx = band_grid_indices(band, n)
        e = float(np.sum(np.abs(spectrum[idx]) ** 2) / n / band.width)
        out.append(BandCheck(band, e, band.max_energy))
    return out
