"""Software coexistence scenario: jammer, friendly link and hostile radar.

Everything runs at complex baseband over the jammer bandwidth. A
pi/4-DQPSK burst sits inside one of the jammer's stop bands and a chirp
radar sits in its passband. For each jammer type the received mix is
demodulated (friendly error rate) and matched-filtered with coherent pulse
integration (radar SINR).
"""

from dataclasses import asdict, dataclass, field, fields
import logging
import math

import numpy as np

from ._validation import check_positive_int, check_sequence
from .analysis import mean_psd_level, welch_psd
from .projection import generate_reference, project_notch
from .qcqp import design_blockwise
from .spectral import bands_from_hz

__all__ = [
    "DqpskParams",
    "DemodResult",
    "rrc_taps",
    "dqpsk_symbols",
    "dqpsk_modulate",
    "dqpsk_demodulate",
    "chirp_pulse",
    "matched_filter_integrate",
    "estimate_sinr",
    "CommConfig",
    "RadarConfig",
    "JammerConfig",
    "ScenarioConfig",
    "CoexistenceReport",
    "JAMMER_TYPES",
    "build_jammers",
    "run_scenario",
]

logger = logging.getLogger(__name__)

# bit pair -> phase transition (Gray mapped)
_TRANSITIONS = {
    (0, 0): math.pi / 4,
    (0, 1): 3 * math.pi / 4,
    (1, 0): -math.pi / 4,
    (1, 1): -3 * math.pi / 4,
}
_DECISIONS = np.array([math.pi / 4, 3 * math.pi / 4, -math.pi / 4, -3 * math.pi / 4])
_DECISION_BITS = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])

JAMMER_TYPES = ("none", "reference", "proj", "qcqp-5000", "qcqp-1000")


def rrc_taps(rolloff, sps, span):
    """Unit-energy root-raised-cosine FIR, ``span`` symbols long."""
    if not 0 < rolloff <= 1:
        raise ValueError("rolloff must lie in (0, 1]")
    sps = check_positive_int(sps, "sps")
    span = check_positive_int(span, "span")
    t = np.arange(-span * sps / 2, span * sps / 2 + 1) / sps
    b = rolloff
    h = np.empty_like(t)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[i] = 1 + b * (4 / np.pi - 1)
        elif abs(abs(ti) - 1 / (4 * b)) < 1e-9:
            h[i] = (b / np.sqrt(2)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
            )
        else:
            num = np.sin(np.pi * ti * (1 - b)) + 4 * b * ti * np.cos(np.pi * ti * (1 + b))
            den = np.pi * ti * (1 - (4 * b * ti) ** 2)
            h[i] = num / den
    return h / np.linalg.norm(h)


@dataclass(frozen=True)
class DqpskParams:
    symbol_rate: float = 400e3
    rolloff: float = 0.25
    sample_rate: float = 20e6
    carrier_offset: float = 8.5e6
    span: int = 32
    bandwidth: float = 500e3

    @property
    def sps(self):
        ratio = self.sample_rate / self.symbol_rate
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("sample_rate must be an integer multiple of symbol_rate")
        return int(round(ratio))

    @property
    def occupied_bandwidth(self):
        return (1 + self.rolloff) * self.symbol_rate

    def taps(self):
        return rrc_taps(self.rolloff, self.sps, self.span)

    def burst_length(self, n_bits):
        return (n_bits // 2 + 1) * self.sps + self.span * self.sps


def dqpsk_symbols(bits):
    """Differentially encoded unit symbols, with a leading reference symbol."""
    bits = np.asarray(bits, dtype=int).ravel()
    if bits.size % 2:
        raise ValueError("pi/4-DQPSK needs an even number of bits")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    steps = np.array([_TRANSITIONS[(int(a), int(b))] for a, b in bits.reshape(-1, 2)])
    phase = np.concatenate([[0.0], np.cumsum(steps)])
    return np.exp(1j * phase)


def dqpsk_modulate(bits, params=DqpskParams()):
    """Pulse-shaped pi/4-DQPSK burst at the configured carrier offset.

    The burst has unit average power over its symbols' span and length
    ``params.burst_length(len(bits))``.
    """
    if params.occupied_bandwidth > params.bandwidth * (1 + 1e-12):
        raise ValueError(
            f"occupied bandwidth {params.occupied_bandwidth:.0f} Hz exceeds the allowed {params.bandwidth:.0f} Hz"
        )
    symbols = dqpsk_symbols(bits)
    sps = params.sps
    up = np.zeros(symbols.size * sps, dtype=np.complex128)
    up[::sps] = symbols
    x = np.convolve(up, params.taps()) * np.sqrt(sps)
    n = np.arange(x.size)
    return x * np.exp(2j * np.pi * params.carrier_offset / params.sample_rate * n)


@dataclass
class DemodResult:
    bits: np.ndarray
    transitions: np.ndarray  # estimated phase transitions theta_d
    timing: int  # sample index of the first symbol in the filtered stream
    sync_ok: bool = True

    @property
    def scatter(self):
        """``(a_I, a_Q) = (cos theta_d, sin theta_d)`` per transition."""
        return np.column_stack([np.cos(self.transitions), np.sin(self.transitions)])


def dqpsk_demodulate(rx, n_bits, params=DqpskParams(), start=0, search=None):
    """Recover ``n_bits`` from a burst that begins near sample ``start`` of ``rx``.

    The signal is mixed down, matched-filtered with the RRC pulse, and the
    symbol timing is the offset within ``start +- search`` samples (default
    one symbol) that maximises the energy at the symbol instants. Bits come
    from the nearest of the four phase transitions.
    """
    rx = check_sequence(rx, "rx")
    sps = params.sps
    taps = params.taps()
    n_sym = n_bits // 2 + 1
    search = sps if search is None else int(search)
    nominal = start + taps.size - 1  # first symbol peak after TX and RX filters
    lo = nominal - search
    hi = nominal + search
    last = hi + (n_sym - 1) * sps
    if lo < 0 or last >= rx.size + taps.size - 1:
        return DemodResult(np.zeros(n_bits, dtype=int), np.zeros(n_sym - 1), nominal, sync_ok=False)
    seg_lo = max(start - search - taps.size, 0)
    seg_hi = min(last + 1, rx.size)
    seg = rx[seg_lo:seg_hi]
    n = np.arange(seg_lo, seg_hi)
    base = seg * np.exp(-2j * np.pi * params.carrier_offset / params.sample_rate * n)
    y = np.convolve(base, taps)  # y[k] corresponds to rx index seg_lo + k - (ntaps - 1) + ...
    offset = seg_lo  # y index = absolute filtered index - seg_lo
    best, best_energy = nominal, -1.0
    k = np.arange(n_sym) * sps
    for t0 in range(lo, hi + 1):
        idx = t0 - offset + k
        if idx[-1] >= y.size:
            break
        e = float(np.sum(np.abs(y[idx]) ** 2))
        if e > best_energy:
            best, best_energy = t0, e
    sym = y[best - offset + k]
    theta = np.angle(sym[1:] * np.conj(sym[:-1]))
    diff = np.angle(np.exp(1j * (theta[:, None] - _DECISIONS[None, :])))
    choice = np.argmin(np.abs(diff), axis=1)
    bits = _DECISION_BITS[choice].ravel()
    return DemodResult(bits, theta, best, sync_ok=True)


def chirp_pulse(bandwidth, pulse_width, sample_rate, offset=0.0):
    """Unit-energy linear FM pulse sweeping ``offset +- bandwidth / 2``."""
    if bandwidth <= 0 or bandwidth > sample_rate:
        raise ValueError("bandwidth must lie in (0, sample_rate]")
    n = int(round(pulse_width * sample_rate))
    if n < 1:
        raise ValueError("pulse shorter than one sample")
    t = np.arange(n) / sample_rate
    phase = 2 * np.pi * ((offset - bandwidth / 2) * t + bandwidth / (2 * pulse_width) * t**2)
    x = np.exp(1j * phase)
    return x / np.linalg.norm(x)


def matched_filter_integrate(rx, replica, pri, pulses):
    """Per-PRI matched filtering followed by coherent summation.

    Returns a dict ``M -> integrated output`` (length ``pri``) for every
    ``M`` in ``pulses``; output index ``h`` is the delay in samples.
    """
    rx = np.asarray(rx, dtype=np.complex128)
    pulses = sorted(set(int(m) for m in pulses))
    need = pulses[-1] * pri
    if rx.size < need:
        raise ValueError(f"need {need} samples for {pulses[-1]} pulses, got {rx.size}")
    frames = rx[:need].reshape(pulses[-1], pri)
    ref = np.fft.fft(replica, pri)
    mf = np.fft.ifft(np.fft.fft(frames, axis=1) * np.conj(ref)[None, :], axis=1)
    acc = np.cumsum(mf, axis=0)
    return {m: acc[m - 1] for m in pulses}


def estimate_sinr(y_radar, y_jam, peak_cells=None):
    """Peak radar power over mean jam-plus-noise power, in dB.

    ``peak_cells`` restricts the peak search to the given delay indices
    (for example the target's range cells).
    """
    y_radar = np.asarray(y_radar)
    if peak_cells is not None:
        y_radar = y_radar[np.asarray(peak_cells)]
    y_jam = np.asarray(y_jam)
    if y_jam.size == 0:
        raise ValueError("no jam-only samples to estimate the interference level")
    interference = float(np.mean(np.abs(y_jam) ** 2))
    peak = float(np.max(np.abs(y_radar) ** 2))
    if interference <= 0:
        return math.inf
    return 10 * math.log10(peak / interference)


@dataclass
class CommConfig:
    offset: float = 8.5e6
    bandwidth: float = 500e3
    n_bits: int = 368
    symbol_rate: float = 400e3
    rolloff: float = 0.25
    span: int = 32
    snr_db: float = 10.0  # burst power over noise power, per sample


@dataclass
class RadarConfig:
    offset: float = 2e6
    bandwidth: float = 2e6
    pulse_width: float = 50e-6
    pri: float = 500e-6
    pulses: tuple = (1, 20, 30)
    snr_db: float = 42.0  # single-pulse matched-filter SNR
    delay: float = 100e-6


@dataclass
class JammerConfig:
    types: tuple = JAMMER_TYPES
    jnr_db: float = 57.5  # reference jammer power over noise power, per sample
    length: int = None  # defaults to the capture plus 10 PRIs
    depth_db: float = 60.0
    stop_bands: tuple = ((-4e6, -2e6), (4e6, 5e6), (8e6, 9e6))
    seed: int = 1


@dataclass
class ScenarioConfig:
    """Full simulation setup; all power levels are relative to unit noise power."""

    sample_rate: float = 20e6
    comm: CommConfig = field(default_factory=CommConfig)
    radar: RadarConfig = field(default_factory=RadarConfig)
    jammer: JammerConfig = field(default_factory=JammerConfig)
    noise_power: float = 1.0
    trials: int = 50
    seed: int = 0

    def __post_init__(self):
        fs = self.sample_rate
        check_positive_int(self.trials, "trials")
        for name, lo, hi in [
            ("comm", self.comm.offset - self.comm.bandwidth / 2, self.comm.offset + self.comm.bandwidth / 2),
            ("radar", self.radar.offset - self.radar.bandwidth / 2, self.radar.offset + self.radar.bandwidth / 2),
        ]:
            if lo < -fs / 2 or hi > fs / 2:
                raise ValueError(f"{name} band [{lo}, {hi}] Hz lies outside [-fs/2, fs/2]")
        for t in self.jammer.types:
            if t not in JAMMER_TYPES:
                raise ValueError(f"unknown jammer type {t!r}")

    @property
    def pri_samples(self):
        return int(round(self.radar.pri * self.sample_rate))

    @property
    def capture_length(self):
        return max(self.radar.pulses) * self.pri_samples

    @property
    def jammer_length(self):
        return self.jammer.length or self.capture_length + 10 * self.pri_samples

    @property
    def dqpsk(self):
        return DqpskParams(
            self.comm.symbol_rate, self.comm.rolloff, self.sample_rate, self.comm.offset, self.comm.span, self.comm.bandwidth
        )

    def stop_bands(self):
        out = []
        for lo, hi in self.jammer.stop_bands:
            out += bands_from_hz(lo, hi, self.sample_rate, self.jammer.depth_db)
        return out

    def comm_protected(self):
        lo = self.comm.offset - self.comm.bandwidth / 2
        hi = self.comm.offset + self.comm.bandwidth / 2
        return any(b_lo <= lo and hi <= b_hi for b_lo, b_hi in self.jammer.stop_bands)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        sub = {"comm": CommConfig, "radar": RadarConfig, "jammer": JammerConfig}
        kwargs = {}
        for key, value in data.items():
            if key in sub:
                allowed = {f.name for f in fields(sub[key])}
                unknown = set(value) - allowed
                if unknown:
                    raise ValueError(f"unknown {key} keys: {sorted(unknown)}")
                value = {k: tuple(map(tuple, v)) if k == "stop_bands" else (tuple(v) if isinstance(v, list) else v) for k, v in value.items()}
                kwargs[key] = sub[key](**value)
            else:
                kwargs[key] = value
        allowed = {f.name for f in fields(cls)}
        unknown = set(kwargs) - allowed
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**kwargs)


@dataclass
class CoexistenceReport:
    """Averages over snapshots, keyed by jammer type."""

    error_rate_pct: dict
    sinr_db: dict  # jammer type -> {M: mean SINR dB}
    sync_failures: dict
    failed_snapshots: dict
    trials: int
    scatter: dict = field(default_factory=dict)  # jammer type -> (n, 2) array, first snapshot
    psd: dict = field(default_factory=dict)  # jammer type -> PsdEstimate, first snapshot
    per_trial_errors: dict = field(default_factory=dict)

    def table_rows(self):
        """Rows shaped like the paper's summary table: metric, then one value per jammer."""
        types = list(self.error_rate_pct)
        rows = [["Average Error Rate (%)"] + [self.error_rate_pct[t] for t in types]]
        pulses = sorted(next(iter(self.sinr_db.values())))
        for m in pulses:
            rows.append([f"Radar SINR ({m} pulse{'s' if m > 1 else ''}) dB"] + [self.sinr_db[t][m] for t in types])
        return types, rows


def build_jammers(cfg, progress=None):
    """Synthesize the unscaled jammer waveforms named in ``cfg.jammer.types``."""
    c0 = generate_reference(cfg.jammer_length, cfg.jammer.seed)
    bands = cfg.stop_bands()
    out = {}
    for t in cfg.jammer.types:
        if t == "none":
            continue
        if t == "reference":
            out[t] = c0
        elif t == "proj":
            out[t] = project_notch(c0, bands)
        else:
            block = int(t.split("-")[1])
            out[t], _ = design_blockwise(c0, bands, block, block // 2)
        if progress:
            progress(t)
    return out


def _unit_noise(rng, n, power):
    return np.sqrt(power / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _snapshot(cfg, jammers, gain, replica, seed, keep_extras):
    rng = np.random.default_rng(seed)
    n = cfg.capture_length
    pri = cfg.pri_samples
    fs = cfg.sample_rate
    noise = _unit_noise(rng, n, cfg.noise_power)

    radar = np.zeros(n, dtype=np.complex128)
    amp = math.sqrt(cfg.noise_power * 10 ** (cfg.radar.snr_db / 10))
    delay = int(round(cfg.radar.delay * fs))
    for m in range(max(cfg.radar.pulses)):
        s = m * pri + delay
        radar[s : s + replica.size] += amp * replica

    params = cfg.dqpsk
    bits = rng.integers(0, 2, cfg.comm.n_bits)
    burst = dqpsk_modulate(bits, params)
    burst *= math.sqrt(cfg.noise_power * 10 ** (cfg.comm.snr_db / 10))
    comm_start = int(rng.integers(params.sps, n - burst.size - params.sps))
    comm = np.zeros(n, dtype=np.complex128)
    comm[comm_start : comm_start + burst.size] = burst

    # the radar return is filtered on its own; interference is measured separately
    y_r = matched_filter_integrate(radar, replica, pri, cfg.radar.pulses)
    results = {}
    for jtype in cfg.jammer.types:
        if jtype == "none":
            jam = np.zeros(n, dtype=np.complex128)
        else:
            # contiguous slice: wrapping would splice two unrelated ends and
            # splatter energy into the notches
            wave = jammers[jtype]
            if wave.size < n:
                raise ValueError(f"jammer {jtype!r} has {wave.size} samples, capture needs {n}")
            shift = int(rng.integers(wave.size - n + 1))
            jam = gain * wave[shift : shift + n]
        jam_noise = jam + noise
        rx = comm + radar + jam_noise
        demod = dqpsk_demodulate(rx, cfg.comm.n_bits, params, comm_start)
        if demod.sync_ok:
            err = 100.0 * float(np.mean(demod.bits != bits))
        else:
            err = 50.0
        y_j = matched_filter_integrate(jam_noise, replica, pri, cfg.radar.pulses)
        sinr = {m: estimate_sinr(y_r[m], y_j[m]) for m in cfg.radar.pulses}
        extra = {}
        if keep_extras:
            extra = {"scatter": demod.scatter, "rx": rx}
        results[jtype] = (err, demod.sync_ok, sinr, extra)
    return results


def run_scenario(cfg=None, jammers=None, threads=1, progress=None):
    """Simulate every jammer type over ``cfg.trials`` snapshots.

    Parameters
    ----------
    cfg : ScenarioConfig, optional
    jammers : dict, optional
        Pre-built unscaled jammer waveforms (see :func:`build_jammers`).
    threads : int
        Snapshots run in a thread pool when > 1; results do not depend on it.
    progress : callable, optional
        Called with a short status string as work completes.

    Returns
    -------
    CoexistenceReport
    """
    cfg = cfg or ScenarioConfig()
    if "none" not in cfg.jammer.types and not cfg.comm_protected():
        logger.warning("communication band is not inside any declared stop band")
    jammers = jammers if jammers is not None else build_jammers(cfg, progress)
    if "reference" in jammers:
        ref_power = float(np.mean(np.abs(jammers["reference"]) ** 2))
    else:
        ref_power = float(np.mean(np.abs(generate_reference(cfg.jammer_length, cfg.jammer.seed)) ** 2))
    # one transmit gain for all jammers, set by the reference waveform
    gain = math.sqrt(cfg.noise_power * 10 ** (cfg.jammer.jnr_db / 10) / ref_power)
    replica = chirp_pulse(cfg.radar.bandwidth, cfg.radar.pulse_width, cfg.sample_rate, cfg.radar.offset)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)

    def work(i):
        try:
            return i, _snapshot(cfg, jammers, gain, replica, seeds[i], i == 0), None
        except Exception as exc:  # recorded per snapshot, not fatal
            logger.warning("snapshot %d failed: %s", i, exc)
            return i, None, exc

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            outcomes = list(pool.map(work, range(cfg.trials)))
    else:
        outcomes = [work(i) for i in range(cfg.trials)]
    outcomes.sort(key=lambda o: o[0])

    types = list(cfg.jammer.types)
    errors = {t: [] for t in types}
    sinrs = {t: {m: [] for m in cfg.radar.pulses} for t in types}
    sync_fail = {t: 0 for t in types}
    failed = {t: 0 for t in types}
    scatter, psd = {}, {}
    ref_level = None
    for i, res, exc in outcomes:
        if res is None:
            for t in types:
                failed[t] += 1
            continue
        for t in types:
            err, ok, sinr, extra = res[t]
            errors[t].append(err)
            sync_fail[t] += int(not ok)
            for m, v in sinr.items():
                sinrs[t][m].append(v)
            if extra:
                scatter[t] = extra["scatter"]
                if ref_level is None:
                    ref_rx = res["reference"][3]["rx"] if "reference" in res else extra["rx"]
                    ref_level = mean_psd_level(ref_rx)
                psd[t] = welch_psd(extra["rx"], normalize=ref_level, sample_rate=cfg.sample_rate)
        if progress:
            progress(f"snapshot {i + 1}/{cfg.trials}")
    return CoexistenceReport(
        error_rate_pct={t: float(np.mean(errors[t])) if errors[t] else math.nan for t in types},
        sinr_db={t: {m: float(np.mean(v)) if v else math.nan for m, v in sinrs[t].items()} for t in types},
        sync_failures=sync_fail,
        failed_snapshots=failed,
        trials=cfg.trials,
        scatter=scatter,
        psd=psd,
        per_trial_errors=errors,
    )
