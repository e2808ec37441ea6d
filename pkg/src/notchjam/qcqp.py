"""Block-wise QCQP synthesis of spectrally notched waveforms.

Each block problem minimises ``||c - c0||^2`` subject to an energy cap and
one interference-energy cap per stop band. Because the objective is a
squared distance, the solution is the Euclidean projection of the reference
block onto the intersection of those convex sets, which Dykstra's
alternating projections compute exactly.

Long waveforms are built from partially overlapping windows: window ``l``
holds the last ``overlap`` samples of window ``l - 1`` fixed and optimises
the next ``block_len - overlap`` samples, with the constraints evaluated on
the whole window.
"""

from dataclasses import dataclass, field
import logging
import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_sequence, check_waveforms
from .spectral import BandOperator, StopBand

__all__ = [
    "SolverConfig",
    "InfeasibleError",
    "BandConstraint",
    "WindowDiagnostics",
    "WindowSpec",
    "project_ball",
    "project_band_constraint",
    "solve_block",
    "plan_windows",
    "iter_blocks",
    "design_blockwise",
    "QcqpNotcher",
]

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest are treated as zero.
_RANK_RTOL = 1e-10


class InfeasibleError(ValueError):
    """A window's fixed prefix alone violates a band cap."""

    def __init__(self, message, window=None, band=None):
        super().__init__(message)
        self.window = window
        self.band = band


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules for the alternating-projection solver.

    ``feasibility_tol`` is relative to each cap; ``optimality_tol`` bounds
    the max-norm change of the iterate over one sweep, relative to the
    largest reference sample.
    """

    feasibility_tol: float = 1e-9
    optimality_tol: float = 1e-8
    max_iters: int = 5000

    def __post_init__(self):
        if not self.feasibility_tol > 0 or not self.optimality_tol > 0:
            raise ValueError("tolerances must be positive")
        check_positive_int(self.max_iters, "max_iters")


def project_ball(c, radius2):
    """Euclidean projection of ``c`` onto ``{x : ||x||^2 <= radius2}``."""
    c = np.asarray(c, dtype=np.complex128)
    if radius2 < 0:
        raise ValueError("radius2 must be non-negative")
    norm2 = float(np.vdot(c, c).real)
    if norm2 <= radius2:
        return c.copy()
    if radius2 == 0:
        return np.zeros_like(c)
    return c * math.sqrt(radius2 / norm2)


class BandConstraint:
    """Cap ``||Q^H [prefix; x]||^2 / width <= e_max`` on the free samples ``x``.

    ``Q`` holds the in-band steering vectors of a window of ``op.n`` samples,
    of which the first ``n_fixed`` are frozen. With ``B`` the free-sample
    rows of ``Q^H`` and ``a`` the prefix contribution, the projection of
    ``x`` solves ``y = (I + mu B^H B)^{-1} (x - mu B^H a)``. In the SVD
    coordinates of ``B`` the constraint value is

        sum_i |alpha_i + s_i z_i|^2 / (1 + mu s_i^2)^2 + const,

    which is monotone in the multiplier ``mu`` and is solved by bisection.
    The SVD depends only on the window geometry and is computed once.
    """

    def __init__(self, op, e_max, n_fixed=0):
        if e_max < 0:
            raise ValueError("e_max must be non-negative")
        self.op = op
        self.e_max = float(e_max)
        self.n_fixed = int(n_fixed)
        if not 0 <= self.n_fixed < op.n:
            raise ValueError("n_fixed must leave at least one free sample")
        n = op.n
        if self.n_fixed == 0:
            # Q^H has orthonormal rows (trivial SVD) and is applied with FFTs
            self._u = None
            self._s = np.ones(op.n_cols)
            self._vh = None
            self._idx = op.indices
            self._a_fixed = None
        else:
            b = op.columns(np.arange(self.n_fixed, n)).conj().T
            u, s, vh = np.linalg.svd(b, full_matrices=False)
            keep = s > _RANK_RTOL * max(s[0], 1e-300)
            self._u = u[:, keep]
            self._s = s[keep]
            self._vh = vh[keep]
            self._vh_adj = np.ascontiguousarray(self._vh.conj().T)
            self._a_fixed = op.columns(np.arange(self.n_fixed)).conj().T
        self._alpha = np.zeros(self._s.size, dtype=np.complex128)
        self._const = 0.0

    @property
    def cap(self):
        """The cap in raw ``||Q^H c||^2`` units."""
        return self.e_max * self.op.width

    @property
    def min_value(self):
        """Smallest band energy reachable with the bound prefix."""
        return self._const / self.op.width

    def bind(self, prefix=None):
        """Attach the fixed prefix for the current window."""
        if self.n_fixed == 0:
            if prefix is not None and len(prefix):
                raise ValueError("constraint has no fixed samples")
            return self
        prefix = np.asarray(prefix, dtype=np.complex128)
        if prefix.size != self.n_fixed:
            raise ValueError(f"prefix length {prefix.size} != {self.n_fixed}")
        a = self._a_fixed @ prefix
        self._alpha = self._u.conj().T @ a
        self._const = max(float(np.vdot(a, a).real - np.vdot(self._alpha, self._alpha).real), 0.0)
        return self

    def _fwd(self, x):
        if self._vh is None:
            return np.fft.fft(x, norm="ortho")[self._idx]
        return self._vh @ x

    def _adj(self, z):
        if self._vh is None:
            full = np.zeros(self.op.n, dtype=np.complex128)
            full[self._idx] = z
            return np.fft.ifft(full, norm="ortho")
        return self._vh_adj @ z

    def raw_value(self, x):
        z = self._fwd(x)
        beta = self._alpha + self._s * z
        return float(np.sum(np.abs(beta) ** 2) + self._const)

    def value(self, x):
        """Band energy of the full window ``[prefix; x]``."""
        return self.raw_value(x) / self.op.width

    def check_feasible(self, rtol, energy_cap=1.0):
        """Raise if the bound prefix alone exceeds the cap.

        A zero cap is judged against ``rtol * energy_cap`` so round-off in
        the prefix contribution is not mistaken for infeasibility.
        """
        allowed = self.cap + rtol * (self.cap if self.cap > 0 else energy_cap * self.op.width)
        if self._const > allowed:
            raise InfeasibleError(
                f"fixed prefix leaves band energy >= {self.min_value:.3e}, "
                f"above the cap {self.e_max:.3e}",
            )

    def project(self, x):
        y = self._project_once(x)
        # Deep notches shrink in-band coefficients by orders of magnitude and
        # the round-off of the transforms can leave the result a hair above
        # the cap; one more pass from the nearby point removes it.
        if self.raw_value(y) > self.cap:
            y = self._project_once(y)
        return y

    def _project_once(self, x):
        z = self._fwd(x)
        beta = self._alpha + self._s * z
        weight = np.abs(beta) ** 2
        tau = self.cap - self._const
        if np.sum(weight) <= tau:
            return x.copy()
        s2 = self._s**2
        if tau <= 0:
            # exact removal, the mu -> infinity limit
            z_new = -self._alpha / self._s
        else:
            mu = _solve_secular(weight, s2, tau)
            z_new = (z - mu * self._s * self._alpha) / (1 + mu * s2)
        return x + self._adj(z_new - z)


def _solve_secular(weight, s2, tau):
    """Smallest ``mu >= 0`` with ``g(mu) = sum(weight / (1 + mu s2)^2) <= tau``.

    Newton's method on ``h(mu) = g(mu)^(-1/2) - tau^(-1/2)``, which is
    concave and increasing (linear when all ``s2`` are equal), so the
    iterates climb to the root from the infeasible side without overshoot.
    The result is then nudged up until ``g(mu) <= tau`` holds in floating
    point.
    """
    target = 1.0 / math.sqrt(tau)
    mu = 0.0
    for _ in range(100):
        d = 1.0 + mu * s2
        q = weight / d**2
        g = float(np.sum(q))
        if g <= tau:
            break
        dh = g**-1.5 * float(np.sum(q * s2 / d))
        step = (target - g**-0.5) / dh
        mu += step
        if step <= 1e-15 * mu:
            break
    bump = 4 * np.finfo(float).eps
    while float(np.sum(weight / (1.0 + mu * s2) ** 2)) > tau:
        mu = mu * (1 + bump) + 1e-300
        bump *= 2
    return mu


def project_band_constraint(c, op, e_max, fixed_prefix=None):
    """Euclidean projection of the free segment ``c`` onto one band cap.

    ``op`` acts on the window ``[fixed_prefix; c]``. Without a prefix this
    scales the in-band component of ``c`` so its energy meets the cap.
    """
    c = check_sequence(c)
    n_fixed = 0 if fixed_prefix is None else len(fixed_prefix)
    if n_fixed + c.size != op.n:
        raise ValueError(f"window length {n_fixed + c.size} != operator length {op.n}")
    con = BandConstraint(op, e_max, n_fixed).bind(fixed_prefix)
    window_energy = float(np.vdot(c, c).real) + (0.0 if fixed_prefix is None else float(np.sum(np.abs(fixed_prefix) ** 2)))
    con.check_feasible(1e-12, window_energy)
    return con.project(c)


@dataclass
class WindowDiagnostics:
    window: int
    start: int
    n_free: int
    iterations: int
    converged: bool
    objective: float
    energy: float
    energy_cap: float
    band_energy: list = field(default_factory=list)
    band_cap: list = field(default_factory=list)

    @property
    def band_slack(self):
        """Relative slack per band, ``(cap - value) / cap``.

        For a zero cap the value is divided by the window's energy cap
        instead (the flat-reference level), giving ``-value`` in flat units.
        """
        out = []
        for e, cap in zip(self.band_energy, self.band_cap):
            out.append((cap - e) / cap if cap > 0 else -e / self.energy_cap)
        return out


def solve_block(
    c0_block,
    constraints,
    radius2,
    fixed_prefix=None,
    config=None,
):
    """Project a reference block onto ball and band-cap intersection.

    Parameters
    ----------
    c0_block : array_like
        Reference samples for the free positions.
    constraints : sequence of BandConstraint
        Band caps defined on the window ``[fixed_prefix; block]``; they are
        bound to ``fixed_prefix`` here.
    radius2 : float
        Energy cap for the whole window, prefix included.
    fixed_prefix : array_like, optional
    config : SolverConfig, optional

    Returns
    -------
    block : ndarray
    info : dict
        ``iterations``, ``converged`` and the final constraint values.

    Raises
    ------
    InfeasibleError
        If the prefix alone breaks a band cap or the energy cap.
    """
    cfg = config or SolverConfig()
    x0 = check_sequence(c0_block, "c0_block")
    prefix = np.zeros(0, dtype=np.complex128) if fixed_prefix is None else np.asarray(fixed_prefix, dtype=np.complex128)
    free_radius2 = radius2 - float(np.vdot(prefix, prefix).real)
    if free_radius2 < -cfg.feasibility_tol * radius2:
        raise InfeasibleError("fixed prefix exceeds the window energy cap")
    free_radius2 = max(free_radius2, 0.0)

    active = []
    for k, con in enumerate(constraints):
        con.bind(prefix if prefix.size else None)
        if math.isinf(con.e_max):
            continue
        try:
            con.check_feasible(cfg.feasibility_tol, radius2)
        except InfeasibleError as err:
            err.band = k
            raise
        active.append(con)

    def feasible(x, rtol):
        if float(np.vdot(x, x).real) > free_radius2 * (1 + rtol):
            return False
        # zero caps are judged against the window energy cap instead
        return all(
            con.raw_value(x) <= con.cap + rtol * (con.cap if con.cap > 0 else radius2 * con.op.width)
            for con in active
        )

    projections = [lambda v: project_ball(v, free_radius2)] + [con.project for con in active]
    scale = max(float(np.max(np.abs(x0))), 1e-300)
    x = x0.copy()
    converged = feasible(x, 0.0)
    iterations = 0
    if not converged:
        increments = [np.zeros_like(x) for _ in projections]
        change = math.inf
        for iterations in range(1, cfg.max_iters + 1):
            previous = x
            for j, proj in enumerate(projections):
                z = x + increments[j]
                x = proj(z)
                increments[j] = z - x
            change = float(np.max(np.abs(x - previous)))
            # aim an order of magnitude inside the tolerance so callers see margin
            if change <= cfg.optimality_tol * scale and feasible(x, 0.1 * cfg.feasibility_tol):
                converged = True
                break
        else:
            converged = change <= cfg.optimality_tol * scale and feasible(x, cfg.feasibility_tol)
        if not converged:
            warnings.warn(
                f"alternating projections stopped after {cfg.max_iters} sweeps",
                ConvergenceWarning,
                stacklevel=2,
            )
    info = {
        "iterations": iterations,
        "converged": converged,
        "objective": float(np.sum(np.abs(x - x0) ** 2)),
        "energy": float(np.vdot(x, x).real + np.vdot(prefix, prefix).real),
        "band_energy": [con.value(x) for con in constraints],
    }
    return x, info


@dataclass(frozen=True)
class WindowSpec:
    index: int
    start: int  # first free sample in the full waveform
    n_free: int
    n_fixed: int

    @property
    def length(self):
        return self.n_free + self.n_fixed


def plan_windows(n_total, block_len, overlap=0):
    """Window layout: one full block, then blocks sharing ``overlap`` samples.

    The number of windows is ``1 + ceil((N - block_len) / (block_len - overlap))``;
    the last one is shortened when the division is not exact.
    """
    n_total = check_positive_int(n_total, "n_total")
    block_len = check_positive_int(block_len, "block_len")
    if block_len > n_total:
        raise ValueError(f"block_len {block_len} exceeds waveform length {n_total}")
    if isinstance(overlap, bool) or not isinstance(overlap, (int, np.integer)):
        raise TypeError("overlap must be an integer")
    if not 0 <= overlap <= block_len // 2:
        raise ValueError(f"overlap must lie in [0, block_len/2], got {overlap}")
    step = block_len - overlap
    windows = [WindowSpec(0, 0, block_len, 0)]
    start = block_len
    while start < n_total:
        n_free = min(step, n_total - start)
        windows.append(WindowSpec(len(windows), start, n_free, int(overlap)))
        start += n_free
    return windows


def _build_constraints(bands, length, n_fixed, n_total):
    scale = length / n_total
    cons = []
    for band in bands:
        op = BandOperator(band, length)
        cons.append(BandConstraint(op, band.max_energy * scale, n_fixed))
    return cons


class _ConstraintCache:
    def __init__(self, bands, n_total):
        self.bands = list(bands)
        self.n_total = n_total
        self._cache = {}

    def get(self, window):
        key = (window.length, window.n_fixed)
        if key not in self._cache:
            self._cache[key] = _build_constraints(self.bands, window.length, window.n_fixed, self.n_total)
        return self._cache[key]


def iter_blocks(c0, bands, block_len=None, overlap=0, config=None, *, _cache=None):
    """Design window after window, yielding ``(start, samples, diagnostics)``.

    ``samples`` are the newly optimised samples beginning at ``start``, so a
    consumer can forward them as soon as they are ready.
    """
    c0 = check_sequence(c0, "c0")
    n = c0.size
    block_len = n if block_len is None else block_len
    cfg = config or SolverConfig()
    bands = list(bands)
    windows = plan_windows(n, block_len, overlap)
    cache = _cache or _ConstraintCache(bands, n)
    out = np.zeros(n, dtype=np.complex128)
    for win in windows:
        cons = cache.get(win)
        prefix = out[win.start - win.n_fixed : win.start]
        ref = c0[win.start : win.start + win.n_free]
        try:
            block, info = solve_block(ref, cons, win.length / n, prefix, cfg)
        except InfeasibleError as err:
            err.window = win.index
            raise InfeasibleError(f"window {win.index}: {err}", win.index, err.band) from err
        out[win.start : win.start + win.n_free] = block
        diag = WindowDiagnostics(
            window=win.index,
            start=win.start,
            n_free=win.n_free,
            iterations=info["iterations"],
            converged=info["converged"],
            objective=info["objective"],
            energy=info["energy"],
            energy_cap=win.length / n,
            band_energy=info["band_energy"],
            band_cap=[con.e_max for con in cons],
        )
        logger.debug("window %d: %d sweeps, objective %.3e", win.index, diag.iterations, diag.objective)
        yield win.start, block, diag


def design_blockwise(c0, bands, block_len=None, overlap=0, config=None):
    """Synthesize a notched waveform from reference ``c0``.

    Parameters
    ----------
    c0 : array_like
        Reference waveform of length N, normally unit energy.
    bands : sequence of StopBand
        Stop bands with their whole-waveform energy caps.
    block_len : int, optional
        Window length; defaults to N (a single window).
    overlap : int
        Samples shared by consecutive windows, at most ``block_len // 2``.
    config : SolverConfig, optional

    Returns
    -------
    c : ndarray
        Designed waveform of length N.
    diagnostics : list of WindowDiagnostics
    """
    c0 = check_sequence(c0, "c0")
    out = np.empty_like(c0)
    diagnostics = []
    for start, block, diag in iter_blocks(c0, bands, block_len, overlap, config):
        out[start : start + block.size] = block
        diagnostics.append(diag)
    return out, diagnostics


class QcqpNotcher(TransformerMixin, BaseEstimator):
    """Transformer producing notched waveforms closest to their inputs.

    Each input row is treated as a reference waveform and replaced by the
    block-wise QCQP design. ``fit`` only fixes the length and precomputes the
    per-window band operators, so one fitted instance can shape many
    references of the same length.

    Parameters
    ----------
    bands : sequence of StopBand
    block_len : int or None
        Window length; ``None`` uses the whole waveform.
    overlap : int
    feasibility_tol, optimality_tol : float
    max_iters : int

    Attributes
    ----------
    n_samples_ : int
    windows_ : list of WindowSpec
    diagnostics_ : list of list of WindowDiagnostics
        Per-window diagnostics of the last ``transform`` call, one list per row.
    """

    def __init__(
        self,
        bands=(),
        block_len=None,
        overlap=0,
        feasibility_tol=1e-9,
        optimality_tol=1e-8,
        max_iters=5000,
    ):
        self.bands = bands
        self.block_len = block_len
        self.overlap = overlap
        self.feasibility_tol = feasibility_tol
        self.optimality_tol = optimality_tol
        self.max_iters = max_iters

    def fit(self, X, y=None):
        X, _ = check_waveforms(X)
        bands = list(self.bands)
        if not all(isinstance(b, StopBand) for b in bands):
            raise TypeError("bands must be StopBand instances")
        n = X.shape[1]
        self.config_ = SolverConfig(self.feasibility_tol, self.optimality_tol, self.max_iters)
        self.n_samples_ = n
        self.windows_ = plan_windows(n, n if self.block_len is None else self.block_len, self.overlap)
        self._cache = _ConstraintCache(bands, n)
        for win in self.windows_[:2] + self.windows_[-1:]:
            self._cache.get(win)
        return self

    def transform(self, X):
        check_is_fitted(self, "windows_")
        X, squeeze = check_waveforms(X)
        if X.shape[1] != self.n_samples_:
            raise ValueError(f"fitted for length {self.n_samples_}, got {X.shape[1]}")
        block_len = self.n_samples_ if self.block_len is None else self.block_len
        out = np.empty_like(X)
        self.diagnostics_ = []
        for r, row in enumerate(X):
            diags = []
            for start, block, diag in iter_blocks(
                row, self.bands, block_len, self.overlap, self.config_, _cache=self._cache
            ):
                out[r, start : start + block.size] = block
                diags.append(diag)
            self.diagnostics_.append(diags)
        return out[0] if squeeze else out
