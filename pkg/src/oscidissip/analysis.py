"""Post-processing: coarse graining, regime labels, coupling sweeps, frequency extraction."""

from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .bogoliubov import diagonalize, dynamical_spectrum, matter_fractions
from .hamiltonian import build
from .model import SystemConfig

log = logging.getLogger(__name__)

THETA_USC = 1e-1
THETA_ADC = 1e0
MIN_DFT_SAMPLES = 64


class Regime(str, enum.Enum):
    WC = "WC"
    USC = "USC"
    AdC = "AdC"


def classify_regime(theta: float) -> Regime:
    """WC below 0.1, USC on [0.1, 1], AdC above 1."""
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if theta < THETA_USC:
        return Regime.WC
    if theta <= THETA_ADC:
        return Regime.USC
    return Regime.AdC


# --------------------------------------------------------------------------
# Coarse graining
# --------------------------------------------------------------------------

def coarse_grain(series, dt: float, window: float) -> np.ndarray:
    """Centred rolling mean of width ``window`` on a uniform grid of spacing ``dt``.

    The mean is the exact integral of the piecewise-linear interpolant over
    [t - w/2, t + w/2], clipped to the sampled range near the edges (so the
    window shrinks and becomes one-sided there). Works along the last axis.
    """
    y = np.asarray(series, dtype=float)
    if window < dt:
        raise ValueError(f"coarse-grain window {window} is shorter than the sample spacing {dt}")
    n = y.shape[-1]
    if n < 2:
        return y.copy()
    t = np.arange(n) * dt
    lo = np.clip(t - window / 2, 0.0, t[-1])
    hi = np.clip(t + window / 2, 0.0, t[-1])
    cum = cumulative_trapezoid(y, dx=dt, axis=-1, initial=0.0)
    flat = cum.reshape(-1, n)
    out = np.empty_like(flat)
    for r, row in enumerate(flat):
        out[r] = (np.interp(hi, t, row) - np.interp(lo, t, row)) / (hi - lo)
    return out.reshape(y.shape)


# --------------------------------------------------------------------------
# Dominant frequency
# --------------------------------------------------------------------------

def dominant_frequency(series, dt: float) -> float:
    """Angular frequency of the largest DFT peak, refined by a parabola through the peak bin.

    The mean is removed and a Hann window applied before a zero-padded FFT.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < MIN_DFT_SAMPLES:
        raise ValueError(f"dominant_frequency needs a 1-D series of at least {MIN_DFT_SAMPLES} samples")
    y = y - y.mean()
    if not np.any(np.abs(y) > 1e-14 * max(1.0, np.abs(series).max())):
        raise ValueError("series has no oscillating component")
    nfft = 8 * (1 << int(np.ceil(np.log2(y.size))))
    spec = np.abs(np.fft.rfft(y * np.hanning(y.size), nfft))
    k = int(np.argmax(spec[1:])) + 1
    shift = 0.0
    if 0 < k < spec.size - 1:
        a, b, c = np.log(spec[k - 1:k + 2] + 1e-300)
        denom = a - 2 * b + c
        if denom != 0:
            shift = 0.5 * (a - c) / denom
    return float(2 * np.pi * (k + shift) / (nfft * dt))


def envelope(series) -> np.ndarray:
    """Magnitude of the analytic signal (mean removed)."""
    from scipy.signal import hilbert

    y = np.asarray(series, dtype=float)
    return np.abs(hilbert(y - y.mean()))


def fit_decay_rate(times, values) -> float:
    """Least-squares slope of -log(values); the exponential decay rate."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("decay fit needs strictly positive values")
    slope = np.polyfit(t, np.log(v), 1)[0]
    return float(-slope)


# --------------------------------------------------------------------------
# Spectrum sweeps
# --------------------------------------------------------------------------

@dataclass
class SweepRow:
    theta: float
    stable: bool
    frequencies: np.ndarray          # lowest k normal-mode frequencies (real parts if unstable)
    matter: np.ndarray               # chi for the same modes (nan if unstable)
    vacuum_occupations: np.ndarray   # bare-vacuum polariton occupations (nan if unstable)
    min_eigenvalue: float
    max_imag: float = 0.0

    @property
    def beat(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0]) if self.frequencies.size > 1 else float("nan")


@dataclass
class SweepTable:
    k: int
    rows: list = field(default_factory=list)

    def header(self) -> list[str]:
        cols = ["theta", "stable"]
        cols += [f"lambda_{i + 1}" for i in range(self.k)]
        cols += [f"chi_{i + 1}" for i in range(self.k)]
        cols += [f"occ_{i + 1}" for i in range(self.k)]
        cols += ["beat_lambda2_minus_lambda1", "max_imag", "min_eigenvalue"]
        return cols

    def as_array(self) -> np.ndarray:
        out = []
        for r in self.rows:
            out.append(
                [r.theta, float(r.stable), *r.frequencies, *r.matter, *r.vacuum_occupations,
                 r.beat, r.max_imag, r.min_eigenvalue]
            )
        return np.array(out, dtype=float)


def _sweep_point(args) -> SweepRow:
    config, theta, gauge, k = args
    cfg = config.with_coupling("theta", float(theta))
    ham = build(cfg, gauge)
    decomp = diagonalize(ham)
    if not decomp.stable:
        spec = dynamical_spectrum(ham)
        pos = np.sort(spec.frequencies[spec.frequencies.real > 0].real)[:k]
        pos = np.pad(pos, (0, k - pos.size), constant_values=np.nan)
        nan = np.full(k, np.nan)
        return SweepRow(theta, False, pos, nan, nan, decomp.min_eigenvalue, spec.max_imag)
    from .dynamics import vacuum_correlations

    n = decomp.n_total
    kk = min(k, n)
    chi = matter_fractions(decomp)[:kk]
    t = decomp.T
    occ = np.diag(t.conj() @ vacuum_correlations(n) @ t.T)[:kk].real

    def pad(v):
        return np.pad(np.asarray(v, dtype=float), (0, k - kk), constant_values=np.nan)

    return SweepRow(theta, True, pad(decomp.frequencies[:kk]), pad(chi), pad(occ), decomp.min_eigenvalue)


def default_jobs() -> int:
    env = os.environ.get("OSCIDISSIP_JOBS")
    if env:
        return max(1, int(env))
    return 1


def spectrum_vs_coupling(config: SystemConfig, thetas, k: int = 4, gauge="coulomb", jobs: int | None = None) -> SweepTable:
    """One diagonalization per theta; rows sorted by theta."""
    grid = sorted(float(t) for t in thetas)
    if any(t <= 0 for t in grid):
        raise ValueError("theta grid must be strictly positive")
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    tasks = [(config, t, gauge, k) for t in grid]
    if jobs == 1 or len(tasks) == 1:
        rows = [_sweep_point(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    for r in rows:
        if not r.stable:
            log.warning("theta=%g: %s gauge unstable (min eigenvalue %.3g)", r.theta, gauge, r.min_eigenvalue)
    return SweepTable(k=k, rows=rows)
