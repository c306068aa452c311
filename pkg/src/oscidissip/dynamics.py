"""Second-moment dynamics through polariton phase rotation.

The state is the matrix ``C_pq = <eta_p^dag eta_q>`` of all normally and
anomalously ordered second moments.  With ``zeta = T eta`` and ``A = T^-1``

    C_zeta = conj(T) C_eta T^T,        C_eta(t) = conj(A) Phi^* C_zeta Phi A^T,

where ``Phi = diag(exp(-i lambda~ t))`` and ``lambda~ = (lambda, -lambda)``.
For a linear functional ``F = sum_p w_p eta_p`` the expectation
``<F^dag F>(t)`` needs only the row ``w A`` so it costs O(N^2) per sample;
:func:`functional_series` uses this for populations and field profiles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bogoliubov import BogoliubovDecomposition
from .hamiltonian import QuadraticHamiltonian
from .model import Cavity, CavityArray, SystemConfig, mode_amplitudes, reservoir_spectrum

log = logging.getLogger(__name__)

NEGATIVE_DUST = 1e-10
BARE, POLARITON = "bare", "polariton"


@dataclass(frozen=True)
class CorrelationState:
    frame: str
    C: np.ndarray
    time: float
    n_dipoles: int

    @property
    def n_total(self) -> int:
        return self.C.shape[0] // 2

    def commutator_error(self) -> float:
        """max_p |<b_p b_p^dag> - <b_p^dag b_p> - 1|."""
        n = self.n_total
        d = np.diag(self.C)
        return float(np.max(np.abs(d[n:] - d[:n] - 1)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.C + self.C.conj().T))[0])


# --------------------------------------------------------------------------
# Initial states
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FockProduct:
    occupations: tuple

    def __init__(self, occupations: Sequence[float]):
        occ = tuple(float(n) for n in np.atleast_1d(occupations))
        if any(n < 0 for n in occ):
            raise ValueError(f"Fock occupations must be non-negative, got {occ}")
        object.__setattr__(self, "occupations", occ)


@dataclass(frozen=True)
class CoherentProduct:
    amplitudes: tuple

    def __init__(self, amplitudes: Sequence[complex]):
        object.__setattr__(self, "amplitudes", tuple(complex(a) for a in np.atleast_1d(amplitudes)))


@dataclass(frozen=True)
class TwoModeBell:
    """(|10> + sign |01>)/sqrt(2) on the dipole pair ``pair``."""

    sign: int = 1
    pair: tuple = (0, 1)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"Bell sign must be +1 or -1, got {self.sign}")
        if len(self.pair) != 2 or self.pair[0] == self.pair[1]:
            raise ValueError(f"Bell state needs two distinct dipoles, got {self.pair}")


InitialStateSpec = FockProduct | CoherentProduct | TwoModeBell


def vacuum_correlations(n_total: int) -> np.ndarray:
    c = np.zeros((2 * n_total, 2 * n_total), dtype=complex)
    c[n_total:, n_total:] = np.eye(n_total)
    return c


def initial_correlations(spec: InitialStateSpec, config: SystemConfig) -> CorrelationState:
    """Bare-frame moments of the dipole state times the reservoir vacuum."""
    nd, n = config.n_dipoles, config.n_total
    c = vacuum_correlations(n)
    if isinstance(spec, FockProduct):
        if len(spec.occupations) != nd:
            raise ValueError(f"{len(spec.occupations)} Fock occupations for {nd} dipoles")
        for i, occ in enumerate(spec.occupations):
            c[i, i] = occ
            c[n + i, n + i] = occ + 1
    elif isinstance(spec, CoherentProduct):
        alpha = np.asarray(spec.amplitudes)
        if alpha.size != nd:
            raise ValueError(f"{alpha.size} coherent amplitudes for {nd} dipoles")
        idx = np.arange(nd)
        c[np.ix_(idx, idx)] = np.outer(alpha.conj(), alpha)
        c[np.ix_(n + idx, n + idx)] += np.outer(alpha, alpha.conj())
        c[np.ix_(idx, n + idx)] = np.outer(alpha.conj(), alpha.conj())
        c[np.ix_(n + idx, idx)] = np.outer(alpha, alpha)
    elif isinstance(spec, TwoModeBell):
        if nd < 2:
            raise ValueError("a two-mode Bell state needs at least two dipoles")
        i, j = spec.pair
        if max(i, j) >= nd or min(i, j) < 0:
            raise ValueError(f"Bell pair {spec.pair} out of range for {nd} dipoles")
        for p, q, val in ((i, i, 0.5), (j, j, 0.5), (i, j, 0.5 * spec.sign), (j, i, 0.5 * spec.sign)):
            c[p, q] = val
            c[n + q, n + p] += val
    else:
        raise TypeError(f"unknown initial state spec {spec!r}")
    return CorrelationState(BARE, c, 0.0, nd)


# --------------------------------------------------------------------------
# Frames and evolution
# --------------------------------------------------------------------------

def _check(corr: CorrelationState, decomp: BogoliubovDecomposition, frame: str) -> None:
    decomp.require_stable()
    if corr.frame != frame:
        raise ValueError(f"expected a {frame}-frame state, got {corr.frame}")
    if corr.C.shape != decomp.T.shape:
        raise ValueError(f"state of size {corr.C.shape} does not match decomposition {decomp.T.shape}")


def to_polariton_frame(corr: CorrelationState, decomp: BogoliubovDecomposition) -> CorrelationState:
    _check(corr, decomp, BARE)
    t = decomp.T
    return CorrelationState(POLARITON, t.conj() @ corr.C @ t.T, corr.time, corr.n_dipoles)


def to_bare_frame(corr: CorrelationState, decomp: BogoliubovDecomposition) -> CorrelationState:
    _check(corr, decomp, POLARITON)
    a = decomp.A
    return CorrelationState(BARE, a.conj() @ corr.C @ a.T, corr.time, corr.n_dipoles)


def phases(decomp: BogoliubovDecomposition, t) -> np.ndarray:
    """exp(-i lambda~ t); shape (2N,) for scalar t, (len(t), 2N) otherwise."""
    lam = decomp.signed_frequencies()
    return np.exp(-1j * np.multiply.outer(np.asarray(t, dtype=float), lam))


def evolve(corr_zeta: CorrelationState, decomp: BogoliubovDecomposition, t: float) -> CorrelationState:
    """Full bare-frame moment matrix at time ``t`` (O(N^3) per call)."""
    _check(corr_zeta, decomp, POLARITON)
    ph = phases(decomp, t)
    a_t = decomp.A * ph[None, :]
    c = a_t.conj() @ corr_zeta.C @ a_t.T
    return CorrelationState(BARE, c, float(t), corr_zeta.n_dipoles)


def functional_series(
    corr_zeta: CorrelationState,
    decomp: BogoliubovDecomposition,
    weights: np.ndarray,
    times: np.ndarray,
    chunk: int = 512,
) -> np.ndarray:
    """<F_k^dag F_k>(t) for functionals F_k = sum_p weights[k, p] eta_p.

    Returns an array of shape (len(weights), len(times)).
    """
    _check(corr_zeta, decomp, POLARITON)
    w = np.atleast_2d(np.asarray(weights, dtype=complex))
    rows = w @ decomp.A
    times = np.asarray(times, dtype=float)
    out = np.empty((rows.shape[0], times.size))
    c_t = corr_zeta.C.T
    for start in range(0, times.size, chunk):
        ph = phases(decomp, times[start:start + chunk])
        v = rows[:, None, :] * ph[None, :, :]
        z = v @ c_t
        out[:, start:start + chunk] = np.einsum("ktp,ktp->kt", v.conj(), z).real
    return out


def _clamp(values: np.ndarray, what: str) -> np.ndarray:
    low = float(np.min(values))
    if low < -NEGATIVE_DUST:
        raise ArithmeticError(f"{what} is negative ({low:.3g}); correlation matrix is unphysical")
    if low < 0:
        log.warning("clamping %s rounding dust %.2e to zero", what, low)
        values = np.maximum(values, 0.0)
    return values


def population_series(corr_zeta, decomp, times, dipoles: Sequence[int] | None = None) -> np.ndarray:
    """n_i(t) for the requested dipoles, shape (len(dipoles), len(times))."""
    nd = corr_zeta.n_dipoles
    idx = list(range(nd)) if dipoles is None else list(dipoles)
    w = np.zeros((len(idx), 2 * decomp.n_total))
    for r, i in enumerate(idx):
        if not 0 <= i < nd:
            raise IndexError(f"dipole index {i} out of range for {nd} dipoles")
        w[r, i] = 1.0
    return _clamp(functional_series(corr_zeta, decomp, w, times), "population")


# --------------------------------------------------------------------------
# Observables on a bare-frame state
# --------------------------------------------------------------------------

def _require_bare(corr: CorrelationState) -> None:
    if corr.frame != BARE:
        raise ValueError("observable needs a bare-frame state")


def dipole_population(corr: CorrelationState, i: int) -> float:
    _require_bare(corr)
    if not 0 <= i < corr.n_dipoles:
        raise IndexError(f"dipole index {i} out of range for {corr.n_dipoles} dipoles")
    return float(_clamp(np.array([corr.C[i, i].real]), "population")[0])


def total_excitation(corr: CorrelationState) -> float:
    return float(sum(dipole_population(corr, i) for i in range(corr.n_dipoles)))


def radiated_intensity(nexc: np.ndarray, omega_s: float, dt: float | np.ndarray = 1.0) -> np.ndarray:
    """I = -omega_s dN_exc/dt with central differences and one-sided ends.

    ``dt`` is the sample spacing or the time grid itself.
    """
    nexc = np.asarray(nexc, dtype=float)
    if nexc.size < 3:
        raise ValueError("radiated intensity needs at least 3 samples")
    return -omega_s * np.gradient(nexc, dt)


def field_weights(config: SystemConfig, x) -> np.ndarray:
    """Weights of E^+(x) / i on eta, one row per position (cavity only).

    Uses E_n = sqrt(w_n / (2 L)), i.e. the permittivity-area product fixed to one.
    """
    res = config.reservoir
    if not isinstance(res, Cavity):
        raise TypeError("field intensity is defined for the cavity; use site_photon_number for the array")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    amp = np.sqrt(reservoir_spectrum(res) / (2 * res.length))
    w = np.zeros((xs.size, 2 * config.n_total), dtype=complex)
    w[:, config.n_dipoles:config.n_total] = amp[None, :] * np.atleast_2d(mode_amplitudes(res, xs))
    return w


def site_weights(config: SystemConfig, x) -> np.ndarray:
    """Weights of the site operator R_x = N^-1/2 sum_k exp(-i k x) R_k (array only)."""
    res = config.reservoir
    if not isinstance(res, CavityArray):
        raise TypeError("site photon number is defined for the cavity array; use field_intensity for the cavity")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    w = np.zeros((xs.size, 2 * config.n_total), dtype=complex)
    w[:, config.n_dipoles:config.n_total] = np.atleast_2d(mode_amplitudes(res, xs)) / np.sqrt(res.num_sites)
    return w


def _functional_expectation(corr: CorrelationState, w: np.ndarray) -> np.ndarray:
    _require_bare(corr)
    return np.einsum("kp,pq,kq->k", w.conj(), corr.C, w).real


def field_intensity(corr: CorrelationState, x, config: SystemConfig):
    """Normally ordered intensity <E^- E^+>(x) in arbitrary units."""
    vals = _clamp(_functional_expectation(corr, field_weights(config, x)), "field intensity")
    return vals if np.ndim(x) else float(vals[0])


def site_photon_number(corr: CorrelationState, x, config: SystemConfig):
    vals = _clamp(_functional_expectation(corr, site_weights(config, x)), "site photon number")
    return vals if np.ndim(x) else float(vals[0])


def polariton_occupations(corr_zeta: CorrelationState) -> np.ndarray:
    if corr_zeta.frame != POLARITON:
        raise ValueError("polariton occupations need a polariton-frame state")
    n = corr_zeta.n_total
    return np.diag(corr_zeta.C)[:n].real.copy()


def polariton_fock_observable(decomp: BogoliubovDecomposition, j: int, x, config: SystemConfig,
                              ordering: str = "dressed"):
    """Field intensity (cavity) or site photon number (array) in the state zeta_j^dag |0~>.

    Expand the Hermitian field (cavity) or the site operator R_x (array) in
    polaritons, F = sum_k (alpha_k zeta_k + beta_k zeta_k^dag).

    ``ordering="dressed"`` normal-orders in the polariton operators, so the
    positive-frequency part is the sum of the alpha_k zeta_k terms and the
    result is |alpha_j|^2 = |<0~|F|1_j>|^2.  ``ordering="bare"`` keeps the
    bare-operator positive-frequency part (E^+ built from R_n alone) and adds
    the dressed-vacuum photon content: |alpha_j|^2 + sum_k |beta_k|^2 + |beta_j|^2.
    """
    decomp.require_stable()
    n = decomp.n_total
    if not 0 <= j < n:
        raise IndexError(f"polariton index {j} out of range")
    if ordering not in ("dressed", "bare"):
        raise ValueError(f"ordering must be 'dressed' or 'bare', got {ordering!r}")
    cavity = isinstance(config.reservoir, Cavity)
    w = field_weights(config, x) if cavity else site_weights(config, x)
    if ordering == "dressed" and cavity:
        # Hermitian field E / i = E^+/i - (E^+/i)^dag: add the R^dag weights
        nd = config.n_dipoles
        w[:, n + nd:] = -w[:, nd:n].conj()
    coeff = w @ decomp.A
    alpha, beta = coeff[:, :n], coeff[:, n:]
    if ordering == "dressed":
        vals = np.abs(alpha[:, j]) ** 2
    else:
        vals = np.abs(alpha[:, j]) ** 2 + np.sum(np.abs(beta) ** 2, axis=1) + np.abs(beta[:, j]) ** 2
    return vals if np.ndim(x) else float(vals[0])


def energy(corr: CorrelationState, ham: QuadraticHamiltonian) -> float:
    """<1/2 eta^dag H eta>; the constant trace offset is left out."""
    _require_bare(corr)
    return float(0.5 * np.sum(ham.matrix * corr.C).real)


# --------------------------------------------------------------------------
# Convenience driver
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    times: np.ndarray
    populations: np.ndarray  # (N_d, len(times))

    @property
    def total_excitation(self) -> np.ndarray:
        return self.populations.sum(axis=0)


def default_time_grid(t_max: float, uv_frequency: float, samples: int | None = None) -> np.ndarray:
    """Uniform grid resolving the fastest frequency with at least 20 points per period."""
    if samples is None:
        samples = int(np.ceil(20 * t_max * uv_frequency / (2 * np.pi))) + 1
    return np.linspace(0.0, t_max, max(int(samples), 2))


def simulate(
    config: SystemConfig,
    decomp: BogoliubovDecomposition,
    initial: InitialStateSpec,
    times: np.ndarray,
) -> Trajectory:
    corr0 = initial_correlations(initial, config)
    corr_z = to_polariton_frame(corr0, decomp)
    return Trajectory(np.asarray(times, dtype=float), population_series(corr_z, decomp, times))
