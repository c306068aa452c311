"""Markovian reference: collective rates and closed-form master-equation solutions.

For oscillators the master equation closes on second moments.  With
``G_ij = Gamma_ij + i (1 - delta_ij) Omega_ij`` and ``P = exp(-G t)`` the
moment matrix ``C_ij = <a_i^dag a_j>`` evolves as ``C(t) = conj(P) C(0) P^T``
and the coherent amplitudes as ``alpha(t) = P alpha(0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import Cavity, ConfigError, SystemConfig, group_velocity, resonant_wavenumber

EXPM_COND_LIMIT = 1e8
SINE_ZERO = 1e-9


@dataclass(frozen=True)
class CollectiveRates:
    gamma: np.ndarray   # Gamma_ij
    omega: np.ndarray   # Omega_ij (collective Lamb shifts; only i != j enters)
    gamma0: float
    k_s: float

    @property
    def n_dipoles(self) -> int:
        return self.gamma.shape[0]


def collective_rates(config: SystemConfig) -> CollectiveRates:
    """Gamma_ij = Gamma0 cos(k_s dx), Omega_ij = Gamma0 sin(k_s |dx|).

    ``Gamma0 = g0bar^2 / v_s`` so that a single oscillator loses its
    excitation at ``2 Gamma0 = gamma``, the Markovian decay rate.
    """
    freqs = config.dipoles.frequencies
    if max(freqs) - min(freqs) > 1e-12 * max(freqs):
        raise ConfigError("collective rates assume identical dipole frequencies")
    v_s = group_velocity(config)
    k_s = resonant_wavenumber(config)
    gamma0 = config.g0bar**2 / v_s
    x = np.asarray(config.dipoles.positions)
    dx = np.abs(x[:, None] - x[None, :])
    return CollectiveRates(
        gamma=gamma0 * np.cos(k_s * dx),
        omega=gamma0 * np.sin(k_s * dx),
        gamma0=gamma0,
        k_s=k_s,
    )


def g_matrix(rates: CollectiveRates, include_shifts: bool = True) -> np.ndarray:
    g = rates.gamma.astype(complex)
    if include_shifts:
        off = ~np.eye(rates.n_dipoles, dtype=bool)
        g[off] += 1j * rates.omega[off]
    return g


def _expm_factory(g: np.ndarray):
    """Return t -> exp(-G t), via eigendecomposition when well conditioned."""
    vals, vecs = np.linalg.eig(g)
    if np.linalg.cond(vecs) <= EXPM_COND_LIMIT:
        inv = np.linalg.inv(vecs)
        return lambda t: (vecs * np.exp(-vals * t)[None, :]) @ inv
    return lambda t: scipy.linalg.expm(-g * t)


def _moment_matrix(c_dipole) -> np.ndarray:
    c = np.atleast_2d(np.asarray(c_dipole, dtype=complex))
    if c.shape[0] != c.shape[1]:
        raise ValueError("dipole moment matrix must be square")
    return c


def propagators(g: np.ndarray, t) -> np.ndarray:
    """exp(-G t) for each time; shape (len(t), N_d, N_d)."""
    prop = _expm_factory(g)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    return np.array([prop(tv) for tv in ts])


def me_total_excitation(g: np.ndarray, c_dipole, t):
    """N_exc(t) = sum_ij (e^{-G^dag t} e^{-G t})_ij <a_i^dag a_j>(0)."""
    c0 = _moment_matrix(c_dipole)
    p = propagators(g, t)
    vals = np.einsum("tki,tkj,ij->t", p.conj(), p, c0).real
    return vals if np.ndim(t) else float(vals[0])


@dataclass(frozen=True)
class Intensity:
    total: np.ndarray
    coherent: np.ndarray
    incoherent: np.ndarray


def me_intensity(g: np.ndarray, gamma: np.ndarray, c_dipole, t, omega_s: float = 1.0) -> Intensity:
    """Radiated intensity 2 w_s sum_ij (e^{-G^dag t} Gamma e^{-G t})_ij <a_i^dag a_j>(0).

    The incoherent part keeps the i = j terms, the coherent part the rest.
    """
    c0 = _moment_matrix(c_dipole)
    p = propagators(g, t)
    kernel = np.einsum("tki,kl,tlj->tij", p.conj(), gamma, p)
    weighted = kernel * c0[None, :, :]
    diag = np.einsum("tii->t", weighted).real
    total = weighted.sum(axis=(1, 2)).real
    scale = 2 * omega_s
    if np.ndim(t) == 0:
        return Intensity(float(scale * total[0]), float(scale * (total[0] - diag[0])), float(scale * diag[0]))
    return Intensity(scale * total, scale * (total - diag), scale * diag)


def me_coherent_amplitudes(g: np.ndarray, alpha0, t) -> np.ndarray:
    """alpha(t) = exp(-G t) alpha(0); shape (N_d,) or (len(t), N_d)."""
    alpha0 = np.asarray(alpha0, dtype=complex)
    p = propagators(g, t)
    out = p @ alpha0
    return out if np.ndim(t) else out[0]


def array_decay_eigenvalues(n_dipoles: int, k: float, d: float, gamma0: float) -> tuple[float, float]:
    """The two nonzero eigenvalues of Gamma_ij = Gamma0 cos(k d |i - j|), largest first.

    Uses N_d Gamma0 / 2 +- (Gamma0 / 2) |sin(N_d k d) / sin(k d)|, switching to
    the limiting ratio N_d |cos(N_d k d) / cos(k d)| when sin(k d) vanishes.
    """
    kd = k * d
    s = math.sin(kd)
    if abs(s) < SINE_ZERO:
        ratio = n_dipoles * math.cos(n_dipoles * kd) / math.cos(kd)
    else:
        ratio = math.sin(n_dipoles * kd) / s
    half = 0.5 * gamma0 * abs(ratio)
    base = 0.5 * n_dipoles * gamma0
    return base + half, base - half


@dataclass(frozen=True)
class Retardation:
    t_ret: float
    markov_ratio: float  # t_ret * gamma; Markovian collective behaviour needs this << 1


def retardation_time(config: SystemConfig, dx: float) -> Retardation:
    dx = abs(float(dx))
    res = config.reservoir
    if isinstance(res, Cavity):
        t_ret = dx / 1.0
    else:
        t_ret = dx / (res.J * res.a)
    gamma = 2 * config.g0bar**2 / group_velocity(config)
    return Retardation(t_ret=t_ret, markov_ratio=t_ret * gamma)


def dipole_moments(corr) -> np.ndarray:
    """<a_i^dag a_j>(0) block of a bare-frame correlation state."""
    nd = corr.n_dipoles
    return corr.C[:nd, :nd].copy()


# --------------------------------------------------------------------------
# Closed forms for equally spaced arrays
# --------------------------------------------------------------------------

def closed_form_fock_superradiant(n_dipoles: int, nbar: float, gamma0: float, t):
    """d = 2 pi / k, Fock family: nbar (N_d - 1 + exp(-2 N_d Gamma0 t))."""
    return nbar * (n_dipoles - 1 + np.exp(-2 * n_dipoles * gamma0 * np.asarray(t)))


def closed_form_coherent_superradiant(n_dipoles: int, gamma0: float, t, alpha_sq: float = 1.0):
    """d = 2 pi / k, equal amplitudes: N_exc = N_d |alpha0|^2 exp(-2 N_d Gamma0 t)."""
    return n_dipoles * alpha_sq * np.exp(-2 * n_dipoles * gamma0 * np.asarray(t))


def closed_form_alternating_coherent(n_dipoles: int, t, alpha_sq: float = 1.0):
    """d = pi / k, equal amplitudes, even N_d: perfectly subradiant, N_exc constant."""
    return n_dipoles * alpha_sq * np.ones_like(np.asarray(t, dtype=float))


def closed_form_fock_alternating(n_dipoles: int, nbar: float, gamma0: float, t):
    """d = pi / k, Fock family: same as d = 2 pi / k since only the diagonal of C enters."""
    return closed_form_fock_superradiant(n_dipoles, nbar, gamma0, t)


def closed_form_coherent_superradiant_intensity(n_dipoles: int, gamma0: float, omega_s: float, t, alpha_sq: float = 1.0):
    """d = 2 pi / k, equal amplitudes: I = 2 w_s Gamma0 alpha^dag J alpha exp(-2 N_d Gamma0 t).

    With alpha_i = alpha0 the quadratic form is N_d^2 |alpha0|^2, consistent
    with I = -w_s dN_exc/dt for N_exc = N_d |alpha0|^2 exp(-2 N_d Gamma0 t).
    """
    return 2 * omega_s * gamma0 * n_dipoles**2 * alpha_sq * np.exp(-2 * n_dipoles * gamma0 * np.asarray(t))


def closed_form_fock_initial_intensity(n_dipoles: int, nbar: float, gamma0: float, omega_s: float) -> float:
    """Initial intensity 2 w_s Gamma0 N_d nbar of a Fock product array."""
    return 2 * omega_s * gamma0 * n_dipoles * nbar
