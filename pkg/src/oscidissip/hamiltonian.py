"""Quadratic-form matrices for the dipole-reservoir Hamiltonian in three gauges.

The operator vector is laid out as

    eta = [a_1 .. a_Nd, R_1 .. R_N, a_1^dag .. a_Nd^dag, R_1^dag .. R_N^dag]

and every Hamiltonian is written as ``0.5 * eta^dag H eta + trace_offset``
with ``H = [[A, B], [conj(B), conj(A)]]``.  In operator language this is

    sum_pq A_pq b_p^dag b_q + 1/2 sum_pq (B_pq b_p^dag b_q^dag + h.c.)

so ``A`` is Hermitian and ``B`` symmetric.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import SystemConfig, mode_amplitudes, reservoir_spectrum

ORDERING_VERSION = 1


class Gauge(str, enum.Enum):
    COULOMB = "coulomb"
    DIPOLE = "dipole"
    QUANTUM_OPTICAL = "qoptical"

    @classmethod
    def parse(cls, name) -> "Gauge":
        if isinstance(name, cls):
            return name
        aliases = {"quantum_optical": "qoptical", "quantumoptical": "qoptical"}
        key = str(name).lower()
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class QuadraticHamiltonian:
    matrix: np.ndarray
    gauge: Gauge
    n_dipoles: int
    n_modes: int
    trace_offset: float
    ordering_version: int = ORDERING_VERSION
    # optional real factor F of the quadrature form, M = F F^T (see quadrature_form)
    quadrature_factor: np.ndarray | None = None

    @property
    def n_total(self) -> int:
        return self.n_dipoles + self.n_modes

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """The normal block A and the anomalous block B."""
        n = self.n_total
        return self.matrix[:n, :n], self.matrix[:n, n:]

    def hermiticity_error(self) -> float:
        h = self.matrix
        return float(np.max(np.abs(h - h.conj().T)) / max(np.max(np.abs(h)), 1e-300))

    def structure_error(self) -> float:
        """Largest violation of the particle-hole block structure."""
        n = self.n_total
        h = self.matrix
        a, b, c, d = h[:n, :n], h[:n, n:], h[n:, :n], h[n:, n:]
        scale = max(np.max(np.abs(h)), 1e-300)
        return float(
            max(
                np.max(np.abs(d - a.conj())),
                np.max(np.abs(c - b.conj())),
                np.max(np.abs(b - b.T)),
            )
            / scale
        )


def quadrature_transform(n_total: int) -> np.ndarray:
    """Unitary L with eta = L xi, where xi = (x_1..x_n, p_1..p_n) and b = (x + i p)/sqrt(2)."""
    eye = np.eye(n_total)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]]) / np.sqrt(2)


def quadrature_form(matrix: np.ndarray) -> np.ndarray:
    """Real symmetric M = L^dag H L, so that the Hamiltonian reads 1/2 xi^T M xi."""
    n = matrix.shape[0] // 2
    lmat = quadrature_transform(n)
    m = lmat.conj().T @ matrix @ lmat
    m = 0.5 * (m + m.conj().T)
    return m.real


def _assemble(
    a_block: np.ndarray,
    b_block: np.ndarray,
    gauge: Gauge,
    nd: int,
    factor: np.ndarray | None = None,
) -> QuadraticHamiltonian:
    # symmetrise away rounding so the structural invariants hold exactly
    a_block = 0.5 * (a_block + a_block.conj().T)
    b_block = 0.5 * (b_block + b_block.T)
    h = np.block([[a_block, b_block], [b_block.conj(), a_block.conj()]])
    n_tot = a_block.shape[0]
    return QuadraticHamiltonian(
        matrix=h,
        gauge=gauge,
        n_dipoles=nd,
        n_modes=n_tot - nd,
        trace_offset=-0.5 * float(np.trace(a_block).real),
        quadrature_factor=factor,
    )


def _free_blocks(config: SystemConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    w_s = np.asarray(config.dipoles.frequencies, dtype=float)
    w_r = reservoir_spectrum(config.reservoir)
    n_tot = config.n_total
    a_block = np.zeros((n_tot, n_tot), dtype=complex)
    a_block[np.diag_indices(n_tot)] = np.concatenate([w_s, w_r])
    b_block = np.zeros((n_tot, n_tot), dtype=complex)
    return a_block, b_block, w_s, w_r


def _mode_values(config: SystemConfig) -> np.ndarray:
    """f_n(x_i) as an (N_d, N) array."""
    return np.atleast_2d(mode_amplitudes(config.reservoir, np.asarray(config.dipoles.positions)))


def coulomb_couplings(config: SystemConfig) -> np.ndarray:
    """g_in = g0 sqrt(omega_si / omega_n) f_n(x_i)."""
    w_s = np.asarray(config.dipoles.frequencies)[:, None]
    w_r = reservoir_spectrum(config.reservoir)[None, :]
    return config.g0 * np.sqrt(w_s / w_r) * _mode_values(config)


def dipole_couplings(config: SystemConfig) -> np.ndarray:
    """g~_in = g0 sqrt(omega_n / omega_si) f_n(x_i)."""
    w_s = np.asarray(config.dipoles.frequencies)[:, None]
    w_r = reservoir_spectrum(config.reservoir)[None, :]
    return config.g0 * np.sqrt(w_r / w_s) * _mode_values(config)


def build_coulomb(config: SystemConfig) -> QuadraticHamiltonian:
    """Minimal-coupling Hamiltonian including the full diamagnetic square.

    The P.A coupling is ``-i sum (a^dag - a)(g R + g* R^dag)`` and the
    diamagnetic term ``g0^2 sum_i [sum_n (R_n f_n + R_n^dag f_n*) / sqrt(w_n)]^2``
    is expanded densely over every mode pair.
    """
    nd = config.n_dipoles
    a_block, b_block, _, w_r = _free_blocks(config)
    g = coulomb_couplings(config)
    res = slice(nd, None)

    a_block[:nd, res] = -1j * g
    a_block[res, :nd] = (-1j * g).conj().T
    b_block[:nd, res] = -1j * g.conj()
    b_block[res, :nd] = (-1j * g.conj()).T

    u = _mode_values(config) / np.sqrt(w_r)[None, :]
    g0sq = config.g0**2
    # R^dag R sector: normal ordering of R R^dag only shifts the constant
    a_block[res, res] += 2 * g0sq * (u.conj().T @ u)
    b_block[res, res] += 2 * g0sq * (u.conj().T @ u.conj())
    return _assemble(a_block, b_block, Gauge.COULOMB, nd, _coulomb_factor(config, g))


def dipole_self_interaction(config: SystemConfig, include_correction: bool = True) -> np.ndarray:
    """Self-interaction matrix Omega_ij of the dipole-gauge Hamiltonian.

    The first term is ``sum_n g~*_in g~_jn / w_n``.  The second, double mode
    sum couples dipoles through ``Im(g~* g~)`` and is kept unless
    ``include_correction`` is false.  For the symmetric reservoirs handled
    here it vanishes identically, so dropping it is a diagnostic only.
    """
    gt = dipole_couplings(config)
    w_r = reservoir_spectrum(config.reservoir)
    omega = (gt.conj() / w_r) @ gt.T
    if include_correction:
        w_s = np.asarray(config.dipoles.frequencies)
        # K_il = sum_n Im(g~*_in g~_ln) / w_n
        k = ((gt.conj() / w_r) @ gt.T).imag
        omega = omega + (k / w_s[None, :]) @ k.T
    return omega


def build_dipole_gauge(config: SystemConfig, include_correction: bool = True) -> QuadraticHamiltonian:
    """Dipole-gauge Hamiltonian with the dipole self-interaction block.

    Coupling ``i sum (a^dag + a)(g~* R^dag - g~ R)`` plus
    ``sum_ij Omega*_ij (a_i^dag a_j^dag + a_i^dag a_j) + h.c.``.
    """
    nd = config.n_dipoles
    a_block, b_block, _, _ = _free_blocks(config)
    gt = dipole_couplings(config)
    res = slice(nd, None)

    a_block[:nd, res] = -1j * gt
    a_block[res, :nd] = (-1j * gt).conj().T
    b_block[:nd, res] = 1j * gt.conj()
    b_block[res, :nd] = (1j * gt.conj()).T

    omega = dipole_self_interaction(config, include_correction)
    a_block[:nd, :nd] += omega.conj() + omega.T
    b_block[:nd, :nd] += omega.conj() + omega.conj().T
    # the sum-of-squares form exists only when Omega is real and symmetric
    factor = None
    if np.max(np.abs(omega.imag)) <= 1e-12 * max(np.max(np.abs(omega)), 1e-300):
        factor = _dipole_factor(config, gt)
    return _assemble(a_block, b_block, Gauge.DIPOLE, nd, factor)


def build_quantum_optical(config: SystemConfig) -> QuadraticHamiltonian:
    """Dipole coupling ``(a^dag + a)(g~ R + g~* R^dag)`` without self-interaction."""
    nd = config.n_dipoles
    a_block, b_block, _, _ = _free_blocks(config)
    gt = dipole_couplings(config)
    res = slice(nd, None)

    a_block[:nd, res] = gt
    a_block[res, :nd] = gt.conj().T
    b_block[:nd, res] = gt.conj()
    b_block[res, :nd] = gt.conj().T
    return _assemble(a_block, b_block, Gauge.QUANTUM_OPTICAL, nd)


def _coulomb_factor(config: SystemConfig, g: np.ndarray) -> np.ndarray:
    """Square factor of the Coulomb quadrature form.

    The minimal-coupling Hamiltonian is a sum of squares,
    ``sum_i w_i/2 [x_i^2 + (p_i - A_i)^2] + sum_n w_n/2 (x_n^2 + p_n^2)``,
    with A_i = (2/w_i) sum_n (Re g_in x_n - Im g_in p_n).  Building the factor
    directly avoids the cancellation that makes H itself ill-conditioned deep
    in the strong-coupling regime.
    """
    nd, n_tot = config.n_dipoles, config.n_total
    w_s = np.asarray(config.dipoles.frequencies, dtype=float)
    w_r = reservoir_spectrum(config.reservoir)
    f = np.zeros((2 * n_tot, 2 * n_tot))
    xs, ps = np.arange(n_tot), n_tot + np.arange(n_tot)
    for i in range(nd):
        f[xs[i], i] = np.sqrt(w_s[i])
        col = np.zeros(2 * n_tot)
        col[ps[i]] = 1.0
        col[xs[nd:]] = -2 / w_s[i] * g[i].real
        col[ps[nd:]] = 2 / w_s[i] * g[i].imag
        f[:, n_tot + i] = np.sqrt(w_s[i]) * col
    f[xs[nd:], np.arange(nd, n_tot)] = np.sqrt(w_r)
    f[ps[nd:], n_tot + np.arange(nd, n_tot)] = np.sqrt(w_r)
    return f


def _dipole_factor(config: SystemConfig, gt: np.ndarray) -> np.ndarray:
    """Square factor of the dipole-gauge quadrature form.

    Uses ``sum_i w_i/2 (x_i^2 + p_i^2) + sum_n w_n/2 [(x_n + beta_n)^2 + (p_n + gamma_n)^2]``
    with beta_n = sum_i 2 Im(g~_in) x_i / w_n and gamma_n = sum_i 2 Re(g~_in) x_i / w_n.
    """
    nd, n_tot = config.n_dipoles, config.n_total
    w_s = np.asarray(config.dipoles.frequencies, dtype=float)
    w_r = reservoir_spectrum(config.reservoir)
    f = np.zeros((2 * n_tot, 2 * n_tot))
    xs, ps = np.arange(n_tot), n_tot + np.arange(n_tot)
    f[xs[:nd], np.arange(nd)] = np.sqrt(w_s)
    f[ps[:nd], n_tot + np.arange(nd)] = np.sqrt(w_s)
    modes = np.arange(nd, n_tot)
    f[xs[nd:], modes] = np.sqrt(w_r)
    f[ps[nd:], n_tot + modes] = np.sqrt(w_r)
    f[:nd, modes] = 2 * gt.imag / np.sqrt(w_r)
    f[:nd, n_tot + modes] = 2 * gt.real / np.sqrt(w_r)
    return f


def build(config: SystemConfig, gauge="coulomb", **kwargs) -> QuadraticHamiltonian:
    gauge = Gauge.parse(gauge)
    if gauge is Gauge.COULOMB:
        return build_coulomb(config)
    if gauge is Gauge.DIPOLE:
        return build_dipole_gauge(config, **kwargs)
    return build_quantum_optical(config)


def array_parity_rotation(n_sites: int) -> tuple[np.ndarray, np.ndarray]:
    """Rotation of travelling-wave array modes into symmetric/antisymmetric pairs.

    Returns ``(U, labels)`` where ``U`` is the N x N unitary mapping the
    travelling modes R_k (storage order n = -N/2+1 .. N/2) onto
    R_1n = (R_n + R_-n)/sqrt(2) and R_2n = (R_n - R_-n)/sqrt(2) for
    0 < n < N/2, with the unpaired n = 0 and n = N/2 modes left in place.
    ``labels`` marks each rotated mode as ``"even"`` or ``"odd"``.  A dipole on
    site x = 0 couples only to the even combinations.
    """
    n_idx = np.arange(-n_sites // 2 + 1, n_sites // 2 + 1)
    pos = {int(n): i for i, n in enumerate(n_idx)}
    rows, labels = [], []
    for n in (0, n_sites // 2):
        v = np.zeros(n_sites)
        v[pos[n]] = 1.0
        rows.append(v)
        labels.append("even")
    for n in range(1, n_sites // 2):
        plus = np.zeros(n_sites)
        plus[pos[n]] = plus[pos[-n]] = 1 / np.sqrt(2)
        minus = np.zeros(n_sites)
        minus[pos[n]], minus[pos[-n]] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        rows.extend([plus, minus])
        labels.extend(["even", "odd"])
    return np.array(rows), np.array(labels)


def save_hamiltonian(path, ham: QuadraticHamiltonian) -> None:
    """Dump H to an ``.npz`` archive together with a small header."""
    header = {
        "gauge": ham.gauge.value,
        "n_dipoles": ham.n_dipoles,
        "n_modes": ham.n_modes,
        "ordering_version": ham.ordering_version,
        "ordering": "a_1..a_Nd, R_1..R_N, a^dag_1..a^dag_Nd, R^dag_1..R^dag_N",
    }
    np.savez(path, matrix=ham.matrix, trace_offset=ham.trace_offset, header=np.array(repr(header)))


def load_hamiltonian(path) -> QuadraticHamiltonian:
    import ast

    with np.load(path) as data:
        header = ast.literal_eval(str(data["header"]))
        return QuadraticHamiltonian(
            matrix=data["matrix"],
            gauge=Gauge.parse(header["gauge"]),
            n_dipoles=int(header["n_dipoles"]),
            n_modes=int(header["n_modes"]),
            trace_offset=float(data["trace_offset"]),
            ordering_version=int(header["ordering_version"]),
        )
