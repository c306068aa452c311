"""Bosonic Bogoliubov diagonalisation of quadratic Hamiltonians.

Given ``H`` (positive definite, particle-hole structured) we find ``T`` with

    T Sigma T^dag = Sigma,    T^dag (D + D) T = H,

where ``Sigma = diag(+I, -I)``.  The polariton operators are ``zeta = T eta``
with ``zeta_{i+N} = zeta_i^dag``.  Instead of forming ``H^1/2`` we work in
quadrature space with a real factor ``M = F F^T`` of the quadrature form of
``H``; the Hermitian matrix ``i F^T J F`` then has spectrum {+lambda} U {-lambda}
and its eigenvectors give ``T``.  One Newton step restores the symplectic
condition to rounding level, and ``A = T^-1`` is taken as ``Sigma T^dag Sigma``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hamiltonian import QuadraticHamiltonian, quadrature_form

log = logging.getLogger(__name__)

PD_THRESHOLD = 1e-10
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class DynamicalSpectrum:
    frequencies: np.ndarray  # all 2N eigenvalues of Sigma H, sorted by real part
    max_imag: float
    pairing_error: float

    @property
    def is_real(self) -> bool:
        return self.max_imag <= 1e-9 * max(1.0, float(np.max(np.abs(self.frequencies))))

    @property
    def positive(self) -> np.ndarray:
        """The N members with the larger real part (ties broken by imaginary part)."""
        n = self.frequencies.size // 2
        return self.frequencies[n:]


@dataclass(frozen=True)
class BogoliubovDecomposition:
    frequencies: np.ndarray
    T: np.ndarray | None
    A: np.ndarray | None
    stable: bool
    n_dipoles: int
    min_eigenvalue: float
    residuals: dict = field(default_factory=dict)
    gauge: str = ""

    @property
    def n_total(self) -> int:
        return self.frequencies.size

    def require_stable(self) -> "BogoliubovDecomposition":
        if not self.stable:
            raise UnstableHamiltonianError(self.gauge, self.min_eigenvalue)
        return self

    def signed_frequencies(self) -> np.ndarray:
        """(lambda, -lambda): the phase rates of the zeta vector components."""
        return np.concatenate([self.frequencies, -self.frequencies])


class UnstableHamiltonianError(RuntimeError):
    def __init__(self, gauge: str, min_eigenvalue: float):
        self.gauge = gauge
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"Hamiltonian in gauge '{gauge}' is not positive definite "
            f"(min eigenvalue {min_eigenvalue:.6g}); no Bogoliubov transformation exists"
        )


def sigma_diag(n_total: int) -> np.ndarray:
    return np.concatenate([np.ones(n_total), -np.ones(n_total)])


def _swap_halves(m: np.ndarray, n: int, axis: int) -> np.ndarray:
    """Multiply by the sector-swap matrix X = [[0, I], [I, 0]] on one side."""
    return np.roll(m, n, axis=axis)


def _check_hermitian(h: np.ndarray) -> None:
    scale = max(float(np.max(np.abs(h))), 1e-300)
    err = float(np.max(np.abs(h - h.conj().T))) / scale
    if err > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (relative asymmetry {err:.3g})")


def _degenerate_groups(values: np.ndarray, tol: float) -> list[np.ndarray]:
    groups, start = [], 0
    for k in range(1, values.size + 1):
        if k == values.size or values[k] - values[k - 1] > tol:
            groups.append(np.arange(start, k))
            start = k
    return groups


def _canonical_block_rows(rows: np.ndarray) -> np.ndarray:
    """Deterministic unitary remix of a block of degenerate polariton rows.

    Any unitary mixing of rows sharing one frequency is an equally valid
    transformation.  We fix it by scanning bare-operator indices: at each step
    the index carrying the largest remaining weight (ties to the smallest
    index) defines the next row, which is then projected out of the rest.
    The result depends only on the span of ``rows``, not on the basis the
    eigensolver happened to return.
    """
    d = rows.shape[0]
    if d == 1:
        return rows
    # column k holds the best mixing vector for bare index k
    cand = rows.conj().copy()
    mix = np.zeros((d, d), dtype=complex)
    for m in range(d):
        weights = np.einsum("ik,ik->k", cand, cand.conj()).real
        k = int(np.nonzero(weights >= weights.max() * (1 - 1e-8))[0][0])
        alpha = cand[:, k] / np.sqrt(weights[k])
        mix[m] = alpha
        cand = cand - np.outer(alpha, alpha.conj() @ cand)
    return mix @ rows


def _canonical_phases(rows: np.ndarray) -> np.ndarray:
    """Phase factors that make each row's first significant entry real positive."""
    mags = np.abs(rows)
    first = np.argmax(mags >= 1e-8 * mags.max(axis=1, keepdims=True), axis=1)
    lead = rows[np.arange(rows.shape[0]), first]
    return np.abs(lead) / lead


def dynamical_spectrum(ham: QuadraticHamiltonian | np.ndarray) -> DynamicalSpectrum:
    """Eigenvalues of Sigma H, which come in (mu, -mu*) pairs."""
    h = ham.matrix if isinstance(ham, QuadraticHamiltonian) else np.asarray(ham)
    _check_hermitian(h)
    n = h.shape[0] // 2
    mu = scipy.linalg.eigvals(sigma_diag(n)[:, None] * h)
    order = np.lexsort((mu.imag, np.round(mu.real, 12)))
    mu = mu[order]
    # each mu must have a partner -mu*
    partners = -mu.conj()
    dist = np.abs(partners[:, None] - mu[None, :]).min(axis=1)
    scale = max(float(np.max(np.abs(mu))), 1e-300)
    return DynamicalSpectrum(
        frequencies=mu,
        max_imag=float(np.max(np.abs(mu.imag))),
        pairing_error=float(dist.max() / scale),
    )


def balancing_squeeze(m: np.ndarray) -> np.ndarray:
    """Per-mode squeeze factors that equalise the x and p diagonals of M.

    The congruence ``M -> S M S`` with S = diag(s, 1/s) is symplectic, so it
    leaves the normal-mode frequencies unchanged while removing the large
    x/p scale imbalance of strongly coupled low-frequency modes.
    """
    n = m.shape[0] // 2
    d = np.diag(m)
    ratio = np.ones(n)
    ok = (d[:n] > 0) & (d[n:] > 0)
    ratio[ok] = d[n:][ok] / d[:n][ok]
    s = ratio**0.25
    return np.concatenate([s, 1 / s])


def diagonalize(ham: QuadraticHamiltonian, degeneracy_tol: float = 1e-12) -> BogoliubovDecomposition:
    """Bogoliubov-diagonalise ``ham``.

    Works in quadrature space: with ``H = L M L^dag`` and a real factor
    ``M = F F^T`` the Hermitian matrix ``K = F^T L^dag Sigma L F`` plays the
    role of ``H^1/2 Sigma H^1/2``.  Its spectrum is {+lambda} U {-lambda} and
    for eigenvectors u the polariton rows are ``lambda^-1/2 u^dag F^T L^dag``.
    When the Hamiltonian carries an exact sum-of-squares factor (Coulomb and
    dipole gauges) it is used directly; otherwise F comes from the
    eigendecomposition of the symplectically balanced M.

    Returns ``stable=False`` (and no transformation) when H is not positive
    definite beyond ``1e-10`` relative to the balanced norm.
    """
    h = ham.matrix
    _check_hermitian(h)
    n = ham.n_total
    gauge = getattr(ham.gauge, "value", str(ham.gauge))

    m = quadrature_form(h)
    sq = balancing_squeeze(m)
    w, v = scipy.linalg.eigh(sq[:, None] * m * sq[None, :])
    min_eig = float(w[0])
    factor = ham.quadrature_factor
    if factor is None:
        if w[0] <= PD_THRESHOLD * float(np.max(np.abs(w))):
            ds = dynamical_spectrum(h)
            log.info("gauge %s: H indefinite (min balanced eigenvalue %.3g)", gauge, w[0])
            return BogoliubovDecomposition(
                frequencies=np.sort(ds.positive.real),
                T=None,
                A=None,
                stable=False,
                n_dipoles=ham.n_dipoles,
                min_eigenvalue=min_eig,
                gauge=gauge,
            )
        factor = (v * np.sqrt(w)) / sq[:, None]

    # K = i F^T J F with J = [[0, I], [-I, 0]]
    jf = np.vstack([factor[n:], -factor[:n]])
    k = 1j * (factor.T @ jf)
    k = 0.5 * (k + k.conj().T)
    mu, vecs = scipy.linalg.eigh(k)
    lam = mu[n:]
    if lam[0] <= 0:  # pragma: no cover - guarded by the positivity check
        raise np.linalg.LinAlgError("quadrature factor is singular; Hamiltonian not positive definite")

    # rows in xi coordinates, then mapped to eta coordinates: r L^dag = (r_x - i r_p, r_x + i r_p)/sqrt(2)
    r = (vecs[:, n:].conj().T @ factor.T) / np.sqrt(lam)[:, None]
    upper = np.hstack([r[:, :n] - 1j * r[:, n:], r[:, :n] + 1j * r[:, n:]]) / np.sqrt(2)

    upper = _refine_symplectic(upper, n)

    tol = degeneracy_tol * float(lam[-1])
    for grp in _degenerate_groups(lam, tol):
        if grp.size > 1:
            upper[grp] = _canonical_block_rows(upper[grp])
    upper = upper * _canonical_phases(upper)[:, None]
    # zeta_{i+N} = zeta_i^dag  <=>  T_lower = conj(T_upper) X
    lower = _swap_halves(upper.conj(), n, axis=1)
    t = np.vstack([upper, lower])
    sig = sigma_diag(n)
    a = sig[:, None] * t.conj().T * sig[None, :]

    return BogoliubovDecomposition(
        frequencies=lam,
        T=t,
        A=a,
        stable=True,
        n_dipoles=ham.n_dipoles,
        min_eigenvalue=min_eig,
        residuals=_residuals(t, a, lam, h),
        gauge=gauge,
    )


def _refine_symplectic(upper: np.ndarray, n: int, steps: int = 1) -> np.ndarray:
    """Newton correction of the polariton rows towards T Sigma T^dag = Sigma.

    With R = T Sigma T^dag - Sigma, the update T <- (I - R Sigma / 2) T removes
    the first-order error.  It commutes with the particle-hole structure, so
    only the upper rows need to be stored and updated.
    """
    sig = sigma_diag(n)
    for _ in range(steps):
        t = np.vstack([upper, _swap_halves(upper.conj(), n, axis=1)])
        r_up = (upper * sig[None, :]) @ t.conj().T
        r_up[:, :n] -= np.eye(n)
        upper = upper - 0.5 * (r_up * sig[None, :]) @ t
    return upper


def _residuals(t: np.ndarray, a: np.ndarray, lam: np.ndarray, h: np.ndarray) -> dict:
    n = lam.size
    sig = sigma_diag(n)
    eye = np.eye(2 * n)
    symp = (t * sig[None, :]) @ t.conj().T - np.diag(sig)
    recon = reconstruct(t, lam) - h
    return {
        "symplectic": float(np.max(np.abs(symp))),
        "reconstruction": float(np.max(np.abs(recon)) / np.max(np.abs(h))),
        "inverse": float(np.max(np.abs(a @ t - eye))),
    }


def reconstruct(t: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """T^dag (D + D) T."""
    d2 = np.concatenate([lam, lam])
    return t.conj().T @ (d2[:, None] * t)


def symplectic_error(decomp: BogoliubovDecomposition) -> float:
    decomp.require_stable()
    return decomp.residuals["symplectic"]


def matter_fraction(decomp: BogoliubovDecomposition, i: int, n_dipoles: int | None = None) -> float:
    """Matter weight chi_i of polariton ``i`` (0-based) in [0, 1]."""
    decomp.require_stable()
    nd = decomp.n_dipoles if n_dipoles is None else n_dipoles
    n = decomp.n_total
    row = np.abs(decomp.T[i]) ** 2
    matter = row[:nd].sum() + row[n:n + nd].sum()
    return float(matter / row.sum())


def matter_fractions(decomp: BogoliubovDecomposition, n_dipoles: int | None = None) -> np.ndarray:
    decomp.require_stable()
    nd = decomp.n_dipoles if n_dipoles is None else n_dipoles
    n = decomp.n_total
    w = np.abs(decomp.T[:n]) ** 2
    return (w[:, :nd].sum(axis=1) + w[:, n:n + nd].sum(axis=1)) / w.sum(axis=1)


def participation_ratio(decomp: BogoliubovDecomposition, i: int = 0) -> float:
    """Normalised inverse participation ratio of dipole ``i`` over polaritons."""
    decomp.require_stable()
    w = np.abs(decomp.A[i]) ** 2
    return float(np.sum(w**2) / np.sum(w) ** 2)
