import numpy as np
import pytest
import scipy.linalg

from oscidissip import Cavity, CavityArray, CouplingSpec, DipoleSpec, SystemConfig
from oscidissip import dynamics as dy
from oscidissip import lindblad as lb

T = np.linspace(0, 40, 81)


def cavity_pair(dx, phi=0.01):
    return SystemConfig(Cavity(1000, 0.002), DipoleSpec([-dx / 2, dx / 2]), CouplingSpec("phi", phi))


def test_cavity_pair_rates():
    lam = 2 * np.pi
    r = lb.collective_rates(cavity_pair(lam))
    assert r.gamma[0, 1] == pytest.approx(r.gamma0)
    assert abs(lb.collective_rates(cavity_pair(lam / 4)).gamma[0, 1]) < 1e-15
    assert 2 * r.gamma0 == pytest.approx(2 * 0.01)      # single-emitter decay rate


def test_array_pair_rates():
    cfg = SystemConfig(CavityArray(500, 2.0, 1.0), DipoleSpec([10, 12], [2.0, 2.0]), CouplingSpec("phi", 0.02))
    r = lb.collective_rates(cfg)
    assert r.gamma[0, 1] == pytest.approx(-r.gamma0)


def test_single_dipole_g_matrix_and_decay():
    cfg = SystemConfig(Cavity(1000, 0.002), DipoleSpec([0.0]), CouplingSpec("phi", 0.01))
    r = lb.collective_rates(cfg)
    g = lb.g_matrix(r)
    assert g.shape == (1, 1) and g[0, 0] == pytest.approx(r.gamma0)
    n = lb.me_total_excitation(g, [[1.0]], T)
    assert np.allclose(n, np.exp(-2 * r.gamma0 * T), rtol=1e-12)


def equal_array(nd, d, gamma0=0.01, k=1.0):
    x = d * np.arange(nd)
    g = gamma0 * np.cos(k * np.abs(x[:, None] - x[None, :])) + 1j * gamma0 * np.sin(k * np.abs(x[:, None] - x[None, :])) * (1 - np.eye(nd))
    return g


def test_superradiant_g_matrix_power_law():
    g = equal_array(10, 2 * np.pi)
    assert np.allclose(g, 0.01 * np.ones((10, 10)), atol=1e-15)
    # G = Gamma0 J with J the all-ones matrix, so G^n = (N_d Gamma0)^(n-1) G
    assert np.allclose(np.linalg.matrix_power(g, 3), (10 * 0.01) ** 2 * g, atol=1e-15)


def test_alternating_g_matrix():
    g = equal_array(6, np.pi)
    i, j = np.indices((6, 6))
    assert np.allclose(g, 0.01 * (-1.0) ** np.abs(i - j), atol=1e-15)


def test_g_matrix_from_config_matches_sign_pattern():
    cfg = SystemConfig(Cavity(1000, 0.002), DipoleSpec(np.pi * (np.arange(4) - 1.5)), CouplingSpec("phi", 0.005))
    g = lb.g_matrix(lb.collective_rates(cfg))
    i, j = np.indices((4, 4))
    assert np.allclose(g, g[0, 0] * (-1.0) ** np.abs(i - j), atol=1e-12 * g[0, 0].real)


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("dx", [2 * np.pi, np.pi, np.pi / 2, 1.3])
def test_bell_pair_closed_form(sign, dx):
    cfg = cavity_pair(dx)
    r = lb.collective_rates(cfg)
    c0 = lb.dipole_moments(dy.initial_correlations(dy.TwoModeBell(sign), cfg))
    n = lb.me_total_excitation(lb.g_matrix(r), c0, T)
    ref = np.exp(2 * (-sign * r.gamma[0, 1] - r.gamma0) * T)
    assert np.allclose(n, ref, rtol=1e-10, atol=1e-14)


def test_fock_superradiant_array_closed_form():
    nd, g0 = 10, 0.01
    g = equal_array(nd, 2 * np.pi, g0)
    n = lb.me_total_excitation(g, np.eye(nd), T)
    assert np.allclose(n, lb.closed_form_fock_superradiant(nd, 1.0, g0, T), rtol=1e-10)
    inten = lb.me_intensity(g, g.real, np.eye(nd), T, 1.0)
    assert np.allclose(inten.coherent, 0.0, atol=1e-14)
    assert inten.total[0] == pytest.approx(lb.closed_form_fock_initial_intensity(nd, 1.0, g0, 1.0))


def test_coherent_superradiant_intensity():
    nd, g0, ws = 10, 0.01, 1.0
    g = equal_array(nd, 2 * np.pi, g0)
    alpha = np.ones(nd)
    c0 = np.outer(alpha.conj(), alpha)
    n = lb.me_total_excitation(g, c0, T)
    inten = lb.me_intensity(g, g.real, c0, T, ws)
    assert np.allclose(n, lb.closed_form_coherent_superradiant(nd, g0, T), rtol=1e-10)
    assert np.allclose(inten.total, lb.closed_form_coherent_superradiant_intensity(nd, g0, ws, T), rtol=1e-10)
    # consistent with the emitted power -w_s dN/dt
    fine = np.linspace(0, 40, 4001)
    n_fine = lb.me_total_excitation(g, c0, fine)
    i_fine = lb.me_intensity(g, g.real, c0, fine, ws).total
    assert np.allclose(i_fine[1:-1], -ws * np.gradient(n_fine, fine)[1:-1], rtol=1e-4)


def test_alternating_coherent_is_dark():
    nd = 10
    g = equal_array(nd, np.pi)
    alpha = np.ones(nd)
    c0 = np.outer(alpha, alpha)
    inten = lb.me_intensity(g, g.real, c0, T)
    assert np.allclose(inten.total, 0.0, atol=1e-12)
    amps = lb.me_coherent_amplitudes(g, alpha, T)
    assert np.allclose(amps, alpha[None, :], atol=1e-12)
    # cross-check against a direct matrix exponential
    assert np.allclose(amps[-1], scipy.linalg.expm(-g * T[-1]) @ alpha, atol=1e-12)


def test_coherent_amplitudes_start_and_decay():
    g = equal_array(2, 1.1)
    a0 = np.array([1.0, 0.5j])
    assert np.allclose(lb.me_coherent_amplitudes(g, a0, 0.0), a0)
    assert np.all(np.linalg.eigvals(g.real).real > 0)
    assert np.max(np.abs(lb.me_coherent_amplitudes(g, a0, 1e4))) < 1e-10


@pytest.mark.parametrize("nd", [2, 5, 10])
def test_decay_eigenvalues_match_gamma_matrix(nd):
    g0 = 0.01
    for kd in (2 * np.pi / nd, 2 * np.pi, np.pi, 0.37):
        plus, minus = lb.array_decay_eigenvalues(nd, 1.0, kd, g0)
        ev = np.sort(np.linalg.eigvalsh(equal_array(nd, kd, g0).real))
        big = ev[np.abs(ev) > 1e-12 * g0]
        assert np.allclose(sorted([plus, minus])[-big.size:] if big.size < 2 else sorted([plus, minus]),
                           big[-2:] if big.size >= 2 else big, atol=1e-10)


def test_decay_eigenvalue_special_cases():
    assert lb.array_decay_eigenvalues(10, 1.0, 2 * np.pi / 10, 0.01) == pytest.approx((0.05, 0.05))
    assert lb.array_decay_eigenvalues(10, 1.0, 2 * np.pi, 0.01) == pytest.approx((0.1, 0.0), abs=1e-15)
    assert lb.array_decay_eigenvalues(2, 1.0, np.pi / 2, 0.01) == pytest.approx((0.01, 0.01))


def test_retardation_times():
    cav = cavity_pair(1.0)
    assert lb.retardation_time(cav, 0.0).t_ret == 0.0
    assert lb.retardation_time(cav, 2 * np.pi).t_ret == pytest.approx(2 * np.pi)
    arr = SystemConfig(CavityArray(500, 2.0, 1.0), DipoleSpec([0, 4], [2.0, 2.0]), CouplingSpec("phi", 0.02))
    assert lb.retardation_time(arr, 4.0).t_ret == pytest.approx(4.0)
