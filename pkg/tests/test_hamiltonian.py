import sys
from pathlib import Path

import numpy as np
import pytest

from oscidissip import (
    Cavity,
    CavityArray,
    CouplingSpec,
    DipoleSpec,
    Gauge,
    SystemConfig,
    build,
    build_coulomb,
    build_dipole_gauge,
    build_quantum_optical,
    diagonalize,
    dynamical_spectrum,
    reservoir_spectrum,
)
from oscidissip.hamiltonian import dipole_self_interaction, load_hamiltonian, save_hamiltonian
from oscidissip.model import mode_amplitudes

sys.path.insert(0, str(Path(__file__).parent))
from oracles import solve_truncated_fock  # noqa: E402

TINY = 1e-14   # coupling kinds must be positive; this is the decoupled limit to machine precision


def cavity_cfg(n=6, wc=0.5, x=(0.0,), kind="theta", value=0.3):
    return SystemConfig(Cavity(n, wc), DipoleSpec(list(x)), CouplingSpec(kind, value))


@pytest.mark.parametrize("builder", [build_coulomb, build_dipole_gauge, build_quantum_optical])
@pytest.mark.parametrize("cfg", [cavity_cfg(x=(0.3, -1.1)),
                                 SystemConfig(CavityArray(12, 2.0, 1.0), DipoleSpec([0, 3], [2.0, 2.1]),
                                              CouplingSpec("phi", 0.05))])
def test_hermitian_with_particle_hole_structure(builder, cfg):
    ham = builder(cfg)
    assert ham.hermiticity_error() <= 1e-12
    assert ham.structure_error() <= 1e-12
    assert ham.matrix.shape == (2 * cfg.n_total, 2 * cfg.n_total)


def test_decoupled_limit_is_diagonal():
    cfg = cavity_cfg(kind="g0bar", value=TINY)
    bare = np.concatenate([cfg.dipoles.frequencies, reservoir_spectrum(cfg.reservoir)])
    for builder in (build_coulomb, build_dipole_gauge, build_quantum_optical):
        h = builder(cfg).matrix
        assert np.allclose(np.diag(h).real, np.concatenate([bare, bare]), atol=1e-12)
        assert np.max(np.abs(h - np.diag(np.diag(h)))) < 1e-12
    assert np.allclose(build_coulomb(cfg).matrix, build_dipole_gauge(cfg).matrix, atol=1e-12)


def test_sine_mode_uncoupled_at_centre():
    cfg = SystemConfig(Cavity(2, 1.0), DipoleSpec([0.0]), CouplingSpec("theta", 0.5))
    h = build_coulomb(cfg).matrix
    n = cfg.n_total
    for idx in (2, n + 2):          # the n=2 mode and its conjugate
        off = np.delete(h[idx], idx)
        assert np.max(np.abs(off)) == 0.0
    assert h[2, 2] == pytest.approx(2.0)


def test_single_dipole_self_interaction_real_positive():
    cfg = cavity_cfg(n=40, wc=0.05, value=0.5)
    omega = dipole_self_interaction(cfg)
    assert abs(omega[0, 0].imag) < 1e-14
    assert omega[0, 0].real > 0


@pytest.mark.parametrize("theta", [1e-3, 1.0, 10.0])
def test_gauges_share_the_spectrum(theta):
    cfg = SystemConfig(Cavity(60, 0.05), DipoleSpec([0.4, -2.0]), CouplingSpec("theta", theta))
    lc = diagonalize(build_coulomb(cfg)).frequencies
    ld = diagonalize(build_dipole_gauge(cfg)).frequencies
    assert np.max(np.abs(lc - ld) / lc) <= 1e-8


def test_quantum_optical_agrees_at_weak_coupling():
    cfg = SystemConfig(Cavity(60, 0.05), DipoleSpec([0.0]), CouplingSpec("theta", 1e-3))
    lc = diagonalize(build_coulomb(cfg)).frequencies
    lq = diagonalize(build_quantum_optical(cfg)).frequencies
    near = np.abs(lc - 1.0) < 0.2
    assert np.max(np.abs(lc[near] - lq[near]) / lc[near]) <= 1e-4


def test_quantum_optical_unstable_at_theta_one():
    cfg = SystemConfig(Cavity(200, 0.01), DipoleSpec([0.0]), CouplingSpec("theta", 1.0))
    assert dynamical_spectrum(build_quantum_optical(cfg)).max_imag > 0
    assert not diagonalize(build_quantum_optical(cfg)).stable


def test_lowest_mode_matches_truncated_fock():
    # one dipole and one resonant mode; 40 levels each (dimension 1600)
    cfg = SystemConfig(Cavity(1, 1.0), DipoleSpec([0.0]), CouplingSpec("theta", 0.1))
    lam = diagonalize(build_coulomb(cfg)).frequencies
    f = mode_amplitudes(cfg.reservoir, [0.0])[0]
    sol = solve_truncated_fock(1.0, [1.0], cfg.g0, f, [0.0, 1.0], cutoff=39, n_modes_out=2)
    assert abs(lam[0] - sol.frequencies[0]) / sol.frequencies[0] <= 1e-6


def test_gauge_parse_and_dispatch():
    cfg = cavity_cfg()
    assert Gauge.parse("quantum_optical") is Gauge.QUANTUM_OPTICAL
    assert build(cfg, "dipole").gauge is Gauge.DIPOLE
    with pytest.raises(ValueError):
        Gauge.parse("velocity")


def test_save_load_roundtrip(tmp_path):
    ham = build_dipole_gauge(cavity_cfg(x=(0.2, 0.9)))
    path = tmp_path / "h.npz"
    save_hamiltonian(path, ham)
    back = load_hamiltonian(path)
    assert np.array_equal(back.matrix, ham.matrix)
    assert back.gauge is ham.gauge and back.n_dipoles == ham.n_dipoles
