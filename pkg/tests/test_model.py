import numpy as np
import pytest
from scipy.integrate import trapezoid

from oscidissip import (
    Cavity,
    CavityArray,
    ConfigError,
    CouplingSpec,
    DipoleSpec,
    SystemConfig,
    derived_constants,
    effective_array_coupling,
    mode_amplitude,
    reservoir_spectrum,
)
from oscidissip.model import mode_amplitudes


def test_cavity_spectrum_is_harmonic():
    assert np.allclose(reservoir_spectrum(Cavity(3, 1.0)), [1, 2, 3])


def test_small_array_spectrum():
    assert np.allclose(sorted(reservoir_spectrum(CavityArray(4, 2.0, 1.0))), [1, 2, 2, 3])


def test_array_band_edges():
    w = reservoir_spectrum(CavityArray(500, 2.0, 1.0))
    assert w.min() == pytest.approx(1.0)
    assert w.max() == pytest.approx(3.0)
    assert 0.5 * (w.min() + w.max()) == pytest.approx(2.0)


def test_cavity_mode_functions_at_centre():
    cav = Cavity(4, 1.0)
    assert abs(mode_amplitude(cav, 2, 0.0)) < 1e-14
    assert mode_amplitude(cav, 1, 0.0) == pytest.approx(np.sqrt(2))


def test_cavity_modes_vanish_on_mirrors():
    cav = Cavity(7, 0.3)
    f = mode_amplitudes(cav, [-cav.length / 2, cav.length / 2])
    assert np.max(np.abs(f)) < 1e-12


def test_array_mode_phase():
    arr = CavityArray(8, 2.0, 1.0)
    assert mode_amplitude(arr, 1, arr.length / 4) == pytest.approx(-1j)


def test_mode_normalisation():
    cav = Cavity(5, 1.0)
    x = np.linspace(-cav.length / 2, cav.length / 2, 20001)
    f = mode_amplitudes(cav, x)
    norms = trapezoid(np.abs(f) ** 2, x, axis=0)   # f has shape (len(x), N)
    assert np.allclose(norms, cav.length, rtol=1e-6)


@pytest.mark.parametrize(
    "bad",
    [lambda: Cavity(0, 1.0), lambda: Cavity(3, -1.0), lambda: CavityArray(5, 2.0, 1.0),
     lambda: CavityArray(4, 1.0, 1.0), lambda: DipoleSpec([0.0], [-1.0]), lambda: CouplingSpec("phi", 0.0)],
)
def test_invalid_inputs_raise(bad):
    with pytest.raises(ConfigError):
        bad()


def test_dipole_outside_reservoir_rejected():
    with pytest.raises(ConfigError):
        SystemConfig(Cavity(10, 1.0), DipoleSpec([100.0]), CouplingSpec("phi", 0.01))


def test_cavity_derived_constants():
    cfg = SystemConfig(Cavity(1000, 0.002), DipoleSpec([0.0]), CouplingSpec("phi", 0.01))
    dc = derived_constants(cfg)
    assert dc.gamma == pytest.approx(0.02)
    assert dc.theta == pytest.approx(np.sqrt(0.01 / np.pi))
    assert dc.theta == pytest.approx(0.0564, abs=1e-4)


def test_array_derived_constants():
    cfg = SystemConfig(CavityArray(500, 2.0, 1.0), DipoleSpec([0], [2.0]), CouplingSpec("phi", 0.04))
    dc = derived_constants(cfg)
    assert dc.gamma == pytest.approx(0.04 * 1.0)
    assert dc.markov_margin == pytest.approx(20.0)


def test_coupling_measures_are_consistent():
    base = SystemConfig(Cavity(200, 0.01), DipoleSpec([0.0]), CouplingSpec("theta", 0.3))
    for kind, value in (("g0bar", base.g0bar), ("phi", base.phi)):
        other = base.with_coupling(kind, value)
        assert other.theta == pytest.approx(0.3, rel=1e-12)


def test_array_integral_factor():
    cfg = SystemConfig(CavityArray(500, 2.0, 1.0), DipoleSpec([0], [2.0]), CouplingSpec("phi", 0.02))
    ac = effective_array_coupling(cfg)
    assert ac.integral_factor == pytest.approx(np.pi / np.sqrt(3))
    assert ac.mode_sum == pytest.approx(ac.closed_form, rel=1e-2)


def test_array_flat_band_limit():
    n = 40
    cfg = SystemConfig(CavityArray(n, 2.0, 1e-9), DipoleSpec([0], [2.0]), CouplingSpec("g0bar", 0.3))
    ac = effective_array_coupling(cfg)
    assert ac.mode_sum == pytest.approx(n * cfg.g0**2, rel=1e-6)
