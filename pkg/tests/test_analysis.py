import numpy as np
import pytest

from oscidissip import Cavity, CavityArray, CouplingSpec, DipoleSpec, SystemConfig, build_coulomb, diagonalize
from oscidissip import analysis as an
from oscidissip import derived_constants, reservoir_spectrum
from oscidissip import dynamics as dy


def test_coarse_grain_keeps_constants():
    y = np.full(500, 3.25)
    assert np.allclose(an.coarse_grain(y, 0.1, 2.0), 3.25, rtol=1e-14)


def test_coarse_grain_removes_one_period():
    dt, period = 0.01, 2 * np.pi
    t = np.arange(0, 60, dt)
    cg = an.coarse_grain(np.sin(2 * np.pi * t / period), dt, period)
    inner = (t > period) & (t < t[-1] - period)
    assert np.max(np.abs(cg[inner])) < 0.05


def test_coarse_grain_rejects_tiny_window():
    with pytest.raises(ValueError):
        an.coarse_grain(np.ones(10), 0.1, 0.01)


def test_default_windows():
    cav = SystemConfig(Cavity(100, 0.04), DipoleSpec([0.0], [1.5]), CouplingSpec("phi", 0.01))
    arr = SystemConfig(CavityArray(100, 2.0, 0.5), DipoleSpec([0], [2.0]), CouplingSpec("phi", 0.01))
    assert derived_constants(cav).t_exc == pytest.approx(2 * np.pi / 1.5)
    assert derived_constants(arr).t_exc == pytest.approx(2 * np.pi / 0.5)


@pytest.mark.parametrize("theta,label", [(0.0564, "WC"), (10**-0.1, "USC"), (0.1, "USC"), (1.0, "USC"),
                                         (100.0, "AdC")])
def test_regimes(theta, label):
    assert an.classify_regime(theta).value == label


def test_regime_needs_positive_theta():
    with pytest.raises(ValueError):
        an.classify_regime(0.0)


def test_dominant_frequency_of_sine():
    dt, n = 0.05, 4000
    t = np.arange(n) * dt
    w = 1.37
    est = an.dominant_frequency(np.sin(w * t), dt)
    assert abs(est - w) <= 2 * np.pi / (n * dt)


def test_dominant_frequency_rejects_constant_and_short():
    with pytest.raises(ValueError):
        an.dominant_frequency(np.ones(200), 0.1)
    with pytest.raises(ValueError):
        an.dominant_frequency(np.sin(np.arange(10.0)), 0.1)


def test_deep_coupling_population_beats_at_twice_lowest_frequency():
    cfg = SystemConfig(Cavity(1000, 0.002), DipoleSpec([0.0]), CouplingSpec("theta", 100.0))
    d = diagonalize(build_coulomb(cfg))
    lam1 = d.frequencies[0]
    times = np.linspace(0, 20 * np.pi / lam1, 4096)
    cz = dy.to_polariton_frame(dy.initial_correlations(dy.FockProduct([1]), cfg), d)
    n = dy.population_series(cz, d, times)[0]
    est = an.dominant_frequency(n, times[1] - times[0])
    assert abs(est - 2 * lam1) <= 0.01 * 2 * lam1


def test_fit_decay_rate():
    t = np.linspace(0, 10, 50)
    assert an.fit_decay_rate(t, 3 * np.exp(-0.4 * t)) == pytest.approx(0.4)


def sweep_cfg():
    return SystemConfig(Cavity(100, 0.02), DipoleSpec([0.0]), CouplingSpec("theta", 1.0))


def test_sweep_bare_limit_and_monotone_soft_mode():
    table = an.spectrum_vs_coupling(sweep_cfg(), [1e-5, 1.0, 10.0, 100.0, 1000.0], k=6)
    bare = np.sort(np.concatenate([[1.0], reservoir_spectrum(sweep_cfg().reservoir)]))[:6]
    assert np.allclose(table.rows[0].frequencies, bare, rtol=1e-6)
    lam1 = [r.frequencies[0] for r in table.rows]
    assert all(a > b for a, b in zip(lam1[1:], lam1[2:]))
    last = table.rows[-1].frequencies
    # coupled polaritons at indices 2, 4 sit just above the uncoupled even modes
    assert last[4] - last[2] == pytest.approx(2 * 0.02, rel=0.01)
    arr = table.as_array()
    assert arr.shape == (5, len(table.header()))


def test_sweep_parallel_matches_serial():
    thetas = np.logspace(-2, 2, 6)
    a = an.spectrum_vs_coupling(sweep_cfg(), thetas, k=3, jobs=1).as_array()
    b = an.spectrum_vs_coupling(sweep_cfg(), thetas[::-1], k=3, jobs=2).as_array()
    assert np.array_equal(a, b)


def test_sweep_marks_unstable_rows():
    cfg = SystemConfig(Cavity(100, 0.02), DipoleSpec([0.0]), CouplingSpec("theta", 1.0))
    table = an.spectrum_vs_coupling(cfg, [1e-3, 2.0], k=2, gauge="qoptical")
    assert table.rows[0].stable and not table.rows[1].stable
    assert table.rows[1].max_imag > 0
