"""Command-line front end: one scenario file in, CSV tables (plus JSON sidecars) out."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis, dynamics, lindblad
from .bogoliubov import UnstableHamiltonianError, diagonalize, dynamical_spectrum, matter_fractions
from .config import Scenario, initial_state, load_scenario
from .hamiltonian import Gauge, build
from .io import write_csv, write_sidecar
from .model import Cavity, ConfigError, derived_constants

log = logging.getLogger("oscidissip")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_UNSTABLE = 0, 1, 2, 3
COMMANDS = ("spectrum", "evolve", "lindblad", "classify", "sweep", "polariton-field", "validate")


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------

def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _samples(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"need at least 2 samples, got {text}")
    return v


def _jobs(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"jobs must be >= 1, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file (YAML or JSON)")
    common.add_argument("--out", help="output CSV path (default: <config stem>.<command>.csv)")
    common.add_argument("--gauge", choices=[g.value for g in Gauge] + ["auto"], default=None,
                        help="Hamiltonian form; 'auto' picks dipole at weak coupling, coulomb otherwise")
    common.add_argument("--jobs", type=_jobs, default=None, help="worker processes (env OSCIDISSIP_JOBS)")
    common.add_argument("-v", "--verbose", action="store_true")

    timed = argparse.ArgumentParser(add_help=False)
    timed.add_argument("--tmax", type=_positive_float, help="final time (default 3/gamma)")
    timed.add_argument("--samples", type=_samples, help="number of time samples")
    timed.add_argument("--coarse-grain", nargs="?", const="auto", default=None, metavar="WINDOW",
                       help="rolling-average window (default window: t_exc)")

    p = argparse.ArgumentParser(prog="oscidissip", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("spectrum", parents=[common], help="normal-mode frequencies and matter fractions")
    ev = sub.add_parser("evolve", parents=[common, timed], help="exact dipole populations in time")
    ev.add_argument("--field-map", help="also write a long-format (t, x, value) reservoir map here")
    ev.add_argument("--field-points", type=int, default=201, help="cavity positions in the field map")
    ev.add_argument("--field-stride", type=int, default=10, help="use every k-th time sample in the map")
    sub.add_parser("lindblad", parents=[common, timed], help="Markovian master-equation reference series")
    sub.add_parser("classify", parents=[common], help="derived constants, regime and retardation times")
    sw = sub.add_parser("sweep", parents=[common], help="spectrum versus theta")
    sw.add_argument("--theta-min", type=_positive_float)
    sw.add_argument("--theta-max", type=_positive_float)
    sw.add_argument("--points", type=_samples)
    sw.add_argument("--k", type=int, default=None, help="number of lowest modes per row")
    pf = sub.add_parser("polariton-field", parents=[common], help="single-polariton field / photon profiles")
    pf.add_argument("--modes", default=None, help="comma-separated 1-based polariton indices (default 1,3,5,7)")
    pf.add_argument("--field-points", type=int, default=201)
    pf.add_argument("--ordering", choices=["dressed", "bare"], default="dressed",
                    help="normal ordering in polariton (dressed) or bare reservoir operators")
    va = sub.add_parser("validate", help="check a scenario file and echo the normalized config")
    va.add_argument("--config", required=True)
    va.add_argument("-v", "--verbose", action="store_true")
    return p


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------

def _out_path(args, scenario: Scenario) -> Path:
    if args.out:
        return Path(args.out)
    stem = Path(scenario.source).with_suffix("")
    return stem.with_name(f"{stem.name}.{args.command}.csv")


def _gauge(args, scenario: Scenario, fallback: str) -> Gauge:
    choice = args.gauge or fallback
    if choice == "auto":
        regime = analysis.classify_regime(scenario.config.theta)
        return Gauge.DIPOLE if regime is analysis.Regime.WC else Gauge.COULOMB
    return Gauge.parse(choice)


def _metadata(args, scenario: Scenario, columns, **extra) -> dict:
    cfg = scenario.config
    meta = {
        "command": args.command,
        "version": __version__,
        "config_sha256": scenario.digest,
        "config": scenario.normalized,
        "columns": list(columns),
        "theta": cfg.theta,
        "regime": analysis.classify_regime(cfg.theta).value,
    }
    try:
        meta["derived"] = derived_constants(cfg).as_dict()
    except ConfigError as exc:
        meta["derived"] = {"error": str(exc)}
    meta.update(extra)
    return meta


def _emit(args, scenario, columns, rows, comments, **extra) -> Path:
    path = _out_path(args, scenario)
    write_csv(path, columns, rows, comments)
    write_sidecar(path, _metadata(args, scenario, columns, **extra))
    print(f"wrote {path}")
    return path


def _time_grid(args, scenario: Scenario, uv: float) -> np.ndarray:
    opts = scenario.time
    t_max = args.tmax or opts.get("t_max")
    if t_max is None:
        t_max = 3.0 / derived_constants(scenario.config).gamma
    samples = args.samples or opts.get("samples")
    return dynamics.default_time_grid(float(t_max), uv, samples)


def _window(args, scenario: Scenario):
    choice = args.coarse_grain if args.coarse_grain is not None else scenario.time.get("coarse_grain")
    if choice in (None, False):
        return None
    if choice in ("auto", True):
        return derived_constants(scenario.config).t_exc
    return float(choice)


def _uv_frequency(scenario: Scenario) -> float:
    res = scenario.config.reservoir
    top = res.uv_cutoff if isinstance(res, Cavity) else res.omega_c + res.J
    return max(top, max(scenario.config.dipoles.frequencies))


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_spectrum(args, scenario: Scenario) -> int:
    gauge = _gauge(args, scenario, "coulomb")
    ham = build(scenario.config, gauge)
    decomp = diagonalize(ham)
    comments = {"gauge": gauge.value, "stable": decomp.stable, "min_eigenvalue": decomp.min_eigenvalue}
    if decomp.stable:
        chi = matter_fractions(decomp)
        rows = [(i + 1, lam, c) for i, (lam, c) in enumerate(zip(decomp.frequencies, chi))]
        _emit(args, scenario, ["index", "lambda", "chi"], rows, comments, gauge=gauge.value, stable=True)
        return EXIT_OK
    spec = dynamical_spectrum(ham)
    mu = spec.frequencies
    mu = mu[np.lexsort((mu.imag, mu.real))]
    mu = mu[mu.real >= 0][: ham.n_total]
    comments["max_imag"] = spec.max_imag
    rows = [(i + 1, m.real, m.imag) for i, m in enumerate(mu)]
    log.warning("%s gauge is unstable (min eigenvalue %.3g); wrote the complex dynamical spectrum",
                gauge.value, decomp.min_eigenvalue)
    _emit(args, scenario, ["index", "mu_real", "mu_imag"], rows, comments,
          gauge=gauge.value, stable=False, max_imag=spec.max_imag)
    return EXIT_OK


def cmd_evolve(args, scenario: Scenario) -> int:
    cfg = scenario.config
    gauge = _gauge(args, scenario, "auto")
    decomp = diagonalize(build(cfg, gauge)).require_stable()
    uv = max(_uv_frequency(scenario), float(decomp.frequencies[-1]))
    times = _time_grid(args, scenario, uv)
    init = initial_state(scenario.initial, cfg.n_dipoles)
    corr_z = dynamics.to_polariton_frame(dynamics.initial_correlations(init, cfg), decomp)
    pops = dynamics.population_series(corr_z, decomp, times)
    nexc = pops.sum(axis=0)
    dt = float(times[1] - times[0])
    window = _window(args, scenario)
    columns = ["t"] + [f"n_{i + 1}" for i in range(cfg.n_dipoles)] + ["N_exc"]
    data = [times, *pops, nexc]
    smooth = nexc
    if window is not None:
        smooth = analysis.coarse_grain(nexc, dt, window)
        columns.append("N_exc_cg")
        data.append(smooth)
    if times.size >= 3:
        columns.append("I")
        data.append(dynamics.radiated_intensity(smooth, cfg.omega_ref, dt))
    comments = {"source": "exact", "gauge": gauge.value, "initial": type(init).__name__,
                "coarse_grain_window": "none" if window is None else window}
    _emit(args, scenario, columns, np.column_stack(data), comments, gauge=gauge.value,
          coarse_grain_window=window, frequencies_min=float(decomp.frequencies[0]))
    if args.field_map:
        _write_field_map(args, scenario, decomp, corr_z, times)
    return EXIT_OK


def _field_positions(cfg, points: int) -> np.ndarray:
    res = cfg.reservoir
    if isinstance(res, Cavity):
        return np.linspace(-res.length / 2, res.length / 2, max(points, 2))
    return np.arange(res.num_sites) * res.a


def _write_field_map(args, scenario, decomp, corr_z, times) -> None:
    cfg = scenario.config
    xs = _field_positions(cfg, args.field_points)
    weights = (dynamics.field_weights if isinstance(cfg.reservoir, Cavity) else dynamics.site_weights)(cfg, xs)
    sel = times[:: max(1, args.field_stride)]
    values = dynamics.functional_series(corr_z, decomp, weights, sel)
    values = np.maximum(values, 0.0)
    tt, xx = np.meshgrid(sel, xs, indexing="ij")
    rows = np.column_stack([tt.ravel(), xx.ravel(), values.T.ravel()])
    kind = "field_intensity" if isinstance(cfg.reservoir, Cavity) else "site_photon_number"
    path = Path(args.field_map)
    write_csv(path, ["t", "x", kind], rows, {"source": "exact", "observable": kind})
    write_sidecar(path, _metadata(args, scenario, ["t", "x", kind], observable=kind))
    print(f"wrote {path}")


def cmd_lindblad(args, scenario: Scenario) -> int:
    cfg = scenario.config
    rates = lindblad.collective_rates(cfg)
    g = lindblad.g_matrix(rates)
    times = _time_grid(args, scenario, _uv_frequency(scenario))
    init = initial_state(scenario.initial, cfg.n_dipoles)
    c0 = lindblad.dipole_moments(dynamics.initial_correlations(init, cfg))
    nexc = lindblad.me_total_excitation(g, c0, times)
    inten = lindblad.me_intensity(g, rates.gamma, c0, times, cfg.omega_ref)
    columns = ["t", "N_exc", "I", "I_coherent", "I_incoherent"]
    rows = np.column_stack([times, nexc, inten.total, inten.coherent, inten.incoherent])
    comments = {"source": "lindblad", "gamma0": rates.gamma0, "initial": type(init).__name__}
    _emit(args, scenario, columns, rows, comments, source="lindblad", gamma0=rates.gamma0)
    return EXIT_OK


def cmd_classify(args, scenario: Scenario) -> int:
    cfg = scenario.config
    dc = derived_constants(cfg)
    regime = analysis.classify_regime(cfg.theta)
    comments = {"regime": regime.value, "theta": cfg.theta, "phi": cfg.phi}
    comments.update({k: ("none" if v is None else v) for k, v in dc.as_dict().items()})
    rates = None
    try:
        rates = lindblad.collective_rates(cfg)
    except ConfigError as exc:
        log.info("no collective rates: %s", exc)
    x = cfg.dipoles.positions
    rows = []
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            ret = lindblad.retardation_time(cfg, x[j] - x[i])
            gij = rates.gamma[i, j] if rates is not None else float("nan")
            oij = rates.omega[i, j] if rates is not None else float("nan")
            rows.append((i + 1, j + 1, abs(x[j] - x[i]), ret.t_ret, ret.markov_ratio, gij, oij))
    columns = ["i", "j", "dx", "t_ret", "markov_ratio", "Gamma_ij", "Omega_ij"]
    print(json.dumps({"regime": regime.value, "theta": cfg.theta, "markov_margin": dc.markov_margin,
                      "gamma": dc.gamma, "t_exc": dc.t_exc, "t_fin": dc.t_fin}, sort_keys=True))
    _emit(args, scenario, columns, rows, comments)
    return EXIT_OK


def cmd_sweep(args, scenario: Scenario) -> int:
    opts = scenario.sweep
    t_min = args.theta_min or opts.get("theta_min", 1e-3)
    t_max = args.theta_max or opts.get("theta_max", 1e2)
    points = args.points or opts.get("points", 21)
    k = args.k or opts.get("k", 4)
    if t_max < t_min:
        raise ConfigError(f"sweep: theta_max {t_max} < theta_min {t_min}")
    thetas = np.logspace(np.log10(t_min), np.log10(t_max), int(points))
    gauge = _gauge(args, scenario, "coulomb")
    table = analysis.spectrum_vs_coupling(scenario.config, thetas, k=int(k), gauge=gauge, jobs=args.jobs)
    unstable = sum(not r.stable for r in table.rows)
    _emit(args, scenario, table.header(), table.as_array(), {"gauge": gauge.value, "unstable_rows": unstable},
          gauge=gauge.value, unstable_rows=unstable)
    return EXIT_OK


def cmd_polariton_field(args, scenario: Scenario) -> int:
    cfg = scenario.config
    gauge = _gauge(args, scenario, "coulomb")
    decomp = diagonalize(build(cfg, gauge)).require_stable()
    modes = args.modes or ",".join(str(m) for m in scenario.field.get("modes", [1, 3, 5, 7]))
    idx = [int(m) for m in str(modes).split(",") if m.strip()]
    for j in idx:
        if not 1 <= j <= decomp.n_total:
            raise ConfigError(f"polariton index {j} outside 1..{decomp.n_total}")
    xs = _field_positions(cfg, args.field_points)
    rows = []
    for j in idx:
        vals = dynamics.polariton_fock_observable(decomp, j - 1, xs, cfg, args.ordering)
        rows.extend((j, decomp.frequencies[j - 1], x, v) for x, v in zip(xs, vals))
    kind = "field_intensity" if isinstance(cfg.reservoir, Cavity) else "site_photon_number"
    comments = {"gauge": gauge.value, "observable": kind, "ordering": args.ordering}
    _emit(args, scenario, ["j", "lambda_j", "x", kind], rows, comments, gauge=gauge.value, ordering=args.ordering)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(args.config)
    out = {"config": scenario.normalized, "config_sha256": scenario.digest,
           "theta": scenario.config.theta, "regime": analysis.classify_regime(scenario.config.theta).value}
    try:
        out["derived"] = derived_constants(scenario.config).as_dict()
    except ConfigError as exc:
        out["derived"] = {"error": str(exc)}
    print(json.dumps(out, sort_keys=True, indent=2, default=float))
    return EXIT_OK


HANDLERS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "lindblad": cmd_lindblad,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "polariton-field": cmd_polariton_field,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", None) is not None:
        os.environ["OSCIDISSIP_JOBS"] = str(args.jobs)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        scenario = load_scenario(args.config)
        return HANDLERS[args.command](args, scenario)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableHamiltonianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
