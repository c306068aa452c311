"""YAML/JSON scenario files: schema checks, defaults, and conversion to SystemConfig.

Every problem found in a file is collected and reported together, each
tagged with its key path and, when known, the line it sits on.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .analysis import Regime, classify_regime
from .model import (
    Cavity,
    CavityArray,
    ConfigError,
    CouplingSpec,
    DipoleSpec,
    SystemConfig,
    coupling_to_g0bar,
    g0bar_to_theta,
)

TOP_LEVEL = {"reservoir", "dipoles", "coupling", "overrides", "initial", "time", "sweep", "field", "labels"}
RESERVOIR_KEYS = {"variant", "N", "omega_c", "J", "a"}
VARIANTS = {"cavity": "Cavity", "cavityarray": "CavityArray", "array": "CavityArray"}
UV_FACTOR_DEFAULT = 2.0
UV_FACTOR_USC = 10.0
ARRAY_J_OVER_OMEGA_C = 0.5


@dataclass
class Scenario:
    """A loaded scenario: the physical config plus run options from the file."""

    config: SystemConfig
    normalized: dict
    initial: dict | None = None
    time: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    field: dict = field(default_factory=dict)
    source: str = "<memory>"

    @property
    def digest(self) -> str:
        blob = json.dumps(self.normalized, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


class _Problems:
    def __init__(self, lines: dict):
        self.items: list[str] = []
        self.lines = lines

    def add(self, path: str, msg: str) -> None:
        line = self.lines.get(path)
        where = f"line {line}: " if line else ""
        self.items.append(f"{where}{path}: {msg}")

    def raise_if_any(self, source: str) -> None:
        if self.items:
            body = "\n  ".join(self.items)
            raise ConfigError(f"{source}: {len(self.items)} problem(s)\n  {body}")


def _line_map(text: str) -> dict:
    """Dotted key path -> 1-based line number, from the YAML node tree."""
    out: dict = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return out

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}.{k.value}" if prefix else str(k.value)
                out[key] = k.start_mark.line + 1
                walk(v, key)

    if root is not None:
        walk(root, "")
    return out


def _number(problems, path, value, *, positive=False, integer=False, allow_none=False):
    if value is None:
        if not allow_none:
            problems.add(path, "is required")
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.add(path, f"must be a number, got {value!r}")
        return None
    if integer and (float(value) != int(value)):
        problems.add(path, f"must be an integer, got {value!r}")
        return None
    if not math.isfinite(value):
        problems.add(path, f"must be finite, got {value!r}")
        return None
    if positive and not value > 0:
        problems.add(path, f"must be strictly positive, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _list_of_numbers(problems, path, value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        problems.add(path, "must be a non-empty list of numbers")
        return None
    out = []
    for k, v in enumerate(value):
        num = _number(problems, f"{path}[{k}]", v)
        if num is None:
            return None
        out.append(num)
    return out


def _complex(value) -> complex:
    if isinstance(value, list) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    return complex(value)


def _mapping(problems, path, value, required=True):
    if value is None:
        if required:
            problems.add(path, "is required")
        return None
    if not isinstance(value, dict):
        problems.add(path, f"must be a mapping, got {type(value).__name__}")
        return None
    return value


def _unknown(problems, path, data: dict, allowed: set) -> None:
    for k in sorted(set(data) - allowed):
        problems.add(f"{path}.{k}" if path else str(k), "unknown key")


def _regime_for_uv(coupling: CouplingSpec, omega_s: float) -> Regime:
    # theta_C = g0bar / sqrt(pi c omega_s) does not depend on the cavity length
    probe = Cavity(1, 1.0)
    theta = g0bar_to_theta(coupling_to_g0bar(coupling, probe, omega_s), probe, omega_s)
    return classify_regime(theta)


def parse_scenario(data: Any, source: str = "<memory>", lines: dict | None = None) -> Scenario:
    problems = _Problems(lines or {})
    data = _mapping(problems, "<root>", data)
    if data is None:
        problems.raise_if_any(source)
    _unknown(problems, "", data, TOP_LEVEL)

    # coupling
    coupling = None
    c = _mapping(problems, "coupling", data.get("coupling"))
    if c is not None:
        _unknown(problems, "coupling", c, {"kind", "value"})
        kind = c.get("kind")
        if kind not in ("g0bar", "phi", "theta"):
            problems.add("coupling.kind", f"must be one of g0bar, phi, theta; got {kind!r}")
        value = _number(problems, "coupling.value", c.get("value"), positive=True)
        if kind in ("g0bar", "phi", "theta") and value is not None:
            coupling = CouplingSpec(kind, value)

    overrides = _mapping(problems, "overrides", data.get("overrides"), required=False) or {}
    _unknown(problems, "overrides", overrides, {"uv_cutoff", "detuning"})
    uv_override = _number(problems, "overrides.uv_cutoff", overrides.get("uv_cutoff"), positive=True, allow_none=True)
    detuning = _number(problems, "overrides.detuning", overrides.get("detuning"), allow_none=True)

    # reservoir
    r = _mapping(problems, "reservoir", data.get("reservoir"))
    variant = None
    if r is not None:
        _unknown(problems, "reservoir", r, RESERVOIR_KEYS)
        raw_variant = str(r.get("variant", "")).replace("_", "").replace("-", "").lower()
        variant = VARIANTS.get(raw_variant)
        if variant is None:
            problems.add("reservoir.variant", f"must be Cavity or CavityArray, got {r.get('variant')!r}")

    # dipoles
    dip = _mapping(problems, "dipoles", data.get("dipoles"), required=False) or {}
    _unknown(problems, "dipoles", dip, {"positions", "frequencies"})
    positions = _list_of_numbers(problems, "dipoles.positions", dip.get("positions", [0.0]))
    freq_raw = dip.get("frequencies")

    reservoir = None
    omega_s = None
    uv_used = None
    if variant == "Cavity":
        if detuning is not None:
            problems.add("overrides.detuning", "applies to the cavity array only")
        frequencies = _list_of_numbers(problems, "dipoles.frequencies", 1.0 if freq_raw is None else freq_raw)
        omega_s = frequencies[0] if frequencies else None
        n = _number(problems, "reservoir.N", r.get("N"), positive=True, integer=True, allow_none=True)
        omega_c = _number(problems, "reservoir.omega_c", r.get("omega_c"), positive=True, allow_none=True)
        for key in ("J", "a"):
            if key in r:
                problems.add(f"reservoir.{key}", "applies to the cavity array only")
        if omega_s is not None and coupling is not None:
            if uv_override is not None:
                uv_used = uv_override
            else:
                usc = _regime_for_uv(coupling, omega_s) is Regime.USC
                uv_used = (UV_FACTOR_USC if usc else UV_FACTOR_DEFAULT) * omega_s
            if n is None and omega_c is None:
                problems.add("reservoir.N", "give N or omega_c (or both)")
            elif n is None:
                n = max(1, int(round(uv_used / omega_c)))
            elif omega_c is None:
                omega_c = uv_used / n
            elif uv_override is not None and abs(n * omega_c - uv_override) > 1e-9 * uv_override:
                problems.add("overrides.uv_cutoff", f"conflicts with N * omega_c = {n * omega_c}")
            if n is not None and omega_c is not None:
                uv_used = n * omega_c
                reservoir = Cavity(n, omega_c)
    elif variant == "CavityArray":
        if uv_override is not None:
            problems.add("overrides.uv_cutoff", "applies to the cavity only; the array band is fixed by omega_c and J")
        n = _number(problems, "reservoir.N", r.get("N"), positive=True, integer=True)
        if n is not None and n % 2:
            problems.add("reservoir.N", f"must be even for the cavity array, got {n}")
        omega_c = _number(problems, "reservoir.omega_c", r.get("omega_c"), positive=True, allow_none=True)
        a = _number(problems, "reservoir.a", r.get("a", 1.0), positive=True)
        delta = 0.0 if detuning is None else detuning
        if freq_raw is None:
            frequencies = [omega_c - delta] if omega_c is not None else [1.0]
        else:
            frequencies = _list_of_numbers(problems, "dipoles.frequencies", freq_raw)
        omega_s = frequencies[0] if frequencies else None
        if omega_s is not None:
            if omega_c is None:
                omega_c = omega_s + delta
            elif detuning is not None and abs((omega_c - omega_s) - detuning) > 1e-12 * omega_c:
                problems.add("overrides.detuning", f"conflicts with omega_c - omega_s = {omega_c - omega_s}")
        j = _number(problems, "reservoir.J", r.get("J", None if omega_c is None else ARRAY_J_OVER_OMEGA_C * omega_c), positive=True)
        if j is not None and omega_c is not None and j >= omega_c:
            problems.add("reservoir.J", f"J = {j} >= omega_c = {omega_c}: violates the positive-frequency constraint 0 < J < omega_c")
        if None not in (n, omega_c, j, a) and n % 2 == 0 and j < omega_c:
            reservoir = CavityArray(n, omega_c, j, a)
            if omega_s is not None and abs(omega_c - omega_s) >= j:
                problems.add("dipoles.frequencies", f"omega_s = {omega_s} lies outside the band [{omega_c - j}, {omega_c + j}]")
    else:
        frequencies = None

    if frequencies is not None and positions is not None:
        if len(frequencies) == 1 and len(positions) > 1:
            frequencies = frequencies * len(positions)
        if len(frequencies) != len(positions):
            problems.add("dipoles.frequencies", f"{len(frequencies)} frequencies for {len(positions)} positions")
        if any(w <= 0 for w in frequencies):
            problems.add("dipoles.frequencies", "all frequencies must be strictly positive")

    config = None
    if reservoir is not None and coupling is not None and positions is not None and not problems.items:
        try:
            config = SystemConfig(reservoir, DipoleSpec(positions, frequencies), coupling,
                                  labels=dict(data.get("labels") or {}))
        except ConfigError as exc:
            problems.add("dipoles.positions", str(exc))

    initial = data.get("initial")
    if initial is not None:
        initial = _mapping(problems, "initial", initial)
        if initial is not None:
            _check_initial(problems, initial, len(positions or []))
    time = _mapping(problems, "time", data.get("time"), required=False) or {}
    _unknown(problems, "time", time, {"t_max", "samples", "coarse_grain"})
    if "t_max" in time:
        _number(problems, "time.t_max", time["t_max"], positive=True)
    if "samples" in time:
        s = _number(problems, "time.samples", time["samples"], integer=True)
        if s is not None and s < 2:
            problems.add("time.samples", f"must be at least 2, got {s}")
    sweep = _mapping(problems, "sweep", data.get("sweep"), required=False) or {}
    fld = _mapping(problems, "field", data.get("field"), required=False) or {}

    problems.raise_if_any(source)

    normalized = {
        "reservoir": _reservoir_dict(reservoir),
        "dipoles": {"positions": list(positions), "frequencies": list(frequencies)},
        "coupling": {"kind": coupling.kind, "value": coupling.value},
        "overrides": {"uv_cutoff": uv_used, "detuning": config.detuning},
        "initial": initial,
        "time": time,
        "sweep": sweep,
        "field": fld,
    }
    return Scenario(config, normalized, initial, time, sweep, fld, source)


def _reservoir_dict(res) -> dict:
    if isinstance(res, Cavity):
        return {"variant": "Cavity", "N": res.num_modes, "omega_c": res.omega_c}
    return {"variant": "CavityArray", "N": res.num_sites, "omega_c": res.omega_c, "J": res.J, "a": res.a}


def _check_initial(problems, spec: dict, nd: int) -> None:
    kind = spec.get("kind")
    if kind == "fock":
        occ = spec.get("occupations")
        vals = _list_of_numbers(problems, "initial.occupations", occ)
        if vals is not None:
            if len(vals) not in (1, nd):
                problems.add("initial.occupations", f"need 1 or {nd} entries, got {len(vals)}")
            if any(v < 0 for v in vals):
                problems.add("initial.occupations", "occupations must be non-negative")
    elif kind == "coherent":
        amps = spec.get("amplitudes")
        if not isinstance(amps, list):
            amps = [amps]
        try:
            parsed = [_complex(v) for v in amps]
        except (TypeError, ValueError):
            problems.add("initial.amplitudes", f"cannot parse {amps!r} as complex numbers")
        else:
            if len(parsed) not in (1, nd):
                problems.add("initial.amplitudes", f"need 1 or {nd} entries, got {len(parsed)}")
    elif kind == "bell":
        if spec.get("sign", 1) not in (1, -1, "+", "-"):
            problems.add("initial.sign", f"must be +1 or -1, got {spec.get('sign')!r}")
        pair = spec.get("pair", [0, 1])
        if nd < 2:
            problems.add("initial.kind", "a Bell state needs at least two dipoles")
        elif not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(p, int) and 0 <= p < nd for p in pair)
                  and pair[0] != pair[1]):
            problems.add("initial.pair", f"must name two distinct dipoles in 0..{nd - 1}, got {pair!r}")
    else:
        problems.add("initial.kind", f"must be fock, coherent or bell; got {kind!r}")


def initial_state(spec: dict | None, n_dipoles: int):
    """Build the dynamics InitialStateSpec for an ``initial`` block (default: Fock 1 on every dipole)."""
    from .dynamics import CoherentProduct, FockProduct, TwoModeBell

    if spec is None:
        return FockProduct([1.0] * n_dipoles)
    kind = spec["kind"]
    if kind == "fock":
        occ = spec["occupations"]
        occ = occ if isinstance(occ, list) else [occ]
        return FockProduct(occ * n_dipoles if len(occ) == 1 else occ)
    if kind == "coherent":
        amps = spec["amplitudes"]
        amps = [_complex(v) for v in (amps if isinstance(amps, list) else [amps])]
        return CoherentProduct(amps * n_dipoles if len(amps) == 1 else amps)
    sign = spec.get("sign", 1)
    sign = {"+": 1, "-": -1}.get(sign, sign)
    return TwoModeBell(int(sign), tuple(spec.get("pair", (0, 1))))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError(f"{path}: {where}not valid YAML/JSON ({getattr(exc, 'problem', exc)})") from exc
    return parse_scenario(data, str(path), _line_map(text))
