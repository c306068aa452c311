"""Physical configuration: reservoirs, dipoles, couplings and derived constants.

Units are fixed throughout the package: hbar = 1, c = 1, and frequencies are
measured in the units of the first dipole's frequency (which is 1 unless the
configuration says otherwise).  The charge, mass, permittivity and transverse
area never appear individually; they are absorbed into the size-independent
coupling ``g0bar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

SPEED_OF_LIGHT = 1.0


class ConfigError(ValueError):
    """Raised when a configuration violates a physical or structural invariant."""


@dataclass(frozen=True)
class Cavity:
    """Ideal 1-D cavity between mirrors at x = -L/2 and x = +L/2.

    Modes are standing waves with frequencies ``n * omega_c`` for n = 1..N.
    """

    num_modes: int
    omega_c: float

    def __post_init__(self):
        if int(self.num_modes) != self.num_modes or self.num_modes < 1:
            raise ConfigError(f"cavity needs N >= 1 modes, got {self.num_modes}")
        if not self.omega_c > 0:
            raise ConfigError(f"cavity fundamental frequency must be positive, got {self.omega_c}")

    @property
    def length(self) -> float:
        return SPEED_OF_LIGHT * math.pi / self.omega_c

    @property
    def uv_cutoff(self) -> float:
        return self.num_modes * self.omega_c

    @property
    def mode_indices(self) -> np.ndarray:
        return np.arange(1, self.num_modes + 1)

    def contains(self, x: float) -> bool:
        return abs(x) <= self.length / 2 * (1 + 1e-12)


@dataclass(frozen=True)
class CavityArray:
    """Periodic array of N coupled resonators with hopping J and spacing a.

    Modes are travelling waves ``exp(-i k_n x)`` with k_n = 2 pi n / (N a) and
    frequencies ``omega_c - J cos(k_n a)`` for n = -N/2+1 .. N/2.
    """

    num_sites: int
    omega_c: float
    J: float
    a: float = 1.0

    def __post_init__(self):
        if int(self.num_sites) != self.num_sites or self.num_sites < 2 or self.num_sites % 2:
            raise ConfigError(f"cavity array needs an even number of sites, got {self.num_sites}")
        if not self.a > 0:
            raise ConfigError(f"lattice spacing must be positive, got {self.a}")
        if not self.J > 0:
            raise ConfigError(f"hopping J must be positive, got {self.J}")
        if not self.J < self.omega_c:
            raise ConfigError(
                f"hopping J={self.J} must be below omega_c={self.omega_c} "
                "so that every mode frequency omega_c - J cos(ka) stays positive"
            )

    @property
    def num_modes(self) -> int:
        return self.num_sites

    @property
    def length(self) -> float:
        return self.num_sites * self.a

    @property
    def mode_indices(self) -> np.ndarray:
        return np.arange(-self.num_sites // 2 + 1, self.num_sites // 2 + 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * self.mode_indices / self.length

    def contains(self, x: float) -> bool:
        return -1e-12 * self.length <= x < self.length


Reservoir = Union[Cavity, CavityArray]


@dataclass(frozen=True)
class DipoleSpec:
    positions: tuple
    frequencies: tuple

    def __init__(self, positions: Sequence[float], frequencies: Sequence[float] | float = 1.0):
        positions = tuple(float(x) for x in np.atleast_1d(positions))
        if np.ndim(frequencies) == 0:
            frequencies = (float(frequencies),) * len(positions)
        frequencies = tuple(float(w) for w in frequencies)
        if len(positions) < 1:
            raise ConfigError("at least one dipole is required")
        if len(frequencies) != len(positions):
            raise ConfigError(
                f"{len(positions)} dipole positions but {len(frequencies)} frequencies"
            )
        if any(not w > 0 for w in frequencies):
            raise ConfigError(f"dipole frequencies must be positive, got {frequencies}")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "frequencies", frequencies)

    @property
    def count(self) -> int:
        return len(self.positions)


COUPLING_KINDS = ("g0bar", "phi", "theta")


@dataclass(frozen=True)
class CouplingSpec:
    """One of three equivalent coupling measures.

    ``g0bar`` is the reservoir-size independent bare coupling, ``phi`` the
    Markovianity parameter and ``theta`` the coupling-regime parameter.  The
    meaning of ``phi``/``theta`` depends on the reservoir type.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in COUPLING_KINDS:
            raise ConfigError(f"coupling kind must be one of {COUPLING_KINDS}, got {self.kind!r}")
        if not self.value > 0:
            raise ConfigError(f"coupling value must be strictly positive, got {self.value}")


@dataclass(frozen=True)
class SystemConfig:
    reservoir: Reservoir
    dipoles: DipoleSpec
    coupling: CouplingSpec
    # reference frequency for the coupling conversions; defaults to the first dipole
    omega_ref: float | None = None
    # optional free-form labels carried into output metadata
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for x in self.dipoles.positions:
            if not self.reservoir.contains(x):
                raise ConfigError(
                    f"dipole position {x} lies outside the reservoir "
                    f"({type(self.reservoir).__name__}, L={self.reservoir.length})"
                )
        if isinstance(self.reservoir, CavityArray):
            for x in self.dipoles.positions:
                site = x / self.reservoir.a
                if abs(site - round(site)) > 1e-9:
                    raise ConfigError(f"array dipole position {x} is not on a lattice site")
        if self.omega_ref is None:
            object.__setattr__(self, "omega_ref", self.dipoles.frequencies[0])

    @property
    def n_dipoles(self) -> int:
        return self.dipoles.count

    @property
    def n_modes(self) -> int:
        return self.reservoir.num_modes

    @property
    def n_total(self) -> int:
        return self.n_dipoles + self.n_modes

    @property
    def detuning(self) -> float:
        """omega_c - omega_s for the array; 0 for the cavity."""
        if isinstance(self.reservoir, CavityArray):
            return self.reservoir.omega_c - self.omega_ref
        return 0.0

    @property
    def g0bar(self) -> float:
        return coupling_to_g0bar(self.coupling, self.reservoir, self.omega_ref)

    @property
    def g0(self) -> float:
        """Mode-level coupling g0 = g0bar / sqrt(L)."""
        return self.g0bar / math.sqrt(self.reservoir.length)

    @property
    def phi(self) -> float:
        return g0bar_to_phi(self.g0bar, self.reservoir, self.omega_ref)

    @property
    def theta(self) -> float:
        return g0bar_to_theta(self.g0bar, self.reservoir, self.omega_ref)

    def with_coupling(self, kind: str, value: float) -> "SystemConfig":
        return replace(self, coupling=CouplingSpec(kind, value))


# --------------------------------------------------------------------------
# Coupling conversions
# --------------------------------------------------------------------------

def g0bar_to_phi(g0bar: float, reservoir: Reservoir, omega_s: float) -> float:
    if isinstance(reservoir, Cavity):
        return g0bar**2 / (SPEED_OF_LIGHT * omega_s)
    return 2 * g0bar**2 / (reservoir.J**2 * reservoir.a)


def phi_to_g0bar(phi: float, reservoir: Reservoir, omega_s: float) -> float:
    if isinstance(reservoir, Cavity):
        return math.sqrt(phi * SPEED_OF_LIGHT * omega_s)
    return math.sqrt(phi * reservoir.J**2 * reservoir.a / 2)


def g0bar_to_theta(g0bar: float, reservoir: Reservoir, omega_s: float) -> float:
    if isinstance(reservoir, Cavity):
        # g_C = g0bar sqrt(omega_s / (c pi)); theta = g_C / omega_s
        return g0bar / math.sqrt(SPEED_OF_LIGHT * math.pi * omega_s)
    # g_CA^2 = g0bar^2 omega_s / (pi J a); theta = g_CA / omega_s
    return g0bar / math.sqrt(math.pi * reservoir.J * reservoir.a * omega_s)


def theta_to_g0bar(theta: float, reservoir: Reservoir, omega_s: float) -> float:
    if isinstance(reservoir, Cavity):
        return theta * math.sqrt(SPEED_OF_LIGHT * math.pi * omega_s)
    return theta * math.sqrt(math.pi * reservoir.J * reservoir.a * omega_s)


def coupling_to_g0bar(coupling: CouplingSpec, reservoir: Reservoir, omega_s: float) -> float:
    if coupling.kind == "g0bar":
        return coupling.value
    if coupling.kind == "phi":
        return phi_to_g0bar(coupling.value, reservoir, omega_s)
    return theta_to_g0bar(coupling.value, reservoir, omega_s)


# --------------------------------------------------------------------------
# Spectra and mode functions
# --------------------------------------------------------------------------

def reservoir_spectrum(spec: Reservoir) -> np.ndarray:
    """Mode frequencies in storage order.

    For the cavity the order is n = 1..N.  For the array it follows
    ``spec.mode_indices`` (n = -N/2+1 .. N/2), which is the index map used by
    every other function in the package.
    """
    if isinstance(spec, Cavity):
        return spec.omega_c * spec.mode_indices.astype(float)
    return spec.omega_c - spec.J * np.cos(spec.wavenumbers * spec.a)


def mode_amplitudes(spec: Reservoir, x) -> np.ndarray:
    """Mode functions of every mode at position(s) ``x``.

    Returns an array of shape ``(len(x), N)`` (or ``(N,)`` for scalar x),
    normalised so that the spatial average of ``|f_n|^2`` is one.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    for xv in xs:
        if not spec.contains(xv):
            raise ValueError(f"position {xv} outside the reservoir of length {spec.length}")
    if isinstance(spec, Cavity):
        n = spec.mode_indices
        phase = np.outer(xs, n * np.pi / spec.length)
        out = np.where(n % 2 == 0, np.sqrt(2) * np.sin(phase), np.sqrt(2) * np.cos(phase))
    else:
        out = np.exp(-1j * np.outer(xs, spec.wavenumbers))
    return out[0] if np.ndim(x) == 0 else out


def mode_amplitude(spec: Reservoir, n: int, x: float) -> complex:
    """Mode function f_n(x) for the physical mode label ``n``."""
    idx = mode_position(spec, n)
    return mode_amplitudes(spec, x)[idx]


def mode_position(spec: Reservoir, n: int) -> int:
    """Storage index of the mode with physical label ``n``."""
    labels = spec.mode_indices
    hits = np.nonzero(labels == n)[0]
    if hits.size == 0:
        raise ValueError(f"mode label {n} not in {labels[0]}..{labels[-1]}")
    return int(hits[0])


# --------------------------------------------------------------------------
# Derived constants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivedConstants:
    gamma: float
    group_velocity: float
    t_fin: float
    t_exc: float
    markov_margin: float
    exchange_frequency: float
    theta: float
    phi: float
    g0bar: float
    g0: float
    k_s: float
    kappa: float | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def group_velocity(config: SystemConfig) -> float:
    res = config.reservoir
    if isinstance(res, Cavity):
        return SPEED_OF_LIGHT
    delta = config.detuning
    if abs(delta) >= res.J:
        raise ConfigError(
            f"dipole frequency {config.omega_ref} lies outside the array band "
            f"[{res.omega_c - res.J}, {res.omega_c + res.J}]"
        )
    return res.a * math.sqrt(res.J**2 - delta**2)


def resonant_wavenumber(config: SystemConfig) -> float:
    res = config.reservoir
    if isinstance(res, Cavity):
        return config.omega_ref / SPEED_OF_LIGHT
    return math.acos(config.detuning / res.J) / res.a


def derived_constants(config: SystemConfig) -> DerivedConstants:
    freqs = config.dipoles.frequencies
    if max(freqs) - min(freqs) > 1e-12 * max(freqs):
        raise ConfigError("derived constants assume identical dipole frequencies")
    res = config.reservoir
    g0bar = config.g0bar
    theta = config.theta
    v_s = group_velocity(config)
    gamma = 2 * g0bar**2 / v_s
    t_fin = res.length / v_s
    if isinstance(res, Cavity):
        t_exc = 2 * math.pi / config.omega_ref
        exchange = config.omega_ref * math.sqrt(1 + theta**2)
        kappa = None
    else:
        t_exc = 2 * math.pi / res.J
        kappa = math.pi * res.a / (res.num_sites * res.J * (1 - res.J / res.omega_c))
        exchange = res.J * math.sqrt(1 + kappa * theta**2)
    return DerivedConstants(
        gamma=gamma,
        group_velocity=v_s,
        t_fin=t_fin,
        t_exc=t_exc,
        markov_margin=t_fin * gamma,
        exchange_frequency=exchange,
        theta=theta,
        phi=config.phi,
        g0bar=g0bar,
        g0=config.g0,
        k_s=resonant_wavenumber(config),
        kappa=kappa,
    )


@dataclass(frozen=True)
class ArrayCoupling:
    mode_sum: float          # exact g_eff^2 over the finite band
    closed_form: float       # large-N integral with pi / sqrt(p^2 - 1)
    g_ca: float              # simplified normaliser sqrt(g0bar^2 omega_s / (pi J a))
    integral_factor: float   # pi / sqrt((omega_s/J)^2 - 1)


def effective_array_coupling(config: SystemConfig) -> ArrayCoupling:
    res = config.reservoir
    if not isinstance(res, CavityArray):
        raise ConfigError("effective array coupling is defined for the cavity array only")
    w_s = config.omega_ref
    p = w_s / res.J
    if p <= 1:
        raise ConfigError(f"omega_s/J = {p} <= 1: the band integral diverges")
    g0 = config.g0
    mode_sum = float(np.sum(g0**2 * w_s / reservoir_spectrum(res)))
    factor = math.pi / math.sqrt(p**2 - 1)
    prefactor = config.g0bar**2 * w_s / (math.pi * res.J * res.a)
    return ArrayCoupling(
        mode_sum=mode_sum,
        closed_form=prefactor * factor,
        g_ca=math.sqrt(prefactor),
        integral_factor=factor,
    )
