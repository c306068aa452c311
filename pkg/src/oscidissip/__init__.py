"""Exact dynamics of harmonic-oscillator dipoles in finite 1-D reservoirs."""

from .model import (
    Cavity,
    CavityArray,
    ConfigError,
    CouplingSpec,
    DipoleSpec,
    SystemConfig,
    derived_constants,
    effective_array_coupling,
    mode_amplitude,
    mode_amplitudes,
    reservoir_spectrum,
)
from .hamiltonian import (
    Gauge,
    QuadraticHamiltonian,
    build,
    build_coulomb,
    build_dipole_gauge,
    build_quantum_optical,
)
from .bogoliubov import (
    BogoliubovDecomposition,
    DynamicalSpectrum,
    UnstableHamiltonianError,
    diagonalize,
    dynamical_spectrum,
    matter_fraction,
    participation_ratio,
)

__version__ = "0.1.0"
