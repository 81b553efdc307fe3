"""
sandwichpy - Folded-sandwich SPDC source design toolkit
Dispersion-driven phase maps, compensation crystal design, polarization
state prediction and count-rate modelling for double-pass polarization
entangled photon-pair sources.

This library provides:
- Refractive index models with thermo-optic corrections
- Quasi-phase-matching temperature and joint spectrum
- Relative phase maps and compensator length design
- Density matrices, visibilities and the fidelity witness
- Rates with saturation and accidentals, checked by a time-tag Monte Carlo
"""

__version__ = "1.0.0"

from .components.dispersion import DispersionModel, Material, Axis, get_model
from .components.phasematch import CrystalSpec, phasematch_temperature, joint_spectrum
from .components.phasecomp import (
    WaveplateStack,
    CompensatorSpec,
    PhaseSetup,
    total_phase_map,
    optimize_compensator_length,
    temperature_tolerance,
)
from .components.polstate import SpectralFilter, PolarizationDensityMatrix, build_state, fidelity_witness
from .components.counting import DetectionConfig, SourceBrightness, analytic_rates, power_sweep
from .main import SourceConfig, main
from .utils.config import Config
from .utils.errors import (
    SandwichError,
    ConfigError,
    ValidationError,
    RangeError,
    DomainError,
    UsageError,
    NoRootError,
    FitError,
)
from .utils.logger import SandwichLogger

__all__ = [
    # Components
    'DispersionModel',
    'Material',
    'Axis',
    'get_model',
    'CrystalSpec',
    'phasematch_temperature',
    'joint_spectrum',
    'WaveplateStack',
    'CompensatorSpec',
    'PhaseSetup',
    'total_phase_map',
    'optimize_compensator_length',
    'temperature_tolerance',
    'SpectralFilter',
    'PolarizationDensityMatrix',
    'build_state',
    'fidelity_witness',
    'DetectionConfig',
    'SourceBrightness',
    'analytic_rates',
    'power_sweep',
    # Command line
    'SourceConfig',
    'main',
    # Utilities
    'Config',
    'SandwichError',
    'ConfigError',
    'ValidationError',
    'RangeError',
    'DomainError',
    'UsageError',
    'NoRootError',
    'FitError',
    'SandwichLogger',
]
