"""
sandwichpy Components Package
Contains the physics and counting components of a folded-sandwich source.
"""

# Material data
from .dispersion import DispersionModel, Material, Axis, get_model, load_models, refractive_index, birefringence

# Phase matching
from .phasematch import CrystalSpec, SpdcProcess, JointSpectrum, phasematch_temperature, joint_spectrum

# Phase compensation
from .phasecomp import (
    WaveplateStack,
    CompensatorSpec,
    PhaseSetup,
    PhaseMap,
    FlatnessReport,
    SpectralWindow,
    total_phase_map,
    optimize_compensator_length,
    temperature_tolerance,
    mirror_displacement_phase,
)

# Polarization state
from .polstate import (
    SpectralFilter,
    PolarizationDensityMatrix,
    CountsRecord,
    VisibilitySet,
    build_state,
    fit_visibility,
    fidelity_witness,
    fidelity_from_state,
)

# Counting
from .counting import DetectionConfig, SourceBrightness, RateReport, TimeTagStream, analytic_rates, power_sweep

__all__ = [
    # Material data
    'DispersionModel',
    'Material',
    'Axis',
    'get_model',
    'load_models',
    'refractive_index',
    'birefringence',
    # Phase matching
    'CrystalSpec',
    'SpdcProcess',
    'JointSpectrum',
    'phasematch_temperature',
    'joint_spectrum',
    # Phase compensation
    'WaveplateStack',
    'CompensatorSpec',
    'PhaseSetup',
    'PhaseMap',
    'FlatnessReport',
    'SpectralWindow',
    'total_phase_map',
    'optimize_compensator_length',
    'temperature_tolerance',
    'mirror_displacement_phase',
    # Polarization state
    'SpectralFilter',
    'PolarizationDensityMatrix',
    'CountsRecord',
    'VisibilitySet',
    'build_state',
    'fit_visibility',
    'fidelity_witness',
    'fidelity_from_state',
    # Counting
    'DetectionConfig',
    'SourceBrightness',
    'RateReport',
    'TimeTagStream',
    'analytic_rates',
    'power_sweep',
]
