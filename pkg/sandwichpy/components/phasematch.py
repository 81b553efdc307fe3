"""
sandwichpy Phase Matching Component
Collinear type-0 quasi-phase-matching (pump -> signal + idler, all along z)
in a periodically poled crystal, and the resulting joint spectrum.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .dispersion import Axis, DispersionModel, Material, get_model, parse_material
from ..utils.errors import DomainError, NoRootError, UsageError, ValidationError
from ..utils.logger import SandwichLogger

SEARCH_INTERVAL_C = (0.0, 150.0)
ROOT_XTOL_C = 1e-10
ENERGY_TOLERANCE_PER_NM = 1e-12

# KTP linear expansion along x, about 25 degC
KTP_EXPANSION = (6.7e-6, 11e-9)


class CrystalSpec:
    """Configuration for a periodically poled crystal."""

    def __init__(self,
                 length_mm: float,
                 poling_period_um: float,
                 material: Material = Material.KTP,
                 propagation_axis: str = "x",
                 interaction_axis: str = "z",
                 expansion: Tuple[float, float] = KTP_EXPANSION,
                 expansion_reference_c: float = 25.0):
        """
        Initialize crystal specification.

        Args:
            length_mm: Crystal length at the expansion reference temperature (0 allowed)
            poling_period_um: First-order poling period
            material: Crystal material
            propagation_axis: Propagation axis label
            interaction_axis: Polarization axis of all three fields (z for type-0)
            expansion: (alpha /K, beta /K^2) thermal expansion applied to length and period
            expansion_reference_c: Reference temperature of the expansion polynomial
        """
        if length_mm < 0:
            raise ValidationError(f"Crystal length must be non-negative, got {length_mm}")
        if poling_period_um <= 0:
            raise ValidationError(f"Poling period must be positive, got {poling_period_um}")
        self.material = parse_material(material)
        self.length_mm = float(length_mm)
        self.poling_period_um = float(poling_period_um)
        self.propagation_axis = propagation_axis
        self.interaction_axis = interaction_axis
        self.expansion = (float(expansion[0]), float(expansion[1]))
        self.expansion_reference_c = float(expansion_reference_c)

    def __repr__(self) -> str:
        return (f"CrystalSpec(length_mm={self.length_mm}, poling_period_um={self.poling_period_um}, "
                f"material={self.material.value})")

    def expansion_factor(self, temperature_c: float) -> float:
        dt = temperature_c - self.expansion_reference_c
        alpha, beta = self.expansion
        return 1.0 + alpha * dt + beta * dt * dt

    def length_at(self, temperature_c: float) -> float:
        """Crystal length in mm at a temperature."""
        return self.length_mm * self.expansion_factor(temperature_c)

    def period_at(self, temperature_c: float) -> float:
        """Poling period in um at a temperature."""
        return self.poling_period_um * self.expansion_factor(temperature_c)

    def with_length(self, length_mm: float) -> "CrystalSpec":
        return CrystalSpec(length_mm, self.poling_period_um, self.material, self.propagation_axis,
                           self.interaction_axis, self.expansion, self.expansion_reference_c)

    def with_period(self, poling_period_um: float) -> "CrystalSpec":
        return CrystalSpec(self.length_mm, poling_period_um, self.material, self.propagation_axis,
                           self.interaction_axis, self.expansion, self.expansion_reference_c)

    def interaction_model(self) -> DispersionModel:
        return get_model(self.material, self.interaction_axis)


def idler_wavelength(pump_nm, signal_nm):
    """
    Idler wavelength from energy conservation, 1/li = 1/lp - 1/ls.

    Args:
        pump_nm: Pump wavelength in nm
        signal_nm: Signal wavelength(s) in nm

    Returns:
        Idler wavelength(s) in nm

    Raises:
        DomainError: signal not longer than the pump
    """
    lp = np.asarray(pump_nm, dtype=float)
    ls = np.asarray(signal_nm, dtype=float)
    if np.any(lp <= 0) or np.any(~np.isfinite(lp)):
        raise DomainError("Pump wavelength must be positive", pump_nm)
    if np.any(ls <= lp):
        raise DomainError("Signal wavelength must be longer than the pump wavelength", signal_nm)
    idler = 1.0 / (1.0 / lp - 1.0 / ls)
    return float(idler) if idler.ndim == 0 else idler


@dataclass(frozen=True)
class SpdcProcess:
    """One pump -> signal + idler process at a crystal temperature."""
    pump_nm: float
    signal_nm: float
    idler_nm: float
    crystal: CrystalSpec
    temperature_c: float

    def __post_init__(self):
        if min(self.pump_nm, self.signal_nm, self.idler_nm) <= 0:
            raise ValidationError("Wavelengths must be strictly positive")
        residual = 1.0 / self.pump_nm - 1.0 / self.signal_nm - 1.0 / self.idler_nm
        if abs(residual) > ENERGY_TOLERANCE_PER_NM:
            raise ValidationError(f"Energy conservation violated by {residual:.3e} /nm")
        if self.signal_nm > self.idler_nm:
            raise ValidationError(f"Signal ({self.signal_nm} nm) must not be longer than idler ({self.idler_nm} nm)")

    @classmethod
    def from_pump_signal(cls, pump_nm: float, signal_nm: float, crystal: CrystalSpec, temperature_c: float) -> "SpdcProcess":
        """Build a process with the idler fixed by energy conservation; the shorter photon becomes the signal."""
        idler = idler_wavelength(pump_nm, signal_nm)
        short, long_ = sorted((float(signal_nm), idler))
        return cls(float(pump_nm), short, long_, crystal, float(temperature_c))


def _mismatch(pump_nm, signal_nm, crystal: CrystalSpec, temperature_c, model: Optional[DispersionModel] = None):
    """Delta k in rad/m for signal grid values, idler from energy conservation."""
    model = model or crystal.interaction_model()
    idler_nm = idler_wavelength(pump_nm, signal_nm)
    ls = np.asarray(signal_nm, dtype=float)
    li = np.asarray(idler_nm, dtype=float)
    per_nm = (model.index(pump_nm, temperature_c) / pump_nm
              - model.index(ls, temperature_c) / ls
              - model.index(li, temperature_c) / li
              - 1.0 / (crystal.period_at(temperature_c) * 1e3))
    return 2.0 * math.pi * per_nm * 1e9


def qpm_mismatch(process: SpdcProcess) -> float:
    """
    First-order quasi-phase-matching wave-vector mismatch.

    dk = 2 pi [n_z(lp)/lp - n_z(ls)/ls - n_z(li)/li - 1/Lambda(T)]

    Args:
        process: SPDC process

    Returns:
        Mismatch in rad/m
    """
    model = process.crystal.interaction_model()
    lp, ls, li, temp = process.pump_nm, process.signal_nm, process.idler_nm, process.temperature_c
    per_nm = (model.index(lp, temp) / lp - model.index(ls, temp) / ls - model.index(li, temp) / li
              - 1.0 / (process.crystal.period_at(temp) * 1e3))
    return float(2.0 * math.pi * per_nm * 1e9)


def half_phase_mismatch(pump_nm: float, signal_nm: float, crystal: CrystalSpec, temperature_c: float) -> float:
    """dk * L(T) / 2 in rad."""
    dk = float(_mismatch(pump_nm, signal_nm, crystal, temperature_c))
    return dk * crystal.length_at(temperature_c) * 1e-3 / 2.0


def phasematch_temperature(pump_nm: float, signal_nm: float, crystal: CrystalSpec,
                           interval_c: Tuple[float, float] = SEARCH_INTERVAL_C) -> float:
    """
    Crystal temperature that phase-matches a process.

    Deterministic bisection over the fixed search interval.

    Args:
        pump_nm: Pump wavelength in nm
        signal_nm: Signal wavelength in nm
        crystal: Crystal specification
        interval_c: Search interval in degC

    Returns:
        Phase-matching temperature in degC

    Raises:
        DomainError: signal not longer than the pump
        NoRootError: no sign change of the mismatch in the interval
    """
    idler_wavelength(pump_nm, signal_nm)
    lo, hi = interval_c
    model = crystal.interaction_model()

    # residual in rad of dk*L/2; a zero-length crystal falls back to dk itself
    length_m = crystal.length_mm * 1e-3
    scale = length_m / 2.0 if length_m > 0 else 1.0

    def residual(temperature_c: float) -> float:
        return float(_mismatch(pump_nm, signal_nm, crystal, temperature_c, model)) * crystal.expansion_factor(temperature_c) * scale

    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if r_lo * r_hi > 0:
        SandwichLogger.error(f"No phase-matching root for {pump_nm} -> {signal_nm} nm in [{lo}, {hi}] degC", "PhaseMatch")
        raise NoRootError(f"No phase-matching temperature in [{lo}, {hi}] degC", residuals=(r_lo, r_hi))
    temperature = optimize.bisect(residual, lo, hi, xtol=ROOT_XTOL_C, maxiter=200)
    SandwichLogger.info(f"Phase matching {pump_nm} -> {signal_nm} nm at {temperature:.5f} degC", "PhaseMatch")
    return float(temperature)


@dataclass
class JointSpectrum:
    """
    Spectral intensity of the pair along the energy-conserving line.

    Attributes:
        signal_grid: Signal wavelengths in nm
        intensity: Normalized intensity, peak 1
        fwhm: Full width at half maximum in nm (nan when the grid does not resolve it)
        idler_grid: Conjugate idler wavelengths in nm
        channel: Which wavelength the grid parameterizes
    """
    signal_grid: np.ndarray
    intensity: np.ndarray
    fwhm: float
    idler_grid: np.ndarray = field(default_factory=lambda: np.zeros(0))
    channel: str = "signal"

    def __post_init__(self):
        self.signal_grid = np.asarray(self.signal_grid, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.signal_grid.shape != self.intensity.shape:
            raise ValidationError("Spectrum grid and intensity must have the same length")
        if np.any(self.intensity < 0):
            raise ValidationError("Spectral intensity must be nonnegative")

    @property
    def grid(self) -> np.ndarray:
        """The wavelengths the spectrum is parameterized by."""
        return self.idler_grid if self.channel == "idler" else self.signal_grid


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    values = np.asarray(grid, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise UsageError("Wavelength grid must be a nonempty 1-D sequence")
    if values.size > 1 and np.any(np.diff(values) <= 0):
        raise UsageError("Wavelength grid must be strictly increasing")
    return values


def fwhm_from_samples(grid: np.ndarray, intensity: np.ndarray) -> float:
    """
    Full width at half maximum by linear interpolation between the samples
    bracketing half of the peak; nan when either edge is not resolved.
    """
    if grid.size < 3:
        return float("nan")
    peak_index = int(np.argmax(intensity))
    half = 0.5 * intensity[peak_index]
    left = None
    for k in range(peak_index, 0, -1):
        if intensity[k - 1] < half <= intensity[k]:
            left = grid[k - 1] + (half - intensity[k - 1]) / (intensity[k] - intensity[k - 1]) * (grid[k] - grid[k - 1])
            break
    right = None
    for k in range(peak_index, grid.size - 1):
        if intensity[k] >= half > intensity[k + 1]:
            right = grid[k] + (intensity[k] - half) / (intensity[k] - intensity[k + 1]) * (grid[k + 1] - grid[k])
            break
    if left is None or right is None:
        return float("nan")
    return float(right - left)


def joint_spectrum(pump_nm: float, temperature_c: float, crystal: CrystalSpec, grid: Sequence[float],
                   channel: str = "signal") -> JointSpectrum:
    """
    sinc^2 joint spectral intensity on the energy-conserving line.

    Args:
        pump_nm: Pump wavelength in nm
        temperature_c: Crystal temperature in degC
        crystal: Crystal specification
        grid: Strictly increasing wavelengths in nm (recommended spacing <= 0.01 nm)
        channel: 'signal' when the grid holds signal wavelengths, 'idler' for idler wavelengths

    Returns:
        JointSpectrum normalized to peak 1 on the grid
    """
    if channel not in ("signal", "idler"):
        raise UsageError(f"channel must be 'signal' or 'idler', got '{channel}'")
    values = _check_grid(grid)
    conjugate = np.asarray(idler_wavelength(pump_nm, values), dtype=float).reshape(values.shape)
    dk = np.asarray(_mismatch(pump_nm, values, crystal, temperature_c), dtype=float).reshape(values.shape)
    x = dk * crystal.length_at(temperature_c) * 1e-3 / 2.0
    intensity = np.sinc(x / np.pi) ** 2
    peak = float(np.max(intensity))
    if peak > 0:
        intensity = intensity / peak
    fwhm = fwhm_from_samples(values, intensity)
    if math.isnan(fwhm):
        SandwichLogger.warning("Spectrum FWHM not resolved on the grid", "PhaseMatch")
    if channel == "idler":
        return JointSpectrum(conjugate, intensity, fwhm, idler_grid=values, channel="idler")
    return JointSpectrum(values, intensity, fwhm, idler_grid=conjugate, channel="signal")


def filtered_spectrum(spectrum: JointSpectrum, spectral_filter) -> JointSpectrum:
    """
    Joint spectrum seen behind a signal-side filter.

    Args:
        spectrum: Unfiltered joint spectrum
        spectral_filter: Object with transmission(wavelength_nm) (see polstate.SpectralFilter)

    Returns:
        Filtered spectrum renormalized to peak 1, with its FWHM
    """
    weights = spectrum.intensity * spectral_filter.transmission(spectrum.signal_grid)
    peak = float(np.max(weights))
    if peak <= 0:
        raise DomainError("Filter passband does not overlap the spectrum")
    weights = weights / peak
    return JointSpectrum(spectrum.signal_grid, weights, fwhm_from_samples(spectrum.grid, weights),
                         idler_grid=spectrum.idler_grid, channel=spectrum.channel)
