"""
sandwichpy Phase Compensation Component
Double-pass relative phase between the |HH> and |VV> amplitudes, the YVO4
compensation phase, compensator length design, and the conversion of
temperature and mirror displacement into phase.

All wavelengths are vacuum wavelengths in nm; lengths are in mm except
waveplate thicknesses and mirror displacements (um).
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from .dispersion import Axis, DispersionModel, Material, air, get_model, parse_material
from .phasematch import CrystalSpec, idler_wavelength, joint_spectrum
from ..utils.config import DATA_DIR
from ..utils.errors import ConfigError, DomainError, UsageError, ValidationError
from ..utils.logger import SandwichLogger
from ..utils.numerics import central_difference, golden_section_minimize

WAVEPLATE_FILE = DATA_DIR / "waveplates.json"

SEARCH_BOUNDS_MM = (0.0, 50.0)
LENGTH_TOLERANCE_MM = 1e-3
SLOPE_STEP_NM = 0.01

WEIGHTINGS = ("uniform", "spectrum-weighted")


# --- waveplate -------------------------------------------------------------

@dataclass(frozen=True)
class WaveplateLayer:
    """One birefringent layer of a waveplate stack."""
    material: Material
    thickness_um: float
    fast_axis_alignment: int = 1

    def __post_init__(self):
        if self.thickness_um <= 0:
            raise ValidationError(f"Layer thickness must be positive, got {self.thickness_um}")
        if self.fast_axis_alignment not in (1, -1):
            raise ValidationError(f"fast_axis_alignment must be +1 or -1, got {self.fast_axis_alignment}")

    def models(self) -> Tuple[DispersionModel, DispersionModel]:
        """(ordinary, extraordinary) models; isotropic materials return the same model twice."""
        if self.material in (Material.VACUUM, Material.AIR):
            model = get_model(self.material, Axis.ISOTROPIC)
            return model, model
        if self.material is Material.KTP:
            return get_model(Material.KTP, Axis.Y), get_model(Material.KTP, Axis.Z)
        return get_model(self.material, Axis.ORDINARY), get_model(self.material, Axis.EXTRAORDINARY)


@dataclass(frozen=True)
class WaveplateStack:
    """Ordered waveplate layers and a tilt about the optic axis (degrees)."""
    layers: Tuple[WaveplateLayer, ...]
    tilt_deg: float = 0.0
    name: str = "custom"
    provenance: str = ""

    def __post_init__(self):
        if not self.layers:
            raise ValidationError("A waveplate stack needs at least one layer")
        if not math.isfinite(self.tilt_deg) or abs(self.tilt_deg) >= 90:
            raise ValidationError(f"Tilt must be within (-90, 90) degrees, got {self.tilt_deg}")

    @classmethod
    def from_dict(cls, document: Dict) -> "WaveplateStack":
        try:
            layers = tuple(
                WaveplateLayer(parse_material(layer["material"]), float(layer["thickness_um"]),
                               int(layer.get("fast_axis_alignment", 1)))
                for layer in document["layers"]
            )
        except KeyError as e:
            raise ConfigError(f"waveplate layer is missing field {e}", config_key=f"waveplate.layers.{e.args[0]}")
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed waveplate layer: {e}", config_key="waveplate.layers")
        return cls(layers, float(document.get("tilt_deg", 0.0)), str(document.get("name", "custom")),
                   str(document.get("provenance", "")))

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "tilt_deg": self.tilt_deg,
            "layers": [{"material": layer.material.value, "thickness_um": layer.thickness_um,
                        "fast_axis_alignment": layer.fast_axis_alignment} for layer in self.layers],
            "provenance": self.provenance,
        }

    def with_tilt(self, tilt_deg: float) -> "WaveplateStack":
        return WaveplateStack(self.layers, tilt_deg, self.name, self.provenance)


def load_waveplate(path: Optional[Union[str, Path]] = None) -> WaveplateStack:
    """Load a waveplate stack document (the bundled AC-QWP by default)."""
    path = Path(path) if path is not None else WAVEPLATE_FILE
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"Cannot read waveplate stack {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Waveplate file {path} is not valid JSON: {e}")
    return WaveplateStack.from_dict(document)


def vacuum_stack() -> WaveplateStack:
    """A non-birefringent placeholder stack."""
    return WaveplateStack((WaveplateLayer(Material.VACUUM, 1.0),), name="vacuum")


def waveplate_retardation(stack: WaveplateStack, wavelength_nm):
    """
    Single-pass retardation of a waveplate stack.

    Gamma = sum_layers sign * 2 pi (n_e - n_o) t_eff / lambda, where tilt
    scales each thickness by 1/cos of the internal refraction angle.

    Args:
        stack: Waveplate stack
        wavelength_nm: Wavelength(s) in nm

    Returns:
        Retardation in rad
    """
    lam = np.asarray(wavelength_nm, dtype=float)
    total = np.zeros_like(lam)
    sin_tilt = math.sin(math.radians(stack.tilt_deg))
    for layer in stack.layers:
        ordinary, extraordinary = layer.models()
        n_o = ordinary.index(lam)
        n_e = extraordinary.index(lam)
        thickness_nm = layer.thickness_um * 1e3
        if sin_tilt:
            n_avg = 0.5 * (n_o + n_e)
            thickness_nm = thickness_nm / np.cos(np.arcsin(sin_tilt / n_avg))
        total = total + layer.fast_axis_alignment * 2.0 * math.pi * (n_e - n_o) * thickness_nm / lam
    return float(total) if total.ndim == 0 else total


# --- phases ----------------------------------------------------------------

class CompensatorSpec:
    """Configuration for the YVO4 compensation crystal."""

    def __init__(self, length_mm: float = 0.0, temperature_c: float = 25.0):
        """
        Initialize compensator specification.

        Args:
            length_mm: YVO4 length (0 = no compensator)
            temperature_c: Compensator temperature in degC
        """
        if length_mm < 0:
            raise ValidationError(f"Compensator length must be non-negative, got {length_mm}")
        if not math.isfinite(temperature_c):
            raise ValidationError(f"Compensator temperature must be finite, got {temperature_c}")
        self.length_mm = float(length_mm)
        self.temperature_c = float(temperature_c)

    def __repr__(self) -> str:
        return f"CompensatorSpec(length_mm={self.length_mm}, temperature_c={self.temperature_c})"

    def with_length(self, length_mm: float) -> "CompensatorSpec":
        return CompensatorSpec(length_mm, self.temperature_c)

    def with_temperature(self, temperature_c: float) -> "CompensatorSpec":
        return CompensatorSpec(self.length_mm, temperature_c)


def uncompensated_phase(signal_nm, idler_nm, crystal: CrystalSpec, stack: WaveplateStack, temperature_c: float):
    """
    Double-pass relative phase without compensation.

    phi = 2 pi L(T) [n_y(li, T)/li + n_y(ls, T)/ls] + 2 [Gamma(ls) + Gamma(li)],
    with the pump phase of the V pass taken as zero.

    Args:
        signal_nm: Signal wavelength(s) in nm
        idler_nm: Idler wavelength(s) in nm (broadcast against signal)
        crystal: Down-conversion crystal
        stack: Achromatic waveplate between the passes
        temperature_c: Crystal temperature in degC

    Returns:
        Phase in rad
    """
    ls = np.asarray(signal_nm, dtype=float)
    li = np.asarray(idler_nm, dtype=float)
    length_nm = crystal.length_at(temperature_c) * 1e6
    crystal_term = 0.0
    if length_nm:
        n_y = get_model(crystal.material, Axis.Y)
        crystal_term = 2.0 * math.pi * length_nm * (n_y.index(li, temperature_c) / li + n_y.index(ls, temperature_c) / ls)
    waveplate_term = 2.0 * (np.asarray(waveplate_retardation(stack, ls)) + np.asarray(waveplate_retardation(stack, li)))
    phase = crystal_term + waveplate_term
    return float(phase) if np.ndim(phase) == 0 else phase


def compensation_phase(signal_nm, idler_nm, comp: CompensatorSpec):
    """
    YVO4 compensation phase.

    phi_C = 2 pi L_YVO [(n_o(ls) - n_e(ls))/ls + (n_o(li) - n_e(li))/li]

    Args:
        signal_nm: Signal wavelength(s) in nm
        idler_nm: Idler wavelength(s) in nm
        comp: Compensator specification

    Returns:
        Phase in rad (0 for a zero-length compensator)
    """
    ls = np.asarray(signal_nm, dtype=float)
    li = np.asarray(idler_nm, dtype=float)
    if comp.length_mm == 0:
        phase = np.zeros(np.broadcast(ls, li).shape)
    else:
        n_o = get_model(Material.YVO4, Axis.ORDINARY)
        n_e = get_model(Material.YVO4, Axis.EXTRAORDINARY)
        t = comp.temperature_c
        bracket = (n_o.index(ls, t) - n_e.index(ls, t)) / ls + (n_o.index(li, t) - n_e.index(li, t)) / li
        phase = 2.0 * math.pi * comp.length_mm * 1e6 * bracket
    return float(phase) if np.ndim(phase) == 0 else phase


@dataclass(frozen=True)
class PhaseSetup:
    """Everything the relative phase depends on."""
    pump_nm: float
    crystal: CrystalSpec
    waveplate: WaveplateStack
    compensator: CompensatorSpec
    ktp_temperature_c: float

    def with_compensator(self, comp: CompensatorSpec) -> "PhaseSetup":
        return PhaseSetup(self.pump_nm, self.crystal, self.waveplate, comp, self.ktp_temperature_c)

    def idler(self, signal_nm):
        return idler_wavelength(self.pump_nm, signal_nm)

    def total_phase(self, signal_nm, idler_nm=None):
        """Uncompensated plus compensation phase; idler defaults to the energy-conserving conjugate."""
        if idler_nm is None:
            idler_nm = self.idler(signal_nm)
        return (np.asarray(uncompensated_phase(signal_nm, idler_nm, self.crystal, self.waveplate, self.ktp_temperature_c))
                + np.asarray(compensation_phase(signal_nm, idler_nm, self.compensator)))


@dataclass
class PhaseMap:
    """
    Relative phase over a signal/idler window.

    On the diagonal the phase is 1-D and idler_grid holds the conjugate of
    each signal wavelength; otherwise phase[i, j] belongs to
    (signal_grid[i], idler_grid[j]).
    """
    signal_grid: np.ndarray
    idler_grid: np.ndarray
    phase: np.ndarray
    offset_subtracted: bool = False
    diagonal: bool = True
    offset_rad: float = 0.0

    def __post_init__(self):
        self.signal_grid = np.asarray(self.signal_grid, dtype=float)
        self.idler_grid = np.asarray(self.idler_grid, dtype=float)
        self.phase = np.asarray(self.phase, dtype=float)
        if self.diagonal:
            expected: Tuple[int, ...] = (self.signal_grid.size,)
            if self.idler_grid.size != self.signal_grid.size:
                raise ValidationError("Diagonal map needs one idler wavelength per signal wavelength")
        else:
            expected = (self.signal_grid.size, self.idler_grid.size)
        if self.phase.shape != expected:
            raise ValidationError(f"Phase array shape {self.phase.shape} does not match grids {expected}")
        if not np.all(np.isfinite(self.phase)):
            raise ValidationError("Phase map contains non-finite values")

    def rows(self) -> List[Tuple[float, float, float]]:
        """(signal_nm, idler_nm, phase_rad) rows in row-major order."""
        if self.diagonal:
            return [(float(s), float(i), float(p)) for s, i, p in zip(self.signal_grid, self.idler_grid, self.phase)]
        return [(float(s), float(i), float(self.phase[a, b]))
                for a, s in enumerate(self.signal_grid) for b, i in enumerate(self.idler_grid)]

    def to_dict(self) -> Dict:
        return {
            "signal_nm": self.signal_grid.tolist(),
            "idler_nm": self.idler_grid.tolist(),
            "phase_rad": self.phase.ravel().tolist(),
            "shape": list(self.phase.shape),
            "diagonal": self.diagonal,
            "offset_subtracted": self.offset_subtracted,
            "offset_rad": self.offset_rad,
        }


CSV_COLUMNS = ("signal_nm", "idler_nm", "phase_rad")


def total_phase_map(setup: PhaseSetup, signal_grid: Sequence[float], idler_grid: Optional[Sequence[float]] = None,
                    offset_subtracted: bool = False, center_signal_nm: Optional[float] = None,
                    offset: Optional[float] = None) -> PhaseMap:
    """
    Total relative phase (uncompensated + compensation) on a grid.

    Args:
        setup: Phase setup
        signal_grid: Signal wavelengths in nm
        idler_grid: Idler wavelengths for a full 2-D map; None for the energy-conserving diagonal
        offset_subtracted: Subtract the value at the center point
        center_signal_nm: Center point signal wavelength (grid midpoint by default); its idler is the conjugate
        offset: Explicit offset in rad, overriding the center value

    Returns:
        PhaseMap
    """
    signal = np.asarray(signal_grid, dtype=float)
    if signal.ndim != 1 or signal.size == 0:
        raise UsageError("Signal grid must be a nonempty 1-D sequence")
    if idler_grid is None:
        idler = np.asarray(setup.idler(signal), dtype=float).reshape(signal.shape)
        phase = np.asarray(setup.total_phase(signal, idler), dtype=float).reshape(signal.shape)
        diagonal = True
    else:
        idler = np.asarray(idler_grid, dtype=float)
        if idler.ndim != 1 or idler.size == 0:
            raise UsageError("Idler grid must be a nonempty 1-D sequence")
        phase = np.asarray(setup.total_phase(signal[:, None], idler[None, :]), dtype=float)
        diagonal = False

    applied = 0.0
    if offset is not None:
        applied = float(offset)
    elif offset_subtracted:
        center = float(center_signal_nm) if center_signal_nm is not None else 0.5 * (signal[0] + signal[-1])
        applied = float(setup.total_phase(center))
    if offset is not None or offset_subtracted:
        phase = phase - applied
    return PhaseMap(signal, idler, phase, offset_subtracted=offset is not None or offset_subtracted,
                    diagonal=diagonal, offset_rad=applied)


# --- flatness and optimization --------------------------------------------

@dataclass
class FlatnessReport:
    """Peak-to-peak and rms phase excursion over a window."""
    peak_to_peak: float
    rms: float
    window: Tuple[Tuple[float, float], Tuple[float, float]]
    weighting: str = "uniform"

    def to_dict(self) -> Dict:
        return {
            "peak_to_peak_rad": self.peak_to_peak,
            "rms_rad": self.rms,
            "signal_window_nm": list(self.window[0]),
            "idler_window_nm": list(self.window[1]),
            "weighting": self.weighting,
        }


def _flatness(phase: np.ndarray, weights: Optional[np.ndarray]) -> Tuple[float, float]:
    values = np.asarray(phase, dtype=float).ravel()
    if weights is None:
        w = np.ones_like(values)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != values.shape:
            raise UsageError("Weights must match the phase samples")
        if np.any(w < 0) or not np.any(w > 0):
            raise UsageError("Weights must be nonnegative with a positive sum")
    mean = float(np.sum(w * values) / np.sum(w))
    rms = float(np.sqrt(np.sum(w * (values - mean) ** 2) / np.sum(w)))
    return float(np.ptp(values)), rms


def phase_flatness(phase_map: PhaseMap, weights: Optional[Sequence[float]] = None) -> FlatnessReport:
    """
    Flatness of a phase map.

    Args:
        phase_map: Phase map
        weights: Optional nonnegative weights per sample (spectrum-weighted rms)

    Returns:
        FlatnessReport; the rms is taken about the (weighted) mean
    """
    w = None if weights is None else np.asarray(weights, dtype=float)
    p2p, rms = _flatness(phase_map.phase, w)
    window = ((float(phase_map.signal_grid.min()), float(phase_map.signal_grid.max())),
              (float(phase_map.idler_grid.min()), float(phase_map.idler_grid.max())))
    return FlatnessReport(p2p, rms, window, "uniform" if weights is None else "spectrum-weighted")


@dataclass(frozen=True)
class SpectralWindow:
    """Signal window on the energy-conserving line."""
    center_signal_nm: float
    half_width_nm: float
    points: int = 101

    def __post_init__(self):
        if self.points < 1:
            raise ValidationError(f"Window needs at least one point, got {self.points}")
        if self.half_width_nm < 0:
            raise ValidationError(f"Window half width must be non-negative, got {self.half_width_nm}")

    def grid(self) -> np.ndarray:
        if self.points == 1 or self.half_width_nm == 0:
            return np.array([self.center_signal_nm], dtype=float)
        return np.linspace(self.center_signal_nm - self.half_width_nm, self.center_signal_nm + self.half_width_nm, self.points)


def _slope(setup: PhaseSetup, signal_nm: float, comp_length_mm: float) -> float:
    """d(total phase)/d(signal) along the diagonal, rad/nm."""
    trial = setup.with_compensator(setup.compensator.with_length(comp_length_mm))
    return central_difference(lambda s: float(trial.total_phase(s)), signal_nm, SLOPE_STEP_NM)


def optimize_compensator_length(setup: PhaseSetup, window: SpectralWindow, weighting: str = "uniform",
                                bounds_mm: Tuple[float, float] = SEARCH_BOUNDS_MM,
                                tol_mm: float = LENGTH_TOLERANCE_MM) -> Tuple[float, FlatnessReport]:
    """
    Compensator length that flattens the total phase over a window.

    Uniform weighting minimizes the peak-to-peak phase; spectrum-weighted
    minimizes the rms weighted by the joint spectrum. A single-point window
    minimizes the slope along the energy-conserving line instead.

    Args:
        setup: Phase setup (its compensator length is ignored)
        window: Signal window
        weighting: 'uniform' or 'spectrum-weighted'
        bounds_mm: Search interval
        tol_mm: Length resolution

    Returns:
        (optimal length in mm, FlatnessReport at that length)
    """
    if weighting not in WEIGHTINGS:
        raise UsageError(f"weighting must be one of {WEIGHTINGS}, got '{weighting}'")
    signal = window.grid()
    idler = np.asarray(setup.idler(signal), dtype=float).reshape(signal.shape)

    base = np.asarray(uncompensated_phase(signal, idler, setup.crystal, setup.waveplate, setup.ktp_temperature_c),
                      dtype=float).reshape(signal.shape)
    per_mm = np.asarray(compensation_phase(signal, idler, setup.compensator.with_length(1.0)),
                        dtype=float).reshape(signal.shape)
    weights = None
    if weighting == "spectrum-weighted":
        weights = joint_spectrum(setup.pump_nm, setup.ktp_temperature_c, setup.crystal, signal).intensity

    if signal.size == 1:
        center = float(signal[0])

        def objective(length_mm: float) -> float:
            return abs(_slope(setup, center, length_mm))
    elif weighting == "uniform":
        def objective(length_mm: float) -> float:
            return float(np.ptp(base + length_mm * per_mm))
    else:
        def objective(length_mm: float) -> float:
            return _flatness(base + length_mm * per_mm, weights)[1]

    best, value = golden_section_minimize(objective, bounds_mm[0], bounds_mm[1], tol_mm)
    p2p, rms = _flatness(base + best * per_mm, weights)
    report = FlatnessReport(p2p, rms, ((float(signal.min()), float(signal.max())), (float(idler.min()), float(idler.max()))),
                            weighting)
    SandwichLogger.info(f"Optimal compensator {best:.3f} mm ({weighting}, objective {value:.4g})", "PhaseComp")
    return best, report


# --- temperature and displacement -----------------------------------------

def bell_fidelity(phase_rad):
    """Fidelity cos^2(phi/2) of |Psi(phi)> against the phi = 0 Bell state."""
    value = 0.5 * (1.0 + np.cos(np.asarray(phase_rad, dtype=float)))
    return float(value) if value.ndim == 0 else value


def phase_for_fidelity(fidelity_target: float) -> float:
    """Largest |phi| keeping cos^2(phi/2) at or above the target."""
    if not 0.5 <= fidelity_target < 1.0:
        raise DomainError("Fidelity target must lie in [0.5, 1)", fidelity_target)
    return 2.0 * math.acos(math.sqrt(fidelity_target))


def temperature_phase_shift(comp: CompensatorSpec, delta_t: float, signal_nm: float, idler_nm: float) -> float:
    """
    Change of the compensation phase when the compensator warms by delta_t.

    Args:
        comp: Compensator at its nominal temperature
        delta_t: Temperature change in K
        signal_nm: Signal wavelength in nm
        idler_nm: Idler wavelength in nm

    Returns:
        Phase change in rad
    """
    if delta_t == 0:
        return 0.0
    warm = compensation_phase(signal_nm, idler_nm, comp.with_temperature(comp.temperature_c + delta_t))
    return float(warm - compensation_phase(signal_nm, idler_nm, comp))


def crystal_temperature_phase_shift(crystal: CrystalSpec, temperature_c: float, delta_t: float,
                                    signal_nm: float, idler_nm: float) -> float:
    """Change of the down-conversion crystal phase (expansion included) for a temperature step."""
    stack = vacuum_stack()
    warm = uncompensated_phase(signal_nm, idler_nm, crystal, stack, temperature_c + delta_t)
    return float(warm - uncompensated_phase(signal_nm, idler_nm, crystal, stack, temperature_c))


def phase_temperature_slope(element: Union[CompensatorSpec, CrystalSpec], signal_nm: float, idler_nm: float,
                            temperature_c: Optional[float] = None, step_k: float = 0.5) -> float:
    """Local d(phase)/dT of a compensator or a crystal, rad/K."""
    if isinstance(element, CompensatorSpec):
        comp = element
        return central_difference(lambda dt: temperature_phase_shift(comp, dt, signal_nm, idler_nm), 0.0, step_k)
    if isinstance(element, CrystalSpec):
        crystal = element
        base = crystal.expansion_reference_c if temperature_c is None else temperature_c
        return central_difference(lambda dt: crystal_temperature_phase_shift(crystal, base, dt, signal_nm, idler_nm),
                                  0.0, step_k)
    raise UsageError(f"Expected a CompensatorSpec or CrystalSpec, got {type(element).__name__}")


def pi_shift_temperature(comp: CompensatorSpec, signal_nm: float, idler_nm: float) -> float:
    """Temperature change (K, positive) giving a pi phase shift in the compensator."""
    slope = phase_temperature_slope(comp, signal_nm, idler_nm)
    if slope == 0:
        raise DomainError("Compensator phase does not depend on temperature")
    direction = 1.0 if slope > 0 else -1.0
    guess = math.pi / abs(slope)

    def residual(delta_t: float) -> float:
        return abs(temperature_phase_shift(comp, direction * delta_t, signal_nm, idler_nm)) - math.pi

    return float(optimize.brentq(residual, 0.5 * guess, 2.0 * guess, xtol=1e-9))


def temperature_tolerance(element: Union[CompensatorSpec, CrystalSpec], fidelity_target: float,
                          signal_nm: float, idler_nm: float, temperature_c: Optional[float] = None) -> float:
    """
    Temperature excursion that keeps the state fidelity above a target.

    Args:
        element: Compensator or down-conversion crystal
        fidelity_target: Required fidelity in [0.5, 1)
        signal_nm: Signal wavelength in nm
        idler_nm: Idler wavelength in nm
        temperature_c: Operating temperature of a crystal element

    Returns:
        Allowed +/- temperature excursion in K
    """
    phase_max = phase_for_fidelity(fidelity_target)
    slope = phase_temperature_slope(element, signal_nm, idler_nm, temperature_c)
    if slope == 0:
        return math.inf
    return phase_max / abs(slope)


@dataclass(frozen=True)
class TemperatureScanPoint:
    delta_t: float
    phase_rad: float
    fidelity: float


def temperature_phase_scan(comp: CompensatorSpec, delta_ts: Sequence[float], signal_nm: float,
                           idler_nm: float) -> List[TemperatureScanPoint]:
    """Phase shift and Bell-state fidelity across compensator temperature detunings."""
    if len(delta_ts) == 0:
        raise UsageError("Temperature scan needs at least one detuning")
    points = []
    for delta_t in delta_ts:
        shift = temperature_phase_shift(comp, float(delta_t), signal_nm, idler_nm)
        points.append(TemperatureScanPoint(float(delta_t), shift, bell_fidelity(shift)))
    return points


def mirror_displacement_phase(displacement_um, pump_nm: float, signal_nm: float, idler_nm: float,
                              air_model: Optional[DispersionModel] = None):
    """
    Relative phase from moving the fold mirror through air.

    dphi = 2 pi * 2d [n(lp)/lp - n(ls)/ls - n(li)/li]; evaluated through
    (n - 1), which drops the vacuum term 1/lp - 1/ls - 1/li. That term is
    zero only for an energy-conserving triple, so the idler must be the
    conjugate of the signal. Geometric (Gouy) phase is not included.

    Args:
        displacement_um: Mirror displacement(s) in um, >= 0
        pump_nm: Pump wavelength in nm
        signal_nm: Signal wavelength in nm
        idler_nm: Idler wavelength in nm
        air_model: Medium between crystal and mirror (standard air by default)

    Returns:
        Phase in rad
    """
    d = np.asarray(displacement_um, dtype=float)
    if np.any(d < 0):
        raise DomainError("Mirror displacement must be non-negative", displacement_um)
    conjugate = float(idler_wavelength(pump_nm, signal_nm))
    if not math.isclose(idler_nm, conjugate, rel_tol=1e-6):
        raise DomainError(f"Idler {idler_nm} nm is not the energy-conserving partner of {signal_nm} nm ({conjugate:.4f} nm)",
                          idler_nm)
    model = air_model if air_model is not None else air()
    if model.is_vacuum:
        result = np.zeros_like(d)
    else:
        excess = ((model.index(pump_nm) - 1.0) / pump_nm - (model.index(signal_nm) - 1.0) / signal_nm
                  - (model.index(idler_nm) - 1.0) / idler_nm)
        result = 2.0 * math.pi * 2.0 * d * 1e3 * excess
    return float(result) if result.ndim == 0 else result


def fidelity_vs_displacement(displacements_um: Sequence[float], pump_nm: float, signal_nm: float, idler_nm: float,
                             air_model: Optional[DispersionModel] = None) -> List[Tuple[float, float, float]]:
    """(displacement_um, phase_rad, fidelity) rows for a displacement scan."""
    d = np.asarray(displacements_um, dtype=float)
    if d.size == 0:
        raise UsageError("Displacement scan needs at least one point")
    phases = np.atleast_1d(mirror_displacement_phase(d, pump_nm, signal_nm, idler_nm, air_model))
    fidelities = np.atleast_1d(bell_fidelity(phases))
    return [(float(a), float(b), float(c)) for a, b, c in zip(np.atleast_1d(d), phases, fidelities)]
