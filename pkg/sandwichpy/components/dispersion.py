"""
sandwichpy Dispersion Component
Refractive indices of every material in the optical path as functions of
vacuum wavelength (nm) and temperature (degC).

Coefficient sets are data: they live in ``data/materials.json`` and can be
replaced by any document following the same schema.
"""

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.config import DATA_DIR
from ..utils.errors import ConfigError, RangeError, UsageError, ValidationError
from ..utils.numerics import central_difference
from ..utils.logger import SandwichLogger

ArrayLike = Union[float, Sequence[float], np.ndarray]

MATERIALS_FILE = DATA_DIR / "materials.json"


class Material(Enum):
    """Materials in the optical path."""
    KTP = "KTP"
    YVO4 = "YVO4"
    MGF2 = "MgF2"
    SIO2 = "SiO2"
    AIR = "Air"
    VACUUM = "Vacuum"


class Axis(Enum):
    """Polarization axis an index refers to."""
    Y = "y"
    Z = "z"
    ORDINARY = "ordinary"
    EXTRAORDINARY = "extraordinary"
    ISOTROPIC = "isotropic"


VALID_AXES = {
    Material.KTP: (Axis.Y, Axis.Z),
    Material.YVO4: (Axis.ORDINARY, Axis.EXTRAORDINARY),
    Material.MGF2: (Axis.ORDINARY, Axis.EXTRAORDINARY),
    Material.SIO2: (Axis.ORDINARY, Axis.EXTRAORDINARY),
    Material.AIR: (Axis.ISOTROPIC,),
    Material.VACUUM: (Axis.ISOTROPIC,),
}

FORMULAS = ("sellmeier", "pole", "air", "constant")


def parse_material(value: Union[str, Material]) -> Material:
    """Resolve a material name (case-insensitive) into a Material."""
    if isinstance(value, Material):
        return value
    for material in Material:
        if str(value).lower() in (material.value.lower(), material.name.lower()):
            return material
    raise ValidationError(f"Unknown material '{value}'", value)


def parse_axis(value: Union[str, Axis]) -> Axis:
    """Resolve an axis label into an Axis; 'o'/'e' are accepted."""
    if isinstance(value, Axis):
        return value
    aliases = {"o": Axis.ORDINARY, "e": Axis.EXTRAORDINARY}
    key = str(value).lower()
    if key in aliases:
        return aliases[key]
    for axis in Axis:
        if key == axis.value:
            return axis
    raise ValidationError(f"Unknown axis '{value}'", value)


def check_axis(material: Material, axis: Axis) -> None:
    """Raise ValidationError unless the axis exists for the material."""
    if axis not in VALID_AXES[material]:
        allowed = ", ".join(a.value for a in VALID_AXES[material])
        raise ValidationError(f"Axis '{axis.value}' is not valid for {material.value} (allowed: {allowed})")


@dataclass(frozen=True)
class DispersionModel:
    """
    Named Sellmeier plus thermo-optic model for one material axis.

    Attributes:
        material: Material the model describes
        axis: Polarization axis
        formula: One of 'sellmeier', 'pole', 'air', 'constant'
        coefficients: Formula coefficients (wavelength in micrometres)
        thermo_optic: Rows of inverse-power wavelength polynomials, one per power of dT
        range_nm: Valid wavelength interval
        reference_temperature_c: Temperature at which the Sellmeier fit applies
        provenance: Citation of the coefficient source
        temperature_range_c: Optional valid temperature interval
    """
    material: Material
    axis: Axis
    formula: str
    coefficients: Tuple[float, ...]
    thermo_optic: Tuple[Tuple[float, ...], ...]
    range_nm: Tuple[float, float]
    reference_temperature_c: float
    provenance: str
    temperature_range_c: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        check_axis(self.material, self.axis)
        if self.formula not in FORMULAS:
            raise ValidationError(f"Unknown dispersion formula '{self.formula}'", self.formula)
        lo, hi = self.range_nm
        if not lo < hi:
            raise ValidationError(f"range_nm must be increasing, got {self.range_nm}")
        if not self.provenance:
            raise ValidationError(f"{self.name} needs a provenance string")
        n_coeff = len(self.coefficients)
        if self.formula in ("sellmeier", "pole") and (n_coeff < 2 or n_coeff % 2 != 0):
            raise ValidationError(f"{self.name}: {self.formula} needs [A, B1, C1, ..., D], got {n_coeff} values")
        if self.formula == "air" and n_coeff != 4:
            raise ValidationError(f"{self.name}: air formula needs 4 coefficients, got {n_coeff}")
        if self.formula == "constant" and n_coeff != 1:
            raise ValidationError(f"{self.name}: constant formula needs 1 coefficient, got {n_coeff}")

    @property
    def name(self) -> str:
        return f"{self.material.value}/{self.axis.value}"

    @property
    def is_vacuum(self) -> bool:
        return self.material is Material.VACUUM

    @classmethod
    def from_dict(cls, entry: Dict) -> "DispersionModel":
        """Build a model from one entry of a coefficient document."""
        try:
            t_range = entry.get("temperature_range_c")
            return cls(
                material=parse_material(entry["material"]),
                axis=parse_axis(entry["axis"]),
                formula=entry.get("formula", "sellmeier"),
                coefficients=tuple(float(c) for c in entry["coefficients"]),
                thermo_optic=tuple(tuple(float(a) for a in row) for row in entry.get("thermo_optic", [])),
                range_nm=(float(entry["range_nm"][0]), float(entry["range_nm"][1])),
                reference_temperature_c=float(entry["reference_temperature_c"]),
                provenance=str(entry["provenance"]),
                temperature_range_c=(float(t_range[0]), float(t_range[1])) if t_range else None,
            )
        except KeyError as e:
            raise ConfigError(f"dispersion model entry is missing field {e}", config_key=str(e.args[0]))
        except (TypeError, ValueError, IndexError) as e:
            raise ConfigError(f"malformed dispersion model entry: {e}")

    def to_dict(self) -> Dict:
        entry = {
            "material": self.material.value,
            "axis": self.axis.value,
            "formula": self.formula,
            "coefficients": list(self.coefficients),
            "thermo_optic": [list(row) for row in self.thermo_optic],
            "range_nm": list(self.range_nm),
            "reference_temperature_c": self.reference_temperature_c,
            "provenance": self.provenance,
        }
        if self.temperature_range_c is not None:
            entry["temperature_range_c"] = list(self.temperature_range_c)
        return entry

    def _check_range(self, wavelength_nm: np.ndarray, temperature_c: np.ndarray) -> None:
        if np.any(~np.isfinite(wavelength_nm)) or np.any(wavelength_nm <= 0):
            raise ValidationError("Wavelength must be finite and strictly positive")
        lo, hi = self.range_nm
        if np.any(wavelength_nm < lo) or np.any(wavelength_nm > hi):
            bad = wavelength_nm[(wavelength_nm < lo) | (wavelength_nm > hi)].ravel()[0]
            raise RangeError(f"wavelength {bad:g} nm outside model range", model=self.name, bounds=self.range_nm)
        if self.temperature_range_c is not None:
            t_lo, t_hi = self.temperature_range_c
            if np.any(temperature_c < t_lo) or np.any(temperature_c > t_hi):
                bad = temperature_c[(temperature_c < t_lo) | (temperature_c > t_hi)].ravel()[0]
                raise RangeError(f"temperature {bad:g} degC outside model range", model=self.name,
                                 bounds=self.temperature_range_c)

    def _base_index(self, lam_um: np.ndarray) -> np.ndarray:
        c = self.coefficients
        if self.formula == "constant":
            return np.full_like(lam_um, c[0])
        if self.formula == "air":
            sigma2 = 1.0 / lam_um ** 2
            return 1.0 + c[0] / (c[1] - sigma2) + c[2] / (c[3] - sigma2)
        lam2 = lam_um ** 2
        n2 = np.full_like(lam_um, c[0]) + c[-1] * lam2
        for b, pole in zip(c[1:-1:2], c[2:-1:2]):
            if self.formula == "sellmeier":
                n2 = n2 + b * lam2 / (lam2 - pole)
            else:
                n2 = n2 + b / (lam2 - pole)
        return np.sqrt(n2)

    def _thermal_shift(self, lam_um: np.ndarray, temperature_c: np.ndarray) -> np.ndarray:
        shift = np.zeros(np.broadcast(lam_um, temperature_c).shape)
        if not self.thermo_optic:
            return shift
        dt = temperature_c - self.reference_temperature_c
        for power, row in enumerate(self.thermo_optic, start=1):
            slope = sum(a * lam_um ** (-k) for k, a in enumerate(row))
            shift = shift + slope * dt ** power
        return shift

    def index(self, wavelength_nm: ArrayLike, temperature_c: ArrayLike = 25.0):
        """
        Evaluate the refractive index.

        Args:
            wavelength_nm: Vacuum wavelength(s) in nm
            temperature_c: Temperature(s) in degC

        Returns:
            Index as float for scalar input, ndarray otherwise
        """
        lam = np.asarray(wavelength_nm, dtype=float)
        temp = np.asarray(temperature_c, dtype=float)
        scalar = lam.ndim == 0 and temp.ndim == 0
        if self.formula == "constant":
            value = np.full(np.broadcast(lam, temp).shape, self.coefficients[0])
        else:
            self._check_range(lam, temp)
            lam_um = lam * 1e-3
            value = self._base_index(lam_um) + self._thermal_shift(lam_um, temp)
        return float(value) if scalar else value


def refractive_index(model: DispersionModel, wavelength_nm: ArrayLike, temperature_c: ArrayLike = 25.0):
    """
    Refractive index of a material axis.

    Args:
        model: Dispersion model
        wavelength_nm: Vacuum wavelength in nm
        temperature_c: Temperature in degC

    Returns:
        Dimensionless index

    Raises:
        RangeError: wavelength or temperature outside the model's validity
    """
    return model.index(wavelength_nm, temperature_c)


def birefringence(first: DispersionModel, second: DispersionModel, wavelength_nm: ArrayLike,
                  temperature_c: ArrayLike = 25.0):
    """
    Index difference n_first - n_second of two axes of the same material.

    Pass (ordinary, extraordinary) for the YVO4 bracket of the compensation
    phase, (extraordinary, ordinary) for waveplate retardation and (z, y) for KTP.
    """
    if first.material is not second.material:
        raise UsageError(f"Birefringence needs two axes of one material, got {first.name} and {second.name}")
    return first.index(wavelength_nm, temperature_c) - second.index(wavelength_nm, temperature_c)


def group_index(model: DispersionModel, wavelength_nm: float, temperature_c: float = 25.0, step_nm: float = 0.01) -> float:
    """Group index n - lambda dn/dlambda by central difference."""
    lam = float(wavelength_nm)
    dn = central_difference(lambda x: float(model.index(x, temperature_c)), lam, step_nm)
    return float(model.index(lam, temperature_c)) - lam * dn


ModelRegistry = Dict[Tuple[Material, Axis], DispersionModel]


def load_models(path: Optional[Union[str, Path]] = None) -> ModelRegistry:
    """
    Load a coefficient document.

    Args:
        path: JSON document; the bundled materials file when omitted

    Returns:
        Mapping (material, axis) -> DispersionModel
    """
    path = Path(path) if path is not None else MATERIALS_FILE
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"Cannot read dispersion models from {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Dispersion model file {path} is not valid JSON: {e}")
    entries = document.get("models", document) if isinstance(document, dict) else document
    if not isinstance(entries, list):
        raise ConfigError(f"Dispersion model file {path} must hold a list of models")
    registry: ModelRegistry = {}
    for entry in entries:
        model = DispersionModel.from_dict(entry)
        registry[(model.material, model.axis)] = model
    SandwichLogger.debug(f"Loaded {len(registry)} dispersion models from {path}", "Dispersion")
    return registry


@lru_cache(maxsize=None)
def default_models() -> Tuple[Tuple[Tuple[Material, Axis], DispersionModel], ...]:
    return tuple(load_models().items())


def get_model(material: Union[str, Material], axis: Union[str, Axis], registry: Optional[ModelRegistry] = None) -> DispersionModel:
    """
    Look up a model in a registry (the bundled one by default).

    Raises:
        ValidationError: unknown material or axis
        ConfigError: no model for the pair
    """
    material = parse_material(material)
    axis = parse_axis(axis)
    check_axis(material, axis)
    models = registry if registry is not None else dict(default_models())
    try:
        return models[(material, axis)]
    except KeyError:
        raise ConfigError(f"No dispersion model for {material.value}/{axis.value}")


def vacuum() -> DispersionModel:
    """The vacuum model, n = 1 exactly."""
    return get_model(Material.VACUUM, Axis.ISOTROPIC)


def air() -> DispersionModel:
    """Standard dry air."""
    return get_model(Material.AIR, Axis.ISOTROPIC)
