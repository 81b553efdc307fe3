"""
sandwichpy Polarization State Component
Spectrally averaged two-photon polarization state, analyzer simulation,
visibilities and the Bell-state fidelity witness.

Basis order of every density matrix is (HH, HV, VH, VV). The target state
|Phi+> is (|HH> + |VV>)/sqrt(2).
"""

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .phasecomp import PhaseMap
from .phasematch import JointSpectrum
from ..utils.errors import DomainError, FitError, UsageError, ValidationError
from ..utils.fileio import format_csv, read_csv_rows, OutputMetadata
from ..utils.logger import SandwichLogger

BASIS_ORDER = ("HH", "HV", "VH", "VV")
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

COUNTS_COLUMNS = ("basis", "setting_a", "setting_b", "counts", "singles_s_cps", "singles_i_cps", "duration_s")


class SpectralFilter:
    """Configuration for a band-pass filter in the signal arm."""

    SHAPES = ("tophat", "gaussian")

    def __init__(self, center_nm: float, fwhm_nm: float, shape: str = "tophat", peak_transmission: float = 0.9):
        """
        Initialize filter.

        Args:
            center_nm: Center wavelength
            fwhm_nm: Full width at half maximum of the passband
            shape: 'tophat' or 'gaussian'
            peak_transmission: Transmission at the center, in [0, 1]
        """
        if fwhm_nm <= 0:
            raise ValidationError(f"Filter FWHM must be positive, got {fwhm_nm}")
        if not 0.0 <= peak_transmission <= 1.0:
            raise ValidationError(f"Peak transmission must be in [0, 1], got {peak_transmission}")
        if shape not in self.SHAPES:
            raise ValidationError(f"Filter shape must be one of {self.SHAPES}, got '{shape}'")
        self.center_nm = float(center_nm)
        self.fwhm_nm = float(fwhm_nm)
        self.shape = shape
        self.peak_transmission = float(peak_transmission)

    def __repr__(self) -> str:
        return (f"SpectralFilter(center_nm={self.center_nm}, fwhm_nm={self.fwhm_nm}, shape='{self.shape}', "
                f"peak_transmission={self.peak_transmission})")

    def transmission(self, wavelength_nm):
        """Power transmission at the given wavelength(s)."""
        lam = np.asarray(wavelength_nm, dtype=float)
        offset = lam - self.center_nm
        if self.shape == "tophat":
            value = np.where(np.abs(offset) <= 0.5 * self.fwhm_nm, self.peak_transmission, 0.0)
        else:
            value = self.peak_transmission * np.exp(-4.0 * math.log(2.0) * offset ** 2 / self.fwhm_nm ** 2)
        return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class AnalyzerSetting:
    """Polarizer angle, optionally preceded by a quarter-wave plate (degrees)."""
    theta_deg: float
    qwp_angle_deg: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.theta_deg) or (self.qwp_angle_deg is not None and not math.isfinite(self.qwp_angle_deg)):
            raise ValidationError("Analyzer angles must be finite")


class Basis(Enum):
    """Measurement bases with their two analyzer settings (i, j)."""
    HV = "HV"
    DA = "DA"
    LR = "LR"

    def settings(self) -> Tuple[AnalyzerSetting, AnalyzerSetting]:
        if self is Basis.HV:
            return AnalyzerSetting(0.0), AnalyzerSetting(90.0)
        if self is Basis.DA:
            return AnalyzerSetting(45.0), AnalyzerSetting(-45.0)
        return AnalyzerSetting(0.0, 45.0), AnalyzerSetting(90.0, 45.0)

    def labels(self) -> Tuple[str, str]:
        return self.value[0], self.value[1]


class BellTarget(Enum):
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"

    @classmethod
    def parse(cls, value: Union[str, "BellTarget"]) -> "BellTarget":
        if isinstance(value, BellTarget):
            return value
        key = str(value).lower().replace("φ", "phi").replace("Φ", "phi").replace("_", "").replace("plus", "+").replace("minus", "-")
        for target in cls:
            if key == target.value:
                return target
        raise ValidationError(f"Unknown Bell target '{value}'", value)

    @property
    def sign(self) -> int:
        return 1 if self is BellTarget.PHI_PLUS else -1


class PolarizationDensityMatrix:
    """Two-photon polarization density matrix in the (HH, HV, VH, VV) basis."""

    def __init__(self, elements):
        rho = np.array(elements, dtype=complex)
        if rho.shape != (4, 4):
            raise ValidationError(f"Density matrix must be 4x4, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValidationError("Density matrix is not Hermitian")
        trace = np.trace(rho).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValidationError(f"Density matrix trace must be 1, got {trace}")
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))
        if min_eig < -PSD_TOL:
            raise ValidationError(f"Density matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")
        self.elements = rho

    def __repr__(self) -> str:
        return f"PolarizationDensityMatrix(coherence={self.coherence:.6f})"

    @property
    def coherence(self) -> complex:
        """The HH-VV coherence element."""
        return complex(self.elements[0, 3])

    @classmethod
    def from_ket(cls, ket) -> "PolarizationDensityMatrix":
        psi = np.asarray(ket, dtype=complex).reshape(4)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def to_dict(self) -> Dict:
        return {"basis": list(BASIS_ORDER), "real": self.elements.real.tolist(), "imag": self.elements.imag.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PolarizationDensityMatrix":
        document = json.loads(text)
        if tuple(document.get("basis", BASIS_ORDER)) != BASIS_ORDER:
            raise ValidationError(f"Unsupported basis order {document.get('basis')}")
        return cls(np.asarray(document["real"], dtype=float) + 1j * np.asarray(document["imag"], dtype=float))


def bell_state(target: Union[str, BellTarget] = BellTarget.PHI_PLUS) -> PolarizationDensityMatrix:
    """|Phi+> or |Phi-> as a density matrix."""
    sign = BellTarget.parse(target).sign
    return PolarizationDensityMatrix.from_ket([1.0, 0.0, 0.0, sign])


def maximally_mixed() -> PolarizationDensityMatrix:
    return PolarizationDensityMatrix(np.eye(4) / 4.0)


def phase_state(coherence: complex, balance: float = 0.5) -> PolarizationDensityMatrix:
    """
    Member of the |HH> + e^{i phi}|VV> family with a spectrally averaged coherence.

    Args:
        coherence: D = <e^{i phi}> over the detected spectrum, |D| <= 1
        balance: HH population b in [0, 1]; VV gets 1 - b

    Returns:
        Density matrix with rho_HH,VV = sqrt(b(1-b)) D
    """
    if not 0.0 <= balance <= 1.0:
        raise ValidationError(f"Balance must be in [0, 1], got {balance}")
    if abs(coherence) > 1.0 + 1e-12:
        raise ValidationError(f"Spectral coherence magnitude exceeds 1, got {abs(coherence)}")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = balance
    rho[3, 3] = 1.0 - balance
    rho[0, 3] = math.sqrt(balance * (1.0 - balance)) * coherence
    rho[3, 0] = np.conj(rho[0, 3])
    return PolarizationDensityMatrix(rho)


def spectral_coherence(phase, weights) -> complex:
    """D = sum w e^{i phi} / sum w."""
    w = np.asarray(weights, dtype=float)
    total = float(np.sum(w))
    if total <= 0:
        raise DomainError("Spectral weights vanish on the grid")
    return complex(np.sum(w * np.exp(1j * np.asarray(phase, dtype=float))) / total)


def build_state(phase_map: Union[PhaseMap, Sequence[float]], spectrum: JointSpectrum,
                filter_signal: Optional[SpectralFilter] = None, balance: float = 0.5) -> PolarizationDensityMatrix:
    """
    Spectrally averaged polarization state.

    Args:
        phase_map: Diagonal phase map (or bare phase samples) on the spectrum's signal grid
        spectrum: Joint spectrum
        filter_signal: Signal-side filter; it also selects the idler in coincidence
        balance: HH-vs-VV amplitude weight (0.5 = balanced)

    Returns:
        Density matrix with coherence sqrt(b(1-b)) D
    """
    if isinstance(phase_map, PhaseMap):
        if not phase_map.diagonal:
            raise UsageError("build_state needs a phase map on the energy-conserving diagonal")
        if phase_map.signal_grid.shape != spectrum.signal_grid.shape or not np.allclose(
                phase_map.signal_grid, spectrum.signal_grid, rtol=0.0, atol=1e-9):
            raise UsageError("Phase map and joint spectrum are sampled on different signal grids")
        phase = phase_map.phase
    else:
        phase = np.asarray(phase_map, dtype=float)
        if phase.shape != spectrum.signal_grid.shape:
            raise UsageError("Phase samples and joint spectrum have different lengths")
    weights = spectrum.intensity
    if filter_signal is not None:
        weights = weights * filter_signal.transmission(spectrum.signal_grid)
    coherence = spectral_coherence(phase, weights)
    SandwichLogger.debug(f"Spectral coherence |D| = {abs(coherence):.6f}", "PolState")
    return phase_state(coherence, balance)


def analyzer_bra(setting: AnalyzerSetting) -> np.ndarray:
    """Row vector <theta| U_qwp of a QWP + polarizer chain."""
    theta = math.radians(setting.theta_deg)
    bra = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    if setting.qwp_angle_deg is None:
        return bra
    q = math.radians(setting.qwp_angle_deg)
    rot = np.array([[math.cos(q), -math.sin(q)], [math.sin(q), math.cos(q)]])
    qwp = rot @ np.diag([1.0, -1j]) @ rot.T
    return bra @ qwp


def analyzer_projector(setting: AnalyzerSetting) -> np.ndarray:
    bra = analyzer_bra(setting)
    return np.outer(bra.conj(), bra)


def coincidence_probability(rho: PolarizationDensityMatrix, setting_a: AnalyzerSetting,
                            setting_b: AnalyzerSetting) -> float:
    """
    Probability Tr[rho (Pi_A x Pi_B)] of a coincidence behind both analyzers.

    Args:
        rho: Two-photon state
        setting_a: Signal analyzer
        setting_b: Idler analyzer

    Returns:
        Probability in [0, 1]
    """
    projector = np.kron(analyzer_projector(setting_a), analyzer_projector(setting_b))
    value = float(np.real(np.trace(rho.elements @ projector)))
    return min(max(value, 0.0), 1.0)


def correlation_scan(rho: PolarizationDensityMatrix, theta_b_deg: float, theta_a_grid: Sequence[float],
                     qwp_angle_deg: Optional[float] = None) -> np.ndarray:
    """Coincidence probability versus the signal polarizer angle at a fixed idler angle."""
    grid = np.asarray(theta_a_grid, dtype=float)
    if grid.size == 0:
        raise UsageError("Correlation scan needs at least one angle")
    setting_b = AnalyzerSetting(float(theta_b_deg), qwp_angle_deg)
    return np.array([coincidence_probability(rho, AnalyzerSetting(float(t), qwp_angle_deg), setting_b) for t in grid])


@dataclass(frozen=True)
class VisibilityFit:
    """Result of fitting A (1 - V cos 2(theta - theta_0))."""
    visibility: float
    theta0_deg: float
    amplitude: float
    residual_rms: float


def fit_visibility(theta_a_deg: Sequence[float], values: Sequence[float]) -> VisibilityFit:
    """
    Least-squares fringe fit of A (1 - V cos 2(theta_A - theta_0)).

    The model is linear in (A, A V cos 2 theta_0, A V sin 2 theta_0), so the
    fit is a direct linear solve.

    Args:
        theta_a_deg: Polarizer angles in degrees
        values: Probabilities or coincidence counts at those angles

    Returns:
        VisibilityFit; theta_0 is the fringe minimum in [0, 180)

    Raises:
        FitError: too few angles, too narrow a span, or no fringe
    """
    theta = np.asarray(theta_a_deg, dtype=float)
    data = np.asarray(values, dtype=float)
    if theta.shape != data.shape or theta.ndim != 1:
        raise UsageError("Angles and values must be 1-D sequences of equal length")
    if np.unique(np.round(theta, 9)).size < 4:
        raise FitError("Visibility fit needs at least 4 distinct angles")
    if np.ptp(theta) < 90.0 - 1e-9:
        raise FitError(f"Angles must span at least half a period (90 deg), got {np.ptp(theta):g} deg")
    two = np.radians(2.0 * theta)
    design = np.column_stack([np.ones_like(two), np.cos(two), np.sin(two)])
    (c0, c1, c2), *_ = np.linalg.lstsq(design, data, rcond=None)
    fringe = math.hypot(c1, c2)
    scale = max(float(np.max(np.abs(data))), 1e-300)
    if c0 <= 0 or fringe <= 1e-12 * scale:
        raise FitError("Data show no fringe to fit")
    residual = data - design @ np.array([c0, c1, c2])
    theta0 = math.degrees(0.5 * math.atan2(-c2, -c1)) % 180.0
    return VisibilityFit(min(fringe / c0, 1.0), theta0, float(c0), float(np.sqrt(np.mean(residual ** 2))))


@dataclass
class CountsRecord:
    """
    Coincidence counts in one basis.

    counts[a][b] holds the counts with the signal analyzer at setting a and
    the idler analyzer at setting b (index 0 = first letter of the basis).
    Singles are either per-setting pairs or a single total rate, in cps.
    """
    basis: Basis
    counts: np.ndarray
    singles_s: Optional[Union[float, Tuple[float, float]]] = None
    singles_i: Optional[Union[float, Tuple[float, float]]] = None
    duration_s: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.basis, Basis):
            self.basis = Basis(str(self.basis).upper())
        self.counts = np.asarray(self.counts, dtype=float).reshape(2, 2)
        if np.any(self.counts < 0) or not np.all(np.isfinite(self.counts)):
            raise ValidationError("Counts must be finite and nonnegative")
        if self.duration_s is not None and self.duration_s <= 0:
            raise ValidationError(f"Duration must be positive, got {self.duration_s}")

    @property
    def total(self) -> float:
        return float(np.sum(self.counts))

    def per_setting_singles(self) -> Tuple[np.ndarray, np.ndarray]:
        """Singles for each analyzer setting; a total rate is split by setting occupancy."""
        if self.singles_s is None or self.singles_i is None:
            raise UsageError(f"{self.basis.value} record has no singles rates")
        total = self.total
        occupancy_a = self.counts.sum(axis=1) / total if total > 0 else np.full(2, 0.5)
        occupancy_b = self.counts.sum(axis=0) / total if total > 0 else np.full(2, 0.5)
        s = np.asarray(self.singles_s, dtype=float)
        i = np.asarray(self.singles_i, dtype=float)
        s = s * occupancy_a if s.ndim == 0 else s.reshape(2)
        i = i * occupancy_b if i.ndim == 0 else i.reshape(2)
        return s, i


def basis_visibility(record: CountsRecord) -> float:
    """V = (N_ii + N_jj - N_ij - N_ji) / (N_ii + N_jj + N_ij + N_ji)."""
    n = record.counts
    total = record.total
    if total <= 0:
        raise DomainError(f"{record.basis.value} record has no counts")
    return float((n[0, 0] + n[1, 1] - n[0, 1] - n[1, 0]) / total)


def accidental_correction(record: CountsRecord, tau_s: float) -> CountsRecord:
    """
    Subtract expected accidentals R_s(i) R_i(j) tau T from every cell, floored at zero.

    Args:
        record: Raw counts with singles and duration
        tau_s: Coincidence window in s

    Returns:
        Corrected record (counts become real-valued)
    """
    if tau_s < 0:
        raise ValidationError(f"Coincidence window must be non-negative, got {tau_s}")
    if tau_s == 0:
        return record
    if record.duration_s is None:
        raise UsageError(f"{record.basis.value} record has no duration")
    singles_a, singles_b = record.per_setting_singles()
    accidentals = np.outer(singles_a, singles_b) * tau_s * record.duration_s
    corrected = np.maximum(record.counts - accidentals, 0.0)
    return CountsRecord(record.basis, corrected, record.singles_s, record.singles_i, record.duration_s)


@dataclass(frozen=True)
class VisibilitySet:
    """Signed visibilities in the three mutually unbiased bases."""
    v_hv: float
    v_da: float
    v_lr: float
    corrected: bool = False

    def __post_init__(self):
        for name in ("v_hv", "v_da", "v_lr"):
            value = getattr(self, name)
            if not -1.0 - 1e-12 <= value <= 1.0 + 1e-12:
                raise ValidationError(f"{name} must lie in [-1, 1], got {value}")

    @classmethod
    def from_records(cls, records: Sequence[CountsRecord], corrected: bool = False) -> "VisibilitySet":
        by_basis = {record.basis: record for record in records}
        missing = [b.value for b in Basis if b not in by_basis]
        if missing:
            raise UsageError(f"Missing counts for bases: {', '.join(missing)}")
        return cls(basis_visibility(by_basis[Basis.HV]), basis_visibility(by_basis[Basis.DA]),
                   basis_visibility(by_basis[Basis.LR]), corrected)


def fidelity_witness(visibilities: VisibilitySet, target: Union[str, BellTarget] = BellTarget.PHI_PLUS) -> float:
    """F = (1 + V_HV + s V_DA - s V_LR) / 4 with s = +1 for Phi+ and -1 for Phi-."""
    s = BellTarget.parse(target).sign
    return (1.0 + visibilities.v_hv + s * visibilities.v_da - s * visibilities.v_lr) / 4.0


def fidelity_from_state(rho: PolarizationDensityMatrix, target: Union[str, BellTarget] = BellTarget.PHI_PLUS) -> float:
    """<Phi|rho|Phi> for the chosen Bell state."""
    s = BellTarget.parse(target).sign
    ket = np.array([1.0, 0.0, 0.0, s], dtype=complex) / math.sqrt(2.0)
    return float(np.real(ket.conj() @ rho.elements @ ket))


def basis_probabilities(rho: PolarizationDensityMatrix, basis: Basis) -> np.ndarray:
    first, second = basis.settings()
    settings = (first, second)
    return np.array([[coincidence_probability(rho, a, b) for b in settings] for a in settings])


def visibilities_from_state(rho: PolarizationDensityMatrix) -> VisibilitySet:
    """Exact visibilities of a state in the three bases."""
    values = []
    for basis in Basis:
        p = basis_probabilities(rho, basis)
        values.append(float((p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0]) / np.sum(p)))
    return VisibilitySet(*values)


def records_from_state(rho: PolarizationDensityMatrix, pair_rate_cps: float, duration_s: float,
                       singles_s: Optional[float] = None, singles_i: Optional[float] = None) -> List[CountsRecord]:
    """Expected (rounded) counts in every basis for a detected pair rate."""
    if pair_rate_cps < 0 or duration_s <= 0:
        raise ValidationError("Pair rate must be non-negative and duration positive")
    records = []
    for basis in Basis:
        counts = np.rint(pair_rate_cps * duration_s * basis_probabilities(rho, basis))
        records.append(CountsRecord(basis, counts, singles_s, singles_i, duration_s))
    return records


def counts_rows(records: Sequence[CountsRecord]) -> List[Tuple]:
    rows = []
    for record in records:
        labels = record.basis.labels()
        if record.singles_s is not None and record.singles_i is not None:
            singles_a, singles_b = record.per_setting_singles()
        else:
            singles_a = singles_b = (None, None)
        for a in range(2):
            for b in range(2):
                count = record.counts[a, b]
                rows.append((record.basis.value, labels[a], labels[b],
                             int(count) if float(count).is_integer() else float(count),
                             "" if singles_a[a] is None else float(singles_a[a]),
                             "" if singles_b[b] is None else float(singles_b[b]),
                             "" if record.duration_s is None else record.duration_s))
    return rows


def save_counts(path: Union[str, Path], records: Sequence[CountsRecord], metadata: Optional[OutputMetadata] = None) -> Path:
    """Write CountsRecords as CSV, one row per analyzer setting pair."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_csv(COUNTS_COLUMNS, counts_rows(records), metadata), encoding="utf-8")
    return path


def _optional_float(value: Optional[str]) -> Optional[float]:
    if value is None or str(value).strip() == "":
        return None
    return float(value)


def load_counts(path: Union[str, Path]) -> List[CountsRecord]:
    """Read CountsRecords from CSV."""
    rows = read_csv_rows(path)
    if not rows:
        raise UsageError(f"Counts file {path} has no rows")
    missing = [c for c in COUNTS_COLUMNS[:4] if c not in rows[0]]
    if missing:
        raise UsageError(f"Counts file {path} lacks columns: {', '.join(missing)}")
    grouped: Dict[Basis, Dict] = {}
    try:
        for row in rows:
            basis = Basis(row["basis"].strip().upper())
            labels = basis.labels()
            a = labels.index(row["setting_a"].strip().upper())
            b = labels.index(row["setting_b"].strip().upper())
            entry = grouped.setdefault(basis, {"counts": np.full((2, 2), np.nan), "s": [None, None],
                                               "i": [None, None], "duration": None})
            entry["counts"][a, b] = float(row["counts"])
            entry["s"][a] = _optional_float(row.get("singles_s_cps"))
            entry["i"][b] = _optional_float(row.get("singles_i_cps"))
            entry["duration"] = _optional_float(row.get("duration_s"))
    except ValueError as e:
        raise UsageError(f"Malformed counts file {path}: {e}")
    records = []
    for basis, entry in grouped.items():
        if np.any(np.isnan(entry["counts"])):
            raise UsageError(f"Counts file {path} is missing settings for basis {basis.value}")
        singles_s = tuple(entry["s"]) if None not in entry["s"] else None
        singles_i = tuple(entry["i"]) if None not in entry["i"] else None
        records.append(CountsRecord(basis, entry["counts"], singles_s, singles_i, entry["duration"]))
    return records
