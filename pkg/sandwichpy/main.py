"""
sandwichpy Main Entry Point
Command-line front end for the design and simulation workflows.

Every subcommand reads one JSON configuration document (the bundled
paper.json unless --config or $SANDWICHPY_CONFIG says otherwise) and writes
a plot-ready CSV or JSON table.
"""

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .components.counting import (
    RATE_COLUMNS,
    DetectionConfig,
    SourceBrightness,
    calibrate,
    compare_with_analytic,
    detected_pair_rate_per_mw,
    power_sweep,
    simulate_timetags,
    spectral_brightness,
    state_fidelity_from_visibility,
)
from .components.phasecomp import (
    CSV_COLUMNS as PHASE_COLUMNS,
    WEIGHTINGS,
    CompensatorSpec,
    PhaseSetup,
    SpectralWindow,
    WaveplateStack,
    bell_fidelity,
    crystal_temperature_phase_shift,
    fidelity_vs_displacement,
    load_waveplate,
    mirror_displacement_phase,
    optimize_compensator_length,
    phase_flatness,
    phase_temperature_slope,
    pi_shift_temperature,
    temperature_phase_scan,
    temperature_phase_shift,
    temperature_tolerance,
    total_phase_map,
    vacuum_stack,
)
from .components.phasematch import CrystalSpec, idler_wavelength, joint_spectrum, phasematch_temperature
from .components.polstate import (
    BellTarget,
    PolarizationDensityMatrix,
    SpectralFilter,
    VisibilitySet,
    accidental_correction,
    build_state,
    correlation_scan,
    fidelity_from_state,
    fidelity_witness,
    fit_visibility,
    load_counts,
    visibilities_from_state,
)
from .utils.config import Config
from .utils.errors import (
    ConfigError,
    DomainError,
    FitError,
    NoRootError,
    RangeError,
    SandwichError,
    UsageError,
    ValidationError,
)
from .utils.fileio import OutputMetadata, format_csv, format_json, write_text
from .utils.logger import SandwichLogger

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_NUMERIC = 4

STATE_HALF_WINDOW_NM = 10.0
STATE_GRID_STEP_NM = 0.01
DEFAULT_POWERS_MW = (0.0104, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
DEFAULT_WINDOWS_NS = (3.2, 0.5)


@dataclass
class SourceConfig:
    """
    Complete description of one folded-sandwich source.
    Build it from a configuration document with SourceConfig.from_config().
    """
    pump_nm: float
    signal_nm: float
    crystal: CrystalSpec
    waveplate: WaveplateStack
    compensator: CompensatorSpec
    spectral_filter: SpectralFilter
    detection: DetectionConfig
    brightness: SourceBrightness
    ktp_temperature_c: float
    balance: float = 0.5
    target: BellTarget = BellTarget.PHI_PLUS
    name: str = "sandwichpy source"
    idler_nm: float = field(init=False)

    def __post_init__(self):
        self.idler_nm = float(idler_wavelength(self.pump_nm, self.signal_nm))

    @property
    def yvo_temperature_c(self) -> float:
        return self.compensator.temperature_c

    @classmethod
    def from_config(cls, cfg: Config) -> "SourceConfig":
        """
        Build every component from a configuration document.

        Raises:
            ConfigError: naming the dotted key of the first invalid field
        """
        pump_nm = cfg.get_float("pump_nm")
        signal_nm = cfg.get_float("signal_nm")
        _guarded("signal_nm", lambda: idler_wavelength(pump_nm, signal_nm))

        crystal = _guarded("crystal", lambda: CrystalSpec(
            cfg.get_float("crystal.length_mm"),
            cfg.get_float("crystal.poling_period_um"),
            cfg.get("crystal.material", "KTP"),
        ))
        waveplate = _guarded("waveplate", lambda: _load_stack(cfg))
        compensator = _guarded("compensator", lambda: CompensatorSpec(
            cfg.get_float("compensator.length_mm"),
            cfg.get_float("temperatures.yvo_c", 25.0),
        ))
        spectral_filter = _guarded("filter", lambda: SpectralFilter(
            cfg.get_float("filter.center_nm", signal_nm),
            cfg.get_float("filter.fwhm_nm"),
            cfg.get("filter.shape", "tophat"),
            cfg.get_float("filter.peak_transmission", 0.9),
        ))
        detection = _guarded("detection", lambda: DetectionConfig(
            eta_s=cfg.get_float("detection.eta_s", 0.5),
            eta_i=cfg.get_float("detection.eta_i", 0.5),
            dark_s=cfg.get_float("detection.dark_s", 300.0),
            dark_i=cfg.get_float("detection.dark_i", 300.0),
            tau_cc=cfg.get_float("detection.tau_cc_ns", 3.2) * 1e-9,
            tau_dead=cfg.get_float("detection.tau_dead_ns", 50.0) * 1e-9,
            analyzer_transmission=cfg.get_float("detection.analyzer_transmission", 0.9),
        ))
        spectral_fwhm = cfg.get_float("brightness.spectral_fwhm_nm", 2.9)
        recycling = cfg.get_float("brightness.pump_recycling", 1.0)

        if cfg.has("calibration"):
            calibration = _guarded("calibration", lambda: calibrate(
                cfg.get_float("calibration.power_mw"),
                cfg.get_float("calibration.singles_s"),
                cfg.get_float("calibration.singles_i"),
                cfg.get_float("calibration.coincidences"),
                detection,
                recycling,
            ))
            placeholder = _guarded("brightness", lambda: SourceBrightness(1.0, spectral_fwhm, recycling))
            brightness, detection = calibration.apply(placeholder, detection)
        else:
            brightness = _guarded("brightness", lambda: SourceBrightness(
                cfg.get_float("brightness.pairs_per_mw"), spectral_fwhm, recycling))

        if cfg.has("temperatures.ktp_c"):
            ktp_c = cfg.get_float("temperatures.ktp_c")
        else:
            ktp_c = phasematch_temperature(pump_nm, signal_nm, crystal)

        balance = cfg.get_float("state.balance", 0.5)
        if not 0.0 <= balance <= 1.0:
            raise ConfigError(f"must be in [0, 1], got {balance}", config_key="state.balance")
        target = _guarded("state.target", lambda: BellTarget.parse(cfg.get("state.target", "phi+")))

        return cls(pump_nm, signal_nm, crystal, waveplate, compensator, spectral_filter, detection, brightness, ktp_c,
                   balance, target, str(cfg.get("name", "sandwichpy source")))

    def phase_setup(self, compensated: bool = True) -> PhaseSetup:
        comp = self.compensator if compensated else self.compensator.with_length(0.0)
        return PhaseSetup(self.pump_nm, self.crystal, self.waveplate, comp, self.ktp_temperature_c)

    def state_grid(self) -> np.ndarray:
        points = int(round(2 * STATE_HALF_WINDOW_NM / STATE_GRID_STEP_NM)) + 1
        return np.linspace(self.signal_nm - STATE_HALF_WINDOW_NM, self.signal_nm + STATE_HALF_WINDOW_NM, points)

    def state(self, yvo_detune_k: float = 0.0) -> PolarizationDensityMatrix:
        """
        Filtered two-photon polarization state.

        The compensator temperature is assumed tuned so that the phase at the
        configured signal wavelength is zero; yvo_detune_k moves away from it.
        """
        grid = self.state_grid()
        phase_map = total_phase_map(self.phase_setup(), grid, offset_subtracted=True, center_signal_nm=self.signal_nm)
        shift = temperature_phase_shift(self.compensator, yvo_detune_k, self.signal_nm, self.idler_nm)
        if self.target is BellTarget.PHI_MINUS:
            shift += math.pi
        spectrum = joint_spectrum(self.pump_nm, self.ktp_temperature_c, self.crystal, grid)
        return build_state(phase_map.phase + shift, spectrum, self.spectral_filter, self.balance)


def _guarded(key: str, build: Callable[[], Any]) -> Any:
    """Run a component constructor and turn its failure into a field-level ConfigError."""
    try:
        return build()
    except ConfigError:
        raise
    except (ValidationError, DomainError, RangeError, UsageError) as e:
        raise ConfigError(e.message, config_key=key)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value: {e}", config_key=key)


def _load_stack(cfg: Config) -> WaveplateStack:
    value = cfg.get("waveplate", "default")
    if isinstance(value, dict):
        stack = WaveplateStack.from_dict(value)
    elif value == "default":
        stack = load_waveplate()
    elif value == "vacuum":
        stack = vacuum_stack()
    elif isinstance(value, str):
        path = Path(value)
        if not path.is_absolute() and cfg.source is not None:
            path = Path(cfg.source).parent / path
        stack = load_waveplate(path)
    else:
        raise ConfigError(f"must be 'default', 'vacuum', a path or an object, got {value!r}", config_key="waveplate")
    if cfg.has("waveplate_tilt_deg"):
        stack = stack.with_tilt(cfg.get_float("waveplate_tilt_deg"))
    return stack


@dataclass
class CommandResult:
    """Table, JSON payload and console summary produced by one subcommand."""
    columns: Sequence[str]
    rows: List[Tuple]
    payload: Dict[str, Any]
    summary: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)


# --- subcommands -----------------------------------------------------------

def cmd_phase_map(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    window = SpectralWindow(args.center if args.center is not None else source.signal_nm, args.window, args.grid)
    setup = source.phase_setup(compensated=args.compensated)
    signal = window.grid()
    idler = None
    if args.map == "2d":
        idler_center = float(idler_wavelength(source.pump_nm, window.center_signal_nm))
        idler = SpectralWindow(idler_center, args.window, args.grid).grid()
    phase_map = total_phase_map(setup, signal, idler, offset_subtracted=True, center_signal_nm=window.center_signal_nm)
    report = phase_flatness(phase_map)
    label = "compensated" if args.compensated else "uncompensated"
    summary = [
        f"{label} phase over signal {report.window[0][0]:.3f}-{report.window[0][1]:.3f} nm: "
        f"peak-to-peak {report.peak_to_peak:.4f} rad, rms {report.rms:.4f} rad",
    ]
    payload = {"phase_map": phase_map.to_dict(), "flatness": report.to_dict(), "compensated": args.compensated}
    return CommandResult(PHASE_COLUMNS, phase_map.rows(), payload, summary,
                         {"peak_to_peak_rad": report.peak_to_peak, "compensator_mm": setup.compensator.length_mm})


def cmd_optimize(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    half_width = args.window if args.window is not None else 0.5 * source.spectral_filter.fwhm_nm
    window = SpectralWindow(source.signal_nm, half_width, args.points)
    weightings = WEIGHTINGS if args.weighting == "all" else (args.weighting,)
    uncompensated = source.phase_setup(compensated=False)
    baseline = total_phase_map(uncompensated, window.grid())
    weights = joint_spectrum(source.pump_nm, source.ktp_temperature_c, source.crystal, window.grid()).intensity

    rows = []
    results = []
    summary = []
    for weighting in weightings:
        length, after = optimize_compensator_length(uncompensated, window, weighting)
        before = phase_flatness(baseline, weights if weighting == "spectrum-weighted" else None)
        rows.append((weighting, length, before.peak_to_peak, after.peak_to_peak, before.rms, after.rms))
        results.append({"weighting": weighting, "optimal_length_mm": length,
                        "before": before.to_dict(), "after": after.to_dict()})
        summary.append(f"{weighting}: L* = {length:.3f} mm, peak-to-peak {before.peak_to_peak:.4f} -> "
                       f"{after.peak_to_peak:.4f} rad")
    columns = ("weighting", "optimal_length_mm", "p2p_before_rad", "p2p_after_rad", "rms_before_rad", "rms_after_rad")
    payload = {"window": {"center_signal_nm": window.center_signal_nm, "half_width_nm": half_width,
                          "points": window.points}, "results": results}
    return CommandResult(columns, rows, payload, summary)


def cmd_correlations(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    rho = source.state(args.yvo_detune)
    theta_a = np.arange(0.0, 180.0, args.step)
    rows = []
    fits = []
    summary = []
    for theta_b in args.basis_angle:
        curve = correlation_scan(rho, theta_b, theta_a)
        rows.extend((theta_b, float(a), float(p)) for a, p in zip(theta_a, curve))
        try:
            fit = fit_visibility(theta_a, curve)
        except FitError as e:
            SandwichLogger.warning(f"No fringe at theta_B = {theta_b} deg: {e.message}", "CLI")
            fits.append({"theta_b_deg": theta_b, "visibility": None, "theta0_deg": None})
            summary.append(f"theta_B = {theta_b:6.1f} deg: no fringe")
            continue
        fits.append({"theta_b_deg": theta_b, "visibility": fit.visibility, "theta0_deg": fit.theta0_deg})
        summary.append(f"theta_B = {theta_b:6.1f} deg: V = {fit.visibility:.3f}")

    visibilities = visibilities_from_state(rho)
    witness = fidelity_witness(visibilities, source.target)
    fidelity = fidelity_from_state(rho, BellTarget.PHI_PLUS)
    summary.append(f"V_HV = {visibilities.v_hv:.3f}, V_DA = {visibilities.v_da:.3f}, V_LR = {visibilities.v_lr:.3f}")
    summary.append(f"fidelity witness ({source.target.value}) F = {witness:.3f}; fidelity vs phi+ = {fidelity:.3f}")
    payload = {
        "yvo_detune_k": args.yvo_detune,
        "density_matrix": rho.to_dict(),
        "fits": fits,
        "visibilities": {"v_hv": visibilities.v_hv, "v_da": visibilities.v_da, "v_lr": visibilities.v_lr},
        "fidelity_witness": witness,
        "fidelity_phi_plus": fidelity,
        "curves": [{"theta_b_deg": r[0], "theta_a_deg": r[1], "probability": r[2]} for r in rows],
    }
    return CommandResult(("theta_b_deg", "theta_a_deg", "probability"), rows, payload, summary,
                         {"fidelity_witness": witness})


def cmd_rates(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    if args.state_visibility is not None:
        visibility = args.state_visibility
    else:
        v = visibilities_from_state(source.state())
        s = source.target.sign
        visibility = min(1.0, max(0.0, (v.v_hv + s * v.v_da - s * v.v_lr) / 3.0))
    reports = power_sweep(args.powers, source.brightness, source.detection, [w * 1e-9 for w in args.windows],
                          visibility)
    brightness = spectral_brightness(source.brightness, source.detection)
    summary = [
        f"generated {source.brightness.pairs_per_mw:.4g} pairs/s/mW; detected {detected_pair_rate_per_mw(source.brightness, source.detection):.4g} pairs/s/mW",
        f"detected spectral brightness {brightness:.4g} pairs/s/mW/nm; state fidelity {state_fidelity_from_visibility(visibility):.4f}",
    ]
    payload = {"state_visibility": visibility, "spectral_brightness": brightness,
               "rates": [r.to_dict() for r in reports]}
    return CommandResult(RATE_COLUMNS, [r.row() for r in reports], payload, summary)


def cmd_montecarlo(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    if args.duration <= 0:
        raise UsageError(f"--duration must be positive, got {args.duration}")
    power = args.power if args.power is not None else DEFAULT_POWERS_MW[0]
    comparisons = compare_with_analytic(power, source.brightness, source.detection, args.duration, args.seed,
                                        args.delay_ns * 1e-9)
    if args.timetags is not None:
        signal, idler = simulate_timetags(power, source.brightness, source.detection, args.duration, args.seed)
        write_text(args.timetags, format_csv(("channel", "t_seconds"), signal.rows() + idler.rows()))
    rows = [(c.quantity, c.monte_carlo, c.analytic, c.sigma, c.deviation) for c in comparisons]
    summary = [f"{c.quantity:12s} MC {c.monte_carlo:12.2f} cps  analytic {c.analytic:12.2f} cps  "
               f"({c.deviation:+.2f} sigma)" for c in comparisons]
    payload = {"power_mw": power, "duration_s": args.duration, "seed": args.seed,
               "comparisons": [dict(zip(("quantity", "monte_carlo_cps", "analytic_cps", "sigma_cps", "deviation_sigma"),
                                        row)) for row in rows]}
    return CommandResult(("quantity", "monte_carlo_cps", "analytic_cps", "sigma_cps", "deviation_sigma"), rows, payload,
                         summary, {"power_mw": power, "duration_s": args.duration, "seed": args.seed})


def cmd_temperature(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    s, i = source.signal_nm, source.idler_nm
    if args.element == "yvo":
        element: Any = source.compensator
        slope = phase_temperature_slope(element, s, i)
        delta_t_pi = pi_shift_temperature(element, s, i)
        tolerance = temperature_tolerance(element, args.fidelity_target, s, i)
        points = [(p.delta_t, p.phase_rad, p.fidelity) for p in temperature_phase_scan(element, args.scan, s, i)]
    else:
        element = source.crystal
        t0 = source.ktp_temperature_c
        slope = phase_temperature_slope(element, s, i, t0)
        delta_t_pi = math.pi / abs(slope)
        tolerance = temperature_tolerance(element, args.fidelity_target, s, i, t0)
        points = []
        for delta_t in args.scan:
            shift = crystal_temperature_phase_shift(element, t0, float(delta_t), s, i)
            points.append((float(delta_t), shift, bell_fidelity(shift)))
    summary = [
        f"{args.element}: dphi/dT = {slope:.4f} rad/K",
        f"delta T for a pi shift = {delta_t_pi:.4f} K",
        f"fidelity >= {args.fidelity_target} needs +/- {tolerance:.4f} K",
    ]
    report = {"element": args.element, "slope_rad_per_k": slope, "delta_t_pi_k": delta_t_pi,
              "fidelity_target": args.fidelity_target, "delta_t_max_k": tolerance}
    payload = {"report": report, "scan": [{"delta_t_k": a, "phase_rad": b, "fidelity": c} for a, b, c in points]}
    return CommandResult(("delta_t_k", "phase_rad", "fidelity"), points, payload, summary, report)


def cmd_displacement(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    if args.step_um <= 0 or args.max_um < 0:
        raise UsageError("--step-um must be positive and --max-um non-negative")
    displacements = np.arange(0.0, args.max_um + 0.5 * args.step_um, args.step_um)
    rows = fidelity_vs_displacement(displacements, source.pump_nm, source.signal_nm, source.idler_nm)
    at_100 = mirror_displacement_phase(100.0, source.pump_nm, source.signal_nm, source.idler_nm)
    summary = [f"mirror phase at 100 um: {at_100:.5f} rad (fidelity {bell_fidelity(at_100):.6f})"]
    payload = {"rows": [{"displacement_um": a, "phase_rad": b, "fidelity": c} for a, b, c in rows]}
    return CommandResult(("displacement_um", "phase_rad", "fidelity"), rows, payload, summary)


def cmd_analyze(args: argparse.Namespace, source: SourceConfig) -> CommandResult:
    records = load_counts(args.counts)
    raw = VisibilitySet.from_records(records)
    tau = (args.tau_ns * 1e-9) if args.tau_ns is not None else source.detection.tau_cc
    corrected: Optional[VisibilitySet] = None
    try:
        corrected = VisibilitySet.from_records([accidental_correction(r, tau) for r in records], corrected=True)
    except UsageError as e:
        SandwichLogger.warning(f"Skipping accidental correction: {e.message}", "CLI")

    raw_f = fidelity_witness(raw, source.target)
    rows = []
    for name in ("v_hv", "v_da", "v_lr"):
        rows.append((name[2:].upper(), getattr(raw, name), getattr(corrected, name) if corrected else math.nan))
    summary = [f"raw: V_HV = {raw.v_hv:.3f}, V_DA = {raw.v_da:.3f}, V_LR = {raw.v_lr:.3f}, F = {raw_f:.4f}"]
    payload: Dict[str, Any] = {"target": source.target.value,
                               "raw": {"v_hv": raw.v_hv, "v_da": raw.v_da, "v_lr": raw.v_lr, "fidelity": raw_f}}
    if corrected is not None:
        corr_f = fidelity_witness(corrected, source.target)
        summary.append(f"corrected: V_HV = {corrected.v_hv:.3f}, V_DA = {corrected.v_da:.3f}, "
                       f"V_LR = {corrected.v_lr:.3f}, F = {corr_f:.4f}")
        payload["corrected"] = {"v_hv": corrected.v_hv, "v_da": corrected.v_da, "v_lr": corrected.v_lr,
                                "fidelity": corr_f}
    return CommandResult(("basis", "v_raw", "v_corrected"), rows, payload, summary)


COMMANDS: Dict[str, Callable[[argparse.Namespace, SourceConfig], CommandResult]] = {
    "phase-map": cmd_phase_map,
    "optimize": cmd_optimize,
    "correlations": cmd_correlations,
    "rates": cmd_rates,
    "montecarlo": cmd_montecarlo,
    "temperature": cmd_temperature,
    "displacement": cmd_displacement,
    "analyze": cmd_analyze,
}


# --- argument parsing ------------------------------------------------------

def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _common_flags(parser: argparse.ArgumentParser, default: Any) -> None:
    parser.add_argument("--config", type=Path, default=default, help="configuration document (JSON)")
    parser.add_argument("--out", type=Path, default=default, help="output file (standard output when omitted)")
    parser.add_argument("--format", choices=("csv", "json"), default=default, help="output format")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", default=default, help="debug logging")
    verbosity.add_argument("--quiet", action="store_true", default=default, help="warnings and errors only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sandwichpy",
                                     description="Folded-sandwich SPDC source design and simulation.")
    parser.add_argument("--version", action="version", version=f"sandwichpy {__version__}")
    _common_flags(parser, None)
    parser.set_defaults(format="csv", verbose=False, quiet=False)

    shared = argparse.ArgumentParser(add_help=False)
    _common_flags(shared, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("phase-map", parents=[shared], help="relative phase over a spectral window")
    p.add_argument("--window", type=float, default=15.0, help="half width of the signal window in nm")
    p.add_argument("--grid", type=int, default=301, help="points per axis")
    p.add_argument("--center", type=float, default=None, help="center signal wavelength in nm")
    p.add_argument("--map", choices=("diagonal", "2d"), default="diagonal")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--compensated", dest="compensated", action="store_true", default=True)
    group.add_argument("--uncompensated", dest="compensated", action="store_false")

    p = sub.add_parser("optimize", parents=[shared], help="design the compensation crystal length")
    p.add_argument("--window", type=float, default=None, help="half width in nm (half the filter FWHM by default)")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--weighting", choices=WEIGHTINGS + ("all",), default="uniform")

    p = sub.add_parser("correlations", parents=[shared], help="polarization correlation curves and fidelity")
    p.add_argument("--basis-angle", type=_float_list, default=[0.0, 45.0, 90.0, 135.0],
                   help="idler polarizer angles in degrees, comma separated")
    p.add_argument("--step", type=float, default=5.0, help="signal polarizer step in degrees")
    p.add_argument("--yvo-detune", type=float, default=0.0, help="compensator temperature detuning in K")

    p = sub.add_parser("rates", parents=[shared], help="rates and raw fidelity versus pump power")
    p.add_argument("--powers", type=_float_list, default=list(DEFAULT_POWERS_MW), help="pump powers in mW")
    p.add_argument("--windows", type=_float_list, default=list(DEFAULT_WINDOWS_NS), help="coincidence windows in ns")
    p.add_argument("--state-visibility", type=float, default=None)

    p = sub.add_parser("montecarlo", parents=[shared], help="time-tag Monte Carlo against the analytic rates")
    p.add_argument("--power", type=float, default=None, help="pump power in mW")
    p.add_argument("--duration", type=float, default=10.0, help="simulated time in s")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delay-ns", type=float, default=10000.0, help="delay of the accidental window")
    p.add_argument("--timetags", type=Path, default=None, help="also dump the time tags to this CSV file")

    p = sub.add_parser("temperature", parents=[shared], help="temperature sensitivity and tolerance")
    p.add_argument("--element", choices=("yvo", "ktp"), default="yvo")
    p.add_argument("--fidelity-target", type=float, default=0.995)
    p.add_argument("--scan", type=_float_list, default=[round(0.1 * k, 1) for k in range(-30, 31)],
                   help="temperature detunings in K")

    p = sub.add_parser("displacement", parents=[shared], help="phase versus fold-mirror displacement")
    p.add_argument("--max-um", type=float, default=200.0)
    p.add_argument("--step-um", type=float, default=10.0)

    p = sub.add_parser("analyze", parents=[shared], help="visibilities and witness from measured counts")
    p.add_argument("--counts", type=Path, required=True, help="counts CSV (basis, setting_a, setting_b, counts, ...)")
    p.add_argument("--tau-ns", type=float, default=None, help="coincidence window for accidental correction")
    return parser


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the command-line exit code."""
    if isinstance(error, (ConfigError, UsageError)):
        return EXIT_USAGE
    if isinstance(error, (DomainError, ValidationError, RangeError)):
        return EXIT_DOMAIN
    if isinstance(error, (NoRootError, FitError)):
        return EXIT_NUMERIC
    return EXIT_FAILURE


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = Config.load(args.config if args.config is not None else Config.default_path())
    source = SourceConfig.from_config(cfg)
    SandwichLogger.info(f"Loaded '{source.name}' from {cfg.source}", "CLI")
    result = COMMANDS[args.command](args, source)

    metadata = OutputMetadata(__version__, cfg.digest(), " ".join(["sandwichpy", *argv]),
                              dict(result.extra))
    if args.format == "json":
        text = format_json(result.payload, metadata)
    else:
        text = format_csv(result.columns, result.rows, metadata)

    if args.out is not None:
        write_text(args.out, text)
        for line in result.summary:
            print(line)
    else:
        sys.stdout.write(text)
        for line in result.summary:
            print(line, file=sys.stderr)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    SandwichLogger.configure(level)
    try:
        return run(args, argv)
    except SandwichError as e:
        SandwichLogger.error(f"{args.command} failed", "CLI", e)
        print(f"sandwichpy: error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        SandwichLogger.error(f"{args.command} failed unexpectedly", "CLI", e)
        print(f"sandwichpy: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
