"""
sandwichpy Counting Component
Singles, coincidence and accidental rates versus pump power with detector
saturation, and a time-tag Monte Carlo that checks the closed-form model.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from ..utils.errors import DomainError, UsageError, ValidationError
from ..utils.logger import SandwichLogger

RATE_COLUMNS = ("power_mw", "tau_cc_ns", "singles_s", "singles_i", "twofold", "accidentals", "raw_fidelity")
ACCIDENTAL_DELAY_S = 10e-6
SLICE_EVENTS = 2_000_000


class DetectionConfig:
    """Configuration for the two detection paths."""

    def __init__(self,
                 eta_s: float = 0.5,
                 eta_i: float = 0.5,
                 dark_s: float = 300.0,
                 dark_i: float = 300.0,
                 tau_cc: float = 3.2e-9,
                 tau_dead: float = 50e-9,
                 analyzer_transmission: float = 0.9):
        """
        Initialize detection configuration.

        Args:
            eta_s: Signal path efficiency (coupling, filter and detector) in [0, 1]
            eta_i: Idler path efficiency in [0, 1]
            dark_s: Signal detector dark counts in cps
            dark_i: Idler detector dark counts in cps
            tau_cc: Coincidence window in s
            tau_dead: Detector dead time in s (non-paralyzable)
            analyzer_transmission: Transmission of each polarization analyzer in [0, 1]
        """
        for name, value in (("eta_s", eta_s), ("eta_i", eta_i), ("analyzer_transmission", analyzer_transmission)):
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {value}")
        for name, value in (("dark_s", dark_s), ("dark_i", dark_i), ("tau_cc", tau_cc), ("tau_dead", tau_dead)):
            if value < 0 or not math.isfinite(value):
                raise ValidationError(f"{name} must be non-negative, got {value}")
        self.eta_s = float(eta_s)
        self.eta_i = float(eta_i)
        self.dark_s = float(dark_s)
        self.dark_i = float(dark_i)
        self.tau_cc = float(tau_cc)
        self.tau_dead = float(tau_dead)
        self.analyzer_transmission = float(analyzer_transmission)

    def __repr__(self) -> str:
        return (f"DetectionConfig(eta_s={self.eta_s}, eta_i={self.eta_i}, dark_s={self.dark_s}, dark_i={self.dark_i}, "
                f"tau_cc={self.tau_cc}, tau_dead={self.tau_dead}, analyzer_transmission={self.analyzer_transmission})")

    def replace(self, **changes) -> "DetectionConfig":
        values = dict(eta_s=self.eta_s, eta_i=self.eta_i, dark_s=self.dark_s, dark_i=self.dark_i, tau_cc=self.tau_cc,
                      tau_dead=self.tau_dead, analyzer_transmission=self.analyzer_transmission)
        values.update(changes)
        return DetectionConfig(**values)


class SourceBrightness:
    """Configuration for the pair source."""

    def __init__(self, pairs_per_mw: float, spectral_fwhm_nm: float = 2.9, pump_recycling: float = 1.0):
        """
        Initialize source brightness.

        Args:
            pairs_per_mw: Generated pairs/s per mW of pump at the crystal
            spectral_fwhm_nm: Detected spectral width in nm
            pump_recycling: Fraction of the pump power driving both passes, in (0, 1]
        """
        if pairs_per_mw <= 0:
            raise ValidationError(f"pairs_per_mw must be positive, got {pairs_per_mw}")
        if spectral_fwhm_nm <= 0:
            raise ValidationError(f"spectral_fwhm_nm must be positive, got {spectral_fwhm_nm}")
        if not 0.0 < pump_recycling <= 1.0:
            raise ValidationError(f"pump_recycling must be in (0, 1], got {pump_recycling}")
        self.pairs_per_mw = float(pairs_per_mw)
        self.spectral_fwhm_nm = float(spectral_fwhm_nm)
        self.pump_recycling = float(pump_recycling)

    def __repr__(self) -> str:
        return (f"SourceBrightness(pairs_per_mw={self.pairs_per_mw:.6g}, spectral_fwhm_nm={self.spectral_fwhm_nm}, "
                f"pump_recycling={self.pump_recycling})")

    def generated_rate(self, power_mw: float) -> float:
        """Generated pair rate in pairs/s."""
        return power_mw * self.pairs_per_mw * self.pump_recycling


@dataclass(frozen=True)
class RateReport:
    """Rates (cps) and raw fidelity at one pump power and coincidence window."""
    power_mw: float
    tau_cc: float
    singles_s: float
    singles_i: float
    true_coincidences: float
    accidentals: float
    detected_twofold: float
    raw_fidelity: float

    def row(self) -> Tuple[float, ...]:
        return (self.power_mw, self.tau_cc * 1e9, self.singles_s, self.singles_i, self.detected_twofold,
                self.accidentals, self.raw_fidelity)

    def to_dict(self) -> Dict[str, float]:
        return {
            "power_mw": self.power_mw,
            "tau_cc_ns": self.tau_cc * 1e9,
            "singles_s": self.singles_s,
            "singles_i": self.singles_i,
            "true_coincidences": self.true_coincidences,
            "twofold": self.detected_twofold,
            "accidentals": self.accidentals,
            "raw_fidelity": self.raw_fidelity,
        }


def saturate(rate_true, tau_dead: float):
    """Non-paralyzable dead-time model R / (1 + R tau_dead)."""
    rate = np.asarray(rate_true, dtype=float)
    if np.any(rate < 0):
        raise DomainError("Rate must be non-negative", rate_true)
    value = rate / (1.0 + rate * tau_dead)
    return float(value) if value.ndim == 0 else value


def desaturate(rate_measured: float, tau_dead: float) -> float:
    """Inverse of saturate."""
    if rate_measured < 0 or rate_measured * tau_dead >= 1.0:
        raise DomainError("Measured rate must lie in [0, 1/tau_dead)", rate_measured)
    return rate_measured / (1.0 - rate_measured * tau_dead)


def accidental_rate(rate_s: float, rate_i: float, tau_cc: float) -> float:
    """Uncorrelated coincidences R_s R_i tau_cc."""
    if rate_s < 0 or rate_i < 0:
        raise DomainError("Rates must be non-negative", (rate_s, rate_i))
    return rate_s * rate_i * tau_cc


def state_fidelity_from_visibility(state_visibility: float) -> float:
    """Bell-state fidelity (1 + 3V)/4 of a Werner-like state with mean visibility V."""
    return (1.0 + 3.0 * state_visibility) / 4.0


def _integrate(function: Callable[[float], float], upper: float) -> float:
    return float(integrate.quad(function, 0.0, upper, epsabs=0.0, epsrel=1e-10, limit=200)[0])


class DetectorPair:
    """
    Stationary dead-time state of two detectors sharing pair events.

    Each detector sees two independent Poisson inputs: events shared with
    the other detector (both members of a pair detected) and events of its
    own (one member lost, or a dark count). ``signal_dead(x)`` is the density
    of "signal dead with residual dead time x, idler live" and
    ``idler_dead(y)`` the mirror state, both relative to the probability
    that the two detectors are live together.
    """

    def __init__(self, shared: float, signal_only: float, idler_only: float, tau_dead: float):
        for name, value in (("shared", shared), ("signal_only", signal_only), ("idler_only", idler_only),
                            ("tau_dead", tau_dead)):
            if value < 0:
                raise DomainError(f"{name} must be non-negative", value)
        self.shared = float(shared)
        self.signal_only = float(signal_only)
        self.idler_only = float(idler_only)
        self.tau_dead = float(tau_dead)
        self.rate_s = self.shared + self.signal_only
        self.rate_i = self.shared + self.idler_only
        self._delta = self.rate_i - self.rate_s
        self._k = 0.0
        self.both_live = 1.0
        if self.tau_dead == 0:
            return
        tau = self.tau_dead
        if self._delta > 0:
            self._k = ((self.signal_only * math.exp(-self._delta * tau) - self.idler_only)
                       / (1.0 + self.rate_s * self._decay(tau)))
        else:
            growth = math.exp(self._delta * tau)
            self._k = (self.signal_only - self.idler_only * growth) / (growth + self.rate_s * self._growth(tau))
        mass_signal = _integrate(self.signal_dead, tau)
        mass_idler = _integrate(self.idler_dead, tau)
        both_dead = (self.shared * tau
                     + self.rate_i * _integrate(lambda x: x * self.signal_dead(x), tau)
                     + self.rate_s * _integrate(lambda y: y * self.idler_dead(y), tau))
        self.both_live = 1.0 / (1.0 + mass_signal + mass_idler + both_dead)

    def _growth(self, z: float) -> float:
        return z if self._delta == 0 else math.expm1(self._delta * z) / self._delta

    def _decay(self, z: float) -> float:
        return z if self._delta == 0 else -math.expm1(-self._delta * z) / self._delta

    def signal_dead(self, x: float) -> float:
        if self._delta > 0:
            return (self.signal_only * math.exp(-self._delta * (self.tau_dead - x))
                    - self.rate_s * self._k * self._decay(self.tau_dead - x))
        return (self.idler_only + self._k) * math.exp(self._delta * x) + self.rate_s * self._k * self._growth(x)

    def idler_dead(self, y: float) -> float:
        return self.signal_dead(self.tau_dead - y) - self._k

    @property
    def signal_live(self) -> float:
        return self.both_live * (1.0 + _integrate(self.idler_dead, self.tau_dead)) if self.tau_dead else 1.0

    @property
    def pair_rate(self) -> float:
        """Shared events registered by both detectors, in cps."""
        return self.shared * self.both_live

    def accidental_pair_rate(self, tau_cc: float) -> float:
        """
        Registered events of different origin falling within +/- tau_cc/2 of each other.

        An event registered by one detector pairs with the first registration
        of the other detector inside the half window, provided the other
        detector is live or recovers in time. Windows wider than twice the
        dead time fall back to pairs of single-channel events.
        """
        half = 0.5 * tau_cc
        if half == 0:
            return 0.0
        if self.tau_dead < half:
            return self.both_live * self.signal_only * -math.expm1(-2.0 * self.idler_only * half)
        direct = (self.signal_only * -math.expm1(-self.rate_i * half)
                  + self.idler_only * -math.expm1(-self.rate_s * half))
        recovering = (
            self.rate_s * _integrate(lambda y: self.idler_dead(y) * -math.expm1(-self.rate_i * (half - y)), half)
            + self.rate_i * _integrate(lambda x: self.signal_dead(x) * -math.expm1(-self.rate_s * (half - x)), half))
        return self.both_live * (direct + recovering)


def detector_pair(generated: float, det: DetectionConfig) -> DetectorPair:
    """DetectorPair for a generated pair rate under a detection configuration."""
    t = det.analyzer_transmission
    p_s = det.eta_s * t
    p_i = det.eta_i * t
    return DetectorPair(generated * p_s * p_i, generated * p_s * (1.0 - p_i) + det.dark_s,
                        generated * p_i * (1.0 - p_s) + det.dark_i, det.tau_dead)


def analytic_rates(power_mw: float, source: SourceBrightness, det: DetectionConfig,
                   state_visibility: float = 1.0) -> RateReport:
    """
    Closed-form rates at one pump power.

    R_g = P * pairs_per_mw * recycling; singles = saturate(R_g eta T + dark).
    True coincidences are pairs reaching both detectors while both are live,
    from the joint stationary dead-time state of the two channels (the two
    detectors recover together after a shared pair, so their live times are
    correlated). The detected twofold adds registered events of different
    origin inside the window. ``accidentals`` is the uncorrelated rate
    S_s S_i tau_cc a delayed window measures.
    Raw fidelity mixes F_state with 1/4 for photon-photon accidentals,
    whose ratio to true coincidences is R_g tau_cc; dark-count accidentals
    are reported but treated as subtracted background.

    Args:
        power_mw: Pump power in mW
        source: Source brightness
        det: Detection configuration
        state_visibility: Mean visibility of the emitted state

    Returns:
        RateReport
    """
    if power_mw < 0:
        raise DomainError("Pump power must be non-negative", power_mw)
    if not 0.0 <= state_visibility <= 1.0:
        raise ValidationError(f"state_visibility must be in [0, 1], got {state_visibility}")
    generated = source.generated_rate(power_mw)
    detectors = detector_pair(generated, det)
    singles_s = saturate(detectors.rate_s, det.tau_dead)
    singles_i = saturate(detectors.rate_i, det.tau_dead)
    true = detectors.pair_rate
    twofold = true + detectors.accidental_pair_rate(det.tau_cc)
    accidentals = accidental_rate(singles_s, singles_i, det.tau_cc)
    dilution = generated * det.tau_cc
    f_state = state_fidelity_from_visibility(state_visibility)
    raw_fidelity = (f_state + 0.25 * dilution) / (1.0 + dilution)
    return RateReport(float(power_mw), det.tau_cc, singles_s, singles_i, true, accidentals, twofold, raw_fidelity)


def power_sweep(powers_mw: Sequence[float], source: SourceBrightness, det: DetectionConfig,
                tau_cc_list: Sequence[float], state_visibility: float = 1.0) -> List[RateReport]:
    """
    Analytic rates over powers and coincidence windows.

    Returns:
        Reports grouped by window, powers in the given order within each group
    """
    if len(powers_mw) == 0:
        raise UsageError("Power sweep needs at least one power")
    if len(tau_cc_list) == 0:
        raise UsageError("Power sweep needs at least one coincidence window")
    reports = []
    for tau_cc in tau_cc_list:
        windowed = det.replace(tau_cc=float(tau_cc))
        for power in powers_mw:
            reports.append(analytic_rates(float(power), source, windowed, state_visibility))
    SandwichLogger.debug(f"Power sweep: {len(powers_mw)} powers x {len(tau_cc_list)} windows", "Counting")
    return reports


@dataclass(frozen=True)
class Calibration:
    """Brightness and path efficiencies inferred from one operating point."""
    pairs_per_mw: float
    eta_s: float
    eta_i: float

    def apply(self, source: SourceBrightness, det: DetectionConfig) -> Tuple[SourceBrightness, DetectionConfig]:
        return (SourceBrightness(self.pairs_per_mw, source.spectral_fwhm_nm, source.pump_recycling),
                det.replace(eta_s=self.eta_s, eta_i=self.eta_i))


def calibrate(power_mw: float, singles_s: float, singles_i: float, coincidences: float, det: DetectionConfig,
              pump_recycling: float = 1.0) -> Calibration:
    """
    Invert the analytic model at one measured point.

    The desaturated singles fix the detected photon rates of the two paths;
    the generated pair rate is then the root of model twofold = measured
    twofold, and the efficiencies follow from the photon rates.

    Args:
        power_mw: Pump power of the measurement
        singles_s: Measured signal singles in cps
        singles_i: Measured idler singles in cps
        coincidences: Measured twofold rate in cps
        det: Detection configuration (its efficiencies are ignored)
        pump_recycling: Pump recycling fraction

    Returns:
        Calibration with pairs_per_mw, eta_s, eta_i
    """
    if power_mw <= 0:
        raise DomainError("Calibration power must be positive", power_mw)
    t = det.analyzer_transmission
    if t <= 0:
        raise DomainError("Analyzer transmission must be positive for calibration", t)
    photons_s = desaturate(singles_s, det.tau_dead) - det.dark_s
    photons_i = desaturate(singles_i, det.tau_dead) - det.dark_i
    if photons_s <= 0 or photons_i <= 0:
        raise DomainError("Measured singles do not exceed the dark counts")

    def efficiencies(generated: float) -> Tuple[float, float]:
        return min(1.0, photons_s / (generated * t)), min(1.0, photons_i / (generated * t))

    def excess_twofold(log_generated: float) -> float:
        generated = math.exp(log_generated)
        eta_s, eta_i = efficiencies(generated)
        detectors = detector_pair(generated, det.replace(eta_s=eta_s, eta_i=eta_i))
        return detectors.pair_rate + detectors.accidental_pair_rate(det.tau_cc) - coincidences

    # both efficiencies stay <= 1 from here up
    lowest = math.log(max(photons_s, photons_i) / t)
    highest = lowest + math.log(1e12)
    if excess_twofold(highest) >= 0:
        raise DomainError("Measured twofold does not exceed the accidental background")
    if excess_twofold(lowest) < 0:
        raise DomainError("Measured twofold needs path efficiencies above 1")
    generated = math.exp(optimize.brentq(excess_twofold, lowest, highest, xtol=1e-14, rtol=1e-14))
    eta_s, eta_i = efficiencies(generated)
    result = Calibration(generated / (power_mw * pump_recycling), eta_s, eta_i)
    SandwichLogger.info(f"Calibrated {result.pairs_per_mw:.4g} pairs/s/mW, eta_s={eta_s:.4f}, eta_i={eta_i:.4f}", "Counting")
    return result


def detected_pair_rate_per_mw(source: SourceBrightness, det: DetectionConfig) -> float:
    """Low-power detected pair rate in pairs/s/mW."""
    t = det.analyzer_transmission
    return source.pairs_per_mw * source.pump_recycling * det.eta_s * det.eta_i * t * t


def spectral_brightness(source: SourceBrightness, det: DetectionConfig, fwhm_nm: Optional[float] = None) -> float:
    """Detected pairs/s/mW/nm."""
    width = source.spectral_fwhm_nm if fwhm_nm is None else fwhm_nm
    if width <= 0:
        raise DomainError("Spectral width must be positive", width)
    return detected_pair_rate_per_mw(source, det) / width


# --- Monte Carlo -----------------------------------------------------------

@dataclass
class TimeTagStream:
    """Detection times of one channel."""
    channel: str
    timestamps: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if self.channel not in ("signal", "idler"):
            raise ValidationError(f"channel must be 'signal' or 'idler', got '{self.channel}'")
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        if self.timestamps.ndim != 1:
            raise ValidationError("Timestamps must be a 1-D array")
        if np.any(self.timestamps[1:] <= self.timestamps[:-1]):
            raise ValidationError("Timestamps must be strictly increasing")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def rows(self) -> List[Tuple[str, float]]:
        return [(self.channel, float(t)) for t in self.timestamps]


def apply_dead_time(events: np.ndarray, tau_dead: float, last_registered: float = -math.inf) -> np.ndarray:
    """
    Drop events arriving within tau_dead of the last registered one.

    Events more than tau_dead after their predecessor are always registered;
    runs of closer events are resolved one position per pass, so the number
    of passes is the longest run rather than the number of events.

    Args:
        events: Sorted arrival times in s
        tau_dead: Dead time in s (non-paralyzable)
        last_registered: Last registration before the first event

    Returns:
        Registered times
    """
    if events.size == 0 or tau_dead <= 0:
        return events
    times = np.concatenate(([last_registered], events))
    keep = np.ones(times.size, dtype=bool)
    latest = times.copy()
    pending = np.flatnonzero(np.diff(times) <= tau_dead) + 1
    while pending.size:
        head = np.ones(pending.size, dtype=bool)
        head[1:] = pending[1:] - 1 != pending[:-1]
        index = pending[head]
        previous = latest[index - 1]
        registered = times[index] - previous > tau_dead
        keep[index] = registered
        latest[index] = np.where(registered, times[index], previous)
        pending = pending[~head]
    return times[1:][keep[1:]]


def simulate_timetags(power_mw: float, source: SourceBrightness, det: DetectionConfig, duration_s: float,
                      seed: int = 0) -> Tuple[TimeTagStream, TimeTagStream]:
    """
    Poisson time-tag streams for both channels.

    Pairs are emitted as a homogeneous Poisson process; each member is kept
    with its path efficiency times the analyzer transmission, drawn as a
    multinomial split of the pair count into both/signal/idler/neither;
    dark counts are independent Poisson processes; then each channel is
    pruned by the dead time. The run is generated in time slices of about
    SLICE_EVENTS detector events, carrying the dead-time state across slices.

    Args:
        power_mw: Pump power in mW
        source: Source brightness
        det: Detection configuration
        duration_s: Simulated time in s
        seed: Random seed

    Returns:
        (signal stream, idler stream)
    """
    if duration_s <= 0:
        raise UsageError(f"Duration must be positive, got {duration_s}")
    if power_mw < 0:
        raise DomainError("Pump power must be non-negative", power_mw)
    rng = np.random.default_rng(seed)
    rate = source.generated_rate(power_mw)
    t = det.analyzer_transmission
    p_s = det.eta_s * t
    p_i = det.eta_i * t
    split = [p_s * p_i, p_s * (1.0 - p_i), (1.0 - p_s) * p_i, (1.0 - p_s) * (1.0 - p_i)]
    event_rate = rate * (p_s + p_i) + det.dark_s + det.dark_i
    n_slices = max(1, math.ceil(event_rate * duration_s / SLICE_EVENTS))
    edges = np.linspace(0.0, duration_s, n_slices + 1)

    registered: Dict[str, List[np.ndarray]] = {"signal": [], "idler": []}
    last = {"signal": -math.inf, "idler": -math.inf}
    n_pairs = 0
    for start, stop in zip(edges[:-1], edges[1:]):
        span = stop - start
        pairs = int(rng.poisson(rate * span))
        n_pairs += pairs
        both, signal_only, idler_only, _ = rng.multinomial(pairs, split)
        shared = start + span * rng.random(both)
        for channel, alone, dark in (("signal", signal_only, det.dark_s), ("idler", idler_only, det.dark_i)):
            own = alone + rng.poisson(dark * span)
            events = np.unique(np.concatenate((shared, start + span * rng.random(own))))
            kept = apply_dead_time(events, det.tau_dead, last[channel])
            if kept.size:
                last[channel] = float(kept[-1])
                registered[channel].append(kept)

    streams = [TimeTagStream(channel, np.concatenate(registered[channel]) if registered[channel] else np.empty(0), seed)
               for channel in ("signal", "idler")]
    SandwichLogger.debug(f"Simulated {n_pairs} pairs over {duration_s} s in {n_slices} slices (seed {seed})", "Counting")
    return streams[0], streams[1]


def _stamps(stream: Union[TimeTagStream, Sequence[float], np.ndarray]) -> np.ndarray:
    values = stream.timestamps if isinstance(stream, TimeTagStream) else np.asarray(stream, dtype=float)
    if np.any(values[1:] < values[:-1]):
        raise UsageError("Time-tag streams must be sorted")
    return values


def count_coincidences(a: Union[TimeTagStream, np.ndarray], b: Union[TimeTagStream, np.ndarray], tau_cc: float) -> int:
    """
    Coincidences between two sorted streams.

    An event of a matches the nearest unused event of b within +/- tau_cc/2;
    each b event is used at most once. Windows are located by binary search
    in blocks of SLICE_EVENTS a events; an a event whose window holds a
    single b event that no neighbouring window reaches is matched directly,
    and the remaining events are swept in order with a lower pointer that
    only moves forward past used b events.

    Args:
        a: First stream
        b: Second stream
        tau_cc: Full coincidence window in s

    Returns:
        Number of matched events
    """
    if tau_cc < 0:
        raise ValidationError(f"Coincidence window must be non-negative, got {tau_cc}")
    ta = _stamps(a)
    tb = _stamps(b)
    if ta.size == 0 or tb.size == 0:
        return 0
    half = 0.5 * tau_cc
    used = np.zeros(tb.size, dtype=bool)
    floor = 0
    count = 0
    for start in range(0, ta.size, SLICE_EVENTS):
        stop = min(start + SLICE_EVENTS, ta.size)
        # one neighbour on each side so overlaps across block edges are seen
        first = max(start - 1, 0)
        block = ta[first:min(stop + 1, ta.size)]
        lo = np.searchsorted(tb, block - half, side="left")
        hi = np.searchsorted(tb, block + half, side="right")
        contested = hi - lo > 1
        overlap = lo[1:] < hi[:-1]
        contested[1:] |= overlap
        contested[:-1] |= overlap
        inner = slice(start - first, stop - first)
        lo, hi, contested = lo[inner], hi[inner], contested[inner]
        has = hi > lo
        count += int(np.count_nonzero(has & ~contested))

        for index in np.flatnonzero(has & contested).tolist():
            t = ta[start + index]
            k = max(floor, int(lo[index]))
            end = int(hi[index])
            while k < end and used[k]:
                k += 1
            floor = k
            best = -1
            best_gap = math.inf
            while k < end:
                if not used[k]:
                    gap = abs(tb[k] - t)
                    if gap < best_gap:
                        best, best_gap = k, gap
                k += 1
            if best >= 0:
                used[best] = True
                count += 1
    return count


def measure_accidentals(a: Union[TimeTagStream, np.ndarray], b: Union[TimeTagStream, np.ndarray], tau_cc: float,
                        delay_s: float = ACCIDENTAL_DELAY_S) -> int:
    """Coincidences against a delayed copy of b (a delay well beyond the window)."""
    shifted = _stamps(b) + delay_s
    return count_coincidences(a, shifted, tau_cc)


@dataclass(frozen=True)
class MonteCarloComparison:
    """One Monte Carlo rate next to its analytic prediction."""
    quantity: str
    monte_carlo: float
    analytic: float
    sigma: float

    @property
    def deviation(self) -> float:
        """Difference in units of sigma."""
        return (self.monte_carlo - self.analytic) / self.sigma if self.sigma > 0 else 0.0


def compare_with_analytic(power_mw: float, source: SourceBrightness, det: DetectionConfig, duration_s: float,
                          seed: int = 0, delay_s: float = ACCIDENTAL_DELAY_S) -> List[MonteCarloComparison]:
    """
    Run the Monte Carlo and compare singles, twofolds and accidentals with the analytic model.

    Sigma is the Poisson counting uncertainty of the Monte Carlo rate.
    """
    signal, idler = simulate_timetags(power_mw, source, det, duration_s, seed)
    report = analytic_rates(power_mw, source, det)
    counts = {
        "singles_s": len(signal),
        "singles_i": len(idler),
        "twofold": count_coincidences(signal, idler, det.tau_cc),
        "accidentals": measure_accidentals(signal, idler, det.tau_cc, delay_s),
    }
    expected = {
        "singles_s": report.singles_s,
        "singles_i": report.singles_i,
        "twofold": report.detected_twofold,
        "accidentals": report.accidentals,
    }
    comparisons = []
    for quantity, n in counts.items():
        sigma = math.sqrt(max(n, 1)) / duration_s
        comparisons.append(MonteCarloComparison(quantity, n / duration_s, expected[quantity], sigma))
        SandwichLogger.debug(f"{quantity}: MC {n / duration_s:.1f} cps vs analytic {expected[quantity]:.1f} cps", "Counting")
    return comparisons
