"""Tests for the counting component."""

import numpy as np
import pytest
from scipy import integrate

from sandwichpy.components import counting
from sandwichpy.components.counting import (
    DetectionConfig,
    DetectorPair,
    RateReport,
    SourceBrightness,
    TimeTagStream,
    accidental_rate,
    analytic_rates,
    apply_dead_time,
    calibrate,
    compare_with_analytic,
    count_coincidences,
    desaturate,
    detected_pair_rate_per_mw,
    detector_pair,
    measure_accidentals,
    power_sweep,
    saturate,
    simulate_timetags,
    spectral_brightness,
    state_fidelity_from_visibility,
)
from sandwichpy.utils.errors import DomainError, UsageError, ValidationError

CALIBRATION_POWER_MW = 0.0104


@pytest.fixture
def detection():
    return DetectionConfig()


@pytest.fixture
def calibrated(detection):
    calibration = calibrate(CALIBRATION_POWER_MW, 61000.0, 88000.0, 11800.0, detection)
    return calibration.apply(SourceBrightness(1.0), detection)


def _greedy_nearest(a, b, tau_cc):
    used = np.zeros(b.size, dtype=bool)
    count = 0
    for t in a:
        gaps = np.abs(b - t)
        gaps[used | (gaps > tau_cc / 2)] = np.inf
        k = int(np.argmin(gaps))
        if np.isfinite(gaps[k]):
            used[k] = True
            count += 1
    return count


class TestSaturation:
    def test_zero_and_monotone(self):
        assert saturate(0.0, 50e-9) == 0.0
        rates = np.array([1e3, 1e5, 1e6, 1e7, 1e8])
        measured = saturate(rates, 50e-9)
        assert np.all(np.diff(measured) > 0)
        assert np.all(measured < 1 / 50e-9)
        assert np.all(measured <= rates)

    def test_no_dead_time_is_identity(self):
        assert saturate(12345.0, 0.0) == 12345.0

    def test_inverse(self):
        for rate in (10.0, 1e5, 5e6):
            assert desaturate(saturate(rate, 50e-9), 50e-9) == pytest.approx(rate, rel=1e-12)

    def test_invalid_rates(self):
        with pytest.raises(DomainError):
            saturate(-1.0, 50e-9)
        with pytest.raises(DomainError):
            desaturate(2e7, 50e-9)


class TestAccidentals:
    def test_calibration_point(self):
        assert accidental_rate(61000.0, 88000.0, 3.2e-9) == pytest.approx(17.18, abs=0.01)

    def test_bilinear(self):
        assert accidental_rate(2e4, 2e4, 1e-9) == pytest.approx(4 * accidental_rate(1e4, 1e4, 1e-9))

    def test_negative_rates(self):
        with pytest.raises(DomainError):
            accidental_rate(-1.0, 10.0, 1e-9)


class TestConfiguration:
    def test_detection_validation(self):
        with pytest.raises(ValidationError):
            DetectionConfig(eta_s=1.5)
        with pytest.raises(ValidationError):
            DetectionConfig(tau_cc=-1e-9)
        assert DetectionConfig().replace(tau_cc=5e-10).tau_cc == 5e-10

    def test_brightness_validation(self):
        with pytest.raises(ValidationError):
            SourceBrightness(0.0)
        with pytest.raises(ValidationError):
            SourceBrightness(1e6, pump_recycling=0.0)
        assert SourceBrightness(1e6, pump_recycling=0.5).generated_rate(2.0) == pytest.approx(1e6)


class TestCalibration:
    def test_inferred_parameters(self, detection):
        calibration = calibrate(CALIBRATION_POWER_MW, 61000.0, 88000.0, 11800.0, detection)
        assert calibration.pairs_per_mw == pytest.approx(43.44e6, rel=2e-3)
        assert calibration.eta_s == pytest.approx(0.1498, abs=2e-4)
        assert calibration.eta_i == pytest.approx(0.2167, abs=2e-4)

    def test_reproduces_measurement(self, calibrated):
        source, det = calibrated
        report = analytic_rates(CALIBRATION_POWER_MW, source, det)
        assert report.singles_s == pytest.approx(61000.0, rel=1e-9)
        assert report.singles_i == pytest.approx(88000.0, rel=1e-9)
        assert report.detected_twofold == pytest.approx(11800.0, rel=1e-9)
        assert report.accidentals == pytest.approx(17.18, abs=0.01)

    def test_detected_brightness(self, calibrated):
        source, det = calibrated
        assert detected_pair_rate_per_mw(source, det) == pytest.approx(1.142e6, rel=2e-3)
        assert spectral_brightness(source, det) == pytest.approx(1.142e6 / 2.9, rel=2e-3)
        assert spectral_brightness(source, det, 1.0) == pytest.approx(detected_pair_rate_per_mw(source, det))
        with pytest.raises(DomainError):
            spectral_brightness(source, det, 0.0)

    def test_impossible_measurements(self, detection):
        with pytest.raises(DomainError):
            calibrate(CALIBRATION_POWER_MW, 200.0, 88000.0, 11800.0, detection)
        with pytest.raises(DomainError):
            calibrate(CALIBRATION_POWER_MW, 61000.0, 88000.0, 10.0, detection)
        with pytest.raises(DomainError):
            calibrate(0.0, 61000.0, 88000.0, 11800.0, detection)


class TestAnalyticRates:
    def test_zero_power(self, calibrated):
        source, det = calibrated
        report = analytic_rates(0.0, source, det)
        assert report.singles_s == pytest.approx(saturate(det.dark_s, det.tau_dead))
        assert report.true_coincidences == 0.0
        assert report.accidentals == pytest.approx(report.singles_s * report.singles_i * det.tau_cc)
        assert report.raw_fidelity == 1.0

    def test_linear_at_low_power(self, calibrated):
        source, det = calibrated
        low = analytic_rates(1e-4, source, det)
        double = analytic_rates(2e-4, source, det)
        assert double.true_coincidences / low.true_coincidences == pytest.approx(2.0, rel=1e-3)

    def test_fidelity_limits(self, calibrated):
        source, det = calibrated
        assert analytic_rates(0.0, source, det, state_visibility=0.99).raw_fidelity == pytest.approx(
            state_fidelity_from_visibility(0.99))
        assert analytic_rates(1e3, source, det).raw_fidelity == pytest.approx(0.25, abs=0.01)

    def test_fidelity_decreases_with_power(self, calibrated):
        source, det = calibrated
        reports = power_sweep(np.geomspace(1e-3, 10.0, 25), source, det, [3.2e-9])
        fidelities = [r.raw_fidelity for r in reports]
        assert all(a >= b for a, b in zip(fidelities, fidelities[1:]))

    def test_shorter_window_keeps_fidelity(self, calibrated):
        source, det = calibrated
        powers = [0.01, 0.1, 0.963, 5.0]
        wide = power_sweep(powers, source, det, [3.2e-9], 0.99)
        narrow = power_sweep(powers, source, det, [0.5e-9], 0.99)
        assert all(n.raw_fidelity >= w.raw_fidelity for n, w in zip(narrow, wide))

    def test_megahertz_pair_rate_with_short_window(self, calibrated):
        source, det = calibrated
        report = analytic_rates(0.963, source, det.replace(tau_cc=0.5e-9), 0.99)
        assert detected_pair_rate_per_mw(source, det) * 0.963 == pytest.approx(1.1e6, rel=0.01)
        assert report.raw_fidelity > 0.97
        assert report.raw_fidelity == pytest.approx(0.977, abs=2e-3)
        assert analytic_rates(0.963, source, det, 0.99).raw_fidelity == pytest.approx(0.905, abs=5e-3)

    def test_sweep_grouping(self, calibrated):
        source, det = calibrated
        reports = power_sweep([0.01, 0.1], source, det, [3.2e-9, 0.5e-9])
        assert [r.tau_cc for r in reports] == [3.2e-9, 3.2e-9, 0.5e-9, 0.5e-9]
        assert [r.power_mw for r in reports] == [0.01, 0.1, 0.01, 0.1]
        assert reports[0].row()[1] == pytest.approx(3.2)

    def test_sweep_needs_inputs(self, calibrated):
        source, det = calibrated
        with pytest.raises(UsageError):
            power_sweep([], source, det, [3.2e-9])
        with pytest.raises(UsageError):
            power_sweep([1.0], source, det, [])

    def test_invalid_inputs(self, calibrated):
        source, det = calibrated
        with pytest.raises(DomainError):
            analytic_rates(-1.0, source, det)
        with pytest.raises(ValidationError):
            analytic_rates(1.0, source, det, state_visibility=1.5)

    def test_report_serialization(self, calibrated):
        source, det = calibrated
        report = analytic_rates(0.1, source, det)
        assert isinstance(report, RateReport)
        data = report.to_dict()
        assert data["twofold"] == report.detected_twofold
        assert data["tau_cc_ns"] == pytest.approx(3.2)
        assert len(report.row()) == 7


class TestDetectorPair:
    @pytest.mark.parametrize("shared, signal_only, idler_only", [
        (1e6, 3e6, 1e5),
        (1e6, 1e5, 3e6),
        (1e6, 2e6, 2e6),
        (0.0, 5e6, 300.0),
    ])
    def test_marginals_are_exact(self, shared, signal_only, idler_only):
        pair = DetectorPair(shared, signal_only, idler_only, 50e-9)
        assert pair.signal_live == pytest.approx(1 / (1 + pair.rate_s * 50e-9), rel=1e-8)
        signal_dead, _ = integrate.quad(pair.signal_dead, 0.0, 50e-9, epsabs=0.0, epsrel=1e-11)
        assert pair.both_live * (1 + signal_dead) == pytest.approx(1 / (1 + pair.rate_i * 50e-9), rel=1e-8)

    def test_channels_are_interchangeable(self):
        forward = DetectorPair(1e6, 3e6, 1e5, 50e-9)
        backward = DetectorPair(1e6, 1e5, 3e6, 50e-9)
        assert forward.both_live == pytest.approx(backward.both_live, rel=1e-8)
        assert forward.accidental_pair_rate(3.2e-9) == pytest.approx(backward.accidental_pair_rate(3.2e-9), rel=1e-6)

    def test_shared_recovery_raises_joint_live_time(self):
        pair = DetectorPair(2e6, 1e6, 1e6, 50e-9)
        independent = 1 / ((1 + pair.rate_s * 50e-9) * (1 + pair.rate_i * 50e-9))
        assert pair.both_live > independent
        assert pair.pair_rate == pytest.approx(pair.shared * pair.both_live)

    def test_no_dead_time(self):
        pair = DetectorPair(1e6, 1e4, 1e4, 0.0)
        assert pair.both_live == 1.0
        assert pair.signal_live == 1.0
        assert pair.pair_rate == 1e6
        assert pair.accidental_pair_rate(0.0) == 0.0
        assert DetectorPair(0.0, 1e4, 1e4, 0.0).accidental_pair_rate(1e-9) == pytest.approx(0.1, rel=1e-4)

    def test_negative_rates(self):
        with pytest.raises(DomainError):
            DetectorPair(-1.0, 1e4, 1e4, 50e-9)
        with pytest.raises(DomainError):
            DetectorPair(1e4, 1e4, 1e4, -1e-9)

    def test_built_from_detection(self, calibrated):
        source, det = calibrated
        pair = detector_pair(source.generated_rate(0.963), det)
        assert pair.rate_s - pair.shared == pytest.approx(pair.signal_only)
        assert saturate(pair.rate_s, det.tau_dead) == pytest.approx(analytic_rates(0.963, source, det).singles_s)

    @pytest.mark.parametrize("power_mw, true, twofold", [
        (0.5, 420884.4, 445332.2),
        (0.963, 634768.8, 705779.5),
    ])
    def test_calibrated_source_rates(self, calibrated, power_mw, true, twofold):
        source, det = calibrated
        report = analytic_rates(power_mw, source, det)
        assert report.true_coincidences == pytest.approx(true, rel=1e-4)
        assert report.detected_twofold == pytest.approx(twofold, rel=1e-4)
        generated = source.generated_rate(power_mw)
        pair = detector_pair(generated, det)
        product = pair.shared / ((1 + pair.rate_s * det.tau_dead) * (1 + pair.rate_i * det.tau_dead))
        assert report.true_coincidences > 1.02 * product


class TestCoincidences:
    def test_identical_streams(self):
        stamps = np.cumsum(np.full(1000, 1e-6))
        assert count_coincidences(stamps, stamps, 1e-9) == 1000

    def test_each_event_used_once(self):
        a = np.array([1.0e-6, 1.0005e-6])
        b = np.array([1.0002e-6])
        assert count_coincidences(a, b, 2e-9) == 1

    def test_nearest_match(self):
        a = np.array([1.0e-6, 1.0015e-6])
        b = np.array([1.0008e-6, 1.0016e-6])
        assert count_coincidences(a, b, 2e-9) == 2

    def test_zero_window_on_independent_streams(self):
        rng = np.random.default_rng(3)
        a = np.sort(rng.uniform(0.0, 1.0, 10000))
        b = np.sort(rng.uniform(0.0, 1.0, 10000))
        assert count_coincidences(a, b, 0.0) == 0

    def test_independent_streams_match_accidental_formula(self):
        rng = np.random.default_rng(11)
        rate, duration, tau = 1e5, 10.0, 3.2e-9
        a = np.sort(rng.uniform(0.0, duration, rng.poisson(rate * duration)))
        b = np.sort(rng.uniform(0.0, duration, rng.poisson(rate * duration)))
        n = count_coincidences(a, b, tau)
        expected = a.size / duration * b.size / duration * tau * duration
        assert abs(n - expected) < 3 * np.sqrt(expected)

    def test_delayed_window_on_identical_streams(self):
        stamps = np.cumsum(np.full(1000, 1e-6))
        assert measure_accidentals(stamps, stamps, 1e-9, delay_s=100e-9) == 0

    def test_unsorted_streams(self):
        with pytest.raises(UsageError):
            count_coincidences(np.array([2.0, 1.0]), np.array([1.0]), 1e-9)
        with pytest.raises(ValidationError):
            count_coincidences(np.array([1.0]), np.array([1.0]), -1e-9)

    def test_empty_stream(self):
        assert count_coincidences(np.array([]), np.array([1.0]), 1e-9) == 0

    def test_crowded_windows_match_greedy_reference(self, monkeypatch):
        rng = np.random.default_rng(17)
        a = np.sort(rng.uniform(0.0, 1e-6, 3000))
        b = np.sort(rng.uniform(0.0, 1e-6, 3000))
        expected = _greedy_nearest(a, b, 2e-9)
        assert count_coincidences(a, b, 2e-9) == expected
        monkeypatch.setattr(counting, "SLICE_EVENTS", 64)
        assert count_coincidences(a, b, 2e-9) == expected

    def test_shared_events_used_once_across_blocks(self, monkeypatch):
        monkeypatch.setattr(counting, "SLICE_EVENTS", 2)
        a = np.array([1.0e-6, 1.0001e-6, 1.0002e-6, 1.0003e-6, 1.0004e-6])
        b = np.array([1.00015e-6, 1.00025e-6])
        assert count_coincidences(a, b, 1e-9) == 2

    def test_long_streams(self):
        stamps = np.cumsum(np.full(200_000, 1e-6))
        assert count_coincidences(stamps, stamps, 1e-9) == 200_000
        assert count_coincidences(stamps, stamps + 2e-9, 1e-9) == 0


class TestMonteCarlo:
    def test_dead_time(self):
        events = np.array([0.0, 10e-9, 60e-9, 100e-9, 200e-9])
        assert apply_dead_time(events, 50e-9).tolist() == [0.0, 60e-9, 200e-9]
        assert apply_dead_time(events, 0.0) is events

    def test_stream_validation(self):
        with pytest.raises(ValidationError):
            TimeTagStream("signal", [2.0, 1.0])
        with pytest.raises(ValidationError):
            TimeTagStream("pump", [1.0])
        stream = TimeTagStream("idler", [1.0, 2.0])
        assert len(stream) == 2
        assert stream.rows() == [("idler", 1.0), ("idler", 2.0)]

    def test_deterministic_for_a_seed(self, detection):
        source = SourceBrightness(1e6)
        first = simulate_timetags(0.05, source, detection, 0.5, seed=42)
        second = simulate_timetags(0.05, source, detection, 0.5, seed=42)
        other = simulate_timetags(0.05, source, detection, 0.5, seed=43)
        assert np.array_equal(first[0].timestamps, second[0].timestamps)
        assert np.array_equal(first[1].timestamps, second[1].timestamps)
        assert not np.array_equal(first[0].timestamps, other[0].timestamps)

    def test_duration_must_be_positive(self, detection):
        with pytest.raises(UsageError):
            simulate_timetags(0.05, SourceBrightness(1e6), detection, 0.0)

    def test_zero_power_gives_darks_only(self, detection):
        signal, idler = simulate_timetags(0.0, SourceBrightness(1e6), detection, 10.0, seed=5)
        assert abs(len(signal) - 3000) < 3 * np.sqrt(3000)
        assert count_coincidences(signal, idler, detection.tau_cc) < 5

    @pytest.mark.parametrize("seed, power_mw, det", [
        (1, 0.1, DetectionConfig()),
        (2, 0.05, DetectionConfig(eta_s=0.3, eta_i=0.6, dark_s=1000.0, dark_i=1000.0, tau_cc=1e-9)),
        (3, 0.2, DetectionConfig(eta_s=0.15, eta_i=0.22, tau_cc=3.2e-9)),
        (4, 0.03, DetectionConfig(eta_s=0.8, eta_i=0.8, analyzer_transmission=1.0, tau_dead=30e-9)),
        (5, 0.03, DetectionConfig(dark_s=5000.0, dark_i=5000.0, tau_cc=5e-9)),
    ])
    def test_agrees_with_analytic_model(self, seed, power_mw, det):
        comparisons = compare_with_analytic(power_mw, SourceBrightness(1e6), det, 10.0, seed=seed)
        assert [c.quantity for c in comparisons] == ["singles_s", "singles_i", "twofold", "accidentals"]
        for comparison in comparisons:
            assert abs(comparison.deviation) < 3.0, comparison

    def test_dead_time_after_earlier_registration(self):
        events = np.array([0.0, 10e-9, 60e-9])
        assert apply_dead_time(events, 50e-9, last_registered=-20e-9).tolist() == [60e-9]

    def test_dead_time_long_run(self):
        events = np.arange(100) * 10e-9
        assert np.array_equal(apply_dead_time(events, 45e-9), events[::5])

    def test_slices_keep_dead_time(self, detection, monkeypatch):
        monkeypatch.setattr(counting, "SLICE_EVENTS", 5000)
        signal, idler = simulate_timetags(0.2, SourceBrightness(1e8), detection, 0.05, seed=9)
        for stream in (signal, idler):
            assert np.all(np.diff(stream.timestamps) > detection.tau_dead)
        expected = analytic_rates(0.2, SourceBrightness(1e8), detection).singles_s * 0.05
        assert abs(len(signal) - expected) < 4 * np.sqrt(expected)

    @pytest.mark.parametrize("power_mw, duration_s, seed", [(0.5, 3.0, 21), (0.963, 10.0, 22)])
    def test_calibrated_source_at_operating_power(self, calibrated, power_mw, duration_s, seed):
        source, det = calibrated
        comparisons = compare_with_analytic(power_mw, source, det, duration_s, seed=seed)
        for comparison in comparisons:
            assert abs(comparison.deviation) < 3.0, comparison
