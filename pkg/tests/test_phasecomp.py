"""Tests for the phase-compensation component."""

import math

import numpy as np
import pytest

from sandwichpy.components.dispersion import vacuum
from sandwichpy.components.phasecomp import (
    CompensatorSpec,
    SpectralWindow,
    WaveplateStack,
    bell_fidelity,
    compensation_phase,
    fidelity_vs_displacement,
    mirror_displacement_phase,
    optimize_compensator_length,
    phase_flatness,
    phase_for_fidelity,
    phase_temperature_slope,
    pi_shift_temperature,
    temperature_phase_scan,
    temperature_phase_shift,
    temperature_tolerance,
    total_phase_map,
    uncompensated_phase,
    vacuum_stack,
    waveplate_retardation,
)
from sandwichpy.utils.errors import ConfigError, DomainError, UsageError, ValidationError

from conftest import PUMP_NM, SIGNAL_NM


class TestWaveplate:
    def test_bundled_retardations(self, paper_stack):
        assert waveplate_retardation(paper_stack, 850.0) == pytest.approx(1.465045, abs=1e-5)
        assert waveplate_retardation(paper_stack, 785.0) == pytest.approx(1.457023, abs=1e-5)
        assert waveplate_retardation(paper_stack, 405.4) == pytest.approx(-0.897294, abs=1e-5)

    def test_near_quarter_wave_in_the_red(self, paper_stack):
        grid = np.linspace(760.0, 870.0, 23)
        retardation = waveplate_retardation(paper_stack, grid)
        assert np.all(np.abs(retardation / (math.pi / 2) - 0.93) < 0.02)

    def test_vacuum_stack_has_no_retardation(self):
        assert waveplate_retardation(vacuum_stack(), 800.0) == 0.0

    def test_tilt_increases_retardation(self, paper_stack):
        assert abs(waveplate_retardation(paper_stack.with_tilt(5.0), 785.0)) > abs(waveplate_retardation(paper_stack, 785.0))

    def test_invalid_documents(self):
        with pytest.raises(ConfigError):
            WaveplateStack.from_dict({"layers": [{"material": "MgF2"}]})
        with pytest.raises(ValidationError):
            WaveplateStack.from_dict({"layers": []})
        with pytest.raises(ValidationError):
            WaveplateStack.from_dict({"layers": [{"material": "MgF2", "thickness_um": 100.0}], "tilt_deg": 90.0})

    def test_dict_round_trip(self, paper_stack):
        again = WaveplateStack.from_dict(paper_stack.to_dict())
        assert again == paper_stack


class TestPhases:
    def test_uncompensated_reference_values(self, paper_crystal, paper_stack, phasematched_c):
        assert uncompensated_phase(784.0, 839.0, paper_crystal, paper_stack, 25.0) == pytest.approx(312535.905552503, abs=1e-3)
        assert uncompensated_phase(784.0, 839.0, paper_crystal, paper_stack, phasematched_c) == pytest.approx(
            312651.015924354, abs=1e-3)

    def test_compensation_reference_value(self, paper_compensator):
        assert compensation_phase(784.0, 839.0, paper_compensator) == pytest.approx(-61224.863418595, abs=1e-3)

    def test_zero_compensator(self):
        assert compensation_phase(784.0, 839.0, CompensatorSpec(0.0)) == 0.0
        assert np.all(compensation_phase(np.array([780.0, 790.0]), 839.0, CompensatorSpec(0.0)) == 0.0)

    def test_slopes_have_opposite_signs(self, paper_setup):
        step = 0.01
        signal = np.array([SIGNAL_NM - step, SIGNAL_NM + step])
        idler = paper_setup.idler(signal)
        unc = uncompensated_phase(signal, idler, paper_setup.crystal, paper_setup.waveplate, paper_setup.ktp_temperature_c)
        comp = compensation_phase(signal, idler, CompensatorSpec(1.0))
        unc_slope = (unc[1] - unc[0]) / (2 * step)
        comp_slope = (comp[1] - comp[0]) / (2 * step)
        assert unc_slope == pytest.approx(-1.10, abs=0.05)
        assert comp_slope == pytest.approx(0.062, abs=0.005)

    def test_empty_setup_map_is_zero(self, empty_setup):
        phase_map = total_phase_map(empty_setup, np.linspace(780.0, 788.0, 11))
        assert np.all(phase_map.phase == 0.0)

    def test_diagonal_matches_two_dimensional_slice(self, paper_setup):
        signal = np.linspace(782.0, 786.0, 9)
        diagonal = total_phase_map(paper_setup, signal)
        full = total_phase_map(paper_setup, signal, idler_grid=diagonal.idler_grid)
        assert np.allclose(np.diag(full.phase), diagonal.phase, rtol=0, atol=1e-6)
        assert full.phase.shape == (9, 9)
        assert len(full.rows()) == 81

    def test_offset_subtraction(self, paper_setup):
        signal = np.linspace(782.0, 786.0, 9)
        phase_map = total_phase_map(paper_setup, signal, offset_subtracted=True)
        assert phase_map.phase[4] == pytest.approx(0.0, abs=1e-6)
        assert phase_map.offset_subtracted
        explicit = total_phase_map(paper_setup, signal, offset=phase_map.offset_rad)
        assert np.allclose(explicit.phase, phase_map.phase)

    def test_empty_grid_is_usage_error(self, paper_setup):
        with pytest.raises(UsageError):
            total_phase_map(paper_setup, [])


class TestOptimization:
    def test_compensator_flattens_window(self, paper_setup):
        signal = SpectralWindow(SIGNAL_NM, 1.75, 101).grid()
        uncompensated = phase_flatness(total_phase_map(paper_setup.with_compensator(CompensatorSpec(0.0)), signal))
        compensated = phase_flatness(total_phase_map(paper_setup, signal))
        assert uncompensated.peak_to_peak == pytest.approx(3.8871, abs=1e-3)
        assert compensated.peak_to_peak == pytest.approx(0.1205, abs=1e-3)
        assert uncompensated.peak_to_peak / compensated.peak_to_peak >= 20

    def test_wide_window(self, paper_setup):
        signal = SpectralWindow(SIGNAL_NM, 15.0, 101).grid()
        uncompensated = phase_flatness(total_phase_map(paper_setup.with_compensator(CompensatorSpec(0.0)), signal))
        compensated = phase_flatness(total_phase_map(paper_setup, signal))
        assert uncompensated.peak_to_peak == pytest.approx(33.697, abs=1e-2)
        assert compensated.peak_to_peak == pytest.approx(1.045, abs=1e-2)

    def test_optimal_length_uniform(self, paper_setup):
        best, report = optimize_compensator_length(paper_setup, SpectralWindow(SIGNAL_NM, 1.75, 101))
        assert best == pytest.approx(17.944, abs=0.01)
        assert abs(best - 18.5) < 1.0
        assert report.peak_to_peak < 1e-3
        assert report.weighting == "uniform"

    def test_optimal_length_flattens_wide_window(self, paper_setup):
        best, report = optimize_compensator_length(paper_setup, SpectralWindow(SIGNAL_NM, 15.0, 101))
        assert report.peak_to_peak < 0.01
        assert abs(best - 17.944) < 0.1

    def test_spectrum_weighted(self, paper_setup):
        best, report = optimize_compensator_length(paper_setup, SpectralWindow(SIGNAL_NM, 1.75, 101), "spectrum-weighted")
        assert abs(best - 17.944) < 0.1
        assert report.weighting == "spectrum-weighted"
        assert report.rms < 1e-3

    def test_single_point_window_zeroes_slope(self, paper_setup):
        best, _ = optimize_compensator_length(paper_setup, SpectralWindow(SIGNAL_NM, 0.0, 1))
        assert best == pytest.approx(17.944, abs=0.05)

    def test_empty_setup_needs_no_compensator(self, empty_setup):
        best, report = optimize_compensator_length(empty_setup, SpectralWindow(SIGNAL_NM, 1.75, 21))
        assert best == 0.0
        assert report.peak_to_peak == 0.0

    def test_unknown_weighting(self, paper_setup):
        with pytest.raises(UsageError):
            optimize_compensator_length(paper_setup, SpectralWindow(SIGNAL_NM, 1.75), "peak")

    def test_window_validation(self):
        with pytest.raises(ValidationError):
            SpectralWindow(SIGNAL_NM, -1.0)
        with pytest.raises(ValidationError):
            SpectralWindow(SIGNAL_NM, 1.0, 0)


class TestTemperature:
    def test_bell_fidelity(self):
        assert bell_fidelity(0.0) == 1.0
        assert bell_fidelity(math.pi) == pytest.approx(0.0, abs=1e-15)
        assert bell_fidelity(math.pi / 2) == pytest.approx(0.5)

    def test_phase_for_fidelity(self):
        assert phase_for_fidelity(0.5) == pytest.approx(math.pi / 2)
        assert bell_fidelity(phase_for_fidelity(0.995)) == pytest.approx(0.995)
        for bad in (1.0, 0.4, 1.2):
            with pytest.raises(DomainError):
                phase_for_fidelity(bad)

    def test_compensator_slope_and_pi_shift(self, paper_compensator, paper_idler):
        assert phase_temperature_slope(paper_compensator, SIGNAL_NM, paper_idler) == pytest.approx(1.290269, abs=1e-5)
        assert pi_shift_temperature(paper_compensator, SIGNAL_NM, paper_idler) == pytest.approx(2.4348, abs=1e-3)

    def test_compensator_shift_is_linear(self, paper_compensator, paper_idler):
        one = temperature_phase_shift(paper_compensator, 1.0, SIGNAL_NM, paper_idler)
        two = temperature_phase_shift(paper_compensator, 2.0, SIGNAL_NM, paper_idler)
        assert two == pytest.approx(2 * one, rel=1e-6)
        assert temperature_phase_shift(paper_compensator, 0.0, SIGNAL_NM, paper_idler) == 0.0

    def test_tolerances(self, paper_compensator, paper_crystal, paper_idler, phasematched_c):
        yvo = temperature_tolerance(paper_compensator, 0.995, SIGNAL_NM, paper_idler)
        ktp = temperature_tolerance(paper_crystal, 0.995, SIGNAL_NM, paper_idler, phasematched_c)
        assert yvo == pytest.approx(0.1097, abs=2e-4)
        assert ktp == pytest.approx(0.0357, abs=2e-4)
        assert temperature_tolerance(paper_crystal, 0.995, SIGNAL_NM, paper_idler) == pytest.approx(0.0377, abs=2e-4)
        assert ktp < yvo

    def test_half_fidelity_tolerance_is_quarter_wave_shift(self, paper_compensator, paper_idler):
        tolerance = temperature_tolerance(paper_compensator, 0.5, SIGNAL_NM, paper_idler)
        assert tolerance == pytest.approx(pi_shift_temperature(paper_compensator, SIGNAL_NM, paper_idler) / 2, rel=1e-4)

    def test_no_temperature_dependence(self, paper_idler):
        assert temperature_tolerance(CompensatorSpec(0.0), 0.995, SIGNAL_NM, paper_idler) == math.inf
        with pytest.raises(DomainError):
            pi_shift_temperature(CompensatorSpec(0.0), SIGNAL_NM, paper_idler)

    def test_scan(self, paper_compensator, paper_idler):
        points = temperature_phase_scan(paper_compensator, [-1.0, 0.0, 1.0], SIGNAL_NM, paper_idler)
        assert [p.delta_t for p in points] == [-1.0, 0.0, 1.0]
        assert points[1].fidelity == 1.0
        assert points[0].phase_rad == pytest.approx(-points[2].phase_rad, rel=1e-6)
        with pytest.raises(UsageError):
            temperature_phase_scan(paper_compensator, [], SIGNAL_NM, paper_idler)


class TestMirrorDisplacement:
    def test_reference_value(self, paper_idler):
        assert mirror_displacement_phase(100.0, PUMP_NM, SIGNAL_NM, paper_idler) == pytest.approx(0.023206, abs=2e-6)

    def test_zero_displacement(self, paper_idler):
        assert mirror_displacement_phase(0.0, PUMP_NM, SIGNAL_NM, paper_idler) == 0.0

    def test_linear_in_displacement(self, paper_idler):
        phases = mirror_displacement_phase(np.array([50.0, 100.0]), PUMP_NM, SIGNAL_NM, paper_idler)
        assert phases[1] == pytest.approx(2 * phases[0])

    def test_vacuum_has_no_phase(self, paper_idler):
        assert mirror_displacement_phase(100.0, PUMP_NM, SIGNAL_NM, paper_idler, vacuum()) == 0.0

    def test_negative_displacement(self, paper_idler):
        with pytest.raises(DomainError):
            mirror_displacement_phase(-1.0, PUMP_NM, SIGNAL_NM, paper_idler)

    def test_idler_must_conserve_energy(self, paper_idler):
        with pytest.raises(DomainError):
            mirror_displacement_phase(100.0, PUMP_NM, SIGNAL_NM, 850.0)
        with pytest.raises(DomainError):
            fidelity_vs_displacement([100.0], PUMP_NM, SIGNAL_NM, paper_idler + 0.5)

    def test_fidelity_stays_high(self, paper_idler):
        rows = fidelity_vs_displacement([0.0, 100.0, 200.0], PUMP_NM, SIGNAL_NM, paper_idler)
        assert rows[0] == (0.0, 0.0, 1.0)
        assert all(fidelity > 0.999 for _, _, fidelity in rows)
        with pytest.raises(UsageError):
            fidelity_vs_displacement([], PUMP_NM, SIGNAL_NM, paper_idler)
