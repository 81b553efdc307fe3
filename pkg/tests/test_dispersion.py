"""Tests for the dispersion component."""

import json

import numpy as np
import pytest

from sandwichpy.components.dispersion import (
    Axis,
    DispersionModel,
    Material,
    air,
    birefringence,
    get_model,
    group_index,
    load_models,
    parse_axis,
    refractive_index,
    vacuum,
)
from sandwichpy.utils.errors import ConfigError, RangeError, UsageError, ValidationError

# Reference indices from an independent scratch evaluation (awk, double precision)
# of the published coefficient formulas.
KTP_Y_784_25C = 1.757584442237
KTP_Z_784_25C = 1.846561851671
YVO4_O_800 = 1.9720714371
YVO4_E_800 = 2.1858528276
AIR_800_EXCESS = 2.750478e-4

SOLID_MODELS = [
    (Material.KTP, Axis.Y),
    (Material.KTP, Axis.Z),
    (Material.YVO4, Axis.ORDINARY),
    (Material.YVO4, Axis.EXTRAORDINARY),
    (Material.MGF2, Axis.ORDINARY),
    (Material.MGF2, Axis.EXTRAORDINARY),
    (Material.SIO2, Axis.ORDINARY),
    (Material.SIO2, Axis.EXTRAORDINARY),
]


def test_vacuum_is_exactly_one():
    assert refractive_index(vacuum(), 800.0, 25.0) == 1.0
    assert refractive_index(vacuum(), 1e5, -200.0) == 1.0


def test_ktp_reference_values():
    assert refractive_index(get_model("KTP", "y"), 784.0, 25.0) == pytest.approx(KTP_Y_784_25C, abs=1e-9)
    assert refractive_index(get_model("KTP", "z"), 784.0, 25.0) == pytest.approx(KTP_Z_784_25C, abs=1e-9)


def test_yvo4_reference_values():
    assert get_model("YVO4", "o").index(800.0) == pytest.approx(YVO4_O_800, abs=1e-9)
    assert get_model("YVO4", "e").index(800.0) == pytest.approx(YVO4_E_800, abs=1e-9)


def test_air_excess_index():
    delta = refractive_index(air(), 800.0) - 1.0
    assert 2.5e-4 < delta < 3.0e-4
    assert delta == pytest.approx(AIR_800_EXCESS, rel=1e-6)


@pytest.mark.parametrize("material,axis", SOLID_MODELS)
def test_normal_dispersion_over_range(material, axis):
    model = get_model(material, axis)
    lo, hi = model.range_nm
    grid = np.linspace(max(lo, 400.0), min(hi, 2000.0), 400)
    values = model.index(grid, 25.0)
    assert np.all(np.diff(values) < 0)


def test_thermo_optic_vanishes_at_reference():
    model = get_model("KTP", "y")
    base = model._base_index(np.asarray(0.784))
    assert model.index(784.0, model.reference_temperature_c) == pytest.approx(float(base), abs=1e-15)


def test_thermo_optic_raises_index():
    model = get_model("KTP", "z")
    assert model.index(784.0, 60.0) > model.index(784.0, 25.0)


def test_vectorized_matches_scalar():
    model = get_model("YVO4", "e")
    grid = np.array([700.0, 784.0, 839.5])
    values = model.index(grid, 30.0)
    assert values.shape == (3,)
    for lam, value in zip(grid, values):
        assert model.index(float(lam), 30.0) == pytest.approx(value, abs=1e-15)


def test_out_of_range_wavelength_names_model_and_bounds():
    with pytest.raises(RangeError) as info:
        refractive_index(get_model("KTP", "y"), 405.4)
    message = str(info.value)
    assert "KTP/y" in message
    assert "430" in message and "3540" in message


def test_out_of_range_temperature():
    with pytest.raises(RangeError):
        get_model("YVO4", "o").index(800.0, 150.0)


def test_nonpositive_wavelength_rejected():
    with pytest.raises(ValidationError):
        get_model("KTP", "z").index(0.0)


def test_birefringence_vacuum_is_zero():
    assert birefringence(vacuum(), vacuum(), 800.0) == 0.0


def test_birefringence_yvo4_window_and_sign():
    delta = birefringence(get_model("YVO4", "o"), get_model("YVO4", "e"), 800.0, 25.0)
    assert 0.15 < abs(delta) < 0.25
    # ordinary minus extraordinary: YVO4 is positive uniaxial
    assert delta == pytest.approx(YVO4_O_800 - YVO4_E_800, abs=1e-9)


def test_birefringence_mismatched_materials():
    with pytest.raises(UsageError):
        birefringence(get_model("YVO4", "o"), get_model("MgF2", "e"), 800.0)


def test_group_index_exceeds_phase_index():
    model = get_model("KTP", "z")
    assert group_index(model, 784.0) > model.index(784.0)


def test_group_index_is_step_independent():
    model = get_model("KTP", "y")
    fine = group_index(model, 839.0, 40.0, step_nm=0.01)
    assert group_index(model, 839.0, 40.0, step_nm=0.2) == pytest.approx(fine, rel=1e-7)
    assert fine != pytest.approx(group_index(model, 839.0, 25.0), rel=1e-9)
    assert group_index(vacuum(), 839.0) == pytest.approx(1.0, abs=1e-12)


def test_unknown_axis_for_material():
    with pytest.raises(ValidationError):
        get_model("KTP", "ordinary")
    with pytest.raises(ValidationError):
        parse_axis("diagonal")


def test_model_round_trips_through_dict():
    model = get_model("MgF2", "o")
    assert DispersionModel.from_dict(model.to_dict()) == model


def test_load_models_custom_file(tmp_path):
    entry = get_model("SiO2", "e").to_dict()
    entry["coefficients"][0] = 1.3
    path = tmp_path / "models.json"
    path.write_text(json.dumps({"models": [entry]}), encoding="utf-8")
    registry = load_models(path)
    assert list(registry) == [(Material.SIO2, Axis.EXTRAORDINARY)]
    custom = get_model("SiO2", "e", registry)
    assert custom.index(800.0) > get_model("SiO2", "e").index(800.0)


def test_load_models_missing_field(tmp_path):
    entry = get_model("SiO2", "e").to_dict()
    del entry["provenance"]
    path = tmp_path / "models.json"
    path.write_text(json.dumps([entry]), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_models(path)


def test_every_model_has_provenance():
    for material, axis in SOLID_MODELS:
        assert get_model(material, axis).provenance


def test_fitted_thermo_optic_is_labelled():
    yvo_e = get_model("YVO4", "extraordinary")
    assert yvo_e.thermo_optic == ((4.0e-6,),)
    assert "fitted" in yvo_e.provenance
    assert "datasheet data" in yvo_e.provenance
