import math

import numpy as np
import pytest

from flexdesign.domain import (
    DailyProfile, ProcessSpec, Resolution, TechEconSpec, Unit, annuity_factor, validate,
)

Q, H = Resolution.QUARTER_HOUR, Resolution.HOUR


def prof(values, res=Q, unit=Unit.EUR_PER_MWH, day="d"):
    return DailyProfile(res, values, unit, day)


def test_short_quarter_hour_profile_reports_length_mismatch():
    report = validate([prof(np.zeros(95))])
    assert any("length mismatch" in r for r in report)


def test_reference_process_and_cost_data_are_valid():
    assert validate([prof(np.zeros(96))], ProcessSpec(2.74, 0.20, 0.50, 3.0, 0.25), TechEconSpec.reference()) == []


def test_super_unit_round_trip_efficiency_is_reported():
    econ = TechEconSpec.reference(eta_in=1.1, eta_out=1.0)
    assert any("efficiency > 1" in r for r in validate([], econ=econ))


def test_non_finite_values_are_reported():
    v = np.zeros(24)
    v[3] = np.nan
    assert any("non-finite" in r for r in validate([prof(v, H)]))


def test_mixed_units_are_rejected():
    series = {"price": [prof(np.zeros(96)), prof(np.zeros(96), unit=Unit.MW)]}
    assert any("mixed units" in r for r in validate(series))


def test_unit_tag_survives_expansion():
    p = prof(np.arange(24.0), H, Unit.KG_PER_MWH, "2021-01-01")
    q = p.to_quarter_hour()
    assert q.unit is Unit.KG_PER_MWH and q.day_id == "2021-01-01" and len(q) == 96
    assert np.array_equal(q.values[:8], [0, 0, 0, 0, 1, 1, 1, 1])


def test_profiles_are_immutable():
    p = prof(np.zeros(96))
    with pytest.raises(ValueError):
        p.values[0] = 1.0


@pytest.mark.parametrize("field,value", [("p_nom", 0.0), ("min_part_load", 1.2), ("storage_hours", -1.0),
                                         ("ramp_limit", -0.1), ("oversizing", -0.1)])
def test_process_invariant_boundaries(field, value):
    kwargs = dict(p_nom=1.0, oversizing=0.2, min_part_load=0.5, storage_hours=3.0, ramp_limit=0.25)
    kwargs[field] = value
    assert ProcessSpec(**kwargs).violations()


def test_inflexible_process_pins_power():
    p = ProcessSpec.inflexible(1.0)
    assert p.p_min == p.p_max == 1.0 and p.storage_capacity == 0.0


def test_annuity_matches_high_precision_evaluation():
    # mpmath at 50 digits: (1.08^25 * 0.08) / (1.08^25 - 1)
    assert annuity_factor(0.08, 25) == pytest.approx(0.0936787790519681, rel=1e-14)
    assert annuity_factor(0.08, 15) == pytest.approx(0.116829544936020, rel=1e-14)


def test_technology_costs_convert_to_mw_once():
    econ = TechEconSpec.reference(p_nom=2.0)
    assert econ.pv.annualized_cost_per_mw(0.08) == pytest.approx(1000 * (927 * 0.0936787790519681 + 17))
    assert econ.battery.capacity_max == 8.0
    assert econ.without_system().wind.capacity_max == 0.0
    assert econ.scaled_capacity(0.5).pv.capacity_max == 1.0
    assert econ.eta_in * econ.eta_out == pytest.approx(0.9)
    assert math.isclose(econ.battery.annual_gwi_per_mw(), 120e3 / 15)
