import numpy as np
import pytest

from flexdesign.domain import DT, ProcessSpec, TechEconSpec
from flexdesign.model import MarketMode
from flexdesign.scenarios import Clustering, build_tree, cluster_days
from flexdesign.studies import (
    StudyInputs, SweepParameter, SweepSpec, capacity_heatmap, flexibility_sweep, front_rows,
    market_mode_comparison, pareto_front, savings_decomposition,
)
from flexdesign.synthetic import flat_days, synthetic_days
from fixtures import shipped_tree

RTOL = 1e-6


@pytest.fixture(scope="module")
def small():
    tree, _ = cluster_days(synthetic_days(8, seed=0), 3)
    return StudyInputs(tree, ProcessSpec(), TechEconSpec.reference())


def flat_inputs(process, econ, **kw):
    data = flat_days(2, **kw)
    tree = build_tree(Clustering(1, np.zeros(2, int), np.zeros((1, 288)), 0.0, 0), data)
    return StudyInputs(tree, process, econ)


def test_pareto_front_shape(small):
    front = pareto_front(small, 4)
    tac = [r.tac for r in front]
    gwi = [r.gwi for r in front]
    assert all(b >= a * (1 - RTOL) for a, b in zip(tac, tac[1:]))
    assert all(b <= a * (1 + RTOL) for a, b in zip(gwi, gwi[1:]))
    steps = np.diff(gwi)
    np.testing.assert_allclose(steps, steps[0], rtol=1e-5)
    for r in front[1:-1]:
        assert r.gwi == pytest.approx(r.gwi_bound, rel=1e-9)
    assert len(front_rows(front)) == 4 and "capex_EUR_per_a_pv" in front_rows(front)[0]


def test_pareto_front_degenerate_when_objectives_coincide():
    inputs = flat_inputs(ProcessSpec.inflexible(1.0), TechEconSpec.reference(1.0).without_system())
    front = pareto_front(inputs, 5)
    assert len(front) == 5 and len({(r.tac, r.gwi) for r in front}) == 1
    with pytest.raises(ValueError):
        pareto_front(inputs, 1)


def test_sweep_inflexible_no_system_matches_closed_form():
    rigid = ProcessSpec.inflexible(1.0)
    inputs = flat_inputs(rigid, TechEconSpec.reference(1.0), da_price=50.0)
    spec = SweepSpec(SweepParameter.OVERSIZING, (0.0,), rigid, inputs.econ)
    row = flexibility_sweep(spec, inputs.tree).points[0]
    assert row.without_system.tac == pytest.approx(365 * 24 * (50 + 29.6), rel=1e-8)


@pytest.mark.parametrize("param", list(SweepParameter))
def test_sweeps_are_monotone_with_nonnegative_savings(small, param):
    values = SweepParameter(param).default_values(small.process, 3)
    spec = SweepSpec(param, values, small.process, small.econ)
    sweep = flexibility_sweep(spec, small.tree)
    assert sweep.monotonicity_violations() == []
    assert all(r.savings >= -RTOL for r in sweep.points)
    assert [r["value"] for r in sweep.rows()] == list(spec.values)


def test_default_sweep_grids():
    p = ProcessSpec()
    assert SweepParameter.OVERSIZING.default_values(p) == pytest.approx([0, 0.1, 0.2, 0.3, 0.4])
    assert SweepParameter.MIN_PART_LOAD.default_values(p) == pytest.approx([1, 0.75, 0.5, 0.25, 0])
    assert SweepParameter.STORAGE_HOURS.default_values(p)[-1] == pytest.approx(6.0)
    with pytest.raises(ValueError):
        SweepSpec(SweepParameter.MIN_PART_LOAD, (1.5,), p, TechEconSpec.reference())
    with pytest.raises(ValueError):
        SweepSpec(SweepParameter.RAMP_LIMIT, (), p, TechEconSpec.reference())


def test_heatmap_consistency(small):
    hm = capacity_heatmap(small, [0.0, 0.2], [0.0, 0.5, 1.0])
    assert hm.tac.shape == (2, 3)
    assert hm.monotonicity_violations() == []
    spec = SweepSpec(SweepParameter.OVERSIZING, (0.0, 0.2), small.process, small.econ)
    sweep = flexibility_sweep(spec, small.tree)
    np.testing.assert_allclose(hm.tac[:, 0], [r.without_system.tac for r in sweep.points], rtol=1e-9)
    add = hm.additivity()
    assert add.shape == (2, 3) and add[0].max() == pytest.approx(0, abs=1e-12)
    assert {r["metric"] for r in hm.long_rows()} == {"tac", "q_pv", "q_wind", "q_batt", "additivity"}
    assert capacity_heatmap(small, [0.2], [1.0]).additivity() is None


def test_savings_decomposition(small):
    dec = savings_decomposition(small)
    s = dec.savings()
    assert s[dec.BASELINE] == 0.0
    assert all(v >= -RTOL * dec.results[dec.BASELINE].tac for v in s.values())
    full = dec.results[dec.FULL].tac
    assert all(full <= dec.results[k].tac * (1 + RTOL) for k in dec.SINGLES)
    assert 0.0 <= dec.additivity() < 0.05


def test_market_comparison_and_deviation_direction():
    out = {}
    for dev, shaping in ((0.0, 0.0), (20.0, 4.0)):
        tree, _ = cluster_days(synthetic_days(6, seed=2, deviation=dev, shaping=shaping), 2)
        out[dev] = market_mode_comparison(StudyInputs(tree, ProcessSpec(), TechEconSpec.reference()))
    assert abs(out[0.0].relative_savings) <= RTOL
    assert out[20.0].savings > out[0.0].savings
    rows = out[20.0].rows()
    assert [r["market_mode"] for r in rows] == ["id_only", "simultaneous"]
    assert rows[0]["da_purchases"] == 0.0 and rows[1]["savings"] == out[20.0].savings


def test_shaping_only_savings_within_bound():
    # ID hourly means equal DA, only intra-hour shaping: savings cannot exceed
    # trading the full purchase limit against the shaping amplitude every quarter.
    shaping = 4.0
    tree, _ = cluster_days(synthetic_days(6, seed=2, deviation=0.0, shaping=shaping), 2)
    proc, econ = ProcessSpec(), TechEconSpec.reference()
    cmp_ = market_mode_comparison(StudyInputs(tree, proc, econ))
    limit = proc.p_max + econ.battery.capacity_max / econ.battery_rate + econ.pv.capacity_max + econ.wind.capacity_max
    bound = 365 * 96 * DT * shaping * limit
    assert -RTOL * cmp_.id_only.tac <= cmp_.savings <= bound


def test_studies_are_deterministic_and_workers_agree():
    inputs = flat_inputs(ProcessSpec(1.0), TechEconSpec.reference(1.0), pv=0.3)
    a = market_mode_comparison(inputs).rows()
    b = market_mode_comparison(inputs).rows()
    par = StudyInputs(inputs.tree, inputs.process, inputs.econ, MarketMode.SIMULTANEOUS, workers=2)
    c = market_mode_comparison(par).rows()
    assert a == b == c


def test_heatmap_additivity_on_shipped_fixture():
    hm = capacity_heatmap(StudyInputs(shipped_tree(), ProcessSpec(), TechEconSpec.reference()),
                          [0.0, 0.2, 0.4], [0.0, 0.5, 1.0])
    assert hm.additivity().max() < 0.005
