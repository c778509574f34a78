import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexdesign.domain import ScenarioTree
from flexdesign.scenarios import (
    Clustering, DailyData, build_tree, cluster_days, deviation_std_report, kmeans, load_tree,
    market_deviation, save_tree, standardize, wcss_curve,
)
from flexdesign.synthetic import flat_days, synthetic_days
from oracles import best_partition_wcss, population_std


def test_identical_days_standardize_to_zero():
    z = standardize(np.ones((2, 96)), np.ones((2, 96)) * 0.3, np.ones((2, 96)) * 400)
    assert z.shape == (2, 288) and not z.values.any()


def test_two_value_column_standardizes_to_plus_minus_one():
    wind = np.zeros((2, 96))
    wind[1, 5] = 2.0
    z = standardize(wind, np.zeros((2, 96)), np.zeros((2, 96)))
    assert z.values[:, 5].tolist() == [-1.0, 1.0]


def test_single_day_cannot_be_standardized():
    with pytest.raises(ValueError):
        standardize(np.zeros((1, 96)), np.zeros((1, 96)), np.zeros((1, 96)))


def test_standardized_columns_have_zero_mean_unit_std():
    d = synthetic_days(365, seed=4)
    z = standardize(d.wind, d.pv, d.gwi)
    assert z.shape == (365, 288)
    spread = z.stds > 0
    np.testing.assert_allclose(z.values.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(population_std(z.values)[spread], 1, atol=1e-9)
    np.testing.assert_allclose(z.inverse_transform(z.values)[:, spread],
                               np.hstack([d.wind, d.pv, d.gwi])[:, spread], rtol=1e-12, atol=1e-12)


def test_kmeans_degenerate_and_singleton_cases():
    rows = np.tile([1.0, 2.0, 3.0], (3, 1))
    cl = kmeans(rows, 1, seed=0)
    assert cl.wcss == 0 and np.array_equal(cl.centroids[0], rows[0])
    pts = np.random.default_rng(0).normal(size=(6, 4))
    assert kmeans(pts, 6, seed=0).wcss == pytest.approx(0, abs=1e-24)
    with pytest.raises(ValueError):
        kmeans(pts, 7)


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_finds_brute_force_partition(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 2)) * 0.3
    b = rng.normal(size=(4, 2)) * 0.3 + np.array([6.0, -4.0])
    pts = np.vstack([a, b])
    cl = kmeans(pts, 2, seed=seed)
    ref, labels = best_partition_wcss(pts, 2)
    assert cl.wcss == pytest.approx(ref, rel=1e-12)
    same = np.equal.outer(cl.labels, cl.labels)
    assert np.array_equal(same, np.equal.outer(labels, labels))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 8))
def test_kmeans_invariants(seed, k):
    pts = np.random.default_rng(seed).normal(size=(12, 3))
    cl = kmeans(pts, k, seed=seed, n_init=3)
    assert np.all(cl.sizes() > 0)
    direct = sum(((pts[i] - cl.centroids[cl.labels[i]]) ** 2).sum() for i in range(len(pts)))
    assert cl.wcss == pytest.approx(direct, rel=1e-9, abs=1e-12)
    hist = np.array(cl.history)
    assert np.all(np.diff(hist) <= 1e-9 * (1 + hist[:-1]))


def test_kmeans_is_deterministic():
    d = synthetic_days(40, seed=2)
    z = standardize(d.wind, d.pv, d.gwi)
    a, b = kmeans(z, 6, seed=11), kmeans(z, 6, seed=11)
    assert np.array_equal(a.labels, b.labels) and a.wcss == b.wcss


def test_wcss_curve_endpoints_and_monotonicity():
    d = synthetic_days(30, seed=1)
    z = standardize(d.wind, d.pv, d.gwi)
    curve = wcss_curve(z, [1, 2, 3, 5, 8, 12, 20, 30], seed=0)
    ks, ws = zip(*curve)
    n_var_cols = int((z.stds > 0).sum())
    # k = 1: rows * (sum of per-column variances) = rows * number of non-constant columns
    assert ws[0] == pytest.approx(30 * n_var_cols, rel=1e-9)
    assert ws[-1] == pytest.approx(0.0, abs=1e-9)
    assert all(b <= a + 1e-9 for a, b in zip(ws, ws[1:]))


def two_day_fixture():
    a = np.linspace(10, 33, 24)
    b = np.linspace(60, 14, 24)
    id_a = np.repeat(a, 4) + np.sin(np.arange(96))
    id_b = np.repeat(b, 4) - 2.0
    ones = np.full((2, 96), 0.5)
    data = DailyData(("a", "b"), np.array([a, b]), np.array([id_a, id_b]), ones, ones, ones * 300)
    cl = Clustering(1, np.array([0, 0]), np.zeros((1, 288)), 0.0, 0)
    return data, build_tree(cl, data), a, b


def test_two_day_cluster_hand_computation():
    data, tree, a, b = two_day_fixture()
    mean = (a + b) / 2
    np.testing.assert_allclose(tree.da_prices[0], mean, rtol=0, atol=1e-13)
    for s, (da_s, id_s) in enumerate(zip((a, b), data.id_price)):
        np.testing.assert_allclose(tree.id_prices[s], np.repeat(mean, 4) + (id_s - np.repeat(da_s, 4)),
                                   rtol=0, atol=1e-12)
    assert tree.probabilities.tolist() == [0.5, 0.5]


def test_identical_days_reconstruct_id_exactly():
    d = synthetic_days(1, seed=9)
    data = d.subset([0, 0, 0, 0, 0])
    tree, _ = cluster_days(data, 2, seed=0)
    assert np.abs(tree.id_prices - data.id_price).max() <= 1e-12


def test_full_year_tree_shape():
    d = synthetic_days(365, seed=0)
    tree, cl = cluster_days(d, 20, seed=0, n_init=3)
    assert tree.n_scenarios == 365 and tree.n_clusters == 20
    assert abs(tree.probabilities.sum() - 1) <= 1e-12
    assert tree.violations() == []


def test_tree_invariants_and_shared_da():
    d = synthetic_days(30, seed=3)
    tree, cl = cluster_days(d, 5, seed=1)
    assert tree.violations() == []
    for c in tree.clusters:
        das = {tree.da_prices[tree.cluster_of[m]].tobytes() for m in c.members}
        assert len(das) == 1
        dev = market_deviation(tree)[list(c.members)]
        np.testing.assert_allclose(tree.id_prices[list(c.members)].mean(axis=0),
                                   np.repeat(c.da_price.values, 4) + dev.mean(axis=0), atol=1e-9)


def test_deviation_report_hand_cases():
    flat = DailyData(("x", "y"), np.zeros((2, 24)), np.array([np.full(96, 3.0), np.full(96, -3.0)]),
                     np.zeros((2, 96)), np.zeros((2, 96)), np.zeros((2, 96)))
    tree = build_tree(Clustering(1, np.array([0, 0]), np.zeros((1, 288)), 0.0, 0), flat)
    assert deviation_std_report(tree).mean == pytest.approx(3.0)
    single = build_tree(Clustering(2, np.array([0, 1]), np.zeros((2, 288)), 0.0, 0), flat)
    assert deviation_std_report(single).per_cluster == (0.0, 0.0)


def test_deviation_report_shrinks_with_more_clusters():
    d = synthetic_days(60, seed=5)
    values = [deviation_std_report(cluster_days(d, k, seed=0)[0]).mean for k in (10, 20, 30)]
    assert values[0] >= values[1] >= values[2]


def test_tree_json_round_trip(tmp_path):
    tree, _ = cluster_days(synthetic_days(12, seed=8), 3)
    save_tree(tree, tmp_path / "tree.json")
    back = load_tree(tmp_path / "tree.json")
    assert isinstance(back, ScenarioTree)
    for name in ("probabilities", "cluster_of", "da_prices", "id_prices", "pv", "wind", "gwi"):
        assert np.array_equal(getattr(tree, name), getattr(back, name))


def test_flat_fixture_tree():
    tree, _ = cluster_days(flat_days(3, da_price=50.0), 1)
    assert np.all(tree.id_prices == 50.0) and np.all(tree.da_prices == 50.0)
