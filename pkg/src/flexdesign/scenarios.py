"""Scenario tree construction from historical days.

Days are described by their wind, PV and grid-emission profiles, z-scored
column by column and clustered with k-means. Each cluster becomes a
second-stage node carrying the mean day-ahead price of its members; every
day becomes a third-stage scenario whose intraday price is the cluster's
day-ahead price plus that day's own market deviation (ID minus DA).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from os import PathLike
from typing import Sequence

import numpy as np

from .domain import (
    HOURS, T, ClusterNode, DailyProfile, Resolution, ScenarioNode, ScenarioTree, Unit,
)

FEATURE_BLOCKS = ("wind", "pv", "gwi")
TREE_FORMAT = "flexdesign.tree/1"


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DailyData:
    """Aligned per-day arrays: ``da`` is days x 24, the others days x 96."""

    day_ids: tuple[str, ...]
    da: np.ndarray
    id_price: np.ndarray
    wind: np.ndarray
    pv: np.ndarray
    gwi: np.ndarray

    def __post_init__(self):
        n = len(self.day_ids)
        for name, width in (("da", HOURS), ("id_price", T), ("wind", T), ("pv", T), ("gwi", T)):
            arr = _readonly(getattr(self, name))
            if arr.shape != (n, width):
                raise ValueError(f"{name}: expected shape {(n, width)}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: non-finite values")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "day_ids", tuple(str(d) for d in self.day_ids))

    @property
    def n_days(self) -> int:
        return len(self.day_ids)

    @classmethod
    def from_profiles(cls, da: Sequence[DailyProfile], id_price: Sequence[DailyProfile],
                      wind: Sequence[DailyProfile], pv: Sequence[DailyProfile],
                      gwi: Sequence[DailyProfile]) -> "DailyData":
        ids = tuple(p.day_id for p in da)
        for name, series in (("id_price", id_price), ("wind", wind), ("pv", pv), ("gwi", gwi)):
            if tuple(p.day_id for p in series) != ids:
                raise ValueError(f"{name}: day ids do not line up with the DA series")
        return cls(ids, *(np.array([p.values for p in s]) for s in (da, id_price, wind, pv, gwi)))

    def subset(self, days: Sequence[int]) -> "DailyData":
        idx = np.asarray(days, dtype=int)
        return DailyData(tuple(self.day_ids[i] for i in idx), self.da[idx], self.id_price[idx],
                         self.wind[idx], self.pv[idx], self.gwi[idx])


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Standardized clustering features, one row per day.

    ``means`` and ``stds`` are the per-column parameters of the z-score;
    columns with zero spread have ``std`` 0 and map to zeros.
    """

    values: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    blocks: tuple[str, ...] = FEATURE_BLOCKS

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.stds + self.means


def standardize(wind, pv, gwi) -> FeatureMatrix:
    """Z-score each column (population std) and concatenate wind | PV | GWI."""
    raw = np.hstack([np.asarray(a, dtype=float) for a in (wind, pv, gwi)])
    if raw.ndim != 2 or raw.shape[0] < 2:
        raise ValueError("standardization needs at least two days")
    means = raw.mean(axis=0)
    stds = raw.std(axis=0)
    safe = np.where(stds > 0, stds, 1.0)
    z = np.where(stds > 0, (raw - means) / safe, 0.0)
    return FeatureMatrix(_readonly(z), _readonly(means), _readonly(stds))


@dataclass(frozen=True, eq=False)
class Clustering:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    wcss: float
    seed: int
    history: tuple[float, ...] = ()  # wcss after every Lloyd update of the kept run
    restart: int = 0

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


def _sq_dist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _wcss(X, labels, C) -> float:
    return float(((X - C[labels]) ** 2).sum())


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        nxt = int(rng.choice(n, p=d2 / total)) if total > 0 else int(rng.integers(n))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _repair(X, labels, C, k) -> np.ndarray:
    """Give each empty cluster the point farthest from its centroid among clusters with 2+ members."""
    labels = labels.copy()
    for g in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[g]:
            continue
        d = ((X - C[labels]) ** 2).sum(axis=1)
        d[counts[labels] < 2] = -1.0
        i = int(np.argmax(d))
        labels[i] = g
        C[g] = X[i]
    return labels


def _lloyd(X, C, max_iter, tol):
    k = len(C)
    history = []
    labels = None
    for _ in range(max_iter):
        labels = _repair(X, np.argmin(_sq_dist(X, C), axis=1), C, k)
        new = np.array([X[labels == g].mean(axis=0) for g in range(k)])
        shift = float(np.abs(new - C).max()) if C.size else 0.0
        C = new
        history.append(_wcss(X, labels, C))
        if shift < tol:
            break
    return labels, C, history


def kmeans(matrix: FeatureMatrix | np.ndarray, k: int, seed: int = 0, max_iter: int = 300,
           tol: float = 1e-10, n_init: int = 10, init: np.ndarray | None = None) -> Clustering:
    """Best of ``n_init`` seeded k-means++/Lloyd runs; ties go to the earliest restart.

    Restart ``r`` draws from its own stream ``default_rng([seed, r])`` so the
    result does not depend on the order restarts are evaluated in. ``init``
    adds one more run started from the given centroids.
    """
    X = np.asarray(getattr(matrix, "values", matrix), dtype=float)
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie between 1 and the number of days ({n})")
    starts = [_kmeanspp(X, k, np.random.default_rng([seed, r])) for r in range(n_init)]
    if init is not None:
        starts.append(np.array(init, dtype=float))
    best = None
    for r, C0 in enumerate(starts):
        labels, C, hist = _lloyd(X, C0.copy(), max_iter, tol)
        w = _wcss(X, labels, C)
        if best is None or w < best.wcss:
            best = Clustering(k, labels, C, w, seed, tuple(hist), r)
    best.labels.setflags(write=False)
    best.centroids.setflags(write=False)
    return best


def _grow(X, C, k):
    """Extend centroid set ``C`` to ``k`` by repeatedly adding the worst-served point."""
    C = np.array(C, dtype=float)
    while len(C) < k:
        d = _sq_dist(X, C).min(axis=1)
        C = np.vstack([C, X[int(np.argmax(d))]])
    return C


def wcss_curve(matrix: FeatureMatrix | np.ndarray, k_values: Sequence[int], seed: int = 0,
               n_init: int = 10, max_iter: int = 300) -> list[tuple[int, float]]:
    """WCSS for each ``k``, non-increasing in ``k``.

    Besides the usual restarts, each ``k`` (in ascending order) gets a nested
    restart seeded with the previous optimum plus the farthest points, so a
    larger ``k`` can never do worse than a smaller one.
    """
    X = np.asarray(getattr(matrix, "values", matrix), dtype=float)
    out = {}
    prev = None
    for k in sorted(set(int(v) for v in k_values)):
        init = _grow(X, prev.centroids, k) if prev is not None else None
        prev = kmeans(X, k, seed=seed, n_init=n_init, max_iter=max_iter, init=init)
        out[k] = prev.wcss
    return [(int(k), out[int(k)]) for k in k_values]


def build_tree(clustering: Clustering, data: DailyData) -> ScenarioTree:
    """One cluster node per k-means cluster, one equiprobable scenario per day."""
    labels = np.asarray(clustering.labels)
    if len(labels) != data.n_days:
        raise ValueError(f"clustering covers {len(labels)} days, data has {data.n_days}")
    n = data.n_days
    da_c = np.array([data.da[labels == g].mean(axis=0) for g in range(clustering.k)])
    if np.isnan(da_c).any():
        raise ValueError("clustering has empty clusters")
    deviation = data.id_price - np.repeat(data.da, 4, axis=1)
    id_s = np.repeat(da_c, 4, axis=1)[labels] + deviation
    prob = 1.0 / n
    clusters = tuple(
        ClusterNode(g, DailyProfile(Resolution.HOUR, da_c[g], Unit.EUR_PER_MWH, f"cluster{g}"),
                    tuple(int(i) for i in np.flatnonzero(labels == g)))
        for g in range(clustering.k)
    )
    q = Resolution.QUARTER_HOUR
    scenarios = tuple(
        ScenarioNode(
            s, int(labels[s]),
            DailyProfile(q, id_s[s], Unit.EUR_PER_MWH, data.day_ids[s]),
            DailyProfile(q, data.pv[s], Unit.DIMENSIONLESS, data.day_ids[s]),
            DailyProfile(q, data.wind[s], Unit.DIMENSIONLESS, data.day_ids[s]),
            DailyProfile(q, data.gwi[s], Unit.KG_PER_MWH, data.day_ids[s]),
            prob,
        )
        for s in range(n)
    )
    return ScenarioTree(clusters, scenarios)


def cluster_days(data: DailyData, k: int, seed: int = 0, n_init: int = 10) -> tuple[ScenarioTree, Clustering]:
    """standardize -> kmeans -> build_tree in one call."""
    cl = kmeans(standardize(data.wind, data.pv, data.gwi), k, seed=seed, n_init=n_init)
    return build_tree(cl, data), cl


def market_deviation(tree: ScenarioTree) -> np.ndarray:
    """Scenario x quarter deviation of the ID price from its cluster's DA price."""
    da_q = np.repeat(tree.da_prices, 4, axis=1)[tree.cluster_of]
    return tree.id_prices - da_q


@dataclass(frozen=True)
class DeviationReport:
    per_cluster: tuple[float, ...]
    mean: float


def deviation_std_report(tree: ScenarioTree) -> DeviationReport:
    """Per cluster: population std across members per quarter, averaged over the day."""
    dev = market_deviation(tree)
    per = [float(dev[tree.cluster_of == g].std(axis=0).mean()) for g in range(tree.n_clusters)]
    return DeviationReport(tuple(per), float(np.mean(per)) if per else 0.0)


# --- serialization -------------------------------------------------------------

def tree_to_dict(tree: ScenarioTree, meta: dict | None = None) -> dict:
    return {
        "format": TREE_FORMAT,
        "meta": dict(meta or {}),
        "clusters": [
            {"id": c.cluster_id, "members": list(c.members), "da_price": c.da_price.values.tolist()}
            for c in tree.clusters
        ],
        "scenarios": [
            {"id": s.scenario_id, "day": s.id_price.day_id, "cluster": s.cluster_id,
             "probability": s.probability, "id_price": s.id_price.values.tolist(),
             "pv": s.pv.values.tolist(), "wind": s.wind.values.tolist(), "gwi": s.gwi.values.tolist()}
            for s in tree.scenarios
        ],
    }


def tree_from_dict(doc: dict) -> ScenarioTree:
    if doc.get("format") != TREE_FORMAT:
        raise ValueError(f"not a scenario tree document (format={doc.get('format')!r})")
    q, h = Resolution.QUARTER_HOUR, Resolution.HOUR
    clusters = tuple(
        ClusterNode(int(c["id"]), DailyProfile(h, c["da_price"], Unit.EUR_PER_MWH, f"cluster{c['id']}"),
                    tuple(int(m) for m in c["members"]))
        for c in doc["clusters"]
    )
    scenarios = tuple(
        ScenarioNode(int(s["id"]), int(s["cluster"]),
                     DailyProfile(q, s["id_price"], Unit.EUR_PER_MWH, s.get("day", "")),
                     DailyProfile(q, s["pv"], Unit.DIMENSIONLESS, s.get("day", "")),
                     DailyProfile(q, s["wind"], Unit.DIMENSIONLESS, s.get("day", "")),
                     DailyProfile(q, s["gwi"], Unit.KG_PER_MWH, s.get("day", "")),
                     float(s["probability"]))
        for s in doc["scenarios"]
    )
    tree = ScenarioTree(clusters, scenarios)
    problems = tree.violations()
    if problems:
        raise ValueError("invalid scenario tree: " + "; ".join(problems[:5]))
    return tree


def save_tree(tree: ScenarioTree, path: str | PathLike, meta: dict | None = None) -> None:
    # json writes floats with repr, so values survive the round trip bit for bit
    with open(path, "w") as fh:
        json.dump(tree_to_dict(tree, meta), fh)


def load_tree(path: str | PathLike) -> ScenarioTree:
    with open(path) as fh:
        return tree_from_dict(json.load(fh))
