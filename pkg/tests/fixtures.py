"""Shared fixture builders for tests."""
from flexdesign.cli import RunConfig, fixture_config_path
from flexdesign.ingest import ingest
from flexdesign.scenarios import cluster_days


def shipped_tree():
    """Scenario tree of the shipped CSV fixture, clustered as its config says."""
    cfg = RunConfig.load(fixture_config_path())
    data = ingest(cfg.input_paths(), cfg.wind_site, cfg.pv).data
    return cluster_days(data, cfg.clustering.k, cfg.seed, cfg.clustering.n_init)[0]
