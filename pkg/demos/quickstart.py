"""
Quickstart: design an energy system for a flexible process
==========================================================

Load the shipped two-week fixture, cluster it into typical days and
solve for the cost-optimal PV, wind and battery capacities.
"""
from flexdesign.cli import RunConfig, fixture_config_path
from flexdesign.ingest import ingest
from flexdesign.model import MarketMode, ModelConfig, solve_design
from flexdesign.scenarios import cluster_days

# %%
# The fixture config points at five CSV series next to it.
cfg = RunConfig.load(fixture_config_path())
days = ingest(cfg.input_paths(), cfg.wind_site, cfg.pv)
print(f"{days.data.n_days} days kept; dropped: {days.rejected}")

# %%
# Each cluster shares one hourly day-ahead profile. Every member day keeps
# its own intraday prices, renewables and grid emissions.
tree, clustering = cluster_days(days.data, cfg.clustering.k, cfg.seed, cfg.clustering.n_init)
print(f"{tree.n_scenarios} scenarios in {tree.n_clusters} clusters, WCSS {clustering.wcss:.2f}")

# %%
# Solve once per market mode. Trading on both markets can never cost more
# than trading intraday only.
econ = cfg.econ_spec()
for mode in MarketMode:
    run = solve_design(tree, cfg.process, econ, ModelConfig(mode))
    r = run.result
    print(f"{mode.value:>12}: TAC {r.tac:12.0f} EUR/a  GWI {r.gwi / 1e3:8.0f} t/a  "
          f"PV {r.q_pv:.2f} MW  wind {r.q_wind:.2f} MW  battery {r.q_batt:.2f} MWh")
