"""
Trading cost against emissions
==============================

Trace the TAC/GWI front with an epsilon constraint on the shipped fixture.
"""
from flexdesign.cli import RunConfig, fixture_config_path
from flexdesign.ingest import ingest
from flexdesign.scenarios import cluster_days
from flexdesign.studies import StudyInputs, pareto_front

cfg = RunConfig.load(fixture_config_path())
data = ingest(cfg.input_paths(), cfg.wind_site, cfg.pv).data
tree, _ = cluster_days(data, cfg.clustering.k, cfg.seed, cfg.clustering.n_init)

# %%
# The first point is the cost optimum, the last one the cheapest design at
# minimal GWI. The points between bound GWI at equal steps.
front = pareto_front(StudyInputs(tree, cfg.process, cfg.econ_spec()), n_points=6)
print(f"{'GWI t/a':>10} {'TAC kEUR/a':>11} {'PV':>6} {'wind':>6} {'batt':>6}")
for r in front:
    print(f"{r.gwi / 1e3:10.1f} {r.tac / 1e3:11.1f} {r.q_pv:6.2f} {r.q_wind:6.2f} {r.q_batt:6.2f}")

# %%
# The cost of each tonne avoided grows along the front.
for a, b in zip(front, front[1:]):
    if a.gwi > b.gwi:
        print(f"{(b.tac - a.tac) / ((a.gwi - b.gwi) / 1e3):8.1f} EUR per t CO2-eq")
