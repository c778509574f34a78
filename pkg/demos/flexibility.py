"""
How much is process flexibility worth?
======================================

Sweep each flexibility parameter from an inflexible process towards twice
the reference value, with and without an on-site energy system. Then split
the savings into their sources.
"""
from flexdesign.domain import ProcessSpec, TechEconSpec
from flexdesign.scenarios import cluster_days
from flexdesign.studies import (
    StudyInputs, SweepParameter, SweepSpec, flexibility_sweep, market_mode_comparison, savings_decomposition,
)
from flexdesign.synthetic import synthetic_days

# A small seeded synthetic year keeps this quick.
tree, _ = cluster_days(synthetic_days(12, seed=1), 4, seed=0)
proc, econ = ProcessSpec(), TechEconSpec.reference()

# %%
for param in SweepParameter:
    spec = SweepSpec.default(param, proc, econ)
    sweep = flexibility_sweep(spec, tree, workers=2)
    print(param.value)
    for row in sweep.points:
        print(f"  {row.value:6.3f}  TAC {row.with_system.tac / 1e3:9.1f} kEUR/a"
              f"  without system {row.without_system.tac / 1e3:9.1f}")

# %%
# Savings of each addition against an inflexible process buying from the grid.
inputs = StudyInputs(tree, proc, econ)
dec = savings_decomposition(inputs)
for variant, s in dec.savings().items():
    print(f"{variant:>24}: {s / 1e3:9.1f} kEUR/a")
print(f"interaction share {dec.additivity():.1%}")

# %%
cmp_ = market_mode_comparison(inputs)
print(f"day-ahead plus intraday saves {cmp_.savings / 1e3:.1f} kEUR/a ({cmp_.relative_savings:.2%})")
