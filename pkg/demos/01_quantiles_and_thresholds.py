"""Walk through the data primitives: datasets, quantile grids, thresholds.

Run from the repository root:

    python3 demos/01_quantiles_and_thresholds.py
"""

import numpy as np

from anomex import (
    Dataset,
    build_quantile_grid,
    classify,
    fit_threshold,
    level_of,
    value_at,
)

rng = np.random.default_rng(0)

# A small dataset: two informative features, one heavy-tailed.
rows = np.column_stack([
    rng.normal(0.0, 1.0, 500),
    rng.standard_t(3, 500) * 2.0,
])
data = Dataset(("smooth", "heavy"), rows)
print(f"dataset: {data.n_rows} rows x {data.n_features} features")

# The quantile grid tabulates each feature's empirical distribution at K
# evenly spaced probability levels. K=5 keeps the printout small.
grid = build_quantile_grid(data, k_levels=5)
print("\nlevels:", grid.levels)
for j, name in enumerate(data.feature_names):
    print(f"{name:>8}: " + "  ".join(f"{v:7.3f}" for v in grid.values[j]))

# level_of finds where a value sits in the training distribution;
# value_at inverts it.
v = 1.5
lv = level_of(grid, 0, v)
print(f"\nvalue {v} of 'smooth' sits at level {lv:.3f}")
print(f"value_at(level {lv:.3f}) = {value_at(grid, 0, lv):.3f} (round trip)")
print(f"far-out value 99 clamps to level {level_of(grid, 0, 99.0)}")

# A threshold at the (1 - contamination) quantile of training scores.
scores = np.abs(rows[:, 0])  # pretend |smooth| is an anomaly score
tau = fit_threshold(scores, contamination=0.05)
flagged = (scores > tau).mean()
print(f"\nthreshold at 5% contamination: {tau:.3f}; flags {flagged:.1%} of training rows")
print("score 0.5 ->", classify(0.5, tau).value)
print(f"score {tau:.3f} (exactly the threshold) ->", classify(tau, tau).value)
print(f"score {tau + 0.2:.3f} ->", classify(tau + 0.2, tau).value)
