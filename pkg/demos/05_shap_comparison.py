"""Compare the quantile-sweep ranking with the KernelSHAP baseline.

Run from the repository root:

    python3 demos/05_shap_comparison.py
"""

import numpy as np

from anomex import (
    IsolationForest,
    SynthSpec,
    Weights,
    build_quantile_grid,
    explain,
    fit_threshold,
    generate,
    kernel_shap,
    sample_background,
    shap_ranking,
)

data = generate(SynthSpec(n_normal=3000, n_anomalies=60, d=8,
                          root_feature=4, shift=5.0, seed=21))
model = IsolationForest.fit(data, trees=100, subsample=256, seed=1)
scores = model.score(data.rows)
tau = fit_threshold(scores, contamination=0.02)
target = int(np.argmax(scores))
x = data.rows[target]

# Quantile-sweep explanation: d*K+1 scorer evaluations.
grid = build_quantile_grid(data, k_levels=51)
ours = explain(model.score, x, grid, Weights(), tau, feature_names=data.feature_names)

# KernelSHAP with a 10% background; d=8 allows exact coalition enumeration.
background = sample_background(data, fraction=0.10, seed=2)
theirs = kernel_shap(model.score, x, background, coalitions=2**8, seed=2)
their_order = shap_ranking(theirs.phi)

print(f"point {target}: score {ours.score:.3f}, threshold {tau:.3f}")
print(f"kernelshap: background {theirs.background_size} rows, "
      f"{theirs.coalitions} coalition evaluations")
print(f"additivity check: phi0 + sum(phi) - s(x) = "
      f"{theirs.base_value + theirs.phi.sum() - theirs.score:+.2e}")

print(f"\n{'rank':>4}  {'quantile sweep':>14}  {'kernelshap':>10}  {'phi':>8}")
for pos in range(data.n_features):
    a = ours.feature_names[ours.ranking[pos]]
    b = their_order[pos]
    print(f"{pos + 1:>4}  {a:>14}  {data.feature_names[b]:>10}  {theirs.phi[b]:8.4f}")

agree = ours.ranking[0] == their_order[0]
print(f"\ntop feature agreement: {agree}")
