#!/usr/bin/env python3
"""Where do predictions actually live around their centroids?

Counting predictions in concentric hypersphere shells and dividing by
the shell's analytic volume gives a density profile. Because volume
collapses toward the center in high dimension, even a handful of points
in an inner shell can represent an enormous density — which is exactly
why tight thresholds remain populated enough to be useful.
"""

import sys

from softgate import (
    SyntheticSpec,
    compute_centroids,
    emit_report,
    nearest_exemplars,
    shell_density,
    split_by_correctness,
    synthesize_dataset,
    threshold_sweep,
)

spec = SyntheticSpec(k=10, per_class=500, concentration=12.0, noise_rate=0.08)
pset = synthesize_dataset(spec, seed=21)
correct, _ = split_by_correctness(pset)
centroids = compute_centroids(correct)

print("== threshold sweep: retention and accuracy vs radius ==")
for row in threshold_sweep(pset, centroids):
    print(f"  r<{row.threshold:<5} retention={row.retention_pct:5.1f}% "
          f"accuracy={row.accuracy_pct:6.2f}%")

print("\n== shell densities (count / analytic shell volume, dim=10) ==")
report = shell_density(pset, centroids)
for shell in report.shells:
    print(f"  ({shell.r_inner:>4}, {shell.r_outer:>4}]  n={shell.count:5d}  "
          f"vol={shell.volume:.3e}  density={shell.density:.3e}")
inner = report.inner_sphere
print(f"  inner sphere r<={inner.radius}: n={inner.count} "
      f"density={inner.density:.3e}")

print("\n== same report as CSV (what the `softgate density` command emits) ==")
emit_report(report, "csv", sys.stdout)

# Out-of-distribution probe: a 4-class source scored by the 10-class model.
ood = synthesize_dataset(SyntheticSpec(k=10, per_class=40,
                                       concentration=1.0,
                                       noise_rate=0.5), seed=22)
nearest = nearest_exemplars(ood, centroids)
print("\n== nearest out-of-distribution exemplar per centroid ==")
for ex in nearest.per_class[:3]:
    print(f"  class {ex.target_class}: row {ex.nearest_row_index} "
          f"(source label {ex.nearest_source_label}) at "
          f"distance {ex.nearest_distance:.4f}")
