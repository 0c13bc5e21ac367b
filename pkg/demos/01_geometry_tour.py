#!/usr/bin/env python3
"""A tour of the probability-simplex geometry underlying the gate.

Softmax outputs live on the (K-1)-simplex, so Euclidean distances between
them are bounded: two one-hot vectors are sqrt(2) apart and nothing can be
farther. Hypersphere volumes around a centroid collapse rapidly with
dimension, which is what makes small acceptance radii so selective.
"""

import numpy as np

from softgate import (
    SQRT2,
    ShellSpec,
    hypersphere_volume,
    logit,
    max_simplex_distance,
    shell_volume,
    simplex_distance,
    softmax,
)

print("== distances on the simplex ==")
a = np.array([1.0, 0.0, 0.0])
b = np.array([0.0, 1.0, 0.0])
print(f"distance between two one-hot corners: {simplex_distance(a, b):.6f}")
print(f"theoretical maximum (any dimension):  {max_simplex_distance(3):.6f} = sqrt(2)")
assert abs(simplex_distance(a, b) - SQRT2) < 1e-12

print("\n== hypersphere volumes shrink fast with dimension ==")
for dim in (2, 3, 10, 50):
    v = hypersphere_volume(dim, 0.5)
    print(f"dim={dim:3d}  volume(r=0.5) = {v:.6e}")

print("\n== shell volumes at dim=10 ==")
for r_in, r_out in [(0.7, 0.8), (0.4, 0.5), (0.1, 0.2), (0.05, 0.1)]:
    v = shell_volume(ShellSpec(10, r_in, r_out))
    print(f"shell ({r_in}, {r_out}]: {v:.5e}")

print("\n== softmax / logit round trips ==")
z = np.array([2.0, -1.0, 0.5, 0.0])
p = softmax(z)
print(f"logits   {z}")
print(f"softmax  {np.round(p, 4)}  (sums to {p.sum():.6f})")
print(f"logit of top probability: {logit(p.max()):.4f}")
