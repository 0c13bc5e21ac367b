"""Naive loop-based reference implementations used as oracles.

Deliberately slow and independent of the library's vectorized paths:
plain Python loops, no numpy reductions beyond element access.
"""

import math


def ref_centroids(correct):
    """Per-class column means over rows grouped by argmax."""
    k = correct.k
    sums = [[0.0] * k for _ in range(k)]
    counts = [0] * k
    for rec in correct:
        best, best_v = 0, rec.probs[0]
        for j in range(1, k):
            if rec.probs[j] > best_v:
                best, best_v = j, rec.probs[j]
        counts[best] += 1
        for j in range(k):
            sums[best][j] += float(rec.probs[j])
    out = []
    for c in range(k):
        out.append([s / counts[c] for s in sums[c]] if counts[c] else None)
    return out, counts


def ref_distance(p, q):
    return math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(p, q)))


def ref_thresholds(incorrect, centroids_rows):
    """Minimum distance per predicted class; None when no rows."""
    k = len(centroids_rows)
    mins = [None] * k
    for rec in incorrect:
        c = rec.predicted_label
        d = ref_distance(rec.probs, centroids_rows[c])
        if mins[c] is None or d < mins[c]:
            mins[c] = d
    return mins


def ref_sweep(pset, centroids_rows, grid):
    """(retention_pct, accuracy_pct, correct_retained, incorrect_retained, ratio)."""
    dists, correct = [], []
    for rec in pset:
        dists.append(ref_distance(rec.probs, centroids_rows[rec.predicted_label]))
        correct.append(rec.true_label == rec.predicted_label)
    total_correct = sum(correct)
    rows = []
    for t in grid:
        c_ret = sum(1 for d, ok in zip(dists, correct) if ok and d < t)
        i_ret = sum(1 for d, ok in zip(dists, correct) if not ok and d < t)
        total = c_ret + i_ret
        rows.append(
            (
                100.0 * c_ret / total_correct if total_correct else math.nan,
                100.0 * c_ret / total if total else math.nan,
                c_ret,
                i_ret,
                c_ret / i_ret if i_ret else math.inf,
            )
        )
    return rows


def ref_exclusion(pset, centroids_rows, grid):
    """below_pct per threshold via direct counting."""
    dists = [
        ref_distance(rec.probs, centroids_rows[rec.predicted_label]) for rec in pset
    ]
    n = len(dists)
    return [100.0 * sum(1 for d in dists if d < t) / n for t in grid]
