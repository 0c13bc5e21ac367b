"""Lloyd's K-means over the softmax simplex, seeded with class centroids,
plus the fidelity measurement comparing cluster assignment to the
classification labels."""

from dataclasses import dataclass

import numpy as np

from softgate.calibration import CentroidSet
from softgate.errors import ValidationError


@dataclass(frozen=True)
class ClusterAssignment:
    row_index: int
    cluster: int
    distance: float


@dataclass(frozen=True)
class KMeansResult:
    clusters: np.ndarray  # (n,) nearest-centroid index per row
    distances: np.ndarray  # (n,) distance to that centroid
    final_centroids: CentroidSet
    iterations: int
    converged: bool
    inertia: float
    inertia_history: tuple

    def assignments(self):
        for i, (c, d) in enumerate(zip(self.clusters, self.distances)):
            yield ClusterAssignment(row_index=i, cluster=int(c), distance=float(d))


@dataclass(frozen=True)
class FidelityReport:
    total_correct: int
    matching: int
    fidelity: float | None  # None when there are no correct rows


def _distance_matrix(points, centroids):
    """(n, k) distances; undefined centroids get +inf columns."""
    if points.shape[1] != centroids.k:
        raise ValidationError(
            f"dimension mismatch: points have {points.shape[1]} columns, "
            f"centroids have {centroids.k}"
        )
    rows = np.where(
        np.isnan(centroids.centroids), np.inf, centroids.centroids
    )
    diff = points[:, None, :] - rows[None, :, :]
    d = np.sqrt(np.einsum("nkj,nkj->nk", diff, diff))
    d[:, centroids.support == 0] = np.inf
    return d


def assign_all(points, centroids):
    """Nearest defined centroid per row; lowest-index tie-break."""
    if not centroids.defined_classes:
        raise ValidationError("no defined centroids to assign to")
    d = _distance_matrix(np.asarray(points, dtype=np.float64), centroids)
    clusters = d.argmin(axis=1)  # argmin takes the lowest index on ties
    return clusters, d[np.arange(len(clusters)), clusters]


def assign_nearest(probs, centroids):
    """Nearest centroid for one point: (cluster index, distance)."""
    probs = np.asarray(probs, dtype=np.float64)
    clusters, dists = assign_all(probs[None, :], centroids)
    return int(clusters[0]), float(dists[0])


def kmeans(pset, init, max_iter=100, tol=1e-6):
    """Lloyd iteration from the given initial centroids.

    Convergence: max per-coordinate centroid displacement < tol.
    Clusters that go empty keep their previous centroid so cluster
    indices keep their class meaning.
    """
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    if pset.k != init.k:
        raise ValidationError("dataset and initial centroids disagree on k")

    points = pset.probs
    centroids = init.centroids.copy()
    support = init.support.copy()
    converged = False
    iterations = 0
    history = []
    clusters = dists = None

    for _ in range(max_iter):
        iterations += 1
        current = CentroidSet(k=init.k, centroids=centroids, support=support)
        clusters, dists = assign_all(points, current)
        history.append(float(np.sum(dists**2)))

        new_centroids = centroids.copy()
        new_support = support.copy()
        for c in range(init.k):
            members = points[clusters == c]
            if members.shape[0]:
                new_centroids[c] = members.mean(axis=0)
                new_support[c] = members.shape[0]
            # empty cluster: keep previous centroid and support flag

        defined = support > 0
        movement = 0.0
        if defined.any():
            movement = float(
                np.max(np.abs(new_centroids[defined] - centroids[defined]))
            )
        centroids, support = new_centroids, new_support
        if movement < tol:
            converged = True
            break

    final = CentroidSet(k=init.k, centroids=centroids, support=support)
    # report assignment against the final centroids
    clusters, dists = assign_all(points, final)
    inertia = float(np.sum(dists**2))
    return KMeansResult(
        clusters=clusters,
        distances=dists,
        final_centroids=final,
        iterations=iterations,
        converged=converged,
        inertia=inertia,
        inertia_history=tuple(history),
    )


def fidelity(result, pset):
    """Fraction of correct predictions whose cluster equals their class."""
    if len(result.clusters) != pset.row_count:
        raise ValidationError("assignment count does not match the dataset")
    correct = pset.true_labels == pset.predicted_labels
    total_correct = int(correct.sum())
    matching = int(np.sum(correct & (result.clusters == pset.true_labels)))
    return FidelityReport(
        total_correct=total_correct,
        matching=matching,
        fidelity=(matching / total_correct) if total_correct else None,
    )
