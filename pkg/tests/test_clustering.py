import math

import numpy as np
import pytest

from softgate.calibration import CentroidSet, compute_centroids
from softgate.clustering import assign_all, assign_nearest, fidelity, kmeans
from softgate.errors import ValidationError
from softgate.ingest import PredictionSet, SyntheticSpec, split_by_correctness, synthesize_dataset


def identity_centroids(k):
    return CentroidSet(k=k, centroids=np.eye(k), support=np.ones(k, dtype=np.int64))


def test_close_call_assignment_picks_smaller_distance():
    # distances 0.696 vs 0.697: the marginally closer centroid wins
    centroids = CentroidSet(
        k=2,
        centroids=np.array([[1.0, 0.0], [0.0, 1.0]]),
        support=np.array([1, 1]),
    )
    p = np.array([0.508, 0.492])
    c, d = assign_nearest(p, centroids)
    assert c == 0
    assert d == pytest.approx(math.dist(p, [1, 0]))


def test_exact_centroid_assigns_at_distance_zero():
    centroids = identity_centroids(3)
    c, d = assign_nearest([0.0, 1.0, 0.0], centroids)
    assert c == 1 and d == 0.0


def test_tie_breaks_to_lowest_index():
    centroids = identity_centroids(4)
    # equidistant to centroids 1 and 3 by symmetry
    c, _ = assign_nearest([0.0, 0.5, 0.0, 0.5], centroids)
    assert c == 1


def test_assignment_matches_brute_force():
    rng = np.random.default_rng(4)
    centroids_rows = rng.dirichlet(np.ones(10), size=10)
    centroids = CentroidSet(
        k=10, centroids=centroids_rows, support=np.ones(10, dtype=np.int64)
    )
    points = rng.dirichlet(np.ones(10), size=10_000)
    clusters, dists = assign_all(points, centroids)
    for i in range(0, 10_000, 37):  # spot-check a spread of rows
        brute = min(
            range(10), key=lambda c: np.linalg.norm(points[i] - centroids_rows[c])
        )
        assert clusters[i] == brute


def test_no_defined_centroids_is_an_error():
    empty = CentroidSet(
        k=2, centroids=np.full((2, 2), np.nan), support=np.zeros(2, dtype=np.int64)
    )
    with pytest.raises(ValidationError):
        assign_nearest([0.5, 0.5], empty)


def fixed_point_set(k=3):
    return PredictionSet(
        probs=np.eye(k),
        true_labels=np.arange(k),
        predicted_labels=np.arange(k),
        k=k,
    )


def test_kmeans_fixed_point_converges_immediately():
    s = fixed_point_set()
    result = kmeans(s, identity_centroids(3))
    assert result.converged
    assert result.iterations == 1
    np.testing.assert_array_equal(result.final_centroids.centroids, np.eye(3))


def test_kmeans_on_separated_clusters_recovers_classes():
    spec = SyntheticSpec(k=4, per_class=100, concentration=20.0)
    s = synthesize_dataset(spec, seed=6)
    correct, _ = split_by_correctness(s)
    init = compute_centroids(correct)
    result = kmeans(s, init)
    assert result.converged
    # brute-force nearest-centroid labeling agrees
    clusters, _ = assign_all(s.probs, result.final_centroids)
    np.testing.assert_array_equal(result.clusters, clusters)
    np.testing.assert_array_equal(result.clusters, s.true_labels)


def test_inertia_non_increasing():
    spec = SyntheticSpec(k=3, per_class=100, concentration=2.0, noise_rate=0.2)
    s = synthesize_dataset(spec, seed=8)
    correct, _ = split_by_correctness(s)
    result = kmeans(s, compute_centroids(correct))
    history = result.inertia_history
    assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))


def test_kmeans_centroids_stay_on_simplex():
    spec = SyntheticSpec(k=3, per_class=50, concentration=2.0)
    s = synthesize_dataset(spec, seed=10)
    correct, _ = split_by_correctness(s)
    result = kmeans(s, compute_centroids(correct))
    sums = result.final_centroids.centroids.sum(axis=1)
    np.testing.assert_allclose(sums, 1.0, atol=1e-9)


def test_kmeans_quick_convergence_on_concentrated_data():
    spec = SyntheticSpec(k=5, per_class=200, concentration=25.0)
    s = synthesize_dataset(spec, seed=12)
    correct, _ = split_by_correctness(s)
    result = kmeans(s, compute_centroids(correct))
    assert result.converged and result.iterations <= 3


def test_kmeans_parameter_validation():
    s = fixed_point_set()
    with pytest.raises(ValidationError):
        kmeans(s, identity_centroids(3), max_iter=0)
    with pytest.raises(ValidationError):
        kmeans(s, identity_centroids(3), tol=0.0)
    with pytest.raises(ValidationError):
        kmeans(s, identity_centroids(4))


def test_fidelity_all_matching():
    s = fixed_point_set()
    result = kmeans(s, identity_centroids(3))
    report = fidelity(result, s)
    assert report.fidelity == 1.0
    assert report.matching == report.total_correct == 3


def test_fidelity_large_sample_ratio():
    # 59,000 correct with 2 mismatched -> 0.999966...
    assert (59_000 - 2) / 59_000 == pytest.approx(0.999966, abs=1e-6)


def test_fidelity_with_one_adversarial_point():
    spec = SyntheticSpec(k=3, per_class=20, concentration=30.0)
    s = synthesize_dataset(spec, seed=13)
    probs = s.probs.copy()
    # place one class-0 row on top of the class-1 vertex
    probs[0] = [0.02, 0.96, 0.02]
    adversarial = PredictionSet(
        probs=probs,
        true_labels=s.true_labels,
        predicted_labels=s.predicted_labels,
        k=3,
    )
    correct, _ = split_by_correctness(s)
    init = compute_centroids(correct)
    clusters, dists = assign_all(adversarial.probs, init)
    n = adversarial.row_count
    matching = int(np.sum(clusters == adversarial.true_labels))
    assert matching == n - 1


def test_fidelity_row_count_mismatch():
    s = fixed_point_set()
    result = kmeans(s, identity_centroids(3))
    smaller = PredictionSet(
        probs=np.eye(3)[:2], true_labels=[0, 1], predicted_labels=[0, 1], k=3
    )
    with pytest.raises(ValidationError):
        fidelity(result, smaller)


def test_fidelity_no_correct_rows_is_undefined():
    s = PredictionSet(
        probs=np.eye(3),
        true_labels=np.array([1, 2, 0]),
        predicted_labels=np.array([0, 1, 2]),
        k=3,
    )
    result = kmeans(s, identity_centroids(3))
    assert fidelity(result, s).fidelity is None
