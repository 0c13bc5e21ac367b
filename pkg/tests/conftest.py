import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from softgate.calibration import build_artifact, compute_centroids, compute_thresholds
from softgate.ingest import SyntheticSpec, split_by_correctness, synthesize_dataset


@pytest.fixture
def noisy_set():
    """k=3 synthetic set with some incorrect rows."""
    spec = SyntheticSpec(k=3, per_class=200, concentration=8.0, noise_rate=0.1)
    return synthesize_dataset(spec, seed=42)


@pytest.fixture
def clean_set():
    """k=3 zero-noise set: every row correct."""
    spec = SyntheticSpec(k=3, per_class=100, concentration=20.0, noise_rate=0.0)
    return synthesize_dataset(spec, seed=7)


@pytest.fixture
def calibrated(noisy_set):
    """(artifact, train set) built via the standard pipeline."""
    correct, incorrect = split_by_correctness(noisy_set)
    centroids = compute_centroids(correct)
    thresholds = compute_thresholds(incorrect, centroids, correct=correct)
    return build_artifact(centroids, thresholds, provenance="fixture"), noisy_set


def random_simplex(rng, dim, n):
    return rng.dirichlet(np.ones(dim), size=n)
