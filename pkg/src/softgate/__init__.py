"""Confidence gating for softmax classifiers.

Calibrates per-class centroids and distance thresholds from a model's
softmax outputs, gates new predictions into accept / unknown, and
provides the geometric analyses behind those decisions (threshold
sweeps, exclusion tables, hypersphere shell densities, nearest-exemplar
reports).
"""

__version__ = "0.1.0"

from softgate.errors import ArtifactError, ParseError, ValidationError
from softgate.ingest import (
    PredictionRecord,
    PredictionSet,
    SyntheticSpec,
    ValidationPolicy,
    ValidationSummary,
    parse_prediction_csv,
    split_by_correctness,
    synthesize_dataset,
    write_prediction_csv,
)
from softgate.geometry import (
    SQRT2,
    ShellSpec,
    hypersphere_volume,
    logit,
    max_simplex_distance,
    shell_volume,
    simplex_distance,
    softmax,
)
from softgate.calibration import (
    CalibrationArtifact,
    CentroidSet,
    PairwiseStats,
    ThresholdTable,
    build_artifact,
    compute_centroids,
    compute_thresholds,
    load_calibration,
    pairwise_centroid_stats,
    save_calibration,
)
from softgate.clustering import (
    FidelityReport,
    KMeansResult,
    assign_nearest,
    fidelity,
    kmeans,
)
from softgate.gate import GateDecision, GateSummary, gate_batch, gate_one
from softgate.analysis import (
    ExclusionRow,
    NearestExemplarReport,
    ShellReport,
    SweepRow,
    emit_report,
    exclusion_table,
    nearest_exemplars,
    shell_density,
    threshold_sweep,
)

__all__ = [
    "ArtifactError",
    "ParseError",
    "ValidationError",
    "PredictionRecord",
    "PredictionSet",
    "SyntheticSpec",
    "ValidationPolicy",
    "ValidationSummary",
    "parse_prediction_csv",
    "split_by_correctness",
    "synthesize_dataset",
    "write_prediction_csv",
    "SQRT2",
    "ShellSpec",
    "hypersphere_volume",
    "logit",
    "max_simplex_distance",
    "shell_volume",
    "simplex_distance",
    "softmax",
    "CalibrationArtifact",
    "CentroidSet",
    "PairwiseStats",
    "ThresholdTable",
    "build_artifact",
    "compute_centroids",
    "compute_thresholds",
    "load_calibration",
    "pairwise_centroid_stats",
    "save_calibration",
    "FidelityReport",
    "KMeansResult",
    "assign_nearest",
    "fidelity",
    "kmeans",
    "GateDecision",
    "GateSummary",
    "gate_batch",
    "gate_one",
    "ExclusionRow",
    "NearestExemplarReport",
    "ShellReport",
    "SweepRow",
    "emit_report",
    "exclusion_table",
    "nearest_exemplars",
    "shell_density",
    "threshold_sweep",
]
