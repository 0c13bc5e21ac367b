"""The decision engine: accept a softmax prediction or answer unknown.

A prediction is accepted when its distance to the predicted-class
centroid is strictly below the applicable threshold; the record that
attains a class's calibrated minimum is therefore itself rejected.
"""

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from softgate.clustering import assign_all
from softgate.errors import ValidationError
from softgate.geometry import check_simplex

MODE_PER_CLASS = "per-class"
MODE_GLOBAL = "global"


@dataclass(frozen=True)
class GateDecision:
    status: str  # "accept" | "unknown"
    predicted_class: int
    distance_to_predicted_centroid: float
    threshold_applied: float  # math.inf for never-reject classes
    nearest_centroid: int
    nearest_distance: float
    mode: str


@dataclass(frozen=True)
class GateSummary:
    accepted: int
    unknown: int

    @property
    def accept_rate(self):
        total = self.accepted + self.unknown
        return self.accepted / total if total else 0.0


def _resolve_mode(mode, global_threshold):
    if mode == MODE_GLOBAL:
        if global_threshold is None or not global_threshold > 0:
            raise ValidationError("global mode needs a positive threshold")
        return MODE_GLOBAL
    if mode == MODE_PER_CLASS:
        return MODE_PER_CLASS
    raise ValidationError(f"mode must be '{MODE_PER_CLASS}' or '{MODE_GLOBAL}'")


def gate_one(probs, calibration, mode=MODE_PER_CLASS, global_threshold=None,
             on_undefined="error"):
    """Gate one softmax vector against the calibration artifact."""
    probs = check_simplex(probs, tol=1e-6)
    mode = _resolve_mode(mode, global_threshold)
    if probs.shape[0] != calibration.k:
        raise ValidationError(
            f"probability vector has {probs.shape[0]} classes, artifact has {calibration.k}"
        )
    predicted = int(np.argmax(probs))
    centroids = calibration.centroids
    if not centroids.is_defined(predicted):
        if on_undefined == "unknown":
            return GateDecision(
                status="unknown",
                predicted_class=predicted,
                distance_to_predicted_centroid=math.nan,
                threshold_applied=math.nan,
                nearest_centroid=-1,
                nearest_distance=math.nan,
                mode=mode,
            )
        raise ValidationError(f"centroid undefined for predicted class {predicted}")

    d = float(np.linalg.norm(probs - centroids.centroids[predicted]))
    threshold = (
        float(global_threshold)
        if mode == MODE_GLOBAL
        else calibration.thresholds.value(predicted)
    )
    nearest_cluster, nearest_dist = _nearest(probs, centroids)
    return GateDecision(
        status="accept" if d < threshold else "unknown",
        predicted_class=predicted,
        distance_to_predicted_centroid=d,
        threshold_applied=threshold,
        nearest_centroid=nearest_cluster,
        nearest_distance=nearest_dist,
        mode=mode,
    )


def _nearest(probs, centroids):
    clusters, dists = assign_all(probs[None, :], centroids)
    return int(clusters[0]), float(dists[0])


def gate_batch(pset, calibration, mode=MODE_PER_CLASS, global_threshold=None,
               on_undefined="error"):
    """Gate every row of a PredictionSet.

    Returns (decisions, summary); element-wise identical to gate_one.
    """
    decisions = []
    for i in range(pset.row_count):
        try:
            decisions.append(
                gate_one(
                    pset.probs[i],
                    calibration,
                    mode=mode,
                    global_threshold=global_threshold,
                    on_undefined=on_undefined,
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"row {i}: {exc}")
    accepted = sum(1 for d in decisions if d.status == "accept")
    return decisions, GateSummary(accepted=accepted, unknown=len(decisions) - accepted)


def decision_to_dict(decision):
    doc = asdict(decision)
    if math.isinf(doc["threshold_applied"]):
        doc["threshold_applied"] = None
    return doc


def write_decisions_jsonl(decisions, sink):
    """One JSON object per line, for piping into analysis or elsewhere."""
    close = False
    if isinstance(sink, (str, Path)):
        sink = open(sink, "w", encoding="utf-8")
        close = True
    try:
        for d in decisions:
            sink.write(json.dumps(decision_to_dict(d)) + "\n")
    finally:
        if close:
            sink.close()
