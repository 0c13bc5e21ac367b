"""Calibration: class centroids, gating thresholds, pairwise stats.

Centroids are per-class means of correct predictions' softmax vectors;
a class threshold is the smallest distance from an incorrect prediction
of that class to the class centroid. Together with metadata these form
a persistable CalibrationArtifact.
"""

import datetime
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from softgate.errors import ArtifactError, ValidationError
from softgate.geometry import SQRT2

SCHEMA_VERSION = 1

SOURCE_MIN_INCORRECT = "min-incorrect"
SOURCE_FALLBACK_MAX_CORRECT = "fallback-max-correct"
SOURCE_FALLBACK_INFINITE = "fallback-infinite"


@dataclass(frozen=True)
class CentroidSet:
    """Per-class centroids on the simplex.

    Classes that received no contributing rows have support 0 and a NaN
    centroid row; they are "undefined" and every consumer must check.
    """

    k: int
    centroids: np.ndarray  # (k, k) float64, NaN rows where undefined
    support: np.ndarray  # (k,) int64

    def __post_init__(self):
        centroids = np.ascontiguousarray(self.centroids, dtype=np.float64)
        support = np.asarray(self.support, dtype=np.int64)
        if centroids.shape != (self.k, self.k):
            raise ValidationError(
                f"centroids must be ({self.k}, {self.k}), got {centroids.shape}"
            )
        if support.shape != (self.k,):
            raise ValidationError("support must have one entry per class")
        for c in range(self.k):
            row = centroids[c]
            if support[c] > 0:
                if abs(float(row.sum()) - 1.0) > 1e-9 or np.any(row < -1e-12):
                    raise ValidationError(f"centroid {c} is not on the simplex")
            elif not np.all(np.isnan(row)):
                raise ValidationError(f"class {c} has support 0 but a defined centroid")
        centroids.setflags(write=False)
        support.setflags(write=False)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "support", support)

    def is_defined(self, c):
        return bool(self.support[c] > 0)

    @property
    def defined_classes(self):
        return [c for c in range(self.k) if self.support[c] > 0]

    @property
    def undefined_classes(self):
        return [c for c in range(self.k) if self.support[c] == 0]


@dataclass(frozen=True)
class ThresholdEntry:
    class_id: int
    value: float  # math.inf for the never-reject fallback
    source: str


@dataclass(frozen=True)
class ThresholdTable:
    """Per-class gating distances with provenance flags."""

    k: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.k:
            raise ValidationError("need exactly one threshold entry per class")
        for e in self.entries:
            if math.isfinite(e.value) and not (0.0 <= e.value <= SQRT2 + 1e-9):
                raise ValidationError(
                    f"threshold for class {e.class_id} outside [0, sqrt(2)]: {e.value}"
                )

    def value(self, c):
        return self.entries[c].value

    def source(self, c):
        return self.entries[c].source

    def values(self):
        return np.array([e.value for e in self.entries])


@dataclass(frozen=True)
class PairwiseStats:
    d_min: float
    d_max: float
    mean: float
    std: float
    pair_count: int


@dataclass(frozen=True)
class CalibrationArtifact:
    centroids: CentroidSet
    thresholds: ThresholdTable
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.centroids.k != self.thresholds.k:
            raise ValidationError("centroid and threshold class sets disagree")

    @property
    def k(self):
        return self.centroids.k


def _column_means_fsum(rows):
    """Column means via math.fsum: exact, hence order-independent."""
    n, k = rows.shape
    return np.array([math.fsum(rows[:, j]) / n for j in range(k)])


def compute_centroids(correct):
    """Mean softmax vector per class over correct predictions.

    Rows are grouped by argmax of their probabilities (which must
    coincide with both labels, since the input is the correct split).
    Classes with no rows come back undefined, with a warning.
    """
    if correct.row_count == 0:
        raise ValidationError("cannot compute centroids from an empty set")
    if np.any(correct.true_labels != correct.predicted_labels):
        raise ValidationError("compute_centroids expects only correct predictions")
    groups = correct.probs.argmax(axis=1)
    if np.any(groups != correct.predicted_labels):
        raise ValidationError(
            "predicted labels disagree with argmax grouping; re-validate the input"
        )
    k = correct.k
    centroids = np.full((k, k), np.nan)
    support = np.zeros(k, dtype=np.int64)
    for c in range(k):
        rows = correct.probs[groups == c]
        support[c] = rows.shape[0]
        if rows.shape[0]:
            centroids[c] = _column_means_fsum(rows)
    result = CentroidSet(k=k, centroids=centroids, support=support)
    if result.undefined_classes:
        warnings.warn(
            f"no correct predictions for classes {result.undefined_classes}; "
            "their centroids are undefined",
            stacklevel=2,
        )
    return result


def compute_thresholds(
    incorrect,
    centroids,
    fallback="max-correct",
    correct=None,
    group_by="predicted",
):
    """Per-class minimum distance from incorrect predictions to centroids.

    Incorrect rows are grouped by their predicted class (the default;
    ``group_by="true"`` selects the alternative reading) and measured
    against that class's centroid. Classes with no incorrect rows take
    the fallback: the maximum correct-row distance ("max-correct",
    requires ``correct``) or +inf ("infinite", never rejects).
    """
    if fallback not in ("max-correct", "infinite"):
        raise ValidationError("fallback must be 'max-correct' or 'infinite'")
    if group_by not in ("predicted", "true"):
        raise ValidationError("group_by must be 'predicted' or 'true'")
    if incorrect.row_count and np.any(
        incorrect.true_labels == incorrect.predicted_labels
    ):
        raise ValidationError("compute_thresholds expects only incorrect predictions")

    k = centroids.k
    keys = (
        incorrect.predicted_labels if group_by == "predicted" else incorrect.true_labels
    )
    entries = []
    for c in range(k):
        rows = incorrect.probs[keys == c]
        if rows.shape[0]:
            if not centroids.is_defined(c):
                raise ValidationError(
                    f"centroid undefined for class {c} but incorrect rows exist"
                )
            d = np.linalg.norm(rows - centroids.centroids[c], axis=1)
            entries.append(
                ThresholdEntry(class_id=c, value=float(d.min()), source=SOURCE_MIN_INCORRECT)
            )
        elif fallback == "max-correct":
            if correct is None:
                raise ValidationError(
                    "fallback 'max-correct' needs the correct split for class "
                    f"{c}, which has no incorrect rows"
                )
            crows = correct.probs[correct.predicted_labels == c]
            if crows.shape[0] and centroids.is_defined(c):
                d = np.linalg.norm(crows - centroids.centroids[c], axis=1)
                entries.append(
                    ThresholdEntry(
                        class_id=c,
                        value=float(d.max()),
                        source=SOURCE_FALLBACK_MAX_CORRECT,
                    )
                )
            else:
                entries.append(
                    ThresholdEntry(
                        class_id=c, value=math.inf, source=SOURCE_FALLBACK_INFINITE
                    )
                )
        else:
            entries.append(
                ThresholdEntry(class_id=c, value=math.inf, source=SOURCE_FALLBACK_INFINITE)
            )
    return ThresholdTable(k=k, entries=tuple(entries))


def pairwise_centroid_stats(centroids):
    """Min/max/mean/population-std over all defined-centroid pairs.

    Asserts the sqrt(2) separation bound on every pair.
    """
    defined = centroids.defined_classes
    if len(defined) < 2:
        raise ValidationError("need at least 2 defined centroids")
    rows = centroids.centroids[defined]
    dists = []
    for i in range(len(defined)):
        for j in range(i + 1, len(defined)):
            dists.append(float(np.linalg.norm(rows[i] - rows[j])))
    dists = np.array(dists)
    if np.any(dists > SQRT2 + 1e-9):
        raise ValidationError("pairwise centroid distance exceeds the sqrt(2) bound")
    return PairwiseStats(
        d_min=float(dists.min()),
        d_max=float(dists.max()),
        mean=float(dists.mean()),
        std=float(dists.std()),  # population std over the pair list
        pair_count=len(dists),
    )


def build_artifact(centroids, thresholds, provenance="", extra=None):
    """Bundle centroids and thresholds with standard metadata."""
    from softgate import __version__

    metadata = {
        "k": centroids.k,
        "provenance": provenance,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "tool_version": __version__,
    }
    if extra:
        metadata.update(extra)
    return CalibrationArtifact(centroids=centroids, thresholds=thresholds, metadata=metadata)


def _artifact_to_dict(artifact):
    cs = artifact.centroids
    return {
        "schema_version": SCHEMA_VERSION,
        "k": artifact.k,
        "centroids": [
            [float(v) for v in cs.centroids[c]] if cs.is_defined(c) else None
            for c in range(artifact.k)
        ],
        "support": [int(s) for s in cs.support],
        "thresholds": [
            {
                "class": e.class_id,
                "value": e.value if math.isfinite(e.value) else None,
                "source": e.source,
            }
            for e in artifact.thresholds.entries
        ],
        "metadata": artifact.metadata,
    }


def save_calibration(artifact, sink):
    """Persist the artifact as a single JSON document.

    Python's float repr is round-trip exact, so load(save(a)) == a.
    """
    from pathlib import Path

    doc = json.dumps(_artifact_to_dict(artifact), indent=2)
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as f:
            f.write(doc)
    elif hasattr(sink, "write"):
        try:
            sink.write(doc)
        except TypeError:
            sink.write(doc.encode("utf-8"))
    else:
        raise ValidationError(f"cannot write to {type(sink).__name__}")


def load_calibration(source):
    """Read an artifact saved by save_calibration; verify the schema."""
    from pathlib import Path

    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as f:
            raw = f.read()
    elif hasattr(source, "read"):
        raw = source.read()
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
    else:
        raise ArtifactError(f"cannot read from {type(source).__name__}")

    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"corrupted calibration payload: {exc}")
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise ArtifactError(
            f"unsupported schema_version {doc.get('schema_version') if isinstance(doc, dict) else doc!r}"
        )
    try:
        k = int(doc["k"])
        support = np.array(doc["support"], dtype=np.int64)
        centroids = np.full((k, k), np.nan)
        for c, row in enumerate(doc["centroids"]):
            if row is not None:
                centroids[c] = row
        entries = tuple(
            ThresholdEntry(
                class_id=int(t["class"]),
                value=math.inf if t["value"] is None else float(t["value"]),
                source=t["source"],
            )
            for t in doc["thresholds"]
        )
        metadata = doc.get("metadata", {})
        return CalibrationArtifact(
            centroids=CentroidSet(k=k, centroids=centroids, support=support),
            thresholds=ThresholdTable(k=k, entries=entries),
            metadata=metadata,
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ArtifactError(f"malformed calibration payload: {exc}")


def artifact_digest(artifact):
    """Stable content hash of the artifact (metadata excluded)."""
    doc = _artifact_to_dict(artifact)
    doc.pop("metadata", None)
    blob = json.dumps(doc, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
