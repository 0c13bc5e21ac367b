"""Prediction-matrix ingestion.

Parses, validates, writes, and synthesizes datasets of softmax output
rows. A row is K probabilities followed by the true and predicted class
labels; the CSV realization carries a mandatory header
``p_0,...,p_{K-1},true_label,predicted_label``. Lines starting with
``#`` before the header are treated as comments (exporters stamp their
provenance there).
"""

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from softgate.errors import ParseError, ValidationError

_SUM_POLICIES = ("reject-row", "renormalize", "fail")
_ARGMAX_POLICIES = ("reject-row", "trust-column", "recompute")


@dataclass(frozen=True)
class ValidationPolicy:
    """How parsing reacts to imperfect rows.

    on_sum_violation handles probability rows whose sum strays from 1 by
    more than sum_tolerance (and rows with out-of-range components,
    which renormalization cannot repair and are rejected unless the
    policy is ``fail``, in which case they raise).
    """

    sum_tolerance: float = 1e-6
    on_sum_violation: str = "renormalize"
    on_argmax_mismatch: str = "recompute"

    def __post_init__(self):
        if self.sum_tolerance < 0:
            raise ValidationError("sum_tolerance must be >= 0")
        if self.on_sum_violation not in _SUM_POLICIES:
            raise ValidationError(f"on_sum_violation must be one of {_SUM_POLICIES}")
        if self.on_argmax_mismatch not in _ARGMAX_POLICIES:
            raise ValidationError(f"on_argmax_mismatch must be one of {_ARGMAX_POLICIES}")


@dataclass(frozen=True)
class ValidationSummary:
    """Per-parse accounting of what validation did to the rows."""

    rows_read: int = 0
    rows_kept: int = 0
    rejected_sum: int = 0
    rejected_component: int = 0
    rejected_argmax: int = 0
    renormalized: int = 0
    recomputed_argmax: int = 0


@dataclass(frozen=True)
class PredictionRecord:
    """One softmax output row: probabilities plus true/predicted labels."""

    probs: np.ndarray
    true_label: int
    predicted_label: int


@dataclass(frozen=True)
class PredictionSet:
    """An immutable batch of prediction rows sharing one class count."""

    probs: np.ndarray  # (n, k) float64
    true_labels: np.ndarray  # (n,) int64
    predicted_labels: np.ndarray  # (n,) int64
    k: int
    provenance: str = ""
    summary: ValidationSummary | None = field(default=None, compare=False)

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        true_labels = np.asarray(self.true_labels, dtype=np.int64)
        predicted_labels = np.asarray(self.predicted_labels, dtype=np.int64)
        if probs.ndim != 2 or probs.shape[1] != self.k:
            raise ValidationError(
                f"probs must have shape (n, {self.k}), got {probs.shape}"
            )
        n = probs.shape[0]
        if true_labels.shape != (n,) or predicted_labels.shape != (n,):
            raise ValidationError("label arrays must match the number of rows")
        if n and (predicted_labels.min() < 0 or predicted_labels.max() >= self.k):
            raise ValidationError(f"predicted labels must lie in [0, {self.k})")
        # true labels may carry source-domain classes >= k for OOD probe
        # sets (nearest-exemplar analysis); negatives are never valid
        if n and true_labels.min() < 0:
            raise ValidationError("true labels must be nonnegative")
        for arr in (probs, true_labels, predicted_labels):
            arr.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "true_labels", true_labels)
        object.__setattr__(self, "predicted_labels", predicted_labels)

    @property
    def row_count(self):
        return self.probs.shape[0]

    def record(self, i):
        return PredictionRecord(
            probs=self.probs[i],
            true_label=int(self.true_labels[i]),
            predicted_label=int(self.predicted_labels[i]),
        )

    def __len__(self):
        return self.row_count

    def __iter__(self):
        return (self.record(i) for i in range(self.row_count))


def expected_header(k):
    return [f"p_{i}" for i in range(k)] + ["true_label", "predicted_label"]


def _open_text(source):
    """Accept a path, text stream, or byte stream; yield (stream, closer)."""
    if isinstance(source, (str, Path)):
        f = open(source, "r", encoding="utf-8", newline="")
        return f, True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8")), False
    if hasattr(source, "read"):
        probe = source.read(0)
        if isinstance(probe, bytes):
            return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
        return source, False
    raise ValidationError(f"cannot read from {type(source).__name__}")


def _argmax_lowest(row):
    # np.argmax already breaks ties toward the lowest index
    return int(np.argmax(row))


def parse_prediction_csv(source, k, policy=None, provenance="",
                         foreign_true_labels=False):
    """Parse and validate a prediction CSV into a PredictionSet.

    Every kept row satisfies the record invariants: components in
    [0, 1], sum within tolerance of 1 (after renormalization when the
    policy says so), and predicted_label consistent with argmax per the
    argmax policy. Rejected rows are counted in the returned set's
    ``summary``. ``foreign_true_labels`` lifts the [0, k) range check on
    true_label for OOD probe sets whose rows keep their source-domain
    class.
    """
    if k < 2:
        raise ValidationError("need k >= 2")
    policy = policy or ValidationPolicy()

    stream, owns = _open_text(source)
    try:
        reader = csv.reader(stream)
        header = None
        line_no = 0
        for row in reader:
            line_no = reader.line_num
            if row and row[0].startswith("#"):
                continue
            header = row
            break
        if header is None:
            raise ParseError("empty input, no header row")
        if [h.strip() for h in header] != expected_header(k):
            raise ParseError(
                f"bad header for k={k}: expected {','.join(expected_header(k))}",
                line=line_no,
            )

        probs_rows = []
        true_rows = []
        pred_rows = []
        rows_read = 0
        rejected_sum = rejected_component = rejected_argmax = 0
        renormalized = recomputed = 0

        for row in reader:
            line_no = reader.line_num
            if not row or (row[0].startswith("#") and len(row) == 1):
                continue
            rows_read += 1
            if len(row) != k + 2:
                raise ParseError(
                    f"expected {k + 2} columns, got {len(row)}", line=line_no
                )
            try:
                p = np.array([float(c) for c in row[:k]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"non-numeric probability cell: {exc}", line=line_no)
            try:
                true_label = int(row[k])
                pred_label = int(row[k + 1])
            except ValueError as exc:
                raise ParseError(f"non-integer label cell: {exc}", line=line_no)
            true_ok = true_label >= 0 if foreign_true_labels else 0 <= true_label < k
            if not true_ok or not (0 <= pred_label < k):
                raise ValidationError(
                    f"line {line_no}: label out of range [0, {k})"
                )

            tol = policy.sum_tolerance
            if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1 + tol):
                if policy.on_sum_violation == "fail":
                    raise ValidationError(
                        f"line {line_no}: probability component outside [0, 1]"
                    )
                rejected_component += 1
                continue
            s = float(p.sum())
            if abs(s - 1.0) > tol:
                if policy.on_sum_violation == "fail":
                    raise ValidationError(
                        f"line {line_no}: probabilities sum to {s!r}"
                    )
                if policy.on_sum_violation == "reject-row":
                    rejected_sum += 1
                    continue
                p = p / s
                renormalized += 1
            elif s != 1.0 and policy.on_sum_violation == "renormalize":
                # inside tolerance but not exact; restore the sum quietly
                p = p / s

            am = _argmax_lowest(p)
            if am != pred_label:
                if policy.on_argmax_mismatch == "reject-row":
                    rejected_argmax += 1
                    continue
                if policy.on_argmax_mismatch == "recompute":
                    pred_label = am
                    recomputed += 1
                # trust-column keeps the stated label

            probs_rows.append(p)
            true_rows.append(true_label)
            pred_rows.append(pred_label)
    finally:
        if owns:
            stream.close()

    n = len(probs_rows)
    summary = ValidationSummary(
        rows_read=rows_read,
        rows_kept=n,
        rejected_sum=rejected_sum,
        rejected_component=rejected_component,
        rejected_argmax=rejected_argmax,
        renormalized=renormalized,
        recomputed_argmax=recomputed,
    )
    probs = np.array(probs_rows, dtype=np.float64) if n else np.empty((0, k))
    return PredictionSet(
        probs=probs,
        true_labels=np.array(true_rows, dtype=np.int64),
        predicted_labels=np.array(pred_rows, dtype=np.int64),
        k=k,
        provenance=provenance or getattr(source, "name", ""),
        summary=summary,
    )


def write_prediction_csv(pset, sink):
    """Write a PredictionSet in the canonical CSV schema.

    Floats use repr precision, so parse(write(s)) round-trips exactly.
    """
    close = False
    if isinstance(sink, (str, Path)):
        sink = open(sink, "w", encoding="utf-8", newline="")
        close = True
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(expected_header(pset.k))
        for i in range(pset.row_count):
            writer.writerow(
                [repr(float(v)) for v in pset.probs[i]]
                + [int(pset.true_labels[i]), int(pset.predicted_labels[i])]
            )
    finally:
        if close:
            sink.close()


@dataclass(frozen=True)
class SyntheticSpec:
    """Controls for the synthetic near-vertex cluster generator.

    Each point mixes a one-hot vertex with a uniform simplex draw; the
    mixing weight shrinks as ``concentration`` grows, so high values
    produce tight clusters. ``noise_rate`` flips the true label of a
    fraction of rows to a different class, making them incorrect.
    """

    k: int
    per_class: int | tuple
    concentration: float = 10.0
    noise_rate: float = 0.0

    def counts(self):
        if isinstance(self.per_class, int):
            return [self.per_class] * self.k
        return list(self.per_class)

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError("need k >= 2")
        counts = self.counts()
        if len(counts) != self.k or any(c <= 0 for c in counts):
            raise ValidationError("per-class counts must be positive, one per class")
        if not self.concentration > 0:
            raise ValidationError("concentration must be > 0")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValidationError("noise_rate must be in [0, 1]")


def synthesize_dataset(spec, seed):
    """Generate a deterministic PredictionSet per the synthetic spec.

    predicted_label is always argmax of the generated probabilities;
    true_label equals it except for the noise-flipped rows, so a zero
    noise rate yields an all-correct set.
    """
    rng = np.random.default_rng(seed)
    k = spec.k
    blocks = []
    for c, count in enumerate(spec.counts()):
        u = rng.dirichlet(np.ones(k), size=count)
        w = rng.uniform(0.0, 1.0, size=(count, 1)) / (1.0 + spec.concentration)
        onehot = np.zeros(k)
        onehot[c] = 1.0
        blocks.append((1.0 - w) * onehot + w * u)
    probs = np.vstack(blocks)
    probs /= probs.sum(axis=1, keepdims=True)
    predicted = probs.argmax(axis=1)
    true = predicted.copy()
    flip = rng.random(len(true)) < spec.noise_rate
    offsets = rng.integers(1, k, size=len(true))
    true[flip] = (true[flip] + offsets[flip]) % k
    return PredictionSet(
        probs=probs,
        true_labels=true,
        predicted_labels=predicted,
        k=k,
        provenance=f"synthetic(seed={seed})",
    )


def split_by_correctness(pset):
    """Partition into (correct, incorrect) by true == predicted.

    Row order within each part follows the input.
    """
    mask = pset.true_labels == pset.predicted_labels
    parts = []
    for m in (mask, ~mask):
        parts.append(
            PredictionSet(
                probs=pset.probs[m],
                true_labels=pset.true_labels[m],
                predicted_labels=pset.predicted_labels[m],
                k=pset.k,
                provenance=pset.provenance,
            )
        )
    return parts[0], parts[1]
