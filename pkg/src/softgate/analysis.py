"""Aggregate analyses over prediction sets and centroids.

Threshold sweeps (retention / accuracy / correct-to-incorrect ratio),
below vs at-or-above exclusion tables, hypersphere shell densities, and
nearest-exemplar reports for out-of-distribution probes. Every distance
here is measured to the predicted-class centroid, except the
nearest-exemplar report which scans all centroids.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from softgate.errors import ValidationError
from softgate.geometry import SQRT2, ShellSpec, hypersphere_volume, shell_volume

#: Threshold grid used throughout the reported tables and sweeps.
DEFAULT_GRID = (0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05)

#: Shell boundaries (descending) and inner-sphere radius for density reports.
DEFAULT_BOUNDARIES = (0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05)


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    retention_pct: float  # % of correct rows retained
    accuracy_pct: float  # % correct among retained (nan if none retained)
    correct_retained: int
    incorrect_retained: int
    ratio: float  # correct : incorrect, inf when incorrect_retained == 0


@dataclass(frozen=True)
class ExclusionRow:
    threshold: float
    below_pct: float
    at_above_pct: float


@dataclass(frozen=True)
class Shell:
    r_inner: float
    r_outer: float
    volume: float
    count: int
    density: float


@dataclass(frozen=True)
class InnerSphere:
    radius: float
    volume: float
    count: int
    density: float


@dataclass(frozen=True)
class ShellReport:
    dim: int
    shells: tuple  # ordered outer-to-inner
    inner_sphere: InnerSphere
    beyond_outer_count: int
    between_count: int  # rows between inner_sphere.radius and the last boundary
    row_count: int


@dataclass(frozen=True)
class ClassExemplar:
    target_class: int
    nearest_row_index: int
    nearest_source_label: int
    nearest_distance: float
    source_averages: dict  # source label -> mean distance to this centroid


@dataclass(frozen=True)
class NearestExemplarReport:
    per_class: tuple  # ClassExemplar per defined centroid class


def distances_to_predicted(pset, centroids):
    """Distance of each row to its predicted class's centroid."""
    for c in np.unique(pset.predicted_labels):
        if not centroids.is_defined(int(c)):
            raise ValidationError(f"centroid undefined for predicted class {int(c)}")
    if pset.row_count == 0:
        return np.empty(0)
    rows = centroids.centroids[pset.predicted_labels]
    return np.linalg.norm(pset.probs - rows, axis=1)


def _check_grid(grid):
    grid = [float(t) for t in grid]
    if not grid:
        raise ValidationError("threshold grid is empty")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("threshold grid must be strictly descending")
    if grid[0] > SQRT2 + 1e-12 or grid[-1] <= 0:
        raise ValidationError("thresholds must lie in (0, sqrt(2)]")
    return grid


def threshold_sweep(pset, centroids, grid=DEFAULT_GRID):
    """Retention, accuracy, and correct:incorrect ratio per threshold."""
    grid = _check_grid(grid)
    d = distances_to_predicted(pset, centroids)
    correct = pset.true_labels == pset.predicted_labels
    total_correct = int(correct.sum())
    rows = []
    for t in grid:
        retained = d < t
        c_ret = int(np.sum(retained & correct))
        i_ret = int(np.sum(retained & ~correct))
        total_ret = c_ret + i_ret
        rows.append(
            SweepRow(
                threshold=t,
                retention_pct=100.0 * c_ret / total_correct if total_correct else math.nan,
                accuracy_pct=100.0 * c_ret / total_ret if total_ret else math.nan,
                correct_retained=c_ret,
                incorrect_retained=i_ret,
                ratio=c_ret / i_ret if i_ret else math.inf,
            )
        )
    return rows


def exclusion_table(named_sets, centroids, grid=DEFAULT_GRID):
    """Below / at-or-above percentages per dataset and threshold.

    ``named_sets`` is a sequence of (name, PredictionSet) pairs; the
    centroids come from the reference calibration, shared by all sets.
    """
    grid = _check_grid(grid)
    table = {}
    for name, pset in named_sets:
        d = distances_to_predicted(pset, centroids)
        n = pset.row_count
        rows = []
        for t in grid:
            below = 100.0 * float(np.sum(d < t)) / n if n else math.nan
            rows.append(
                ExclusionRow(threshold=t, below_pct=below, at_above_pct=100.0 - below)
            )
        table[name] = rows
    return table


def shell_density(pset, centroids, boundaries=DEFAULT_BOUNDARIES, inner_radius=None):
    """Counts, analytic volumes, and densities of concentric shells.

    A point belongs to the cumulative count of every radius at or above
    its distance (non-strict <=); a shell count is the difference of
    two cumulative counts. Densities are count / analytic volume.
    """
    boundaries = [float(b) for b in boundaries]
    if len(boundaries) < 2:
        raise ValidationError("need at least two shell boundaries")
    if any(b >= a for a, b in zip(boundaries, boundaries[1:])):
        raise ValidationError("boundaries must be strictly descending")
    if inner_radius is None:
        inner_radius = boundaries[-1]
    inner_radius = float(inner_radius)
    if inner_radius > boundaries[-1]:
        raise ValidationError("inner_radius must not exceed the smallest boundary")

    dim = pset.k
    d = distances_to_predicted(pset, centroids)

    def cumulative(r):
        return int(np.sum(d <= r))

    shells = []
    for outer, inner in zip(boundaries, boundaries[1:]):
        count = cumulative(outer) - cumulative(inner)
        vol = shell_volume(ShellSpec(dim=dim, r_inner=inner, r_outer=outer))
        shells.append(
            Shell(r_inner=inner, r_outer=outer, volume=vol, count=count,
                  density=count / vol)
        )

    inner_count = cumulative(inner_radius)
    inner_vol = hypersphere_volume(dim, inner_radius)
    inner = InnerSphere(
        radius=inner_radius,
        volume=inner_vol,
        count=inner_count,
        density=inner_count / inner_vol if inner_vol else 0.0,
    )
    return ShellReport(
        dim=dim,
        shells=tuple(shells),
        inner_sphere=inner,
        beyond_outer_count=pset.row_count - cumulative(boundaries[0]),
        between_count=cumulative(boundaries[-1]) - inner_count,
        row_count=pset.row_count,
    )


def nearest_exemplars(ood_set, centroids):
    """Nearest OOD row per centroid class, plus per-source-label means.

    The OOD rows carry their original-domain class in true_label; every
    row is measured against every defined centroid.
    """
    if ood_set.row_count == 0:
        raise ValidationError("nearest_exemplars needs a non-empty set")
    per_class = []
    sources = np.unique(ood_set.true_labels)
    for c in centroids.defined_classes:
        d = np.linalg.norm(ood_set.probs - centroids.centroids[c], axis=1)
        idx = int(np.argmin(d))
        averages = {
            int(s): float(d[ood_set.true_labels == s].mean()) for s in sources
        }
        per_class.append(
            ClassExemplar(
                target_class=c,
                nearest_row_index=idx,
                nearest_source_label=int(ood_set.true_labels[idx]),
                nearest_distance=float(d[idx]),
                source_averages=averages,
            )
        )
    return NearestExemplarReport(per_class=tuple(per_class))


# --- serialization -------------------------------------------------------

def _pct(v):
    """CSV percentage formatting: one decimal place, nan passed through."""
    return f"{v:.1f}" if not math.isnan(v) else "nan"


def _num(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _sweep_json(rows):
    return [
        {
            "threshold": r.threshold,
            "retention_pct": _num(r.retention_pct),
            "accuracy_pct": _num(r.accuracy_pct),
            "correct_retained": r.correct_retained,
            "incorrect_retained": r.incorrect_retained,
            "ratio": _num(r.ratio),
        }
        for r in rows
    ]


def _exclusion_json(table):
    return {
        name: [
            {
                "threshold": r.threshold,
                "below_pct": _num(r.below_pct),
                "at_above_pct": _num(r.at_above_pct),
            }
            for r in rows
        ]
        for name, rows in table.items()
    }


def _shell_json(report):
    return {
        "dim": report.dim,
        "row_count": report.row_count,
        "shells": [
            {
                "r_inner": s.r_inner,
                "r_outer": s.r_outer,
                "volume": s.volume,
                "count": s.count,
                "density": s.density,
            }
            for s in report.shells
        ],
        "inner_sphere": {
            "radius": report.inner_sphere.radius,
            "volume": report.inner_sphere.volume,
            "count": report.inner_sphere.count,
            "density": report.inner_sphere.density,
        },
        "beyond_outer_count": report.beyond_outer_count,
        "between_count": report.between_count,
        # shell membership uses the cumulative non-strict <= indicator
        "boundary_rule": "cumulative-leq",
    }


def _exemplar_json(report):
    return {
        "per_class": [
            {
                "target_class": e.target_class,
                "nearest_row_index": e.nearest_row_index,
                "nearest_source_label": e.nearest_source_label,
                "nearest_distance": e.nearest_distance,
                "source_averages": {str(k): v for k, v in e.source_averages.items()},
            }
            for e in report.per_class
        ]
    }


def _write_csv(rows, header, sink):
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def emit_report(report, format, sink):
    """Serialize any report type to CSV or JSON.

    CSV rounds percentages to one decimal place; JSON keeps full
    precision.
    """
    if format not in ("csv", "json"):
        raise ValidationError("format must be 'csv' or 'json'")
    close = False
    if isinstance(sink, (str, Path)):
        sink = open(sink, "w", encoding="utf-8", newline="")
        close = True
    try:
        if format == "json":
            json.dump(_to_json_doc(report), sink, indent=2)
            sink.write("\n")
        else:
            _to_csv(report, sink)
    finally:
        if close:
            sink.close()


def _to_json_doc(report):
    if isinstance(report, ShellReport):
        return _shell_json(report)
    if isinstance(report, NearestExemplarReport):
        return _exemplar_json(report)
    if isinstance(report, dict):
        return _exclusion_json(report)
    if isinstance(report, (list, tuple)) and all(isinstance(r, SweepRow) for r in report):
        return _sweep_json(list(report))
    if isinstance(report, (list, tuple)) and all(isinstance(r, ExclusionRow) for r in report):
        return _exclusion_json({"dataset": list(report)})["dataset"]
    raise ValidationError(f"cannot serialize report of type {type(report).__name__}")


def _to_csv(report, sink):
    if isinstance(report, (list, tuple)) and all(isinstance(r, SweepRow) for r in report):
        _write_csv(
            [
                [
                    r.threshold,
                    _pct(r.retention_pct),
                    _pct(r.accuracy_pct),
                    r.correct_retained,
                    r.incorrect_retained,
                    "inf" if math.isinf(r.ratio) else r.ratio,
                ]
                for r in report
            ],
            ["threshold", "retention_pct", "accuracy_pct", "correct_retained",
             "incorrect_retained", "ratio"],
            sink,
        )
    elif isinstance(report, dict):
        _write_csv(
            [
                [name, r.threshold, _pct(r.below_pct), _pct(r.at_above_pct)]
                for name, rows in report.items()
                for r in rows
            ],
            ["dataset", "threshold", "below_pct", "at_above_pct"],
            sink,
        )
    elif isinstance(report, (list, tuple)) and all(isinstance(r, ExclusionRow) for r in report):
        _write_csv(
            [[r.threshold, _pct(r.below_pct), _pct(r.at_above_pct)] for r in report],
            ["threshold", "below_pct", "at_above_pct"],
            sink,
        )
    elif isinstance(report, ShellReport):
        rows = [
            ["shell", s.r_inner, s.r_outer, s.volume, s.count, s.density]
            for s in report.shells
        ]
        i = report.inner_sphere
        rows.append(["inner_sphere", 0.0, i.radius, i.volume, i.count, i.density])
        _write_csv(rows, ["region", "r_inner", "r_outer", "volume", "count", "density"], sink)
    elif isinstance(report, NearestExemplarReport):
        _write_csv(
            [
                [e.target_class, s, avg, e.nearest_source_label,
                 e.nearest_row_index, e.nearest_distance]
                for e in report.per_class
                for s, avg in sorted(e.source_averages.items())
            ],
            ["target_class", "source_label", "avg_distance",
             "nearest_source_label", "nearest_row_index", "nearest_distance"],
            sink,
        )
    else:
        raise ValidationError(f"cannot serialize report of type {type(report).__name__}")
