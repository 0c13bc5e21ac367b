import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reference import ref_exclusion, ref_sweep
from softgate.analysis import (
    DEFAULT_BOUNDARIES,
    DEFAULT_GRID,
    emit_report,
    exclusion_table,
    nearest_exemplars,
    shell_density,
    threshold_sweep,
)
from softgate.calibration import CentroidSet, compute_centroids
from softgate.errors import ValidationError
from softgate.geometry import SQRT2, ShellSpec, shell_volume
from softgate.ingest import (
    PredictionSet,
    SyntheticSpec,
    split_by_correctness,
    synthesize_dataset,
)


def identity_centroids(k):
    return CentroidSet(k=k, centroids=np.eye(k), support=np.ones(k, dtype=np.int64))


def make_fixture(seed=21, k=5, noise=0.15):
    spec = SyntheticSpec(k=k, per_class=120, concentration=4.0, noise_rate=noise)
    s = synthesize_dataset(spec, seed=seed)
    correct, _ = split_by_correctness(s)
    return s, compute_centroids(correct)


def test_accuracy_follows_ratio_identity():
    s, centroids = make_fixture()
    for row in threshold_sweep(s, centroids):
        if math.isfinite(row.ratio) and row.ratio > 0:
            expected = 100.0 * row.ratio / (row.ratio + 1.0)
            assert row.accuracy_pct == pytest.approx(expected, abs=1e-9)


def test_full_threshold_retains_everything():
    s, centroids = make_fixture()
    rows = threshold_sweep(s, centroids, grid=[SQRT2])
    row = rows[0]
    correct = int(np.sum(s.true_labels == s.predicted_labels))
    assert row.correct_retained == correct
    assert row.retention_pct == pytest.approx(100.0)
    assert row.accuracy_pct == pytest.approx(100.0 * correct / s.row_count)


def test_sweep_matches_reference():
    s, centroids = make_fixture(seed=33)
    rows = threshold_sweep(s, centroids)
    ref = ref_sweep(s, [centroids.centroids[c] for c in range(5)], DEFAULT_GRID)
    for row, (ret, acc, c_ret, i_ret, ratio) in zip(rows, ref):
        assert row.correct_retained == c_ret
        assert row.incorrect_retained == i_ret
        assert row.retention_pct == pytest.approx(ret, abs=1e-12)
        if math.isfinite(ratio):
            assert row.ratio == pytest.approx(ratio, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sweep_monotone_in_threshold(seed):
    spec = SyntheticSpec(k=3, per_class=50, concentration=3.0, noise_rate=0.2)
    s = synthesize_dataset(spec, seed=seed)
    correct, _ = split_by_correctness(s)
    rows = threshold_sweep(s, compute_centroids(correct))
    for a, b in zip(rows, rows[1:]):  # grid descends, retention cannot rise
        assert b.correct_retained <= a.correct_retained
        assert b.retention_pct <= a.retention_pct + 1e-12


def test_grid_validation():
    s, centroids = make_fixture()
    with pytest.raises(ValidationError):
        threshold_sweep(s, centroids, grid=[])
    with pytest.raises(ValidationError):
        threshold_sweep(s, centroids, grid=[0.1, 0.5])
    with pytest.raises(ValidationError):
        threshold_sweep(s, centroids, grid=[1.5, 0.5])


def test_exclusion_all_at_distance_zero():
    centroids = identity_centroids(3)
    s = PredictionSet(
        probs=np.tile([0.0, 1.0, 0.0], (4, 1)),
        true_labels=np.ones(4, dtype=int),
        predicted_labels=np.ones(4, dtype=int),
        k=3,
    )
    table = exclusion_table([("zeros", s)], centroids)
    for row in table["zeros"]:
        assert row.below_pct == pytest.approx(100.0)
        assert row.at_above_pct == pytest.approx(0.0)


def test_exclusion_all_far_away():
    centroids = identity_centroids(3)
    # distance 1.0 from the predicted centroid
    a = 1.0 / math.sqrt(2)
    p = [1.0 - a, a, 0.0]
    s = PredictionSet(
        probs=np.tile(p, (3, 1)),
        true_labels=np.zeros(3, dtype=int),
        predicted_labels=np.zeros(3, dtype=int),
        k=3,
    )
    table = exclusion_table([("far", s)], centroids)
    for row in table["far"]:
        assert row.at_above_pct == pytest.approx(100.0)


def test_exclusion_matches_counting_oracle():
    s, centroids = make_fixture(seed=44)
    table = exclusion_table([("synth", s)], centroids)
    ref = ref_exclusion(s, [centroids.centroids[c] for c in range(5)], DEFAULT_GRID)
    for row, below in zip(table["synth"], ref):
        assert row.below_pct == pytest.approx(below, abs=1e-12)
        # exact complement before rounding
        assert row.below_pct + row.at_above_pct == pytest.approx(100.0, abs=1e-12)


def test_shell_density_reference_densities():
    # fixture with known counts in shell (0.7, 0.8): density = N / volume
    v = shell_volume(ShellSpec(10, 0.7, 0.8))
    assert 4 / v == pytest.approx(2.0e1, rel=0.05)
    assert 75 / v == pytest.approx(3.7e2, rel=0.05)


def test_shell_counts_conserved():
    s, centroids = make_fixture(seed=55, k=5)
    report = shell_density(s, centroids)
    total = (
        sum(sh.count for sh in report.shells)
        + report.inner_sphere.count
        + report.beyond_outer_count
        + report.between_count
    )
    assert total == s.row_count


def test_shell_density_is_count_over_volume():
    s, centroids = make_fixture(seed=56, k=5)
    report = shell_density(s, centroids)
    for sh in report.shells:
        assert sh.density == pytest.approx(sh.count / sh.volume, rel=1e-12)


def test_empty_set_all_zero():
    centroids = identity_centroids(3)
    s = PredictionSet(
        probs=np.empty((0, 3)), true_labels=[], predicted_labels=[], k=3
    )
    report = shell_density(s, centroids)
    assert all(sh.count == 0 and sh.density == 0 for sh in report.shells)
    assert report.inner_sphere.count == 0


def test_boundary_membership_is_cumulative_leq():
    centroids = identity_centroids(3)
    # point exactly at radius 0.7 belongs to the inner cumulative count,
    # so it lands in the (0.6, 0.7] shell, not (0.7, 0.8]
    a = 0.7 / math.sqrt(2)
    p = [1.0 - a, a, 0.0]
    s = PredictionSet(
        probs=np.array([p]),
        true_labels=np.zeros(1, dtype=int),
        predicted_labels=np.zeros(1, dtype=int),
        k=3,
    )
    report = shell_density(s, centroids, boundaries=[0.8, 0.7, 0.6], inner_radius=0.6)
    by_outer = {sh.r_outer: sh.count for sh in report.shells}
    assert by_outer[0.8] == 0
    assert by_outer[0.7] == 1


def test_non_descending_boundaries_rejected():
    s, centroids = make_fixture()
    with pytest.raises(ValidationError):
        shell_density(s, centroids, boundaries=[0.5, 0.6])


def test_nearest_exemplar_exact_centroid_copy():
    centroids = identity_centroids(3)
    s = PredictionSet(
        probs=np.array([[0.0, 1.0, 0.0], [0.4, 0.3, 0.3]]),
        true_labels=np.array([1, 0]),
        predicted_labels=np.array([1, 0]),
        k=3,
    )
    report = nearest_exemplars(s, centroids)
    per = {e.target_class: e for e in report.per_class}
    assert per[1].nearest_distance == 0.0
    assert per[1].nearest_source_label == 1


def test_nearest_exemplar_two_rows_by_hand():
    centroids = identity_centroids(2)
    rows = np.array([[0.9, 0.1], [0.6, 0.4]])
    s = PredictionSet(
        probs=rows,
        true_labels=np.array([0, 1]),
        predicted_labels=np.array([0, 0]),
        k=2,
    )
    report = nearest_exemplars(s, centroids)
    per = {e.target_class: e for e in report.per_class}
    d00 = math.dist(rows[0], [1, 0])
    d10 = math.dist(rows[1], [1, 0])
    assert per[0].nearest_row_index == 0
    assert per[0].nearest_distance == pytest.approx(d00)
    assert per[0].source_averages[0] == pytest.approx(d00)
    assert per[0].source_averages[1] == pytest.approx(d10)


def test_nearest_distance_bounds_source_averages():
    s, centroids = make_fixture(seed=66)
    report = nearest_exemplars(s, centroids)
    for e in report.per_class:
        for avg in e.source_averages.values():
            assert e.nearest_distance <= avg + 1e-12


def test_nearest_exemplar_report_embeds_fixture_numbers():
    # one row at the known nearest distance, the rest of its source label
    # arranged so the source average comes out at the reported value
    target = 0.00893
    average = 0.20964
    other = 2 * average - target  # two rows -> mean is exactly `average`
    centroids = identity_centroids(2)

    def at_distance(d):
        a = d / math.sqrt(2)
        return [1.0 - a, a]

    s = PredictionSet(
        probs=np.array([at_distance(target), at_distance(other)]),
        true_labels=np.array([1, 1]),
        predicted_labels=np.array([0, 0]),
        k=2,
    )
    report = nearest_exemplars(s, centroids)
    per = {e.target_class: e for e in report.per_class}
    assert per[0].nearest_distance == pytest.approx(0.00893, abs=1e-9)
    assert per[0].source_averages[1] == pytest.approx(0.20964, abs=1e-9)


def test_empty_set_rejected():
    centroids = identity_centroids(3)
    s = PredictionSet(probs=np.empty((0, 3)), true_labels=[], predicted_labels=[], k=3)
    with pytest.raises(ValidationError):
        nearest_exemplars(s, centroids)


def test_sweep_csv_schema():
    s, centroids = make_fixture()
    rows = threshold_sweep(s, centroids)
    buf = io.StringIO()
    emit_report(rows, "csv", buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == (
        "threshold,retention_pct,accuracy_pct,correct_retained,incorrect_retained,ratio"
    )
    assert len(lines) == 1 + len(DEFAULT_GRID)


def test_shell_report_json_ordering():
    s, centroids = make_fixture(k=5)
    report = shell_density(s, centroids)
    buf = io.StringIO()
    emit_report(report, "json", buf)
    doc = json.loads(buf.getvalue())
    outers = [sh["r_outer"] for sh in doc["shells"]]
    assert outers == sorted(outers, reverse=True)
    assert doc["boundary_rule"] == "cumulative-leq"


def test_exclusion_json_round_trip():
    s, centroids = make_fixture(seed=77)
    table = exclusion_table([("synth", s)], centroids)
    buf = io.StringIO()
    emit_report(table, "json", buf)
    doc = json.loads(buf.getvalue())
    for row, parsed in zip(table["synth"], doc["synth"]):
        assert parsed["threshold"] == row.threshold
        assert parsed["below_pct"] == row.below_pct
        assert parsed["at_above_pct"] == row.at_above_pct


def test_density_consistency_after_emission():
    s, centroids = make_fixture(seed=88, k=5)
    report = shell_density(s, centroids)
    buf = io.StringIO()
    emit_report(report, "json", buf)
    doc = json.loads(buf.getvalue())
    for sh in doc["shells"]:
        if sh["count"]:
            recomputed = sh["count"] / sh["volume"]
            assert recomputed == pytest.approx(sh["density"], rel=1e-3)


def test_csv_percentages_have_one_decimal():
    s, centroids = make_fixture(seed=99)
    table = exclusion_table([("synth", s)], centroids)
    buf = io.StringIO()
    emit_report(table, "csv", buf)
    for line in buf.getvalue().strip().split("\n")[1:]:
        _, _, below, above = line.split(",")
        assert "." in below and len(below.split(".")[1]) == 1
        assert "." in above and len(above.split(".")[1]) == 1
