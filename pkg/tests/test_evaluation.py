"""Confusion matrices, accuracy summaries, report listings, SVG structure."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statekit.data import CLASS_NAMES, ManifestEntry
from statekit.errors import DataError
from statekit.evaluation import (ConfusionMatrix, accuracies, confusion_matrix,
                                 confusion_svg, emit_plots,
                                 misclassification_report, plot_confusion,
                                 row_normalized, write_confusion_csv)
from statekit.training import EpochRecord

AB = ["a", "b"]


def entry(path: str, label: int) -> ManifestEntry:
    return ManifestEntry(path=path, split="test", label=label,
                         class_name=CLASS_NAMES[label])


def records(n: int):
    return [EpochRecord(epoch=i + 1, train_loss=1.0 / (i + 1), train_accuracy=0.5,
                        val_loss=1.2 / (i + 1), val_accuracy=0.4, wall_seconds=0.0)
            for i in range(n)]


def test_confusion_matrix_small_example():
    cm = confusion_matrix([0, 0, 1], [0, 1, 1], AB)
    assert np.array_equal(cm.counts, [[1, 1], [0, 1]])


def test_confusion_matrix_perfect_predictions_are_diagonal():
    labels = [0, 1, 2, 1, 0, 2, 2]
    cm = confusion_matrix(labels, labels, ["a", "b", "c"])
    assert np.trace(cm.counts) == len(labels)
    assert cm.counts.sum() == len(labels)
    assert np.array_equal(cm.counts, np.diag(np.diag(cm.counts)))


def test_confusion_matrix_validation_errors():
    with pytest.raises(DataError):
        confusion_matrix([0, 1], [0], AB)
    with pytest.raises(DataError):
        confusion_matrix([0, 2], [0, 1], AB)
    with pytest.raises(DataError):
        confusion_matrix([0, -1], [0, 1], AB)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(1, 60), st.integers(0, 10**6))
def test_confusion_matrix_permutation_equivariance(k, n, seed):
    rng = np.random.default_rng(seed)
    t = rng.integers(0, k, size=n)
    p = rng.integers(0, k, size=n)
    perm = rng.permutation(k)
    names = [f"c{i}" for i in range(k)]
    base = confusion_matrix(t, p, names)
    mapped = confusion_matrix(perm[t], perm[p], names)
    assert np.array_equal(mapped.counts[np.ix_(perm, perm)], base.counts)
    assert base.counts.sum() == n


def test_row_sums_equal_split_counts(fixture_arrays):
    _, labels = fixture_arrays["test"]
    rng = np.random.default_rng(0)
    preds = rng.integers(0, 11, size=len(labels))
    cm = confusion_matrix(labels, preds, list(CLASS_NAMES))
    sums = cm.counts.sum(axis=1)
    assert np.array_equal(sums, [4] * 11)


def test_accuracies_hand_example():
    cm = ConfusionMatrix(counts=np.array([[2, 0], [1, 3]]), class_names=AB)
    overall, per_class = accuracies(cm)
    assert overall == pytest.approx(5 / 6)
    assert per_class[0] == pytest.approx(1.0)
    assert per_class[1] == pytest.approx(0.75)


def test_accuracies_zero_row_reports_none():
    cm = ConfusionMatrix(counts=np.array([[4, 0], [0, 0]]), class_names=AB)
    overall, per_class = accuracies(cm)
    assert overall == 1.0
    assert per_class == [1.0, None]
    with pytest.raises(DataError):
        accuracies(ConfusionMatrix(counts=np.zeros((2, 2), dtype=np.int64),
                                   class_names=AB))


def test_row_normalized_rows_sum_to_one():
    rng = np.random.default_rng(1)
    counts = rng.integers(0, 9, size=(5, 5))
    counts[2] = 0
    cm = ConfusionMatrix(counts=counts, class_names=[str(i) for i in range(5)])
    norm = row_normalized(cm)
    sums = norm.sum(axis=1)
    for i, s in enumerate(sums):
        expect = 0.0 if counts[i].sum() == 0 else 1.0
        assert s == pytest.approx(expect, abs=1e-9)


def test_misclassification_report_perfect_predictions_empty():
    labels = [0, 1, 1]
    cm = confusion_matrix(labels, labels, AB)
    entries = [entry(f"p{i}.ppm", l) for i, l in enumerate(labels)]
    assert misclassification_report(cm, entries, labels) == []


def test_misclassification_report_single_error():
    true = [8, 8, 3]     # Whole, Whole, Peeled
    pred = [8, 3, 3]     # one Whole -> Peeled slip
    cm = confusion_matrix(true, pred, list(CLASS_NAMES))
    entries = [entry(f"img{i}.ppm", t) for i, t in enumerate(true)]
    report = misclassification_report(cm, entries, pred)
    assert len(report) == 1
    cell = report[0]
    assert cell.true_name == "Whole" and cell.pred_name == "Peeled"
    assert cell.count == 1 and cell.rate == pytest.approx(0.5)
    assert cell.example_paths == ["img1.ppm"]


def test_misclassification_report_twelve_percent_top_cell():
    # 100 Jullienne samples, 12 of them predicted Grated, rest correct.
    true = [2] * 100
    pred = [6] * 12 + [2] * 88
    cm = confusion_matrix(true, pred, list(CLASS_NAMES))
    entries = [entry(f"j{i}.ppm", 2) for i in range(100)]
    report = misclassification_report(cm, entries, pred, top_n=3)
    top = report[0]
    assert (top.true_name, top.pred_name) == ("Jullienne", "Grated")
    assert top.rate == pytest.approx(0.12)
    assert top.count == 12
    assert len(top.example_paths) == 3


def test_misclassification_report_alignment_check():
    cm = confusion_matrix([0], [1], AB)
    with pytest.raises(DataError):
        misclassification_report(cm, [entry("x.ppm", 0)], [1, 0])


def test_confusion_csv_layout(tmp_path):
    cm = confusion_matrix([0, 1, 1], [0, 1, 0], AB)
    path = tmp_path / "cm.csv"
    write_confusion_csv(cm, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b"
    assert lines[1:] == ["1,0", "1,1"]


def test_confusion_csv_full_class_header(tmp_path):
    labels = list(range(11))
    cm = confusion_matrix(labels, labels, list(CLASS_NAMES))
    write_confusion_csv(cm, tmp_path / "cm.csv")
    lines = (tmp_path / "cm.csv").read_text().splitlines()
    assert lines[0].split(",") == list(CLASS_NAMES)
    assert len(lines) == 12


def test_heatmap_structure_121_cells_and_axis_labels():
    rng = np.random.default_rng(2)
    t = rng.integers(0, 11, size=200)
    p = rng.integers(0, 11, size=200)
    svg = confusion_svg(confusion_matrix(t, p, list(CLASS_NAMES)))
    assert svg.count('class="cell"') == 121
    assert svg.count('class="xlabel"') == 11
    assert svg.count('class="ylabel"') == 11


def test_curve_svgs_have_two_polylines_with_all_points(tmp_path):
    written = emit_plots(records(10), None, tmp_path)
    loss_svg = (tmp_path / "loss.svg").read_text()
    assert loss_svg.count("<polyline") == 2
    for chunk in loss_svg.split("points=")[1:]:
        coords = chunk.split('"')[1].split()
        assert len(coords) == 10
    assert (tmp_path / "accuracy.svg").exists()
    assert (tmp_path / "metrics.csv").exists()
    assert all(p.exists() for p in written)


def test_emit_plots_with_matrix_writes_matrix_pair(tmp_path):
    cm = confusion_matrix([0, 1], [0, 1], AB)
    emit_plots(records(3), cm, tmp_path)
    assert (tmp_path / "confusion_matrix.svg").exists()
    assert (tmp_path / "confusion_matrix.csv").exists()


def test_emit_plots_rejects_empty_records(tmp_path):
    with pytest.raises(DataError):
        emit_plots([], None, tmp_path)


def test_trace_over_total_equals_accuracy():
    rng = np.random.default_rng(5)
    t = rng.integers(0, 11, size=300)
    p = rng.integers(0, 11, size=300)
    cm = confusion_matrix(t, p, list(CLASS_NAMES))
    overall, _ = accuracies(cm)
    assert overall == float(np.sum(t == p)) / 300
