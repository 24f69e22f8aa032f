"""Evaluation reporting: confusion matrices, accuracies, plots.

The confusion matrix is the K x K grid with rows = true class and columns =
predicted class, axes ordered by the canonical class list. Displayed values
are row-normalized percentages (per-class accuracy on the diagonal); raw
counts live in the CSV.

Plots are self-contained SVG documents written without any plotting
dependency: a loss curve, an accuracy curve (train and validation series),
and a confusion-matrix heatmap. They are textual and structurally
assertable, which keeps figure output testable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import ManifestEntry
from .errors import DataError
from .training import EpochRecord, write_metrics_csv

SVG_W, SVG_H = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 50


@dataclass
class ConfusionMatrix:
    counts: np.ndarray          # [K,K] int64, rows true, cols predicted
    class_names: list[str]

    @property
    def k(self) -> int:
        return len(self.class_names)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(true_labels, predicted_labels, class_names) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    k = len(class_names)
    if t.shape != p.shape or t.ndim != 1:
        raise DataError(f"label lists must be equal-length 1-d, got {t.shape} vs {p.shape}")
    for name, arr in (("true", t), ("predicted", p)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise DataError(f"{name} labels must lie in [0,{k}), got "
                            f"range [{arr.min()},{arr.max()}]")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts=counts, class_names=list(class_names))


def row_normalized(cm: ConfusionMatrix) -> np.ndarray:
    """Counts scaled so each nonzero row sums to 1."""
    sums = cm.counts.sum(axis=1, keepdims=True)
    out = np.zeros_like(cm.counts, dtype=np.float64)
    nz = sums[:, 0] > 0
    out[nz] = cm.counts[nz] / sums[nz]
    return out


def accuracies(cm: ConfusionMatrix) -> tuple[float, list]:
    """(overall, per-class) accuracy; zero-sample classes report None."""
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    overall = float(np.trace(cm.counts)) / cm.total
    per_class = []
    for i in range(cm.k):
        row = int(cm.counts[i].sum())
        per_class.append(float(cm.counts[i, i]) / row if row else None)
    return overall, per_class


@dataclass
class MisclassCell:
    true_name: str
    pred_name: str
    count: int
    rate: float                 # count / true-class row sum
    example_paths: list[str]


def misclassification_report(cm: ConfusionMatrix, entries: list[ManifestEntry],
                             predictions, top_n: int = 5) -> list[MisclassCell]:
    """Off-diagonal cells sorted by row-normalized rate, worst first.

    ``entries`` and ``predictions`` are aligned; each cell carries up to
    ``top_n`` offending image paths.
    """
    if len(entries) != len(predictions):
        raise DataError(f"{len(entries)} entries but {len(predictions)} predictions")
    rates = row_normalized(cm)
    cells = []
    for i in range(cm.k):
        for j in range(cm.k):
            if i != j and cm.counts[i, j] > 0:
                cells.append((i, j))
    cells.sort(key=lambda ij: (-rates[ij], -cm.counts[ij], ij))
    out = []
    for i, j in cells:
        paths = [e.path for e, p in zip(entries, predictions)
                 if e.label == i and p == j][:top_n]
        out.append(MisclassCell(true_name=cm.class_names[i], pred_name=cm.class_names[j],
                                count=int(cm.counts[i, j]), rate=float(rates[i, j]),
                                example_paths=paths))
    return out


def write_confusion_csv(cm: ConfusionMatrix, path) -> None:
    """Header row of class names, then K rows of K counts."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cm.class_names) + "\n")
        for row in cm.counts:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def _svg_open(title: str) -> list[str]:
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
            f'viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">',
            f'<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
            f'<text x="{SVG_W / 2}" y="22" text-anchor="middle" font-size="16">{title}</text>']


def _curve_svg(records: list[EpochRecord], field_pair: tuple[str, str],
               title: str, ylabel: str) -> str:
    epochs = [r.epoch for r in records]
    train = [getattr(r, field_pair[0]) for r in records]
    val = [getattr(r, field_pair[1]) for r in records]
    lo = min(min(train), min(val))
    hi = max(max(train), max(val))
    if hi == lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    plot_w = SVG_W - MARGIN_L - MARGIN_R
    plot_h = SVG_H - MARGIN_T - MARGIN_B
    x0, x1 = min(epochs), max(epochs)
    span = (x1 - x0) or 1

    def sx(e):
        return MARGIN_L + (e - x0) / span * plot_w

    def sy(v):
        return MARGIN_T + (hi - v) / (hi - lo) * plot_h

    def pts(values):
        return " ".join(f"{sx(e):.2f},{sy(v):.2f}" for e, v in zip(epochs, values))

    parts = _svg_open(title)
    parts.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
                 f'fill="none" stroke="#999"/>')
    for frac in (0.0, 0.5, 1.0):
        v = lo + frac * (hi - lo)
        y = sy(v)
        parts.append(f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end" '
                     f'class="ytick">{v:.4g}</text>')
    for e in (x0, (x0 + x1) // 2, x1):
        parts.append(f'<text x="{sx(e):.2f}" y="{SVG_H - MARGIN_B + 18}" '
                     f'text-anchor="middle" class="xtick">{e}</text>')
    parts.append(f'<text x="{MARGIN_L + plot_w / 2}" y="{SVG_H - 10}" '
                 f'text-anchor="middle">epoch</text>')
    parts.append(f'<polyline class="series train" fill="none" stroke="#1f77b4" '
                 f'stroke-width="2" points="{pts(train)}"/>')
    parts.append(f'<polyline class="series val" fill="none" stroke="#d62728" '
                 f'stroke-width="2" points="{pts(val)}"/>')
    ly = MARGIN_T + 12
    parts.append(f'<rect x="{SVG_W - 150}" y="{ly - 10}" width="12" height="12" fill="#1f77b4"/>')
    parts.append(f'<text x="{SVG_W - 132}" y="{ly}">train {ylabel}</text>')
    parts.append(f'<rect x="{SVG_W - 150}" y="{ly + 8}" width="12" height="12" fill="#d62728"/>')
    parts.append(f'<text x="{SVG_W - 132}" y="{ly + 18}">validation {ylabel}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _heat_color(frac: float) -> str:
    # White at 0 to a saturated blue at 1.
    r = round(255 - 205 * frac)
    g = round(255 - 155 * frac)
    b = 255
    return f"rgb({r},{g},{b})"


def confusion_svg(cm: ConfusionMatrix, title: str = "Confusion matrix") -> str:
    k = cm.k
    rates = row_normalized(cm)
    label_w, top = 110, 90
    cell = max(18, min(46, (SVG_W - label_w - 20) // max(k, 1)))
    width = label_w + cell * k + 20
    height = top + cell * k + 30
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="15">{title}</text>']
    for j, name in enumerate(cm.class_names):
        x = label_w + j * cell + cell / 2
        parts.append(f'<text class="xlabel" x="{x}" y="{top - 8}" text-anchor="start" '
                     f'transform="rotate(-50 {x} {top - 8})">{name}</text>')
    for i, name in enumerate(cm.class_names):
        y = top + i * cell + cell / 2 + 4
        parts.append(f'<text class="ylabel" x="{label_w - 6}" y="{y}" '
                     f'text-anchor="end">{name}</text>')
    for i in range(k):
        for j in range(k):
            x = label_w + j * cell
            y = top + i * cell
            frac = rates[i, j]
            parts.append(f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="{_heat_color(frac)}" stroke="#ccc"/>')
            if cm.counts[i, j]:
                dark = "#000" if frac < 0.6 else "#fff"
                parts.append(f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" '
                             f'text-anchor="middle" fill="{dark}">{frac * 100:.0f}</text>')
    parts.append(f'<text x="{label_w + cell * k / 2}" y="{height - 8}" '
                 f'text-anchor="middle">predicted (values are row %)</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_curves(records: list[EpochRecord], out_dir) -> list[Path]:
    if not records:
        raise DataError("no epoch records to plot")
    out = Path(out_dir)
    written = []
    for fname, fields, title, ylab in (
            ("loss.svg", ("train_loss", "val_loss"), "Loss", "loss"),
            ("accuracy.svg", ("train_accuracy", "val_accuracy"), "Accuracy", "accuracy")):
        path = out / fname
        path.write_text(_curve_svg(records, fields, title, ylab), encoding="utf-8")
        written.append(path)
    return written


def plot_confusion(cm: ConfusionMatrix, out_dir, stem: str = "confusion_matrix") -> list[Path]:
    out = Path(out_dir)
    svg = out / f"{stem}.svg"
    svg.write_text(confusion_svg(cm), encoding="utf-8")
    csvp = out / f"{stem}.csv"
    write_confusion_csv(cm, csvp)
    return [svg, csvp]


def emit_plots(records: list[EpochRecord], cm, out_dir) -> list[Path]:
    """Write curve SVGs plus metrics.csv, and the matrix pair when given."""
    if not records:
        raise DataError("no epoch records to plot")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = plot_curves(records, out)
        write_metrics_csv(records, out / "metrics.csv")
        written.append(out / "metrics.csv")
        if cm is not None:
            written.extend(plot_confusion(cm, out))
    except OSError as exc:
        raise DataError(f"cannot write plots to {out}: {exc}") from exc
    return written
