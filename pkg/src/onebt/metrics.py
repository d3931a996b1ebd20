"""Classification metrics and fold aggregation.

Conventions, all configurable: confusion rows are true labels and columns
predictions; the positive class is "hard" (label 1); precision/F1 are
binary on the positive class (macro available); the ± bands are population
standard deviations. Scores are kept as fractions in [0, 1] and scaled by
100 only when rendered.
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

__all__ = [
    "Metrics", "FoldResult", "RunSummary",
    "confusion_matrix", "compute_metrics", "fold_result",
    "aggregate", "cross_task_mean", "fmt_mean_std",
    "render_table", "write_records",
]


@dataclass
class Metrics:
    accuracy: float
    precision: float
    f1: float
    degenerate: bool = False    # a zero denominator was replaced by score 0


@dataclass
class FoldResult:
    fold_id: int                # held-out subject
    confusion: np.ndarray       # 2x2, rows true / cols predicted
    accuracy: float
    precision: float
    f1: float
    degenerate: bool = False


@dataclass
class RunSummary:
    config_id: str
    task: int | None
    n_folds: int
    accuracy_mean: float
    accuracy_std: float
    precision_mean: float
    precision_std: float
    f1_mean: float
    f1_std: float
    cross_task_mean: float | None = None

    def metric_means(self):
        return (self.accuracy_mean, self.precision_mean, self.f1_mean)


def confusion_matrix(y_true, y_pred, n_classes=2):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (y_true, y_pred), 1)
    return conf


def _prec_f1(conf, positive):
    tp = conf[positive, positive]
    fp = conf[:, positive].sum() - tp
    fn = conf[positive, :].sum() - tp
    degenerate = False
    if tp + fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = tp / (tp + fp)
    recall = 0.0 if tp + fn == 0 else tp / (tp + fn)
    if precision + recall == 0:
        f1, degenerate = 0.0, True
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return float(precision), float(f1), degenerate


def compute_metrics(conf, positive=1, average="binary"):
    """Accuracy, precision and F1 from a confusion matrix.

    average="binary" scores the positive class; "macro" averages the
    per-class scores. Zero denominators give 0 and set the degenerate flag.
    """
    conf = np.asarray(conf)
    if conf.ndim != 2 or conf.shape[0] != conf.shape[1] or conf.size == 0:
        raise ValueError(f"confusion matrix must be square and nonempty, got {conf.shape}")
    if (conf < 0).any():
        raise ValueError("confusion matrix entries must be nonnegative")
    total = conf.sum()
    if total == 0:
        raise ValueError("confusion matrix is all zeros")
    accuracy = float(np.trace(conf) / total)
    if average == "binary":
        precision, f1, degenerate = _prec_f1(conf, positive)
    elif average == "macro":
        parts = [_prec_f1(conf, k) for k in range(conf.shape[0])]
        precision = float(np.mean([p for p, _, _ in parts]))
        f1 = float(np.mean([f for _, f, _ in parts]))
        degenerate = any(d for _, _, d in parts)
    else:
        raise ValueError(f"unknown average {average!r}")
    return Metrics(accuracy, precision, f1, degenerate)


def fold_result(fold_id, conf, positive=1, average="binary"):
    m = compute_metrics(conf, positive, average)
    return FoldResult(fold_id, np.asarray(conf), m.accuracy, m.precision,
                      m.f1, m.degenerate)


def aggregate(folds, config_id="", task=None, std="population"):
    """Mean and spread of each metric over folds."""
    if not folds:
        raise ValueError("aggregate needs at least one fold")
    if std not in ("population", "sample"):
        raise ValueError(f"std must be 'population' or 'sample', got {std!r}")
    ddof = 0 if std == "population" else 1
    vals = {name: np.array([getattr(f, name) for f in folds])
            for name in ("accuracy", "precision", "f1")}
    sd = {name: (0.0 if len(folds) == 1 else float(v.std(ddof=ddof)))
          for name, v in vals.items()}
    return RunSummary(
        config_id=config_id, task=task, n_folds=len(folds),
        accuracy_mean=float(vals["accuracy"].mean()), accuracy_std=sd["accuracy"],
        precision_mean=float(vals["precision"].mean()), precision_std=sd["precision"],
        f1_mean=float(vals["f1"].mean()), f1_std=sd["f1"],
    )


def cross_task_mean(summaries):
    """Mean of the nine per-task metric means (3 tasks x 3 metrics)."""
    if len(summaries) != 3:
        raise ValueError(f"cross_task_mean needs exactly 3 task summaries, got {len(summaries)}")
    nine = [m for s in summaries for m in s.metric_means()]
    return float(np.mean(nine))


# ---------------------------------------------------------------------------
# rendering

def fmt_mean_std(mean, std):
    return f"{100 * mean:.2f} ± {100 * std:.2f}"


def render_table(headers, rows):
    """Aligned plain-text table; every cell is str()-ed."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for j, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def write_records(path, records):
    """Line-delimited JSON, one record per line, keys sorted."""
    def clean(v):
        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, (np.integer, np.floating)):
            return v.item()
        return v

    with open(path, "w") as f:
        for rec in records:
            if hasattr(rec, "__dataclass_fields__"):
                rec = asdict(rec)
            f.write(json.dumps({k: clean(v) for k, v in rec.items()}, sort_keys=True) + "\n")
