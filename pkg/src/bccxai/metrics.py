"""Confusion-matrix metrics, per-fold aggregation and the clinical-group evaluation.

Undefined ratios (zero denominator) are ``None`` in Python and the string
``"undefined"`` once serialized; they are never folded into 0 or NaN.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .core import DiagnosisGroup, Pattern, as_vector
from .errors import AllUndefined, EmptyCounts, LengthMismatch, MissingImage
from .rules import binary_of, group_of, Diagnosis

METRICS = ("recall", "specificity", "precision", "accuracy")
UNDEFINED = "undefined"

BINARY_TARGET = "binary"
GROUP_TARGETS = tuple(g.value for g in DiagnosisGroup)
PATTERN_TARGETS = tuple(p.code for p in Pattern)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def confusion(pred: Sequence[bool], truth: Sequence[bool]) -> ConfusionCounts:
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth) or not pred:
        raise LengthMismatch(
            "pred and truth must have equal non-zero length", pred=len(pred), truth=len(truth)
        )
    tp = fp = tn = fn = 0
    for p, t in zip(pred, truth):
        p, t = bool(p), bool(t)
        if p and t:
            tp += 1
        elif p:
            fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, tn, fn)


def _ratio(num, den):
    return num / den if den else None


def metrics_of(c: ConfusionCounts) -> dict[str, float | None]:
    if c.total == 0:
        raise EmptyCounts("no samples were evaluated")
    return {
        "recall": _ratio(c.tp, c.tp + c.fn),
        "specificity": _ratio(c.tn, c.tn + c.fp),
        "precision": _ratio(c.tp, c.tp + c.fp),
        "accuracy": (c.tp + c.tn) / c.total,
    }


@dataclass(frozen=True)
class Aggregate:
    """Cross-fold mean and population variance of one metric."""

    mean: float
    variance: float
    n_folds: int
    excluded: int = 0

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "n_folds": self.n_folds, "excluded": self.excluded}


def fold_aggregate(per_fold: Sequence[Mapping[str, float | None]], metrics=None) -> dict[str, Aggregate]:
    """Mean and population variance of each metric over folds.

    Folds where a metric is undefined are left out of that metric and counted
    in ``excluded``. A metric undefined in every fold raises ``AllUndefined``.
    """
    if not per_fold:
        raise ValueError("need at least one fold")
    metrics = metrics or list(per_fold[0])
    out = {}
    for m in metrics:
        vals = [f[m] for f in per_fold if f.get(m) is not None]
        if not vals:
            raise AllUndefined(f"{m} is undefined in every fold", metric=m)
        # sorted so the float sums do not depend on fold order
        vals.sort()
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / len(vals)
        out[m] = Aggregate(mean, var, len(vals), len(per_fold) - len(vals))
    return out


def _one_vs_rest(pred_groups, sr_groups, g):
    return confusion([p is g for p in pred_groups], [s is g for s in sr_groups])


def xai_group_eval(pred_vectors: Sequence, sr_vectors: Sequence) -> dict[str, dict]:
    """Evaluate the three clinical explanation groups.

    For every group ``g``: ``n`` is the number of samples whose reference
    falls in ``g``; ``group_accuracy`` is the fraction of those predicted in
    ``g`` (None when ``n`` is 0); ``counts``/``metrics`` describe the
    one-vs-rest task "is in g", which for ``BccPattern`` is BCC pattern
    detection.
    """
    if len(pred_vectors) != len(sr_vectors):
        raise LengthMismatch("prediction and reference lengths differ", pred=len(pred_vectors), sr=len(sr_vectors))
    pred_groups = [group_of(as_vector(v)) for v in pred_vectors]
    sr_groups = [group_of(as_vector(v)) for v in sr_vectors]
    out = {}
    for g in DiagnosisGroup:
        n = sum(s is g for s in sr_groups)
        hit = sum(s is g and p is g for p, s in zip(pred_groups, sr_groups))
        counts = _one_vs_rest(pred_groups, sr_groups, g) if pred_groups else ConfusionCounts()
        out[g.value] = {
            "n": n,
            "group_accuracy": hit / n if n else None,
            "counts": counts,
            "metrics": metrics_of(counts) if counts.total else dict.fromkeys(METRICS),
        }
    return out


@dataclass
class TargetResult:
    """Per-fold counts/metrics of one evaluation target and their aggregate."""

    name: str
    fold_counts: dict[int, ConfusionCounts] = field(default_factory=dict)
    fold_metrics: dict[int, dict[str, float | None]] = field(default_factory=dict)
    aggregate: dict[str, Aggregate | None] = field(default_factory=dict)

    @property
    def pooled(self) -> ConfusionCounts:
        total = ConfusionCounts()
        for c in self.fold_counts.values():
            total = total + c
        return total

    def to_dict(self) -> dict:
        def val(v):
            return UNDEFINED if v is None else v

        return {
            "pooled_counts": self.pooled.to_dict(),
            "folds": {
                str(k): {"counts": self.fold_counts[k].to_dict(), **{m: val(v) for m, v in self.fold_metrics[k].items()}}
                for k in sorted(self.fold_counts)
            },
            "aggregate": {m: UNDEFINED if a is None else a.to_dict() for m, a in self.aggregate.items()},
        }


@dataclass
class MetricsReport:
    folds: tuple[int, ...]
    n_images: int
    targets: dict[str, TargetResult]

    def cell(self, target: str, metric: str):
        agg = self.targets[target].aggregate.get(metric)
        return None if agg is None else (agg.mean, agg.variance)

    def table_cells(self) -> dict[str, dict[str, object]]:
        """Cells of the three-block table: ``(mean, variance)``, None or ``"-"``."""
        cells = {}
        for t in (BINARY_TARGET, *PATTERN_TARGETS):
            cells[t] = {m: self.cell(t, m) for m in METRICS}
        # no-pattern row: only the group accuracy is meaningful
        cells[DiagnosisGroup.NO_PATTERN.value] = {
            "recall": "-",
            "specificity": "-",
            "precision": "-",
            "accuracy": self.cell(DiagnosisGroup.NO_PATTERN.value, "group_accuracy"),
        }
        for g in (DiagnosisGroup.PIGMENT_NETWORK_ONLY, DiagnosisGroup.BCC_PATTERN):
            cells[g.value] = {m: self.cell(g.value, m) for m in METRICS}
        return cells

    def to_dict(self) -> dict:
        return {
            "n_images": self.n_images,
            "folds": list(self.folds),
            "variance": "population",
            "targets": {name: t.to_dict() for name, t in self.targets.items()},
        }


def evaluate(pred: Mapping[str, object], sr: Mapping[str, object], folds: Mapping[str, int]) -> MetricsReport:
    """Binary, per-pattern and clinical-group metrics per fold, then aggregated.

    Every image in ``pred`` must appear in ``sr`` and ``folds``.
    """
    missing = sorted(set(pred) - set(sr))
    if missing:
        raise MissingImage("predicted images without a reference label", images=missing[:20], count=len(missing))
    missing = sorted(set(pred) - set(folds))
    if missing:
        raise MissingImage("predicted images without a fold", images=missing[:20], count=len(missing))
    if not pred:
        raise EmptyCounts("no predictions to evaluate")

    by_fold: dict[int, list[str]] = {}
    for img in sorted(pred):
        by_fold.setdefault(int(folds[img]), []).append(img)

    targets = {name: TargetResult(name) for name in (BINARY_TARGET, *PATTERN_TARGETS, *GROUP_TARGETS)}
    for k, imgs in sorted(by_fold.items()):
        pv = [as_vector(pred[i]) for i in imgs]
        sv = [as_vector(sr[i]) for i in imgs]
        c = confusion([binary_of(v) is Diagnosis.BCC for v in pv], [binary_of(v) is Diagnosis.BCC for v in sv])
        targets[BINARY_TARGET].fold_counts[k] = c
        targets[BINARY_TARGET].fold_metrics[k] = metrics_of(c)
        for p in Pattern:
            c = confusion([v[p] for v in pv], [v[p] for v in sv])
            targets[p.code].fold_counts[k] = c
            targets[p.code].fold_metrics[k] = metrics_of(c)
        for g, res in xai_group_eval(pv, sv).items():
            targets[g].fold_counts[k] = res["counts"]
            targets[g].fold_metrics[k] = {**res["metrics"], "group_accuracy": res["group_accuracy"]}

    for t in targets.values():
        per_fold = [t.fold_metrics[k] for k in sorted(t.fold_metrics)]
        for m in per_fold[0]:
            try:
                t.aggregate[m] = fold_aggregate(per_fold, [m])[m]
            except AllUndefined:
                t.aggregate[m] = None
    return MetricsReport(tuple(sorted(by_fold)), len(pred), targets)
