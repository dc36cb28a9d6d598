"""Multi-class evaluation: confusion matrix, precision/recall/F1, one-vs-rest ROC/AUC."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class ClassMetrics:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    undefined: dict       # metric name -> list of class ids where 0/0 occurred

    def average(self, kind: str = "weighted") -> dict:
        if kind == "macro":
            w = np.full(self.support.shape, 1.0 / max(len(self.support), 1))
        elif kind == "weighted":
            total = self.support.sum()
            w = self.support / total if total else np.zeros(self.support.shape)
        else:
            raise ValueError("kind must be 'macro' or 'weighted'")
        return {"precision": float(w @ self.precision), "recall": float(w @ self.recall),
                "f1": float(w @ self.f1)}


@dataclass(frozen=True, eq=False)
class RocCurve:
    class_id: int
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray   # thresholds[0] = +inf for the (0, 0) point
    auc: float               # NaN when the class has no positives or no negatives


@dataclass(eq=False)
class EvaluationReport:
    confusion: np.ndarray
    per_class: ClassMetrics
    curves: list
    auc: np.ndarray
    weighted_auc: float
    train_time_seconds: float | None = None
    feature_importances: np.ndarray | None = None
    flags: list = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0


def confusion(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """``M[t, p]`` = number of rows of true class ``t`` predicted as ``p``."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError("label vectors differ in length")
    if t.size and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= n_classes):
        raise ValueError("label out of range")
    return np.bincount(t * n_classes + p, minlength=n_classes * n_classes).reshape(n_classes, n_classes)


def _safe_div(num, den):
    out = np.zeros_like(num, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


def prf(M) -> ClassMetrics:
    """Per-class precision, recall and F1; 0/0 yields 0 and is flagged."""
    M = np.asarray(M)
    tp = np.diag(M).astype(float)
    pred = M.sum(axis=0).astype(float)
    true = M.sum(axis=1).astype(float)
    precision = _safe_div(tp, pred)
    recall = _safe_div(tp, true)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    undefined = {
        "precision": np.flatnonzero(pred == 0).tolist(),
        "recall": np.flatnonzero(true == 0).tolist(),
        "f1": np.flatnonzero(precision + recall == 0).tolist(),
    }
    return ClassMetrics(precision, recall, f1, true.astype(np.int64), undefined)


def roc_curve(binary_truth, scores, class_id: int = 0) -> RocCurve:
    """ROC points for a binary problem; tied scores form one (diagonal) step."""
    y = np.asarray(binary_truth, dtype=bool)
    s = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of each tie group
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1] if s.size else np.array([], int)
    tps = np.cumsum(y)[ends] if s.size else np.array([])
    fps = (ends + 1) - tps
    P, N = int(y.sum()), int((~y).sum())
    tps = np.r_[0, tps].astype(float)
    fps = np.r_[0, fps].astype(float)
    thresholds = np.r_[np.inf, s[ends]] if s.size else np.array([np.inf])
    if P == 0 or N == 0:
        # no ranking to measure; emit the chance diagonal so endpoints still hold
        low = s[-1] if s.size else -np.inf
        return RocCurve(class_id, np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                        np.array([np.inf, low]), float("nan"))
    tpr, fpr = tps / P, fps / N
    return RocCurve(class_id, fpr, tpr, thresholds, float(np.trapezoid(tpr, fpr)))


def roc_auc(true_labels, score_matrix) -> tuple[list, np.ndarray, float, list]:
    """One-vs-rest ROC curves and AUCs.

    Returns ``(curves, per_class_auc, weighted_auc, undefined_classes)``.
    Classes lacking positives or negatives get AUC ``NaN`` and are left out
    of the support-weighted mean.
    """
    y = np.asarray(true_labels, dtype=np.int64)
    S = np.asarray(score_matrix, dtype=float)
    if not np.all(np.isfinite(S)):
        raise ValueError("scores must be finite")
    C = S.shape[1]
    curves = [roc_curve(y == c, S[:, c], c) for c in range(C)]
    auc = np.array([c.auc for c in curves])
    support = np.bincount(y, minlength=C).astype(float)
    ok = ~np.isnan(auc)
    undefined = np.flatnonzero(~ok).tolist()
    den = support[ok].sum()
    weighted = float(support[ok] @ auc[ok] / den) if den > 0 else float("nan")
    return curves, auc, weighted, undefined


def evaluate(true_labels, score_matrix, n_classes: int | None = None,
             train_time_seconds=None, feature_importances=None) -> EvaluationReport:
    """Full report from scores; predictions are the arg-max (ties -> lowest id)."""
    S = np.asarray(score_matrix, dtype=float)
    C = S.shape[1] if n_classes is None else n_classes
    y = np.asarray(true_labels, dtype=np.int64)
    M = confusion(y, np.argmax(S, axis=1), C)
    pc = prf(M)
    curves, auc, wauc, undefined = roc_auc(y, S)
    flags = [f"{k}_undefined:{c}" for k, v in pc.undefined.items() for c in v]
    flags += [f"auc_undefined:{c}" for c in undefined]
    return EvaluationReport(M, pc, curves, auc, wauc, train_time_seconds, feature_importances, flags)


def timed_fit(spec, train, *args, **kwargs):
    """``learners.fit`` with wall-clock timing on a monotonic clock.

    Returns ``(model, seconds)``; exceptions propagate and no time is recorded.
    """
    from .learners import fit

    t0 = time.perf_counter()
    model = fit(spec, train, *args, **kwargs)
    return model, time.perf_counter() - t0
