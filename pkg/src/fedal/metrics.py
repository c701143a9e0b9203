"""Multi-class evaluation: F1 variants, one-vs-rest AUC, paired t-test.

Conventions: a class whose F1 denominator is zero contributes 0 to the
macro mean; AUC ties earn 0.5 credit per pair (Mann-Whitney); classes
absent from the truth are skipped in the AUC macro; a paired t-test on
identical samples reports p = 1.0.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import stdtr
from scipy.stats import rankdata

from . import model
from .errors import DomainError

MACRO_CLIENT = "macro"


def confusion_matrix(y_true, y_pred, num_classes) -> np.ndarray:
    """Count matrix: entry (i, j) is true class i predicted as j."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DomainError("y_true and y_pred must be 1-D and equally long")
    for name, y in (("y_true", y_true), ("y_pred", y_pred)):
        if y.size and (y.min() < 0 or y.max() >= num_classes):
            raise DomainError(f"{name} contains labels outside [0, {num_classes})")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _check_cm(cm):
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.sum() == 0:
        raise DomainError("confusion matrix must be square and nonempty")
    return cm


def micro_f1(cm) -> float:
    """F1 over pooled TP/FP/FN; equals accuracy for single-label data."""
    cm = _check_cm(cm)
    tp = np.trace(cm)
    fp = cm.sum() - tp
    fn = fp
    return float(2 * tp / (2 * tp + fp + fn))


def per_class_f1(cm) -> np.ndarray:
    cm = _check_cm(cm)
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    out = np.zeros(cm.shape[0])
    nonzero = denom > 0
    out[nonzero] = 2 * tp[nonzero] / denom[nonzero]
    return out


def macro_f1(cm) -> float:
    """Unweighted mean of per-class F1 over all classes."""
    return float(per_class_f1(cm).mean())


def _binary_auc(scores, positives):
    """Mann-Whitney AUC of scores for the positive mask, ties at 0.5."""
    n_pos = int(positives.sum())
    n_neg = len(positives) - n_pos
    ranks = rankdata(scores)
    u = ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auc_ovr_macro(y_true, prob_matrix) -> float:
    """One-vs-rest AUC per class present in y_true, averaged uniformly."""
    y_true = np.asarray(y_true, dtype=np.int64)
    prob_matrix = np.asarray(prob_matrix, dtype=np.float64)
    if prob_matrix.ndim != 2 or prob_matrix.shape[0] != len(y_true):
        raise DomainError("prob_matrix must be (n, C) matching y_true")
    present = np.unique(y_true)
    if len(present) < 2:
        raise DomainError("AUC needs at least two classes present in y_true")
    aucs = [_binary_auc(prob_matrix[:, c], y_true == c) for c in present]
    return float(np.mean(aucs))


@dataclass(frozen=True)
class EvalRecord:
    client_id: object  # int client index or "macro"
    round: int
    sample_ratio: float
    micro_f1: float
    macro_f1: float
    auc: float
    per_class_f1: tuple


def evaluate_model(params, features, labels, client_id, round_index,
                   sample_ratio) -> EvalRecord:
    """Score a model on one split; AUC is NaN when only one class occurs."""
    probs = model.predict_proba(params, features)
    preds = probs.argmax(axis=1)
    cm = confusion_matrix(labels, preds, params.num_classes)
    if len(np.unique(labels)) >= 2:
        auc = auc_ovr_macro(labels, probs)
    else:
        auc = float("nan")
    return EvalRecord(
        client_id=client_id,
        round=round_index,
        sample_ratio=sample_ratio,
        micro_f1=micro_f1(cm),
        macro_f1=macro_f1(cm),
        auc=auc,
        per_class_f1=tuple(per_class_f1(cm)),
    )


def cross_client_macro(records) -> EvalRecord:
    """Unweighted mean of every metric across client records.

    AUC averages over clients where it is defined (all-NaN stays NaN).
    """
    records = list(records)
    if not records:
        raise DomainError("need at least one client record")
    aucs = np.asarray([r.auc for r in records], dtype=np.float64)
    defined = aucs[~np.isnan(aucs)]
    return EvalRecord(
        client_id=MACRO_CLIENT,
        round=records[0].round,
        sample_ratio=float(np.mean([r.sample_ratio for r in records])),
        micro_f1=float(np.mean([r.micro_f1 for r in records])),
        macro_f1=float(np.mean([r.macro_f1 for r in records])),
        auc=float(defined.mean()) if defined.size else float("nan"),
        per_class_f1=tuple(np.mean([r.per_class_f1 for r in records], axis=0)),
    )


def paired_t_test(a, b):
    """Two-sided paired t-test. Returns (t, p); identical samples give p=1."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise DomainError("need two equal-length 1-D samples of length >= 2")
    diff = a - b
    n = len(diff)
    mean = diff.mean()
    sd = diff.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return float(np.inf if mean > 0 else -np.inf), 0.0
    t = mean / (sd / np.sqrt(n))
    p = 2.0 * float(stdtr(n - 1, -abs(t)))
    return float(t), p
