"""ROC statistics, stratified folds, sign-test intervals and result aggregation."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

ENRICHMENT_FPRS = (0.005, 0.01, 0.02, 0.05)
WILSON_Z = 1.959964


@dataclass(frozen=True)
class ROCCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _check_labels(labels) -> np.ndarray:
    y = np.asarray(labels).astype(int).ravel()
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    if y.min() == y.max():
        raise ValueError("ROC analysis needs both positive and negative labels")
    return y


def roc_curve(scores, labels) -> ROCCurve:
    """ROC vertices over descending distinct score thresholds, from (0, 0) to (1, 1).

    Tied scores share one threshold, so a block of ties becomes a single
    diagonal segment.
    """
    y = _check_labels(labels)
    s = np.asarray(scores, dtype=float).ravel()
    if len(s) != len(y):
        raise ValueError("scores and labels differ in length")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    fpr = np.r_[0.0, fp / fp[-1]]
    tpr = np.r_[0.0, tp / tp[-1]]
    return ROCCurve(fpr, tpr, np.r_[np.inf, s[last]])


def auc(curve: ROCCurve) -> float:
    """Trapezoidal area under the curve."""
    x, y = curve.fpr, curve.tpr
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1])) / 2.0)


def roc_auc(scores, labels) -> float:
    return auc(roc_curve(scores, labels))


def tpr_at(curve: ROCCurve, fpr_target: float) -> float:
    """TPR at ``fpr_target`` by linear interpolation between bracketing vertices.

    On a vertical segment (several vertices at the target FPR) the highest
    TPR is taken.
    """
    x, y = curve.fpr, curve.tpr
    i = int(np.searchsorted(x, fpr_target, side="right")) - 1
    if x[i] == fpr_target or i == len(x) - 1:
        return float(y[i])
    j = i + 1
    return float(y[i] + (y[j] - y[i]) * (fpr_target - x[i]) / (x[j] - x[i]))


def roc_enrichment(curve: ROCCurve, fpr_target: float) -> float:
    if not 0.0 < fpr_target < 1.0:
        raise ValueError("fpr_target must lie strictly between 0 and 1")
    return tpr_at(curve, fpr_target) / fpr_target


def metric_record(scores, labels, fprs: Sequence[float] = ENRICHMENT_FPRS) -> Dict[str, float]:
    """AUC plus ROC enrichment at each FPR, keyed ``auc`` and ``E_<fpr>``."""
    curve = roc_curve(scores, labels)
    rec = {"auc": auc(curve)}
    for x in fprs:
        rec[f"E_{x:g}"] = roc_enrichment(curve, x)
    return rec


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> np.ndarray:
    """Fold index per sample. Each class is shuffled and dealt round-robin;
    the dealing continues across classes so fold sizes also stay balanced."""
    y = np.asarray(labels).ravel()
    if k < 2:
        raise ValueError("k must be at least 2")
    classes, counts = np.unique(y, return_counts=True)
    if (counts < k).any():
        small = classes[counts < k].tolist()
        raise ValueError(f"classes {small} have fewer than k={k} members")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=int)
    offset = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        folds[idx] = (offset + np.arange(len(idx))) % k
        offset = (offset + len(idx)) % k
    return folds


class EmptySignTest(ValueError):
    """Raised when every difference is exactly zero."""


def wilson_interval(successes: int, n: int, z: float = WILSON_Z) -> Tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def sign_test_ci(deltas: Iterable[float], z: float = WILSON_Z) -> Tuple[float, float]:
    """95% Wilson interval for the fraction of positive differences, zeros dropped."""
    d = np.asarray(list(deltas), dtype=float)
    d = d[d != 0]
    if len(d) == 0:
        raise EmptySignTest("all differences are zero")
    return wilson_interval(int((d > 0).sum()), len(d), z)


def _median(values: List[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def aggregate(records: Sequence[Mapping], baseline: Optional[str] = None,
              metrics: Optional[Sequence[str]] = None) -> Dict:
    """Summarize per-fold metric records.

    Each record carries ``method``, ``dataset``, ``query``, ``fold`` and metric
    values. Folds are averaged per (method, dataset, query) unit; each unit
    counts once in the medians. Differences against ``baseline`` are matched
    on (dataset, query).
    """
    if metrics is None:
        metrics = ["auc"] + [f"E_{x:g}" for x in ENRICHMENT_FPRS]
    sums: Dict[Tuple[str, str, str], Dict[str, List[float]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        key = (r["method"], r["dataset"], r["query"])
        for m in metrics:
            sums[key][m].append(float(r[m]))
    units: Dict[str, Dict[Tuple[str, str], Dict[str, float]]] = defaultdict(dict)
    for (method, dataset, query) in sorted(sums):
        units[method][(dataset, query)] = {m: float(np.mean(v)) for m, v in sums[(method, dataset, query)].items()}

    if baseline is not None and baseline not in units:
        raise ValueError(f"baseline {baseline!r} has no records")
    summary: Dict[str, Dict] = {}
    for method in sorted(units):
        per = units[method]
        entry: Dict = {
            "n_units": len(per),
            "median": {m: _median([v[m] for v in per.values()]) for m in metrics},
            "units": [
                {"dataset": d, "query": q, **{m: per[(d, q)][m] for m in metrics}} for (d, q) in sorted(per)
            ],
        }
        if baseline is not None and method != baseline:
            base = units[baseline]
            missing = sorted(set(per) - set(base))
            if missing:
                raise ValueError(f"method {method!r} has units without a baseline entry: {missing[:3]}")
            deltas = {m: [per[u][m] - base[u][m] for u in sorted(per)] for m in metrics}
            entry["median_delta"] = {m: _median(deltas[m]) for m in metrics}
            ci = {}
            for m in metrics:
                try:
                    lo, hi = sign_test_ci(deltas[m])
                    ci[m] = {"lo": lo, "hi": hi, "empty": False}
                except EmptySignTest:
                    ci[m] = {"lo": None, "hi": None, "empty": True}
            entry["sign_test_ci"] = ci
        summary[method] = entry
    return summary
