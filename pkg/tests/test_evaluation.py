import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colorscreen.evaluation import (ENRICHMENT_FPRS, EmptySignTest, aggregate, auc, metric_record, roc_auc,
                                    roc_curve, roc_enrichment, sign_test_ci, stratified_kfold, tpr_at,
                                    wilson_interval)


def pair_count_auc(scores, labels):
    s, y = np.asarray(scores, float), np.asarray(labels)
    pos, neg = s[y == 1], s[y == 0]
    diff = pos[:, None] - neg[None, :]
    return ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size


def wilson_quadratic(k, n, z):
    """Roots of (k/n - p)^2 = z^2 p (1 - p) / n."""
    ph = k / n
    a = 1 + z * z / n
    b = -(2 * ph + z * z / n)
    c = ph * ph
    disc = math.sqrt(max(b * b - 4 * a * c, 0.0))
    return (-b - disc) / (2 * a), (-b + disc) / (2 * a)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=60))
def test_auc_equals_pair_counting(pairs):
    scores = [p[0] for p in pairs]
    labels = [int(p[1]) for p in pairs]
    if len(set(labels)) < 2:
        return
    assert roc_auc(scores, labels) == pytest.approx(pair_count_auc(scores, labels), abs=1e-12)


def test_auc_alternating_case():
    assert roc_auc([4, 3, 2, 1], [1, 0, 1, 0]) == 0.75


def test_auc_matches_sklearn(rng):
    from sklearn.metrics import roc_auc_score
    s = rng.integers(0, 20, 300)
    y = rng.integers(0, 2, 300)
    assert roc_auc(s, y) == pytest.approx(roc_auc_score(y, s), abs=1e-12)


def test_curve_endpoints_and_ties():
    c = roc_curve([1, 1, 1, 1], [1, 0, 1, 0])
    assert c.points == [(0.0, 0.0), (1.0, 1.0)]
    assert auc(c) == 0.5


def test_curve_requires_both_classes():
    with pytest.raises(ValueError):
        roc_curve([1, 2], [1, 1])
    with pytest.raises(ValueError):
        roc_curve([1, 2, 3], [1, 0])


def test_perfect_enrichment():
    y = np.r_[np.ones(10), np.zeros(400)]
    s = np.r_[np.arange(10) + 1000, np.arange(400)]
    c = roc_curve(s, y)
    for x in ENRICHMENT_FPRS:
        assert roc_enrichment(c, x) == pytest.approx(1 / x, abs=1e-9)


def test_diagonal_enrichment():
    # one shared score: the curve is the diagonal
    c = roc_curve(np.zeros(100), np.r_[np.ones(50), np.zeros(50)])
    for x in ENRICHMENT_FPRS:
        assert roc_enrichment(c, x) == pytest.approx(1.0, abs=1e-12)


def test_tpr_interpolation():
    # vertices (0,0) (0,0.5) (0.5,0.5) (0.5,1) (1,1)
    c = roc_curve([3, 2, 1, 0], [1, 0, 1, 0])
    assert tpr_at(c, 0.25) == pytest.approx(0.5)
    assert tpr_at(c, 0.5) == 1.0  # vertical segment: upper end
    # tie block (0,0) -> (1,1) is interpolated linearly
    assert tpr_at(roc_curve([1, 1], [1, 0]), 0.25) == pytest.approx(0.25)


def test_metric_record_keys():
    rec = metric_record([3, 2, 1, 0], [1, 0, 1, 0])
    assert set(rec) == {"auc", "E_0.005", "E_0.01", "E_0.02", "E_0.05"}


def test_wilson_matches_closed_form():
    for n in (1, 2, 7, 30, 200):
        for k in range(n + 1):
            lo, hi = wilson_interval(k, n)
            elo, ehi = wilson_quadratic(k, n, 1.959964)
            assert lo == pytest.approx(max(elo, 0), abs=1e-10)
            assert hi == pytest.approx(min(ehi, 1), abs=1e-10)


def test_wilson_matches_statsmodels():
    from statsmodels.stats.proportion import proportion_confint
    for n, k in [(10, 3), (30, 30), (30, 0), (57, 41)]:
        lo, hi = proportion_confint(k, n, alpha=0.05, method="wilson")
        assert wilson_interval(k, n) == pytest.approx((lo, hi), abs=1e-7)


def test_sign_test_drops_zeros():
    assert sign_test_ci([0.1, 0.0, -0.2, 0.3, 0.0]) == wilson_interval(2, 3)
    with pytest.raises(EmptySignTest):
        sign_test_ci([0.0, 0.0])


@given(st.lists(st.integers(0, 1), min_size=10, max_size=80), st.integers(2, 5), st.integers(0, 10))
def test_stratified_folds(labels, k, seed):
    y = np.array(labels)
    _, counts = np.unique(y, return_counts=True)
    if counts.min() < k:
        with pytest.raises(ValueError):
            stratified_kfold(y, k, seed)
        return
    f = stratified_kfold(y, k, seed)
    for c in np.unique(y):
        per = np.bincount(f[y == c], minlength=k)
        assert per.max() - per.min() <= 1
    sizes = np.bincount(f, minlength=k)
    assert sizes.max() - sizes.min() <= 1
    assert np.array_equal(f, stratified_kfold(y, k, seed))


def _records():
    recs = []
    for d, (base, better) in enumerate([(0.5, 0.7), (0.6, 0.6), (0.55, 0.8)]):
        for fold in range(2):
            for method, v in (("B", base), ("M", better + 0.01 * fold)):
                recs.append({"method": method, "dataset": f"d{d}", "query": "q", "fold": fold, "auc": v})
    return recs


def test_aggregate_medians_and_ci():
    summary = aggregate(_records(), baseline="B", metrics=["auc"])
    assert summary["B"]["n_units"] == 3
    assert summary["B"]["median"]["auc"] == pytest.approx(0.55)
    m = summary["M"]
    assert m["median"]["auc"] == pytest.approx(0.705)
    assert m["median_delta"]["auc"] == pytest.approx(0.205)
    lo, hi = wilson_interval(3, 3)
    assert m["sign_test_ci"]["auc"] == {"lo": lo, "hi": hi, "empty": False}


def test_aggregate_empty_sign_test():
    recs = [{"method": m, "dataset": "d", "query": "q", "fold": 0, "auc": 0.5} for m in ("B", "M")]
    assert aggregate(recs, baseline="B", metrics=["auc"])["M"]["sign_test_ci"]["auc"]["empty"]


def test_aggregate_missing_baseline_unit():
    recs = _records() + [{"method": "M", "dataset": "extra", "query": "q", "fold": 0, "auc": 0.9}]
    with pytest.raises(ValueError, match="baseline"):
        aggregate(recs, baseline="B", metrics=["auc"])
