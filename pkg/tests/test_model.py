import numpy as np
import pytest

from colorscreen.colorff import ColorAtom, ColorType
from colorscreen.model import (LRModel, ScalerSpec, apply_scaler, balanced_weights, export_weights, fit_scaled,
                               fit_scaler, loss_and_grad, predict_proba, train_lr, tune_C)


def toy(rng, m_pos=20, m_neg=100, n=4):
    X = np.r_[rng.normal(0.8, 1, (m_pos, n)), rng.normal(0, 1, (m_neg, n))]
    y = np.r_[np.ones(m_pos), np.zeros(m_neg)].astype(int)
    return X, y


def test_loss_gradient_finite_differences(rng):
    X, y = toy(rng)
    s = balanced_weights(y)
    theta = rng.normal(size=X.shape[1] + 1)
    _, g = loss_and_grad(theta[:-1], theta[-1], X, y, 0.7, s)
    h = 1e-6
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        fp = loss_and_grad((theta + e)[:-1], (theta + e)[-1], X, y, 0.7, s)[0]
        fm = loss_and_grad((theta - e)[:-1], (theta - e)[-1], X, y, 0.7, s)[0]
        fd = (fp - fm) / (2 * h)
        assert abs(g[k] - fd) <= 1e-5 * max(abs(fd), 1e-3)


def test_balanced_weights():
    w = balanced_weights([1, 0, 0, 0])
    assert w.tolist() == [2.0, 2 / 3, 2 / 3, 2 / 3]
    assert w.sum() == pytest.approx(4)


def test_matches_sklearn(rng):
    from sklearn.linear_model import LogisticRegression
    X, y = toy(rng)
    model = train_lr(X, y, C=0.3)
    # sklearn minimizes C * sum(s_i loss_i) + |w|^2 / 2 with s_i = m / (2 m_c): same minimizer
    ref = LogisticRegression(C=0.3, class_weight="balanced", tol=1e-12, max_iter=10000).fit(X, y)
    assert np.allclose(model.weights, ref.coef_[0], atol=1e-5)
    assert model.bias == pytest.approx(ref.intercept_[0], abs=1e-5)
    assert model.converged


def test_balanced_equals_duplication(rng):
    X, y = toy(rng, 20, 100)
    bal = train_lr(X, y, C=1.0)
    pos = np.flatnonzero(y == 1)
    Xd = np.r_[X, np.repeat(X[pos], 4, axis=0)]
    yd = np.r_[y, np.ones(80, int)]
    # the L2 term is scaled by 1/m, so keep C*m fixed
    dup = train_lr(Xd, yd, C=1.0 * len(y) / len(yd), balanced=False)
    cos = bal.weights @ dup.weights / np.linalg.norm(bal.weights) / np.linalg.norm(dup.weights)
    assert cos > 0.999999
    assert bal.bias == pytest.approx(dup.bias, abs=1e-6)


def test_retrain_bit_identical(rng):
    X, y = toy(rng)
    a, b = train_lr(X, y, 2.0, seed=1), train_lr(X, y, 2.0, seed=1)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


def test_bias_unregularized(rng):
    X, y = toy(rng)
    m = train_lr(X + 100.0, y, C=1e-4)
    assert np.all(np.abs(m.weights) < 0.05)
    p = predict_proba(m, X + 100.0)
    assert p.mean() == pytest.approx(0.5, abs=0.05)  # balanced weights push the intercept to the midpoint


def test_separable_data_stops(rng):
    X = np.r_[np.full((5, 1), 1.0), np.full((5, 1), -1.0)]
    y = np.r_[np.ones(5), np.zeros(5)].astype(int)
    m = train_lr(X, y, C=1e4, max_iters=500)
    assert np.isfinite(m.weights).all() and m.weights[0] > 0


def test_rejects_bad_input(rng):
    with pytest.raises(ValueError, match="single class"):
        train_lr(np.ones((3, 2)), [1, 1, 1])
    with pytest.raises(ValueError, match="non-finite"):
        train_lr(np.array([[np.nan], [1.0]]), [0, 1])


@pytest.mark.parametrize("kind", ["none", "max_abs", "standard"])
def test_scalers(rng, kind):
    X = rng.normal(3, 5, (50, 3))
    X[:, 2] = 0.0
    spec = fit_scaler(kind, X)
    Z = apply_scaler(spec, X)
    assert np.isfinite(Z).all()
    if kind == "max_abs":
        assert np.abs(Z[:, :2]).max(axis=0) == pytest.approx(1.0)
    if kind == "standard":
        assert Z[:, :2].mean(axis=0) == pytest.approx(0, abs=1e-12)
        assert Z[:, :2].std(axis=0) == pytest.approx(1)
    assert ScalerSpec.from_dict(spec.to_dict()) == spec


def test_json_roundtrip_and_prediction(rng):
    X, y = toy(rng)
    m = fit_scaled(X, y, 1.0, "standard", layout="ST-CT")
    m2 = LRModel.from_json(m.to_json())
    assert np.allclose(m.decision_function(X), m2.decision_function(X))
    with pytest.raises(ValueError, match="features"):
        m.decision_function(np.ones((1, 7)))


def test_tune_c_picks_from_grid(rng):
    X, y = toy(rng)
    grid = (0.01, 1.0, 100.0)
    assert tune_C(X, y, grid) in grid
    assert tune_C(X, y, (5.0,)) == 5.0


def test_tune_c_ties_prefer_smallest():
    # one perfectly separating feature: every C gives inner AUC 1
    X = np.r_[np.linspace(1, 2, 9), np.linspace(-2, -1, 9)][:, None]
    y = np.r_[np.ones(9), np.zeros(9)].astype(int)
    assert tune_C(X, y, (100.0, 1.0, 0.01)) == 0.01


def test_export_weights():
    cas = [ColorAtom(ColorType.DONOR, (0, 0, 0)), ColorAtom(ColorType.RING, (1, 2, 3))]
    m = LRModel(np.array([0.5, -1.0, 2.0]), 0.1, 1.0, layout="ST-CAO")
    out = export_weights(m, cas)
    assert out["shape_feature"] == "ST" and out["shape_weight"] == 0.5
    assert [(c["type"], c["weight"]) for c in out["color_atoms"]] == [("donor", -1.0), ("ring", 2.0)]
    assert out["color_atoms"][1]["position"] == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        export_weights(LRModel(np.zeros(2), 0.0, 1.0, layout="ST-CT"), cas)
    with pytest.raises(ValueError):
        export_weights(m, cas[:1])
