"""Class-balanced L2 logistic regression with inner-CV tuning of C."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .colorff import ColorAtom
from .evaluation import roc_auc, stratified_kfold
from .features import LAYOUTS, feature_names

DEFAULT_C_GRID = tuple(10.0 ** k for k in range(-4, 5))
SCALER_KINDS = ("none", "max_abs", "standard")


@dataclass(frozen=True)
class ScalerSpec:
    kind: str = "none"
    offset: Optional[Tuple[float, ...]] = None
    scale: Optional[Tuple[float, ...]] = None

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "offset": None if self.offset is None else list(self.offset),
                "scale": None if self.scale is None else list(self.scale)}

    @classmethod
    def from_dict(cls, d: Dict) -> "ScalerSpec":
        return cls(d["kind"], None if d.get("offset") is None else tuple(d["offset"]),
                   None if d.get("scale") is None else tuple(d["scale"]))


def fit_scaler(kind: str, X_train) -> ScalerSpec:
    X = np.asarray(X_train, dtype=float)
    if kind not in SCALER_KINDS:
        raise ValueError(f"unknown scaler {kind!r}")
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("scaler needs a non-empty 2D training matrix")
    if kind == "none":
        return ScalerSpec("none")
    if kind == "max_abs":
        s = np.abs(X).max(axis=0)
        s[s == 0] = 1.0
        return ScalerSpec("max_abs", tuple([0.0] * X.shape[1]), tuple(s.tolist()))
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return ScalerSpec("standard", tuple(mu.tolist()), tuple(sd.tolist()))


def apply_scaler(spec: ScalerSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if spec.kind == "none":
        return X
    return (X - np.asarray(spec.offset)) / np.asarray(spec.scale)


def balanced_weights(y) -> np.ndarray:
    """Per-sample weight m / (2 m_c) for a sample of class c."""
    y = np.asarray(y).astype(int)
    m = len(y)
    counts = np.bincount(y, minlength=2)
    return m / (2.0 * counts[y])


def _logloss(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.where(y == 1, np.logaddexp(0.0, -z), np.logaddexp(0.0, z))


def loss_and_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float,
                  sample_weight: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """Mean weighted log-loss plus |w|^2 / (2 C m); gradient over (w, b).

    Has the same minimizer as sum(s_i * loss_i) * C + |w|^2 / 2. The bias is
    not penalized.
    """
    m = len(y)
    s = np.ones(m) if sample_weight is None else sample_weight
    z = X @ w + b
    loss = float(s @ _logloss(z, y)) / m + float(w @ w) / (2.0 * C * m)
    r = s * (expit(z) - y) / m
    grad = np.r_[X.T @ r + w / (C * m), r.sum()]
    return loss, grad


@dataclass(frozen=True)
class LRModel:
    weights: np.ndarray
    bias: float
    C: float
    scaler: ScalerSpec = ScalerSpec()
    layout: str = ""
    kind: str = "lr"
    iterations: int = 0
    converged: bool = True

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got {X.shape[1]}")
        return apply_scaler(self.scaler, X) @ self.weights + self.bias

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind, "layout": self.layout, "C": self.C, "scaler": self.scaler.to_dict(),
            "weights": [float(v) for v in self.weights], "bias": float(self.bias),
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LRModel":
        d = json.loads(text)
        return cls(np.asarray(d["weights"], dtype=float), float(d["bias"]), float(d["C"]),
                   ScalerSpec.from_dict(d["scaler"]), d.get("layout", ""), d.get("kind", "lr"))


def predict_proba(model: LRModel, X) -> np.ndarray:
    """Positive-class probability logistic(w . x' + b), x' the scaled input."""
    return expit(model.decision_function(X))


def train_lr(X, y, C: float = 1.0, max_iters: int = 10000, seed: int = 0, scaler: ScalerSpec = ScalerSpec(),
             layout: str = "", balanced: bool = True, tol: float = 1e-6) -> LRModel:
    """Fit by damped Newton iterations from w = 0.

    Stops when the gradient infinity-norm drops below ``tol`` or after
    ``max_iters`` steps. ``X`` is used as given; ``scaler`` is only recorded
    so the model can transform raw inputs at prediction time. The optimizer is
    deterministic, so ``seed`` has no effect; it is accepted for interface
    symmetry with stochastic learners.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (m, n) with m labels")
    if not np.isfinite(X).all():
        raise ValueError("training features contain non-finite values")
    if len(np.unique(y)) < 2:
        raise ValueError("training data contains a single class")
    m, n = X.shape
    s = balanced_weights(y) if balanced else np.ones(m)
    Xb = np.hstack([X, np.ones((m, 1))])
    reg = np.r_[np.full(n, 1.0 / (C * m)), 0.0]
    theta = np.zeros(n + 1)
    loss, grad = loss_and_grad(theta[:n], theta[n], X, y, C, s)
    it = 0
    while np.abs(grad).max() >= tol and it < max_iters:
        it += 1
        p = expit(Xb @ theta)
        h = (Xb * (s * p * (1 - p) / m)[:, None]).T @ Xb + np.diag(reg)
        h[n, n] += 1e-12
        try:
            step = np.linalg.solve(h, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h, grad, rcond=None)[0]
        slope = float(grad @ step)
        t = 1.0
        while t >= 1e-10:
            cand = theta - t * step
            new_loss, new_grad = loss_and_grad(cand[:n], cand[n], X, y, C, s)
            if new_loss <= loss - 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break  # no descent left at float precision
        theta, loss, grad = cand, new_loss, new_grad
    converged = bool(np.abs(grad).max() < tol)
    return LRModel(theta[:n].copy(), float(theta[n]), float(C), scaler, layout, iterations=it, converged=converged)


def fit_scaled(X, y, C: float, scaler_kind: str = "none", layout: str = "", max_iters: int = 10000, seed: int = 0) -> LRModel:
    """Fit a scaler on ``X`` then train on the scaled features."""
    spec = fit_scaler(scaler_kind, X)
    return train_lr(apply_scaler(spec, X), y, C, max_iters=max_iters, seed=seed, scaler=spec, layout=layout)


def tune_C(X, y, grid: Sequence[float] = DEFAULT_C_GRID, inner_k: int = 3, seed: int = 0,
           scaler_kind: str = "none", max_iters: int = 10000) -> float:
    """Pick the C with the best mean inner-fold ROC AUC (ties go to the smaller C)."""
    grid = sorted(float(c) for c in grid)
    if not grid:
        raise ValueError("empty C grid")
    if len(grid) == 1:
        return grid[0]
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    k = min(inner_k, int(np.bincount(y, minlength=2).min()))
    if k < 2:
        raise ValueError("too few samples of one class for inner cross-validation")
    folds = stratified_kfold(y, k, seed)
    best_c, best_auc = grid[0], -np.inf
    for c in grid:
        aucs = []
        for f in range(k):
            tr, va = folds != f, folds == f
            model = fit_scaled(X[tr], y[tr], c, scaler_kind, max_iters=max_iters, seed=seed)
            aucs.append(roc_auc(model.decision_function(X[va]), y[va]))
        mean = float(np.mean(aucs))
        if mean > best_auc:
            best_c, best_auc = c, mean
    return best_c


def export_weights(model: LRModel, query_color_atoms: Sequence[ColorAtom]) -> Dict:
    """Pair each color-atom-overlap weight with its query color atom.

    Negative overlaps encode favorable contacts, so a negative weight marks a
    color atom whose overlap correlates with activity.
    """
    blocks = LAYOUTS.get(model.layout, ())
    if "CAO" not in blocks:
        raise ValueError(f"layout {model.layout!r} has no color atom overlap block")
    names = feature_names(model.layout, query_color_atoms)
    if len(names) != len(model.weights):
        raise ValueError("model dimension does not match the query color atoms")
    start = names.index(next(n for n in names if n.startswith("CAO_"))) if query_color_atoms else len(names)
    shape_name = blocks[0]
    record = {
        "layout": model.layout,
        "C": model.C,
        "bias": float(model.bias),
        "shape_feature": shape_name,
        "shape_weight": float(model.weights[names.index(shape_name)]),
        "other_weights": {n: float(w) for n, w in zip(names, model.weights) if not n.startswith("CAO_") and n != shape_name},
        "color_atoms": [
            {"index": i, "type": c.color_type.name.lower(), "position": [float(v) for v in c.position],
             "weight": float(model.weights[start + i])}
            for i, c in enumerate(query_color_atoms)
        ],
    }
    return record
