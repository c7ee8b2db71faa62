"""Similarity scores and model feature vectors built from overlay volumes."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .colorff import ColorAtom, ColorType
from .overlay import OverlayResult

# layout -> (shape block, color block names)
LAYOUTS: Dict[str, Tuple[str, ...]] = {
    "ST-CT": ("ST", "CT"),
    "ST-CCT": ("ST", "CCT"),
    "ST-CAO": ("ST", "CAO"),
    "ST-CCT-CAO": ("ST", "CCT", "CAO"),
    "STv-CTv": ("STv", "CTv"),
    "STv-CCTv": ("STv", "CCTv"),
    "STv-CAO": ("STv", "CAO"),
    "STv-CCTv-CAO": ("STv", "CCTv", "CAO"),
}


@dataclass
class ClampCounter:
    """Counts scores that fell outside [0, 1] before clamping."""

    count: int = 0

    def clamp(self, value: float) -> float:
        if value < 0.0 or value > 1.0:
            self.count += 1
            return min(max(value, 0.0), 1.0)
        return value


def _clamp(value: float, clamps: Optional[ClampCounter]) -> float:
    if clamps is not None:
        return clamps.clamp(value)
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class SimilarityConfig:
    alpha: float = 0.95

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


def tanimoto(oab: float, oaa: float, obb: float, clamps: Optional[ClampCounter] = None) -> float:
    """oab / (oaa + obb - oab), clamped to [0, 1]; 0 when the denominator vanishes."""
    denom = oaa + obb - oab
    if denom <= 0.0:
        return 0.0 if oab <= 0.0 else _clamp(float("inf"), clamps)
    return _clamp(oab / denom, clamps)


def ref_tversky(oab: float, oaa: float, obb: float, alpha: float = 0.95, clamps: Optional[ClampCounter] = None) -> float:
    """Query-weighted Tversky oab / (alpha*oaa + (1-alpha)*obb), clamped to [0, 1]."""
    # same as alpha*oaa + (1-alpha)*obb, but exactly oaa when oaa == obb
    denom = oaa + (1.0 - alpha) * (obb - oaa)
    if denom <= 0.0:
        return 0.0
    return _clamp(oab / denom, clamps)


def combo_score(shape_score: float, color_score: float) -> float:
    return shape_score + color_score


def _metric(metric: str, cfg: SimilarityConfig, clamps: Optional[ClampCounter]):
    if metric == "tanimoto":
        return lambda ab, aa, bb: tanimoto(ab, aa, bb, clamps)
    if metric == "tversky":
        return lambda ab, aa, bb: ref_tversky(ab, aa, bb, cfg.alpha, clamps)
    raise ValueError(f"unknown metric {metric!r}")


def shape_score(result: OverlayResult, metric: str = "tanimoto", cfg: SimilarityConfig = SimilarityConfig(), clamps=None) -> float:
    return _metric(metric, cfg, clamps)(result.shape_oab, result.shape_oaa, result.shape_obb)


def color_score(result: OverlayResult, metric: str = "tanimoto", cfg: SimilarityConfig = SimilarityConfig(), clamps=None) -> float:
    return _metric(metric, cfg, clamps)(result.color_oab, result.color_oaa, result.color_obb)


def color_components(result: OverlayResult, metric: str = "tanimoto", cfg: SimilarityConfig = SimilarityConfig(), clamps=None) -> np.ndarray:
    """Per-color-type similarity in ColorType order; absent types score 0."""
    f = _metric(metric, cfg, clamps)
    return np.array([
        f(ab, aa, bb) for ab, aa, bb in zip(result.color_oab_by_type, result.color_oaa_by_type, result.color_obb_by_type)
    ])


def color_atom_overlaps(result: OverlayResult) -> np.ndarray:
    """Negated raw overlap of each query color atom with same-type library color atoms."""
    return -np.asarray(result.query_color_atom_overlaps, dtype=float)


def rocs_scores(result: OverlayResult, cfg: SimilarityConfig = SimilarityConfig(), clamps=None) -> Dict[str, float]:
    """Baseline scores: ST, CT, TanimotoCombo and their reference-Tversky counterparts."""
    st = shape_score(result, "tanimoto", cfg, clamps)
    ct = color_score(result, "tanimoto", cfg, clamps)
    stv = shape_score(result, "tversky", cfg, clamps)
    ctv = color_score(result, "tversky", cfg, clamps)
    return {
        "ST": st, "CT": ct, "TanimotoCombo": combo_score(st, ct),
        "STv": stv, "CTv": ctv, "TverskyCombo": combo_score(stv, ctv),
    }


@dataclass(frozen=True)
class FeatureVector:
    layout: str
    values: np.ndarray
    query_color_atom_count: int
    query_name: str = ""


def layout_dimension(layout: str, k: int) -> int:
    blocks = LAYOUTS[layout]
    return sum({"ST": 1, "STv": 1, "CT": 1, "CTv": 1, "CCT": 6, "CCTv": 6, "CAO": k}[b] for b in blocks)


def feature_names(layout: str, query_color_atoms: Sequence[ColorAtom]) -> List[str]:
    names: List[str] = []
    for block in LAYOUTS[layout]:
        if block in ("CCT", "CCTv"):
            names += [f"{block}_{t.name.lower()}" for t in ColorType]
        elif block == "CAO":
            names += [f"CAO_{i}_{c.color_type.name.lower()}" for i, c in enumerate(query_color_atoms)]
        else:
            names.append(block)
    return names


def build_feature_vector(layout: str, result: OverlayResult, cfg: SimilarityConfig = SimilarityConfig(),
                         query_name: Optional[str] = None, clamps: Optional[ClampCounter] = None) -> FeatureVector:
    """Assemble [shape] ++ [color] ++ [6 components] ++ [k color-atom overlaps] per ``layout``.

    ``query_name``, when given, must match the query the overlay was computed against.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}; choose from {sorted(LAYOUTS)}")
    if query_name is not None and result.query_name != query_name:
        raise ValueError(f"overlay was computed against {result.query_name!r}, not {query_name!r}")
    parts: List[np.ndarray] = []
    for block in LAYOUTS[layout]:
        if block == "ST":
            parts.append(np.array([shape_score(result, "tanimoto", cfg, clamps)]))
        elif block == "STv":
            parts.append(np.array([shape_score(result, "tversky", cfg, clamps)]))
        elif block == "CT":
            parts.append(np.array([color_score(result, "tanimoto", cfg, clamps)]))
        elif block == "CTv":
            parts.append(np.array([color_score(result, "tversky", cfg, clamps)]))
        elif block == "CCT":
            parts.append(color_components(result, "tanimoto", cfg, clamps))
        elif block == "CCTv":
            parts.append(color_components(result, "tversky", cfg, clamps))
        elif block == "CAO":
            parts.append(color_atom_overlaps(result))
    k = len(result.query_color_atom_overlaps)
    return FeatureVector(layout, np.concatenate(parts), k, result.query_name)


def write_feature_matrix(path: Union[str, os.PathLike], layout: str, names: Sequence[str], labels: Sequence[Optional[int]],
                         X: np.ndarray, query_name: str, query_color_atoms: Sequence[ColorAtom]) -> None:
    """CSV ``name,label,f0..fn`` plus a ``<path>.json`` sidecar describing the columns."""
    X = np.asarray(X, dtype=float).reshape(len(names), -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "label"] + [f"f{i}" for i in range(X.shape[1])])
        for name, label, row in zip(names, labels, X):
            w.writerow([name, "" if label is None else int(label)] + [repr(float(v)) for v in row])
    sidecar = {
        "layout": layout,
        "query": query_name,
        "columns": feature_names(layout, query_color_atoms),
        "query_color_atoms": [
            {"index": i, "type": c.color_type.name.lower(), "position": [float(v) for v in c.position]}
            for i, c in enumerate(query_color_atoms)
        ],
    }
    with open(f"{path}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
