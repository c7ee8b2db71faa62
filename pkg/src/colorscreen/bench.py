"""Screening experiments: featurize a library against a query, cross-validate
per-layout models against the combo-score baseline, and report.

A *unit* is one (dataset, query) pair. Each unit is featurized once; every
layout and the baseline are then evaluated on the same stratified folds.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .colorff import ColorAtom, ColorType, format_color_atoms
from .evaluation import aggregate, metric_record, stratified_kfold
from .features import LAYOUTS, ClampCounter, SimilarityConfig, build_feature_vector, rocs_scores
from .model import DEFAULT_C_GRID, apply_scaler, export_weights, fit_scaler, train_lr, tune_C
from .molio import Atom, DatasetManifest, Molecule, assign_radii, load_manifest, write_sdf
from .overlay import OverlayConfig, PreparedMolecule, best_overlay, prepare

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TANIMOTO_LAYOUTS = ("ST-CT", "ST-CCT", "ST-CAO", "ST-CCT-CAO")
TVERSKY_LAYOUTS = ("STv-CTv", "STv-CCTv", "STv-CAO", "STv-CCTv-CAO")


@dataclass(frozen=True)
class ExperimentConfig:
    layouts: Tuple[str, ...] = TANIMOTO_LAYOUTS
    metric: str = "tanimoto"
    alpha: float = 0.95
    k_folds: int = 5
    seed: int = 0
    scaler: str = "none"
    C_grid: Tuple[float, ...] = DEFAULT_C_GRID
    inner_k: int = 3
    w_color: float = 1.0
    overlay_max_iters: int = 200
    lr_max_iters: int = 10000
    export_weights: bool = True

    def __post_init__(self):
        bad = [l for l in self.layouts if l not in LAYOUTS]
        if bad:
            raise ValueError(f"unknown layouts {bad}")
        if self.metric not in ("tanimoto", "tversky"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.k_folds < 2:
            raise ValueError("k_folds must be >= 2")
        SimilarityConfig(self.alpha)

    @property
    def baseline(self) -> str:
        return "TanimotoCombo" if self.metric == "tanimoto" else "TverskyCombo"

    def to_dict(self) -> Dict:
        d = asdict(self)
        d["layouts"] = list(self.layouts)
        d["C_grid"] = list(self.C_grid)
        d["baseline"] = self.baseline
        return d


@dataclass
class UnitResult:
    dataset: str
    query: str
    records: List[Dict] = field(default_factory=list)
    models_trained: Dict[str, int] = field(default_factory=dict)
    failures: List[Dict] = field(default_factory=list)
    clamped_scores: int = 0
    n_actives: int = 0
    n_decoys: int = 0
    weights: List[Dict] = field(default_factory=list)
    fold_checksums: List[str] = field(default_factory=list)
    scores: List[Dict] = field(default_factory=list)
    error: Optional[str] = None

    def summary(self) -> Dict:
        return {
            "dataset": self.dataset, "query": self.query, "n_actives": self.n_actives, "n_decoys": self.n_decoys,
            "models_trained": dict(sorted(self.models_trained.items())), "overlay_failures": self.failures,
            "clamped_scores": self.clamped_scores, "error": self.error,
        }


def _checksum(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


def train_fold(X_train: np.ndarray, y_train: np.ndarray, layout: str, cfg: ExperimentConfig):
    """Tune C, fit the scaler and train, seeing only the training rows."""
    C = tune_C(X_train, y_train, cfg.C_grid, cfg.inner_k, cfg.seed, cfg.scaler, cfg.lr_max_iters)
    spec = fit_scaler(cfg.scaler, X_train)
    return train_lr(apply_scaler(spec, X_train), y_train, C, cfg.lr_max_iters, cfg.seed, spec, layout)


def run_query_experiment(query: Union[Molecule, PreparedMolecule], actives: Sequence, decoys: Sequence,
                         cfg: ExperimentConfig = ExperimentConfig(), dataset: str = "dataset") -> UnitResult:
    """Overlay the library on ``query``, build features, and cross-validate.

    ``actives``/``decoys`` may be molecules or prepared molecules; a library
    molecule named like the query is dropped (active-as-query protocol).
    """
    qp = query if isinstance(query, PreparedMolecule) else prepare(query)
    unit = UnitResult(dataset, qp.name)
    ocfg = OverlayConfig(w_color=cfg.w_color, max_iters=cfg.overlay_max_iters, seed=cfg.seed)
    scfg = SimilarityConfig(cfg.alpha)
    clamps = ClampCounter()

    rows, labels, names, baseline = [], [], [], []
    library = [(m, 1) for m in actives] + [(m, 0) for m in decoys]
    for mol, label in library:
        if mol.name == qp.name:
            continue
        try:
            lp = mol if isinstance(mol, PreparedMolecule) else prepare(mol)
            res = best_overlay(qp, lp, ocfg)
            if not math.isfinite(res.objective):
                raise ValueError("non-finite overlay objective")
        except Exception as exc:  # excluded and counted, never silently
            unit.failures.append({"name": mol.name, "reason": str(exc)})
            continue
        scores = rocs_scores(res, scfg, clamps)
        rows.append({l: build_feature_vector(l, res, scfg, clamps=clamps).values for l in cfg.layouts})
        labels.append(label)
        names.append(lp.name)
        baseline.append(scores[cfg.baseline])
        unit.scores.append({"name": lp.name, "label": label, **scores})
    unit.clamped_scores = clamps.count
    y = np.array(labels, dtype=int)
    unit.n_actives, unit.n_decoys = int(y.sum()), int(len(y) - y.sum())

    try:
        folds = stratified_kfold(y, cfg.k_folds, cfg.seed)
    except ValueError as exc:
        unit.error = f"cannot build {cfg.k_folds} stratified folds: {exc}"
        return unit
    baseline = np.asarray(baseline)
    matrices = {l: np.array([r[l] for r in rows]) for l in cfg.layouts}
    color_atoms = qp.color_atoms

    for fold in range(cfg.k_folds):
        test = folds == fold
        train = ~test
        unit.records.append({"method": cfg.baseline, "dataset": dataset, "query": qp.name, "fold": fold,
                             **metric_record(baseline[test], y[test])})
        for layout in cfg.layouts:
            X = matrices[layout]
            unit.fold_checksums.append(f"{layout}:{fold}:{_checksum(X[train], y[train])}")
            model = train_fold(X[train], y[train], layout, cfg)
            unit.models_trained[layout] = unit.models_trained.get(layout, 0) + 1
            unit.records.append({"method": layout, "dataset": dataset, "query": qp.name, "fold": fold,
                                 **metric_record(model.decision_function(X[test]), y[test])})
            if cfg.export_weights and "CAO" in LAYOUTS[layout]:
                unit.weights.append({"dataset": dataset, "query": qp.name, "fold": fold,
                                     **export_weights(model, color_atoms)})
    return unit


def run_dataset(dataset: str, actives: Sequence[Molecule], decoys: Sequence[Molecule],
                queries: Optional[Sequence[Molecule]] = None, cfg: ExperimentConfig = ExperimentConfig(),
                query_indices: Optional[Sequence[int]] = None) -> List[UnitResult]:
    """Run one unit per query. ``queries=None`` means every active is a query
    (and is left out of its own library)."""
    cache = {m.name: prepare(m) for m in list(actives) + list(decoys)}
    lib_a = [cache[m.name] for m in actives]
    lib_d = [cache[m.name] for m in decoys]
    qs = list(actives) if queries is None else list(queries)
    picked = range(len(qs)) if query_indices is None else query_indices
    units = []
    for i in picked:
        q = qs[i]
        try:
            qp = cache[q.name] if queries is None else prepare(q)
            units.append(run_query_experiment(qp, lib_a, lib_d, cfg, dataset))
        except Exception as exc:
            unit = UnitResult(dataset, q.name)
            unit.error = f"{type(exc).__name__}: {exc}"
            units.append(unit)
    return units


def _run_manifest(manifest: DatasetManifest, cfg: ExperimentConfig, query_indices=None) -> List[UnitResult]:
    actives, decoys, queries = manifest.load()
    return run_dataset(manifest.dataset_name, actives, decoys, queries if manifest.queries else None,
                       cfg, query_indices)


def _run_unit(args) -> List[UnitResult]:
    manifest, query_index, cfg = args
    return _run_manifest(manifest, cfg, [query_index])


def _n_queries(manifest: DatasetManifest) -> int:
    _, _, queries = manifest.load()
    return len(queries)


def run_collection(manifests: Sequence[Union[DatasetManifest, str, os.PathLike]], cfg: ExperimentConfig = ExperimentConfig(),
                   jobs: int = 1, dump_dir: Optional[Union[str, os.PathLike]] = None) -> Dict:
    """Run every (dataset, query) unit and build the report dictionary.

    Output does not depend on ``jobs``: units are collected and reduced in
    sorted (dataset, query) order.
    """
    if not manifests:
        raise ValueError("no manifests given")
    loaded: List[DatasetManifest] = []
    failed: List[Dict] = []
    for m in manifests:
        try:
            loaded.append(m if isinstance(m, DatasetManifest) else load_manifest(m))
        except Exception as exc:
            failed.append({"manifest": str(m), "error": f"{type(exc).__name__}: {exc}"})

    units: List[UnitResult] = []
    if jobs > 1:
        work = []
        for m in loaded:
            try:
                work.extend((m, i, cfg) for i in range(_n_queries(m)))
            except Exception as exc:
                failed.append({"manifest": m.dataset_name, "error": f"{type(exc).__name__}: {exc}"})
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            units = [u for batch in pool.map(_run_unit, work) for u in batch]
    else:
        for m in loaded:
            try:
                units.extend(_run_manifest(m, cfg))
            except Exception as exc:
                failed.append({"manifest": m.dataset_name, "error": f"{type(exc).__name__}: {exc}"})

    units.sort(key=lambda u: (u.dataset, u.query))
    if dump_dir is not None:
        dump_scores(units, dump_dir)
    return build_report(units, cfg, failed)


def build_report(units: Sequence[UnitResult], cfg: ExperimentConfig, failed_manifests: Sequence[Dict] = ()) -> Dict:
    ok = [u for u in units if u.error is None and u.records]
    records = [r for u in ok for r in u.records]
    summary = aggregate(records, baseline=cfg.baseline) if records else {}
    models = sum(sum(u.models_trained.values()) for u in units)
    return {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "baseline": cfg.baseline,
        "methods": [cfg.baseline] + list(cfg.layouts),
        "summary": summary,
        "experiments": [u.summary() for u in units],
        "weights": [w for u in units for w in u.weights],
        "failed_manifests": list(failed_manifests),
        "counters": {
            "units": len(units),
            "successful_units": len(ok),
            "models_trained": models,
            "overlay_failures": sum(len(u.failures) for u in units),
            "clamped_scores": sum(u.clamped_scores for u in units),
        },
    }


def report_json(report: Dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def dump_scores(units: Sequence[UnitResult], out_dir: Union[str, os.PathLike]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["name", "label", "ST", "CT", "TanimotoCombo", "STv", "CTv", "TverskyCombo"]
    for u in units:
        with open(out / f"{u.dataset}__{u.query}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for row in u.scores:
                w.writerow({k: row[k] for k in cols})


def medians_table(report: Dict) -> str:
    """Plain-text table of collection medians and baseline comparisons."""
    lines = [f"{'method':<14} {'units':>5} {'AUC':>7} {'dAUC':>7} {'sign-test CI':>16}"]
    for method in report["methods"]:
        entry = report["summary"].get(method)
        if entry is None:
            continue
        auc_m = entry["median"]["auc"]
        if "median_delta" in entry:
            ci = entry["sign_test_ci"]["auc"]
            ci_s = "empty" if ci["empty"] else f"({ci['lo']:.2f}, {ci['hi']:.2f})"
            lines.append(f"{method:<14} {entry['n_units']:>5} {auc_m:>7.3f} {entry['median_delta']['auc']:>7.3f} {ci_s:>16}")
        else:
            lines.append(f"{method:<14} {entry['n_units']:>5} {auc_m:>7.3f} {'':>7} {'':>16}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# synthetic benchmark

@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a desk-scale screening set of rigid pseudo-molecules.

    The query carries two color atoms of ``relevant_type`` (only the first
    one matters for activity), two of ``confounder_type`` and one neutral
    acceptor. Library molecules are noisy copies of the query skeleton in
    random poses; each query color site is kept with a class-dependent
    probability. Decoys preferentially keep the confounder sites, which
    inflates their color similarity.

    ``active_jitter == 0`` makes every active an exact rigid copy of the
    query, color atoms included. ``decoupled`` draws actives from the decoy
    distribution so labels carry no geometric signal.
    """

    name: str = "synthetic"
    n_actives: int = 40
    n_decoys: int = 800
    n_queries: int = 1
    n_atoms: int = 10
    active_jitter: float = 0.4
    decoy_noise: float = 0.4
    relevant_type: ColorType = ColorType.DONOR
    confounder_type: ColorType = ColorType.HYDROPHOBE
    p_active_relevant: float = 0.9
    p_decoy_relevant: float = 0.15
    p_active_confounder: float = 0.3
    p_decoy_confounder: float = 0.85
    p_other: float = 0.5
    decoupled: bool = False

    def __post_init__(self):
        if self.n_actives < 1:
            raise ValueError("synthetic spec needs at least one active")
        if self.n_decoys < 1:
            raise ValueError("synthetic spec needs at least one decoy")
        if self.n_atoms < 3:
            raise ValueError("n_atoms must be >= 3")
        if self.relevant_type == self.confounder_type:
            raise ValueError("relevant and confounder color types must differ")


def _skeleton(n: int, rng: np.random.Generator) -> np.ndarray:
    pts = [np.zeros(3)]
    while len(pts) < n:
        base = pts[-1] if rng.random() < 0.7 else pts[rng.integers(len(pts))]
        v = rng.normal(size=3)
        cand = base + 1.5 * v / np.linalg.norm(v)
        if min(np.linalg.norm(cand - p) for p in pts) > 1.35:
            pts.append(cand)
    xyz = np.array(pts)
    return xyz - xyz.mean(axis=0)


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _pseudo_molecule(name: str, xyz: np.ndarray, colors: Sequence[Tuple[ColorType, np.ndarray]]) -> Molecule:
    atoms = [Atom("C", tuple(float(round(v, 4)) for v in p)) for p in xyz]
    ca = [ColorAtom(t, tuple(float(round(v, 4)) for v in p)) for t, p in colors]
    return assign_radii(Molecule(name, atoms, (), {"COLOR_ATOMS": format_color_atoms(ca)}))


def make_synthetic_benchmark(spec: SyntheticSpec = SyntheticSpec(), seed: int = 0,
                             out_dir: Optional[Union[str, os.PathLike]] = None):
    """Generate (manifest, actives, decoys, queries); writes SDFs + manifest.json when ``out_dir`` is set.

    ``n_queries == 0`` produces an active-as-query manifest (no queries listed).
    """
    rng = np.random.default_rng(seed)
    skel = _skeleton(spec.n_atoms, rng)
    sites = rng.choice(spec.n_atoms, size=5, replace=False)
    # (type, skeleton position, role)
    query_sites = [
        (spec.relevant_type, skel[sites[0]], "relevant"),
        (spec.relevant_type, skel[sites[1]], "other"),
        (spec.confounder_type, skel[sites[2]], "confounder"),
        (spec.confounder_type, skel[sites[3]], "confounder"),
        (ColorType.ACCEPTOR if ColorType.ACCEPTOR not in (spec.relevant_type, spec.confounder_type) else ColorType.RING,
         skel[sites[4]], "other"),
    ]

    def place(xyz, colors):
        rot = _random_rotation(rng)
        t = rng.normal(scale=5.0, size=3)
        return xyz @ rot.T + t, [(c, p @ rot.T + t) for c, p in colors]

    def member(name: str, active: bool) -> Molecule:
        if active and spec.active_jitter == 0:
            xyz, colors = place(skel.copy(), [(c, p.copy()) for c, p, _ in query_sites])
            return _pseudo_molecule(name, xyz, colors)
        noise = spec.active_jitter if active else spec.decoy_noise
        use_active = active and not spec.decoupled
        probs = {
            "relevant": spec.p_active_relevant if use_active else spec.p_decoy_relevant,
            "confounder": spec.p_active_confounder if use_active else spec.p_decoy_confounder,
            "other": spec.p_other,
        }
        xyz = skel + rng.normal(scale=noise, size=skel.shape)
        colors = [(c, p + rng.normal(scale=noise, size=3)) for c, p, role in query_sites if rng.random() < probs[role]]
        xyz, colors = place(xyz, colors)
        return _pseudo_molecule(name, xyz, colors)

    queries = []
    for i in range(spec.n_queries):
        xyz, colors = place(skel.copy(), [(c, p.copy()) for c, p, _ in query_sites])
        queries.append(_pseudo_molecule(f"{spec.name}_query_{i:03d}", xyz, colors))
    actives = [member(f"{spec.name}_active_{i:04d}", True) for i in range(spec.n_actives)]
    decoys = [member(f"{spec.name}_decoy_{i:05d}", False) for i in range(spec.n_decoys)]

    manifest = DatasetManifest(spec.name, ("actives.sdf",), ("decoys.sdf",),
                               ("queries.sdf",) if queries else (), None if out_dir is None else str(out_dir))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_sdf(out / "actives.sdf", actives)
        write_sdf(out / "decoys.sdf", decoys)
        if queries:
            write_sdf(out / "queries.sdf", queries)
        (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest, actives, decoys, queries
