"""Command-line entry points: overlay, featurize, benchmark, synth, report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .bench import (TANIMOTO_LAYOUTS, TVERSKY_LAYOUTS, ExperimentConfig, SyntheticSpec, make_synthetic_benchmark,
                    medians_table, report_json, run_collection)
from .colorff import ColorType
from .features import LAYOUTS, SimilarityConfig, build_feature_vector, color_atom_overlaps, color_components, rocs_scores, write_feature_matrix
from .molio import SDFError, load_manifest, read_sdf
from .overlay import OverlayConfig, best_overlay, prepare

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
_SCALERS = {"none": "none", "maxabs": "max_abs", "standard": "standard"}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _layouts(text: str) -> List[str]:
    out = [s.strip() for s in text.split(",") if s.strip()]
    bad = [l for l in out if l not in LAYOUTS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown layouts {bad}; choose from {', '.join(LAYOUTS)}")
    return out


def _read(path: str, strict: bool):
    try:
        return read_sdf(path, strict=strict)
    except (OSError, SDFError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_overlay(args) -> int:
    queries = _read(args.query, args.strict)
    if not queries:
        raise DataError(f"{args.query}: no molecules")
    library = _read(args.library, args.strict)
    qp = prepare(queries[0])
    cfg = OverlayConfig(w_color=args.w_color, seed=args.seed)
    scfg = SimilarityConfig(args.alpha)
    k = len(qp.color_atoms)
    header = (["name", "ST", "CT", "TanimotoCombo", "STv", "CTv", "TverskyCombo"]
              + [f"CCT_{t.name.lower()}" for t in ColorType] + [f"CAO_{i}" for i in range(k)])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for mol in library:
            res = best_overlay(qp, prepare(mol), cfg)
            s = rocs_scores(res, scfg)
            row = [mol.name] + [s[c] for c in header[1:7]] + list(color_components(res, "tanimoto", scfg)) + list(color_atom_overlaps(res))
            w.writerow([row[0]] + [f"{float(v):.6f}" for v in row[1:]])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_featurize(args) -> int:
    if args.manifest:
        try:
            manifest = load_manifest(args.manifest)
            actives, decoys, queries = manifest.load(strict=args.strict)
        except (OSError, ValueError) as exc:
            raise DataError(str(exc)) from None
        library = [(m, 1) for m in actives] + [(m, 0) for m in decoys]
        query = _read(args.query, args.strict)[0] if args.query else queries[0]
    else:
        if not (args.query and args.library):
            raise UsageError("featurize needs --manifest, or both --query and --library")
        query = _read(args.query, args.strict)[0]
        library = [(m, None) for m in _read(args.library, args.strict)]
    qp = prepare(query)
    cfg = OverlayConfig(w_color=args.w_color, seed=args.seed)
    scfg = SimilarityConfig(args.alpha)
    results = [(m.name, label, best_overlay(qp, prepare(m), cfg)) for m, label in library if m.name != qp.name]
    out = Path(args.out)
    for layout in args.layouts:
        path = out if len(args.layouts) == 1 else out.with_name(f"{out.stem}.{layout}{out.suffix or '.csv'}")
        X = np.array([build_feature_vector(layout, r, scfg).values for _, _, r in results]).reshape(len(results), -1)
        write_feature_matrix(path, layout, [n for n, _, _ in results], [l for _, l, _ in results], X, qp.name, qp.color_atoms)
        print(f"wrote {path} ({len(results)} rows)")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    manifests = [p for group in args.manifest for p in group.split(",") if p]
    for p in manifests:
        try:
            load_manifest(p)
        except (OSError, ValueError) as exc:
            raise DataError(f"manifest {p}: {exc}") from None
    layouts = args.layouts or (TANIMOTO_LAYOUTS if args.metric == "tanimoto" else TVERSKY_LAYOUTS)
    cfg = ExperimentConfig(layouts=tuple(layouts), metric=args.metric, alpha=args.alpha, k_folds=args.folds,
                           seed=args.seed, scaler=_SCALERS[args.scaler], w_color=args.w_color)
    report = run_collection(manifests, cfg, jobs=args.jobs, dump_dir=args.dump_scores)
    Path(args.out).write_text(report_json(report))
    print(medians_table(report))
    print(f"report written to {args.out}")
    if report["counters"]["successful_units"] == 0:
        print("no experiment completed successfully", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = SyntheticSpec(name=args.name, n_actives=args.actives, n_decoys=args.decoys, n_queries=args.queries,
                             n_atoms=args.atoms, active_jitter=args.jitter, decoy_noise=args.decoy_noise,
                             decoupled=args.decoupled)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest, actives, decoys, queries = make_synthetic_benchmark(spec, args.seed, args.out)
    print(f"wrote {len(actives)} actives, {len(decoys)} decoys, {len(queries)} queries to {args.out}/manifest.json")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"{args.report}: {exc}") from None
    if report.get("schema_version") != 1:
        raise DataError(f"{args.report}: unsupported schema_version {report.get('schema_version')!r}")
    print(medians_table(report))
    c = report["counters"]
    print(f"units: {c['successful_units']}/{c['units']}  models: {c['models_trained']}  "
          f"overlay failures: {c['overlay_failures']}  clamped scores: {c['clamped_scores']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colorscreen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(p, seed=True):
        p.add_argument("--w-color", type=float, default=1.0, help="weight of color overlap in the alignment objective (default 1.0)")
        p.add_argument("--alpha", type=float, default=0.95, help="reference Tversky query bias (default 0.95)")
        p.add_argument("--strict", action="store_true", help="abort on the first malformed SDF record instead of skipping it")
        if seed:
            p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    p = sub.add_parser("overlay", help="score every library molecule against a query")
    p.add_argument("--query", required=True, help="query SDF (first record is used)")
    p.add_argument("--library", required=True, help="library SDF")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    common(p)
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("featurize", help="write a model feature matrix (CSV + JSON sidecar)")
    p.add_argument("--query", help="query SDF (default: first manifest query)")
    p.add_argument("--library", help="library SDF (unlabeled)")
    p.add_argument("--manifest", help="dataset manifest JSON (labeled library)")
    p.add_argument("--layouts", type=_layouts, default=["ST-CCT-CAO"], help="comma-separated feature layouts")
    p.add_argument("--out", required=True, help="CSV output path")
    common(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("benchmark", help="cross-validated screening benchmark over manifests")
    p.add_argument("--manifest", action="append", required=True, help="manifest JSON; repeat or comma-separate")
    p.add_argument("--layouts", type=_layouts, help="comma-separated layouts (default: all for the metric)")
    p.add_argument("--metric", choices=("tanimoto", "tversky"), default="tanimoto", help="similarity metric and baseline")
    p.add_argument("--scaler", choices=tuple(_SCALERS), default="none", help="feature scaling (default none)")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds (default 5)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes (default: logical cores)")
    p.add_argument("--out", default="report.json", help="report JSON path (default report.json)")
    p.add_argument("--dump-scores", help="directory for per-molecule score CSVs")
    common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("synth", help="generate a synthetic screening dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--name", default="synthetic", help="dataset name")
    p.add_argument("--actives", type=int, default=40, help="number of actives (default 40)")
    p.add_argument("--decoys", type=int, default=800, help="number of decoys (default 800)")
    p.add_argument("--queries", type=int, default=1, help="number of queries; 0 = active-as-query (default 1)")
    p.add_argument("--atoms", type=int, default=10, help="heavy atoms per pseudo-molecule (default 10)")
    p.add_argument("--jitter", type=float, default=0.4, help="active positional noise, 0 = exact query copies")
    p.add_argument("--decoy-noise", type=float, default=0.4, help="decoy positional noise")
    p.add_argument("--decoupled", action="store_true", help="draw actives from the decoy distribution")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="print the medians table of a report JSON")
    p.add_argument("report", help="report JSON path")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"colorscreen {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"colorscreen {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        logging.getLogger(__name__).exception("internal error")
        print(f"colorscreen {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
