"""A miniature version of the full benchmark: several synthetic datasets on
disk, cross-validated models for every Tanimoto layout, and the collection
medians with sign-test intervals against the TanimotoCombo baseline.

Run: python3 demos/03_benchmark_collection.py [n_datasets]
"""
import sys
import tempfile
import time
from pathlib import Path

from colorscreen.bench import ExperimentConfig, SyntheticSpec, make_synthetic_benchmark, medians_table, report_json, run_collection

n = int(sys.argv[1]) if len(sys.argv) > 1 else 4
work = Path(tempfile.mkdtemp(prefix="colorscreen-demo-"))
manifests = []
for s in range(n):
    spec = SyntheticSpec(name=f"demo{s}", n_actives=20, n_decoys=200)
    make_synthetic_benchmark(spec, seed=s, out_dir=work / spec.name)
    manifests.append(work / spec.name / "manifest.json")

t0 = time.perf_counter()
report = run_collection(manifests, ExperimentConfig(seed=0))
print(medians_table(report))
c = report["counters"]
print(f"\n{c['successful_units']} units, {c['models_trained']} models, {c['clamped_scores']} clamped scores, "
      f"{time.perf_counter() - t0:.0f} s")

(work / "report.json").write_text(report_json(report))
print(f"report: {work / 'report.json'}")
