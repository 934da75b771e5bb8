"""Run the full analysis on the d1/d2/d3 presets over a seed panel.

Writes one JSON line per (dataset, seed) with the selected number of types,
the gap curve, group fingerprints, entropies and the group merge order.

    python3 scripts/benchmarks.py --seeds 0-9 --out results/benchmarks.jsonl
"""

import argparse
import json
import sys
import time
from pathlib import Path

from respclust.fingerprint import normalized_entropy
from respclust.pipeline import AnalysisConfig, analyze, canonical
from respclust.synthgen import generate_preset


def seed_range(text):
    lo, _, hi = text.partition("-")
    return list(range(int(lo), int(hi or lo) + 1))


def summarize(name, seed, res, seconds):
    st = res.stage
    return {
        "dataset": name,
        "seed": seed,
        "n_clusters": res.selection.n_clusters,
        "fallback": res.selection.fallback,
        "gap": res.curve.gap.tolist(),
        "s": res.curve.s.tolist(),
        "response_types": st.types.centroids.tolist(),
        "fingerprints": {f.group: f.weights.tolist() for f in st.prints},
        "entropy": {f.group: normalized_entropy(f) for f in st.prints},
        "merge_order": [sorted(s) for s in st.similarity.topology()],
        "seconds": round(seconds, 2),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", nargs="+", default=["d1", "d2", "d3"])
    ap.add_argument("--seeds", type=seed_range, default=seed_range("0-9"))
    ap.add_argument("--n-per-group", type=int, default=None)
    ap.add_argument("--max-clusters", type=int, default=20)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args(argv)

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
    out = args.out.open("w") if args.out else sys.stdout
    size = {} if args.n_per_group is None else {"n_per_group": args.n_per_group}
    for name in args.datasets:
        for seed in args.seeds:
            m = generate_preset(name, seed, **size)
            t0 = time.perf_counter()
            res = analyze(m, AnalysisConfig(seed=seed, max_clusters=args.max_clusters))
            row = summarize(name, seed, res, time.perf_counter() - t0)
            out.write(json.dumps(canonical(row)) + "\n")
            out.flush()
            print(f"{name} seed {seed}: {row['n_clusters']} types, {row['seconds']} s", file=sys.stderr)


if __name__ == "__main__":
    main()
