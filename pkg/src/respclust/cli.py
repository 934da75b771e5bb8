"""Command line front end.

    respclust generate --dataset d1 --seed 42 --out d1.csv
    respclust analyze d1.csv --seed 42 --out report.json
    respclust baseline d1.csv --out baseline.json
    respclust report report.json --format newick

Exit codes: 0 success, 1 input error, 2 computation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .baseline import classical_pipeline
from .core import DegenerateDataError, InputError
from .io import dumps_canonical, format_csv, read_csv
from .pipeline import AnalysisConfig, analyze, build_report
from .prep import knn_impute
from .synthgen import PRESET_GROUPS, generate_dataset, preset, spec_from_config

REPORT_FORMATS = ("newick", "scree", "spider", "scree-svg", "dendrogram-svg")


def _emit(text: str, out) -> None:
    """Write ``text`` to ``out`` atomically, or to stdout when ``out`` is None."""
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    fd, tmp = tempfile.mkstemp(dir=out.parent if str(out.parent) else ".", prefix=".tmp-", suffix=out.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yml", ".yaml"):
        import yaml

        return yaml.safe_load(text)
    return json.loads(text)


def cmd_generate(args) -> int:
    if args.dataset in PRESET_GROUPS:
        spec = preset(args.dataset, args.seed, args.n_per_group, args.noise_sd)
    else:
        path = Path(args.dataset)
        if not path.exists():
            raise InputError(f"unknown dataset {args.dataset!r}: not a preset {sorted(PRESET_GROUPS)} or a file")
        try:
            spec = spec_from_config(_load_config(path), args.seed)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: invalid dataset spec: {exc}") from exc
    _emit(format_csv(generate_dataset(spec)), args.out)
    return 0


def _clusters(value: str):
    if value == "auto":
        return None
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a positive integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError("expected 'auto' or a positive integer")
    return n


def cmd_analyze(args) -> int:
    matrix = read_csv(args.input, args.scale_min, args.scale_max)
    config = AnalysisConfig(
        seed=args.seed,
        k_impute=args.k_impute,
        augment_sd=args.aug_sd,
        max_clusters=args.max_clusters,
        gap_refs=args.gap_refs,
        clusters=args.clusters,
        select_rule=args.select_rule,
        gap_reference=args.gap_reference,
    )
    report = build_report(analyze(matrix, config))
    _emit(dumps_canonical(report), args.out)
    return 0


def cmd_baseline(args) -> int:
    matrix = read_csv(args.input, args.scale_min, args.scale_max)
    if not matrix.is_complete:
        if not args.impute:
            raise InputError(
                "input has missing cells; pass --impute to fill them by kNN imputation "
                "(as `analyze` does) or impute them beforehand"
            )
        matrix = knn_impute(matrix, args.k_impute)
    report = classical_pipeline(matrix).to_dict()
    report["schema_version"] = "1.0"
    _emit(dumps_canonical(report), args.out)
    return 0


def _scree(report: dict) -> list:
    c = report["gap_curve"]
    return [
        {"k": k, "gap": g, "s": s, "log_w": lw, "ref_mean_log_w": rw}
        for k, g, s, lw, rw in zip(c["k"], c["gap"], c["s"], c["log_w"], c["ref_mean_log_w"])
    ]


def _svg(fig) -> str:
    import io

    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def render_scree_svg(report: dict) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts = _scree(report)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar([p["k"] for p in pts], [p["gap"] for p in pts], yerr=[p["s"] for p in pts], marker="o", capsize=2)
    ax.axvline(report["selection"]["n_clusters"], color="grey", linestyle="--")
    ax.set_xlabel("number of clusters")
    ax.set_ylabel("gap")
    text = _svg(fig)
    plt.close(fig)
    return text


def render_dendrogram_svg(report: dict) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np
    from scipy.cluster import hierarchy

    sim = report["group_similarity"]
    Z = np.array([[m["left"], m["right"], m["cost"], m["size"]] for m in sim["dendrogram"]["merges"]])
    fig, ax = plt.subplots(figsize=(6, 4))
    hierarchy.dendrogram(Z, labels=sim["groups"], ax=ax, color_threshold=0)
    ax.set_ylabel("Ward merge cost")
    text = _svg(fig)
    plt.close(fig)
    return text


def render_view(report: dict, fmt: str) -> str:
    if fmt == "newick":
        if report.get("group_similarity") is None:
            raise InputError("report has no group dendrogram (fewer than two groups)")
        return report["group_similarity"]["newick"] + "\n"
    if fmt == "scree":
        return dumps_canonical(_scree(report))
    if fmt == "spider":
        return dumps_canonical(report["spider"])
    if fmt == "scree-svg":
        return render_scree_svg(report)
    if fmt == "dendrogram-svg":
        return render_dendrogram_svg(report)
    raise InputError(f"unknown format {fmt!r}; choose from {', '.join(REPORT_FORMATS)}")


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.report}: not valid JSON: {exc}") from exc
    if not isinstance(report, dict) or "schema_version" not in report:
        raise InputError(f"{args.report}: not an analysis report (no schema_version)")
    _emit(render_view(report, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="respclust", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("--dataset", required=True, help="preset d1|d2|d3 or a JSON/YAML dataset spec")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-group", type=int, default=1000, help="rows per group (presets only)")
    p.add_argument("--noise-sd", type=float, default=None, help="override the preset noise sd")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    def scale(q):
        q.add_argument("--scale-min", type=int, default=1)
        q.add_argument("--scale-max", type=int, default=5)

    p = sub.add_parser("analyze", help="response types, fingerprints and group similarity")
    p.add_argument("input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-impute", type=int, default=5)
    p.add_argument("--aug-sd", type=float, default=0.1)
    p.add_argument("--max-clusters", type=int, default=20)
    p.add_argument("--gap-refs", type=int, default=10)
    p.add_argument("--clusters", type=_clusters, default=None, help="auto (default) or a fixed number")
    p.add_argument("--select-rule", choices=("first-local-max", "tibshirani"), default="first-local-max")
    p.add_argument("--gap-reference", choices=("uniform-bounding-box", "pca-bounding-box"), default="uniform-bounding-box")
    p.add_argument("--out", default=None)
    scale(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("baseline", help="classical PCA gates and rank tests")
    p.add_argument("input")
    p.add_argument("--impute", action="store_true", help="kNN-impute missing cells first")
    p.add_argument("--k-impute", type=int, default=5)
    p.add_argument("--out", default=None)
    scale(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", help="derive views from an analysis report")
    p.add_argument("report")
    p.add_argument("--format", required=True, help=" | ".join(REPORT_FORMATS))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DegenerateDataError, ArithmeticError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
