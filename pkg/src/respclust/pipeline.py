"""End-to-end analysis: prepare, cluster, pick the number of types, fingerprint."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .cluster import (
    REFERENCES,
    ClusterAssignment,
    Selection,
    agglomerate,
    cut,
    gap_curve,
    select_num_clusters,
)
from .core import Dendrogram, Fingerprint, GapCurve, PreparedMatrix, QuestionnaireMatrix, ResponseTypeSet
from .fingerprint import (
    GROUP_LINKAGE,
    GROUP_METRIC,
    GroupSimilarityResult,
    assign,
    extract_response_types,
    fingerprints,
    group_mean,
    group_similarity,
    normalized_entropy,
)
from .prep import PrepConfig, prepare

SCHEMA_VERSION = "1.0"
SPIDER_AXIS = (0.0, 0.7)


@dataclass(frozen=True)
class AnalysisConfig:
    seed: int = 0
    k_impute: int = 5
    augment_sd: float = 0.1
    max_clusters: int = 20
    gap_refs: int = 10
    clusters: Optional[int] = None  # None selects from the gap curve
    select_rule: str = "first-local-max"
    gap_reference: str = "uniform-bounding-box"

    def __post_init__(self):
        if self.select_rule not in ("first-local-max", "tibshirani"):
            raise ValueError(f"unknown selection rule {self.select_rule!r}")
        if self.gap_reference not in REFERENCES:
            raise ValueError(f"unknown gap reference {self.gap_reference!r}")
        if self.clusters is not None and self.clusters < 1:
            raise ValueError("--clusters must be >= 1")

    def gap_seed(self) -> int:
        return int(np.random.SeedSequence(self.seed, spawn_key=(1,)).generate_state(1)[0])


@dataclass
class FingerprintStage:
    """Everything downstream of the choice of the number of response types."""

    n_types: int
    assignment: ClusterAssignment  # cut of the prepared matrix
    types: ResponseTypeSet
    labels: np.ndarray  # response type per original (imputed) row
    prints: list[Fingerprint]
    similarity: GroupSimilarityResult

    def fingerprint(self, group: str) -> Fingerprint:
        return next(f for f in self.prints if f.group == group)


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    imputed: QuestionnaireMatrix
    prepared: PreparedMatrix
    dendrogram: Dendrogram
    curve: GapCurve
    selection: Selection
    stage: FingerprintStage
    warnings: list[str] = field(default_factory=list)

    def at(self, n_types: int) -> FingerprintStage:
        """Fingerprint stage for another number of response types (same tree)."""
        return fingerprint_stage(self.imputed, self.prepared, self.dendrogram, n_types)


def fingerprint_stage(imputed, prepared, dendrogram, n_types) -> FingerprintStage:
    assignment = cut(dendrogram, prepared.values, n_types)
    types = extract_response_types(assignment)
    labels = assign(imputed, types)
    prints = fingerprints(labels, imputed.group_labels, n_types)
    sim = group_similarity(prints) if len(prints) >= 2 else None
    return FingerprintStage(n_types, assignment, types, labels, prints, sim)


def analyze(matrix: QuestionnaireMatrix, config: Optional[AnalysisConfig] = None) -> AnalysisResult:
    config = config or AnalysisConfig()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        imputed, prepared = prepare(matrix, PrepConfig(config.k_impute, config.augment_sd, config.seed))
        n = prepared.n_rows
        k_max = min(config.max_clusters, n - 1)
        tree = agglomerate(prepared.values)
        curve = gap_curve(
            prepared.values, k_max, config.gap_refs, config.gap_seed(),
            dendrogram=tree, reference=REFERENCES[config.gap_reference],
        )
        if config.clusters is None:
            selection = select_num_clusters(curve, config.select_rule)
        else:
            if config.clusters > n:
                raise ValueError(f"--clusters {config.clusters} exceeds the {n} prepared rows")
            selection = Selection(config.clusters, "override", False, curve)
        stage = fingerprint_stage(imputed, prepared, tree, selection.n_clusters)
    return AnalysisResult(
        config, imputed, prepared, tree, curve, selection, stage,
        [str(w.message) for w in caught],
    )


def build_report(result: AnalysisResult) -> dict:
    cfg, st = result.config, result.stage
    types = st.types
    groups = []
    for f in st.prints:
        groups.append({
            "group": f.group,
            "n_rows": int(np.sum(np.asarray(result.imputed.group_labels) == f.group)),
            "fingerprint": f.weights.tolist(),
            "normalized_entropy": normalized_entropy(f),
            "group_mean": group_mean(f, types).tolist(),
        })
    sim = st.similarity
    report = {
        "schema_version": SCHEMA_VERSION,
        "metadata": {
            "package_version": __version__,
            "seed": cfg.seed,
            "config": asdict(cfg),
            "seeds": {"prepare": cfg.seed, "gap_statistic": cfg.gap_seed()},
            "method": {
                "linkage": "ward",
                "algorithm": "nearest-neighbor-chain",
                "gap_reference": result.curve.reference,
                "gap_data": "prepared",
                "group_linkage": GROUP_LINKAGE,
                "group_metric": GROUP_METRIC,
                "dendrogram_height": "raw-merge-cost",
            },
        },
        "input": {
            "n_rows": result.imputed.n_rows,
            "n_items": result.imputed.n_items,
            "scale": [result.imputed.scale_min, result.imputed.scale_max],
            "groups": result.imputed.groups,
            "n_prepared_rows": result.prepared.n_rows,
            "n_imputed_cells": int(np.isnan(result.imputed.values).sum()),
        },
        "gap_curve": result.curve.to_dict(),
        "selection": {
            "n_clusters": result.selection.n_clusters,
            "rule": result.selection.rule,
            "fallback": result.selection.fallback,
        },
        "response_types": types.centroids.tolist(),
        "groups": groups,
        "group_similarity": None if sim is None else {
            "groups": list(sim.groups),
            "distances": sim.distances.tolist(),
            "dendrogram": sim.dendrogram.to_dict(),
            "newick": sim.newick(),
        },
        "spider": {
            "axis_range": list(SPIDER_AXIS),
            "fingerprints": {
                f.group: [[j + 1, float(w)] for j, w in enumerate(f.weights)] for f in st.prints
            },
            "response_types": {
                str(j + 1): [[i + 1, float(v)] for i, v in enumerate(row)]
                for j, row in enumerate(types.centroids)
            },
            "response_type_axis_range": [0, result.imputed.scale_max],
        },
        "warnings": result.warnings,
    }
    return report


def canonical(obj):
    """Round floats to 12 significant digits and replace non-finite numbers with None."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        x = float(format(x, ".12g"))
        return 0.0 if x == 0 else x
    return obj
