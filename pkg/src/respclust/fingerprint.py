"""Response types, group fingerprints and fingerprint similarity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cluster import ClusterAssignment, agglomerate, merge_sets, to_newick
from .core import Dendrogram, Fingerprint, QuestionnaireMatrix, ResponseTypeSet, group_order

GROUP_LINKAGE = "ward"
GROUP_METRIC = "euclidean"


def extract_response_types(assignment: ClusterAssignment) -> ResponseTypeSet:
    """Cluster centroids, in cluster-index order (clusters are ordered by smallest member row)."""
    return ResponseTypeSet(np.array(assignment.centroids, dtype=float))


def assign(matrix, types: ResponseTypeSet) -> np.ndarray:
    """Index of the nearest response type for every row; ties go to the lower index."""
    X = matrix.values if isinstance(matrix, QuestionnaireMatrix) else np.asarray(matrix, dtype=float)
    C = types.centroids
    if X.shape[1] != C.shape[1]:
        raise ValueError(f"rows have {X.shape[1]} items, response types have {C.shape[1]}")
    if np.isnan(X).any():
        raise ValueError("assign needs a complete matrix")
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)  # argmin returns the first minimum


def fingerprints(labels, group_labels: Sequence[str], n_types: int) -> list[Fingerprint]:
    """Share of each group's rows falling on each response type, groups in first-seen order."""
    labels = np.asarray(labels, dtype=np.int64)
    groups = np.asarray(group_labels)
    out = []
    for g in group_order(group_labels):
        mine = labels[groups == g]
        if mine.size == 0:
            raise ValueError(f"group {g!r} is empty")
        counts = np.bincount(mine, minlength=n_types)
        out.append(Fingerprint(g, counts / mine.size))
    return out


def normalized_entropy(f) -> float:
    """Shannon entropy of the weights divided by log(number of types); 0 log 0 = 0.

    A single response type gives 0 by convention.
    """
    w = np.asarray(f.weights if isinstance(f, Fingerprint) else f, dtype=float)
    if w.size < 2:
        return 0.0
    nz = w[w > 0]
    h = -float(np.sum(nz * np.log(nz))) / math.log(w.size)
    return min(max(h, 0.0), 1.0)


def group_mean(f, types: ResponseTypeSet) -> np.ndarray:
    w = np.asarray(f.weights if isinstance(f, Fingerprint) else f, dtype=float)
    if w.size != len(types):
        raise ValueError(f"{w.size} weights for {len(types)} response types")
    return w @ types.centroids


@dataclass(frozen=True, eq=False)
class GroupSimilarityResult:
    groups: tuple[str, ...]
    distances: np.ndarray
    dendrogram: Dendrogram

    def topology(self) -> list[frozenset]:
        """Group sets in merge order."""
        return merge_sets(self.dendrogram, self.groups)

    def newick(self) -> str:
        return to_newick(self.dendrogram, self.groups)

    def distance(self, a: str, b: str) -> float:
        return float(self.distances[self.groups.index(a), self.groups.index(b)])


def group_similarity(prints: Sequence[Fingerprint]) -> GroupSimilarityResult:
    """Pairwise Euclidean distances between fingerprints and their Ward tree."""
    if len(prints) < 2:
        raise ValueError("need at least two groups")
    if len({f.weights.size for f in prints}) != 1:
        raise ValueError("fingerprints have different numbers of response types")
    F = np.vstack([f.weights for f in prints])
    diff = F[:, None, :] - F[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    return GroupSimilarityResult(tuple(f.group for f in prints), dist, agglomerate(F))
