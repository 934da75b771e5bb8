"""Ward agglomerative clustering, dendrogram cuts and the gap statistic.

The merge tree is built with the nearest-neighbour-chain algorithm, which is
exact for Ward's criterion because the linkage is reducible. Centroids are
updated in place and dissimilarities are computed on demand, so the build is
O(n^2 d) time with O(n) working memory beyond the input.
"""

from __future__ import annotations

import heapq
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numba
import numpy as np

from .core import DegenerateDataError, Dendrogram, GapCurve

REFERENCE_VARIANT = "uniform-bounding-box"


class SelectionWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    labels: np.ndarray  # cluster index per row, clusters ordered by smallest member row
    centroids: np.ndarray
    within_dispersion: float

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]


def ward_delta(size_a, centroid_a, size_b, centroid_b) -> float:
    """Increase in total within-cluster sum of squares when merging A and B."""
    ca, cb = np.asarray(centroid_a, dtype=float), np.asarray(centroid_b, dtype=float)
    if ca.shape != cb.shape:
        raise ValueError(f"centroid dimensions differ: {ca.shape} vs {cb.shape}")
    if size_a < 1 or size_b < 1:
        raise ValueError("cluster sizes must be >= 1")
    diff = ca - cb
    return float(size_a * size_b / (size_a + size_b) * np.dot(diff, diff))


@numba.njit(cache=True, nogil=True)
def _nn_chain(X):
    n, d = X.shape
    cent = X.copy()
    size = np.ones(n)
    minid = np.arange(n)
    # active slots kept compact: alive[:n_alive], pos[slot] = index into alive
    alive = np.arange(n)
    pos = np.arange(n)
    n_alive = n
    chain = np.empty(n, dtype=np.int64)
    top = 0
    out_a = np.empty(n - 1, dtype=np.int64)
    out_b = np.empty(n - 1, dtype=np.int64)
    out_cost = np.empty(n - 1)
    out_size = np.empty(n - 1)
    m = 0
    while m < n - 1:
        if top == 0:
            chain[0] = alive[0]
            top = 1
        a = chain[top - 1]
        prev = chain[top - 2] if top >= 2 else -1
        sa = size[a]
        ma = minid[a]
        best = -1
        best_delta = np.inf
        best_lo = n
        best_hi = n
        for q in range(n_alive):
            j = alive[q]
            if j == a:
                continue
            sq = 0.0
            for t in range(d):
                diff = cent[a, t] - cent[j, t]
                sq += diff * diff
            delta = sa * size[j] / (sa + size[j]) * sq
            # strict total order on pairs: (delta, smaller min id, larger min id)
            lo = min(ma, minid[j])
            hi = max(ma, minid[j])
            if delta < best_delta or (
                delta == best_delta and (lo < best_lo or (lo == best_lo and hi < best_hi))
            ):
                best_delta = delta
                best = j
                best_lo = lo
                best_hi = hi
        if best != prev:
            chain[top] = best
            top += 1
            continue
        top -= 2
        b = prev
        keep, drop = (a, b) if minid[a] < minid[b] else (b, a)
        out_a[m] = minid[keep]
        out_b[m] = minid[drop]
        out_cost[m] = best_delta
        sk, sd = size[keep], size[drop]
        for t in range(d):
            cent[keep, t] = (sk * cent[keep, t] + sd * cent[drop, t]) / (sk + sd)
        size[keep] = sk + sd
        out_size[m] = sk + sd
        last = alive[n_alive - 1]
        alive[pos[drop]] = last
        pos[last] = pos[drop]
        n_alive -= 1
        m += 1
    return out_a, out_b, out_cost, out_size


def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def _tree_from_pairs(n, rep_a, rep_b, cost) -> Dendrogram:
    """Turn merges keyed by representative leaves into a node-id dendrogram.

    Representatives are the smallest leaf of each cluster. Merges are emitted
    in the greedy order: among merges whose children already exist, the one
    with the smallest (cost, rep_a, rep_b) goes next. Node ids follow that
    order.
    """
    # guard against round-off making a parent cheaper than its child
    cost = cost.copy()
    last = {}  # representative -> index of the merge that last formed it
    deps = []
    for i in range(len(cost)):
        a, b = int(rep_a[i]), int(rep_b[i])
        deps.append([last[r] for r in (a, b) if r in last])
        cost[i] = max([cost[i]] + [cost[j] for j in deps[i]])
        last[a] = i
    waiting = [len(dep) for dep in deps]
    unlocks = [[] for _ in deps]
    for i, dep in enumerate(deps):
        for j in dep:
            unlocks[j].append(i)
    ready = [(cost[i], int(rep_a[i]), int(rep_b[i]), i) for i in range(len(deps)) if not waiting[i]]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)[3]
        order.append(i)
        for j in unlocks[i]:
            waiting[j] -= 1
            if not waiting[j]:
                heapq.heappush(ready, (cost[j], int(rep_a[j]), int(rep_b[j]), j))

    parent = list(range(n))
    node_of = list(range(n))  # root leaf -> current node id
    minid = list(range(n))
    sizes = [1] * (2 * n - 1)
    merges = np.empty((n - 1, 4))
    for step, i in enumerate(order):
        ra, rb = _find(parent, int(rep_a[i])), _find(parent, int(rep_b[i]))
        if minid[ra] > minid[rb]:
            ra, rb = rb, ra
        left, right = node_of[ra], node_of[rb]
        new = n + step
        sizes[new] = sizes[left] + sizes[right]
        merges[step] = (left, right, cost[i], sizes[new])
        parent[rb] = ra
        node_of[ra] = new
    return Dendrogram(merges, n)


def agglomerate(points) -> Dendrogram:
    """Ward merge tree of the rows of ``points``.

    Ties in the merge cost are broken toward the pair whose (smallest row id
    of A, smallest row id of B) is lexicographically smallest.
    """
    X = np.ascontiguousarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two points to agglomerate")
    ra, rb, cost, _ = _nn_chain(X)
    return _tree_from_pairs(X.shape[0], ra, rb, cost)


def cut_labels(dendrogram: Dendrogram, n_clusters: int) -> np.ndarray:
    """Cluster index per leaf after undoing the last ``n_clusters - 1`` merges.

    Clusters are numbered in order of their smallest member leaf.
    """
    n = dendrogram.n_leaves
    if not 1 <= n_clusters <= n:
        raise ValueError(f"number of clusters must be in [1, {n}], got {n_clusters}")
    kept = n - n_clusters
    parent = np.arange(2 * n - 1)
    children = dendrogram.merges[:kept, :2].astype(np.int64)
    parent[children[:, 0]] = parent[children[:, 1]] = n + np.arange(kept)
    while True:  # pointer doubling
        nxt = parent[parent]
        if np.array_equal(nxt, parent):
            break
        parent = nxt
    roots = parent[:n]
    # leaves are scanned in index order, so first occurrence = smallest member
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse.ravel()]


def assignment_from_labels(points, labels) -> ClusterAssignment:
    X = np.asarray(points, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ValueError("every cluster index must be used")
    centroids = np.zeros((k, X.shape[1]))
    np.add.at(centroids, labels, X)
    centroids /= counts[:, None]
    w = float(np.sum((X - centroids[labels]) ** 2))
    return ClusterAssignment(labels, centroids, w)


def cut(dendrogram: Dendrogram, points, n_clusters: int) -> ClusterAssignment:
    X = np.asarray(points, dtype=float)
    if X.shape[0] != dendrogram.n_leaves:
        raise ValueError("points do not match the dendrogram leaves")
    return assignment_from_labels(X, cut_labels(dendrogram, n_clusters))


def within_dispersions(dendrogram: Dendrogram, points, k_max: int) -> np.ndarray:
    """W_k for k = 1..k_max, each from an explicit cut."""
    return np.array([cut(dendrogram, points, k).within_dispersion for k in range(1, k_max + 1)])


def uniform_box_reference(points, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample over the axis-aligned bounding box of ``points``."""
    lo, hi = points.min(axis=0), points.max(axis=0)
    return lo + (hi - lo) * rng.random(points.shape)


def pca_box_reference(points, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample over the bounding box aligned with the principal axes."""
    mean = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - mean, full_matrices=False)
    rotated = (points - mean) @ vt.T
    return uniform_box_reference(rotated, rng) @ vt + mean


REFERENCES = {
    "uniform-bounding-box": uniform_box_reference,
    "pca-bounding-box": pca_box_reference,
}


def gap_curve(
    points,
    k_max: int,
    B: int = 10,
    seed: int = 0,
    *,
    dendrogram: Optional[Dendrogram] = None,
    reference: Callable[[np.ndarray, np.random.Generator], np.ndarray] = uniform_box_reference,
    workers: int = 1,
) -> GapCurve:
    """Gap statistic for k = 1..k_max on a Ward hierarchy.

    Each of the ``B`` reference sets is drawn from its own substream
    ``SeedSequence(seed, spawn_key=(b,))``, so results do not depend on
    ``workers``. Pass ``dendrogram`` to reuse an existing tree of ``points``.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    if not 1 <= k_max < n:
        raise ValueError(f"k_max must be in [1, {n - 1}]")
    if B < 1:
        raise ValueError("need at least one reference replicate")
    if np.all(X == X[0]):
        raise DegenerateDataError("all points are identical; log W_k is undefined")

    if dendrogram is None:
        dendrogram = agglomerate(X)
    w = within_dispersions(dendrogram, X, k_max)
    if np.any(w <= 0):
        raise DegenerateDataError(
            f"within-cluster dispersion vanishes at k={int(np.argmax(w <= 0)) + 1}"
        )

    def one_reference(b):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        ref = reference(X, rng)
        return np.log(within_dispersions(agglomerate(ref), ref, k_max))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            ref_logs = np.array(list(pool.map(one_reference, range(B))))
    else:
        ref_logs = np.array([one_reference(b) for b in range(B)])

    return GapCurve(
        ks=np.arange(1, k_max + 1),
        log_w=np.log(w),
        ref_mean_log_w=ref_logs.mean(axis=0),
        s=ref_logs.std(axis=0) * math.sqrt(1 + 1 / B),
        B=B,
        seed=seed,
        reference=REFERENCE_VARIANT if reference is uniform_box_reference else getattr(reference, "__name__", "custom"),
    )


@dataclass(frozen=True)
class Selection:
    n_clusters: int
    rule: str
    fallback: bool  # True when no k satisfied the rule and k_max was returned
    curve: GapCurve


def select_num_clusters(curve: GapCurve, rule: str = "first-local-max") -> Selection:
    """Choose the number of clusters from a gap curve.

    ``first-local-max``: smallest k >= 2 with gap[k-1] < gap[k] >= gap[k+1].
    ``tibshirani``: smallest k with gap[k] >= gap[k+1] - s[k+1].
    Falls back to k_max with ``fallback=True`` and a ``SelectionWarning``.
    """
    g, s, ks = curve.gap, curve.s, curve.ks
    if len(ks) < 2:
        raise ValueError("gap curve needs k_max >= 2")
    chosen = None
    if rule == "first-local-max":
        for i in range(1, len(ks) - 1):
            if g[i - 1] < g[i] >= g[i + 1]:
                chosen = int(ks[i])
                break
    elif rule == "tibshirani":
        for i in range(len(ks) - 1):
            if g[i] >= g[i + 1] - s[i + 1]:
                chosen = int(ks[i])
                break
    else:
        raise ValueError(f"unknown selection rule {rule!r}")
    if chosen is None:
        warnings.warn(f"no k satisfies the {rule} rule; using k_max={curve.k_max}", SelectionWarning)
        return Selection(curve.k_max, rule, True, curve)
    return Selection(chosen, rule, False, curve)


def merge_sets(dendrogram: Dendrogram, names=None) -> list[frozenset]:
    """Leaf-name sets formed by each merge, in merge order (tree topology)."""
    n = dendrogram.n_leaves
    names = list(range(n)) if names is None else list(names)
    members = [frozenset([x]) for x in names]
    out = []
    for i in range(n - 1):
        a, b = dendrogram.children(i)
        members.append(members[a] | members[b])
        out.append(members[-1])
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def to_newick(dendrogram: Dendrogram, names=None) -> str:
    """Single-line Newick; node heights are raw merge costs, branch = height gap."""
    n = dendrogram.n_leaves
    names = [str(i) for i in range(n)] if names is None else [str(x) for x in names]
    text = [_newick_name(x) for x in names]
    height = [0.0] * n
    for i in range(n - 1):
        a, b = dendrogram.children(i)
        h = float(dendrogram.merges[i, 2])
        text.append(f"({text[a]}:{_fmt(h - height[a])},{text[b]}:{_fmt(h - height[b])})")
        height.append(h)
    return text[-1] + ";" if n > 1 else text[0] + ";"


def _newick_name(name: str) -> str:
    if any(c in name for c in " ():;,[]'"):
        return "'" + name.replace("'", "''") + "'"
    return name


def to_linkage(dendrogram: Dendrogram) -> np.ndarray:
    """The merge list in scipy linkage layout (for plotting)."""
    return np.array(dendrogram.merges, dtype=float)
