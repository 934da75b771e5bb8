"""Shared domain types for questionnaire clustering.

Arrays stored on the types are made read-only at construction, so instances
can be shared freely between readers. Missing responses are NaN in the float
value grid; no integer sentinel is ever used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SCALE_MIN = 1
SCALE_MAX = 5


class InputError(ValueError):
    """Malformed or invalid input data."""


class DegenerateDataError(ArithmeticError):
    """Computation undefined for the given data (e.g. all points identical)."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def group_order(labels: Sequence[str]) -> list[str]:
    """Distinct labels in order of first appearance."""
    return list(dict.fromkeys(labels))


@dataclass(frozen=True, eq=False)
class QuestionnaireMatrix:
    values: np.ndarray
    group_labels: tuple[str, ...]
    scale_min: int = SCALE_MIN
    scale_max: int = SCALE_MAX

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InputError(f"expected a 2-d value grid, got shape {values.shape}")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "group_labels", tuple(str(g) for g in self.group_labels))
        if len(self.group_labels) != values.shape[0]:
            raise InputError(
                f"{len(self.group_labels)} group labels for {values.shape[0]} rows"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def is_complete(self) -> bool:
        return not self.missing.any()

    @property
    def groups(self) -> list[str]:
        return group_order(self.group_labels)

    def group_rows(self, group: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.group_labels) == group)

    def group_values(self, group: str) -> np.ndarray:
        return self.values[self.group_rows(group)]

    def with_values(self, values) -> "QuestionnaireMatrix":
        return QuestionnaireMatrix(values, self.group_labels, self.scale_min, self.scale_max)

    def __eq__(self, other):
        if not isinstance(other, QuestionnaireMatrix):
            return NotImplemented
        return (
            self.group_labels == other.group_labels
            and (self.scale_min, self.scale_max) == (other.scale_min, other.scale_max)
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def to_dict(self) -> dict:
        return {
            "values": [[None if np.isnan(v) else float(v) for v in row] for row in self.values],
            "group_labels": list(self.group_labels),
            "scale_min": self.scale_min,
            "scale_max": self.scale_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuestionnaireMatrix":
        values = [[np.nan if v is None else v for v in row] for row in d["values"]]
        values = np.array(values, dtype=float).reshape(len(d["values"]), -1)
        return cls(values, tuple(d["group_labels"]), d["scale_min"], d["scale_max"])


def validate(matrix) -> list[str]:
    """Return a list of human-readable violations; empty means valid.

    Accepts a ``QuestionnaireMatrix`` or a raw ``(rows, labels)`` pair so that
    ragged input can be reported instead of failing at construction.
    """
    if isinstance(matrix, QuestionnaireMatrix):
        rows, labels = matrix.values, matrix.group_labels
        lo, hi = matrix.scale_min, matrix.scale_max
    else:
        rows, labels = matrix
        lo, hi = SCALE_MIN, SCALE_MAX

    problems = []
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        problems.append(f"ragged rows: item counts {sorted(widths)}")
    if widths and min(widths) < 1:
        problems.append("rows must have at least one item")
    if len(labels) != len(rows):
        problems.append(f"{len(labels)} group labels for {len(rows)} rows")
    if len(labels) == 0:
        problems.append("empty group label set")
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if v is None or (isinstance(v, float) and np.isnan(v)):
                continue
            if not lo <= v <= hi:
                problems.append(f"row {i}, item {j + 1}: value {v} outside [{lo}, {hi}]")
    return problems


@dataclass(frozen=True, eq=False)
class PreparedMatrix:
    """Balanced, augmented real-valued matrix used only as clustering input."""

    values: np.ndarray
    group_labels: tuple[str, ...]
    duplicate: np.ndarray  # True for rows added by oversampling
    source_row: np.ndarray  # index into the imputed original matrix

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "group_labels", tuple(self.group_labels))
        object.__setattr__(self, "duplicate", _frozen(self.duplicate, bool))
        object.__setattr__(self, "source_row", _frozen(self.source_row, np.int64))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def group_sizes(self) -> dict[str, int]:
        labels = np.asarray(self.group_labels)
        return {g: int((labels == g).sum()) for g in group_order(self.group_labels)}

    def __eq__(self, other):
        if not isinstance(other, PreparedMatrix):
            return NotImplemented
        return (
            self.group_labels == other.group_labels
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.duplicate, other.duplicate)
            and np.array_equal(self.source_row, other.source_row)
        )

    def to_dict(self) -> dict:
        return {
            "values": self.values.tolist(),
            "group_labels": list(self.group_labels),
            "duplicate": self.duplicate.tolist(),
            "source_row": self.source_row.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreparedMatrix":
        return cls(np.array(d["values"], dtype=float), d["group_labels"], d["duplicate"], d["source_row"])


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Full merge tree.

    ``merges`` has one row per merge: (left id, right id, cost, size). Leaves
    are 0..n-1 and the i-th merge creates node n + i.
    """

    merges: np.ndarray
    n_leaves: int

    def __post_init__(self):
        merges = np.asarray(self.merges, dtype=float).reshape(-1, 4)
        if merges.shape[0] != self.n_leaves - 1:
            raise ValueError(f"{merges.shape[0]} merges for {self.n_leaves} leaves")
        object.__setattr__(self, "merges", _frozen(merges))

    @property
    def costs(self) -> np.ndarray:
        return self.merges[:, 2]

    def children(self, i: int) -> tuple[int, int]:
        return int(self.merges[i, 0]), int(self.merges[i, 1])

    def check(self) -> list[str]:
        """Structural invariant violations (empty when well formed)."""
        n = self.n_leaves
        problems = []
        seen = set()
        sizes = [1] * n
        for i, (a, b, cost, size) in enumerate(self.merges):
            a, b = int(a), int(b)
            for c in (a, b):
                if c in seen:
                    problems.append(f"node {c} used twice")
                if c >= n + i:
                    problems.append(f"merge {i} references future node {c}")
                seen.add(c)
            if cost < 0:
                problems.append(f"merge {i} has negative cost")
            if a < len(sizes) and b < len(sizes) and size != sizes[a] + sizes[b]:
                problems.append(f"merge {i} size {size} != {sizes[a]} + {sizes[b]}")
            sizes.append(int(size))
        if np.any(np.diff(self.costs) < 0):
            problems.append("merge costs decrease")
        return problems

    def __eq__(self, other):
        if not isinstance(other, Dendrogram):
            return NotImplemented
        return self.n_leaves == other.n_leaves and np.array_equal(self.merges, other.merges)

    def to_dict(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "merges": [
                {"left": int(a), "right": int(b), "cost": float(c), "size": int(s)}
                for a, b, c, s in self.merges
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dendrogram":
        rows = [(m["left"], m["right"], m["cost"], m["size"]) for m in d["merges"]]
        return cls(np.array(rows, dtype=float).reshape(-1, 4), d["n_leaves"])


@dataclass(frozen=True, eq=False)
class ResponseTypeSet:
    centroids: np.ndarray  # (n_types, n_items), row j is response type j

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("need at least one response type")
        object.__setattr__(self, "centroids", _frozen(c))

    def __len__(self):
        return self.centroids.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ResponseTypeSet):
            return NotImplemented
        return np.array_equal(self.centroids, other.centroids)

    def to_dict(self) -> dict:
        return {"centroids": self.centroids.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ResponseTypeSet":
        return cls(np.array(d["centroids"], dtype=float))


@dataclass(frozen=True, eq=False)
class Fingerprint:
    group: str
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(float(np.sum(w)) - 1.0) > 1e-9:
            raise ValueError(f"fingerprint of group {self.group!r} is not on the simplex")
        object.__setattr__(self, "weights", _frozen(w))

    def __eq__(self, other):
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return self.group == other.group and np.array_equal(self.weights, other.weights)

    def to_dict(self) -> dict:
        return {"group": self.group, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Fingerprint":
        return cls(d["group"], np.array(d["weights"], dtype=float))


@dataclass(frozen=True, eq=False)
class GapCurve:
    ks: np.ndarray
    log_w: np.ndarray
    ref_mean_log_w: np.ndarray
    s: np.ndarray
    B: int
    seed: Any
    reference: str = "uniform-bounding-box"

    def __post_init__(self):
        for name in ("log_w", "ref_mean_log_w", "s"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "ks", _frozen(self.ks, np.int64))

    @property
    def gap(self) -> np.ndarray:
        return self.ref_mean_log_w - self.log_w

    @property
    def k_max(self) -> int:
        return int(self.ks[-1])

    def __eq__(self, other):
        if not isinstance(other, GapCurve):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {
            "k": self.ks.tolist(),
            "log_w": self.log_w.tolist(),
            "ref_mean_log_w": self.ref_mean_log_w.tolist(),
            "gap": self.gap.tolist(),
            "s": self.s.tolist(),
            "B": self.B,
            "seed": self.seed,
            "reference": self.reference,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GapCurve":
        return cls(
            np.array(d["k"]), np.array(d["log_w"], dtype=float),
            np.array(d["ref_mean_log_w"], dtype=float), np.array(d["s"], dtype=float),
            d["B"], d["seed"], d.get("reference", "uniform-bounding-box"),
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise, rounded to the nearest integer, then clamped."""

    sd: float
    clamp_low: int = SCALE_MIN
    clamp_high: int = SCALE_MAX
    round_result: bool = True

    def __post_init__(self):
        if self.sd < 0:
            raise ValueError("noise sd must be nonnegative")
        if not self.clamp_low < self.clamp_high:
            raise ValueError("clamp_low must be below clamp_high")


def dumps(obj: Any) -> str:
    """JSON text for a domain object (via its ``to_dict``)."""
    return json.dumps(obj.to_dict())
