"""Classical comparison pipeline: PCA gates, PCA, reliability and rank tests.

Tie corrections are applied throughout because Likert data is heavily tied.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .core import DegenerateDataError, InputError, QuestionnaireMatrix

BARTLETT_ALPHA = 0.05
KMO_MIN = 0.7
LOW_LOADING = 0.4


class SingularCorrelationError(DegenerateDataError):
    pass


class DegenerateTestWarning(UserWarning):
    pass


def correlation_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise InputError("need a 2-d matrix with at least two items")
    sd = X.std(axis=0)
    if np.any(sd == 0):
        raise SingularCorrelationError(f"items {list(np.flatnonzero(sd == 0) + 1)} are constant")
    return np.corrcoef(X, rowvar=False)


def _checked_inverse(R):
    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularCorrelationError(f"correlation matrix is singular (condition number {cond:.3g})")
    return np.linalg.inv(R)


def bartlett_sphericity(X) -> dict:
    """Bartlett's test that the correlation matrix is the identity."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n <= d:
        raise InputError(f"need more rows than items (n={n}, d={d})")
    R = correlation_matrix(X)
    _checked_inverse(R)
    sign, logdet = np.linalg.slogdet(R)
    if sign <= 0:
        raise SingularCorrelationError("correlation matrix is not positive definite")
    statistic = -(n - 1 - (2 * d + 5) / 6) * logdet
    df = d * (d - 1) // 2
    return {"statistic": float(statistic), "df": df, "p": float(stats.chi2.sf(statistic, df))}


def kmo(X) -> dict:
    """Kaiser-Meyer-Olkin sampling adequacy, overall and per item."""
    R = correlation_matrix(X)
    S = _checked_inverse(R)
    scale = np.sqrt(np.outer(np.diag(S), np.diag(S)))
    partial = -S / scale
    off = ~np.eye(R.shape[0], dtype=bool)
    r2 = np.where(off, R**2, 0.0)
    p2 = np.where(off, partial**2, 0.0)
    per_item = r2.sum(axis=1) / (r2.sum(axis=1) + p2.sum(axis=1))
    overall = r2.sum() / (r2.sum() + p2.sum())
    return {"overall": float(overall), "per_item": per_item.tolist()}


def pca(X) -> dict:
    """Correlation-matrix PCA with the Kaiser criterion (eigenvalues strictly above 1)."""
    R = correlation_matrix(X)
    try:
        vals, vecs = np.linalg.eigh(R)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDataError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    loadings = vecs * np.sqrt(np.clip(vals, 0.0, None))
    for c in range(loadings.shape[1]):
        if loadings[np.argmax(np.abs(loadings[:, c])), c] < 0:
            loadings[:, c] *= -1
    return {
        "eigenvalues": vals.tolist(),
        "loadings": loadings.tolist(),
        "n_kaiser_components": int(np.sum(vals > 1)),
    }


def cronbach_alpha(X) -> float:
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if d < 2:
        raise InputError("Cronbach's alpha needs at least two items")
    total_var = X.sum(axis=1).var(ddof=1)
    if total_var == 0:
        raise DegenerateDataError("row sums have zero variance")
    return float(d / (d - 1) * (1 - X.var(axis=0, ddof=1).sum() / total_var))


def _pooled_ranks(samples):
    samples = [np.asarray(s, dtype=float).ravel() for s in samples]
    if len(samples) < 2:
        raise InputError("need at least two groups")
    if any(s.size == 0 for s in samples):
        raise InputError("every group needs at least one observation")
    pooled = np.concatenate(samples)
    ranks = stats.rankdata(pooled)
    _, ties = np.unique(pooled, return_counts=True)
    bounds = np.cumsum([0] + [s.size for s in samples])
    mean_ranks = np.array([ranks[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
    sizes = np.array([s.size for s in samples])
    return mean_ranks, sizes, pooled.size, float(np.sum(ties.astype(float) ** 3 - ties))


def kruskal_wallis(samples: Sequence) -> dict:
    """Kruskal-Wallis H with tie correction; chi-square p with g - 1 df.

    If every observation is identical, H is 0 and p is 1 (``degenerate`` set).
    """
    mean_ranks, sizes, N, tie_sum = _pooled_ranks(samples)
    df = len(sizes) - 1
    correction = 1 - tie_sum / (N**3 - N) if N > 1 else 0.0
    if correction <= 0:
        warnings.warn("all observations are tied; H set to 0", DegenerateTestWarning)
        return {"H": 0.0, "df": df, "p": 1.0, "degenerate": True}
    H = (12 / (N * (N + 1)) * np.sum(sizes * mean_ranks**2) - 3 * (N + 1)) / correction
    H = max(float(H), 0.0)
    return {"H": H, "df": df, "p": float(stats.chi2.sf(H, df)), "degenerate": False}


def dunn_posthoc(samples: Sequence, names: Optional[Sequence[str]] = None) -> list[dict]:
    """Dunn's pairwise z tests on mean ranks with Bonferroni adjustment."""
    mean_ranks, sizes, N, tie_sum = _pooled_ranks(samples)
    g = len(sizes)
    names = [str(i) for i in range(g)] if names is None else [str(x) for x in names]
    n_pairs = g * (g - 1) // 2
    var = N * (N + 1) / 12 - tie_sum / (12 * (N - 1)) if N > 1 else 0.0
    if var <= 0:
        warnings.warn("all observations are tied; Dunn p-values set to 1", DegenerateTestWarning)
    rows = []
    for i, j in itertools.combinations(range(g), 2):
        if var <= 0:
            z, p = 0.0, 1.0
        else:
            z = (mean_ranks[i] - mean_ranks[j]) / math.sqrt(var * (1 / sizes[i] + 1 / sizes[j]))
            p = float(2 * stats.norm.sf(abs(z)))
        rows.append({
            "pair": [names[i], names[j]],
            "z": float(z),
            "p": p,
            "p_adjusted": min(1.0, p * n_pairs),
        })
    return rows


def spearman(x, y) -> float:
    """Pearson correlation of mid-ranks; NaN when either input is constant."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("spearman needs two vectors of equal length")
    if x.size < 3:
        raise InputError("spearman needs at least three observations")
    rx, ry = stats.rankdata(x), stats.rankdata(y)
    rx, ry = rx - rx.mean(), ry - ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        return math.nan
    return float(np.clip(rx @ ry / denom, -1.0, 1.0))


@dataclass
class GroupBaseline:
    group: str
    n: int
    bartlett: dict
    kmo: dict
    eigenvalues: list
    loadings: list
    n_kaiser_components: int
    cronbach_alpha: float
    low_loading_items: list  # 1-based items loading below the cutoff on component 1
    applicable: bool
    reasons: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["verdict"] = "applicable" if self.applicable else "not-applicable"
        return d


@dataclass
class BaselineReport:
    groups: list[GroupBaseline]
    kruskal_wallis: Optional[dict]
    dunn: Optional[list]
    comparison_note: str
    thresholds: dict

    @property
    def applicable(self) -> bool:
        return all(g.applicable for g in self.groups)

    def group(self, name: str) -> GroupBaseline:
        return next(g for g in self.groups if g.group == name)

    def to_dict(self) -> dict:
        return {
            "verdict": "applicable" if self.applicable else "not-applicable",
            "groups": [g.to_dict() for g in self.groups],
            "kruskal_wallis": self.kruskal_wallis,
            "dunn_bonferroni": self.dunn,
            "comparison_note": self.comparison_note,
            "thresholds": self.thresholds,
        }


def analyze_group(name: str, X, kmo_min=KMO_MIN, bartlett_alpha=BARTLETT_ALPHA, low_loading=LOW_LOADING) -> GroupBaseline:
    bt = bartlett_sphericity(X)
    km = kmo(X)
    pc = pca(X)
    alpha = cronbach_alpha(X)
    first = np.abs(np.asarray(pc["loadings"])[:, 0])
    reasons = []
    if not bt["p"] < bartlett_alpha:
        reasons.append("bartlett")
    if not km["overall"] >= kmo_min:
        reasons.append("kmo")
    if pc["n_kaiser_components"] != 1:
        reasons.append("multi-component")
    return GroupBaseline(
        group=name,
        n=int(np.asarray(X).shape[0]),
        bartlett=bt,
        kmo=km,
        eigenvalues=pc["eigenvalues"],
        loadings=pc["loadings"],
        n_kaiser_components=pc["n_kaiser_components"],
        cronbach_alpha=alpha,
        low_loading_items=[int(i) + 1 for i in np.flatnonzero(first < low_loading)],
        applicable=not reasons,
        reasons=reasons,
    )


def classical_pipeline(matrix: QuestionnaireMatrix, kmo_min=KMO_MIN, bartlett_alpha=BARTLETT_ALPHA, low_loading=LOW_LOADING) -> BaselineReport:
    """Per-group gates and PCA, then rank tests on per-row item means.

    The cross-group tests run only when every group passes both gates and has a
    single Kaiser component; otherwise they are omitted and the note says why.
    """
    if not matrix.is_complete:
        raise InputError("the classical pipeline needs a complete matrix; impute missing cells first")
    groups = [
        analyze_group(g, matrix.group_values(g), kmo_min, bartlett_alpha, low_loading)
        for g in matrix.groups
    ]
    thresholds = {"bartlett_alpha": bartlett_alpha, "kmo_min": kmo_min, "low_loading": low_loading}
    blocked = [g.group for g in groups if not g.applicable]
    if blocked:
        note = "group comparison not applicable: groups " + ", ".join(
            f"{g.group} ({'/'.join(g.reasons)})" for g in groups if not g.applicable
        )
        return BaselineReport(groups, None, None, note, thresholds)
    scores = [matrix.group_values(g).mean(axis=1) for g in matrix.groups]
    kw = kruskal_wallis(scores)
    dunn = dunn_posthoc(scores, matrix.groups)
    return BaselineReport(groups, kw, dunn, "item means compared across groups", thresholds)
