import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import compositions, kw_statistic, label_assignments, midranks, split
from respclust.baseline import (
    DegenerateTestWarning,
    SingularCorrelationError,
    bartlett_sphericity,
    classical_pipeline,
    cronbach_alpha,
    dunn_posthoc,
    kmo,
    kruskal_wallis,
    pca,
    spearman,
)
from respclust.core import InputError, QuestionnaireMatrix


def with_correlation(r, n, seed=0):
    """Two columns whose sample correlation is exactly r."""
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n, 2))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    return Q @ np.array([[1.0, r], [0.0, math.sqrt(1 - r * r)]])


def orthogonal_columns(d):
    """Columns of a Sylvester-Hadamard matrix minus the all-ones column: exactly uncorrelated."""
    H = np.array([[1.0]])
    while H.shape[0] < d + 1:
        H = np.block([[H, H], [H, -H]])
    return H[:, 1: d + 1]


def test_bartlett_two_items():
    res = bartlett_sphericity(with_correlation(0.9, 100))
    assert res["df"] == 1
    assert res["statistic"] == pytest.approx(-97.5 * math.log(0.19), rel=1e-9)
    assert res["statistic"] == pytest.approx(161.9, abs=0.05)
    assert res["p"] < 1e-30


def test_bartlett_identity():
    res = bartlett_sphericity(orthogonal_columns(5))
    assert res["statistic"] == pytest.approx(0, abs=1e-9)
    assert res["p"] == pytest.approx(1)


def test_bartlett_checks():
    with pytest.raises(InputError):
        bartlett_sphericity(np.random.default_rng(0).normal(size=(3, 4)))
    X = np.random.default_rng(0).normal(size=(50, 3))
    X[:, 2] = X[:, 0] + X[:, 1]
    with pytest.raises(SingularCorrelationError, match="condition number"):
        bartlett_sphericity(X)


@pytest.mark.parametrize("r", [0.9, -0.3, 0.05])
def test_kmo_two_items_is_half(r):
    res = kmo(with_correlation(r, 60))
    assert res["overall"] == pytest.approx(0.5)
    assert res["per_item"] == pytest.approx([0.5, 0.5])


def test_kmo_matches_direct_formula():
    X = np.random.default_rng(3).normal(size=(200, 4)) @ np.random.default_rng(4).normal(size=(4, 4))
    R = np.corrcoef(X, rowvar=False)
    S = np.linalg.inv(R)
    num = den = 0.0
    for i in range(4):
        for j in range(4):
            if i != j:
                p = -S[i, j] / math.sqrt(S[i, i] * S[j, j])
                num += R[i, j] ** 2
                den += R[i, j] ** 2 + p**2
    assert kmo(X)["overall"] == pytest.approx(num / den)


def test_pca_perfectly_correlated():
    base = np.random.default_rng(0).normal(size=50)
    X = np.column_stack([base, 2 * base + 1, -base * 0.5 + 3])
    res = pca(X)
    assert res["eigenvalues"] == pytest.approx([3, 0, 0], abs=1e-9)
    assert res["n_kaiser_components"] == 1


def test_pca_identity_has_no_kaiser_component():
    res = pca(orthogonal_columns(6))
    assert res["eigenvalues"] == pytest.approx([1] * 6, abs=1e-12)
    assert res["n_kaiser_components"] == 0


@settings(max_examples=50)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_pca_trace_and_order(d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, d)) @ rng.normal(size=(d, d))
    res = pca(X)
    ev = np.array(res["eigenvalues"])
    assert ev.sum() == pytest.approx(d, abs=1e-6)
    assert np.all(np.diff(ev) <= 1e-12)
    L = np.array(res["loadings"])
    for c in range(d):
        assert L[np.argmax(np.abs(L[:, c])), c] >= 0
    # loadings reproduce the correlation matrix
    assert np.allclose(L @ L.T, np.corrcoef(X, rowvar=False), atol=1e-8)


def test_cronbach_alpha_examples():
    base = np.random.default_rng(1).integers(1, 6, size=30).astype(float)
    assert cronbach_alpha(np.column_stack([base] * 4)) == pytest.approx(1)
    indep = np.random.default_rng(2).normal(size=(100_000, 5))
    assert abs(cronbach_alpha(indep)) < 0.02
    with pytest.raises(InputError):
        cronbach_alpha(np.ones((5, 1)))


def test_cronbach_alpha_formula():
    X = np.array([[1, 2, 3], [2, 2, 4], [3, 4, 4], [5, 4, 5.0]])
    d = 3
    expected = d / (d - 1) * (1 - X.var(axis=0, ddof=1).sum() / X.sum(axis=1).var(ddof=1))
    assert cronbach_alpha(X) == pytest.approx(expected)


def test_kruskal_wallis_worked_example():
    res = kruskal_wallis([[1, 2, 3], [4, 5, 6]])
    assert res["H"] == pytest.approx(27 / 7)
    assert round(res["H"], 3) == 3.857
    assert res["df"] == 1
    assert round(res["p"], 4) == 0.0495


def test_kruskal_wallis_all_equal():
    with pytest.warns(DegenerateTestWarning):
        res = kruskal_wallis([[2, 2], [2, 2, 2]])
    assert res["H"] == 0 and res["p"] == 1 and res["degenerate"]


def test_kruskal_wallis_input_checks():
    with pytest.raises(InputError):
        kruskal_wallis([[1, 2, 3]])
    with pytest.raises(InputError):
        kruskal_wallis([[1, 2], []])


@pytest.mark.parametrize("sizes", [c for c in compositions(7) if len(c) <= 4])
def test_kruskal_wallis_statistic_matches_oracle_on_every_labelling(sizes):
    pooled = np.array([1, 1, 2, 3, 3, 3, 4][: sum(sizes)], dtype=float)
    for a in label_assignments(sizes)[:200]:
        samples = split(pooled, a, len(sizes))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateTestWarning)
            got = kruskal_wallis(samples)["H"]
        assert got == pytest.approx(kw_statistic(samples), abs=1e-9)


@settings(max_examples=60)
@given(st.lists(st.lists(st.integers(1, 5), min_size=1, max_size=12), min_size=2, max_size=5))
def test_kruskal_wallis_matches_scipy(samples):
    if len({x for s in samples for x in s}) < 2:
        return
    ours = kruskal_wallis(samples)
    ref = stats.kruskal(*samples)
    assert ours["H"] == pytest.approx(ref.statistic, rel=1e-9, abs=1e-12)
    assert ours["p"] == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)
    assert 0 <= ours["p"] <= 1


@settings(max_examples=60)
@given(st.lists(st.lists(st.integers(-100, 100), min_size=1, max_size=10), min_size=2, max_size=4))
def test_kruskal_wallis_monotone_invariance(samples):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTestWarning)
        a = kruskal_wallis(samples)["H"]
        b = kruskal_wallis([[math.exp(x / 20) - 5 for x in s] for s in samples])["H"]
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


def dunn_reference(samples):
    """Dunn z and p straight from the textbook formula via counting mid-ranks."""
    pooled = [x for s in samples for x in s]
    ranks = midranks(pooled)
    N = len(pooled)
    counts = {}
    for x in pooled:
        counts[x] = counts.get(x, 0) + 1
    tie = sum(t**3 - t for t in counts.values())
    pos, means = 0, []
    for s in samples:
        means.append(sum(ranks[pos: pos + len(s)]) / len(s))
        pos += len(s)
    out = []
    g = len(samples)
    for i in range(g):
        for j in range(i + 1, g):
            se = math.sqrt((N * (N + 1) / 12 - tie / (12 * (N - 1))) * (1 / len(samples[i]) + 1 / len(samples[j])))
            z = (means[i] - means[j]) / se
            p = math.erfc(abs(z) / math.sqrt(2))
            out.append((z, p, min(1.0, p * g * (g - 1) / 2)))
    return out


def test_dunn_identical_groups():
    rows = dunn_posthoc([[1, 2, 3], [1, 2, 3]])
    assert rows[0]["z"] == 0
    assert rows[0]["p_adjusted"] == 1


def test_dunn_three_groups_one_identical_pair():
    rows = dunn_posthoc([[1, 2, 3], [7, 8, 9], [1, 2, 3]], ["a", "b", "c"])
    by = {tuple(r["pair"]): r for r in rows}
    assert by["a", "c"]["p_adjusted"] == 1
    for r in rows:
        assert r["p_adjusted"] >= r["p"]
        assert r["p_adjusted"] == min(1.0, 3 * r["p"])


def test_dunn_degenerate():
    with pytest.warns(DegenerateTestWarning):
        rows = dunn_posthoc([[4, 4], [4]])
    assert rows[0]["p"] == 1


@settings(max_examples=60)
@given(st.lists(st.lists(st.integers(1, 5), min_size=1, max_size=10), min_size=2, max_size=5))
def test_dunn_matches_reference(samples):
    if len({x for s in samples for x in s}) < 2:
        return
    rows = dunn_posthoc(samples)
    ref = dunn_reference(samples)
    assert len(rows) == len(ref)
    for r, (z, p, pa) in zip(rows, ref):
        assert r["z"] == pytest.approx(z, abs=1e-9)
        assert r["p"] == pytest.approx(p, abs=1e-9)
        assert r["p_adjusted"] == pytest.approx(pa, abs=1e-9)
        assert 0 <= r["p"] <= r["p_adjusted"] <= 1


def test_spearman_examples():
    x = [1, 2, 3, 4, 5]
    assert spearman(x, [math.exp(v) for v in x]) == pytest.approx(1)
    assert spearman(x, [-v**3 for v in x]) == pytest.approx(-1)
    assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)
    assert math.isnan(spearman([1, 2, 3], [5, 5, 5]))
    with pytest.raises(InputError):
        spearman([1, 2], [1, 2])


@settings(max_examples=80)
@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-1000, 1000).map(lambda v: v / 100)), min_size=3, max_size=30))
def test_spearman_properties(pairs):
    x, y = map(np.array, zip(*pairs))
    rho = spearman(x, y)
    if math.isnan(rho):
        assert len(set(x)) == 1 or len(set(y)) == 1
        return
    assert -1 <= rho <= 1
    assert rho == pytest.approx(stats.spearmanr(x, y).statistic, abs=1e-9)
    assert spearman(np.exp(x / 3), np.arctan(y) * 2 + 7) == pytest.approx(rho, abs=1e-9)


# Preset-level behaviour

def test_d1_pipeline_applicable(datasets):
    rep = classical_pipeline(datasets("d1", 0))
    assert rep.applicable
    for g in rep.groups:
        assert g.bartlett["p"] < 0.001
        assert g.kmo["overall"] > 0.7
        assert g.n_kaiser_components == 1
        assert g.cronbach_alpha > 0.7
        assert sum(g.eigenvalues) == pytest.approx(7, abs=1e-6)
    assert rep.kruskal_wallis["df"] == 3
    assert len(rep.dunn) == 6
    assert rep.to_dict()["verdict"] == "applicable"


def test_d3_pipeline_blocked_by_kmo(datasets):
    rep = classical_pipeline(datasets("d3", 0))
    assert not rep.applicable
    for g in rep.groups:
        assert "kmo" in g.reasons
        assert g.kmo["overall"] < 0.4
    assert rep.kruskal_wallis is None and rep.dunn is None


def test_d2_low_loadings_and_group7_structure(datasets):
    rep = classical_pipeline(datasets("d2", 0))
    for name in ("5", "6"):
        g = rep.group(name)
        assert g.bartlett["p"] < 0.05 and g.kmo["overall"] >= 0.7
    assert 7 in rep.group("5").low_loading_items
    assert 4 in rep.group("6").low_loading_items
    g7 = rep.group("7")
    assert g7.n_kaiser_components == 2
    assert "multi-component" in g7.reasons
    second = np.abs(np.array(g7.loadings)[:, 1])
    assert set(np.argsort(second)[-2:] + 1) == {4, 7}


def test_pipeline_requires_complete_matrix():
    m = QuestionnaireMatrix(np.array([[1, np.nan], [2, 3], [3, 3.0]]), ("a",) * 3)
    with pytest.raises(InputError):
        classical_pipeline(m)
