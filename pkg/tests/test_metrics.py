import itertools
import math
from collections import Counter

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tabqgan.exceptions import MetricError
from tabqgan.metrics import (
    StumpBoostingClassifier,
    StumpBoostingRegressor,
    downstream_score,
    ks_complement,
    overall_score,
    overlap_fraction,
    pair_contingency,
    pair_numeric,
    tvd_complement,
)
from tabqgan.schema import FeatureSpec, TabularSchema

# --- independent brute-force oracles -------------------------------------------


def bf_ks(r, s):
    worst = 0.0
    for x in set(r) | set(s):
        fr = sum(v <= x for v in r) / len(r)
        fs = sum(v <= x for v in s) / len(s)
        worst = max(worst, abs(fr - fs))
    return 1 - worst


def bf_tvd(r, s):
    cr, cs = Counter(r), Counter(s)
    return 1 - 0.5 * sum(abs(cr[k] / len(r) - cs[k] / len(s)) for k in set(cr) | set(cs))


def bf_pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return 0.0 if sxx == 0 or syy == 0 else sxy / math.sqrt(sxx * syy)


def bf_pair_numeric(ri, rj, si, sj):
    return 1 - abs(bf_pearson(si, sj) - bf_pearson(ri, rj)) / 2


def bf_contingency(ri, rj, si, sj):
    return bf_tvd(list(zip(map(str, ri), map(str, rj))), list(zip(map(str, si), map(str, sj))))


def bf_overall(real, synth, schema):
    shape = []
    for f in schema.features:
        r, s = list(real[f.name]), list(synth[f.name])
        shape.append(bf_ks(r, s) if f.is_numeric else bf_tvd(r, s))
    pairs = []
    for a, b in itertools.combinations(schema.features, 2):
        args = (list(real[a.name]), list(real[b.name]), list(synth[a.name]), list(synth[b.name]))
        pairs.append(bf_pair_numeric(*args) if a.is_numeric and b.is_numeric else bf_contingency(*args))
    s_shape = sum(shape) / len(shape)
    return s_shape if not pairs else (s_shape + sum(pairs) / len(pairs)) / 2


def random_schema(r):
    feats = []
    for k in range(int(r.integers(1, 5))):
        if r.random() < 0.5:
            # W = 1 so binning leaves integer values 0..7 unchanged
            feats.append(FeatureSpec.numeric(f"n{k}", 0, 8, 3))
        else:
            feats.append(FeatureSpec.categorical(f"c{k}", list("abcd")[: int(r.integers(2, 5))]))
    return TabularSchema(tuple(feats), "non-boolean")


def random_table(r, schema, rows):
    return pd.DataFrame({
        f.name: r.integers(0, 8, rows).astype(float) if f.is_numeric else r.choice(f.categories, rows)
        for f in schema.features
    })


# --- worked examples --------------------------------------------------------------


def test_ks_examples():
    assert ks_complement([1, 2, 3], [3, 2, 1]) == 1
    assert ks_complement([0, 1], [5, 6]) == 0
    assert ks_complement([0, 0, 1, 1], [0, 1, 1, 1]) == 0.75


def test_tvd_examples():
    assert tvd_complement(list("aabb"), list("abab")) == 1
    assert tvd_complement(list("aa"), list("bb")) == 0
    assert tvd_complement(list("ab"), list("aa")) == 0.5


def test_pair_numeric_examples():
    x = np.arange(10.0)
    assert pair_numeric(x, x, x, x) == 1
    assert pair_numeric(x, x, x, -x) == 0
    # correlations 0.5 and 0.1 built explicitly
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=400), rng.normal(size=400)
    u, v = u - u.mean(), v - v.mean()
    v = v - (u @ v) / (u @ u) * u  # orthogonal to u
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    mk = lambda rho: rho * u + math.sqrt(1 - rho**2) * v  # noqa: E731
    assert abs(pair_numeric(u, mk(0.5), u, mk(0.1)) - 0.8) < 1e-12


def test_pair_numeric_constant_column():
    x = np.arange(5.0)
    assert pair_numeric(x, x, x, np.zeros(5)) == pytest.approx(0.5, abs=1e-15)


def test_pair_numeric_needs_two_rows():
    with pytest.raises(MetricError):
        pair_numeric([1.0], [2.0], [1.0, 2.0], [1.0, 3.0])


def test_contingency_examples():
    a, b = list("aabb"), list("xyxy")
    assert pair_contingency(a, b, a, b) == 1
    assert pair_contingency(list("aa"), list("xx"), list("bb"), list("yy")) == 0
    assert pair_contingency(a, b, list("aaaa"), list("xxxx")) == 0.25


def test_overlap_examples():
    real = pd.DataFrame({"a": [1, 2, 3], "b": list("xyz")})
    assert overlap_fraction(real, real.iloc[:2]) == 1
    assert overlap_fraction(real, pd.DataFrame({"a": [9], "b": ["q"]})) == 0
    synth = pd.DataFrame({"a": [1, 2, 7, 8, 8], "b": list("xyzzz")})
    assert overlap_fraction(real, synth) == 0.5


def test_overlap_empty_synthetic():
    with pytest.raises(MetricError):
        overlap_fraction(pd.DataFrame({"a": [1]}), pd.DataFrame({"a": []}))


@pytest.mark.parametrize("fn", [ks_complement, tvd_complement])
def test_empty_columns_rejected(fn):
    with pytest.raises(MetricError):
        fn([], [1])


# --- oracle equivalence --------------------------------------------------------------


@pytest.mark.parametrize("seed", range(100))
def test_components_match_brute_force(seed):
    r = np.random.default_rng(seed)
    schema = random_schema(r)
    real = random_table(r, schema, int(r.integers(2, 21)))
    synth = random_table(r, schema, int(r.integers(2, 21)))
    report = overall_score(real, synth, schema)
    for f in schema.features:
        bf = (bf_ks if f.is_numeric else bf_tvd)(list(real[f.name]), list(synth[f.name]))
        assert abs(report.per_column[f.name] - bf) < 1e-12
    for (a, b), v in report.per_pair.items():
        args = (list(real[a]), list(real[b]), list(synth[a]), list(synth[b]))
        bf = bf_pair_numeric(*args) if schema[a].is_numeric and schema[b].is_numeric else bf_contingency(*args)
        assert abs(v - bf) < 1e-12
    assert abs(report.overall - bf_overall(real, synth, schema)) < 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_identical_tables_score_one(seed):
    r = np.random.default_rng(seed)
    schema = random_schema(r)
    real = random_table(r, schema, 15)
    report = overall_score(real, real.copy(), schema)
    assert report.overall == 1.0 and report.s_shape == 1.0
    assert report.overlap_fraction == 1.0


def test_single_column_overall_is_shape():
    schema = TabularSchema((FeatureSpec.categorical("c", ["a", "b"]),), "non-boolean")
    report = overall_score(pd.DataFrame({"c": list("ab")}), pd.DataFrame({"c": list("aa")}), schema)
    assert report.s_pair is None and report.overall == report.s_shape == 0.5


def test_overall_range_random_pairs():
    r = np.random.default_rng(11)
    for _ in range(1000):
        schema = random_schema(r)
        rep = overall_score(random_table(r, schema, 6), random_table(r, schema, 4), schema)
        assert 0 <= rep.overall <= 1
        assert rep.overall == (rep.s_shape if rep.s_pair is None else (rep.s_shape + rep.s_pair) / 2)


def test_schema_mismatch():
    schema = TabularSchema((FeatureSpec.categorical("c", ["a", "b"]),), "non-boolean")
    with pytest.raises(MetricError, match="missing"):
        overall_score(pd.DataFrame({"c": ["a"]}), pd.DataFrame({"d": ["a"]}), schema)


def test_numeric_compared_after_binning():
    schema = TabularSchema((FeatureSpec.numeric("x", 0, 8, 3),), "non-boolean")
    # 2.2 and 1.8 both bin to 2
    assert overall_score(pd.DataFrame({"x": [2.2]}), pd.DataFrame({"x": [1.8]}), schema).overall == 1


# --- properties ------------------------------------------------------------------------

cols = st.lists(st.integers(0, 5), min_size=1, max_size=20)


@given(cols, cols)
def test_ks_and_tvd_symmetric(a, b):
    assert ks_complement(a, b) == ks_complement(b, a)
    assert tvd_complement(a, b) == tvd_complement(b, a)
    assert 0 <= ks_complement(a, b) <= 1 and 0 <= tvd_complement(a, b) <= 1


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=15),
       st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=15))
def test_pair_metrics_symmetric_in_columns(real, synth):
    ri, rj = map(list, zip(*real))
    si, sj = map(list, zip(*synth))
    assert pair_numeric(ri, rj, si, sj) == pytest.approx(pair_numeric(rj, ri, sj, si), abs=1e-15)
    assert pair_contingency(ri, rj, si, sj) == pytest.approx(pair_contingency(rj, ri, sj, si), abs=1e-15)


@given(st.lists(st.tuples(st.integers(0, 3), st.sampled_from("xy")), min_size=1, max_size=10),
       st.lists(st.tuples(st.integers(0, 3), st.sampled_from("xy")), min_size=1, max_size=10),
       st.integers(1, 3), st.integers(1, 3))
def test_overlap_invariant_under_duplication(real, synth, kr, ks):
    frame = lambda rows, k: pd.DataFrame(rows * k, columns=["a", "b"])  # noqa: E731
    assert overlap_fraction(frame(real, 1), frame(synth, 1)) == overlap_fraction(frame(real, kr), frame(synth, ks))


# --- downstream learner -----------------------------------------------------------------


def downstream_data(rows=300, seed=0):
    r = np.random.default_rng(seed)
    x = r.integers(0, 8, rows).astype(float)
    c = r.choice(list("abc"), rows)
    y = np.where((x > 3) ^ (c == "a"), "yes", "no")
    schema = TabularSchema((
        FeatureSpec.numeric("x", 0, 8, 3),
        FeatureSpec.categorical("c", list("abc")),
        FeatureSpec.categorical("y", ["no", "yes"]),
    ), "non-boolean")
    return pd.DataFrame({"x": x, "c": c, "y": y}), schema


def test_downstream_identical_is_zero():
    real, schema = downstream_data()
    assert downstream_score(real, real.copy(), "y", schema) == 0.0


def test_downstream_decreases_toward_real():
    real, schema = downstream_data()
    noise = real.copy()
    r = np.random.default_rng(1)
    noise["y"] = r.choice(["no", "yes"], len(noise))
    scores = []
    for frac in (0.0, 0.5, 1.0):
        k = int(frac * len(real))
        mixed = pd.concat([real.iloc[:k], noise.iloc[k:]])
        scores.append(downstream_score(real, mixed, "y", schema))
    assert scores[0] >= scores[1] >= scores[2] == 0.0
    assert scores[0] > scores[2]
    assert all(0 <= s <= 1 for s in scores)


def test_downstream_numeric_target():
    real, schema = downstream_data()
    assert downstream_score(real, real, "x", schema) == 0.0


def test_downstream_single_class():
    real, schema = downstream_data()
    real["y"] = "no"
    with pytest.raises(MetricError, match="single class"):
        downstream_score(real, real, "y", schema)


def test_stump_learners_fit_simple_rules():
    X = np.arange(20, dtype=float)[:, None]
    y = (X[:, 0] > 9).astype(int)
    assert StumpBoostingClassifier().fit(X, y).score(X, y) == 1.0
    assert StumpBoostingRegressor(n_estimators=200).fit(X, 3.0 * y).score(X, 3.0 * y) > 0.99
    assert StumpBoostingClassifier().get_params() == {"learning_rate": 0.3, "n_estimators": 50}


def test_report_serializes():
    real, schema = downstream_data(40)
    rep = overall_score(real, real.iloc[:20], schema, downstream_targets=["y"])
    d = rep.to_dict()
    assert "x|c" in d["per_pair"] and "y" in d["downstream"]
    assert "overall" in rep.format()
