"""Similarity, overlap and downstream metrics for synthetic tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .encoding import binned_frame
from .exceptions import MetricError
from .schema import TabularSchema


def _nonempty(col, what: str) -> np.ndarray:
    arr = np.asarray(col)
    if arr.size == 0:
        raise MetricError(f"{what} column is empty")
    return arr


def ks_complement(real_col, synth_col) -> float:
    """1 - sup |ECDF_real - ECDF_synth| over the pooled support."""
    r = np.sort(_nonempty(real_col, "real").astype(float))
    s = np.sort(_nonempty(synth_col, "synthetic").astype(float))
    grid = np.union1d(r, s)
    fr = np.searchsorted(r, grid, side="right") / len(r)
    fs = np.searchsorted(s, grid, side="right") / len(s)
    return float(1.0 - np.max(np.abs(fr - fs)))


def _freqs(col) -> pd.Series:
    return pd.Series(col).astype(str).value_counts(normalize=True)


def tvd_complement(real_col, synth_col) -> float:
    p = _freqs(_nonempty(real_col, "real"))
    q = _freqs(_nonempty(synth_col, "synthetic"))
    p, q = p.align(q, fill_value=0.0)
    return float(1.0 - 0.5 * np.abs(p - q).sum())


def _pearson(x, y) -> float:
    x = np.asarray(x, dtype=float) - np.mean(x)
    y = np.asarray(y, dtype=float) - np.mean(y)
    sx, sy = np.sqrt(np.dot(x, x)), np.sqrt(np.dot(y, y))
    if sx == 0 or sy == 0:
        return 0.0  # constant column: no linear association
    return float(np.clip(np.dot(x, y) / (sx * sy), -1.0, 1.0))


def pair_numeric(real_i, real_j, synth_i, synth_j) -> float:
    """1 - |rho_synth - rho_real| / 2 for Pearson coefficients."""
    for c, what in ((real_i, "real"), (synth_i, "synthetic")):
        if len(c) < 2:
            raise MetricError(f"{what} table needs at least 2 rows for a correlation")
    return float(1.0 - abs(_pearson(synth_i, synth_j) - _pearson(real_i, real_j)) / 2)


def _joint(a, b) -> pd.Series:
    frame = pd.DataFrame({"a": pd.Series(a).astype(str).to_numpy(), "b": pd.Series(b).astype(str).to_numpy()})
    return frame.value_counts(normalize=True)


def pair_contingency(real_i, real_j, synth_i, synth_j) -> float:
    """1 - half the L1 distance between joint frequency tables (union of observed cells)."""
    if len(real_i) == 0 or len(synth_i) == 0:
        raise MetricError("contingency table is empty")
    p, q = _joint(real_i, real_j).align(_joint(synth_i, synth_j), fill_value=0.0)
    return float(1.0 - 0.5 * np.abs(p - q).sum())


def overlap_fraction(real_table, synth_table) -> float:
    """Share of unique synthetic rows that also occur in the real table."""
    synth = pd.DataFrame(synth_table)
    if len(synth) == 0:
        raise MetricError("synthetic table is empty")
    real = pd.DataFrame(real_table)[list(synth.columns)]
    u_s = set(synth.astype(str).itertuples(index=False, name=None))
    u_r = set(real.astype(str).itertuples(index=False, name=None))
    return len(u_s & u_r) / len(u_s)


# ---------------------------------------------------------------------------
# reference learner for the downstream score


def _best_stump(X: np.ndarray, r: np.ndarray):
    """Depth-1 split maximizing the squared-error reduction of residuals ``r``.

    Returns ``(feature, threshold)`` or ``None`` when no split helps. Ties go
    to the lowest feature index, then the lowest threshold.
    """
    n = len(r)
    total = r.sum()
    best, best_gain = None, 1e-12
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, rs = X[order, f], r[order]
        csum = np.cumsum(rs)[:-1]
        left_n = np.arange(1, n)
        cut = xs[1:] > xs[:-1]
        if not cut.any():
            continue
        gain = csum**2 / left_n + (total - csum) ** 2 / (n - left_n) - total**2 / n
        gain = np.where(cut, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = gain[k]
            best = (f, 0.5 * (xs[k] + xs[k + 1]))
    return best


class _StumpBoostingBase(BaseEstimator):
    def __init__(self, n_estimators: int = 50, learning_rate: float = 0.3):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate

    def _stump_output(self, X, stumps):
        out = np.zeros(len(X))
        for f, t, lv, rv in stumps:
            out += np.where(X[:, f] <= t, lv, rv)
        return out


class StumpBoostingRegressor(RegressorMixin, _StumpBoostingBase):
    """Least-squares gradient boosting with depth-1 trees. Fully deterministic."""

    def fit(self, X, y):
        X, y = np.asarray(X, dtype=float), np.asarray(y, dtype=float)
        self.init_ = float(y.mean())
        self.stumps_ = []
        pred = np.full(len(y), self.init_)
        for _ in range(self.n_estimators):
            r = y - pred
            split = _best_stump(X, r)
            if split is None:
                break
            f, t = split
            left = X[:, f] <= t
            stump = (f, t, self.learning_rate * r[left].mean(), self.learning_rate * r[~left].mean())
            self.stumps_.append(stump)
            pred += np.where(left, stump[2], stump[3])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "stumps_")
        X = np.asarray(X, dtype=float)
        return self.init_ + self._stump_output(X, self.stumps_)


class StumpBoostingClassifier(ClassifierMixin, _StumpBoostingBase):
    """Multinomial-deviance gradient boosting with one stump per class per round."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        self.classes_, y_idx = np.unique(np.asarray(y), return_inverse=True)
        k = len(self.classes_)
        self.n_features_in_ = X.shape[1]
        self.stumps_ = [[] for _ in range(k)]
        if k == 1:
            self.init_ = np.zeros(1)
            return self
        onehot = np.eye(k)[y_idx]
        prior = onehot.mean(axis=0)
        self.init_ = np.log(prior)
        scores = np.tile(self.init_, (len(X), 1))
        for _ in range(self.n_estimators):
            p = _softmax(scores)
            progressed = False
            for c in range(k):
                r = onehot[:, c] - p[:, c]
                split = _best_stump(X, r)
                if split is None:
                    continue
                f, t = split
                left = X[:, f] <= t
                h = p[:, c] * (1 - p[:, c])
                lv = self._leaf(r[left], h[left], k)
                rv = self._leaf(r[~left], h[~left], k)
                self.stumps_[c].append((f, t, lv, rv))
                scores[:, c] += np.where(left, lv, rv)
                progressed = True
            if not progressed:
                break
        return self

    def _leaf(self, r, h, k):
        denom = h.sum()
        step = 0.0 if denom < 1e-12 else (k - 1) / k * r.sum() / denom
        return self.learning_rate * step

    def decision_function(self, X):
        check_is_fitted(self, "stumps_")
        X = np.asarray(X, dtype=float)
        return np.stack([self.init_[c] + self._stump_output(X, s) for c, s in enumerate(self.stumps_)], axis=1)

    def predict_proba(self, X):
        return _softmax(self.decision_function(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _design(table: pd.DataFrame, schema: TabularSchema, target: str) -> np.ndarray:
    cols = []
    for f in schema.features:
        if f.name == target:
            continue
        if f.is_numeric:
            cols.append(table[f.name].to_numpy(dtype=float)[:, None])
        else:
            values = table[f.name].astype(str).to_numpy()
            cols.append(np.stack([values == c for c in f.categories], axis=1).astype(float))
    if not cols:
        raise MetricError("downstream score needs at least one non-target column")
    return np.concatenate(cols, axis=1)


def _split(table: pd.DataFrame, seed: int, test_fraction: float):
    perm = np.random.default_rng(seed).permutation(len(table))
    n_test = min(max(1, int(round(test_fraction * len(table)))), len(table) - 1)
    return table.iloc[perm[:n_test]], table.iloc[perm[n_test:]]


def downstream_score(
    real_table, synth_table, target_column: str, schema: TabularSchema,
    seed: int = 0, test_fraction: float = 0.2, n_estimators: int = 50, learning_rate: float = 0.3,
) -> float:
    """|score(trained on real) - score(trained on synthetic)| on held-out real rows.

    Accuracy for a categorical target, R^2 for a numeric one.
    """
    if target_column not in schema.names:
        raise MetricError(f"unknown target column {target_column!r}")
    real, synth = pd.DataFrame(real_table), pd.DataFrame(synth_table)
    if len(real) < 2 or len(synth) < 2:
        raise MetricError("downstream score needs at least 2 real and 2 synthetic rows")
    test, train_real = _split(real, seed, test_fraction)
    # the synthetic side goes through the same seeded split, so identical
    # tables give identical training runs
    _, train_synth = _split(synth, seed, test_fraction)
    spec = schema[target_column]
    if spec.is_numeric:
        make = lambda: StumpBoostingRegressor(n_estimators, learning_rate)  # noqa: E731
        y = lambda t: t[target_column].to_numpy(dtype=float)  # noqa: E731
    else:
        if real[target_column].astype(str).nunique() < 2:
            raise MetricError(f"target {target_column!r} has a single class")
        make = lambda: StumpBoostingClassifier(n_estimators, learning_rate)  # noqa: E731
        y = lambda t: t[target_column].astype(str).to_numpy()  # noqa: E731
    X_test = _design(test, schema, target_column)
    scores = []
    for train in (train_real, train_synth):
        model = make().fit(_design(train, schema, target_column), y(train))
        scores.append(model.score(X_test, y(test)))
    return float(abs(scores[0] - scores[1]))


# ---------------------------------------------------------------------------
# report


@dataclass
class MetricsReport:
    s_shape: float
    s_pair: float | None
    overall: float
    per_column: dict = field(default_factory=dict)
    per_pair: dict = field(default_factory=dict)
    overlap_fraction: float | None = None
    downstream: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "s_shape": self.s_shape,
            "s_pair": self.s_pair,
            "overall": self.overall,
            "per_column": dict(self.per_column),
            "per_pair": {f"{i}|{j}": v for (i, j), v in self.per_pair.items()},
            "overlap_fraction": self.overlap_fraction,
            "downstream": dict(self.downstream),
        }

    def format(self) -> str:
        lines = [f"{'component':<32}{'score':>10}"]
        for name, v in self.per_column.items():
            lines.append(f"{'column ' + name:<32}{v:>10.4f}")
        for (i, j), v in self.per_pair.items():
            lines.append(f"{'pair ' + i + ' x ' + j:<32}{v:>10.4f}")
        lines.append(f"{'S_shape':<32}{self.s_shape:>10.4f}")
        if self.s_pair is not None:
            lines.append(f"{'S_pair':<32}{self.s_pair:>10.4f}")
        lines.append(f"{'overall':<32}{self.overall:>10.4f}")
        if self.overlap_fraction is not None:
            lines.append(f"{'overlap fraction':<32}{self.overlap_fraction:>10.4f}")
        for t, v in self.downstream.items():
            lines.append(f"{'downstream ' + t:<32}{v:>10.4f}")
        return "\n".join(lines)


def overall_score(real_table, synth_table, schema: TabularSchema, downstream_targets=(), seed: int = 0) -> MetricsReport:
    """Shape, pair and overall similarity on binned tables, plus overlap and downstream scores."""
    real, synth = pd.DataFrame(real_table), pd.DataFrame(synth_table)
    for name, t in (("real", real), ("synthetic", synth)):
        missing = [c for c in schema.names if c not in t.columns]
        if missing:
            raise MetricError(f"{name} table does not match the schema; missing {missing}")
    if len(real) == 0 or len(synth) == 0:
        raise MetricError("tables must be non-empty")
    real, synth = binned_frame(real, schema), binned_frame(synth, schema)

    per_column = {}
    for f in schema.features:
        fn = ks_complement if f.is_numeric else tvd_complement
        per_column[f.name] = fn(real[f.name], synth[f.name])
    per_pair = {}
    for a, b in combinations(schema.features, 2):
        fn = pair_numeric if a.is_numeric and b.is_numeric else pair_contingency
        per_pair[(a.name, b.name)] = fn(real[a.name], real[b.name], synth[a.name], synth[b.name])

    s_shape = float(np.mean(list(per_column.values())))
    s_pair = float(np.mean(list(per_pair.values()))) if per_pair else None
    overall = s_shape if s_pair is None else (s_shape + s_pair) / 2
    downstream = {t: downstream_score(real, synth, t, schema, seed=seed) for t in downstream_targets}
    return MetricsReport(s_shape, s_pair, overall, per_column, per_pair, overlap_fraction(real, synth), downstream)
