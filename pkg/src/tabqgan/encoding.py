"""Row <-> bitstring codecs: equal-width binning, one-hot/Boolean registers,
and the unique-row-index alternative."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .ansatz import RegisterLayout, build_layout
from .exceptions import ConfigurationError, DataError, DecodeError, SchemaError
from .schema import FeatureSpec, TabularSchema


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def bin_numeric(value, spec: FeatureSpec):
    """Bin index of ``value`` (scalar or array), clamped into range."""
    raw = _round_half_away((np.asarray(value, dtype=float) - spec.min) / spec.bin_width)
    idx = np.clip(raw, 0, spec.bin_count - 1).astype(np.int64)
    return int(idx) if idx.ndim == 0 else idx


def unbin_numeric(index, spec: FeatureSpec):
    """Lower bin edge ``min + index * width``."""
    idx = np.asarray(index)
    if np.any(idx < 0) or np.any(idx >= spec.bin_count) or np.any(idx != np.floor(idx)):
        raise ConfigurationError(f"bin index out of range [0, {spec.bin_count - 1}] for {spec.name!r}")
    out = spec.min + idx * spec.bin_width
    return float(out) if idx.ndim == 0 else out


def bin_representative(value, spec: FeatureSpec):
    return unbin_numeric(bin_numeric(value, spec), spec)


@dataclass(frozen=True)
class EncodedRow:
    bits: str
    layout: RegisterLayout

    def __str__(self) -> str:
        return self.bits


def _category_index(value, spec: FeatureSpec) -> int:
    try:
        return spec.categories.index(str(value))
    except ValueError:
        raise DataError(f"unknown category {value!r} for feature {spec.name!r}") from None


def _row_value(row: Mapping, name: str):
    if name not in row:
        raise DataError(f"row is missing feature {name!r}")
    value = row[name]
    if value is None or (isinstance(value, float) and math.isnan(value)):
        raise DataError(f"row has no value for feature {name!r}")
    return value


def unique_row_index(row: Mapping, schema: TabularSchema) -> int:
    """Mixed-radix index of the row, first feature most significant."""
    index = 0
    for f in schema.features:
        value = _row_value(row, f.name)
        digit = bin_numeric(value, f) if f.is_numeric else _category_index(value, f)
        index = index * f.cardinality + digit
    return index


def unique_row_index_encode(row: Mapping, schema: TabularSchema) -> str:
    width = max(1, math.ceil(math.log2(schema.search_space_size())))
    return format(unique_row_index(row, schema), f"0{width}b")


def unique_row_index_decode(bits: str, schema: TabularSchema) -> dict:
    index = int(bits, 2)
    if index >= schema.search_space_size():
        raise DecodeError(f"row index {index} outside search space of size {schema.search_space_size()}")
    digits = []
    for f in reversed(schema.features):
        index, d = divmod(index, f.cardinality)
        digits.append(d)
    row = {}
    for f, d in zip(schema.features, reversed(digits)):
        row[f.name] = unbin_numeric(d, f) if f.is_numeric else f.categories[d]
    return row


def encode_row(row: Mapping, schema: TabularSchema, layout: RegisterLayout | None = None) -> EncodedRow:
    layout = layout or build_layout(schema)
    if layout.mode == "unique-row-index":
        return EncodedRow(unique_row_index_encode(row, schema), layout)
    parts = []
    for slot in layout.slots:
        spec = schema[slot.name]
        value = _row_value(row, slot.name)
        if slot.kind == "binary":
            parts.append(format(bin_numeric(value, spec), f"0{slot.width}b"))
        elif slot.kind == "boolean":
            parts.append(str(_category_index(value, spec)))
        else:
            k = _category_index(value, spec)
            parts.append("".join("1" if i == k else "0" for i in range(slot.width)))
    return EncodedRow("".join(parts), layout)


def decode_bits(bits, schema: TabularSchema, layout: RegisterLayout | None = None) -> dict:
    bits = str(bits)
    layout = layout or build_layout(schema)
    if len(bits) != layout.num_qubits or set(bits) - {"0", "1"}:
        raise DecodeError(f"expected a {layout.num_qubits}-bit string, got {bits!r}")
    if layout.mode == "unique-row-index":
        return unique_row_index_decode(bits, schema)
    row = {}
    for slot in layout.slots:
        spec = schema[slot.name]
        sub = bits[slot.start:slot.stop]
        if slot.kind == "binary":
            row[slot.name] = unbin_numeric(int(sub, 2), spec)
        elif slot.kind == "boolean":
            row[slot.name] = spec.categories[int(sub)]
        else:
            if sub.count("1") != 1:
                raise DecodeError(
                    f"register for {slot.name!r} (qubits {slot.start}..{slot.stop - 1}) "
                    f"is {sub!r}, not one-hot"
                )
            row[slot.name] = spec.categories[sub.index("1")]
    return {f.name: row[f.name] for f in schema.features}


# ---------------------------------------------------------------------------
# vectorized helpers used by training


def _digits(table: pd.DataFrame, schema: TabularSchema) -> np.ndarray:
    """Per-feature integer codes (bin index or category index), shape (rows, features)."""
    cols = []
    for f in schema.features:
        if f.name not in table.columns:
            raise DataError(f"table is missing feature {f.name!r}")
        col = table[f.name]
        if col.isna().any():
            raise DataError(f"feature {f.name!r} has missing values")
        if f.is_numeric:
            cols.append(bin_numeric(col.to_numpy(dtype=float), f))
        else:
            lookup = {c: i for i, c in enumerate(f.categories)}
            codes = col.astype(str).map(lookup)
            if codes.isna().any():
                bad = col[codes.isna()].iloc[0]
                raise DataError(f"unknown category {bad!r} for feature {f.name!r}")
            cols.append(codes.to_numpy(dtype=np.int64))
    return np.stack(cols, axis=1) if cols else np.zeros((len(table), 0), dtype=np.int64)


def encode_indices(table: pd.DataFrame, schema: TabularSchema, layout: RegisterLayout) -> np.ndarray:
    """Basis-state index of every row (bitstring read as a big-endian integer)."""
    digits = _digits(table, schema)
    n = layout.num_qubits
    if layout.mode == "unique-row-index":
        idx = np.zeros(len(table), dtype=np.int64)
        for j, f in enumerate(schema.features):
            idx = idx * f.cardinality + digits[:, j]
        return idx
    idx = np.zeros(len(table), dtype=np.int64)
    col = {f.name: j for j, f in enumerate(schema.features)}
    for slot in layout.slots:
        d = digits[:, col[slot.name]]
        if slot.kind == "onehot":
            value = np.left_shift(1, slot.width - 1 - d)
        else:
            value = d
        idx |= value << (n - slot.stop)
    return idx


def basis_digits(schema: TabularSchema, layout: RegisterLayout, indices=None):
    """Decode basis indices into per-feature codes.

    Returns ``(valid, digits)``: ``valid[k]`` is False where the bitstring has
    a non-one-hot register (or an out-of-range row index), and ``digits`` is
    an integer array of shape ``(len(indices), features)`` (zero where invalid).
    """
    n = layout.num_qubits
    idx = np.arange(1 << n, dtype=np.int64) if indices is None else np.asarray(indices, dtype=np.int64)
    valid = np.ones(idx.shape, dtype=bool)
    digits = np.zeros(idx.shape + (len(schema.features),), dtype=np.int64)
    if layout.mode == "unique-row-index":
        valid &= idx < schema.search_space_size()
        rest = np.where(valid, idx, 0)
        for j in reversed(range(len(schema.features))):
            rest, digits[:, j] = np.divmod(rest, schema.features[j].cardinality)
        return valid, digits
    col = {f.name: j for j, f in enumerate(schema.features)}
    for slot in layout.slots:
        sub = (idx >> (n - slot.stop)) & ((1 << slot.width) - 1)
        if slot.kind == "onehot":
            ok = (sub > 0) & ((sub & (sub - 1)) == 0)
            valid &= ok
            pos = np.zeros_like(sub)
            pos[ok] = np.log2(sub[ok]).round().astype(np.int64)
            digits[:, col[slot.name]] = np.where(ok, slot.width - 1 - pos, 0)
        else:
            digits[:, col[slot.name]] = sub
    return valid, digits


def digits_to_frame(digits: np.ndarray, schema: TabularSchema) -> pd.DataFrame:
    data = {}
    for j, f in enumerate(schema.features):
        d = digits[:, j]
        if f.is_numeric:
            data[f.name] = f.min + d * f.bin_width
        else:
            data[f.name] = np.asarray(f.categories, dtype=object)[d]
    return pd.DataFrame(data, columns=schema.names)


def decode_indices(indices, schema: TabularSchema, layout: RegisterLayout) -> pd.DataFrame:
    valid, digits = basis_digits(schema, layout, indices)
    if not valid.all():
        bad = int(np.asarray(indices)[~valid][0])
        decode_bits(format(bad, f"0{layout.num_qubits}b"), schema, layout)  # raises with details
        raise DecodeError(f"invalid basis index {bad}")
    return digits_to_frame(digits, schema)


def binned_frame(table: pd.DataFrame, schema: TabularSchema) -> pd.DataFrame:
    """Numeric columns replaced by their bin representatives; categoricals as strings."""
    return digits_to_frame(_digits(table, schema), schema)


# ---------------------------------------------------------------------------
# schema inference + transformer


def infer_schema(
    table: pd.DataFrame,
    numeric: Mapping[str, int] | None = None,
    categorical: Sequence[str] | None = None,
    mode: str = "boolean",
    default_qubits: int = 5,
) -> TabularSchema:
    """Freeze min/max and category vocabularies from ``table``.

    ``numeric`` maps numeric column names to qubit budgets. Declared
    features are ordered numeric first, each group in declaration order;
    categorical register order follows from this. With neither ``numeric``
    nor ``categorical`` given, every column is used in column order and
    numeric dtypes become numeric features with ``default_qubits``.
    """
    declared = not (numeric is None and categorical is None)
    if not declared:
        numeric = {c: default_qubits for c in table.columns if pd.api.types.is_numeric_dtype(table[c])}
        categorical = [c for c in table.columns if c not in numeric]
    numeric = dict(numeric or {})
    categorical = list(categorical or [])
    wanted = set(numeric) | set(categorical)
    missing = [c for c in wanted if c not in table.columns]
    if missing:
        raise SchemaError(f"declared column(s) not in data: {', '.join(sorted(missing))}")
    # declared features keep declaration order (numeric first); inferred ones keep column order
    order = list(numeric) + categorical if declared else list(table.columns)
    features = []
    for name in order:
        if name in numeric:
            col = pd.to_numeric(table[name], errors="raise").astype(float)
            lo, hi = float(col.min()), float(col.max())
            if not hi > lo:
                raise SchemaError(f"numeric feature {name!r} is constant")
            features.append(FeatureSpec.numeric(name, lo, hi, numeric[name]))
        elif name in categorical:
            cats = sorted(table[name].astype(str).unique())
            features.append(FeatureSpec.categorical(name, cats))
    return TabularSchema(tuple(features), mode)


class TabularEncoder(TransformerMixin, BaseEstimator):
    """Map table rows to basis-state indices of the generator register.

    Parameters
    ----------
    numeric : dict, optional
        Column name -> qubit budget for numeric features.
    categorical : list, optional
        Categorical column names.
    mode : {"boolean", "non-boolean", "unique-row-index"}
    schema : TabularSchema, optional
        Use a frozen schema instead of inferring one in ``fit``.
    """

    def __init__(self, numeric=None, categorical=None, mode="boolean", schema=None):
        self.numeric = numeric
        self.categorical = categorical
        self.mode = mode
        self.schema = schema

    def fit(self, X, y=None):
        X = pd.DataFrame(X)
        if self.schema is not None:
            self.schema_ = self.schema.with_mode(self.mode)
        else:
            self.schema_ = infer_schema(X, self.numeric, self.categorical, self.mode)
        self.layout_ = build_layout(self.schema_)
        self.n_features_in_ = len(self.schema_.features)
        self.feature_names_in_ = np.asarray(self.schema_.names, dtype=object)
        return self

    def transform(self, X):
        check_is_fitted(self, "schema_")
        return encode_indices(pd.DataFrame(X), self.schema_, self.layout_)

    def inverse_transform(self, X):
        check_is_fitted(self, "schema_")
        return decode_indices(np.asarray(X, dtype=np.int64), self.schema_, self.layout_)

    def to_bitstrings(self, indices) -> list[str]:
        n = self.layout_.num_qubits
        return [format(int(i), f"0{n}b") for i in indices]
