"""Bundled sample data and the constructed toy dataset."""

from __future__ import annotations

from importlib import resources

import numpy as np
import pandas as pd

from .ansatz import build_circuit, build_layout, evaluate_batch
from .encoding import basis_digits, digits_to_frame, infer_schema
from .schema import FeatureSpec, TabularSchema
from .statevector import sample_indices

ADULT_SAMPLE = "adult_census_sample.csv"
TOY_SAMPLE = "toy_bimodal.csv"

WORKCLASSES = ("empl-unknown", "govt-employed", "self-employed", "unemployed")
EDUCATION = ("Advanced", "Bachelors", "Below-HS", "HS-grad", "Some-college")
INCOMES = ("<=50K", ">50K")

# Depth-2 [n4,c2] parameters built by hand: the first-layer RY angles set
# the per-qubit marginals (x clusters on {1,2} and {9,10}) and two
# couplings tie the label to the lowest bit of x.
TOY_DEPTH = 2


def _ry_angle(p: float) -> float:
    return 2.0 * float(np.arcsin(np.sqrt(p)))


TOY_PARAMS = np.zeros(24)
TOY_PARAMS[0:4] = [_ry_angle(0.5), _ry_angle(0.1), _ry_angle(0.85), _ry_angle(0.35)]
TOY_PARAMS[10] = 0.45
TOY_PARAMS[11] = 1.2


def _read(name: str) -> pd.DataFrame:
    with resources.files("tabqgan.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return pd.read_csv(fh)


def data_path(name: str):
    """Filesystem path of a bundled CSV (usable as a CLI ``--data`` argument)."""
    return resources.files("tabqgan.data").joinpath(name)


def load_adult_sample() -> pd.DataFrame:
    """The bundled Adult Census style sample (age, education, workclass, income)."""
    return _read(ADULT_SAMPLE)


def adult_census_10_schema(table: pd.DataFrame | None = None, mode: str = "boolean") -> TabularSchema:
    """Schema of the 10-qubit configuration: age on 5 qubits, income, workclass."""
    table = load_adult_sample() if table is None else table
    return infer_schema(table[["age", "income", "workclass"]], {"age": 5}, ["income", "workclass"], mode)


def toy_schema() -> TabularSchema:
    return TabularSchema(
        (FeatureSpec.numeric("x", 0.0, 16.0, 4), FeatureSpec.categorical("label", ["hi", "lo"])),
        "non-boolean",
    )


def toy_distribution() -> np.ndarray:
    """Exact basis-state distribution the toy data is drawn from."""
    layout = build_layout(toy_schema())
    amps = evaluate_batch(build_circuit(layout, TOY_DEPTH), TOY_PARAMS)[0]
    return np.abs(amps) ** 2


def make_toy_dataset(rows: int = 1000, seed: int = 0) -> pd.DataFrame:
    """Sample the toy dataset from the ansatz itself, so it is representable by construction."""
    schema = toy_schema()
    layout = build_layout(schema)
    idx = sample_indices(toy_distribution(), rows, np.random.default_rng(seed))
    _, digits = basis_digits(schema, layout, idx)
    frame = digits_to_frame(digits, schema)
    frame["x"] = np.rint(frame["x"]).astype(int)
    return frame


def load_toy_sample() -> pd.DataFrame:
    return _read(TOY_SAMPLE)


def make_adult_surrogate(rows: int = 2000, seed: int = 0) -> pd.DataFrame:
    """Seeded surrogate with roughly Adult-like marginals and dependencies.

    Age is right-skewed around 38; education, workclass and income depend on
    age, and income on all three. Used because the original file cannot be
    shipped or fetched here.
    """
    rng = np.random.default_rng(seed)
    age = np.clip(np.round(17 + rng.gamma(2.3, 9.5, rows)), 17, 90).astype(int)

    young = (age < 25).astype(float)
    edu_logits = np.stack([
        -1.6 + 0.02 * (age - 38) - 2.0 * young,   # Advanced
        -0.6 - 1.2 * young,                      # Bachelors
        -1.3 + 0.9 * young,                      # Below-HS
        0.5 + 0.0 * age,                         # HS-grad
        0.1 + 0.6 * young,                       # Some-college
    ], axis=1)
    education = _draw(rng, edu_logits, EDUCATION)

    old = (age > 62).astype(float)
    work_logits = np.stack([
        np.full(rows, 1.6),                                # empl-unknown
        -0.2 + 0.015 * (age - 38) - 0.8 * young,           # govt-employed
        -0.7 + 0.03 * (age - 38),                          # self-employed
        -1.1 + 1.3 * young + 1.6 * old,                    # unemployed
    ], axis=1)
    workclass = _draw(rng, work_logits, WORKCLASSES)

    edu_boost = {"Advanced": 1.6, "Bachelors": 1.0, "Below-HS": -1.4, "HS-grad": -0.3, "Some-college": 0.0}
    work_boost = {"empl-unknown": 0.0, "govt-employed": 0.4, "self-employed": 0.6, "unemployed": -2.5}
    logit = (-9.0 + 0.36 * age - 0.0037 * age**2
             + np.vectorize(edu_boost.get)(education) + np.vectorize(work_boost.get)(workclass))
    high = rng.random(rows) < 1 / (1 + np.exp(-logit))
    income = np.where(high, INCOMES[1], INCOMES[0])
    return pd.DataFrame({"age": age, "education": education, "workclass": workclass, "income": income})


def _draw(rng, logits, labels):
    p = np.exp(logits - logits.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    u = rng.random(len(p))[:, None]
    k = (p.cumsum(axis=1) < u).sum(axis=1)
    return np.asarray(labels, dtype=object)[np.minimum(k, len(labels) - 1)]
