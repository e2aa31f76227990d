"""Adversarial training loop: discriminator descent steps, parameter-shift
generator steps, per-epoch KL logging, best-epoch selection, checkpoints."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from .ansatz import (
    CircuitAnsatz,
    RegisterLayout,
    build_circuit,
    build_layout,
    evaluate_batch,
    evaluate_shifted,
)
from .discriminator import DISC_INPUTS, EPS, Discriminator, feature_vectors, feature_width
from .encoding import basis_digits, digits_to_frame, encode_indices
from .exceptions import ConfigurationError, TrainingError
from .schema import MODES, TabularSchema
from .statevector import GateKind, sample_indices

CHECKPOINT_VERSION = 1
KL_SMOOTHING = 1e-9
EXACT_QUBIT_LIMIT = 16
# "data" hidden width is 2x the input width, but never below this floor:
# a handful of ReLUs on a narrow input die and leave D constant.
MIN_DATA_WIDTH = 32
DEFAULT_SHOTS = 4096

# Shift rules as (coefficient, shift) pairs. RY and IsingYY have generator
# eigenvalues +-1/2, so the two-term rule is exact. Controlled RY has
# eigenvalues {0, +-1/2}; the Givens gates as parameterized here rotate by
# theta (not theta/2), giving eigenvalues {0, +-1}. Both need four terms.
_C_PLUS = (math.sqrt(2) + 1) / (4 * math.sqrt(2))
_C_MINUS = (math.sqrt(2) - 1) / (4 * math.sqrt(2))
_TWO_TERM = ((0.5, math.pi / 2), (-0.5, -math.pi / 2))
_FOUR_TERM = (
    (_C_PLUS, math.pi / 2), (-_C_PLUS, -math.pi / 2),
    (-_C_MINUS, 3 * math.pi / 2), (_C_MINUS, -3 * math.pi / 2),
)
_FOUR_TERM_DOUBLE = tuple((2 * c, s / 2) for c, s in _FOUR_TERM)

INIT_SCHEMES = ("marginal", "uniform-state", "random")

SHIFT_RULES = {
    GateKind.RY: _TWO_TERM,
    GateKind.ISING_YY: _TWO_TERM,
    GateKind.CONTROLLED_RY: _FOUR_TERM,
    GateKind.GIVENS: _FOUR_TERM_DOUBLE,
    GateKind.CONTROLLED_GIVENS: _FOUR_TERM_DOUBLE,
}


@dataclass
class TrainingConfig:
    depth: int = 1
    batch_fraction: float = 0.1
    eta_g: float = 0.1
    eta_d: float = 0.1
    epochs: int = 3000
    disc_steps: int = 1
    seed: int = 0
    mode: str = "boolean"
    hidden_width: int | str = "data"
    shots: int | str = "exact"
    init: str = "marginal"
    init_noise: float = 0.1
    disc_input: str = "bits"

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigurationError("depth must be >= 1")
        if not 0 < self.batch_fraction <= 1:
            raise ConfigurationError("batch_fraction must be in (0, 1]")
        if self.eta_g <= 0 or self.eta_d <= 0:
            raise ConfigurationError("learning rates must be > 0")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.disc_steps < 1:
            raise ConfigurationError("disc_steps must be >= 1")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if self.hidden_width != "data" and (not isinstance(self.hidden_width, int) or self.hidden_width < 1):
            raise ConfigurationError("hidden_width must be a positive integer or 'data'")
        if self.shots != "exact" and (not isinstance(self.shots, int) or self.shots < 1):
            raise ConfigurationError("shots must be 'exact' or a positive integer")
        if self.init not in INIT_SCHEMES:
            raise ConfigurationError(f"init must be one of {INIT_SCHEMES}")
        if self.disc_input not in DISC_INPUTS:
            raise ConfigurationError(f"disc_input must be one of {DISC_INPUTS}")
        if self.init_noise < 0:
            raise ConfigurationError("init_noise must be >= 0")

    def resolve_hidden_width(self, input_dim: int) -> int:
        if self.hidden_width == "data":
            return max(2 * input_dim, MIN_DATA_WIDTH)
        return int(self.hidden_width)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


# ---------------------------------------------------------------------------
# generator observable


class ObservableTable:
    """Per-basis-state feature vectors for one (schema, layout) pair.

    Invalid basis states (non-one-hot registers, or row indices outside the
    search space) get a fixed penalty observable so the generator is pushed
    away from them; the one-hot ansatz never populates them anyway.
    """

    penalty = -math.log(EPS)

    def __init__(self, schema: TabularSchema, layout: RegisterLayout, numeric: str = "bits"):
        self.schema = schema
        self.numeric = numeric
        self.layout = layout
        self.full = layout.num_qubits <= EXACT_QUBIT_LIMIT
        if self.full:
            self.valid, digits = basis_digits(schema, layout)
            self.features = feature_vectors(digits[self.valid], schema, numeric)

    def values(self, disc: Discriminator, indices=None) -> np.ndarray:
        """-log D(x) for all basis states, or for ``indices`` only."""
        if indices is None:
            if not self.full:
                raise ConfigurationError("exact expectations need <= 16 qubits; pass shots")
            out = np.full(self.valid.shape, self.penalty)
            out[self.valid] = disc.generator_observable(self.features)
            return out
        valid, digits = basis_digits(self.schema, self.layout, indices)
        out = np.full(valid.shape, self.penalty)
        if valid.any():
            out[valid] = disc.generator_observable(feature_vectors(digits[valid], self.schema, self.numeric))
        return out


def _probs(amps: np.ndarray) -> np.ndarray:
    return amps.real**2 + amps.imag**2


def _expectations(probs, table, disc, shots, rng):
    if shots == "exact":
        return probs @ table.values(disc)
    out = np.empty(len(probs))
    for r, p in enumerate(probs):
        out[r] = table.values(disc, sample_indices(p, shots, rng)).mean()
    return out


def generator_expectation(
    circuit: CircuitAnsatz,
    params,
    disc: Discriminator,
    schema: TabularSchema,
    shots: int | str = "exact",
    rng: np.random.Generator | None = None,
    table: ObservableTable | None = None,
    disc_input: str = "bits",
) -> float:
    """E_{x ~ p_theta}[-log D(x)], exactly or from ``shots`` samples."""
    table = table or ObservableTable(schema, circuit.layout, disc_input)
    rng = rng if rng is not None else np.random.default_rng()
    probs = _probs(evaluate_batch(circuit, params))
    return float(_expectations(probs, table, disc, shots, rng)[0])


def shift_terms(circuit: CircuitAnsatz) -> list[tuple[int, float, float]]:
    """``(param_index, shift, coefficient)`` for every term of every gate's rule."""
    return [
        (g.param_index, shift, coef)
        for g in circuit.parameterized_gates
        for coef, shift in SHIFT_RULES[g.kind]
    ]


def shift_rule_gradient(
    circuit: CircuitAnsatz, params, expectation: Callable[[np.ndarray], np.ndarray]
) -> tuple[np.ndarray, float]:
    """Parameter-shift gradient of ``expectation(probability_rows) -> values``.

    Returns ``(gradient, unshifted_value)``.
    """
    terms = shift_terms(circuit)
    amps = evaluate_shifted(circuit, params, [(p, s) for p, s, _ in terms])
    values = expectation(_probs(amps))
    grad = np.zeros(circuit.num_params)
    for r, (p, _, coef) in enumerate(terms, start=1):
        grad[p] += coef * values[r]
    return grad, float(values[0])


def parameter_shift_gradient(
    circuit: CircuitAnsatz,
    params,
    disc: Discriminator,
    schema: TabularSchema,
    shots: int | str = "exact",
    rng: np.random.Generator | None = None,
    table: ObservableTable | None = None,
    disc_input: str = "bits",
) -> np.ndarray:
    """Gradient of the generator loss with the discriminator held fixed."""
    table = table or ObservableTable(schema, circuit.layout, disc_input)
    rng = rng if rng is not None else np.random.default_rng()
    grad, _ = shift_rule_gradient(circuit, params, lambda probs: _expectations(probs, table, disc, shots, rng))
    return grad


def kl_divergence(real_counts, gen_probs) -> float:
    """D_KL(P_real || P_gen) with additive smoothing on the generated side.

    Both arguments are arrays over the same outcomes, or mappings from
    outcome (e.g. bitstring) to count/probability.
    """
    if isinstance(real_counts, dict) or isinstance(gen_probs, dict):
        keys = sorted(set(real_counts) | set(gen_probs))
        real_counts = [real_counts.get(k, 0) for k in keys]
        gen_probs = [gen_probs.get(k, 0.0) for k in keys]
    p = np.asarray(real_counts, dtype=float)
    q = np.asarray(gen_probs, dtype=float)
    if p.shape != q.shape:
        raise ConfigurationError("distributions must cover the same outcomes")
    if p.size == 0 or p.sum() <= 0:
        raise ConfigurationError("real distribution is empty")
    p = p / p.sum()
    q = np.clip(q, 0.0, None)
    q = (q + KL_SMOOTHING) / (q.sum() + KL_SMOOTHING * q.size)
    nz = p > 0
    return float(max(np.sum(p[nz] * np.log(p[nz] / q[nz])), 0.0))


# ---------------------------------------------------------------------------
# checkpoints


@dataclass
class Checkpoint:
    config: TrainingConfig
    schema: TabularSchema
    layout: RegisterLayout
    epoch: int
    params: np.ndarray
    discriminator: Discriminator
    rng_state: dict
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_kl: float = math.inf
    best_params: np.ndarray | None = None
    best_discriminator: Discriminator | None = None

    @property
    def circuit(self) -> CircuitAnsatz:
        return build_circuit(self.layout, self.config.depth)

    def to_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "config": self.config.to_dict(),
            "schema": self.schema.to_dict(),
            "schema_sha256": self.schema.digest(),
            "layout": self.layout.to_dict(),
            "epoch": self.epoch,
            "params": self.params.tolist(),
            "discriminator": self.discriminator.to_dict(),
            "rng_state": self.rng_state,
            "history": self.history,
            "best_epoch": self.best_epoch,
            "best_kl": None if math.isinf(self.best_kl) else self.best_kl,
            "best_params": None if self.best_params is None else self.best_params.tolist(),
            "best_discriminator": None if self.best_discriminator is None else self.best_discriminator.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Checkpoint":
        if d.get("version", 0) > CHECKPOINT_VERSION:
            raise ConfigurationError(f"checkpoint version {d['version']} is not supported")
        schema = TabularSchema.from_dict(d["schema"])
        if d.get("schema_sha256") not in (None, schema.digest()):
            raise ConfigurationError("checkpoint schema hash mismatch")
        return cls(
            config=TrainingConfig.from_dict(d["config"]),
            schema=schema,
            layout=RegisterLayout.from_dict(d["layout"]),
            epoch=d["epoch"],
            params=np.asarray(d["params"], dtype=float),
            discriminator=Discriminator.from_dict(d["discriminator"]),
            rng_state=d["rng_state"],
            history=list(d["history"]),
            best_epoch=d["best_epoch"],
            best_kl=math.inf if d["best_kl"] is None else d["best_kl"],
            best_params=None if d["best_params"] is None else np.asarray(d["best_params"], dtype=float),
            best_discriminator=None if d["best_discriminator"] is None
            else Discriminator.from_dict(d["best_discriminator"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Checkpoint":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# training


def _valid_probs(probs, table):
    if table.layout.mode != "unique-row-index":
        return probs
    # resample out-of-range row indices: condition on the valid ones
    n_valid = table.schema.search_space_size()
    masked = probs.copy()
    masked[n_valid:] = 0.0
    if masked.sum() <= 0:
        masked[:n_valid] = 1.0
    return masked


def _first_layer_angles(circuit: CircuitAnsatz, ones: np.ndarray) -> np.ndarray:
    """First-layer angles reproducing per-qubit marginals ``ones`` = P(bit = 1),
    with every other gate at identity.

    RY(2 asin sqrt p) sets a numerical qubit; a one-hot register gets the
    Givens chain that leaves fraction ``p_k / (p_k + ... + p_last)`` at each
    position. The result is the product of the marginals.
    """
    params = np.zeros(circuit.num_params)
    per_layer = circuit.num_params // circuit.depth
    starts = {s: w for s, w in circuit.layout.categorical_registers}
    for g in circuit.parameterized_gates:
        if g.param_index >= per_layer:
            break
        q = g.qubits[0]
        if g.kind is GateKind.RY:
            params[g.param_index] = 2 * np.arcsin(np.sqrt(np.clip(ones[q], 0.0, 1.0)))
        elif g.kind is GateKind.GIVENS:
            start = max(s for s in starts if s <= q)
            rest = ones[q:start + starts[start]].sum()
            keep = ones[q] / rest if rest > 0 else 1.0
            params[g.param_index] = np.arccos(np.sqrt(np.clip(keep, 0.0, 1.0)))
    return params


def uniform_state_params(circuit: CircuitAnsatz) -> np.ndarray:
    """Parameters whose output is uniform over every valid bitstring."""
    ones = np.full(circuit.num_qubits, 0.5)
    for start, width in circuit.layout.categorical_registers:
        ones[start:start + width] = 1.0 / width
    return _first_layer_angles(circuit, ones)


def marginal_params(circuit: CircuitAnsatz, indices) -> np.ndarray:
    """Parameters whose output is the product of the data's per-qubit marginals."""
    n = circuit.num_qubits
    bits = (np.asarray(indices, dtype=np.int64)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return _first_layer_angles(circuit, bits.mean(axis=0))


def _init_params(circuit: CircuitAnsatz, config: TrainingConfig, rng: np.random.Generator, indices) -> np.ndarray:
    if config.init == "random":
        return rng.uniform(-np.pi, np.pi, size=circuit.num_params)
    base = marginal_params(circuit, indices) if config.init == "marginal" else uniform_state_params(circuit)
    return base + rng.normal(0.0, config.init_noise, size=circuit.num_params)


def train(
    data,
    schema: TabularSchema,
    config: TrainingConfig,
    resume: Checkpoint | None = None,
    log_path=None,
    callback: Callable[[dict], None] | None = None,
    checkpoint_path=None,
    checkpoint_every: int = 0,
) -> Checkpoint:
    """Run the alternating loop until ``config.epochs`` epochs have been done.

    ``data`` is a DataFrame of raw rows or an integer array of basis indices
    already encoded for ``build_layout(schema, config.mode)``. Returns the
    final checkpoint, which also carries the best-KL parameters. With
    ``checkpoint_path`` the checkpoint is also written every
    ``checkpoint_every`` epochs, at the end, and before a TrainingError.
    """
    schema = schema.with_mode(config.mode)
    layout = build_layout(schema)
    circuit = build_circuit(layout, config.depth)
    n = layout.num_qubits
    if n > 24:
        raise ConfigurationError(f"layout needs {n} qubits; at most 24 are simulable")
    shots = config.shots
    if shots == "exact" and n > EXACT_QUBIT_LIMIT:
        shots = DEFAULT_SHOTS

    if isinstance(data, pd.DataFrame):
        indices = encode_indices(data, schema, layout)
    else:
        indices = np.asarray(data, dtype=np.int64)
    if indices.size == 0:
        raise ConfigurationError("training data is empty")
    if indices.min() < 0 or indices.max() >= 1 << n:
        raise ConfigurationError("encoded training data does not fit the layout")

    table = ObservableTable(schema, layout, config.disc_input)
    _, real_digits = basis_digits(schema, layout, indices)
    real_features = feature_vectors(real_digits, schema, config.disc_input)
    real_counts = np.bincount(indices, minlength=1 << n)
    m = max(1, int(round(config.batch_fraction * len(indices))))

    if resume is None:
        rng = np.random.default_rng(config.seed)
        params = _init_params(circuit, config, rng, indices)
        width = feature_width(schema, config.disc_input)
        disc = Discriminator.initialize(width, config.resolve_hidden_width(width), int(rng.integers(2**31)))
        ckpt = Checkpoint(config, schema, layout, 0, params, disc, rng.bit_generator.state)
    else:
        ckpt = resume
        ckpt.config = config
        rng = np.random.default_rng()
        rng.bit_generator.state = ckpt.rng_state
        params, disc = ckpt.params.copy(), ckpt.discriminator.copy()

    log = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        probs = _probs(evaluate_batch(circuit, params)[0])
        for epoch in range(ckpt.epoch + 1, config.epochs + 1):
            sampling = _valid_probs(probs, table)
            loss_d = 0.0
            for _ in range(config.disc_steps):
                real = real_features[rng.choice(len(indices), size=m, replace=False)]
                fake_idx = sample_indices(sampling, m, rng)
                _, fake_digits = basis_digits(schema, layout, fake_idx)
                fake = feature_vectors(fake_digits, schema, config.disc_input)
                loss_d = disc.loss_d(real, fake)
                disc.backward_update(real, fake, config.eta_d)

            grad, loss_g = shift_rule_gradient(
                circuit, params, lambda rows: _expectations(rows, table, disc, shots, rng)
            )
            if not (np.isfinite(loss_d) and np.isfinite(loss_g) and np.all(np.isfinite(grad))):
                err = TrainingError(f"non-finite loss or gradient at epoch {epoch}; last good epoch {ckpt.epoch}")
                err.checkpoint = ckpt
                if checkpoint_path:
                    ckpt.save(checkpoint_path)
                raise err
            params = params - config.eta_g * grad
            probs = _probs(evaluate_batch(circuit, params)[0])
            kl = kl_divergence(real_counts, _valid_probs(probs, table))

            record = {"epoch": epoch, "loss_d": loss_d, "loss_g": loss_g, "kl": kl}
            ckpt.history.append(record)
            if kl < ckpt.best_kl:
                ckpt.best_kl, ckpt.best_epoch = kl, epoch
                ckpt.best_params, ckpt.best_discriminator = params.copy(), disc.copy()
            ckpt.epoch, ckpt.params, ckpt.discriminator = epoch, params, disc.copy()
            ckpt.rng_state = rng.bit_generator.state
            if log:
                log.write(json.dumps(record, sort_keys=True) + "\n")
            if callback:
                callback(record)
            if checkpoint_path and checkpoint_every and epoch % checkpoint_every == 0:
                ckpt.save(checkpoint_path)
    finally:
        if log:
            log.close()
    if checkpoint_path:
        ckpt.save(checkpoint_path)
    return ckpt


def generator_probabilities(ckpt: Checkpoint, use_best: bool = True) -> np.ndarray:
    """Output distribution over basis states (out-of-range row indices removed)."""
    params = ckpt.best_params if use_best and ckpt.best_params is not None else ckpt.params
    probs = _probs(evaluate_batch(ckpt.circuit, params)[0])
    if ckpt.layout.mode == "unique-row-index":
        probs[ckpt.schema.search_space_size():] = 0.0
    return probs / probs.sum()


def generate(ckpt: Checkpoint, num_rows: int, seed: int, use_best: bool = True) -> pd.DataFrame:
    """Sample ``num_rows`` decoded rows from the (best) generator state."""
    if num_rows < 0:
        raise ConfigurationError("num_rows must be >= 0")
    schema, layout = ckpt.schema, ckpt.layout
    if num_rows == 0:
        return pd.DataFrame({name: pd.Series(dtype=object) for name in schema.names})
    probs = generator_probabilities(ckpt, use_best)
    idx = sample_indices(probs, num_rows, np.random.default_rng(seed))
    valid, digits = basis_digits(schema, layout, idx)
    if not valid.all():
        raise TrainingError("generator produced an invalid bitstring; one-hot invariant violated")
    return digits_to_frame(digits, schema)
