"""Register layouts and the layered generator circuit built on them."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, SchemaError
from .schema import MODES, TabularSchema
from .statevector import GateKind, GateSpec, StateVector, apply_gate_batch


@dataclass(frozen=True)
class FeatureSlot:
    """Where one feature lives in the bitstring.

    ``kind`` is ``"binary"`` (numeric bin index), ``"boolean"`` (a
    two-category feature stored as one bit) or ``"onehot"``.
    """

    name: str
    kind: str
    start: int
    width: int

    @property
    def stop(self) -> int:
        return self.start + self.width


@dataclass(frozen=True)
class RegisterLayout:
    numerical_width: int
    categorical_sizes: tuple[int, ...]
    mode: str
    slots: tuple[FeatureSlot, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "categorical_sizes", tuple(int(c) for c in self.categorical_sizes))
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.numerical_width < 0 or any(c < 2 for c in self.categorical_sizes):
            raise ConfigurationError(f"invalid register sizes {self.label}")
        if self.num_qubits < 1:
            raise ConfigurationError("layout has no qubits")

    @property
    def num_qubits(self) -> int:
        return self.numerical_width + sum(self.categorical_sizes)

    @property
    def num_registers(self) -> int:
        return (1 if self.numerical_width else 0) + len(self.categorical_sizes)

    @property
    def registers(self) -> list[tuple[int, int]]:
        """(start, width) of every register, numerical first."""
        out = []
        pos = 0
        if self.numerical_width:
            out.append((0, self.numerical_width))
            pos = self.numerical_width
        for c in self.categorical_sizes:
            out.append((pos, c))
            pos += c
        return out

    @property
    def categorical_registers(self) -> list[tuple[int, int]]:
        regs = self.registers
        return regs[1:] if self.numerical_width else regs

    @property
    def label(self) -> str:
        parts = [f"n{self.numerical_width}"] if self.numerical_width else []
        parts += [f"c{c}" for c in self.categorical_sizes]
        return "[" + ",".join(parts) + "]"

    @classmethod
    def from_label(cls, label: str, mode: str = "non-boolean") -> "RegisterLayout":
        """Parse ``"[n5,c3,c2]"``; slots are left empty (no schema attached)."""
        tokens = [t.strip() for t in label.strip().strip("[]").split(",") if t.strip()]
        n, cats = 0, []
        for i, tok in enumerate(tokens):
            m = re.fullmatch(r"([nc])(\d+)", tok)
            if not m:
                raise ConfigurationError(f"bad register token {tok!r} in {label!r}")
            if m.group(1) == "n":
                if i != 0:
                    raise ConfigurationError("the numerical register must come first")
                n = int(m.group(2))
            else:
                cats.append(int(m.group(2)))
        return cls(n, tuple(cats), mode)

    def to_dict(self) -> dict:
        return {
            "numerical_width": self.numerical_width,
            "categorical_sizes": list(self.categorical_sizes),
            "mode": self.mode,
            "slots": [vars(s) for s in self.slots],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegisterLayout":
        slots = tuple(FeatureSlot(**s) for s in d.get("slots", []))
        return cls(d["numerical_width"], tuple(d["categorical_sizes"]), d["mode"], slots)


def build_layout(schema: TabularSchema, mode: str | None = None) -> RegisterLayout:
    """Assign every schema feature to a register slot.

    Numeric features fill the numerical register in schema order. In Boolean
    mode two-category features are appended to the low end of the numerical
    register; every other categorical feature gets a one-hot register, in
    schema order. Unique-row-index mode uses a single numerical register
    wide enough for the whole search space.
    """
    mode = mode or schema.mode
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}")
    if not schema.features:
        raise SchemaError("schema has no features")

    if mode == "unique-row-index":
        width = max(1, math.ceil(math.log2(schema.search_space_size())))
        return RegisterLayout(width, (), mode, (FeatureSlot("__row_index__", "binary", 0, width),))

    numeric = [f for f in schema.features if f.is_numeric]
    categorical = [f for f in schema.features if not f.is_numeric]
    booleans = [f for f in categorical if mode == "boolean" and len(f.categories) == 2]
    onehots = [f for f in categorical if f not in booleans]

    slots = []
    pos = 0
    for f in numeric:
        slots.append(FeatureSlot(f.name, "binary", pos, f.qubits))
        pos += f.qubits
    for f in booleans:
        slots.append(FeatureSlot(f.name, "boolean", pos, 1))
        pos += 1
    n = pos
    for f in onehots:
        slots.append(FeatureSlot(f.name, "onehot", pos, len(f.categories)))
        pos += len(f.categories)
    return RegisterLayout(n, tuple(len(f.categories) for f in onehots), mode, tuple(slots))


def gate_counts(layout: RegisterLayout) -> dict:
    """Per-layer gate counts: numerical 3n-2, categorical c_i (X prep included), cross R-1."""
    n = layout.numerical_width
    numerical = 3 * n - 2 if n else 0
    categorical = list(layout.categorical_sizes)
    cross = max(layout.num_registers - 1, 0)
    return {
        "numerical": numerical,
        "categorical": categorical,
        "cross": cross,
        "total": numerical + sum(categorical) + cross,
    }


@dataclass(frozen=True)
class CircuitAnsatz:
    layout: RegisterLayout
    depth: int
    gates: tuple[GateSpec, ...]
    num_params: int

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    @property
    def parameterized_gates(self) -> list[GateSpec]:
        return [g for g in self.gates if g.param_index is not None]

    def reference_index(self) -> int:
        """Basis index reached by the X preparation gates alone."""
        n = self.num_qubits
        idx = 0
        for g in self.gates:
            if g.kind is GateKind.X:
                idx ^= 1 << (n - 1 - g.qubits[0])
        return idx


def _layer(layout: RegisterLayout, first_param: int) -> list[GateSpec]:
    gates: list[tuple[GateKind, tuple[int, ...]]] = []
    n = layout.numerical_width
    gates += [(GateKind.RY, (q,)) for q in range(n)]
    gates += [(GateKind.ISING_YY, (q, q + 1)) for q in range(n - 1)]
    gates += [(GateKind.CONTROLLED_RY, (q, q + 1)) for q in range(n - 1)]
    for start, width in layout.categorical_registers:
        gates += [(GateKind.GIVENS, (start + k, start + k + 1)) for k in range(width - 1)]
    regs = layout.registers
    for (s0, w0), (s1, _) in zip(regs, regs[1:]):
        gates.append((GateKind.CONTROLLED_GIVENS, (s0 + w0 - 1, s1, s1 + 1)))
    return [GateSpec(k, q, first_param + i) for i, (k, q) in enumerate(gates)]


def build_circuit(layout: RegisterLayout, depth: int) -> CircuitAnsatz:
    """X preparation once, then ``depth`` independently parameterized model layers."""
    if int(depth) != depth or depth < 1:
        raise ConfigurationError(f"depth must be a positive integer, got {depth}")
    gates = [GateSpec(GateKind.X, (start,)) for start, _ in layout.categorical_registers]
    p = 0
    for _ in range(depth):
        layer = _layer(layout, p)
        gates += layer
        p += len(layer)
    return CircuitAnsatz(layout, int(depth), tuple(gates), p)


def evaluate_batch(circuit: CircuitAnsatz, params: np.ndarray) -> np.ndarray:
    """Amplitudes for each parameter row; returns shape ``(batch, 2**N)``."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if params.shape[1] != circuit.num_params:
        raise ConfigurationError(f"expected {circuit.num_params} parameters, got {params.shape[1]}")
    n = circuit.num_qubits
    amps = np.zeros((params.shape[0], 1 << n), dtype=np.complex128)
    amps[:, 0] = 1.0
    for g in circuit.gates:
        theta = 0.0 if g.param_index is None else params[:, g.param_index]
        apply_gate_batch(amps, n, g, theta)
    return amps


def evaluate_shifted(circuit: CircuitAnsatz, params, shifts) -> np.ndarray:
    """Amplitudes for ``params`` (row 0) and for each ``(param_index, shift)``
    variant (rows 1..), sharing the unshifted circuit prefix between rows.

    A variant row is spawned from the base state just before its gate, so
    gate m is applied to the base row plus the variants of gates before m.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.num_params,):
        raise ConfigurationError(f"expected {circuit.num_params} parameters, got shape {params.shape}")
    by_param: dict[int, list[float]] = {}
    for p, shift in shifts:
        by_param.setdefault(int(p), []).append(float(shift))
    n = circuit.num_qubits
    total = 1 + sum(len(v) for v in by_param.values())
    amps = np.zeros((total, 1 << n), dtype=np.complex128)
    amps[0, 0] = 1.0
    order = []  # (param_index, shift) in row order
    rows = 1
    for g in circuit.gates:
        if g.param_index is None:
            apply_gate_batch(amps[:rows], n, g)
            continue
        theta = params[g.param_index]
        new = by_param.get(g.param_index, [])
        amps[rows:rows + len(new)] = amps[0]
        angles = np.full(rows + len(new), theta)
        angles[rows:] += new
        order += [(g.param_index, sh) for sh in new]
        rows += len(new)
        apply_gate_batch(amps[:rows], n, g, angles)
    if rows != total:
        raise ConfigurationError("shift refers to a parameter that no gate uses")
    # put variant rows back into the order the shifts were given
    position = {}
    for r, key in enumerate(order, start=1):
        position.setdefault(key, []).append(r)
    perm = [0] + [position[(int(p), float(sh))].pop(0) for p, sh in shifts]
    return amps[perm]


def evaluate(circuit: CircuitAnsatz, params) -> StateVector:
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.num_params,):
        raise ConfigurationError(f"expected {circuit.num_params} parameters, got shape {params.shape}")
    return StateVector(circuit.num_qubits, evaluate_batch(circuit, params[None, :])[0])


def format_circuit(circuit: CircuitAnsatz) -> str:
    counts = gate_counts(circuit.layout)
    lines = [
        f"layout: {circuit.layout.label} ({circuit.layout.mode}, {circuit.num_qubits} qubits)",
        f"depth: {circuit.depth}",
    ]
    for i, g in enumerate(circuit.gates):
        p = "" if g.param_index is None else f"  theta[{g.param_index}]"
        lines.append(f"{i:4d}  {g.kind.value:<16} {','.join(map(str, g.qubits)):<8}{p}")
    lines += [
        f"numerical gates per layer: {counts['numerical']}",
        f"categorical gates per layer: {' + '.join(map(str, counts['categorical'])) or '0'}",
        f"cross-register gates per layer: {counts['cross']}",
        f"total gates per layer: {counts['total']}",
        f"trainable parameters: {circuit.num_params}",
    ]
    return "\n".join(lines)
