"""Dense statevector simulation of the generator gate set.

Bit order: qubit 0 is the most significant bit, i.e. the leftmost character
of a measured bitstring.

Every kernel works on a batch of states stored as a ``(batch, 2**n)``
complex array and accepts either a scalar angle or one angle per batch row.
The single-state functions (``apply_ry`` and friends) are thin wrappers
that mutate a :class:`StateVector` in place and return it.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .exceptions import ConfigurationError

MAX_QUBITS = 24


class GateKind(str, enum.Enum):
    RY = "RY"
    X = "X"
    ISING_YY = "IsingYY"
    CONTROLLED_RY = "ControlledRY"
    GIVENS = "Givens"
    CONTROLLED_GIVENS = "ControlledGivens"


GATE_ARITY = {
    GateKind.RY: 1,
    GateKind.X: 1,
    GateKind.ISING_YY: 2,
    GateKind.CONTROLLED_RY: 2,
    GateKind.GIVENS: 2,
    GateKind.CONTROLLED_GIVENS: 3,
}


@dataclass(frozen=True)
class GateSpec:
    """One gate of a circuit.

    ``qubits`` lists control qubits first. ``param_index`` points into the
    shared parameter vector and is ``None`` for the unparameterized X gate.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    param_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise ConfigurationError(
                f"{self.kind.value} acts on {GATE_ARITY[self.kind]} qubit(s), got {self.qubits}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise IndexError(f"duplicate qubit indices {self.qubits}")
        if (self.kind is GateKind.X) != (self.param_index is None):
            raise ConfigurationError(f"bad parameter index for {self.kind.value}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "qubits": list(self.qubits), "param_index": self.param_index}


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ConfigurationError(
                f"expected {1 << self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


# ---------------------------------------------------------------------------
# batched kernels
#
# Every gate in the set is a two-level map on pairs of basis indices
# (i, i ^ flip), selected by fixed bit values (i & mask == value):
#     a_i <- c a_i + u s a_j,    a_j <- v s a_i + c a_j
# with per-row c = cos, s = sin of the row's angle.


@numba.njit(cache=True)
def _pair_kernel(amps, idx, flip, cos_t, sin_t, uf, vf):
    for b in range(amps.shape[0]):
        c = cos_t[b]
        u = uf * sin_t[b]
        v = vf * sin_t[b]
        for i in idx:
            j = i ^ flip
            ai = amps[b, i]
            aj = amps[b, j]
            amps[b, i] = c * ai + u * aj
            amps[b, j] = v * ai + c * aj


@functools.lru_cache(maxsize=4096)
def _pair_indices(n: int, fixed: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Basis indices whose bits at the given qubits take the given values."""
    mask = value = 0
    for q, v in fixed:
        bit = 1 << (n - 1 - q)
        mask |= bit
        value |= bit * v
    idx = np.arange(1 << n, dtype=np.int64)
    return np.ascontiguousarray(idx[(idx & mask) == value])


def _bit(n: int, q: int) -> int:
    return 1 << (n - 1 - q)


def _row_angles(theta, batch: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0:
        return np.full(batch, float(theta))
    if theta.shape != (batch,):
        raise ConfigurationError(f"expected {batch} angles, got shape {theta.shape}")
    return np.ascontiguousarray(theta)


def _check(amps: np.ndarray, n: int, qubits: Sequence[int]) -> None:
    if amps.ndim != 2 or amps.shape[1] != 1 << n or amps.dtype != np.complex128:
        raise ValueError(f"expected a (batch, {1 << n}) complex128 array")
    if not amps.flags.c_contiguous:
        raise ValueError("amplitude array must be C-contiguous")
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit index {q} out of range for {n} qubits")
    if len(set(qubits)) != len(qubits):
        raise IndexError(f"duplicate qubit indices {tuple(qubits)}")


def _apply_pair(amps, n, fixed, flip, angles, uf, vf):
    _pair_kernel(amps, _pair_indices(n, tuple(fixed)), flip, np.cos(angles), np.sin(angles), complex(uf), complex(vf))
    return amps


def batch_ry(amps, n, qubit, theta):
    _check(amps, n, [qubit])
    half = _row_angles(theta, amps.shape[0]) / 2
    return _apply_pair(amps, n, ((qubit, 0),), _bit(n, qubit), half, -1, 1)


def batch_x(amps, n, qubit):
    _check(amps, n, [qubit])
    # c = cos(pi/2) is not exactly zero; use the exact swap angle instead
    idx = _pair_indices(n, ((qubit, 0),))
    flip = _bit(n, qubit)
    ones = np.ones(amps.shape[0])
    _pair_kernel(amps, idx, flip, np.zeros(amps.shape[0]), ones, 1 + 0j, 1 + 0j)
    return amps


def batch_isingyy(amps, n, q1, q2, theta):
    """exp(-i theta/2 Y⊗Y) on qubits (q1, q2)."""
    _check(amps, n, [q1, q2])
    half = _row_angles(theta, amps.shape[0]) / 2
    both = _bit(n, q1) | _bit(n, q2)
    # Y⊗Y maps |00> -> -|11>, |11> -> -|00>, |01> -> |10>, |10> -> |01>
    _apply_pair(amps, n, ((q1, 0), (q2, 0)), both, half, 1j, 1j)
    return _apply_pair(amps, n, ((q1, 0), (q2, 1)), both, half, -1j, -1j)


def batch_controlled_ry(amps, n, control, target, theta):
    _check(amps, n, [control, target])
    half = _row_angles(theta, amps.shape[0]) / 2
    return _apply_pair(amps, n, ((control, 1), (target, 0)), _bit(n, target), half, -1, 1)


def _givens_phases(phi):
    e = np.exp(1j * phi)
    return -e, np.conj(e)


def batch_givens(amps, n, qi, qj, theta, phi=0.0):
    """Givens rotation G_ij on the ordered pair (|0_i 1_j>, |1_i 0_j>)."""
    _check(amps, n, [qi, qj])
    uf, vf = _givens_phases(phi)
    angles = _row_angles(theta, amps.shape[0])
    return _apply_pair(amps, n, ((qi, 0), (qj, 1)), _bit(n, qi) | _bit(n, qj), angles, uf, vf)


def batch_controlled_givens(amps, n, control, qi, qj, theta, phi=0.0):
    _check(amps, n, [control, qi, qj])
    uf, vf = _givens_phases(phi)
    angles = _row_angles(theta, amps.shape[0])
    fixed = ((control, 1), (qi, 0), (qj, 1))
    return _apply_pair(amps, n, fixed, _bit(n, qi) | _bit(n, qj), angles, uf, vf)


def apply_gate_batch(amps: np.ndarray, n: int, gate: GateSpec, theta=0.0) -> np.ndarray:
    """Apply ``gate`` to every row of ``amps`` (Givens phases fixed at zero)."""
    k, q = gate.kind, gate.qubits
    if k is GateKind.RY:
        return batch_ry(amps, n, q[0], theta)
    if k is GateKind.X:
        return batch_x(amps, n, q[0])
    if k is GateKind.ISING_YY:
        return batch_isingyy(amps, n, q[0], q[1], theta)
    if k is GateKind.CONTROLLED_RY:
        return batch_controlled_ry(amps, n, q[0], q[1], theta)
    if k is GateKind.GIVENS:
        return batch_givens(amps, n, q[0], q[1], theta)
    return batch_controlled_givens(amps, n, q[0], q[1], q[2], theta)


# ---------------------------------------------------------------------------
# single-state API


def zero_state(num_qubits: int) -> StateVector:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def _as_batch(state: StateVector) -> np.ndarray:
    return state.amplitudes.reshape(1, -1)


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    batch_ry(_as_batch(state), state.num_qubits, qubit, theta)
    return state


def apply_x(state: StateVector, qubit: int) -> StateVector:
    batch_x(_as_batch(state), state.num_qubits, qubit)
    return state


def apply_isingyy(state: StateVector, q1: int, q2: int, theta: float) -> StateVector:
    batch_isingyy(_as_batch(state), state.num_qubits, q1, q2, theta)
    return state


def apply_controlled_ry(state: StateVector, control: int, target: int, theta: float) -> StateVector:
    batch_controlled_ry(_as_batch(state), state.num_qubits, control, target, theta)
    return state


def apply_givens(state: StateVector, qi: int, qj: int, theta: float, phi: float = 0.0) -> StateVector:
    batch_givens(_as_batch(state), state.num_qubits, qi, qj, theta, phi)
    return state


def apply_controlled_givens(
    state: StateVector, control: int, qi: int, qj: int, theta: float, phi: float = 0.0
) -> StateVector:
    batch_controlled_givens(_as_batch(state), state.num_qubits, control, qi, qj, theta, phi)
    return state


def apply_gate(state: StateVector, gate: GateSpec, theta: float = 0.0) -> StateVector:
    apply_gate_batch(_as_batch(state), state.num_qubits, gate, theta)
    return state


def probabilities(state: StateVector) -> np.ndarray:
    amps = state.amplitudes
    return amps.real**2 + amps.imag**2


def sample_indices(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``shots`` basis indices i.i.d. from ``probs`` by inverse-CDF lookup."""
    if shots < 1:
        raise ConfigurationError(f"shots must be >= 1, got {shots}")
    cdf = np.cumsum(probs)
    u = rng.random(shots) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(probs) - 1)


def bitstring(index: int, num_qubits: int) -> str:
    return format(int(index), f"0{num_qubits}b")


def sample(state: StateVector, shots: int, seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    idx = sample_indices(probabilities(state), shots, rng)
    return [bitstring(i, state.num_qubits) for i in idx]
