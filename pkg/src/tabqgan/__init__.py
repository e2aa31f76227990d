"""Quantum GAN for tabular data on a simulated statevector generator."""

from .ansatz import CircuitAnsatz, RegisterLayout, build_circuit, build_layout, evaluate, format_circuit, gate_counts
from .discriminator import Discriminator
from .encoding import TabularEncoder, decode_bits, encode_row, infer_schema
from .estimator import TabularQGAN
from .exceptions import (
    ConfigurationError,
    DataError,
    DecodeError,
    IngestionError,
    MetricError,
    SchemaError,
    TabQGANError,
    TrainingError,
)
from .metrics import MetricsReport, overall_score
from .schema import FeatureSpec, TabularSchema, load_schema, save_schema
from .statevector import GateKind, GateSpec, StateVector, zero_state
from .training import Checkpoint, TrainingConfig, generate, kl_divergence, train

__version__ = "0.1.0"

__all__ = [
    "Checkpoint", "CircuitAnsatz", "ConfigurationError", "DataError", "DecodeError", "Discriminator",
    "FeatureSpec", "GateKind", "GateSpec", "IngestionError", "MetricError", "MetricsReport",
    "RegisterLayout", "SchemaError", "StateVector", "TabQGANError", "TabularEncoder", "TabularQGAN",
    "TabularSchema", "TrainingConfig", "TrainingError", "build_circuit", "build_layout", "decode_bits",
    "encode_row", "evaluate", "format_circuit", "gate_counts", "generate", "infer_schema", "kl_divergence",
    "load_schema", "overall_score", "save_schema", "train", "zero_state",
]
