"""Three-layer feed-forward discriminator trained by plain gradient descent."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError, TrainingError
from .schema import TabularSchema

# D is clamped into [EPS, 1 - EPS] inside the losses
EPS = 1e-7


DISC_INPUTS = ("bits", "scaled")


def feature_vectors(digits: np.ndarray, schema: TabularSchema, numeric: str = "bits") -> np.ndarray:
    """Vectorize per-feature codes for the discriminator.

    Categoricals are one-hot blocks. A numeric bin index is either its
    ``qubits`` binary digits, most significant first (``"bits"``), or one
    value ``bin / (2**qubits - 1)`` in [0, 1] (``"scaled"``).
    """
    if numeric not in DISC_INPUTS:
        raise ConfigurationError(f"numeric vectorization must be one of {DISC_INPUTS}")
    digits = np.atleast_2d(digits)
    blocks = []
    for j, f in enumerate(schema.features):
        d = digits[:, j]
        if not f.is_numeric:
            blocks.append(np.eye(len(f.categories))[d])
        elif numeric == "bits":
            blocks.append(((d[:, None] >> np.arange(f.qubits - 1, -1, -1)) & 1).astype(float))
        else:
            blocks.append((d / (f.bin_count - 1))[:, None])
    return np.concatenate(blocks, axis=1)


def feature_width(schema: TabularSchema, numeric: str = "bits") -> int:
    per_numeric = (lambda f: f.qubits) if numeric == "bits" else (lambda f: 1)
    return sum(per_numeric(f) if f.is_numeric else len(f.categories) for f in schema.features)


_LO, _HI = np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)


def _sigmoid(z):
    # clipped so the output stays strictly inside (0, 1) in floating point
    return np.clip(0.5 * (1.0 + np.tanh(0.5 * z)), _LO, _HI)


class Discriminator:
    """input_dim -> hidden -> hidden -> 1, ReLU hidden units, sigmoid output.

    ``params`` is the list ``[W1, b1, W2, b2, W3, b3]``; weights have shape
    ``(fan_in, fan_out)``.
    """

    def __init__(self, params):
        self.params = [np.array(p, dtype=float) for p in params]
        shapes = [p.shape for p in self.params]
        if len(shapes) != 6 or any(len(s) != 2 for s in shapes[::2]):
            raise ConfigurationError("expected [W1, b1, W2, b2, W3, b3]")
        (d, h1), (h1b, h2), (h2b, o) = shapes[0], shapes[2], shapes[4]
        if h1 != h1b or h2 != h2b or o != 1 or shapes[1] != (h1,) or shapes[3] != (h2,) or shapes[5] != (1,):
            raise ConfigurationError(f"inconsistent layer shapes {shapes}")

    @classmethod
    def initialize(cls, input_dim: int, hidden_width: int, seed: int) -> "Discriminator":
        """Glorot-uniform weights U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); zero biases."""
        if input_dim < 1 or hidden_width < 1:
            raise ConfigurationError("discriminator dimensions must be >= 1")
        rng = np.random.default_rng(seed)
        params = []
        for fan_in, fan_out in ((input_dim, hidden_width), (hidden_width, hidden_width), (hidden_width, 1)):
            a = np.sqrt(6.0 / (fan_in + fan_out))
            params += [rng.uniform(-a, a, size=(fan_in, fan_out)), np.zeros(fan_out)]
        return cls(params)

    @classmethod
    def zeros(cls, input_dim: int, hidden_width: int) -> "Discriminator":
        return cls([
            np.zeros((input_dim, hidden_width)), np.zeros(hidden_width),
            np.zeros((hidden_width, hidden_width)), np.zeros(hidden_width),
            np.zeros((hidden_width, 1)), np.zeros(1),
        ])

    @property
    def input_dim(self) -> int:
        return self.params[0].shape[0]

    @property
    def hidden_width(self) -> int:
        return self.params[0].shape[1]

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "Discriminator":
        return Discriminator([p.copy() for p in self.params])

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.input_dim:
            raise ConfigurationError(f"expected feature width {self.input_dim}, got {x.shape[1]}")
        return x, squeeze

    def _forward(self, x):
        W1, b1, W2, b2, W3, b3 = self.params
        z1 = x @ W1 + b1
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ W2 + b2
        h2 = np.maximum(z2, 0.0)
        z3 = (h2 @ W3 + b3)[:, 0]
        return z1, h1, z2, h2, z3

    def logits(self, x) -> np.ndarray:
        x, squeeze = self._check(x)
        z = self._forward(x)[-1]
        return z[0] if squeeze else z

    def forward(self, x):
        """Probability that each row is real."""
        return _sigmoid(self.logits(x))

    __call__ = forward

    # -- losses ------------------------------------------------------------

    @staticmethod
    def _nonempty(batch, what):
        batch = np.atleast_2d(np.asarray(batch, dtype=float))
        if batch.shape[0] == 0:
            raise ConfigurationError(f"empty {what} batch")
        return batch

    def loss_d(self, real, fake) -> float:
        real, fake = self._nonempty(real, "real"), self._nonempty(fake, "fake")
        dr = np.clip(self.forward(real), EPS, 1 - EPS)
        df = np.clip(self.forward(fake), EPS, 1 - EPS)
        return float(-np.mean(np.log(dr)) - np.mean(np.log1p(-df)))

    def loss_g(self, fake) -> float:
        fake = self._nonempty(fake, "fake")
        return float(-np.mean(np.log(np.clip(self.forward(fake), EPS, 1 - EPS))))

    def generator_observable(self, x) -> np.ndarray:
        """Per-sample -log D(x), the quantity whose mean is the generator loss."""
        return -np.log(np.clip(self.forward(x), EPS, 1 - EPS))

    # -- gradients ---------------------------------------------------------

    def _backprop(self, x, dz3):
        W1, b1, W2, b2, W3, b3 = self.params
        z1, h1, z2, h2, _ = self._forward(x)
        gW3 = h2.T @ dz3[:, None]
        gb3 = np.array([dz3.sum()])
        dh2 = dz3[:, None] * W3[:, 0][None, :]
        dz2 = dh2 * (z2 > 0)
        gW2 = h1.T @ dz2
        gb2 = dz2.sum(axis=0)
        dh1 = dz2 @ W2.T
        dz1 = dh1 * (z1 > 0)
        gW1 = x.T @ dz1
        gb1 = dz1.sum(axis=0)
        return [gW1, gb1, gW2, gb2, gW3, gb3]

    def gradient_d(self, real, fake) -> list[np.ndarray]:
        """Exact gradient of ``loss_d`` with respect to every parameter array."""
        real, fake = self._nonempty(real, "real"), self._nonempty(fake, "fake")
        x = np.concatenate([real, fake])
        z = self._forward(x)[-1]
        d = _sigmoid(z)
        m_r, m_f = len(real), len(fake)
        # d/dz of -log(clip(s)) is s - 1 and of -log(1 - clip(s)) is s; zero where clipped
        inside = (d > EPS) & (d < 1 - EPS)
        dz = np.where(np.arange(len(x)) < m_r, (d - 1.0) / m_r, d / m_f) * inside
        return self._backprop(x, dz)

    def backward_update(self, real, fake, eta_d: float) -> "Discriminator":
        """One vanilla gradient-descent step on ``loss_d``, in place."""
        if eta_d < 0:
            raise ConfigurationError("eta_d must be non-negative")
        grads = self.gradient_d(real, fake)
        for g in grads:
            if not np.all(np.isfinite(g)):
                norms = [float(np.linalg.norm(gg)) for gg in grads]
                raise TrainingError(f"non-finite discriminator gradient (per-layer norms {norms})")
        for p, g in zip(self.params, grads):
            p -= eta_d * g
        return self

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"params": [p.tolist() for p in self.params]}

    @classmethod
    def from_dict(cls, d: dict) -> "Discriminator":
        return cls([np.asarray(p, dtype=float) for p in d["params"]])
