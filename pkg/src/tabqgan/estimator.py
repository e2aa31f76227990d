"""scikit-learn style front end for the tabular quantum GAN."""

from __future__ import annotations

import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .encoding import TabularEncoder
from .metrics import overall_score
from .training import Checkpoint, TrainingConfig, generate, train


class TabularQGAN(BaseEstimator):
    """Quantum-circuit generator trained adversarially on a table.

    Parameters
    ----------
    numeric : dict, optional
        Numeric column -> qubit budget. With neither ``numeric`` nor
        ``categorical`` every column is used (numeric dtypes get 5 qubits).
    categorical : list, optional
    schema : TabularSchema, optional
        Frozen schema; overrides ``numeric``/``categorical``.
    mode : {"boolean", "non-boolean", "unique-row-index"}
    depth, batch_fraction, eta_g, eta_d, epochs, disc_steps, hidden_width, shots, init, init_noise, disc_input
        See :class:`~tabqgan.training.TrainingConfig`.
    random_state : int
    """

    def __init__(
        self, numeric=None, categorical=None, schema=None, mode="boolean", depth=1, batch_fraction=0.1,
        eta_g=0.1, eta_d=0.1, epochs=3000, disc_steps=1, hidden_width="data", shots="exact", init="marginal", init_noise=0.1, disc_input="bits", random_state=0,
    ):
        self.numeric = numeric
        self.categorical = categorical
        self.schema = schema
        self.mode = mode
        self.depth = depth
        self.batch_fraction = batch_fraction
        self.eta_g = eta_g
        self.eta_d = eta_d
        self.epochs = epochs
        self.disc_steps = disc_steps
        self.hidden_width = hidden_width
        self.shots = shots
        self.init = init
        self.init_noise = init_noise
        self.disc_input = disc_input
        self.random_state = random_state

    def _config(self) -> TrainingConfig:
        return TrainingConfig(
            depth=self.depth, batch_fraction=self.batch_fraction, eta_g=self.eta_g, eta_d=self.eta_d,
            epochs=self.epochs, disc_steps=self.disc_steps, seed=self.random_state, mode=self.mode,
            hidden_width=self.hidden_width, shots=self.shots, init=self.init, init_noise=self.init_noise,
            disc_input=self.disc_input,
        )

    def fit(self, X, y=None, log_path=None):
        X = pd.DataFrame(X)
        self.encoder_ = TabularEncoder(self.numeric, self.categorical, self.mode, self.schema).fit(X)
        self.schema_ = self.encoder_.schema_
        self.layout_ = self.encoder_.layout_
        self.checkpoint_ = train(self.encoder_.transform(X), self.schema_, self._config(), log_path=log_path)
        self.n_features_in_ = self.encoder_.n_features_in_
        self.feature_names_in_ = self.encoder_.feature_names_in_
        return self

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "TabularQGAN":
        c = ckpt.config
        est = cls(
            schema=ckpt.schema, mode=c.mode, depth=c.depth, batch_fraction=c.batch_fraction, eta_g=c.eta_g,
            eta_d=c.eta_d, epochs=c.epochs, disc_steps=c.disc_steps, hidden_width=c.hidden_width,
            shots=c.shots, init=c.init, init_noise=c.init_noise, disc_input=c.disc_input, random_state=c.seed,
        )
        est.checkpoint_, est.schema_, est.layout_ = ckpt, ckpt.schema, ckpt.layout
        est.n_features_in_ = len(ckpt.schema.features)
        return est

    @property
    def num_params_(self) -> int:
        check_is_fitted(self, "checkpoint_")
        return self.checkpoint_.circuit.num_params

    @property
    def history_(self) -> list:
        check_is_fitted(self, "checkpoint_")
        return self.checkpoint_.history

    @property
    def best_epoch_(self) -> int:
        check_is_fitted(self, "checkpoint_")
        return self.checkpoint_.best_epoch

    def sample(self, n_samples: int, random_state: int | None = None, use_best: bool = True) -> pd.DataFrame:
        check_is_fitted(self, "checkpoint_")
        seed = self.random_state if random_state is None else random_state
        return generate(self.checkpoint_, n_samples, seed, use_best)

    def score(self, X, y=None) -> float:
        """Overall similarity of ``len(X)`` generated rows to ``X``."""
        X = pd.DataFrame(X)
        return overall_score(X, self.sample(len(X)), self.schema_).overall
