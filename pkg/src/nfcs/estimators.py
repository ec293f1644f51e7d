"""Estimator-style API over the solvers (sklearn conventions).

Observations are row-major: X is (n_samples, N_RF) complex, predictions
are (n_samples, N) channel rows. Classical estimators are solver wrappers
whose fit() only prepares the sensing operator; learned estimators train
on (X, y) label arrays. score() returns negative mean NMSE (higher is
better) so the estimators compose with sklearn model selection tools.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .dictionary import Dictionary
from .measurement import CombinerMatrix, LoadedDataset
from .numerics import DimensionMismatch
from .solvers import SensingOperator, SolverConfig, fista, ista, omp
from .unfolded import (
    TrainConfig,
    init_lista_params,
    init_sdl_params,
    lista_predict,
    load_checkpoint,
    sdl_predict,
    train,
)
from .evaluation import mean_nmse_db
from .numerics import Rng


def check_observations(x, n_rf: int) -> np.ndarray:
    """Validate an (n_samples, N_RF) complex observation matrix."""
    arr = np.asarray(x)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatch(f"observations must be 2-d, got shape {arr.shape}")
    if arr.shape[1] != n_rf:
        raise DimensionMismatch(
            f"observations have width {arr.shape[1]}, combiner expects {n_rf}")
    return np.ascontiguousarray(arr, dtype=np.complex128)


def check_labels(y, n_samples: int, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 2 or arr.shape != (n_samples, dim):
        raise DimensionMismatch(
            f"{name} must have shape ({n_samples}, {dim}), got {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.complex128)


class _ChannelEstimator(BaseEstimator):
    """Shared scoring and validation."""

    def score(self, X, y) -> float:
        """Negative mean channel NMSE in dB (higher is better)."""
        pred = self.predict(X)
        return -mean_nmse_db(pred, np.asarray(y, dtype=np.complex128))


class _ClassicEstimator(_ChannelEstimator):
    def fit(self, X=None, y=None):
        """Prepare the sensing operator; no learning happens here."""
        self.op_ = SensingOperator(self.combiner, self.dictionary)
        return self

    def _check_fitted(self):
        if not hasattr(self, "op_"):
            raise RuntimeError("estimator is not fitted; call fit() first")

    def predict_code(self, X) -> np.ndarray:
        """Grid coefficients, one row per observation."""
        self._check_fitted()
        X = check_observations(X, self.combiner.n_rf)
        out = np.empty((X.shape[0], self.dictionary.size), dtype=np.complex128)
        for i in range(X.shape[0]):
            out[i] = self._solve(X[i])
        return out

    def predict(self, X) -> np.ndarray:
        """Channel estimates, one row per observation."""
        return self.predict_code(X) @ self.dictionary.atoms.T


class OmpChannelEstimator(_ClassicEstimator):
    """Greedy recovery with least-squares refit."""

    def __init__(self, dictionary: Dictionary, combiner: CombinerMatrix,
                 iters: int = 10, residual_tol: Optional[float] = None,
                 k: Optional[int] = None):
        self.dictionary = dictionary
        self.combiner = combiner
        self.iters = iters
        self.residual_tol = residual_tol
        self.k = k

    def _solve(self, y):
        cfg = SolverConfig(iters=self.iters, residual_tol=self.residual_tol, k=self.k)
        alpha, _ = omp(self.op_, y, cfg)
        return alpha


class IstaChannelEstimator(_ClassicEstimator):
    """Proximal gradient descent on the l1-relaxed problem."""

    def __init__(self, dictionary: Dictionary, combiner: CombinerMatrix,
                 iters: int = 100, xi: Optional[float] = None,
                 eta: Optional[float] = None):
        self.dictionary = dictionary
        self.combiner = combiner
        self.iters = iters
        self.xi = xi
        self.eta = eta

    def _solve(self, y):
        alpha, _ = ista(self.op_, y, SolverConfig(iters=self.iters, xi=self.xi,
                                                  eta=self.eta))
        return alpha


class FistaChannelEstimator(IstaChannelEstimator):
    """Momentum-accelerated variant."""

    def _solve(self, y):
        alpha, _ = fista(self.op_, y, SolverConfig(iters=self.iters, xi=self.xi,
                                                   eta=self.eta))
        return alpha


def _as_eval_dataset(eval_set, n_rf: int, n_antennas: int, dict_size: int):
    y_eval, h_eval = eval_set
    y_eval = check_observations(y_eval, n_rf)
    h_eval = check_labels(h_eval, y_eval.shape[0], n_antennas, "eval channels")
    return LoadedDataset("sdl", y_eval, h_eval, np.zeros(y_eval.shape[0]),
                         n_antennas, n_rf, dict_size)


class ListaChannelEstimator(_ChannelEstimator):
    """Unfolded ISTA with per-layer learned weights.

    fit(X, y, eval_set=(Y_eval, H_eval)) trains on grid-code labels y and
    tracks channel NMSE on the eval pair; the eval set is required because
    grid codes alone cannot score channel error.
    """

    def __init__(self, dictionary: Dictionary, combiner: CombinerMatrix,
                 n_layers: int = 10, epochs: int = 150, batch_size: int = 256,
                 lr: float = 1e-4, patience: int = 10, seed: int = 0,
                 init_scheme: str = "scaled", eta0: float = 1e-4):
        self.dictionary = dictionary
        self.combiner = combiner
        self.n_layers = n_layers
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.patience = patience
        self.seed = seed
        self.init_scheme = init_scheme
        self.eta0 = eta0

    def _train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           lr=self.lr, patience=self.patience, seed=self.seed,
                           init_scheme=self.init_scheme, eta0=self.eta0)

    def fit(self, X, y, eval_set=None):
        if eval_set is None:
            raise ValueError("fit needs eval_set=(Y_eval, H_eval) channel pairs")
        X = check_observations(X, self.combiner.n_rf)
        y = check_labels(y, X.shape[0], self.dictionary.size, "grid codes")
        train_ds = LoadedDataset("lista", X, y, np.zeros(X.shape[0]),
                                 self.combiner.n_antennas, self.combiner.n_rf,
                                 self.dictionary.size)
        eval_ds = _as_eval_dataset(eval_set, self.combiner.n_rf,
                                   self.combiner.n_antennas, self.dictionary.size)
        cfg = self._train_config()
        op = (SensingOperator(self.combiner, self.dictionary)
              if cfg.init_scheme == "structured" else None)
        params = init_lista_params(self.n_layers, self.dictionary.size,
                                   self.combiner.n_rf, Rng(cfg.seed),
                                   cfg.init_scheme, cfg.eta0, op=op)
        result = train("lista", params, train_ds, eval_ds, self.dictionary,
                       self.combiner, cfg)
        self.params_ = result.params
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        return self

    @classmethod
    def from_checkpoint(cls, path, dictionary: Dictionary, combiner: CombinerMatrix):
        params, _ = load_checkpoint(path)
        est = cls(dictionary, combiner, n_layers=params.n_layers)
        est.params_ = params
        est.history_ = []
        return est

    def predict_code(self, X) -> np.ndarray:
        X = check_observations(X, self.combiner.n_rf)
        return lista_predict(self.params_, X)

    def predict(self, X) -> np.ndarray:
        return self.predict_code(X) @ self.dictionary.atoms.T


class SdlListaChannelEstimator(_ChannelEstimator):
    """Shared-operator unfolded network with a learned sparsifying pair.

    fit(X, y) trains on channel labels directly; eval_set defaults to the
    training pair when not given.
    """

    def __init__(self, combiner: CombinerMatrix, n_layers: int = 10,
                 g_sparse: int = 256, epochs: int = 150, batch_size: int = 256,
                 lr: float = 1e-4, patience: int = 10, seed: int = 0,
                 init_scheme: str = "scaled", eta0: float = 1e-4,
                 kappa0: float = 1.0):
        self.combiner = combiner
        self.n_layers = n_layers
        self.g_sparse = g_sparse
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.patience = patience
        self.seed = seed
        self.init_scheme = init_scheme
        self.eta0 = eta0
        self.kappa0 = kappa0

    def fit(self, X, y, eval_set=None):
        X = check_observations(X, self.combiner.n_rf)
        y = check_labels(y, X.shape[0], self.combiner.n_antennas, "channels")
        train_ds = LoadedDataset("sdl", X, y, np.zeros(X.shape[0]),
                                 self.combiner.n_antennas, self.combiner.n_rf,
                                 self.g_sparse)
        if eval_set is None:
            eval_set = (X, y)
        eval_ds = _as_eval_dataset(eval_set, self.combiner.n_rf,
                                   self.combiner.n_antennas, self.g_sparse)
        cfg = TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                          lr=self.lr, patience=self.patience, seed=self.seed,
                          init_scheme=self.init_scheme, eta0=self.eta0,
                          kappa0=self.kappa0)
        params = init_sdl_params(self.n_layers, self.combiner.n_antennas,
                                 self.combiner.n_rf, self.g_sparse, Rng(cfg.seed),
                                 cfg.init_scheme, cfg.eta0, cfg.kappa0,
                                 combiner=self.combiner)
        result = train("sdl", params, train_ds, eval_ds, None, self.combiner, cfg)
        self.params_ = result.params
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        return self

    @classmethod
    def from_checkpoint(cls, path, combiner: CombinerMatrix):
        params, _ = load_checkpoint(path)
        est = cls(combiner, n_layers=params.n_layers, g_sparse=params.dims[2])
        est.params_ = params
        est.history_ = []
        return est

    def predict(self, X) -> np.ndarray:
        X = check_observations(X, self.combiner.n_rf)
        return sdl_predict(self.params_, self.combiner.w, X)
