"""NMSE metrics, benchmark harness, and result/history CSV emitters.

NMSE is vector-form per sample, ||h_hat - h*||_2^2 / ||h*||_2^2; reported
figures are 10*log10 of the mean ratio over samples, floored at -120 dB.
All benchmark methods at a given SNR point see the same test observations
(one shared seed-streamed dataset per point), so method columns are
directly comparable and reruns are bitwise reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ArrayConfig, ScenarioPrior
from .dictionary import Dictionary
from .measurement import CombinerMatrix, Dataset, make_dataset
from .numerics import Rng
from .solvers import SensingOperator, SolverConfig, fista, ista, omp
from .unfolded import (
    ListaParams,
    MissingCheckpoint,
    SdlListaParams,
    TrainConfig,
    lista_predict,
    sdl_predict,
    train_model,
)

DB_FLOOR = -120.0

CLASSIC_METHODS = ("omp", "ista", "fista")
LEARNED_METHODS = ("lista", "sdl-lista")


def nmse(h_hat: np.ndarray, h_star: np.ndarray) -> float:
    """Per-sample squared-error ratio (not in dB)."""
    h_hat = np.asarray(h_hat).ravel()
    h_star = np.asarray(h_star).ravel()
    ref = float(np.linalg.norm(h_star) ** 2)
    if ref == 0.0:
        raise ValueError("reference channel has zero norm")
    return float(np.linalg.norm(h_hat - h_star) ** 2) / ref


def to_db(ratio: float) -> float:
    """10*log10 with the reporting floor."""
    if ratio <= 10.0 ** (DB_FLOOR / 10.0):
        return DB_FLOOR
    return float(10.0 * np.log10(ratio))


def nmse_db(h_hat: np.ndarray, h_star: np.ndarray) -> float:
    return to_db(nmse(h_hat, h_star))


def mean_nmse_db(pred_rows: np.ndarray, target_rows: np.ndarray) -> float:
    """dB of the mean per-sample ratio over a batch of row vectors."""
    err = np.sum(np.abs(pred_rows - target_rows) ** 2, axis=1)
    ref = np.sum(np.abs(target_rows) ** 2, axis=1)
    if np.any(ref == 0.0):
        raise ValueError("a reference channel has zero norm")
    return to_db(float(np.mean(err / ref)))


@dataclass(frozen=True)
class BenchmarkSpec:
    """What to run: methods x SNR points on shared test sets."""

    methods: tuple = ("omp", "fista", "lista", "sdl-lista")
    snr_points_db: tuple = (0.0, 9.0, 18.0, 27.0)
    n_samples: int = 256
    seed: int = 0
    omp_iters: int = 10
    iters: int = 100  # ISTA/FISTA sweep budget
    xi: Optional[float] = None
    omp_residual_tol_scale: Optional[float] = None  # tol = scale*sigma*sqrt(2 N_RF)

    def __post_init__(self):
        known = CLASSIC_METHODS + LEARNED_METHODS
        for m in self.methods:
            if m not in known:
                raise ValueError(f"unknown method {m!r}; known: {known}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass
class ResultTable:
    """Benchmark rows (method, snr_db, nmse_db, runtime_ms, n_samples)."""

    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, method: str, snr_db: float, nmse_val: float, runtime_ms: float,
            n_samples: int) -> None:
        self.rows.append((method, float(snr_db), float(nmse_val),
                          float(runtime_ms), int(n_samples)))

    def lookup(self, method: str, snr_db: float) -> float:
        for m, s, v, _, _ in self.rows:
            if m == method and s == snr_db:
                return v
        raise KeyError(f"no row for ({method}, {snr_db})")

    def to_csv(self, path, timing: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            for key in sorted(self.meta):
                fh.write(f"# {key},{self.meta[key]}\n")
            fh.write("method,snr_db,nmse_db,runtime_ms,n_samples\n")
            for method, snr, val, ms, n in self.rows:
                ms_out = ms if timing else 0.0
                fh.write(f"{method},{snr:.3f},{val:.6f},{ms_out:.3f},{n}\n")


def bench_test_seed(base_seed: int, snr_index: int) -> int:
    """Per-SNR-point dataset seed; points are spaced far beyond sample counts."""
    return base_seed + 4_000_037 + 100_000 * snr_index


def _predict_classic(method: str, op: SensingOperator, y_rows: np.ndarray,
                     sigma2s: np.ndarray, spec: BenchmarkSpec) -> tuple:
    """Per-sample solve loop. Returns (pred channel rows, mean ms per sample)."""
    atoms = op.dictionary.atoms
    preds = np.empty((y_rows.shape[0], atoms.shape[0]), dtype=np.complex128)
    start = time.perf_counter()
    for i in range(y_rows.shape[0]):
        if method == "omp":
            tol = None
            if spec.omp_residual_tol_scale is not None:
                tol = spec.omp_residual_tol_scale * float(
                    np.sqrt(sigma2s[i] * 2.0 * op.shape[0]))
            cfg = SolverConfig(iters=spec.omp_iters, residual_tol=tol)
            alpha, _ = omp(op, y_rows[i], cfg)
        elif method == "ista":
            alpha, _ = ista(op, y_rows[i], SolverConfig(iters=spec.iters, xi=spec.xi))
        else:
            alpha, _ = fista(op, y_rows[i], SolverConfig(iters=spec.iters, xi=spec.xi))
        preds[i] = atoms @ alpha
    elapsed = time.perf_counter() - start
    return preds, 1e3 * elapsed / y_rows.shape[0]


def _predict_learned(method: str, params, dictionary: Dictionary,
                     combiner: CombinerMatrix, y_rows: np.ndarray) -> tuple:
    start = time.perf_counter()
    if method == "lista":
        if not isinstance(params, ListaParams):
            raise TypeError("lista benchmark needs ListaParams")
        alpha = lista_predict(params, y_rows)
        preds = alpha @ dictionary.atoms.T
    else:
        if not isinstance(params, SdlListaParams):
            raise TypeError("sdl-lista benchmark needs SdlListaParams")
        preds = sdl_predict(params, combiner.w, y_rows)
    elapsed = time.perf_counter() - start
    return preds, 1e3 * elapsed / y_rows.shape[0]


def run_benchmark(cfg: ArrayConfig, prior: ScenarioPrior, dictionary: Dictionary,
                  combiner: CombinerMatrix, spec: BenchmarkSpec,
                  checkpoints: Optional[dict] = None) -> ResultTable:
    """Run every method over every SNR point on shared test sets.

    checkpoints maps learned method names to loaded parameter objects;
    requesting a learned method without one raises MissingCheckpoint.
    """
    checkpoints = checkpoints or {}
    for m in spec.methods:
        if m in LEARNED_METHODS and m not in checkpoints:
            raise MissingCheckpoint(f"method {m!r} has no trained checkpoint")
    op = SensingOperator(combiner, dictionary)
    table = ResultTable(meta={"seed": spec.seed, "n_samples": spec.n_samples,
                              "n_antennas": cfg.n_antennas, "n_rf": combiner.n_rf,
                              "dict_size": dictionary.size})
    for snr_idx, snr in enumerate(spec.snr_points_db):
        ds = make_dataset("sdl", spec.n_samples, cfg, prior, dictionary, combiner,
                          snr_range=(snr, snr),
                          base_seed=bench_test_seed(spec.seed, snr_idx))
        y_rows, h_rows, _ = ds.arrays()
        sigma2s = np.array([
            float(np.linalg.norm(combiner.w @ h_rows[i]) ** 2)
            / (combiner.n_rf * 10.0 ** (snr / 10.0))
            for i in range(spec.n_samples)])
        for method in spec.methods:
            if method in CLASSIC_METHODS:
                preds, ms = _predict_classic(method, op, y_rows, sigma2s, spec)
            else:
                preds, ms = _predict_learned(method, checkpoints[method],
                                             dictionary, combiner, y_rows)
            table.add(method, snr, mean_nmse_db(preds, h_rows), ms, spec.n_samples)
    return table


def convergence_sweep(layer_list, seeds_per_depth: int, train_data, eval_data,
                      dictionary: Dictionary, combiner: CombinerMatrix,
                      base_cfg: TrainConfig, g_sparse: int,
                      progress=None) -> list:
    """Retrain the weight-tied model at each depth, several seeds per depth.

    Returns (n_layers, seed, history) blocks in run order, the layout
    write_convergence_csv expects. Seeds are base_cfg.seed + s so depth runs
    share the data while their weight draws and batch orders differ.
    """
    blocks = []
    for n_layers in layer_list:
        for s in range(seeds_per_depth):
            run_cfg = TrainConfig(
                epochs=base_cfg.epochs, batch_size=base_cfg.batch_size,
                lr=base_cfg.lr, patience=base_cfg.patience,
                seed=base_cfg.seed + s, init_scheme=base_cfg.init_scheme,
                eta0=base_cfg.eta0, kappa0=base_cfg.kappa0)
            result = train_model("sdl", n_layers, train_data, eval_data,
                                 dictionary, combiner, run_cfg, g_sparse=g_sparse)
            blocks.append((n_layers, run_cfg.seed, result.history))
            if progress is not None:
                progress(n_layers, run_cfg.seed, result)
    return blocks


def write_history_csv(path, history, timing: bool = True) -> None:
    """History rows (epoch, train_loss, test_nmse_db, wall_seconds)."""
    with open(path, "w", newline="") as fh:
        fh.write("epoch,train_loss,test_nmse_db,wall_seconds\n")
        for epoch, loss, nmse_val, wall in history:
            wall_out = wall if timing else 0.0
            fh.write(f"{epoch},{loss:.12e},{nmse_val:.6f},{wall_out:.3f}\n")


def write_convergence_csv(path, blocks) -> None:
    """Layer-sweep histories. blocks: list of (layers, seed, history rows)."""
    with open(path, "w", newline="") as fh:
        fh.write("layers,epoch,train_loss,test_nmse_db\n")
        for layers, seed, history in blocks:
            fh.write(f"# seed,{seed}\n")
            for epoch, loss, nmse_val, _ in history:
                fh.write(f"{layers},{epoch},{loss:.12e},{nmse_val:.6f}\n")
