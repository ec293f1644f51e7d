"""Hybrid combining, noisy observations, and dataset generation.

An observation is y = W h + n with W the N_RF x N analog combiner
(unit-modulus entries of magnitude 1/sqrt(N), random phases) and n
circularly symmetric complex Gaussian noise. Per-sample SNR is defined
against the combined signal power: sigma2 = ||W h||^2 / (N_RF * 10^(snr/10)).

Datasets stream from seeds: sample i is fully determined by base_seed + i,
so any sample can be regenerated in isolation and rerun results are
reproducible regardless of batching or thread count. Draw order inside a
sample: scenario (path count, then per path angle/mu/d), snr, noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._binio import (
    FormatError,
    read_complex_interleaved,
    read_f64_array,
    read_magic,
    read_u32,
    read_u64,
    read_u8,
    write_complex_interleaved,
    write_magic,
    write_u32,
    write_u64,
    write_u8,
)
from .channel import ArrayConfig, ScenarioPrior, exact_channel, sample_scenario
from .dictionary import Dictionary, quantize_paths
from .numerics import CMat, CVec, Rng

DATA_MAGIC = b"NFCSDATA"
DATA_VERSION = 1

_KIND_CODE = {"lista": 1, "sdl": 2}
_KIND_NAME = {1: "lista", 2: "sdl"}


class ZeroSignal(ValueError):
    """Combined signal has zero power, SNR undefined."""


@dataclass(frozen=True)
class CombinerMatrix:
    """Analog combiner. kind is one of phase, orthonormal, identity."""

    w: CMat
    kind: str = "phase"

    def __post_init__(self):
        w = np.asarray(self.w)
        if w.ndim != 2:
            raise ValueError(f"combiner must be a matrix, got shape {w.shape}")
        if self.kind == "phase":
            n = w.shape[1]
            mags = np.abs(w)
            if not np.allclose(mags, 1.0 / np.sqrt(n), rtol=0, atol=1e-12):
                raise ValueError("phase-kind combiner entries must have magnitude 1/sqrt(N)")

    @property
    def n_rf(self) -> int:
        return self.w.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.w.shape[1]


def identity_combiner(n: int) -> CombinerMatrix:
    """Full digital observation, W = I."""
    return CombinerMatrix(w=np.eye(n, dtype=np.complex128), kind="identity")


def sample_combiner(cfg: ArrayConfig, n_rf: int, rng: Rng,
                    orthonormal_rows: bool = False) -> CombinerMatrix:
    """Random-phase combiner, optionally with rows orthonormalized (QR)."""
    if not (1 <= n_rf <= cfg.n_antennas):
        raise ValueError(f"n_rf must be in [1, N], got {n_rf}")
    phases = rng.phases((n_rf, cfg.n_antennas))
    w = np.exp(1j * phases) / np.sqrt(cfg.n_antennas)
    if orthonormal_rows:
        q, _ = np.linalg.qr(w.conj().T)
        return CombinerMatrix(w=q.conj().T.astype(np.complex128), kind="orthonormal")
    return CombinerMatrix(w=w.astype(np.complex128), kind="phase")


@dataclass(frozen=True)
class Observation:
    """One combined, noisy snapshot."""

    y: CVec
    sigma2: float
    snr_db: float


def sigma_for_snr(w: CombinerMatrix, h: CVec, snr_db: float) -> float:
    """Per-entry noise variance that realizes the requested SNR."""
    power = float(np.linalg.norm(w.w @ h) ** 2)
    if power == 0.0:
        raise ZeroSignal("combined signal has zero power")
    return power / (w.n_rf * 10.0 ** (snr_db / 10.0))


def observe(w: CombinerMatrix, h: CVec, sigma2: float, rng: Rng) -> Observation:
    """y = W h + noise with per-entry complex variance sigma2."""
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    signal = w.w @ h
    noise = rng.complex_normal(sigma2, w.n_rf) if sigma2 > 0 else 0.0
    y = signal + noise
    power = float(np.linalg.norm(signal) ** 2)
    snr_db = float("inf") if sigma2 == 0 else float(
        10.0 * np.log10(power / (w.n_rf * sigma2))) if power > 0 else float("-inf")
    return Observation(y=y.astype(np.complex128), sigma2=float(sigma2), snr_db=snr_db)


class Dataset:
    """Seed-streamed supervised dataset.

    kind "lista": label is the quantized grid code alpha* (true complex
    gains at nearest grid cells). With on_grid=True (default) the
    observation is synthesized from the grid, y = W A alpha* + n, so a
    noiseless sample reconstructs exactly; with on_grid=False the
    observation comes from the true off-grid channel, y = W h* + n.

    kind "sdl": label is the true channel h* and y = W h* + n; the grid
    never enters label generation.
    """

    def __init__(self, kind: str, size: int, cfg: ArrayConfig, prior: ScenarioPrior,
                 dictionary: Dictionary, combiner: CombinerMatrix, snr_range: tuple,
                 on_grid: bool = True, base_seed: int = 0):
        if kind not in _KIND_CODE:
            raise ValueError(f"kind must be one of {sorted(_KIND_CODE)}, got {kind!r}")
        if size < 1:
            raise ValueError(f"size must be >= 1, got {size}")
        if kind == "lista" and dictionary.grid is None:
            raise ValueError("lista-kind datasets need a dictionary with grid metadata")
        lo, hi = snr_range
        if not (lo <= hi):
            raise ValueError(f"snr_range must be (lo, hi) with lo <= hi, got {snr_range}")
        self.kind = kind
        self.size = int(size)
        self.cfg = cfg
        self.prior = prior
        self.dictionary = dictionary
        self.combiner = combiner
        self.snr_range = (float(lo), float(hi))
        self.on_grid = bool(on_grid)
        self.base_seed = int(base_seed)
        self._psi = combiner.w @ dictionary.atoms if kind == "lista" else None
        self._cache = None

    @property
    def label_dim(self) -> int:
        return self.dictionary.size if self.kind == "lista" else self.cfg.n_antennas

    def sample(self, i: int) -> tuple:
        """(y, label, snr_db) for sample i, independent of call order."""
        if not (0 <= i < self.size):
            raise IndexError(f"sample index {i} out of range [0, {self.size})")
        if self._cache is not None:
            y, lab, snr = self._cache
            return y[i], lab[i], float(snr[i])
        rng = Rng(self.base_seed + i)
        pathset = sample_scenario(self.cfg, self.prior, rng)
        snr_db = float(rng.uniform(*self.snr_range))
        if self.kind == "lista":
            code = quantize_paths(self.cfg, self.dictionary.grid, pathset)
            label = code.values
            if self.on_grid:
                idx = code.support
                signal = self._psi[:, idx] @ label[idx]
            else:
                signal = self.combiner.w @ exact_channel(self.cfg, pathset)
        else:
            label = exact_channel(self.cfg, pathset)
            signal = self.combiner.w @ label
        power = float(np.linalg.norm(signal) ** 2)
        if power == 0.0:
            raise ZeroSignal("sampled scenario produced a zero observation")
        sigma2 = power / (self.combiner.n_rf * 10.0 ** (snr_db / 10.0))
        y = signal + rng.complex_normal(sigma2, self.combiner.n_rf)
        return y.astype(np.complex128), label.astype(np.complex128), snr_db

    def batch(self, indices) -> tuple:
        """Stack samples: (Y (b, N_RF), labels (b, label_dim), snr (b,))."""
        indices = np.asarray(indices, dtype=np.int64)
        y = np.empty((indices.size, self.combiner.n_rf), dtype=np.complex128)
        labels = np.empty((indices.size, self.label_dim), dtype=np.complex128)
        snr = np.empty(indices.size, dtype=np.float64)
        for row, i in enumerate(indices):
            y[row], labels[row], snr[row] = self.sample(int(i))
        return y, labels, snr

    def materialize(self, threads: int = 1) -> "Dataset":
        """Generate and cache all samples in memory.

        threads > 1 generates independent samples on a worker pool;
        results are placed by index, so the cached arrays are identical
        for any thread count.
        """
        if self._cache is not None:
            return self
        if threads <= 1:
            self._cache = self.batch(np.arange(self.size))
            return self
        from concurrent.futures import ThreadPoolExecutor

        y = np.empty((self.size, self.combiner.n_rf), dtype=np.complex128)
        labels = np.empty((self.size, self.label_dim), dtype=np.complex128)
        snr = np.empty(self.size, dtype=np.float64)
        chunks = np.array_split(np.arange(self.size), threads * 4)
        def fill(idx):
            for i in idx:
                y[i], labels[i], snr[i] = self.sample(int(i))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, [c for c in chunks if c.size]))
        self._cache = (y, labels, snr)
        return self

    def arrays(self) -> tuple:
        self.materialize()
        return self._cache


def make_dataset(kind: str, size: int, cfg: ArrayConfig, prior: ScenarioPrior,
                 dictionary: Dictionary, combiner: CombinerMatrix, snr_range: tuple,
                 on_grid: bool = True, base_seed: int = 0) -> Dataset:
    """Construct a seed-streamed Dataset (see Dataset for semantics)."""
    return Dataset(kind, size, cfg, prior, dictionary, combiner, snr_range,
                   on_grid=on_grid, base_seed=base_seed)


def save_dataset(path, ds: Dataset) -> None:
    """Write the NFCSDATA binary format (materializes the dataset).

    Layout: magic, version u32, kind u8, count u64, N u32, N_RF u32,
    G u32, then per sample: y (N_RF complex), label (G complex for kind
    lista, N complex for kind sdl), snr_db f64. All complex values are
    little-endian f64 interleaved (re, im).
    """
    y, labels, snr = ds.arrays()
    with open(path, "wb") as fh:
        write_magic(fh, DATA_MAGIC, DATA_VERSION)
        write_u8(fh, _KIND_CODE[ds.kind])
        write_u64(fh, ds.size)
        write_u32(fh, ds.cfg.n_antennas)
        write_u32(fh, ds.combiner.n_rf)
        write_u32(fh, ds.dictionary.size)
        for i in range(ds.size):
            write_complex_interleaved(fh, y[i])
            write_complex_interleaved(fh, labels[i])
            fh.write(np.float64(snr[i]).astype("<f8").tobytes())


class LoadedDataset:
    """Materialized dataset read back from NFCSDATA (no generators attached)."""

    def __init__(self, kind: str, y: np.ndarray, labels: np.ndarray,
                 snr_db: np.ndarray, n_antennas: int, n_rf: int, dict_size: int):
        self.kind = kind
        self.size = y.shape[0]
        self._y = y
        self._labels = labels
        self._snr = snr_db
        self.n_antennas = n_antennas
        self.n_rf = n_rf
        self.dict_size = dict_size

    @property
    def label_dim(self) -> int:
        return self._labels.shape[1]

    def sample(self, i: int) -> tuple:
        return self._y[i], self._labels[i], float(self._snr[i])

    def batch(self, indices) -> tuple:
        indices = np.asarray(indices, dtype=np.int64)
        return self._y[indices], self._labels[indices], self._snr[indices]

    def arrays(self) -> tuple:
        return self._y, self._labels, self._snr


def load_dataset(path) -> LoadedDataset:
    """Read the NFCSDATA binary format."""
    with open(path, "rb") as fh:
        read_magic(fh, DATA_MAGIC, DATA_VERSION)
        kind_code = read_u8(fh)
        if kind_code not in _KIND_NAME:
            raise FormatError(f"unknown dataset kind code {kind_code}")
        kind = _KIND_NAME[kind_code]
        count = read_u64(fh)
        n = read_u32(fh)
        n_rf = read_u32(fh)
        g = read_u32(fh)
        label_dim = g if kind == "lista" else n
        y = np.empty((count, n_rf), dtype=np.complex128)
        labels = np.empty((count, label_dim), dtype=np.complex128)
        snr = np.empty(count, dtype=np.float64)
        for i in range(count):
            y[i] = read_complex_interleaved(fh, (n_rf,))
            labels[i] = read_complex_interleaved(fh, (label_dim,))
            snr[i] = read_f64_array(fh, 1)[0]
        extra = fh.read(1)
    if extra:
        raise FormatError("trailing bytes after dataset payload")
    return LoadedDataset(kind, y, labels, snr, n, n_rf, g)
