"""Experiment configuration: YAML schema, presets, and object builders.

A single config file drives every CLI stage. Derived randomness is split
into documented streams off the root seed so that separate invocations
(gen-data, train, bench) agree on shared artifacts like the combiner:

    combiner draw      seed + 1_000_003
    train dataset      seed + 2_000_003
    test/eval dataset  seed + 3_000_007
    bench point i      seed + 4_000_037 + 100_000 * i
    layer sweep run s  seed + s

Unknown keys, wrong types, and out-of-range values raise ConfigError.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import yaml

from .channel import ArrayConfig, ScenarioPrior
from .dictionary import Dictionary, GridSpec, build_spatial_dictionary
from .measurement import CombinerMatrix, Dataset, make_dataset, sample_combiner
from .numerics import Rng
from .unfolded import TrainConfig

COMBINER_SEED_OFFSET = 1_000_003
TRAIN_SEED_OFFSET = 2_000_003
TEST_SEED_OFFSET = 3_000_007


class ConfigError(ValueError):
    """Configuration failed validation."""


@dataclass
class ExperimentConfig:
    """Everything a run needs, grouped the way the YAML file is."""

    n_antennas: int = 64
    carrier_freq_hz: float = 28e9
    spacing_m: Optional[float] = None
    g_angle: int = 128
    g_dist: int = 4
    n_rf: int = 16
    orthonormal_w: bool = False
    gmm_means: tuple = (-0.6, -0.45, -0.2, 0.3, 0.6)
    gmm_var: float = 0.15
    mu_range: tuple = (2.0, 100.0)
    d_range: tuple = (0.0, 100.0)
    q_range: tuple = (2, 6)
    snr_range_db: tuple = (0.0, 27.0)
    on_grid: bool = True
    n_layers: int = 6
    g_sparse: int = 128
    train_size: int = 20000
    test_size: int = 256
    epochs: int = 150
    batch_size: int = 256
    lr: float = 1e-4
    patience: int = 10
    init_scheme: str = "scaled"
    eta0: float = 1e-4
    kappa0: float = 1.0
    bench_methods: tuple = ("omp", "fista", "lista", "sdl-lista")
    bench_snr_points_db: tuple = (0.0, 9.0, 18.0, 27.0)
    bench_samples: int = 256
    omp_iters: int = 10
    classic_iters: int = 100
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        for name in ("mu_range", "d_range", "q_range", "snr_range_db"):
            value = getattr(self, name)
            if not (isinstance(value, (tuple, list)) and len(value) == 2):
                raise ConfigError(f"{name} must be a [lo, hi] pair, got {value!r}")
        checks = [
            (self.n_antennas >= 2, "array.n_antennas must be >= 2"),
            (self.carrier_freq_hz > 0, "array.carrier_freq_hz must be positive"),
            (self.spacing_m is None or self.spacing_m > 0,
             "array.spacing_m must be positive when given"),
            (self.g_angle >= 1 and self.g_dist >= 1,
             "grid.g_angle and grid.g_dist must be >= 1"),
            (1 <= self.n_rf <= self.n_antennas,
             "measurement.n_rf must be in [1, n_antennas]"),
            (self.gmm_var > 0, "prior.gmm_var must be positive"),
            (len(self.gmm_means) >= 1, "prior.gmm_means must be nonempty"),
            (0 < self.mu_range[0] < self.mu_range[1],
             "prior.mu_range must be increasing and positive"),
            (0 <= self.d_range[0] <= self.d_range[1],
             "prior.d_range must be nondecreasing and nonnegative"),
            (1 <= self.q_range[0] <= self.q_range[1],
             "prior.q_range must be increasing with q >= 1"),
            (self.snr_range_db[0] <= self.snr_range_db[1],
             "measurement.snr_range_db must be (lo, hi) with lo <= hi"),
            (self.n_layers >= 1, "model.n_layers must be >= 1"),
            (self.g_sparse >= 1, "model.g_sparse must be >= 1"),
            (self.train_size >= 1 and self.test_size >= 1,
             "train.train_size and train.test_size must be >= 1"),
            (self.epochs >= 0, "train.epochs must be >= 0 (0 = init only)"),
            (self.batch_size >= 1, "train.batch_size must be >= 1"),
            (self.lr > 0, "train.lr must be positive"),
            (self.patience >= 1, "train.patience must be >= 1"),
            (self.init_scheme in ("scaled", "literal", "structured"),
             "train.init_scheme must be scaled, literal, or structured"),
            (self.eta0 >= 0, "train.eta0 must be >= 0"),
            (self.omp_iters >= 1, "bench.omp_iters must be >= 1"),
            (self.classic_iters >= 1, "bench.classic_iters must be >= 1"),
            (self.bench_samples >= 1, "bench.n_samples must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        for m in self.bench_methods:
            if m not in ("omp", "ista", "fista", "lista", "sdl-lista"):
                raise ConfigError(f"bench.methods contains unknown method {m!r}")
        return self

    # builders ---------------------------------------------------------

    def array(self) -> ArrayConfig:
        return ArrayConfig(n_antennas=self.n_antennas,
                           carrier_freq=self.carrier_freq_hz,
                           spacing=self.spacing_m if self.spacing_m else 0.0)

    def grid(self) -> GridSpec:
        return GridSpec(g_angle=self.g_angle, g_dist=self.g_dist)

    def prior(self) -> ScenarioPrior:
        return ScenarioPrior(gmm_means=tuple(self.gmm_means), gmm_var=self.gmm_var,
                             mu_range=tuple(self.mu_range),
                             d_range=tuple(self.d_range),
                             q_range=tuple(self.q_range))

    def dictionary(self) -> Dictionary:
        return build_spatial_dictionary(self.array(), self.grid())

    def combiner(self) -> CombinerMatrix:
        return sample_combiner(self.array(), self.n_rf,
                               Rng(self.seed + COMBINER_SEED_OFFSET),
                               orthonormal_rows=self.orthonormal_w)

    def train_config(self, seed: Optional[int] = None) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           lr=self.lr, patience=self.patience,
                           seed=self.seed if seed is None else seed,
                           init_scheme=self.init_scheme, eta0=self.eta0,
                           kappa0=self.kappa0)

    def dataset(self, kind: str, split: str, dictionary: Dictionary,
                combiner: CombinerMatrix, size: Optional[int] = None) -> Dataset:
        if split == "train":
            base = self.seed + TRAIN_SEED_OFFSET
            n = self.train_size
        elif split == "test":
            base = self.seed + TEST_SEED_OFFSET
            n = self.test_size
        else:
            raise ConfigError(f"split must be train or test, got {split!r}")
        return make_dataset(kind, size if size else n, self.array(), self.prior(),
                            dictionary, combiner, tuple(self.snr_range_db),
                            on_grid=self.on_grid, base_seed=base)


_GROUPS = {
    "array": ("n_antennas", "carrier_freq_hz", "spacing_m"),
    "grid": ("g_angle", "g_dist"),
    "measurement": ("n_rf", "orthonormal_w", "snr_range_db", "on_grid"),
    "prior": ("gmm_means", "gmm_var", "mu_range", "d_range", "q_range"),
    "model": ("n_layers", "g_sparse"),
    "train": ("train_size", "test_size", "epochs", "batch_size", "lr",
              "patience", "init_scheme", "eta0", "kappa0"),
    "bench": ("bench_methods", "bench_snr_points_db", "bench_samples",
              "omp_iters", "classic_iters"),
}

_BENCH_RENAME = {"bench_methods": "methods", "bench_snr_points_db": "snr_points_db",
                 "bench_samples": "n_samples"}


def config_to_dict(cfg: ExperimentConfig) -> dict:
    flat = asdict(cfg)
    out: dict = {}
    for group, keys in _GROUPS.items():
        sub = {}
        for key in keys:
            name = _BENCH_RENAME.get(key, key)
            value = flat[key]
            sub[name] = list(value) if isinstance(value, tuple) else value
        out[group] = sub
    out["seed"] = flat["seed"]
    return out


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    rename_back = {v: k for k, v in _BENCH_RENAME.items()}
    kwargs: dict = {}
    seen_groups = set()
    for group, sub in data.items():
        if group == "seed":
            kwargs["seed"] = sub
            continue
        if group not in _GROUPS:
            raise ConfigError(f"unknown config section {group!r}")
        if not isinstance(sub, dict):
            raise ConfigError(f"section {group!r} must be a mapping")
        seen_groups.add(group)
        allowed = {_BENCH_RENAME.get(k, k) for k in _GROUPS[group]}
        for key, value in sub.items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section {group!r}")
            field_name = rename_back.get(key, key)
            if isinstance(value, list):
                value = tuple(value)
            kwargs[field_name] = value
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def save_config(path, cfg: ExperimentConfig) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse YAML: {exc}") from exc
    return config_from_dict(data)


def preset(name: str) -> ExperimentConfig:
    """Named baseline configs: paper scale and desk scale."""
    if name == "paper":
        return ExperimentConfig(
            n_antennas=128, carrier_freq_hz=28e9, g_angle=256, g_dist=8,
            n_rf=32, n_layers=10, g_sparse=256, train_size=256000,
            test_size=256, epochs=200, batch_size=256, lr=1e-4,
            init_scheme="structured",
        ).validate()
    if name == "desk":
        return ExperimentConfig(
            n_antennas=64, carrier_freq_hz=28e9, g_angle=128, g_dist=4,
            n_rf=16, n_layers=6, g_sparse=128, train_size=20000,
            test_size=256, epochs=150, batch_size=256, lr=1e-3,
            init_scheme="structured",
        ).validate()
    raise ConfigError(f"unknown preset {name!r} (expected paper or desk)")


CONFIG_TEMPLATE = """\
# Experiment configuration ({preset} preset).
# Every stage (gen-data, train, bench, sweep-layers, coherence-report)
# reads this one file; the root seed determines all derived streams.

array:
  n_antennas: {n_antennas}          # ULA element count N
  carrier_freq_hz: {carrier_freq_hz}  # carrier in Hz
  spacing_m: null            # element spacing; null = half wavelength

grid:
  g_angle: {g_angle}              # grid points in sin(theta) over [-1, 1]
  g_dist: {g_dist}                 # grid points in 1/mu over [0, 0.5]; 0 = plane wave

measurement:
  n_rf: {n_rf}                  # RF chains (combiner rows)
  orthonormal_w: false       # QR-orthonormalize combiner rows (ablation)
  snr_range_db: [{snr_lo}, {snr_hi}]     # per-sample SNR drawn uniformly
  on_grid: true              # lista-kind observations synthesized from the grid

prior:
  gmm_means: [-0.6, -0.45, -0.2, 0.3, 0.6]  # sin(theta) mixture means
  gmm_var: 0.15              # mixture component variance
  mu_range: [2.0, 100.0]     # scatterer distance, meters
  d_range: [0.0, 100.0]      # first-hop distance, meters
  q_range: [2, 6]            # path count, uniform inclusive

model:
  n_layers: {n_layers}               # unfolded depth L
  g_sparse: {g_sparse}             # learned sparsifier rows G'

train:
  train_size: {train_size}
  test_size: {test_size}
  epochs: {epochs}
  batch_size: {batch_size}
  lr: {lr}
  patience: {patience}               # epochs without eval improvement before stopping
  init_scheme: {init_scheme}    # structured = classic-iteration weights;
                             # scaled = U(0,1)/sqrt(fan_in); literal = U(0,1)
  eta0: 0.0001               # initial shrinkage thresholds
  kappa0: 1.0                # initial gradient steps (sdl)

bench:
  methods: [omp, fista, lista, sdl-lista]
  snr_points_db: [0.0, 9.0, 18.0, 27.0]
  n_samples: {bench_samples}
  omp_iters: {omp_iters}
  classic_iters: {classic_iters}          # ISTA/FISTA iteration budget

seed: {seed}
"""


def render_config_template(name: str) -> str:
    """Annotated YAML text for init-config."""
    cfg = preset(name)
    return CONFIG_TEMPLATE.format(
        preset=name, n_antennas=cfg.n_antennas, carrier_freq_hz=cfg.carrier_freq_hz,
        g_angle=cfg.g_angle, g_dist=cfg.g_dist, n_rf=cfg.n_rf,
        snr_lo=cfg.snr_range_db[0], snr_hi=cfg.snr_range_db[1],
        n_layers=cfg.n_layers, g_sparse=cfg.g_sparse, train_size=cfg.train_size,
        test_size=cfg.test_size, epochs=cfg.epochs, batch_size=cfg.batch_size,
        lr=cfg.lr, patience=cfg.patience, init_scheme=cfg.init_scheme,
        bench_samples=cfg.bench_samples, omp_iters=cfg.omp_iters,
        classic_iters=cfg.classic_iters, seed=cfg.seed)
