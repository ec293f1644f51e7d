"""Polar-grid dictionary for sparse recovery of near-field channels.

The grid lives in (sin(theta), 1/mu) space: angles are endpoint-inclusive
uniform in sin(theta) over angle_domain, inverse distances are
endpoint-inclusive uniform over invdist_domain, with 1/mu = 0 denoting the
plane-wave (far-field) line. Columns are ordered distance-major: column
g = j * g_angle + i holds the atom for (invdist_j, angle_i).

Note the endpoint-inclusive angle grid over [-1, 1] at half-wavelength
spacing contains an aliased duplicate: sin(theta) = -1 and +1 generate
identical atoms, so the global mutual coherence of the default grid is
exactly 1.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._binio import (
    FormatError,
    read_complex_interleaved,
    read_f64_array,
    read_magic,
    read_u32,
    write_complex_interleaved,
    write_f64_array,
    write_magic,
    write_u32,
)
from .channel import ArrayConfig, PathSet, fresnel_atom
from .numerics import CMat, CVec, Rng

DICT_MAGIC = b"NFCSDICT"
DICT_VERSION = 1


class InvalidAngle(ValueError):
    """Angle outside the physical domain."""


class ZeroColumn(ValueError):
    """Matrix has a zero column, coherence undefined."""


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution and domains.

    g_angle points span angle_domain in sin(theta); g_dist points span
    invdist_domain in 1/mu. Total dictionary size is g_angle * g_dist.
    """

    g_angle: int = 256
    g_dist: int = 8
    angle_domain: tuple = (-1.0, 1.0)
    invdist_domain: tuple = (0.0, 0.5)

    def __post_init__(self):
        if self.g_angle < 1 or self.g_dist < 1:
            raise ValueError("grid needs at least one point per axis")
        lo, hi = self.angle_domain
        if not (-1.0 <= lo <= hi <= 1.0):
            raise ValueError(f"angle_domain must lie in [-1, 1], got {self.angle_domain}")
        ilo, ihi = self.invdist_domain
        if not (0.0 <= ilo <= ihi):
            raise ValueError(f"invdist_domain must be nonnegative increasing, got {self.invdist_domain}")

    @property
    def total(self) -> int:
        return self.g_angle * self.g_dist

    def angles(self) -> np.ndarray:
        lo, hi = self.angle_domain
        return np.linspace(lo, hi, self.g_angle)

    def invdists(self) -> np.ndarray:
        lo, hi = self.invdist_domain
        return np.linspace(lo, hi, self.g_dist)

    def column(self, i_angle: int, j_dist: int) -> int:
        return j_dist * self.g_angle + i_angle


def steering_vector(cfg: ArrayConfig, mu: float, theta: float) -> CVec:
    """Dictionary atom for scatterer distance mu (may be +inf) and angle theta."""
    if not (np.isfinite(theta) and abs(np.sin(theta)) <= 1.0):
        raise InvalidAngle(f"theta must be a finite angle, got {theta}")
    if not (mu > 0):
        raise ValueError(f"mu must be positive or +inf, got {mu}")
    return fresnel_atom(cfg, mu, theta)


@dataclass(frozen=True)
class Dictionary:
    """Atoms plus the grid coordinates each column was built from."""

    atoms: CMat
    grid_mu: np.ndarray
    grid_theta: np.ndarray
    grid: Optional[GridSpec] = None

    @property
    def n_antennas(self) -> int:
        return self.atoms.shape[0]

    @property
    def size(self) -> int:
        return self.atoms.shape[1]


def build_spatial_dictionary(cfg: ArrayConfig, grid: GridSpec) -> Dictionary:
    """Build all g_angle * g_dist atoms, distance-major column order."""
    x = cfg.element_positions()
    phi = grid.angles()
    invmu = grid.invdists()
    # phase[n, j, i] = -k * (x_n^2 * invmu_j / 2 - x_n * phi_i)
    curv = np.multiply.outer(x * x / 2.0, invmu)
    tilt = np.multiply.outer(x, phi)
    phase = -cfg.wavenumber * (curv[:, :, None] - tilt[:, None, :])
    atoms = np.exp(1j * phase).reshape(cfg.n_antennas, grid.total)
    with np.errstate(divide="ignore"):
        mu_axis = np.where(invmu > 0, 1.0 / np.where(invmu > 0, invmu, 1.0), np.inf)
    grid_mu = np.repeat(mu_axis, grid.g_angle)
    grid_theta = np.tile(np.arcsin(phi), grid.g_dist)
    return Dictionary(atoms=atoms.astype(np.complex128), grid_mu=grid_mu,
                      grid_theta=grid_theta, grid=grid)


@dataclass(frozen=True)
class SparseCode:
    """Dense coefficient vector over the grid with its support."""

    values: CVec
    grid: GridSpec

    @property
    def support(self) -> np.ndarray:
        return np.nonzero(self.values)[0]


def _nearest_index(value: float, lo: float, hi: float, count: int) -> int:
    if count == 1:
        return 0
    step = (hi - lo) / (count - 1)
    idx = int(np.rint((value - lo) / step))
    return min(max(idx, 0), count - 1)


def quantize_paths(cfg: ArrayConfig, grid: GridSpec, pathset: PathSet) -> SparseCode:
    """Map each path to its nearest grid point, keeping the true complex gain.

    Nearest is per-axis in (sin(theta), 1/mu); colliding paths add their
    gains in the shared cell.
    """
    values = np.zeros(grid.total, dtype=np.complex128)
    alo, ahi = grid.angle_domain
    ilo, ihi = grid.invdist_domain
    for p, alpha in zip(pathset.paths, pathset.alphas):
        i = _nearest_index(float(np.sin(p.theta)), alo, ahi, grid.g_angle)
        j = _nearest_index(1.0 / p.mu, ilo, ihi, grid.g_dist)
        values[grid.column(i, j)] += alpha
    return SparseCode(values=values, grid=grid)


def mutual_coherence(m: CMat) -> tuple:
    """Largest normalized off-diagonal Gram magnitude and its column pair.

    Returns (nu, (t, v)) with t < v; ties break to the lowest (t, v).
    Raises ZeroColumn if any column has zero norm.
    """
    m = np.asarray(m, dtype=np.complex128)
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0.0):
        raise ZeroColumn("matrix has a zero column")
    b = m / norms
    gram = np.abs(b.conj().T @ b)
    np.fill_diagonal(gram, 0.0)
    flat = int(np.argmax(gram))
    t, v = divmod(flat, gram.shape[1])
    if t > v:
        t, v = v, t
    return float(gram[t, v]), (t, v)


@dataclass(frozen=True)
class CoherenceReport:
    """Adjacency audit of the sensing matrix W @ A."""

    rows: tuple  # (pair_type, g1, g2, coherence)
    worst_adjacent: tuple  # (pair_type, g1, g2, coherence)
    global_nu: float
    global_pair: tuple
    global_exhaustive: bool
    thresholds: dict  # q -> 1/(2q - 1)
    violations: dict  # q -> True when global_nu >= threshold
    wall_seconds: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# worst_adjacent,{self.worst_adjacent[0]},"
                     f"{self.worst_adjacent[1]},{self.worst_adjacent[2]},"
                     f"{self.worst_adjacent[3]:.12f}\n")
            scope = "exhaustive" if self.global_exhaustive else "sampled"
            fh.write(f"# global_nu,{self.global_nu:.12f},{self.global_pair[0]},"
                     f"{self.global_pair[1]},{scope}\n")
            for q in sorted(self.thresholds):
                fh.write(f"# lemma1_threshold,Q={q},{self.thresholds[q]:.12f},"
                         f"violated={'yes' if self.violations[q] else 'no'}\n")
            writer = csv.writer(fh)
            writer.writerow(["pair_type", "g1", "g2", "coherence"])
            for row in self.rows:
                writer.writerow([row[0], row[1], row[2], f"{row[3]:.12f}"])


def _adjacent_pairs(grid: GridSpec):
    """Yield (pair_type, g1, g2) for one-step neighbors on the grid."""
    ga, gd = grid.g_angle, grid.g_dist
    for j in range(gd):
        for i in range(ga):
            g1 = grid.column(i, j)
            if i + 1 < ga:
                yield "angle", g1, grid.column(i + 1, j)
            if j + 1 < gd:
                yield "dist", g1, grid.column(i, j + 1)
            if i + 1 < ga and j + 1 < gd:
                yield "diag", g1, grid.column(i + 1, j + 1)
            if i - 1 >= 0 and j + 1 < gd:
                yield "antidiag", g1, grid.column(i - 1, j + 1)


def coherence_report(cfg: ArrayConfig, grid: GridSpec, w: Optional[CMat] = None,
                     q_range: tuple = (2, 6), pair_budget: Optional[int] = None,
                     rng: Optional[Rng] = None) -> CoherenceReport:
    """Audit coherence of the effective sensing matrix.

    w = None audits the raw dictionary (identity combiner). The adjacent
    audit covers one-step angle, one-step inverse-distance, and both
    diagonal neighbors. The global coherence is exhaustive by default, or
    over pair_budget sampled pairs when the Gram would be too large.
    """
    start = time.perf_counter()
    dic = build_spatial_dictionary(cfg, grid)
    psi = dic.atoms if w is None else np.asarray(w, dtype=np.complex128) @ dic.atoms
    norms = np.linalg.norm(psi, axis=0)
    if np.any(norms == 0.0):
        raise ZeroColumn("sensing matrix has a zero column")
    b = psi / norms

    rows = []
    worst = ("none", -1, -1, -1.0)
    for pair_type, g1, g2 in _adjacent_pairs(grid):
        c = float(np.abs(np.vdot(b[:, g1], b[:, g2])))
        rows.append((pair_type, g1, g2, c))
        if c > worst[3]:
            worst = (pair_type, g1, g2, c)

    if pair_budget is None:
        nu, pair = mutual_coherence(b)
        exhaustive = True
    else:
        if rng is None:
            rng = Rng(0)
        g = grid.total
        nu, pair = -1.0, (-1, -1)
        for _ in range(int(pair_budget)):
            g1 = int(rng.integers(0, g - 1))
            g2 = int(rng.integers(0, g - 1))
            if g1 == g2:
                continue
            c = float(np.abs(np.vdot(b[:, g1], b[:, g2])))
            if c > nu:
                nu, pair = c, (min(g1, g2), max(g1, g2))
        exhaustive = False

    qs = range(q_range[0], q_range[1] + 1)
    thresholds = {q: 1.0 / (2 * q - 1) for q in qs}
    violations = {q: bool(nu >= thr) for q, thr in thresholds.items()}
    return CoherenceReport(rows=tuple(rows), worst_adjacent=worst, global_nu=nu,
                           global_pair=pair, global_exhaustive=exhaustive,
                           thresholds=thresholds, violations=violations,
                           wall_seconds=time.perf_counter() - start)


def save_dictionary(path, dic: Dictionary) -> None:
    """Write the NFCSDICT binary format.

    Layout: magic, version u32, N u32, G u32, atoms as little-endian f64
    interleaved (re, im) in column-major atom order, then G (mu, theta)
    f64 pairs. mu = +inf marks the plane-wave line.
    """
    with open(path, "wb") as fh:
        write_magic(fh, DICT_MAGIC, DICT_VERSION)
        write_u32(fh, dic.n_antennas)
        write_u32(fh, dic.size)
        write_complex_interleaved(fh, dic.atoms.T)  # .T makes columns contiguous
        pairs = np.empty(2 * dic.size, dtype=np.float64)
        pairs[0::2] = dic.grid_mu
        pairs[1::2] = dic.grid_theta
        write_f64_array(fh, pairs)


def load_dictionary(path) -> Dictionary:
    """Read the NFCSDICT binary format back into a Dictionary."""
    with open(path, "rb") as fh:
        read_magic(fh, DICT_MAGIC, DICT_VERSION)
        n = read_u32(fh)
        g = read_u32(fh)
        if n < 1 or g < 1:
            raise FormatError(f"bad dimensions N={n}, G={g}")
        atoms = read_complex_interleaved(fh, (g, n)).T
        pairs = read_f64_array(fh, 2 * g)
        extra = fh.read(1)
    if extra:
        raise FormatError("trailing bytes after dictionary payload")
    return Dictionary(atoms=np.ascontiguousarray(atoms), grid_mu=pairs[0::2],
                      grid_theta=pairs[1::2], grid=None)
