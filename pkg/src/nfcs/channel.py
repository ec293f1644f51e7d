"""Spherical-wave uplink channel model for a uniform linear array.

Geometry: the array lies on a line with element n at position n*spacing,
n = 0..N-1, element 0 at the origin. A propagation path reaches the array
via a scatterer at distance mu from element 0 under angle theta (measured
from broadside), after a first hop of length d from the transmitter. The
per-element path length is

    r_n = d + sqrt(mu^2 + (n*dd)^2 - 2*mu*(n*dd)*sin(theta))

and each path contributes amplitude lam*sqrt(rho) / ((4*pi)^{3/2} * r_n)
with phase exp(-j*k*r_n). The quadratic (Fresnel) expansion of r_n around
mu keeps curvature to second order and moves the amplitude to the fixed
reference distance mu + d, which is the approximation the sparse recovery
grid is built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import CVec, Rng

SPEED_OF_LIGHT = 299792458.0

_AMP = (4.0 * np.pi) ** 1.5


class DegenerateGeometry(ValueError):
    """A path passes unphysically close to (or through) the array."""


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array description.

    n_antennas: element count N (>= 2).
    carrier_freq: carrier frequency in Hz.
    spacing: element spacing in meters; defaults to half a wavelength.
    """

    n_antennas: int
    carrier_freq: float
    spacing: float = 0.0

    def __post_init__(self):
        if self.n_antennas < 2:
            raise ValueError(f"n_antennas must be >= 2, got {self.n_antennas}")
        if not (self.carrier_freq > 0):
            raise ValueError(f"carrier_freq must be positive, got {self.carrier_freq}")
        if self.spacing == 0.0:
            object.__setattr__(self, "spacing", self.wavelength / 2.0)
        if not (self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def aperture(self) -> float:
        return self.n_antennas * self.spacing

    def element_positions(self) -> np.ndarray:
        return np.arange(self.n_antennas, dtype=np.float64) * self.spacing


def rayleigh_distance(cfg: ArrayConfig) -> float:
    """Fresnel-region boundary 2*D^2 / lambda for aperture D."""
    d = cfg.aperture
    return 2.0 * d * d / cfg.wavelength


@dataclass(frozen=True)
class PathParam:
    """One propagation path.

    mu: scatterer-to-array distance in meters (from element 0), finite > 0.
    theta: arrival angle in radians, |theta| <= pi/2.
    d: first-hop (transmitter-to-scatterer) distance in meters, >= 0.
    rho: power reflection coefficient, > 0.
    """

    mu: float
    theta: float
    d: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be finite positive, got {self.mu}")
        if not (np.isfinite(self.theta) and abs(self.theta) <= np.pi / 2):
            raise ValueError(f"theta must satisfy |theta| <= pi/2, got {self.theta}")
        if not (np.isfinite(self.d) and self.d >= 0):
            raise ValueError(f"d must be >= 0, got {self.d}")
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True)
class PathSet:
    """A multipath scenario with gains derived for a given array.

    betas[q] = lam*sqrt(rho_q) / ((4*pi)^{3/2} * (mu_q + d_q))
    alphas[q] = betas[q] * exp(-j*k*(mu_q + d_q))
    """

    paths: tuple
    betas: np.ndarray
    alphas: np.ndarray

    @classmethod
    def derive(cls, cfg: ArrayConfig, paths) -> "PathSet":
        paths = tuple(paths)
        if not paths:
            raise ValueError("PathSet needs at least one path")
        lam = cfg.wavelength
        k = cfg.wavenumber
        total = np.array([p.mu + p.d for p in paths])
        rho = np.array([p.rho for p in paths])
        betas = lam * np.sqrt(rho) / (_AMP * total)
        alphas = betas * np.exp(-1j * k * total)
        return cls(paths=paths, betas=betas, alphas=alphas.astype(np.complex128))

    def __len__(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class ScenarioPrior:
    """Sampling prior for multipath scenarios.

    Angles: sin(theta) drawn from an equal-weight Gaussian mixture with
    the given means and common variance, rejection-sampled into
    angle_domain (a rejected draw redraws the component as well).
    Distances mu and d are uniform over their ranges; path count Q is
    uniform over q_range inclusive.
    """

    gmm_means: tuple = (-0.6, -0.45, -0.2, 0.3, 0.6)
    gmm_var: float = 0.15
    angle_domain: tuple = (-1.0, 1.0)
    mu_range: tuple = (2.0, 100.0)
    d_range: tuple = (0.0, 100.0)
    q_range: tuple = (2, 6)
    rho: float = 1.0

    def __post_init__(self):
        if self.gmm_var <= 0:
            raise ValueError("gmm_var must be positive")
        lo, hi = self.angle_domain
        if not (-1.0 <= lo < hi <= 1.0):
            raise ValueError(f"angle_domain must be within [-1, 1], got {self.angle_domain}")
        if not (0 < self.mu_range[0] < self.mu_range[1]):
            raise ValueError(f"mu_range must be increasing positive, got {self.mu_range}")
        if not (0 <= self.d_range[0] <= self.d_range[1]):
            raise ValueError(f"d_range must be increasing nonnegative, got {self.d_range}")
        if not (1 <= self.q_range[0] <= self.q_range[1]):
            raise ValueError(f"q_range must be increasing with q >= 1, got {self.q_range}")


def sample_angle(prior: ScenarioPrior, rng: Rng, max_tries: int = 1000) -> float:
    """Draw sin(theta) from the truncated mixture; returns theta in radians."""
    n_comp = len(prior.gmm_means)
    std = float(np.sqrt(prior.gmm_var))
    lo, hi = prior.angle_domain
    for _ in range(max_tries):
        comp = int(rng.integers(0, n_comp - 1))
        phi = prior.gmm_means[comp] + std * float(rng.standard_normal())
        if lo <= phi <= hi:
            return float(np.arcsin(phi))
    raise RuntimeError("angle rejection sampling exhausted max_tries")


def sample_scenario(cfg: ArrayConfig, prior: ScenarioPrior, rng: Rng) -> PathSet:
    """Draw one multipath scenario. Draw order per path: angle, mu, d."""
    q = int(rng.integers(prior.q_range[0], prior.q_range[1]))
    paths = []
    for _ in range(q):
        theta = sample_angle(prior, rng)
        mu = float(rng.uniform(*prior.mu_range))
        d = float(rng.uniform(*prior.d_range))
        paths.append(PathParam(mu=mu, theta=theta, d=d, rho=prior.rho))
    return PathSet.derive(cfg, paths)


def _path_lengths(cfg: ArrayConfig, pathset: PathSet) -> np.ndarray:
    """Per-element path lengths, shape (Q, N)."""
    x = cfg.element_positions()[None, :]
    mu = np.array([p.mu for p in pathset.paths])[:, None]
    sin_t = np.sin([p.theta for p in pathset.paths])
    d = np.array([p.d for p in pathset.paths])[:, None]
    r = d + np.sqrt(mu * mu + x * x - 2.0 * mu * x * sin_t[:, None])
    return r


def exact_channel(cfg: ArrayConfig, pathset: PathSet) -> CVec:
    """Spherical-wave channel, exact per-element distances in gain and phase."""
    r = _path_lengths(cfg, pathset)
    if np.any(r <= cfg.spacing):
        raise DegenerateGeometry("a path length fell at or below the element spacing")
    rho = np.array([p.rho for p in pathset.paths])[:, None]
    amp = cfg.wavelength * np.sqrt(rho) / (_AMP * r)
    h = np.sum(amp * np.exp(-1j * cfg.wavenumber * r), axis=0)
    return h.astype(np.complex128)


def fresnel_atom(cfg: ArrayConfig, mu: float, theta: float) -> CVec:
    """Unit-modulus array response under the quadratic wavefront expansion.

    Element n carries phase -k*((n*dd)^2/(2*mu) - n*dd*sin(theta)).
    mu = +inf drops the curvature term (plane wave).
    """
    x = cfg.element_positions()
    curv = x * x / (2.0 * mu) if np.isfinite(mu) else np.zeros_like(x)
    phase = -cfg.wavenumber * (curv - x * np.sin(theta))
    return np.exp(1j * phase).astype(np.complex128)


def fresnel_channel(cfg: ArrayConfig, pathset: PathSet) -> CVec:
    """Channel under the quadratic expansion: sum_q alpha_q * atom(mu_q, theta_q)."""
    h = np.zeros(cfg.n_antennas, dtype=np.complex128)
    for p, alpha in zip(pathset.paths, pathset.alphas):
        h += alpha * fresnel_atom(cfg, p.mu, p.theta)
    return h
