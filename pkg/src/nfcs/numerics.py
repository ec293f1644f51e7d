"""Shared numeric kernels, deterministic RNG, and validation helpers.

Everything in this package runs in numpy complex128 (float64 for real
quantities). Kernels are thin wrappers over numpy with explicit shape
checks so dimension bugs surface as DimensionMismatch instead of numpy
broadcasting surprises.
"""

from __future__ import annotations

import numpy as np

CVec = np.ndarray  # complex128, shape (n,)
CMat = np.ndarray  # complex128, shape (m, n)


class DimensionMismatch(ValueError):
    """Operand shapes do not conform."""


class NonConvergence(RuntimeError):
    """Iterative routine exhausted its iteration budget."""


def as_complex_vector(x, name: str = "x") -> CVec:
    """Coerce to a 1-d complex128 array, rejecting anything else."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name}: expected 1-d array, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.complex128)


def as_complex_matrix(x, name: str = "x") -> CMat:
    """Coerce to a 2-d complex128 array, rejecting anything else."""
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name}: expected 2-d array, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.complex128)


def check_finite(x: np.ndarray, name: str = "x") -> np.ndarray:
    """Raise ValueError if the array contains nan or inf."""
    if not np.all(np.isfinite(x.view(np.float64) if np.iscomplexobj(x) else x)):
        raise ValueError(f"{name}: contains non-finite entries")
    return x


def hermitian(m: CMat) -> CMat:
    """Conjugate transpose."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise DimensionMismatch(f"hermitian: expected 2-d array, got shape {m.shape}")
    return m.conj().T


def matvec(m: CMat, v: CVec) -> CVec:
    """Matrix-vector product with shape checking."""
    m = np.asarray(m)
    v = np.asarray(v)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"matvec: shapes {m.shape} and {v.shape} do not conform")
    return m @ v


def matmul(a: CMat, b: CMat) -> CMat:
    """Matrix-matrix product with shape checking."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    return a @ b


def vecnorm2(v: np.ndarray) -> float:
    """Euclidean norm."""
    return float(np.linalg.norm(np.asarray(v).ravel()))


def inner_product(a: CVec, b: CVec) -> complex:
    """Hermitian inner product conj(a) . b."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"inner_product: shapes {a.shape} and {b.shape} do not conform")
    return complex(np.vdot(a, b))


def max_eigenvalue(m: CMat, tol: float = 1e-6, max_iters: int = 1000) -> float:
    """Largest eigenvalue of a Hermitian PSD matrix by power iteration.

    Deterministic start vector (all ones, normalized). Stops when the
    Rayleigh quotient changes by less than tol relatively between
    iterations. Raises NonConvergence past max_iters.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"max_eigenvalue: expected square matrix, got {m.shape}")
    n = m.shape[0]
    v = np.ones(n, dtype=np.complex128) / np.sqrt(n)
    lam = None
    for _ in range(max_iters):
        w = m @ v
        lam_new = float(np.vdot(v, w).real)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if lam is not None and abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    raise NonConvergence(f"power iteration did not settle within {max_iters} iterations")


class Rng:
    """Seeded random stream wrapping numpy Generator (PCG64).

    The generator algorithm is PCG64 as shipped by numpy; identical seeds
    give identical streams for a fixed numpy version. Derived per-sample
    streams use seed + index so any sample can be regenerated in isolation.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.default_rng(self.seed)

    def child(self, index: int) -> "Rng":
        """Independent stream for sample number `index`."""
        return Rng(self.seed + int(index))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        """Uniform integers in [low, high] inclusive."""
        return self._gen.integers(low, high, size, endpoint=True)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def complex_normal(self, sigma2: float, size=None):
        """Circularly symmetric complex Gaussian with variance sigma2 per entry."""
        scale = np.sqrt(sigma2 / 2.0)
        re = self._gen.standard_normal(size)
        im = self._gen.standard_normal(size)
        return scale * (re + 1j * im)

    def phases(self, size=None):
        """Uniform phases in [0, 2pi)."""
        return self._gen.uniform(0.0, 2.0 * np.pi, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
