"""Classical sparse recovery over the sensing matrix Psi = W A.

The relaxed problem is min_alpha 0.5*||y - Psi alpha||_2^2 + xi*||alpha||_1.
ISTA iterates alpha <- s_eta(alpha - Psi^H (Psi alpha - y) / lam_max) with
eta = xi / lam_max, which equals the fixed-matrix form
s_eta((I - Psi^H Psi / lam_max) alpha + Psi^H y / lam_max). FISTA adds the
usual momentum sequence t_1 = 1, t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2.
OMP greedily grows a support with a Tikhonov-jittered least-squares refit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dictionary import Dictionary
from .measurement import CombinerMatrix
from .numerics import CMat, CVec, max_eigenvalue


class SingularRefit(RuntimeError):
    """Least-squares refit failed despite the jitter."""


@dataclass
class SolverConfig:
    """Knobs shared by the classical solvers.

    iters: iteration budget (ISTA/FISTA sweeps, OMP atoms unless k is set).
    xi: l1 weight; None picks 0.1 * max|Psi^H y| per instance.
    eta: direct threshold override; None derives xi / lam_max.
    residual_tol: OMP early stop on ||r||_2; None runs the full budget.
    k: OMP sparsity cap overriding iters.
    """

    iters: int = 100
    xi: Optional[float] = None
    eta: Optional[float] = None
    residual_tol: Optional[float] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError(f"iters must be >= 1, got {self.iters}")
        if self.xi is not None and self.xi < 0:
            raise ValueError(f"xi must be >= 0, got {self.xi}")
        if self.eta is not None and self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


class SensingOperator:
    """Psi = W A with cached adjoint and largest Gram eigenvalue."""

    def __init__(self, combiner: CombinerMatrix, dictionary: Dictionary):
        self.combiner = combiner
        self.dictionary = dictionary
        self.psi = np.ascontiguousarray(combiner.w @ dictionary.atoms)
        self.psi_h = np.ascontiguousarray(self.psi.conj().T)
        self._lambda_max = None

    @property
    def shape(self) -> tuple:
        return self.psi.shape

    @property
    def lambda_max(self) -> float:
        """Largest eigenvalue of Psi^H Psi (power iteration, tight tolerance)."""
        if self._lambda_max is None:
            gram = self.psi_h @ self.psi
            self._lambda_max = max_eigenvalue(gram, tol=1e-9, max_iters=20000)
        return self._lambda_max

    def forward(self, alpha: CVec) -> CVec:
        return self.psi @ alpha

    def adjoint(self, r: CVec) -> CVec:
        return self.psi_h @ r


def soft_threshold(z: np.ndarray, eta: float) -> np.ndarray:
    """Complex magnitude shrinkage s(z) = z * max(1 - eta/|z|, 0), zero-safe."""
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    mag = np.abs(z)
    scale = np.where(mag > eta, 1.0 - eta / np.where(mag > 0, mag, 1.0), 0.0)
    return z * scale


def lasso_objective(op: SensingOperator, y: CVec, alpha: CVec, xi: float) -> float:
    """0.5 * ||y - Psi alpha||_2^2 + xi * ||alpha||_1."""
    r = y - op.forward(alpha)
    return 0.5 * float(np.linalg.norm(r) ** 2) + xi * float(np.sum(np.abs(alpha)))


def _resolve_weights(op: SensingOperator, y: CVec, cfg: SolverConfig) -> tuple:
    lam = op.lambda_max
    if cfg.xi is not None:
        xi = cfg.xi
    else:
        xi = 0.1 * float(np.max(np.abs(op.adjoint(y))))
    eta = cfg.eta if cfg.eta is not None else xi / lam
    return lam, xi, eta


def ista(op: SensingOperator, y: CVec, cfg: SolverConfig) -> tuple:
    """Proximal gradient descent. Returns (alpha, objective trace).

    The trace has iters + 1 entries starting at the zero initializer; with
    the 1/lam_max step it is nonincreasing up to the eigenvalue tolerance.
    """
    lam, xi, eta = _resolve_weights(op, y, cfg)
    alpha = np.zeros(op.shape[1], dtype=np.complex128)
    trace = [lasso_objective(op, y, alpha, xi)]
    for _ in range(cfg.iters):
        grad = op.adjoint(op.forward(alpha) - y)
        alpha = soft_threshold(alpha - grad / lam, eta)
        trace.append(lasso_objective(op, y, alpha, xi))
    return alpha, np.array(trace)


def fista(op: SensingOperator, y: CVec, cfg: SolverConfig) -> tuple:
    """Accelerated proximal gradient. Returns (alpha, objective trace)."""
    lam, xi, eta = _resolve_weights(op, y, cfg)
    alpha_prev = np.zeros(op.shape[1], dtype=np.complex128)
    z = alpha_prev
    t_k = 1.0
    trace = [lasso_objective(op, y, alpha_prev, xi)]
    for _ in range(cfg.iters):
        grad = op.adjoint(op.forward(z) - y)
        alpha = soft_threshold(z - grad / lam, eta)
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k)) / 2.0
        z = alpha + ((t_k - 1.0) / t_next) * (alpha - alpha_prev)
        alpha_prev = alpha
        t_k = t_next
        trace.append(lasso_objective(op, y, alpha, xi))
    return alpha_prev, np.array(trace)


def omp(op: SensingOperator, y: CVec, cfg: SolverConfig) -> tuple:
    """Orthogonal matching pursuit. Returns (alpha, residual norm trace).

    Selection maximizes |psi_g^H r| / ||psi_g||, never reselecting an
    index (ties break to the lowest index). Each step refits all selected
    coefficients by least squares with a 1e-12 Tikhonov jitter.
    """
    budget = cfg.k if cfg.k is not None else cfg.iters
    col_norms = np.linalg.norm(op.psi, axis=0)
    if np.any(col_norms == 0.0):
        col_norms = np.where(col_norms == 0.0, 1.0, col_norms)
    r = y.astype(np.complex128).copy()
    support: list = []
    coef = np.zeros(0, dtype=np.complex128)
    trace = [float(np.linalg.norm(r))]
    for _ in range(budget):
        scores = np.abs(op.adjoint(r)) / col_norms
        if support:
            scores[np.array(support)] = -1.0
        g = int(np.argmax(scores))
        support.append(g)
        sub = op.psi[:, support]
        gram = sub.conj().T @ sub
        gram[np.diag_indices_from(gram)] += 1e-12
        rhs = sub.conj().T @ y
        try:
            coef = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularRefit(f"refit failed on support of size {len(support)}") from exc
        if not np.all(np.isfinite(coef.view(np.float64))):
            raise SingularRefit(f"refit produced non-finite coefficients on support {support}")
        r = y - sub @ coef
        trace.append(float(np.linalg.norm(r)))
        if cfg.residual_tol is not None and trace[-1] <= cfg.residual_tol:
            break
    alpha = np.zeros(op.shape[1], dtype=np.complex128)
    alpha[np.array(support)] = coef
    return alpha, np.array(trace)


def reconstruct_channel(dictionary: Dictionary, alpha: CVec) -> CVec:
    """Map grid coefficients back to the antenna domain, h = A alpha."""
    return dictionary.atoms @ np.asarray(alpha, dtype=np.complex128)
