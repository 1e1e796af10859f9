"""Fisher-information block algebra.

Partitions the information matrix into

    I = [[A, B], [B^T, C]],   A in R^{r x r},

and derives the Schur quantities U = (A - B C^{-1} B^T)^{-1}, D = B C^{-1} and
the constant c feeding the chisquare-approximation remainder.  All SPD systems
go through Cholesky with a condition-number guard of 1e12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionMismatch, IllConditioned, NotPositiveDefinite, NotSymmetric

CONDITION_LIMIT = 1e12
SYMMETRY_RTOL = 1e-12


def linf_matrix_norm(m: np.ndarray) -> float:
    """Maximum absolute row sum; zero for empty matrices."""
    if m.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(m), axis=1)))


def _spd_inverse(m: np.ndarray, label: str) -> np.ndarray:
    """Cholesky inverse with symmetry/PD/conditioning guards."""
    if m.shape[0] == 0:
        return m.reshape(0, 0)
    try:
        factor = cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{label} is not positive definite") from exc
    diag = np.diag(factor[0])
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise NotPositiveDefinite(f"{label} is not positive definite")
    # Cheap two-sided condition estimate from the Cholesky diagonal.
    cond_est = (diag.max() / diag.min()) ** 2
    if cond_est > CONDITION_LIMIT:
        raise IllConditioned(
            f"{label} condition estimate {cond_est:.3g} exceeds {CONDITION_LIMIT:.0e}"
        )
    return cho_solve(factor, np.eye(m.shape[0]), check_finite=False)


@dataclass(frozen=True)
class FisherBlocks:
    """Partitioned information matrix with derived Schur quantities.

    For the simple-null case r = d the nuisance blocks are empty
    (0-dimension matrices), U = A^{-1}, and c falls back to |||I|||_inf,
    matching the single-parameter worked example this code reproduces.
    """

    full: np.ndarray
    r: int
    a: np.ndarray
    b: np.ndarray
    c_block: np.ndarray
    u: np.ndarray
    d_mat: np.ndarray
    c: float
    full_inv: np.ndarray
    c_block_inv: np.ndarray

    @property
    def dim(self) -> int:
        return self.full.shape[0]


def constant_c(u: np.ndarray, d_mat: np.ndarray) -> float:
    """c(U, D) = max of the L_inf norms of U, D^T U D, D^T U."""
    if d_mat.size == 0:
        return linf_matrix_norm(u)
    return max(
        linf_matrix_norm(u),
        linf_matrix_norm(d_mat.T @ u @ d_mat),
        linf_matrix_norm(d_mat.T @ u),
    )


def partition_fisher(info: np.ndarray, r: int) -> FisherBlocks:
    """Partition a symmetric PD d x d information matrix at the first r coordinates."""
    info = np.asarray(info, dtype=float)
    if info.ndim != 2 or info.shape[0] != info.shape[1]:
        raise DimensionMismatch(f"information matrix must be square, got {info.shape}")
    d = info.shape[0]
    if not 1 <= r <= d:
        raise DimensionMismatch(f"need 1 <= r <= d, got r={r}, d={d}")
    scale = np.max(np.abs(info))
    if scale == 0 or not np.isfinite(scale):
        raise NotPositiveDefinite("information matrix is zero or non-finite")
    if np.max(np.abs(info - info.T)) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("information matrix is not symmetric")

    a = info[:r, :r]
    b = info[:r, r:]
    c_block = info[r:, r:]
    full_inv = _spd_inverse(info, "I(theta0)")

    if r == d:
        u = _spd_inverse(a, "A")
        d_mat = np.zeros((r, 0))
        c_inv = np.zeros((0, 0))
        # Simple-null case: the worked single-parameter example takes
        # c = |||I(theta0)|||_inf rather than the Schur-complement norm.
        c_val = linf_matrix_norm(a)
    else:
        c_inv = _spd_inverse(c_block, "C")
        d_mat = b @ c_inv
        schur = a - b @ c_inv @ b.T
        schur = 0.5 * (schur + schur.T)
        u = _spd_inverse(schur, "A - B C^{-1} B^T")
        c_val = constant_c(u, d_mat)

    return FisherBlocks(
        full=info, r=r, a=a, b=b, c_block=c_block,
        u=u, d_mat=d_mat, c=c_val, full_inv=full_inv, c_block_inv=c_inv,
    )


def quadratic_form_g(xi: np.ndarray, eta: np.ndarray, blocks: FisherBlocks):
    """Both forms of the limiting quadratic statistic.

    Returns (g_full, g_schur) where

        g_full  = (xi,eta)^T I^{-1} (xi,eta) - eta^T C^{-1} eta
        g_schur = (xi - D eta)^T U (xi - D eta)

    The two agree to rounding; their difference is its own cross-check.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    d = blocks.dim
    if xi.shape != (blocks.r,) or eta.shape != (d - blocks.r,):
        raise DimensionMismatch(
            f"expected xi of shape ({blocks.r},) and eta of shape ({d - blocks.r},), "
            f"got {xi.shape} and {eta.shape}"
        )
    w = np.concatenate([xi, eta])
    g_full = float(w @ blocks.full_inv @ w)
    if eta.size:
        g_full -= float(eta @ blocks.c_block_inv @ eta)
        resid = xi - blocks.d_mat @ eta
    else:
        resid = xi
    g_schur = float(resid @ blocks.u @ resid)
    return g_full, g_schur
