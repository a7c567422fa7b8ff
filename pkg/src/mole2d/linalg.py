"""Gaussian conditioning, normal/chi-square quantiles and weighted LS solves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NotPositiveDefinite, OutOfRange, SingularBlock

DENSE_LIMIT = 50


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match mean")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def condition(belief: GaussianBelief, fixed_indices, fixed_values) -> GaussianBelief:
    """Condition a joint Gaussian on ``x[fixed_indices] = fixed_values``.

    Returns the belief over the remaining indices (in increasing order).
    """
    fixed = [int(i) for i in fixed_indices]
    if len(set(fixed)) != len(fixed):
        raise ValueError("fixed indices must be distinct")
    if any(i < 0 or i >= belief.dim for i in fixed):
        raise IndexError("fixed index out of range")
    keep = [i for i in range(belief.dim) if i not in set(fixed)]
    if not fixed:
        return belief
    mu, P = belief.mean, belief.covariance
    Pff = P[np.ix_(fixed, fixed)]
    Pkf = P[np.ix_(keep, fixed)]
    resid = np.asarray(fixed_values, dtype=float) - mu[fixed]
    try:
        cf = sla.cho_factor(Pff)
    except np.linalg.LinAlgError as exc:
        raise SingularBlock("covariance block of the fixed indices is not invertible") from exc
    gain_t = sla.cho_solve(cf, Pkf.T)  # Pff^-1 Pfk
    mean = mu[keep] + gain_t.T @ resid
    cov = P[np.ix_(keep, keep)] - Pkf @ gain_t
    cov = 0.5 * (cov + cov.T)
    return GaussianBelief(mean, cov)


# Rational approximation of the normal quantile (P. J. Acklam).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758276161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    return -_acklam(1.0 - p)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, accurate to ~1e-15 after Halley refinement."""
    if not 0.0 < p < 1.0:
        raise OutOfRange(f"probability {p} outside (0, 1)")
    if p > 0.5:
        # refine in the lower tail where erfc keeps full relative precision
        return -normal_quantile(1.0 - p)
    x = _acklam(p)
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def chi2_quantile_1dof(eta: float) -> float:
    """Quantile of the chi-square distribution with one degree of freedom."""
    if not 0.0 < eta < 1.0:
        raise OutOfRange(f"confidence {eta} outside (0, 1)")
    z = normal_quantile(0.5 * (1.0 - eta))
    return z * z


def chi2_cdf_1dof(x: float) -> float:
    return math.erf(math.sqrt(max(x, 0.0) / 2.0))


def _as_sparse(A):
    return A if sp.issparse(A) else sp.csr_matrix(np.asarray(A, dtype=float))


class LaplacianSolver:
    """Factorization of ``A diag(1/var) A^T`` reused across right-hand sides."""

    def __init__(self, A_reduced, variances):
        A = _as_sparse(A_reduced).astype(float).tocsr()
        self.A = A
        self.weights = 1.0 / np.asarray(variances, dtype=float)
        self.n = A.shape[0]
        L = (A @ sp.diags(self.weights) @ A.T).tocsc()
        self.L = L
        if self.n == 0:
            self._solve = lambda b: np.zeros(0)
        elif self.n < DENSE_LIMIT:
            try:
                cf = sla.cho_factor(L.toarray())
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefinite("normal matrix is not positive definite (graph disconnected?)") from exc
            self._solve = lambda b: sla.cho_solve(cf, b)
        else:
            try:
                lu = spla.splu(
                    L, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True}
                )
            except RuntimeError as exc:
                raise NotPositiveDefinite("normal matrix is singular (graph disconnected?)") from exc
            if np.any(lu.U.diagonal() <= 0):
                raise NotPositiveDefinite("normal matrix is not positive definite (graph disconnected?)")
            self._solve = lu.solve

    def solve_normal(self, b):
        b = np.asarray(b, dtype=float)
        x = self._solve(b)
        r = b - self.L @ x
        scale = max(np.linalg.norm(b), 1e-300)
        if np.linalg.norm(r) > 1e-12 * scale:
            x = x + self._solve(r)
        return x

    def solve(self, rhs):
        """Weighted least-squares node values fitting edge values ``rhs``."""
        return self.solve_normal(self.A @ (self.weights * np.asarray(rhs, dtype=float)))


def weighted_ls_solve(A_reduced, variances, rhs):
    """Solve ``(A P^-1 A^T) x = A P^-1 rhs`` with ``P = diag(variances)``."""
    return LaplacianSolver(A_reduced, variances).solve(rhs)


def projection_identity_residual(A_reduced, C, variances) -> float:
    """Max-norm defect of the oblique projector identity for a cycle basis.

    Dense; intended for test-size graphs.
    """
    A = A_reduced.toarray() if sp.issparse(A_reduced) else np.asarray(A_reduced, dtype=float)
    C = C.toarray() if sp.issparse(C) else np.asarray(C, dtype=float)
    var = np.asarray(variances, dtype=float)
    Pinv = np.diag(1.0 / var)
    m = var.size
    AP = A @ Pinv
    total = AP.T @ np.linalg.solve(AP @ A.T, AP)
    if C.size and C.shape[0] > 0:
        CP = C * var
        total = total + C.T @ np.linalg.solve(CP @ C.T, C)
    return float(np.max(np.abs(total - Pinv))) if m else 0.0
