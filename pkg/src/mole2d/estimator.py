"""Orientation estimation through the integer cycle-space unknowns.

The pipeline: pick a cycle basis ``C``, estimate the cycle integers
``gamma_hat = C delta / 2pi`` with covariance ``C P C^T / 4pi^2``, screen a
confidence set of integer vectors, and recover one orientation hypothesis per
candidate with a closed-form weighted least-squares solve.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .angles import TWO_PI, wrap
from .cycles import MCB, CycleBasisMatrix, PseudoinverseApplier, cycle_basis
from .errors import BudgetExceeded, CapExceeded
from .graph import PoseGraph, incidence_matrices
from .linalg import GaussianBelief, LaplacianSolver, chi2_quantile_1dof, condition

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.99
DEFAULT_CAP = 4096


@dataclass(frozen=True, eq=False)
class GammaEstimate:
    gamma_hat: np.ndarray
    covariance: np.ndarray
    basis_kind: str = ""

    @property
    def dim(self) -> int:
        return self.gamma_hat.size


@dataclass(eq=False)
class HypothesisSet:
    per_coordinate: list
    alpha: float
    iterations: int = 0
    resolved_counts: list = field(default_factory=list)
    basis_kind: str = ""
    flags: set = field(default_factory=set)

    @property
    def dim(self) -> int:
        return len(self.per_coordinate)

    @property
    def size(self) -> int:
        return math.prod(len(s) for s in self.per_coordinate)

    def resolved_percent(self) -> list:
        """Share of coordinates fixed at each iteration, in percent."""
        if not self.dim:
            return []
        return [100.0 * u / self.dim for u in self.resolved_counts]

    def __contains__(self, gamma) -> bool:
        gamma = [int(v) for v in np.asarray(gamma).ravel()]
        return len(gamma) == self.dim and all(v in s for v, s in zip(gamma, self.per_coordinate))

    def __iter__(self):
        for combo in itertools.product(*self.per_coordinate):
            yield np.array(combo, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class OrientationHypothesis:
    gamma: np.ndarray
    theta_real: np.ndarray
    theta_wrapped: np.ndarray
    cost: float

    def __repr__(self):
        return f"OrientationHypothesis(gamma={self.gamma.tolist()}, cost={self.cost:.6g})"


def gamma_estimator(g: PoseGraph, C: CycleBasisMatrix) -> GammaEstimate:
    M = C.matrix.astype(float)
    gamma_hat = (M @ g.measurements) / TWO_PI
    cov = (M @ sp.diags(g.variances) @ M.T).toarray() / (TWO_PI**2)
    cov = 0.5 * (cov + cov.T)
    return GammaEstimate(np.asarray(gamma_hat, dtype=float), cov, C.kind)


def _interval_integers(center: float, half_width: float):
    lo = math.ceil(center - half_width)
    hi = math.floor(center + half_width)
    return list(range(lo, hi + 1))


def integer_screening(est: GammaEstimate, alpha: float = DEFAULT_ALPHA, cap: int | None = DEFAULT_CAP) -> HypothesisSet:
    """Confidence product set for the true cycle integers.

    Each still-ambiguous coordinate gets the closed interval
    ``zeta_i +- sqrt(P_ii * chi2_1(eta))`` with ``eta = alpha**(1/l)``.
    Coordinates whose interval holds a single integer are fixed, and the
    belief over the others is conditioned on them jointly; this repeats until
    nothing new gets fixed. An interval with no integer falls back to the
    nearest integer and is recorded in ``flags``.

    Raises CapExceeded (with the set attached) when the product set has more
    than ``cap`` elements.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    ell = est.dim
    result = HypothesisSet([None] * ell, alpha, basis_kind=est.basis_kind)
    if ell == 0:
        result.per_coordinate = []
        return result
    eta = alpha ** (1.0 / ell)
    q = chi2_quantile_1dof(eta)
    remaining = list(range(ell))
    belief = GaussianBelief(est.gamma_hat, est.covariance)
    while remaining:
        result.iterations += 1
        fixed_pos, fixed_vals = [], []
        for pos, i in enumerate(remaining):
            zeta = belief.mean[pos]
            b = math.sqrt(max(belief.covariance[pos, pos], 0.0) * q)
            cands = _interval_integers(zeta, b)
            if not cands:
                cands = [int(math.floor(zeta + 0.5))]
                result.flags.add(i)
            result.per_coordinate[i] = cands
            if len(cands) == 1:
                fixed_pos.append(pos)
                fixed_vals.append(cands[0])
        result.resolved_counts.append(len(fixed_pos))
        if not fixed_pos:
            break
        remaining = [i for pos, i in enumerate(remaining) if pos not in set(fixed_pos)]
        if remaining:
            belief = condition(belief, fixed_pos, fixed_vals)
    if cap is not None and result.size > cap:
        raise CapExceeded(f"confidence set has {result.size} elements, cap is {cap}", result)
    return result


def cost(g: PoseGraph, theta) -> float:
    """Wrapped weighted squared residual of all edges; node 0 sits at zero."""
    full = np.concatenate([[0.0], np.asarray(theta, dtype=float)])
    r = wrap(full[g.heads] - full[g.tails] - g.measurements)
    return float(np.sum(r * r / g.variances))


class _Context:
    """Per-graph factorizations shared by every hypothesis."""

    def __init__(self, g: PoseGraph, C: CycleBasisMatrix | None = None):
        self.g = g
        _, A = incidence_matrices(g, sparse=True)
        self.A = A
        self.solver = LaplacianSolver(A, g.variances)
        self.C = C
        self.pinv = PseudoinverseApplier(C) if C is not None else None

    def theta_given_k(self, k):
        return self.solver.solve(self.g.measurements - TWO_PI * np.asarray(k, dtype=float))

    def hypothesis(self, gamma) -> OrientationHypothesis:
        gamma = np.asarray(gamma, dtype=np.int64).ravel()
        k = self.pinv.apply(gamma)
        theta = self.theta_given_k(k)
        wrapped = wrap(theta) if theta.size else theta
        return OrientationHypothesis(gamma, theta, np.asarray(wrapped, dtype=float), cost(self.g, wrapped))


def theta_given_k(g: PoseGraph, k, solver: LaplacianSolver | None = None) -> np.ndarray:
    """Closed-form orientations given per-edge integers ``k``."""
    if solver is None:
        _, A = incidence_matrices(g, sparse=True)
        solver = LaplacianSolver(A, g.variances)
    return solver.solve(g.measurements - TWO_PI * np.asarray(k, dtype=float))


def theta_given_gamma(g: PoseGraph, C: CycleBasisMatrix, gamma) -> OrientationHypothesis:
    return _Context(g, C).hypothesis(gamma)


def _sort_key(h: OrientationHypothesis):
    return (h.cost, tuple(h.gamma.tolist()))


@dataclass(eq=False)
class Mole2DResult:
    hypotheses: list
    screening: HypothesisSet
    estimate: GammaEstimate
    basis: CycleBasisMatrix

    def __iter__(self):
        return iter(self.hypotheses)

    def __len__(self):
        return len(self.hypotheses)

    def __getitem__(self, i):
        return self.hypotheses[i]

    @property
    def best(self) -> OrientationHypothesis:
        return self.hypotheses[0]


def mole2d(
    g: PoseGraph,
    alpha: float = DEFAULT_ALPHA,
    basis_kind: str = MCB,
    cap: int | None = DEFAULT_CAP,
    workers: int = 1,
    basis: CycleBasisMatrix | None = None,
) -> Mole2DResult:
    """Multi-hypothesis orientation estimate.

    Returns the hypotheses for every integer vector in the screened confidence
    set, sorted by ascending cost (ties broken by the integer vector).
    """
    C = basis if basis is not None else cycle_basis(g, basis_kind)
    est = gamma_estimator(g, C)
    screening = integer_screening(est, alpha, cap)
    ctx = _Context(g, C)
    gammas = list(screening)
    if workers > 1 and len(gammas) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hyps = list(pool.map(ctx.hypothesis, gammas))
    else:
        hyps = [ctx.hypothesis(gm) for gm in gammas]
    hyps.sort(key=_sort_key)
    return Mole2DResult(hyps, screening, est, C)


def babai_box(est: GammaEstimate):
    """Per-coordinate integer bounds guaranteed to hold the ILS minimizer.

    With ``q0`` the objective at the rounded estimate, any better point
    satisfies ``|gamma_i - gamma_hat_i| <= sqrt(P_ii * q0)``.
    """
    g0 = np.rint(est.gamma_hat)
    d = g0 - est.gamma_hat
    q0 = float(d @ np.linalg.solve(est.covariance, d))
    half = np.sqrt(np.diag(est.covariance) * q0)
    lo = np.ceil(est.gamma_hat - half - 1e-12).astype(np.int64)
    hi = np.floor(est.gamma_hat + half + 1e-12).astype(np.int64)
    return lo, hi


def ils_box_search(est: GammaEstimate, radius: int | None = None, budget: int = 2_000_000, chunk: int = 65536):
    """Exhaustive minimization of ``||gamma - gamma_hat||^2`` in ``P^-1`` over a box.

    Returns ``(gamma, best, runner_up)`` objective values. ``radius=None``
    uses the box from :func:`babai_box`, which always contains the global
    minimizer; an integer radius searches ``round(gamma_hat) +- radius``.
    """
    ell = est.dim
    if ell == 0:
        return np.zeros(0, dtype=np.int64), 0.0, math.inf
    if radius is None:
        lo, hi = babai_box(est)
    else:
        c = np.rint(est.gamma_hat).astype(np.int64)
        lo, hi = c - radius, c + radius
    sizes = (hi - lo + 1).tolist()
    total = math.prod(sizes)
    if total > budget:
        raise BudgetExceeded(f"box holds {total} points, budget is {budget}")
    info = np.linalg.inv(est.covariance)
    info = 0.5 * (info + info.T)
    best_val, second_val, best_idx = math.inf, math.inf, None
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk))
        pts = np.stack(np.unravel_index(flat, sizes), axis=1) + lo
        d = pts - est.gamma_hat
        vals = np.einsum("ij,jk,ik->i", d, info, d)
        order = np.argsort(vals, kind="stable")[:2]
        for j in order.tolist():
            v = float(vals[j])
            if v < best_val:
                second_val, best_val, best_idx = best_val, v, pts[j].copy()
            elif v < second_val:
                second_val = v
    return best_idx.astype(np.int64), best_val, second_val


def ml_estimate(
    g: PoseGraph,
    C: CycleBasisMatrix,
    est: GammaEstimate | None = None,
    radius: int | None = None,
    budget: int = 2_000_000,
) -> OrientationHypothesis:
    """Maximum-likelihood orientations via box search on the cycle integers."""
    if est is None:
        est = gamma_estimator(g, C)
    gamma, best, second = ils_box_search(est, radius, budget)
    if second - best <= 1e-12:
        log.warning("ML integer search tie: %.3g vs %.3g", best, second)
    return _Context(g, C).hypothesis(gamma)
