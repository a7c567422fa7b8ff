"""Independent references used to check the estimator.

Nothing here calls into the estimator beyond the public cost function; the
brute-force searches are written separately on purpose so that a bug in the
estimator cannot hide behind the same code path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .angles import TWO_PI, wrap
from .errors import BudgetExceeded
from .graph import PoseGraph, build_graph, relative_rotations


@dataclass(frozen=True, eq=False)
class GroundTruthInstance:
    """A pose graph together with the truth that generated it.

    ``graph.measurements == wrap(A^T theta_true + noise)`` holds bit for bit.
    ``positions`` (node_count x 2) and ``translations`` (m x 2, measured in
    the tail frame) are optional and only used for SE(2) export.
    """

    graph: PoseGraph
    theta_true: np.ndarray
    noise: np.ndarray
    positions: np.ndarray | None = field(default=None, repr=False)
    translations: np.ndarray | None = field(default=None, repr=False)
    translation_sigma: float = 0.05

    @property
    def k_true(self) -> np.ndarray:
        rel = relative_rotations(self.graph, self.theta_true)
        return np.floor((math.pi - rel - self.noise) / TWO_PI).astype(np.int64)

    def gamma_true(self, C) -> np.ndarray:
        return true_gamma(self, C)

    def roundtrip_ok(self) -> bool:
        rel = relative_rotations(self.graph, self.theta_true)
        return bool(np.array_equal(wrap(rel + self.noise), self.graph.measurements))


def make_instance(node_count, tails, heads, theta_true, noise, variances, positions=None, translations=None,
                  translation_sigma=0.05) -> GroundTruthInstance:
    """Build measurements from the truth and freeze everything together."""
    theta_true = np.asarray(wrap(np.asarray(theta_true, dtype=float)), dtype=float).reshape(-1)
    full = np.concatenate([[0.0], theta_true])
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    noise = np.asarray(noise, dtype=float)
    meas = wrap(full[heads] - full[tails] + noise)
    g = build_graph(node_count, zip(tails.tolist(), heads.tolist(), np.atleast_1d(meas).tolist(),
                                    np.broadcast_to(np.asarray(variances, float), noise.shape).tolist()))
    return GroundTruthInstance(g, theta_true, noise, positions, translations, translation_sigma)


def true_gamma(inst: GroundTruthInstance, C) -> np.ndarray:
    """Cycle integers implied by the (simulation-only) noise realization."""
    M = C.matrix if hasattr(C, "matrix") else C
    return np.asarray(M @ inst.k_true, dtype=np.int64).ravel()


# --- brute-force global search over angles -----------------------------------


def _cost_many(g: PoseGraph, thetas: np.ndarray) -> np.ndarray:
    """Cost (wrapped weighted residuals) for a batch of orientation vectors."""
    full = np.concatenate([np.zeros((thetas.shape[0], 1)), thetas], axis=1)
    r = full[:, g.heads] - full[:, g.tails] - g.measurements
    r = r - TWO_PI * np.round(r / TWO_PI)
    return (r * r / g.variances).sum(axis=1)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def polish(g: PoseGraph, starts: np.ndarray, bracket: float = math.pi, tol: float = 1e-9,
           max_sweeps: int = 5000) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate descent with golden-section line search, batched over starts.

    Each coordinate is minimized over ``[t - w, t + w]``; ``w`` starts at
    ``bracket`` and shrinks with the step sizes actually taken. Stops when a
    full sweep improves no start by more than ``tol``.
    """
    X = np.array(starts, dtype=float, copy=True)
    if X.ndim == 1:
        X = X[None, :]
    K, n = X.shape
    incident = []
    for j in range(1, n + 1):
        es = np.flatnonzero((g.tails == j) | (g.heads == j))
        sign = np.where(g.heads[es] == j, 1.0, -1.0)
        other = np.where(g.heads[es] == j, g.tails[es], g.heads[es])
        incident.append((sign, other, g.measurements[es], 1.0 / g.variances[es]))
    widths = np.full(n, float(bracket))
    prev = _cost_many(g, X)
    for _ in range(max_sweeps):
        for j in range(n):
            sign, other, meas, w = incident[j]
            full = np.concatenate([np.zeros((K, 1)), X], axis=1)
            base = full[:, other]  # K x deg

            def f(t):
                r = sign * (t[:, None] - base) - meas
                r = r - TWO_PI * np.round(r / TWO_PI)
                return (r * r * w).sum(axis=1)

            t0 = X[:, j]
            a, b = t0 - widths[j], t0 + widths[j]
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            fc, fd = f(c), f(d)
            while np.max(b - a) > 1e-12:
                left = fc < fd
                b = np.where(left, d, b)
                a = np.where(left, a, c)
                nc = b - _GOLDEN * (b - a)
                nd = a + _GOLDEN * (b - a)
                c, d = nc, nd
                fc, fd = f(c), f(d)
            t = 0.5 * (a + b)
            keep = f(t) <= f(t0)
            newt = np.where(keep, t, t0)
            step = float(np.max(np.abs(newt - t0)))
            widths[j] = min(widths[j], max(4.0 * step, 1e-4))
            X[:, j] = newt
        cur = _cost_many(g, X)
        if np.max(prev - cur) < tol:
            prev = cur
            break
        prev = cur
    return wrap(X).reshape(K, n), prev


def grid_search_angles(g: PoseGraph, resolution: float = TWO_PI / 720, max_grid_points: int = 2_000_000,
                       keep: int = 16, random_starts: int = 100, seed: int = 0, budget: int | None = None):
    """Global minimum of the wrapped cost by dense grid plus polishing.

    The grid uses ``resolution`` when ``(2pi/resolution)**n`` fits in
    ``max_grid_points`` and the finest uniform grid that fits otherwise; it is
    used only while that grid has at least 12 points per axis. The ``keep``
    best grid points are polished. Larger problems fall back to polishing
    ``random_starts`` uniform random starts. Returns ``(theta, cost)``.
    """
    n = g.n
    if budget is not None and n > 12:
        raise BudgetExceeded(f"grid search over {n} angles is out of budget")
    per_axis = int(round(TWO_PI / resolution))
    per_axis = min(per_axis, int(math.floor(max_grid_points ** (1.0 / n) + 1e-9)))
    if per_axis >= 12:
        axis = -math.pi + TWO_PI * (np.arange(per_axis) + 1) / per_axis
        total = per_axis**n
        best_vals = np.full(0, np.inf)
        best_pts = np.zeros((0, n))
        chunk = 1 << 18
        for start in range(0, total, chunk):
            flat = np.arange(start, min(total, start + chunk))
            idx = np.stack(np.unravel_index(flat, (per_axis,) * n), axis=1)
            pts = axis[idx]
            vals = _cost_many(g, pts)
            sel = np.argsort(vals, kind="stable")[:keep]
            best_vals = np.concatenate([best_vals, vals[sel]])
            best_pts = np.concatenate([best_pts, pts[sel]])
            top = np.argsort(best_vals, kind="stable")[:keep]
            best_vals, best_pts = best_vals[top], best_pts[top]
        starts = best_pts
        bracket = 2.0 * TWO_PI / per_axis
    else:
        rng = np.random.default_rng(seed)
        starts = rng.uniform(-math.pi, math.pi, size=(random_starts, n))
        bracket = math.pi
    thetas, costs = polish(g, starts, bracket=bracket)
    i = int(np.argmin(costs))
    return thetas[i], float(costs[i])


def local_minima_costs(g: PoseGraph, starts: int = 50, seed: int = 0) -> np.ndarray:
    """Costs reached by polishing random starts; several distinct values show non-convexity."""
    rng = np.random.default_rng(seed)
    _, costs = polish(g, rng.uniform(-math.pi, math.pi, size=(starts, g.n)))
    return costs


def brute_force_ils(gamma_hat, covariance, lo, hi):
    """Plain loop over an integer box minimizing the Mahalanobis distance to ``gamma_hat``."""
    gamma_hat = np.asarray(gamma_hat, dtype=float)
    L = np.linalg.cholesky(np.asarray(covariance, dtype=float))
    best, best_val = None, math.inf
    for combo in itertools.product(*[range(int(a), int(b) + 1) for a, b in zip(lo, hi)]):
        z = np.linalg.solve(L, np.array(combo, dtype=float) - gamma_hat)
        val = float(z @ z)
        if val < best_val:
            best, best_val = combo, val
    return np.array(best, dtype=np.int64), best_val


# --- Monte Carlo harnesses ---------------------------------------------------


@dataclass(frozen=True)
class TrialConfig:
    """Random small instances for coverage trials."""

    family: str = "grid-walk"
    nodes: tuple = (10, 30)
    chords: tuple = (2, 6)
    sigma: tuple = (0.05, 0.3)
    grid: int = 4
    zero_noise: bool = False


@dataclass(frozen=True)
class CoverageResult:
    hits: int
    trials: int
    ci_low: float
    ci_high: float
    flagged: int = 0

    @property
    def fraction(self) -> float:
        return self.hits / self.trials


def monte_carlo_coverage(config: TrialConfig | None = None, alpha: float = 0.9, trials: int = 500, seed: int = 0,
                         basis_kind: str = "mcb") -> CoverageResult:
    """Fraction of trials whose true cycle integers land in the screened set."""
    from .cycles import cycle_basis
    from .estimator import gamma_estimator, integer_screening
    from .synth import random_trial_instance

    if trials < 1:
        raise ValueError("need at least one trial")
    config = config or TrialConfig()
    hits = flagged = 0
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        inst = random_trial_instance(rng, config)
        C = cycle_basis(inst.graph, basis_kind)
        screen = integer_screening(gamma_estimator(inst.graph, C), alpha, cap=None)
        hits += true_gamma(inst, C) in screen
        flagged += bool(screen.flags)
    ci = scipy.stats.binomtest(hits, trials).proportion_ci(confidence_level=0.95)
    return CoverageResult(hits, trials, float(ci.low), float(ci.high), flagged)


def wraparound_probability_check(sigma_cycle: float, trials: int = 10_000, seed: int = 0):
    """Empirical vs analytic probability that accumulated cycle noise exceeds pi."""
    rng = np.random.default_rng(seed)
    samples = rng.normal(0.0, sigma_cycle, size=trials)
    empirical = float(np.mean(np.abs(samples) > math.pi))
    analytic = math.erfc(math.pi / (sigma_cycle * math.sqrt(2.0))) if sigma_cycle > 0 else 0.0
    return empirical, analytic


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)
