"""Numbered acceptance checks, each with a wall-clock budget.

Every check returns a :class:`CriterionResult`; ``passed`` covers both the
numerical condition and the runtime budget. Criterion 10 needs a
user-supplied INTEL file (path in ``MOLE2D_INTEL``) and never gates.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .angles import TWO_PI, sample_wrapped, wrap, wrapped_pdf
from .cycles import FCB_MST, FCB_ODO, MCB, basis_weight, cycle_basis
from .errors import CapExceeded
from .estimator import _Context, cost, gamma_estimator, ils_box_search, integer_screening, ml_estimate, mole2d
from .graph import incidence_matrices
from .linalg import projection_identity_residual
from .oracle import (
    TrialConfig,
    binomial_se,
    grid_search_angles,
    monte_carlo_coverage,
    true_gamma,
    wraparound_probability_check,
)
from .synth import circle_graph, grid_walk, random_connected_instance

INTEL_ENV = "MOLE2D_INTEL"


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float | None = None
    gating: bool = True
    skipped: bool = False
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        if self.skipped:
            status = "SKIP"
        else:
            status = "PASS" if self.passed else "FAIL"
        budget = f"/{self.budget:g}s" if self.budget else ""
        tag = "" if self.gating else " (non-gating)"
        return f"[{status}] criterion {self.number:2d} {self.name}{tag}: {self.detail} [{self.seconds:.2f}s{budget}]"


def _timed(number, name, budget, body, gating=True):
    start = time.perf_counter()
    ok, detail, values = body()
    elapsed = time.perf_counter() - start
    skipped = ok is None
    within = budget is None or elapsed < budget
    return CriterionResult(number, name, bool(ok) and within and not skipped, detail, elapsed, budget,
                           gating, skipped, values)


def _mcb_trace(g, kind):
    C = cycle_basis(g, kind)
    return float(np.trace(gamma_estimator(g, C).covariance)), basis_weight(C, g.variances)


# --- 1 ---------------------------------------------------------------------


def projection_identity(graphs: int = 100, seed: int = 0, max_nodes: int = 30):
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        rows = []
        for _ in range(graphs):
            n = int(rng.integers(2, max_nodes + 1))
            extra = int(rng.integers(1, n + 2))
            inst = random_connected_instance(rng, n, extra, sigma=(0.05, 1.0))
            g = inst.graph
            _, A = incidence_matrices(g)
            for kind in (FCB_ODO, FCB_MST, MCB):
                r = projection_identity_residual(A, cycle_basis(g, kind).toarray(), g.variances)
                rows.append((n, g.cyclomatic, kind, r))
                worst = max(worst, r)
        return worst < 1e-9, f"max residual {worst:.2e} over {len(rows)} (graph, basis) pairs", {"rows": rows}

    return _timed(1, "projection identity", 10.0, body)


# --- 2 ---------------------------------------------------------------------


def separability(instances: int = 10, pairs: int = 100, seed: int = 1):
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(instances):
            inst = random_connected_instance(rng, int(rng.integers(3, 15)), int(rng.integers(1, 6)))
            g = inst.graph
            C = cycle_basis(g, MCB)
            ctx = _Context(g, C)
            _, A = incidence_matrices(g)
            Cd = C.toarray().astype(float)
            L = (A / g.variances) @ A.T
            S = (Cd * g.variances) @ Cd.T
            diffs, scale = [], 0.0
            for _ in range(pairs):
                theta = rng.uniform(-4 * math.pi, 4 * math.pi, size=g.n)
                k = rng.integers(-3, 4, size=g.m)
                r = A.T @ theta - g.measurements + TWO_PI * k
                full = float(r @ (r / g.variances))
                dt = theta - ctx.theta_given_k(k)
                c = TWO_PI * (Cd @ k) - Cd @ g.measurements
                split = float(dt @ L @ dt + c @ np.linalg.solve(S, c))
                diffs.append(full - split)
                scale = max(scale, abs(full))
            spread = (max(diffs) - min(diffs)) / scale
            worst = max(worst, spread)
        return worst < 1e-8, f"max relative spread of the difference {worst:.2e}", {"worst": worst}

    return _timed(2, "separability", 5.0, body)


# --- 3 ---------------------------------------------------------------------


def ml_oracle(instances: int = 50, seed: int = 2):
    def body():
        rng = np.random.default_rng(seed)
        worst, ties, below = -math.inf, 0, 0
        for _ in range(instances):
            n = int(rng.integers(2, 6))
            inst = random_connected_instance(rng, n, int(rng.integers(1, 4)), sigma=(0.05, 0.3))
            g = inst.graph
            C = cycle_basis(g, MCB)
            est = gamma_estimator(g, C)
            _, best, second = ils_box_search(est)
            ties += second - best <= 1e-12
            h = ml_estimate(g, C, est)
            _, ref = grid_search_angles(g)
            worst = max(worst, h.cost - ref)
            below += ref < h.cost - 1e-6
        ok = worst <= 1e-6 and ties == 0
        detail = f"max(ml - grid) = {worst:.2e}, ties {ties}, grid strictly better on {below}/{instances}"
        return ok, detail, {"worst": worst, "ties": ties}

    return _timed(3, "ML equals global optimum", 120.0, body)


# --- 4 ---------------------------------------------------------------------


def coverage(trials: int = 500, seed: int = 3):
    def body():
        lo90 = 0.9 - 3 * binomial_se(0.9, trials)
        lo99 = 0.99 - 3 * binomial_se(0.99, trials)
        r90 = monte_carlo_coverage(TrialConfig(), 0.9, trials, seed)
        r99 = monte_carlo_coverage(TrialConfig(), 0.99, trials, seed + 1)
        ok = r90.fraction >= lo90 and r99.fraction >= lo99
        detail = (f"alpha 0.9: {r90.fraction:.3f} (need {lo90:.3f}); "
                  f"alpha 0.99: {r99.fraction:.3f} (need {lo99:.3f})")
        return ok, detail, {"0.9": r90, "0.99": r99}

    return _timed(4, "screening coverage", 120.0, body)


# --- 5 ---------------------------------------------------------------------


def basis_optimality(instances: int = 100, seed: int = 4):
    def body():
        rng = np.random.default_rng(seed)
        violations, mismatch, mst_le_odo = 0, 0.0, 0
        for _ in range(instances):
            inst = random_connected_instance(rng, int(rng.integers(3, 30)), int(rng.integers(1, 12)))
            g = inst.graph
            traces = {}
            for kind in (MCB, FCB_MST, FCB_ODO):
                tr, w = _mcb_trace(g, kind)
                traces[kind] = tr
                mismatch = max(mismatch, abs(tr - w / TWO_PI**2))
            violations += traces[MCB] > max(traces[FCB_MST], traces[FCB_ODO]) + 1e-12
            mst_le_odo += traces[FCB_MST] <= traces[FCB_ODO] + 1e-12
        ok = violations == 0 and mismatch <= 1e-12
        detail = (f"mcb above an fcb on {violations}/{instances}; max |trace - weight/4pi^2| {mismatch:.1e}; "
                  f"fcb-mst <= fcb-odo on {mst_le_odo}/{instances}")
        return ok, detail, {"violations": violations, "mismatch": mismatch}

    return _timed(5, "basis optimality", 30.0, body)


# --- 6 ---------------------------------------------------------------------


def distribution(draws: int = 2000, seed: int = 5):
    def body():
        rng = np.random.default_rng(seed)
        inst = random_connected_instance(rng, 8, 4, sigma=(0.1, 0.3))
        g = inst.graph
        C = cycle_basis(g, MCB)
        _, A = incidence_matrices(g)
        target = np.linalg.inv((A / g.variances) @ A.T)
        full = np.concatenate([[0.0], inst.theta_true])
        rel = full[g.heads] - full[g.tails]
        sig = np.sqrt(g.variances)
        ctx = _Context(g, C)
        err = np.empty((draws, g.n))
        for d in range(draws):
            eps = rng.normal(0.0, sig)
            meas = wrap(rel + eps)
            k0 = np.floor((math.pi - rel - eps) / TWO_PI)
            gamma0 = np.rint(C.matrix @ k0).astype(np.int64)
            k = ctx.pinv.apply(gamma0)
            theta = ctx.solver.solve(meas - TWO_PI * k)
            err[d] = wrap(theta - inst.theta_true)
        cov = np.cov(err, rowvar=False)
        frob = np.linalg.norm(cov - target) / np.linalg.norm(target)
        se = np.sqrt(np.diag(cov) / draws)
        z = np.max(np.abs(err.mean(axis=0)) / se)
        ok = frob < 0.15 and z < 3.0
        return ok, f"covariance rel. Frobenius error {frob:.3f}; max |mean|/se {z:.2f}", {"frob": frob, "z": z}

    return _timed(6, "estimator distribution", 60.0, body)


# --- 7 ---------------------------------------------------------------------


def counterexample():
    def body():
        inst = circle_graph(18, 0.2, "fixed")
        g = inst.graph
        C = cycle_basis(g, MCB)
        est = gamma_estimator(g, C)
        g_true = int(true_gamma(inst, C)[0])
        ml = ml_estimate(g, C, est)
        g_ml = int(ml.gamma[0])
        ctx = _Context(g, C)
        h_true = ctx.hypothesis([g_true])
        h_ml = ctx.hypothesis([g_ml])

        def rmse(h):
            return float(np.sqrt(np.mean(wrap(h.theta_wrapped - inst.theta_true) ** 2)))

        var = float(g.variances[0])
        raw_true, raw_ml = var * h_true.cost, var * h_ml.cost
        exact = abs(raw_ml - 0.4) <= 1e-2 and abs(raw_true - 0.72) <= 1e-2
        ok = (g_true == 1 and g_ml == 2 and h_ml.cost < h_true.cost and rmse(h_true) < rmse(h_ml) and exact)
        detail = (f"gamma_true {g_true}, gamma_ml {g_ml}; costs {h_ml.cost:.4f} < {h_true.cost:.4f} "
                  f"(unweighted {raw_ml:.4f} / {raw_true:.4f}); rmse {rmse(h_true):.3f} < {rmse(h_ml):.3f}")
        return ok, detail, {"gamma_hat": float(est.gamma_hat[0]), "var": float(est.covariance[0, 0])}

    return _timed(7, "wraparound counterexample", 1.0, body)


# --- 8 ---------------------------------------------------------------------


def wraparound(trials: int = 10_000, seed: int = 6):
    def body():
        emp, ana = wraparound_probability_check(2.0, trials, seed)
        se = binomial_se(ana, trials)
        ok = abs(emp - ana) <= 3 * se and abs(ana - 0.1161) < 5e-4
        return ok, f"empirical {emp:.4f} vs analytic {ana:.4f} (3 se = {3 * se:.4f})", {"emp": emp, "ana": ana}

    return _timed(8, "wraparound probability", 1.0, body)


# --- 9 ---------------------------------------------------------------------


def basis_effect(seed: int = 0, large_steps: int = 3900):
    def body():
        inst = grid_walk(20, 20, 0.1, 0.2, seed=seed)
        g = inst.graph
        sizes = {}
        for kind in (MCB, FCB_ODO):
            sizes[kind] = integer_screening(gamma_estimator(g, cycle_basis(g, kind)), 0.99, cap=None).size
        big = grid_walk(30, 30, 0.13, 0.2, seed=1, steps=large_steps).graph
        start = time.perf_counter()
        try:
            res = mole2d(big, 0.99, MCB)
            gamma_count = len(res)
        except CapExceeded as exc:
            gamma_count = exc.hypotheses.size
        elapsed = time.perf_counter() - start
        ok = sizes[MCB] <= sizes[FCB_ODO] and elapsed < 60.0
        odo = sizes[FCB_ODO]
        odo_text = str(odo) if odo < 10**6 else f"~1e{len(str(odo)) - 1}"
        detail = (f"|Gamma| mcb {sizes[MCB]} <= fcb-odo {odo_text} (l={g.cyclomatic}); "
                  f"m={big.m} end-to-end {elapsed:.1f}s with {gamma_count} hypotheses")
        return ok, detail, {"sizes": sizes, "large_seconds": elapsed}

    return _timed(9, "basis effect and scale", None, body)


# --- 10 --------------------------------------------------------------------


def real_data(path: str | None = None):
    def body():
        from .io import read, write_bootstrapped, parse_g2o

        p = path or os.environ.get(INTEL_ENV)
        if not p or not os.path.exists(p):
            return None, f"no file (set {INTEL_ENV})", {}
        g2 = read(p)
        g = g2.orientation
        dims = (g.node_count == 1228 or g.n == 1228) and g.m == 1505
        res = mole2d(g, 0.99, MCB)
        back = parse_g2o(write_bootstrapped(g2, res.best, "odometry"))
        theta = back.poses[1:, 2] - back.poses[0, 2]
        same = abs(cost(g, wrap(theta)) - res.best.cost) <= 1e-9 * max(1.0, res.best.cost)
        ok = dims and len(res) == 1 and same
        detail = f"nodes {g.node_count}, m {g.m}, l {g.cyclomatic}, |Theta| {len(res)}, bootstrap cost match {same}"
        return ok, detail, {}

    return _timed(10, "real-data spot check", None, body, gating=False)


# --- 11 --------------------------------------------------------------------


def wrapped_model(samples: int = 100_000, seed: int = 8):
    def body():
        x = np.linspace(-math.pi, math.pi, 10_000)
        norms = {}
        for s in (0.05, 0.3, 1.0, 3.0):
            norms[s] = float(np.trapezoid(wrapped_pdf(x, s * s), x))
        norm_ok = all(abs(v - 1.0) <= 1e-6 for v in norms.values())
        rng = np.random.default_rng(seed)
        v1, v2 = 0.5**2, 1.1**2
        summed = wrap(sample_wrapped(v1, rng, samples) + sample_wrapped(v2, rng, samples))
        direct = sample_wrapped(v1 + v2, rng, samples)
        worst = 0.0
        for k in (1, 2, 3):
            expected = math.exp(-0.5 * k * k * (v1 + v2))
            for a, ref in ((np.cos(k * summed), expected), (np.sin(k * summed), 0.0),
                           (np.cos(k * direct), expected), (np.sin(k * direct), 0.0)):
                se = a.std() / math.sqrt(samples)
                worst = max(worst, abs(a.mean() - ref) / se)
        ok = norm_ok and worst < 4.0
        norm_err = max(abs(v - 1.0) for v in norms.values())
        detail = f"max normalization error {norm_err:.1e}; max trig-moment z {worst:.2f}"
        return ok, detail, {"norms": norms, "z": worst}

    return _timed(11, "wrapped Gaussian model", 10.0, body)


CRITERIA = {
    1: projection_identity,
    2: separability,
    3: ml_oracle,
    4: coverage,
    5: basis_optimality,
    6: distribution,
    7: counterexample,
    8: wraparound,
    9: basis_effect,
    10: real_data,
    11: wrapped_model,
}

SUITES = {
    "identity": (1,),
    "separability": (2,),
    "oracle": (3,),
    "coverage": (4,),
    "basis": (5, 9),
    "distribution": (6,),
    "counterexample": (7,),
    "wraparound": (8,),
    "realdata": (10,),
    "wrapped": (11,),
    "all": tuple(CRITERIA),
}


def run(numbers=None, **overrides):
    """Run the selected criteria and return their results in order."""
    numbers = CRITERIA if numbers is None else numbers
    out = []
    for n in numbers:
        fn = CRITERIA[n]
        kwargs = {k: v for k, v in overrides.items() if k in fn.__code__.co_varnames[: fn.__code__.co_argcount]}
        out.append(fn(**kwargs))
    return out
