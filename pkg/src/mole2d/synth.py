"""Seeded synthetic pose graphs with known ground truth.

All randomness goes through ``numpy.random.default_rng`` (PCG64), seeded
explicitly, so a seed reproduces an instance bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import TWO_PI, wrap
from .oracle import GroundTruthInstance, TrialConfig, make_instance

CIRCLE = "circle"
GRID_WALK = "grid-walk"

# headings for moves east, north, west, south
_MOVES = ((1, 0), (0, 1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class SynthConfig:
    family: str = CIRCLE
    steps: int = 18
    rows: int = 10
    cols: int = 10
    chord_prob: float = 0.1
    sigma_theta: float = 0.2
    extra_sigma: float = 0.0
    seed: int = 0
    noise_mode: str = "fixed"
    sigma_xy: float = 0.05


def _translations(positions, theta_full, tails, heads, rng, sigma_xy):
    d = positions[heads] - positions[tails]
    c, s = np.cos(theta_full[tails]), np.sin(theta_full[tails])
    local = np.stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]], axis=1)
    if rng is not None and sigma_xy > 0:
        local = local + rng.normal(0.0, sigma_xy, size=local.shape)
    return local


def circle_graph(steps: int = 18, noise: float = 0.2, mode: str = "fixed", seed: int = 0,
                 variance: float | None = None) -> GroundTruthInstance:
    """Robot driving once around a regular polygon and closing the loop.

    Pose ``i`` has orientation ``wrap(2*pi*i/steps)``; edges join consecutive
    poses plus the closing edge ``steps-1 -> 0``. In ``fixed`` mode every edge
    gets exactly ``noise`` added; in ``gaussian`` mode ``noise`` is the
    standard deviation. Variances default to ``noise**2`` (0.01 when zero).
    """
    if steps < 3:
        raise ValueError("a circle needs at least three steps")
    if mode not in ("fixed", "gaussian"):
        raise ValueError(f"unknown noise mode {mode!r}")
    if variance is None:
        variance = noise * noise if noise > 0 else 0.01
    phi = TWO_PI * np.arange(steps) / steps
    theta_full = wrap(phi)
    tails = np.arange(steps)
    heads = (tails + 1) % steps
    rng = np.random.default_rng(seed)
    if mode == "fixed":
        eps = np.full(steps, float(noise))
    else:
        eps = rng.normal(0.0, noise, size=steps)
    radius = 0.5 / math.sin(math.pi / steps)
    positions = np.stack([radius * np.sin(phi), radius * (1.0 - np.cos(phi))], axis=1)
    trans = _translations(positions, theta_full, tails, heads, None, 0.0)
    return make_instance(steps, tails, heads, theta_full[1:], eps, variance, positions, trans, 0.05)


def _walk(rng, rows, cols, steps):
    """Random walk over grid cells with 90 degree turns; returns cells and headings."""
    cell = (0, 0)
    heading = 0
    cells = [cell]
    headings = [0]
    for _ in range(steps):
        options = []
        for turn, weight in ((0, 0.6), (1, 0.2), (3, 0.2), (2, 0.02)):
            h = (heading + turn) % 4
            nx_, ny_ = cell[0] + _MOVES[h][0], cell[1] + _MOVES[h][1]
            if 0 <= nx_ < cols and 0 <= ny_ < rows:
                options.append((h, (nx_, ny_), weight))
        w = np.array([o[2] for o in options])
        h, cell, _ = options[int(rng.choice(len(options), p=w / w.sum()))]
        heading = h
        cells.append(cell)
        headings.append(h)
    return cells, headings


def _walk_instance(rng, cells, headings, closures, sigma_theta, sigma_xy, noise=True):
    N = len(cells)
    tails = list(range(N - 1)) + [c[0] for c in closures]
    heads = list(range(1, N)) + [c[1] for c in closures]
    tails, heads = np.array(tails), np.array(heads)
    theta_full = wrap(np.array(headings, dtype=float) * (math.pi / 2))
    positions = np.array(cells, dtype=float)
    eps = rng.normal(0.0, sigma_theta, size=len(tails)) if noise else np.zeros(len(tails))
    trans = _translations(positions, theta_full, tails, heads, rng, sigma_xy)
    var = sigma_theta**2 if sigma_theta > 0 else 0.01
    return make_instance(N, tails, heads, theta_full[1:], eps, var, positions, trans, sigma_xy)


def grid_walk(rows: int = 10, cols: int = 10, chord_prob: float = 0.1, sigma_theta: float = 0.1, seed: int = 0,
              steps: int | None = None, sigma_xy: float = 0.05) -> GroundTruthInstance:
    """Manhattan-world trajectory with loop closures at revisited cells.

    Every revisit of a cell adds, with probability ``chord_prob``, an edge
    from each earlier (non-adjacent) visit of that cell. Orientation noise is
    Gaussian with standard deviation ``sigma_theta``.
    """
    if rows * cols < 4:
        raise ValueError("grid needs at least four cells")
    if not 0.0 <= chord_prob <= 1.0:
        raise ValueError("chord_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    steps = 2 * rows * cols if steps is None else steps
    cells, headings = _walk(rng, rows, cols, steps)
    visits = {}
    closures = []
    for j, c in enumerate(cells):
        for i in visits.get(c, []):
            if i < j - 1 and rng.random() < chord_prob:
                closures.append((i, j))
        visits.setdefault(c, []).append(j)
    return _walk_instance(rng, cells, headings, closures, sigma_theta, sigma_xy)


def random_trial_instance(rng: np.random.Generator, config: TrialConfig | None = None) -> GroundTruthInstance:
    """Small grid walk with a prescribed number of loop closures."""
    config = config or TrialConfig()
    for _ in range(100):
        N = int(rng.integers(config.nodes[0], config.nodes[1] + 1))
        want = int(rng.integers(config.chords[0], config.chords[1] + 1))
        cells, headings = _walk(rng, config.grid, config.grid, N - 1)
        pairs = [(i, j) for j in range(N) for i in range(j - 1) if cells[i] == cells[j]]
        if len(pairs) >= want:
            break
    else:
        raise RuntimeError("could not draw a walk with enough loop closures")
    pick = sorted(rng.choice(len(pairs), size=want, replace=False).tolist())
    closures = [pairs[p] for p in pick]
    sigma = float(rng.uniform(*config.sigma))
    return _walk_instance(rng, cells, headings, closures, sigma, 0.05, noise=not config.zero_noise)


def random_connected_instance(rng: np.random.Generator, n: int, extra_edges: int, sigma=(0.05, 0.3),
                              noise: bool = True) -> GroundTruthInstance:
    """Odometric chain ``0 -> 1 -> ... -> n`` plus random extra edges.

    Orientations are uniform on the circle; each edge gets its own standard
    deviation drawn from ``sigma`` and Gaussian noise of that size.
    """
    if n < 1:
        raise ValueError("need at least one non-reference node")
    N = n + 1
    tails = list(range(n))
    heads = list(range(1, N))
    for _ in range(extra_edges):
        a, b = rng.choice(N, size=2, replace=False).tolist()
        tails.append(a)
        heads.append(b)
    m = len(tails)
    sig = rng.uniform(sigma[0], sigma[1], size=m)
    theta = rng.uniform(-math.pi, math.pi, size=n)
    eps = rng.normal(0.0, sig) if noise else np.zeros(m)
    return make_instance(N, tails, heads, theta, eps, sig**2)


def inject_orientation_noise(inst, extra_sigma: float, seed: int = 0):
    """Add independent Gaussian orientation noise to every edge.

    Accepts a GroundTruthInstance (noise and truth updated) or a bare
    PoseGraph (only measurements and variances change).
    """
    if extra_sigma < 0:
        raise ValueError("extra_sigma must be non-negative")
    if extra_sigma == 0:
        return inst
    rng = np.random.default_rng(seed)
    if isinstance(inst, GroundTruthInstance):
        g = inst.graph
        extra = rng.normal(0.0, extra_sigma, size=g.m)
        return make_instance(g.node_count, g.tails, g.heads, inst.theta_true, inst.noise + extra,
                             g.variances + extra_sigma**2, inst.positions, inst.translations, inst.translation_sigma)
    g = inst
    extra = rng.normal(0.0, extra_sigma, size=g.m)
    return g.with_measurements(wrap(g.measurements + extra), g.variances + extra_sigma**2)


def make(config: SynthConfig) -> GroundTruthInstance:
    if config.family == CIRCLE:
        inst = circle_graph(config.steps, config.sigma_theta, config.noise_mode, config.seed)
    elif config.family == GRID_WALK:
        inst = grid_walk(config.rows, config.cols, config.chord_prob, config.sigma_theta, config.seed,
                         sigma_xy=config.sigma_xy)
    else:
        raise ValueError(f"unknown family {config.family!r}")
    if config.extra_sigma > 0:
        inst = inject_orientation_noise(inst, config.extra_sigma, config.seed + 1)
    return inst
