"""Circular arithmetic on (-pi, +pi] and the wrapped Gaussian noise model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFinite

TWO_PI = 2.0 * math.pi


def _check_finite(omega):
    if not np.all(np.isfinite(omega)):
        raise NonFinite("angle must be finite")


def _wrap_with_k(omega):
    omega = np.asarray(omega, dtype=float)
    _check_finite(omega)
    k = np.floor((math.pi - omega) / TWO_PI)
    out = omega + TWO_PI * k
    # rounding can leave the result a hair outside the half-open interval
    low = out <= -math.pi
    out = np.where(low, out + TWO_PI, out)
    k = np.where(low, k + 1, k)
    high = out > math.pi
    out = np.where(high, out - TWO_PI, out)
    k = np.where(high, k - 1, k)
    return out, k.astype(np.int64)


def wrap(omega):
    """Map angles to (-pi, +pi]. Accepts scalars or arrays."""
    out, _ = _wrap_with_k(omega)
    if out.ndim == 0:
        return float(out)
    return out


def regularizer(omega):
    """Integer ``k`` such that ``wrap(omega) == omega + 2*pi*k``."""
    _, k = _wrap_with_k(omega)
    if k.ndim == 0:
        return int(k)
    return k


def angle_diff(a, b):
    """Wrapped difference ``a - b``."""
    return wrap(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def series_terms(sigma: float) -> int:
    """Half-width K of the truncated wrapped-Gaussian series."""
    return int(math.ceil((6.0 * sigma + math.pi) / TWO_PI)) + 1


@dataclass(frozen=True)
class WrappedGaussian:
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def pdf(self, x):
        return wrapped_pdf(x, self.variance)

    def sample(self, rng, size=None):
        return sample_wrapped(self.variance, rng, size)


def wrapped_pdf(x, variance: float):
    """Density of the wrapped Gaussian with zero mode at ``x``."""
    sigma = math.sqrt(variance)
    K = series_terms(sigma)
    x = np.asarray(x, dtype=float)
    shifts = TWO_PI * np.arange(-K, K + 1)
    z = (x[..., None] + shifts) / sigma
    dens = np.exp(-0.5 * z * z).sum(axis=-1) / (sigma * math.sqrt(TWO_PI))
    if dens.ndim == 0:
        return float(dens)
    return dens


def sample_wrapped(variance: float, rng: np.random.Generator, size=None):
    """Draw ``wrap(z)`` with ``z ~ N(0, variance)``."""
    z = rng.normal(0.0, math.sqrt(variance), size=size)
    return wrap(z)


def circular_mean(samples) -> float:
    s = np.asarray(samples, dtype=float)
    return math.atan2(np.sin(s).mean(), np.cos(s).mean())


def split_count(variance: float, threshold: float) -> int:
    """Smallest q with ``3*sigma/sqrt(q) <= threshold``."""
    sigma = math.sqrt(variance)
    if 3.0 * sigma <= threshold:
        return 1
    q = int(math.ceil((3.0 * sigma / threshold) ** 2))
    # guard against ceil landing one short/long through rounding
    while 3.0 * sigma / math.sqrt(q) > threshold:
        q += 1
    while q > 1 and 3.0 * sigma / math.sqrt(q - 1) <= threshold:
        q -= 1
    return q


def split_large_variance_edges(g, threshold: float = math.pi / 2):
    """Subdivide edges whose 3-sigma spread exceeds ``threshold``.

    An offending edge becomes a serial chain of ``q`` sub-edges through
    ``q - 1`` new nodes; each sub-edge carries variance ``sigma^2 / q`` and
    measurement ``wrap(delta / q)``. New nodes are appended after the original
    ones, so the first ``g.node_count`` orientations keep their meaning.
    """
    from .graph import build_graph

    qs = [split_count(v, threshold) for v in g.variances]
    if all(q == 1 for q in qs):
        return g
    next_node = g.node_count
    edges = []
    for e, q in enumerate(qs):
        t, h = int(g.tails[e]), int(g.heads[e])
        d, v = float(g.measurements[e]), float(g.variances[e])
        if q == 1:
            edges.append((t, h, d, v))
            continue
        chain = [t] + list(range(next_node, next_node + q - 1)) + [h]
        next_node += q - 1
        sub = wrap(d / q)
        for a, b in zip(chain[:-1], chain[1:]):
            edges.append((a, b, sub, v / q))
    return build_graph(next_node, edges)
