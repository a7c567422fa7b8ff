import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mole2d.angles import (
    WrappedGaussian,
    circular_mean,
    regularizer,
    sample_wrapped,
    series_terms,
    split_count,
    split_large_variance_edges,
    wrap,
    wrapped_pdf,
)
from mole2d.errors import NonFinite
from mole2d.graph import build_graph

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_wrap_examples():
    assert wrap(0.0) == 0.0
    assert wrap(math.pi) == math.pi
    assert wrap(-math.pi) == math.pi
    assert wrap(1.5 * math.pi) == pytest.approx(-0.5 * math.pi, abs=1e-15)


def test_wrap_vectorized_and_nonfinite():
    out = wrap(np.array([0.0, 3 * math.pi, -3 * math.pi]))
    assert np.allclose(out, [0.0, math.pi, math.pi])
    with pytest.raises(NonFinite):
        wrap(float("nan"))
    with pytest.raises(NonFinite):
        regularizer(float("inf"))


def test_regularizer_examples():
    assert regularizer(0.0) == 0
    assert regularizer(1.5 * math.pi) == -1
    assert regularizer(-math.pi) == 1


@given(finite)
def test_wrap_range_and_regularizer(w):
    r = wrap(w)
    assert -math.pi < r <= math.pi
    k = regularizer(w)
    assert abs(w + 2 * math.pi * k - r) <= 1e-9 * max(1.0, abs(w))


@given(finite, st.integers(-5, 5))
def test_wrap_is_minimal_representative(w, k):
    assert abs(wrap(w)) <= abs(w + 2 * math.pi * k) + 1e-9 * max(1.0, abs(w))


def test_wrap_addition_homomorphism():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(-50, 50, size=(2, 10_000))
    lhs = wrap(wrap(a) + wrap(b))
    rhs = wrap(a + b)
    d = np.abs(lhs - rhs)
    d = np.minimum(d, 2 * math.pi - d)  # +-pi boundary may flip by rounding
    assert d.max() < 1e-12


def test_series_terms_bound():
    assert series_terms(0.1) == 2
    assert series_terms(3.0) == math.ceil((18 + math.pi) / (2 * math.pi)) + 1


@pytest.mark.parametrize("sigma", [0.05, 0.3, 1.0, 3.0])
def test_pdf_normalizes(sigma):
    x = np.linspace(-math.pi, math.pi, 10_000)
    assert abs(np.trapezoid(wrapped_pdf(x, sigma**2), x) - 1.0) <= 1e-6


def test_pdf_uniform_limit_and_peak():
    for x in (0.0, math.pi / 2, math.pi):
        assert abs(wrapped_pdf(x, 100.0) - 1 / (2 * math.pi)) < 1e-3
    # k = 0 term only; |k| >= 1 terms are below exp(-(2pi-0)^2/0.02)
    assert wrapped_pdf(0.0, 0.01) == pytest.approx(3.989422804014327, abs=1e-9)


@given(st.floats(-math.pi, math.pi), st.floats(0.01, 10.0))
def test_pdf_symmetric(x, var):
    assert wrapped_pdf(x, var) == pytest.approx(wrapped_pdf(-x, var), rel=1e-12, abs=1e-300)


def test_pdf_against_direct_series():
    # independent evaluation with a fixed generous number of terms
    x = np.linspace(-math.pi, math.pi, 101)
    for s in (0.2, 1.0, 2.5):
        ref = sum(np.exp(-0.5 * ((x + 2 * math.pi * k) / s) ** 2) for k in range(-40, 41)) / (s * math.sqrt(2 * math.pi))
        assert np.allclose(wrapped_pdf(x, s * s), ref, rtol=1e-12, atol=1e-15)


def test_quadratic_approximation_small_sigma():
    for sigma in (0.05, 0.2, math.pi / 9):
        x = np.linspace(-3 * sigma, 3 * sigma, 201)
        nll = -np.log(wrapped_pdf(x, sigma**2))
        quad = x**2 / (2 * sigma**2) + math.log(sigma * math.sqrt(2 * math.pi))
        assert np.max(np.abs(nll - quad)) <= 1e-6


def test_sampling_concentrates_and_centers():
    rng = np.random.default_rng(1)
    assert np.max(np.abs(sample_wrapped(1e-12, rng, 1000))) < 1e-4
    s = sample_wrapped(0.25, rng, 100_000)
    se = math.sqrt(np.var(np.sin(s)) / s.size)
    assert abs(circular_mean(s)) < 3 * se / np.mean(np.cos(s))


def test_convolution_closure_histogram():
    rng = np.random.default_rng(2)
    v1, v2 = 0.6, 1.3
    s = wrap(sample_wrapped(v1, rng, 200_000) + sample_wrapped(v2, rng, 200_000))
    edges = np.linspace(-math.pi, math.pi, 41)
    hist, _ = np.histogram(s, edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    expected = wrapped_pdf(centers, v1 + v2) * (edges[1] - edges[0]) * s.size
    chi2 = np.sum((hist - expected) ** 2 / expected)
    assert chi2 < 80  # 39 dof; p < 1e-4 beyond this


def test_wrapped_gaussian_type():
    w = WrappedGaussian(0.04)
    assert w.sigma == pytest.approx(0.2)
    assert w.pdf(0.0) == wrapped_pdf(0.0, 0.04)
    with pytest.raises(ValueError):
        WrappedGaussian(0.0)


def test_split_count_example():
    assert split_count(1.2**2, math.pi / 2) == 6
    assert split_count(0.01, math.pi / 2) == 1


def test_split_edges():
    g = build_graph(3, [(0, 1, 0.3, 1.44), (1, 2, -0.2, 0.01), (2, 0, 0.1, 0.01)])
    s = split_large_variance_edges(g)
    assert s.node_count == 3 + 5 and s.m == 3 + 5
    assert s.cyclomatic == g.cyclomatic
    sub = s.variances[np.isclose(s.variances, 0.24)]
    assert sub.size == 6
    # sub-measurements compose back to the original one
    chain = [e for e in range(s.m) if np.isclose(s.variances[e], 0.24)]
    assert wrap(s.measurements[chain].sum()) == pytest.approx(0.3)


def test_split_unchanged_when_small():
    g = build_graph(3, [(0, 1, 0.3, 0.01), (1, 2, -0.2, 0.01), (2, 0, 0.1, 0.01)])
    assert split_large_variance_edges(g) is g


@given(st.lists(st.floats(0.001, 4.0), min_size=3, max_size=6), st.floats(0.3, 2.0))
def test_split_preserves_cyclomatic(vars_, threshold):
    n = len(vars_)
    g = build_graph(n, [(i, (i + 1) % n, 0.1, v) for i, v in enumerate(vars_)])
    s = split_large_variance_edges(g, threshold)
    assert s.cyclomatic == g.cyclomatic
    assert np.all(3 * np.sqrt(s.variances) <= threshold + 1e-12)
