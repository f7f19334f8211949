import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from structsig.polyalg import (block_toeplitz, gcd_decompose, ma_acvf, poly_eval,
                               poly_mult, poly_mult_mat, poly_roots, poly_sum,
                               spec_fact, spec_fact_mvar, toeplitz_from_acvf,
                               ub_generator, unit_root_count)

coef = arrays(float, st.integers(1, 6), elements=st.floats(-3, 3))


@given(coef, coef, st.floats(-1.5, 1.5))
def test_mult_sum_evaluate(a, b, z):
    assert np.isclose(poly_eval(poly_mult(a, b), z), poly_eval(a, z) * poly_eval(b, z),
                      atol=1e-9)
    assert np.isclose(poly_eval(poly_sum(a, b), z), poly_eval(a, z) + poly_eval(b, z),
                      atol=1e-9)


def test_matrix_product_matches_pointwise():
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((3, 2, 2)), rng.standard_normal((2, 2, 2))
    z = 0.3 + 0.4j
    np.testing.assert_allclose(poly_eval(poly_mult_mat(A, B), z),
                               poly_eval(A, z) @ poly_eval(B, z), atol=1e-12)


def test_roots_and_unit_roots():
    r = np.sort(poly_roots([2.0, -3.0, 1.0]).real)
    np.testing.assert_allclose(r, [1.0, 2.0])
    d = poly_mult(poly_mult([1, -1], [1, -1]), [1, 0.5])
    assert unit_root_count(d) == 2
    assert unit_root_count([1, 1]) == 0


def test_ma_acvf_ma1():
    np.testing.assert_allclose(ma_acvf([1, 0.5], 2.0), [2.5, 1.0])


@pytest.mark.parametrize("method", ["roots", "innovations"])
def test_spec_fact_recovers_invertible_ma(method):
    ma = poly_mult([1, -0.4], [1, 0.3, 0.2])
    g = ma_acvf(ma, 1.7)
    th, v = spec_fact(g, method=method)
    np.testing.assert_allclose(th, ma, atol=1e-8)
    assert np.isclose(v, 1.7, rtol=1e-8)


def test_spec_fact_unit_root():
    th, v = spec_fact(ma_acvf([1, -1], 1.0))
    np.testing.assert_allclose(th, [1, -1], atol=1e-6)
    assert np.isclose(v, 1.0, rtol=1e-6)


def test_spec_fact_rejects_indefinite():
    with pytest.raises(ValueError):
        spec_fact([1.0, 0.8])


def test_spec_fact_mvar_reproduces_acvf():
    rng = np.random.default_rng(1)
    Th = np.stack([np.eye(2), 0.3 * rng.standard_normal((2, 2))])
    S = np.array([[1.0, 0.3], [0.3, 0.8]])
    G = np.stack([Th[0] @ S @ Th[0].T + Th[1] @ S @ Th[1].T, Th[1] @ S @ Th[0].T])
    ma, V = spec_fact_mvar(G)
    G2 = np.stack([ma[0] @ V @ ma[0].T + ma[1] @ V @ ma[1].T, ma[1] @ V @ ma[0].T])
    np.testing.assert_allclose(G2, G, atol=1e-9)


@settings(max_examples=50)
@given(st.integers(1, 5), st.integers(0, 10_000))
def test_gcd_reconstructs(N, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((N, N))
    S = B @ B.T + 0.1 * np.eye(N)
    g = gcd_decompose(S)
    np.testing.assert_allclose(g.sigma, S, atol=1e-10)
    assert np.all(g.D > 0)
    np.testing.assert_allclose(np.diag(g.L), 1.0)


def test_gcd_singular_rank():
    v = np.array([1.0, 2.0, -1.0])
    g = gcd_decompose(np.outer(v, v))
    assert np.count_nonzero(g.D) == 1
    np.testing.assert_allclose(g.sigma, np.outer(v, v), atol=1e-12)


def test_block_toeplitz_layout():
    G = np.arange(8.0).reshape(2, 2, 2)
    M = toeplitz_from_acvf(G, 3)
    np.testing.assert_array_equal(M[2:4, 0:2], G[1])
    np.testing.assert_array_equal(M[0:2, 2:4], G[1].T)
    np.testing.assert_array_equal(M[4:6, 0:2], 0)
    np.testing.assert_array_equal(block_toeplitz(np.array([1.0, 2.0, 3.0])),
                                  [[2, 1], [3, 2]])


@pytest.mark.parametrize("s", [7.0, 12.0, 52.1786, 365.25 / 7])
def test_ub_generator_matches_extended_precision_product(s):
    # a double-precision product of the quadratic factors drifts by ~1e-5
    # for fractional s near 52, so the reference is built at 50 digits
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 50
    n = int(np.floor(s / 2))
    ref = [mp.mpf(1)]
    for k in range(1, n + 1):
        f = [mp.mpf(1), -2 * mp.cos(2 * mp.pi * k / mp.mpf(repr(s))), mp.mpf(1)]
        out = [mp.mpf(0)] * (len(ref) + 2)
        for i, a in enumerate(ref):
            for j, b in enumerate(f):
                out[i + j] += a * b
        ref = out
    ref = np.array([float(x) for x in ref])
    np.testing.assert_allclose(ub_generator(s, n), ref, atol=1e-12 * np.abs(ref).max())
