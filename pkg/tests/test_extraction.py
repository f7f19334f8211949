import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structsig.extraction import (FilterKernel, adhoc_extract, extract, frf, hi_to_low,
                                  publish_decomposition, read_kernel, signal_matrix,
                                  wk_coeffs, wk_extract, wk_mse, write_kernel, x11_filters)
from structsig.likelihood import midcast, simulate
from structsig.model import add_regressor, mean_init
from structsig.params import psi_to_par

from oracles import LLM_PSI, classic_2x12, llm


@pytest.fixture(scope="module")
def llm_sample():
    mdl = llm(80)
    return mdl, simulate(mdl, psi_to_par(LLM_PSI, mdl), 80, seed=12)


def _kriging_level(y, q, r):
    # mu_t = mu_0 + sum_{s<=t} eta_s with diffuse mu_0; BLUP by universal kriging
    T = y.size
    K = np.tril(np.ones((T, T)), -1)[:, :T - 1]
    Sy = q * K @ K.T + r * np.eye(T)
    Si = np.linalg.inv(Sy)
    one = np.ones(T)
    m0 = one @ Si @ y / (one @ Si @ one)
    return m0 + q * K @ K.T @ Si @ (y - m0)


def test_matrix_route_equals_kriging(llm_sample):
    mdl, y = llm_sample
    F, V = signal_matrix(y, LLM_PSI, mdl, [0])
    ref = _kriging_level(y[:, 0], 0.5, 2.0)
    np.testing.assert_allclose(F @ y[:, 0], ref, atol=1e-10 * np.abs(ref).max())


def test_matrices_are_complementary(llm_sample):
    mdl, y = llm_sample
    F1, V1 = signal_matrix(y, LLM_PSI, mdl, [0])
    F2, V2 = signal_matrix(y, LLM_PSI, mdl, [1])
    np.testing.assert_allclose(F1 + F2, np.eye(80), atol=1e-12)
    np.testing.assert_allclose(V1, V2, atol=1e-10)       # errors of s and Y - s coincide
    tri = extract(y, (F1, V1), mdl, LLM_PSI)
    assert np.all(tri.upper >= tri.point)


def test_wk_agrees_with_matrix_route(llm_sample):
    mdl, y = llm_sample
    wk = wk_extract(LLM_PSI, mdl, y, [0], window=50)
    mat = extract(y, signal_matrix(y, LLM_PSI, mdl, [0]), mdl, LLM_PSI)
    np.testing.assert_allclose(wk.point, mat.point, atol=1e-8 * y.std())
    np.testing.assert_allclose(wk.upper - wk.point, mat.upper - mat.point, rtol=1e-6)


def test_frf_llm_closed_form():
    mdl = llm(10)
    lam, U = frf(LLM_PSI, mdl, [0], grid=200)
    gain = np.abs(1 - np.exp(-1j * lam)) ** 2
    np.testing.assert_allclose(U[:, 0, 0].real, 0.5 / (0.5 + 2.0 * gain), atol=1e-14)


def test_wk_coeffs_symmetric_and_sum():
    kern, tail = wk_coeffs(LLM_PSI, llm(10), [0], length=60)
    a = kern.coeffs[:, 0, 0]
    np.testing.assert_allclose(a, a[::-1], atol=1e-15)
    assert abs(a.sum() - 1) < 1e-10 and tail < 1e-10
    assert wk_mse(LLM_PSI, llm(10), [0])[0, 0] > 0


def test_short_window_warns(llm_sample):
    mdl, y = llm_sample
    with pytest.warns(RuntimeWarning, match="window"):
        wk_extract(LLM_PSI, mdl, y, [0], window=3, need_mse=False)


def test_wk_with_missing_and_horizon(llm_sample):
    mdl, y = llm_sample
    z = y.copy()
    z[40:43] = np.nan
    tri = wk_extract(LLM_PSI, mdl, z, [0], window=50, horizon=4)
    assert tri.point.shape == (88, 1)
    width = (tri.upper - tri.lower)[:, 0]
    assert width[4 + 41] > width[4 + 20]
    assert width[0] > width[4 + 20] and width[-1] > width[4 + 60]


def test_adhoc_identity_kernel_returns_casts(llm_sample):
    mdl, y = llm_sample
    z = y.copy()
    z[10] = np.nan
    tri = adhoc_extract(LLM_PSI, mdl, z, FilterKernel(np.array([1.0]), 0))
    cast = midcast(LLM_PSI, mdl, z)
    np.testing.assert_allclose(tri.point, cast.filled, atol=1e-12)


# --- nonparametric kernels ------------------------------------------------------

def test_x11_monthly_trend_is_2x12():
    tr, se, sa = x11_filters(12)
    np.testing.assert_allclose(tr.coeffs, classic_2x12(), atol=1e-12)
    assert tr.shift == 6
    assert abs(se.coeffs.sum()) < 1e-12 and abs(sa.coeffs.sum() - 1) < 1e-12
    np.testing.assert_allclose(sa.coeffs, sa.coeffs[::-1], atol=1e-15)


def test_x11_monthly_seasonal_classical_composition():
    # for s = 12, p = 1 the seasonal average is (B^-12 + 1 + B^12)/3 applied
    # to the detrended series
    _, se, _ = x11_filters(12)
    s3 = np.zeros(25)
    s3[[0, 12, 24]] = 1 / 3
    detrend = -classic_2x12()
    detrend[6] += 1
    ref = np.convolve(s3, detrend)
    assert se.shift == 18
    np.testing.assert_allclose(se.coeffs, ref, atol=1e-14)


@pytest.mark.parametrize("s", [52.1786, 365.25 / 7, 7.5])
def test_fractional_trend_nulls(s):
    tr, se, sa = x11_filters(s)
    k = np.arange(1, int(np.floor(s / 2)) + 1)
    lam = 2 * np.pi * k / s
    dc = np.abs(tr.frf(np.array([0.0])))[0]
    assert np.abs(tr.frf(lam)).max() < 1e-8 * dc
    assert abs(tr.coeffs.sum() - 1) < 1e-12


def _filter(a, c, x):
    # y_t = sum_h a_{h+c} x_{t-h}, valid range only
    out = np.full(x.size, np.nan)
    m = a.size
    for t in range(x.size):
        idx = t - (np.arange(m) - c)
        if idx.min() >= 0 and idx.max() < x.size:
            out[t] = a @ x[idx]
    return out


def _filter_matrix(A, C, X):
    T, s = X.shape
    out = np.full((T, s), np.nan)
    for t in range(T):
        idx = t - (np.arange(A.shape[0]) - C)
        if idx.min() >= 0 and idx.max() < T:
            out[t] = sum(A[i] @ X[idx[i]] for i in range(A.shape[0]))
    return out


@pytest.mark.parametrize("m,c,s,C,M", [(7, 3, 7, 1, 3), (367, 183, 7, 27, 55)])
def test_hi_to_low_anchors(m, c, s, C, M):
    k = hi_to_low(FilterKernel(np.ones(m), c), s)
    assert (k.shift, k.m) == (C, M)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.integers(0, 29), st.integers(1, 9), st.integers(0, 2**31))
def test_hi_to_low_matches_scalar_filter(m, c, s, seed):
    c = c % m
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(m)
    x = rng.standard_normal(s * 40)
    K = hi_to_low(FilterKernel(a, c), s)
    Y = _filter_matrix(K.coeffs, K.shift, x.reshape(40, s)).ravel()
    ref = _filter(a, c, x)
    ok = ~np.isnan(Y)
    assert ok.sum() > 0
    np.testing.assert_allclose(Y[ok], ref[ok], atol=1e-12)


def test_kernel_frf_definition():
    k = FilterKernel(np.array([0.25, 0.5, 0.25]), 1)
    lam = np.linspace(0, np.pi, 7)
    np.testing.assert_allclose(k.frf(lam), 0.5 + 0.5 * np.cos(lam), atol=1e-15)


def test_kernel_csv_round_trip(tmp_path):
    tr, _, _ = x11_filters(12)
    write_kernel(tmp_path / "k.csv", tr)
    back = read_kernel(tmp_path / "k.csv")
    np.testing.assert_array_equal(back.coeffs, tr.coeffs)
    K = hi_to_low(tr, 3)
    write_kernel(tmp_path / "m.csv", K)
    np.testing.assert_array_equal(read_kernel(tmp_path / "m.csv").coeffs, K.coeffs)


# --- publication ---------------------------------------------------------------

def test_publish_identity_with_outlier_and_regressors():
    T = 90
    mdl = llm(T)
    ls = (np.arange(T) >= 50).astype(float)
    mdl = mean_init(mdl)
    mdl = add_regressor(mdl, 0, ls, "LS")
    psi = np.r_[LLM_PSI, 0.05, 3.0]
    y = simulate(mdl, psi_to_par(psi, mdl), T, seed=30)
    data = y.copy()
    original = np.full_like(y, np.nan)
    original[20] = y[20] + 8.0                    # additive outlier set to missing
    data[20] = np.nan
    data[60:62] = np.nan
    cast = midcast(psi, mdl, data, need_cov=False)
    pieces = {n: wk_extract(psi, mdl, data, [k], window=60, need_mse=False).point
              for k, n in enumerate(["trend", "irregular"])}
    out = publish_decomposition(data, cast.filled, mdl, psi_to_par(psi, mdl).beta, pieces,
                                original, "irregular", {"LS": "trend", "Trend": "trend"})
    total = out["trend"] + out["irregular"]
    obs = ~np.isnan(data)
    np.testing.assert_allclose(total[obs], data[obs], atol=1e-10)
    np.testing.assert_allclose(total[20], original[20], atol=1e-10)
    np.testing.assert_allclose(total[60:62], out["imputation"][60:62], atol=1e-12)
    assert out["cast_error"][20, 0] != 0 and out["cast_error"][60, 0] == 0


def test_publish_rejects_non_complementary():
    mdl = llm(10)
    f = np.ones((10, 1))
    with pytest.raises(ValueError, match="complementary"):
        publish_decomposition(f, f, mdl, np.zeros(0), {"a": f, "b": f})
