"""
Gaussian likelihood, casting and simulation for differenced latent-component
models with arbitrary missing values.

The workhorse is a multivariate Levinson-Durbin (Whittle) recursion that
whitens several right-hand sides against a stationary block-Toeplitz
covariance.  Missing values are handled by generalized least squares for the
missing levels: the observed data enter the differenced series with zeros in
the missing slots and each missing level contributes a differenced unit
vector, whose coefficient is estimated with a flat prior.  The profile
quantities give the exact observed-data likelihood (up to a constant when the
differencing has unit roots) together with the optimal casts and their
error covariance.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.signal import lfilter

from .acf import class_filter, total_acvf, total_spectrum
from .model import regression_effect
from .params import psi_to_par
from .polyalg import toeplitz_from_acvf

__all__ = [
    "CastResult", "LikResult", "ExtractionTriple", "ld_whiten", "dl_midcast",
    "forecast", "lik", "lik_detail", "midcast", "whittle", "resid", "simulate",
    "cast_extract", "demean", "difference",
]


@dataclass
class CastResult:
    """
    Casts of missing or extended coordinates.

    filled : (T + 2 span, N) series with casts in the missing slots; row 0 is
        time -span.
    index : (m, 2) integer array of cast coordinates (row, series) into filled.
    cov : (m, m) casting error covariance.
    """
    filled: np.ndarray
    index: np.ndarray
    cov: np.ndarray
    span: int = 0

    @property
    def casts(self):
        return self.filled[self.index[:, 0], self.index[:, 1]]

    @property
    def variance(self):
        """Casting error variances shaped like `filled` (zero where observed)."""
        out = np.zeros(self.filled.shape)
        if self.index.size and self.cov is not None:
            out[self.index[:, 0], self.index[:, 1]] = np.diag(self.cov)
        return out

    def cov4(self):
        """Error covariance as a 4-array over (row, series, row, series)."""
        T, N = self.filled.shape
        out = np.zeros((T, N, T, N))
        if self.index.size:
            r, c = self.index[:, 0], self.index[:, 1]
            out[r[:, None], c[:, None], r[None, :], c[None, :]] = self.cov
        return out


@dataclass
class LikResult:
    divergence: float
    innovations: np.ndarray
    innovation_covs: np.ndarray


@dataclass
class ExtractionTriple:
    point: np.ndarray
    upper: np.ndarray
    lower: np.ndarray


# ---------------------------------------------------------------------------
# whitening

# partial autocorrelations below this size leave the predictor unchanged
_CONVERGED = 1e-17

def ld_whiten(acvf, X):
    """
    Whiten the columns of X against a stationary covariance.

    acvf : (>= T, N, N) autocovariances Gamma(h) = E[X_{t+h} X_t'].
    X : (T, N, r) stacked right-hand sides.

    Returns (W, logdet, V) with W[t] = chol(V_t)^{-1} e_t, where e_t is the
    one-step prediction error of X[t] from its past and V_t its covariance.
    logdet = log det of the NT x NT covariance matrix.
    """
    G = np.asarray(acvf, dtype=float)
    if G.ndim == 1:
        G = G[:, None, None]
    X = np.asarray(X, dtype=float)
    T, N, r = X.shape
    if G.shape[0] < T:
        G = np.concatenate([G, np.zeros((T - G.shape[0], N, N))])
    if N == 1:
        return _ld_whiten_scalar(G[:T, 0, 0], X[:, 0, :])
    W = np.empty_like(X)
    Vs = np.empty((T, N, N))
    A = np.zeros((T, N, N))
    Bk = np.zeros((T, N, N))
    V = G[0].copy()
    U = G[0].copy()
    logdet = 0.0
    for t in range(T):
        e = X[t] - np.einsum("kij,kjr->ir", A[:t], X[t - 1::-1]) if t else X[0]
        C = linalg.cholesky(V, lower=True)
        W[t] = linalg.solve_triangular(C, e, lower=True)
        Vs[t] = V
        logdet += 2.0 * np.log(np.diag(C)).sum()
        if t == T - 1:
            break
        D = G[t + 1] - np.einsum("kij,kjl->il", A[:t], G[t:0:-1])
        a = linalg.solve(U, D.T, assume_a="sym").T
        ab = linalg.solve(V, D, assume_a="sym").T
        if t > 0 and max(np.abs(a).max(), np.abs(ab).max()) < _CONVERGED:
            C = linalg.cholesky(V, lower=True)
            e = X[t + 1:].copy()
            for k in range(t):
                e -= np.einsum("ij,sjr->sir", A[k], X[t - k:T - k - 1])
            W[t + 1:] = np.einsum("ij,sjr->sir", linalg.solve_triangular(C, np.eye(N), lower=True), e)
            Vs[t + 1:] = V
            logdet += (T - t - 1) * 2.0 * np.log(np.diag(C)).sum()
            break
        Anew = A[:t] - np.einsum("ij,kjl->kil", a, Bk[:t][::-1])
        Bnew = Bk[:t] - np.einsum("ij,kjl->kil", ab, A[:t][::-1])
        A[:t], Bk[:t] = Anew, Bnew
        A[t], Bk[t] = a, ab
        V = V - a @ D.T
        U = U - ab @ D
        V = 0.5 * (V + V.T)
        U = 0.5 * (U + U.T)
    return W, logdet, Vs


def _ld_whiten_scalar(g, X):
    T, r = X.shape
    W = np.empty((T, 1, r))
    Vs = np.empty((T, 1, 1))
    a = np.zeros(T)
    v = g[0]
    logdet = 0.0
    for t in range(T):
        e = X[t] - a[:t] @ X[t - 1::-1] if t else X[0]
        if not v > 0:
            raise linalg.LinAlgError("innovation variance is not positive")
        W[t, 0] = e / np.sqrt(v)
        Vs[t] = v
        logdet += np.log(v)
        if t == T - 1:
            break
        d = g[t + 1] - a[:t] @ g[t:0:-1]
        phi = d / v
        if t > 0 and abs(phi) < _CONVERGED:
            # predictor has converged: the remaining steps are a fixed filter
            e = lfilter(np.r_[1.0, -a[:t]], [1.0], X, axis=0)[t + 1:]
            W[t + 1:, 0] = e / np.sqrt(v)
            Vs[t + 1:] = v
            logdet += (T - t - 1) * np.log(v)
            break
        a[:t] = a[:t] - phi * a[:t][::-1]
        a[t] = phi
        v = v - phi * d
    return W, logdet, Vs


# ---------------------------------------------------------------------------
# generalized least squares for missing levels

def _gls(acvf, delta, Y, need_cov=True):
    """
    Profile likelihood and casts for levels Y (T, N) with NaN gaps, given
    the autocovariances of delta(B) Y_t.
    """
    Y = np.asarray(Y, dtype=float)
    T, N = Y.shape
    d = np.asarray(delta, dtype=float)
    q = d.size - 1
    n = T - q
    if n <= 0:
        raise ValueError("sample shorter than the differencing order")
    miss = np.argwhere(np.isnan(Y))
    m = len(miss)
    y0 = np.where(np.isnan(Y), 0.0, Y)
    u = np.zeros((n, N))
    for i in range(q + 1):
        u += d[i] * y0[q - i:q - i + n]
    X = np.zeros((n, N, 1 + m))
    X[:, :, 0] = u
    for c, (t, j) in enumerate(miss):
        for i in range(q + 1):
            s = t - q + i
            if 0 <= s < n:
                X[s, j, 1 + c] = d[i]
    W, logdet, Vs = ld_whiten(acvf, X)
    a = W[:, :, 0].ravel()
    filled = Y.copy()
    cov = np.zeros((0, 0))
    if m:
        B = W[:, :, 1:].reshape(n * N, m)
        P = B.T @ B
        cf = linalg.cho_factor(P, lower=True)
        b = B.T @ a
        sol = linalg.cho_solve(cf, b)
        quad = a @ a - b @ sol
        logdet_p = 2.0 * np.log(np.diag(cf[0])).sum()
        filled[miss[:, 0], miss[:, 1]] = -sol
        if need_cov:
            cov = linalg.cho_solve(cf, np.eye(m))
            cov = 0.5 * (cov + cov.T)
        innov = (W[:, :, 0] - W[:, :, 1:] @ sol)
    else:
        quad = a @ a
        logdet_p = 0.0
        innov = W[:, :, 0]
    div = logdet + logdet_p + quad
    return (CastResult(filled, miss.reshape(-1, 2), cov if need_cov else None),
            LikResult(float(div), innov, Vs))


def _pad(data, span):
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if span:
        pad = np.full((span, data.shape[1]), np.nan)
        data = np.concatenate([pad, data, pad])
    return data


def dl_midcast(acvf, data, span=0, need_cov=True):
    """
    Casts and likelihood for a stationary series with missing values.

    `data` is (T, N) with NaN for missing coordinates; `span` extra missing
    rows are appended at both ends (aftcasts and forecasts).  Returns
    (CastResult, LikResult); the divergence is -2 log likelihood of the
    observed coordinates without the 2 pi constant.
    """
    Y = _pad(data, span)
    cast, lres = _gls(acvf, [1.0], Y, need_cov)
    cast.span = int(span)
    return cast, lres


def forecast(acvf, data, H):
    """Series extended by H rows of linear predictions."""
    Y = _pad(data, 0)
    ext = np.concatenate([Y, np.full((int(H), Y.shape[1]), np.nan)])
    return dl_midcast(acvf, ext, 0, need_cov=False)[0].filled


# ---------------------------------------------------------------------------
# model level

def demean(mdl, par, data, index=None):
    data = _pad(data, 0)
    return data - regression_effect(mdl, par.beta, index)


def difference(delta, Y):
    """delta(B) applied along time; NaN propagates; length T - deg(delta)."""
    d = np.asarray(delta, dtype=float)
    q = d.size - 1
    n = Y.shape[0] - q
    out = np.zeros((n,) + Y.shape[1:])
    for i in range(q + 1):
        out += d[i] * Y[q - i:q - i + n]
    return out


def lik_detail(psi, mdl, data, par=None):
    """LikResult for the model at psi (or at `par` when given)."""
    par = psi_to_par(psi, mdl) if par is None else par
    Y = demean(mdl, par, data)
    G = total_acvf(mdl, par, Y.shape[0] - mdl.delta.size)
    return _gls(G, mdl.delta, Y, need_cov=False)[1]


def lik(psi, mdl, data, par=None):
    """
    Gaussian divergence of the model at psi.

    Missing values are integrated out exactly; with complete data this is
    the likelihood of the differenced, regression-adjusted series.
    """
    return lik_detail(psi, mdl, data, par).divergence


def midcast(psi, mdl, data, span=0, need_cov=True, par=None):
    """
    Casts of the regression-adjusted levels at missing times and at `span`
    times before and after the sample.
    """
    par = psi_to_par(psi, mdl) if par is None else par
    Y = _pad(demean(mdl, par, data), span)
    G = total_acvf(mdl, par, Y.shape[0] - mdl.delta.size)
    cast, _ = _gls(G, mdl.delta, Y, need_cov)
    cast.span = int(span)
    return cast


def whittle(psi, mdl, data, par=None):
    """Whittle divergence over the Fourier frequencies of the differenced data."""
    par = psi_to_par(psi, mdl) if par is None else par
    Z = difference(mdl.delta, demean(mdl, par, data))
    if np.isnan(Z).any():
        raise ValueError("whittle requires complete data")
    n = Z.shape[0]
    lam = 2 * np.pi * np.arange(n) / n
    F = total_spectrum(mdl, par, lam)
    dft = np.fft.fft(Z, axis=0)
    sign, logdet = np.linalg.slogdet(F)
    quad = np.einsum("ji,jik,jk->j", dft.conj(),
                     np.linalg.solve(F, np.eye(mdl.N)[None]), dft).real / n
    return float(np.sum(logdet.real) + np.sum(quad))


def resid(psi, mdl, data, par=None):
    """
    Standardized innovations of the differenced, demeaned data and the model
    autocovariances.

    With missing values the differenced series has gaps; the innovations
    are then those of its observed coordinates (time-major order) and gaps
    are returned as NaN.
    """
    par = psi_to_par(psi, mdl) if par is None else par
    Z = difference(mdl.delta, demean(mdl, par, data))
    n, N = Z.shape
    G = total_acvf(mdl, par, n - 1)
    ok = ~np.isnan(Z)
    if ok.all():
        W, _, _ = ld_whiten(G, Z[:, :, None])
        return W[:, :, 0], G
    obs = ok.ravel()
    S = toeplitz_from_acvf(G, n)[np.ix_(obs, obs)]
    C = linalg.cholesky(S, lower=True)
    out = np.full(n * N, np.nan)
    out[obs] = linalg.solve_triangular(C, Z.ravel()[obs], lower=True)
    return out.reshape(n, N), G


# ---------------------------------------------------------------------------
# simulation

def _innovations(rng, gcd, n):
    scale = gcd.L * np.sqrt(np.clip(gcd.D, 0.0, None))
    return rng.standard_normal((n, scale.shape[1])) @ scale.T


def _varma_filter(ar, ma, eps):
    n, N = eps.shape
    x = np.zeros((n, N))
    ar_lags = [(j, -ar[j]) for j in range(1, ar.shape[0]) if np.any(ar[j])]
    ma_lags = [(j, ma[j]) for j in range(ma.shape[0]) if np.any(ma[j])]
    for t in range(n):
        acc = np.zeros(N)
        for j, Mj in ma_lags:
            if t >= j:
                acc += Mj @ eps[t - j]
        for j, Pj in ar_lags:
            if t >= j:
                acc += Pj @ x[t - j]
        x[t] = acc
    return x


def simulate(mdl, par, T=None, burn=100, seed=None):
    """
    Draw a sample path of the model.

    Each stationary core is generated by its causal recursion after `burn`
    warm-up steps, integrated through its differencing polynomial from zero
    initial values, and the regression mean is added.
    """
    T = mdl.T if T is None else int(T)
    rng = np.random.default_rng(seed)
    Y = np.zeros((T, mdl.N))
    for k, comp in enumerate(mdl.components):
        ar, ma, v = class_filter(comp, par.serial[k], mdl.N)
        eps = _innovations(rng, par.gcd[k], T + burn)
        if np.ndim(ar) == 3:
            core = _varma_filter(ar, ma, eps)
        else:
            core = lfilter(ma, ar, eps, axis=0) * np.sqrt(v)
        Y += lfilter([1.0], comp.delta, core[burn:], axis=0)
    return Y + regression_effect(mdl, par.beta, np.arange(T))


# ---------------------------------------------------------------------------

def cast_extract(data, cast, mdl, span, beta):
    """
    Series with casts inserted, regression effects (extrapolated trends
    included) added back, and bands of two casting-error standard deviations.
    """
    data = _pad(data, 0)
    T = data.shape[0]
    index = np.arange(-span, T + span)
    point = cast.filled + regression_effect(mdl, beta, index)
    obs = ~np.isnan(_pad(data, span))
    point[obs] = _pad(data, span)[obs]
    sd = np.sqrt(np.clip(cast.variance, 0.0, None))
    return ExtractionTriple(point, point + 2 * sd, point - 2 * sd)
