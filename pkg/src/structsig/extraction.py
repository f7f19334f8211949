"""
Signal extraction.

Two routes are provided.  The matrix route (`signal_matrix`, `extract`)
gives the exact finite-sample estimate of a sum of latent components and
its error covariance, for complete samples of moderate length.  The filter
route (`wk_extract`, `adhoc_extract`) patches the series with casts, extends
it at both ends, and applies a truncated Wiener-Kolmogorov or user-supplied
filter; its error covariance combines the bi-infinite filter error with the
casting error carried through the filter.

Filters follow the convention Upsilon(B) = sum_h Upsilon_h B^h, so the
output at t is sum_h Upsilon_h Y_{t-h}.  A `FilterKernel` stores
coefficients a_0..a_{m-1} with shift c: a_i is the coefficient of lag
h = i - c.
"""
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .acf import _filter_acvf, class_acvf, class_spectrum
from .likelihood import ExtractionTriple, _pad, demean, midcast
from .params import ParamSet, psi_to_par
from .polyalg import poly_eval, poly_mult, toeplitz_from_acvf, ub_generator

__all__ = [
    "FilterKernel", "signal_matrix", "extract", "frf", "wk_coeffs", "wk_mse",
    "wk_extract", "adhoc_extract", "hi_to_low", "x11_filters",
    "publish_decomposition", "write_kernel", "read_kernel", "apply_kernel",
]

TAIL_WARN = 1e-4


@dataclass(frozen=True)
class FilterKernel:
    """Coefficients (m,) or (m, N, N); coeffs[i] multiplies lag i - shift."""
    coeffs: np.ndarray
    shift: int

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise ValueError("kernel needs at least one coefficient")
        if not 0 <= self.shift < len(self.coeffs):
            raise ValueError("shift must index a coefficient")

    @property
    def m(self):
        return len(self.coeffs)

    @property
    def lags(self):
        return np.arange(self.m) - self.shift

    def matrix(self, N):
        """Coefficients as (m, N, N) matrices; scalars act on every series."""
        a = np.asarray(self.coeffs, dtype=float)
        if a.ndim == 1:
            return a[:, None, None] * np.eye(N)[None]
        return a

    def frf(self, lam):
        """Frequency response sum_i a_i exp(-i lam (i - c))."""
        z = np.exp(-1j * np.asarray(lam, dtype=float))
        a = np.asarray(self.coeffs, dtype=float)
        pw = z[:, None] ** self.lags[None, :]
        if a.ndim == 1:
            return pw @ a
        return np.einsum("fl,lij->fij", pw, a)


# ---------------------------------------------------------------------------
# helpers

def _as_par(psi, mdl):
    return psi if isinstance(psi, ParamSet) else psi_to_par(psi, mdl)


def _group_delta(mdl, comps):
    d = np.array([1.0])
    for k in comps:
        d = poly_mult(d, mdl.components[k].delta)
    return d


def _group_acvf(mdl, par, comps, max_lag):
    """Autocovariances of delta_A(B) sum_{k in A} S^(k) for the group A."""
    out = np.zeros((max_lag + 1, mdl.N, mdl.N))
    for k in comps:
        d = _group_delta(mdl, [j for j in comps if j != k])
        G = class_acvf(mdl.components[k], par.serial[k], par.sigma(k), max_lag + d.size - 1)
        out += _filter_acvf(G, d, max_lag)
    return out


def _group_spectrum(mdl, par, comps, lam, outer=None):
    """Density of delta_A(B) sum_A S^(k), times |outer(e^{-i lam})|^2 if given."""
    z = np.exp(-1j * lam)
    out = np.zeros((lam.size, mdl.N, mdl.N), dtype=complex)
    for k in comps:
        d = _group_delta(mdl, [j for j in comps if j != k])
        if outer is not None:
            d = poly_mult(d, outer)
        gain = np.abs(poly_eval(d, z)) ** 2
        out += gain[:, None, None] * class_spectrum(mdl.components[k], par.serial[k],
                                                    par.sigma(k), lam)
    return out


def _diff_matrix(d, T, N):
    """Matrix of delta(B) acting on (x_1..x_T) stacked time-major."""
    d = np.asarray(d, dtype=float)
    q = d.size - 1
    D = np.zeros((T - q, T))
    for i in range(q + 1):
        D[np.arange(T - q), np.arange(T - q) + q - i] = d[i]
    return np.kron(D, np.eye(N))


def _split(mdl, sigcomps):
    sig = sorted(set(int(k) for k in sigcomps))
    if not sig or sig[0] < 0 or sig[-1] >= len(mdl.components):
        raise ValueError("sigcomps must be a non-empty set of component indices")
    return sig, [k for k in range(len(mdl.components)) if k not in sig]


# ---------------------------------------------------------------------------
# matrix route

def signal_matrix(data, psi, mdl, sigcomps):
    """
    Exact extraction matrix F and error covariance V (both NT x NT) for the
    sum of components in `sigcomps`, given a complete sample.

    With u = delta_S(B) signal and w = delta_N(B) noise, the differenced data
    are delta_N(B) u + delta_S(B) w.  The conditional means of u and w are
    combined with the identities delta_S s = u and delta_N (Y - s) = w,
    which determine s uniquely when the two differencing polynomials are
    coprime.
    """
    par = _as_par(psi, mdl)
    data = _pad(data, 0)
    if np.isnan(data).any():
        raise ValueError("signal_matrix needs complete data")
    T, N = data.shape
    sig, noise = _split(mdl, sigcomps)
    dS, dN = _group_delta(mdl, sig), _group_delta(mdl, noise)
    qS, qN = dS.size - 1, dN.size - 1
    Su = toeplitz_from_acvf(_group_acvf(mdl, par, sig, T - qS), T - qS)
    Sw = toeplitz_from_acvf(_group_acvf(mdl, par, noise, T - qN), T - qN)
    tN = _diff_matrix(dN, T - qS, N)
    tS = _diff_matrix(dS, T - qN, N)
    G = tN @ Su @ tN.T + tS @ Sw @ tS.T
    cf = linalg.cho_factor(G, lower=True)
    Du = linalg.cho_solve(cf, tN @ Su).T           # Su tN' G^{-1}
    Dw = linalg.cho_solve(cf, tS @ Sw).T
    Delta = _diff_matrix(poly_mult(dS, dN), T, N)
    DS, DN = _diff_matrix(dS, T, N), _diff_matrix(dN, T, N)
    M = np.vstack([DS, DN])
    R = np.vstack([Du @ Delta, DN - Dw @ Delta])
    Mp = linalg.pinv(M)
    F = Mp @ R
    Cu = Su - Du @ tN @ Su
    Cw = Sw - Dw @ tS @ Sw
    Cuw = Du @ tS @ Sw                             # Cov(e_u, -e_w)
    C = np.block([[Cu, Cuw], [Cuw.T, Cw]])
    V = Mp @ C @ Mp.T
    return F, 0.5 * (V + V.T)


def extract(data, matrices, mdl, psi):
    """Point estimates and +-2 s.e. bands from signal_matrix output."""
    par = _as_par(psi, mdl)
    F, V = matrices
    Y = demean(mdl, par, data)
    T, N = Y.shape
    point = (F @ Y.ravel()).reshape(T, N)
    sd = np.sqrt(np.clip(np.diag(V), 0.0, None)).reshape(T, N)
    return ExtractionTriple(point, point + 2 * sd, point - 2 * sd)


# ---------------------------------------------------------------------------
# Wiener-Kolmogorov filters

def _frf_at(par, mdl, sigcomps, lam):
    sig, _ = _split(mdl, sigcomps)
    z = np.exp(-1j * lam)
    num = 0
    tot = 0
    for k, comp in enumerate(mdl.components):
        gain = np.abs(poly_eval(mdl.delta_without(k), z)) ** 2
        f = gain[:, None, None] * class_spectrum(comp, par.serial[k], par.sigma(k), lam)
        tot = tot + f
        if k in sig:
            num = num + f
    return np.swapaxes(np.linalg.solve(np.swapaxes(tot, 1, 2), np.swapaxes(num, 1, 2)), 1, 2)


def frf(psi, mdl, sigcomps, grid=1000):
    """
    WK frequency response on lam_m = pi m / grid, m = 0..grid.

    Computed as f_signal F^{-1} from the differenced component densities, so
    the ratio stays bounded at unit-root frequencies.  Returns (lam, Upsilon)
    with Upsilon of shape (grid+1, N, N).
    """
    par = _as_par(psi, mdl)
    lam = np.pi * np.arange(grid + 1) / grid
    return lam, _frf_at(par, mdl, sigcomps, lam)


def _target_frf(target, lam, N):
    if target is None:
        return None
    t = np.asarray(target, dtype=float)
    z = np.exp(-1j * lam)
    if t.ndim == 1:
        return poly_eval(t, z)[:, None, None] * np.eye(N)[None]
    return np.stack([poly_eval(t, zz) for zz in z])


def wk_coeffs(psi, mdl, sigcomps, target=None, grid=7000, length=50):
    """
    Truncated WK filter coefficients for the lags -length..length.

    The frequency response (times the target polynomial Xi, if given) is
    sampled on the full circle lam_j = 2 pi j / grid and inverted by FFT.
    Returns (FilterKernel, tail) where tail is the l1 mass of the dropped
    coefficients as resolved by the grid.
    """
    par = _as_par(psi, mdl)
    N = mdl.N
    lam = 2 * np.pi * np.arange(grid) / grid
    ups = _frf_at(par, mdl, sigcomps, lam)
    xi = _target_frf(target, lam, N)
    if xi is not None:
        ups = xi @ ups
    coef = np.real(np.fft.ifft(ups, axis=0))
    lags = np.arange(-length, length + 1)
    kern = coef[lags % grid]
    half = grid // 2
    rest = np.r_[np.arange(length + 1, half), -np.arange(length + 1, half)]
    tail = float(np.abs(coef[rest % grid]).sum()) if rest.size else 0.0
    return FilterKernel(kern, length), tail


def wk_mse(psi, mdl, sigcomps, target=None, grid=7000):
    """
    Error covariance of the bi-infinite WK estimate: the average over the
    grid of Xi f_u F^{-1} f_w Xi*, with f_u, f_w the densities of the
    differenced signal and noise and F that of the differenced data.
    """
    par = _as_par(psi, mdl)
    sig, noise = _split(mdl, sigcomps)
    N = mdl.N
    if not noise:
        return np.zeros((N, N))
    lam = 2 * np.pi * np.arange(grid) / grid
    fu = _group_spectrum(mdl, par, sig, lam)
    fw = _group_spectrum(mdl, par, noise, lam)
    dS, dN = _group_delta(mdl, sig), _group_delta(mdl, noise)
    z = np.exp(-1j * lam)
    F = (np.abs(poly_eval(dN, z)) ** 2)[:, None, None] * fu \
        + (np.abs(poly_eval(dS, z)) ** 2)[:, None, None] * fw
    fe = fu @ np.linalg.solve(F, fw)
    xi = _target_frf(target, lam, N)
    if xi is not None:
        fe = xi @ fe @ np.conj(np.swapaxes(xi, 1, 2))
    out = np.real(fe.mean(axis=0))
    return 0.5 * (out + out.T)


def apply_kernel(kernel, series):
    """
    Apply a kernel to a complete (n, N) series; output rows where the full
    kernel support is available, aligned so row t of the result corresponds
    to row t + (m - 1 - c) of the input.
    """
    x = _pad(series, 0)
    n, N = x.shape
    A = kernel.matrix(N)
    m, c = kernel.m, kernel.shift
    rows = n - m + 1
    out = np.zeros((rows, N))
    for i in range(m):
        h = i - c
        start = (m - 1 - c) - h
        out += x[start:start + rows] @ A[i].T
    return out


def _filter_cast(kernel, cast, T, horizon, need_mse):
    """Filter the cast-patched series over output times -horizon..T+horizon-1."""
    filled = cast.filled
    span = cast.span
    N = filled.shape[1]
    A = kernel.matrix(N)
    lags = kernel.lags
    out_rows = np.arange(-horizon, T + horizon) + span
    point = np.zeros((out_rows.size, N))
    for i, h in enumerate(lags):
        point += filled[out_rows - h] @ A[i].T
    var = np.zeros((out_rows.size, N))
    if need_mse and cast.index.size:
        r, j = cast.index[:, 0], cast.index[:, 1]
        H = out_rows[:, None] - r[None, :]              # lag linking output to cast
        ok = (H >= lags[0]) & (H <= lags[-1])
        K = np.zeros((out_rows.size, N, r.size))
        ti, ci = np.nonzero(ok)
        K[ti, :, ci] = A[H[ti, ci] - lags[0]][np.arange(ti.size), :, j[ci]]
        var = np.einsum("tnc,cd,tnd->tn", K, cast.cov, K)
    return point, var


def _support_span(kernel, horizon):
    return int(max(kernel.shift, kernel.m - 1 - kernel.shift)) + int(horizon)


def wk_extract(psi, mdl, data, sigcomps, target=None, grid=7000, window=50, horizon=0,
               need_mse=True):
    """
    Truncated WK extraction of the demeaned signal over times
    -horizon..T+horizon-1 (0-based), with +-2 s.e. bands.

    The demeaned series is patched with midcasts and extended by
    window + horizon casts at both ends before filtering.  The reported MSE
    adds the bi-infinite WK error to the casting error seen through the
    kernel.
    """
    par = _as_par(psi, mdl)
    kernel, tail = wk_coeffs(par, mdl, sigcomps, target, grid, window)
    if tail > TAIL_WARN:
        warnings.warn(f"WK filter mass beyond lag {window} is {tail:.2e}; consider a "
                      "longer window", RuntimeWarning, stacklevel=2)
    T = _pad(data, 0).shape[0]
    span = _support_span(kernel, horizon)
    cast = midcast(par, mdl, data, span, need_cov=need_mse, par=par)
    point, var = _filter_cast(kernel, cast, T, horizon, need_mse)
    if need_mse:
        var = var + np.diag(wk_mse(par, mdl, sigcomps, target, grid))[None, :]
    sd = np.sqrt(np.clip(var, 0.0, None))
    return ExtractionTriple(point, point + 2 * sd, point - 2 * sd)


def adhoc_extract(psi, mdl, data, kernel, horizon=0, need_mse=True):
    """
    Apply a fixed kernel to the cast-patched demeaned series.  Only the
    casting error contributes to the bands.
    """
    par = _as_par(psi, mdl)
    T = _pad(data, 0).shape[0]
    span = _support_span(kernel, horizon)
    cast = midcast(par, mdl, data, span, need_cov=need_mse, par=par)
    point, var = _filter_cast(kernel, cast, T, horizon, need_mse)
    sd = np.sqrt(np.clip(var, 0.0, None))
    return ExtractionTriple(point, point + 2 * sd, point - 2 * sd)


# ---------------------------------------------------------------------------
# embedding and nonparametric filters

def hi_to_low(kernel, s):
    """
    Embed a scalar kernel acting on a series of frequency s into an s x s
    matrix kernel acting on the s-variate low-frequency series whose j-th
    entry at time t is x_{st+j}.

    The scalar kernel is padded with l = (-c) mod s leading and r trailing
    zeros, r >= s chosen so that s divides m + l + r; the shift becomes
    C = (l + c)/s and the length M = (m + l + r)/s.  The (j, k) entry of the
    lag-h coefficient is the scalar coefficient of lag j - k + s h.
    """
    s = int(s)
    if s < 1:
        raise ValueError("embedding factor must be positive")
    a = np.asarray(kernel.coeffs, dtype=float)
    if a.ndim != 1:
        raise ValueError("hi_to_low expects a scalar kernel")
    m, c = a.size, kernel.shift
    ell = (-c) % s
    r = s + (-(m + ell + s)) % s
    C = (ell + c) // s
    M = (m + ell + r) // s
    out = np.zeros((M, s, s))
    j, k = np.meshgrid(np.arange(s), np.arange(s), indexing="ij")
    for i in range(M):
        lag = j - k + s * (i - C)
        idx = lag + c
        ok = (idx >= 0) & (idx < m)
        out[i][ok] = a[idx[ok]]
    return FilterKernel(out, C)


def _symmetric(poly):
    poly = np.asarray(poly, dtype=float)
    return poly, (poly.size - 1) // 2


def x11_filters(period, p_seas=1):
    """
    Trend, seasonal and seasonal-adjustment kernels for a possibly
    fractional period s > 2.

    trend    : B^{-n} U_{n,s}(B) / U_{n,s}(1), n = floor(s/2), where
               U_{n,s}(z) = prod_{k<=n} (1 - 2 cos(2 pi k/s) z + z^2).
    seasonal : Upsilon_seas(B) (1 - trend(B)), with
               1 - Upsilon_seas = (2p+1)^{-1} sum_{j=1}^p [(1 - B^2) U_j(B)
               + (1 - B^{-2}) U_j(B^{-1})] and U_j the product over the
               harmonics of period s j up to floor((s j - 2)/2).
    sa       : 1 - seasonal.
    All three are symmetric; trend and sa sum to one, seasonal to zero.
    """
    s = float(period)
    if s <= 2:
        raise ValueError("period must exceed 2")
    p = int(p_seas)
    if p < 1:
        raise ValueError("p_seas must be a positive integer")
    n = int(np.floor(s / 2))
    U = ub_generator(s, n)
    trend = U / U.sum()
    # 1 - seasonal MA, as a symmetric Laurent polynomial centred at lag 0
    parts = []
    for j in range(1, p + 1):
        nj = int(np.floor((s * j - 2) / 2))
        Uj = poly_mult(np.array([1.0, 0.0, -1.0]), ub_generator(s * j, nj))
        parts.append(Uj)
    half = max(u.size for u in parts) - 1
    one_minus = np.zeros(2 * half + 1)
    for u in parts:
        one_minus[half:half + u.size] += u
        one_minus[half - u.size + 1:half + 1] += u[::-1]
    one_minus /= 2 * p + 1
    seas_ma = -one_minus
    seas_ma[half] += 1.0
    # compose with 1 - trend
    detrend = -trend.copy()
    detrend[n] += 1.0
    seasonal = np.convolve(seas_ma, detrend)
    c = half + n
    sa = -seasonal
    sa[c] += 1.0
    return FilterKernel(trend, n), FilterKernel(seasonal, c), FilterKernel(sa, c)


# ---------------------------------------------------------------------------
# publication

def publish_decomposition(data, filled, mdl, beta, pieces, original=None,
                          cast_error_to=None, effects=None, default_effect=None):
    """
    Additive tables whose sum reproduces the data.

    filled : demeaned series with casts at missing times (T, N).
    pieces : dict name -> (T, N) extractions from complementary filters
        applied to `filled`; they must sum to `filled`.
    original : values at times that were treated as missing although
        observed (e.g. additive outliers); NaN elsewhere.  Their casting
        error original - imputation is routed to `cast_error_to`.
    effects : dict regressor label -> piece name; labels not listed go to
        `default_effect` (default: `cast_error_to`).
    Returns a dict of (T, N) tables with the same keys as `pieces` plus
    "imputation" (the data with casts and regression effects) and
    "cast_error".
    """
    filled = _pad(filled, 0)
    T, N = filled.shape
    names = list(pieces)
    if cast_error_to is None:
        cast_error_to = names[0]
    if default_effect is None:
        default_effect = cast_error_to
    effects = dict(effects or {})
    total = sum(np.asarray(pieces[k], dtype=float) for k in names)
    gap = np.abs(total - filled).max()
    if gap > 1e-8 * max(1.0, np.abs(filled).max()):
        raise ValueError(f"pieces are not complementary (max gap {gap:.3g})")
    out = {k: np.array(pieces[k], dtype=float) for k in names}
    beta = np.asarray(beta, dtype=float)
    idx = np.arange(T)
    for j, pos in enumerate(mdl.beta_index()):
        for reg, b in zip(mdl.series_regressors(j), beta[pos] if pos.size else []):
            dest = effects.get(reg.label, default_effect)
            out[dest][:, j] += reg.evaluate(idx) * b
    reg_total = sum(out[k] for k in names) - total
    imputation = filled + reg_total
    err = np.zeros((T, N))
    if original is not None:
        orig = _pad(original, 0)
        ok = ~np.isnan(orig)
        err[ok] = orig[ok] - imputation[ok]
    out[cast_error_to] += err
    out["imputation"] = imputation
    out["cast_error"] = err
    return out


def write_kernel(path, kernel):
    """CSV with a '# m=.., c=.., N=..' line and rows lag,row,col,value."""
    a = np.asarray(kernel.coeffs, dtype=float)
    N = 1 if a.ndim == 1 else a.shape[1]
    A = kernel.matrix(N) if a.ndim == 1 else a
    lines = [f"# m={kernel.m}, c={kernel.shift}, N={N}", "lag,row,col,value"]
    for i, h in enumerate(kernel.lags):
        for r in range(N):
            for c in range(N):
                lines.append(f"{h},{r},{c},{A[i, r, c]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_kernel(path):
    text = Path(path).read_text().splitlines()
    head = dict(part.strip().split("=") for part in text[0].lstrip("#").split(","))
    m, c, N = int(head["m"]), int(head["c"]), int(head["N"])
    A = np.zeros((m, N, N))
    for line in text[2:]:
        if line.strip():
            h, r, col, v = line.split(",")
            A[int(h) + c, int(r), int(col)] = float(v)
    return FilterKernel(A[:, 0, 0].copy() if N == 1 else A, c)
