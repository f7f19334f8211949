"""
Estimation and diagnostics: maximum likelihood over the free coordinates of
the pre-parameter, method-of-moments starting values, residual tests and
likelihood comparisons.

The Hessian is taken of the divergence (-2 log likelihood), so the
asymptotic covariance of the free parameter is 2 H^{-1}, not H^{-1}.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, stats
from scipy.linalg import solve_toeplitz

from .acf import _filter_acvf, class_acvf
from .likelihood import difference, lik, whittle
from .params import (ParamSet, constraint_affine, default_param, eta_to_psi,
                     par_to_psi, psi_len, psi_to_eta, psi_to_par, render_pd)
from .polyalg import gcd_decompose

__all__ = [
    "FitResult", "mle_fit", "mom_fit", "portmanteau", "gauss_check", "tstats",
    "glr", "ar_spectrum", "num_gradient", "num_hessian", "sample_acvf", "mom_start",
]

_PENALTY = 1e12


@dataclass
class FitResult:
    eta: np.ndarray
    psi: np.ndarray
    par: ParamSet
    divergence: float
    hessian: np.ndarray
    converged: bool
    nfev: int
    message: str = ""
    history: list = field(default_factory=list, repr=False)


def _steps(x, rel=1e-5):
    return rel * (1.0 + np.abs(x))


def num_gradient(f, x, rel=1e-5):
    """Central-difference gradient with steps rel * (1 + |x|)."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2 * h[i])
    return g


def num_hessian(f, x, rel=1e-5, f0=None):
    """Central-difference Hessian with steps rel * (1 + |x|)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _steps(x, rel)
    f0 = f(x) if f0 is None else f0
    H = np.empty((n, n))
    E = np.diag(h)
    for i in range(n):
        H[i, i] = (f(x + E[i]) - 2 * f0 + f(x - E[i])) / h[i] ** 2
        for j in range(i):
            v = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                 - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h[i] * h[j])
            H[i, j] = H[j, i] = v
    return H


class _Budget(Exception):
    pass


def mle_fit(data, init, mdl, constraint=None, maxiter=None, maxfev=10_000, gtol=1e-6,
            hessian=True, callback=None, objective="exact"):
    """
    Minimize the divergence over the free coordinates eta, psi = A eta + c.

    init : ParamSet or pre-parameter vector satisfying the constraint.
    callback : called as callback(eta, divergence) after every successful
        evaluation, e.g. to checkpoint long fits.
    objective : "exact" for the Gaussian likelihood, "whittle" for its
        frequency-domain approximation.
    """
    psi0 = par_to_psi(init, mdl) if isinstance(init, ParamSet) else np.asarray(init, float)
    if psi0.size != psi_len(mdl):
        raise ValueError(f"initial psi has length {psi0.size}, model needs {psi_len(mdl)}")
    if constraint is not None:
        res = constraint.residual(psi0)
        bad = np.nonzero(np.abs(res) > 1e-8)[0]
        if bad.size:
            rows = ", ".join(f"row {i}: C psi - b = {res[i]:.3g}" for i in bad)
            raise ValueError(f"initial psi violates the constraint ({rows})")
    crit = lik if objective == "exact" else whittle
    history = []
    count = [0]
    budget = [maxfev]
    recording = [True]

    def f(eta):
        count[0] += 1
        if count[0] > budget[0]:
            raise _Budget
        try:
            v = crit(eta_to_psi(eta, constraint), mdl, data)
        except (linalg.LinAlgError, ValueError, FloatingPointError):
            return _PENALTY
        if not np.isfinite(v):
            return _PENALTY
        if recording[0]:
            history.append((np.array(eta), v))
            if callback is not None:
                callback(np.array(eta), v)
        return v

    eta0 = psi_to_eta(psi0, constraint)
    d0 = f(eta0)
    if d0 >= _PENALTY:
        raise ValueError("divergence is not finite at the initial parameter")
    opts = {"gtol": gtol}
    if maxiter is not None:
        opts["maxiter"] = maxiter
    try:
        res = optimize.minimize(f, eta0, jac=lambda e: num_gradient(f, e),
                                method="BFGS", options=opts)
        eta, div, ok, msg = res.x, res.fun, bool(res.success), res.message
    except _Budget:
        eta, div = min(history, key=lambda h: h[1]) if history else (eta0, d0)
        ok, msg = False, f"evaluation budget of {maxfev} exhausted"
    nfev = count[0]
    budget[0] = np.inf
    recording[0] = False
    H = num_hessian(f, eta, f0=div) if hessian else None
    psi = eta_to_psi(eta, constraint)
    return FitResult(np.asarray(eta), psi, psi_to_par(psi, mdl), float(div), H, ok,
                     int(nfev), str(msg), history)


# ---------------------------------------------------------------------------
# method of moments

def sample_acvf(x, max_lag):
    """C_h = n^{-1} sum_t x_{t+h} x_t', h = 0..max_lag, for x of shape (n, N)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    return np.stack([x[h:].T @ x[:n - h] / n for h in range(max_lag + 1)])


def _ols(mdl, data):
    """Regression on the differenced scale; returns (beta, residual)."""
    Z = difference(mdl.delta, data)
    beta = np.zeros(mdl.n_beta)
    R = Z.copy()
    for j, pos in enumerate(mdl.beta_index()):
        if pos.size:
            X = difference(mdl.delta, mdl.design(j))
            coef = np.linalg.lstsq(X, Z[:, j], rcond=None)[0]
            beta[pos] = coef
            R[:, j] = Z[:, j] - X @ coef
    return beta, R


def mom_fit(data, mdl, init=None):
    """
    Method-of-moments covariances with serial parameters held fixed.

    Regression effects are removed by OLS on the differenced data.  The
    sample autocovariances of the residual at lags 0..L, L = max over
    components of (degree of delta + 5), are matched in least squares by a
    linear combination of the component autocovariances, which are linear in
    each innovation covariance.  The covariance estimates are returned raw:
    they can be indefinite, in which case `reduce` should follow.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if np.isnan(data).any():
        raise ValueError("method of moments needs complete data")
    par = default_param(mdl) if init is None else init.copy()
    N = mdl.N
    beta, R = _ols(mdl, data)
    L = max(c.delta.size - 1 for c in mdl.components) + 5
    L = min(L, R.shape[0] - 1)
    C = sample_acvf(R, L)
    # moment vector: upper triangle at lag 0, full matrices at lags >= 1
    iu = np.triu_indices(N)

    def flatten(G):
        G0 = 0.5 * (G[0] + G[0].T)
        return np.concatenate([G0[iu], G[1:].reshape(-1)])

    target = flatten(C)
    cols, slots = [], []
    for k, comp in enumerate(mdl.components):
        d = mdl.delta_without(k)
        for a, b in zip(*iu):
            E = np.zeros((N, N))
            E[a, b] = E[b, a] = 1.0
            G = class_acvf(comp, par.serial[k], E, L + d.size - 1)
            cols.append(flatten(_filter_acvf(G, d, L)))
            slots.append((k, a, b))
    X = np.column_stack(cols)
    coef = np.linalg.lstsq(X, target, rcond=None)[0]
    out = par.copy()
    for k, comp in enumerate(mdl.components):
        S = np.zeros((N, N))
        for c, (kk, a, b) in zip(coef, slots):
            if kk == k:
                S[a, b] = S[b, a] = c
        out.gcd[k] = gcd_decompose(S)
    out.beta = beta
    return out


# ---------------------------------------------------------------------------
# diagnostics

def portmanteau(resids, lag, num_params=0):
    """
    Multivariate portmanteau statistic for residual serial correlation,
    Q = n^2 sum_{h=1}^{lag} (n - h)^{-1} tr(C_h' C_0^{-1} C_h C_0^{-1}),
    referred to chi-square with lag N^2 - num_params degrees of freedom.
    Missing residuals are set to zero.
    """
    r = np.asarray(resids, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    r = np.where(np.isnan(r), 0.0, r)
    n, N = r.shape
    C = sample_acvf(r, lag)
    C0i = np.linalg.inv(C[0])
    Q = n ** 2 * sum(np.trace(C[h].T @ C0i @ C[h] @ C0i) / (n - h) for h in range(1, lag + 1))
    dof = lag * N ** 2 - num_params
    return float(Q), float(stats.chi2.sf(Q, dof)) if dof > 0 else float("nan")


def gauss_check(resids, max_n=5000):
    """Shapiro-Wilk p-value per series; long series are thinned evenly to max_n."""
    r = np.asarray(resids, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    out = []
    for j in range(r.shape[1]):
        x = r[~np.isnan(r[:, j]), j]
        if x.size > max_n:
            x = x[np.linspace(0, x.size - 1, max_n).round().astype(int)]
        out.append(stats.shapiro(x).pvalue)
    return np.array(out)


def tstats(mdl, psi, hessian, constraint=None):
    """
    t statistics psi_i / se_i with Cov(psi) = A (2 H^{-1}) A'.

    A non positive-definite Hessian yields +-inf for every coordinate;
    coordinates pinned by the constraint have zero standard error.
    """
    psi = np.asarray(psi, dtype=float)
    sign = np.where(psi < 0, -1.0, 1.0)
    try:
        cf = linalg.cho_factor(0.5 * (hessian + hessian.T))
    except linalg.LinAlgError:
        return sign * np.inf
    A, _ = constraint_affine(constraint, psi.size)
    V = 2.0 * linalg.cho_solve(cf, np.eye(hessian.shape[0]))
    se = np.sqrt(np.clip(np.einsum("ij,jk,ik->i", A, V, A), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = psi / se
    return np.where(se > 0, t, sign * np.inf)


def glr(data, psi_nested, psi_nesting, mdl_nested, mdl_nesting):
    """Likelihood ratio statistic and its degrees of freedom."""
    stat = lik(psi_nested, mdl_nested, data) - lik(psi_nesting, mdl_nesting, data)
    return stat, psi_len(mdl_nesting) - psi_len(mdl_nested)


def ar_spectrum(data, series=0, diff=False, period=1, max_order=None, grid=500):
    """
    Autoregressive spectrum estimate of one series.

    The order minimizes AIC among Yule-Walker fits up to `max_order`
    (default max(2 period, 10 log10 n)).  Returns (lam, density, order) on
    lam = pi m / grid.
    """
    x = np.asarray(data, dtype=float)
    x = x[:, series] if x.ndim == 2 else x
    x = x[~np.isnan(x)]
    if diff:
        x = np.diff(x)
    x = x - x.mean()
    n = x.size
    if max_order is None:
        max_order = int(max(2 * period, 10 * np.log10(n)))
    max_order = min(max_order, n - 1)
    g = sample_acvf(x, max_order)[:, 0, 0]
    best = (n * np.log(g[0]), 0, np.zeros(0), g[0])
    for p in range(1, max_order + 1):
        phi = solve_toeplitz(g[:p], g[1:p + 1])
        s2 = g[0] - phi @ g[1:p + 1]
        if s2 <= 0:
            break
        aic = n * np.log(s2) + 2 * p
        if aic < best[0]:
            best = (aic, p, phi, s2)
    _, p, phi, s2 = best
    lam = np.pi * np.arange(grid + 1) / grid
    z = np.exp(-1j * lam)
    den = np.abs(1 - sum(phi[j] * z ** (j + 1) for j in range(p))) ** 2 if p else 1.0
    return lam, s2 / den, p


def mom_start(data, mdl, alpha=-6.0):
    """
    Method-of-moments estimates repaired into a valid starting point.

    Each covariance is rendered positive definite at condition level
    `alpha`; a nonpositive leading pivot is replaced by a small fraction of
    the average variance.  Components keep their rank configuration.
    """
    par = mom_fit(data, mdl)
    for k, comp in enumerate(mdl.components):
        S = par.sigma(k)
        g = gcd_decompose(S)
        floor = 1e-3 * max(np.abs(np.diag(S)).mean(), 1e-12)
        D = np.where(g.D > 0, g.D, floor)
        S = render_pd((g.L * D) @ g.L.T, alpha)
        par.gcd[k] = gcd_decompose(S, comp.vrank)
    return par
