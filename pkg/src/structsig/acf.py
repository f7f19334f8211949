"""
Autocovariances and spectral densities of the component classes.

Densities use f(lambda) = sum_h gamma_h exp(-i lambda h), without a 2 pi
factor, so gamma_0 = (1/2pi) int f and subtracting a constant c from f
subtracts c from gamma_0 only.
"""
from math import comb

import numpy as np
from scipy import linalg, optimize

from .polyalg import ma_acvf, poly_eval, poly_mult, poly_mult_mat, spec_fact

__all__ = [
    "arma_acvf", "varma_acvf", "butterworth_polys", "balanced_ma_acvf",
    "balanced_acvf", "balanced_density", "cycle_polys", "stabilize",
    "arma_density", "canonize", "class_acvf", "class_spectrum", "class_filter",
    "component_acvf", "total_acvf", "total_spectrum", "spectra", "seasonal_expand",
]


def arma_acvf(ar, ma, sigma2=1.0, max_lag=10):
    """
    Exact autocovariances of ar(B) X_t = ma(B) e_t, Var(e) = sigma2.

    `ar` and `ma` are full polynomial coefficient arrays with unit leading
    term, e.g. ar = (1, -phi) for an AR(1) with coefficient phi.
    """
    a = np.asarray(ar, dtype=float)
    th = np.asarray(ma, dtype=float)
    p, q = a.size - 1, th.size - 1
    m = max(p, q)
    psi = np.zeros(q + 1)
    for j in range(q + 1):
        psi[j] = th[j] - sum(a[i] * psi[j - i] for i in range(1, min(j, p) + 1))
    rhs = np.zeros(m + 1)
    for k in range(q + 1):
        rhs[k] = sigma2 * np.dot(th[k:], psi[:q + 1 - k])
    M = np.zeros((m + 1, m + 1))
    for k in range(m + 1):
        for i in range(p + 1):
            M[k, abs(k - i)] += a[i]
    g = np.linalg.solve(M, rhs)
    out = np.zeros(max(max_lag, m) + 1)
    out[:m + 1] = g
    for k in range(m + 1, out.size):
        out[k] = -np.dot(a[1:], out[k - 1:k - p - 1:-1]) if p else 0.0
    return out[:max_lag + 1]


def varma_acvf(ar, ma, sigma, max_lag=10):
    """
    Autocovariances Gamma(h) = E[X_{t+h} X_t'] of ar(B) X_t = ma(B) e_t.

    ar, ma : matrix polynomials (p+1, N, N), (q+1, N, N) with identity
    leading coefficients; sigma : innovation covariance.
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    N = sigma.shape[0]
    p, q = ar.shape[0] - 1, ma.shape[0] - 1
    Phi = -ar[1:]
    px = max(p, 1)
    nx, ne = px * N, (q + 1) * N
    n = nx + ne
    F = np.zeros((n, n))
    G = np.zeros((n, N))
    for j in range(p):
        F[:N, j * N:(j + 1) * N] = Phi[j]
    for j in range(1, q + 1):
        F[:N, nx + (j - 1) * N:nx + j * N] = ma[j]
    F[N:nx, :nx - N] = np.eye(nx - N)
    F[nx + N:, nx:n - N] = np.eye(ne - N)
    G[:N] = ma[0]
    G[nx:nx + N] = np.eye(N)
    P = linalg.solve_discrete_lyapunov(F, G @ sigma @ G.T)
    m = max(p, q)
    out = np.zeros((max(max_lag, m) + 1, N, N))
    C = P[:, :N]
    for h in range(m + 1):
        out[h] = C[:N]
        C = F @ C
    for h in range(m + 1, out.shape[0]):
        out[h] = sum(Phi[k] @ out[h - k - 1] for k in range(p)) if p else 0.0
    out[0] = 0.5 * (out[0] + out[0].T)
    return out[:max_lag + 1]


def seasonal_expand(coefs, s):
    """Polynomial 1 - sum_j c_j z^{s j} from seasonal coefficients c."""
    coefs = np.asarray(coefs, dtype=float)
    if coefs.ndim == 1:
        out = np.zeros(coefs.size * s + 1)
        out[0] = 1.0
        out[s::s] = -coefs
        return out
    N = coefs.shape[1]
    out = np.zeros((coefs.shape[0] * s + 1, N, N))
    out[0] = np.eye(N)
    out[s::s] = -coefs
    return out


# ---------------------------------------------------------------------------
# cycles

def butterworth_polys(rho, omega, n):
    ar1 = np.array([1.0, -2 * rho * np.cos(omega), rho ** 2])
    ma1 = np.array([1.0, -rho * np.cos(omega)])
    ar, ma = np.array([1.0]), np.array([1.0])
    for _ in range(n):
        ar, ma = poly_mult(ar, ar1), poly_mult(ma, ma1)
    return ar, ma


def balanced_ma_acvf(rho, omega, n):
    """Autocovariances (lags 0..n) of the moving average part of a balanced cycle."""
    h = np.arange(n + 1)
    out = np.zeros(n + 1)
    for hh in h:
        out[hh] = np.cos(omega * hh) * sum(
            comb(n, k + hh) * comb(n, k) * (-rho) ** (2 * k + hh) for k in range(n - hh + 1))
    return out


def balanced_acvf(rho, omega, n, max_lag, sigma2=1.0):
    """Closed-form autocovariances of the balanced cycle of order n."""
    alpha = np.zeros(n + 1)
    for k in range(1, n + 1):
        alpha[k] = (1 - rho ** 2) ** (n - k) * sum(
            comb(k - 1, r) * comb(n - 1, r + n - k) * rho ** (2 * r) for r in range(k))
    out = np.zeros(max_lag + 1)
    for h in range(max_lag + 1):
        poly = sum(comb(h, j) * alpha[n - j] for j in range(n))
        out[h] = rho ** h * np.cos(h * omega) * poly
    return out * (1 - rho ** 2) ** (1 - 2 * n) * sigma2


def balanced_density(rho, omega, n, lam, sigma2=1.0):
    lam = np.asarray(lam, dtype=float)
    a = (1 - 2 * rho * np.cos(omega - lam) + rho ** 2) ** (-n)
    b = (1 - 2 * rho * np.cos(omega + lam) + rho ** 2) ** (-n)
    return 0.5 * (a + b) * sigma2


def cycle_polys(family, rho, omega, n):
    """
    AR polynomial and moving-average representation of a cycle.

    Returns (ar, ma, scale): the cycle equals ar(B)^{-1} ma(B) times white
    noise of variance scale * sigma2.  For the balanced family `ma` comes
    from spectral factorization of its moving-average autocovariances.
    """
    ar, ma = butterworth_polys(rho, omega, n)
    if family == "butterworth":
        return ar, ma, 1.0
    if family == "balanced":
        ma, v = spec_fact(balanced_ma_acvf(rho, omega, n))
        return ar, ma, v
    raise ValueError(f"unknown cycle family {family!r}")


def _butterworth_gain(rho, omega, n, lam):
    z = np.exp(-1j * np.asarray(lam))
    ar, ma = butterworth_polys(rho, omega, 1)
    return np.abs(poly_eval(ma, z) / poly_eval(ar, z)) ** (2 * n)


def stabilize(family, rho, omega, n, max_lag, sigma2=1.0):
    """
    Stabilized cycle: subtract the minimum c of the spectral density.

    Returns (acvf, c) where acvf equals the cycle acvf with gamma_0 reduced
    by c.  The Butterworth minimum is searched over lambda in {0, pi} and the
    interior critical points arccos(z+-) with |z| <= 1; the balanced minimum
    lies at an endpoint.
    """
    if family == "butterworth":
        cand = [0.0, np.pi]
        cw = np.cos(omega)
        if abs(cw) > 1e-12 and rho > 0:
            sw = np.sin(omega)
            disc = sw ** 2 + (1 - rho ** 2) ** 2 * cw ** 2
            for sign in (1, -1):
                z = (1 + rho ** 2 * cw ** 2 + sign * sw * np.sqrt(disc)) / (2 * rho * cw)
                if abs(z) <= 1:
                    cand.append(np.arccos(z))
        c = _butterworth_gain(rho, omega, n, np.array(cand)).min() * sigma2
        ar, ma = butterworth_polys(rho, omega, n)
        acvf = arma_acvf(ar, ma, sigma2, max_lag)
    elif family == "balanced":
        c = balanced_density(rho, omega, n, np.array([0.0, np.pi]), sigma2).min()
        acvf = balanced_acvf(rho, omega, n, max_lag, sigma2)
    else:
        raise ValueError(f"unknown cycle family {family!r}")
    acvf = acvf.copy()
    acvf[0] -= c
    return acvf, c


def arma_density(ar, ma, sigma2, lam):
    z = np.exp(-1j * np.asarray(lam, dtype=float))
    return sigma2 * np.abs(poly_eval(ma, z)) ** 2 / np.abs(poly_eval(ar, z)) ** 2


def canonize(ar, ma, sigma2=1.0, max_lag=10, grid=4096):
    """
    Remove the minimum c of an ARMA spectral density.

    Returns (new_ma, new_innov_var, acvf, c); the new moving average is the
    spectral factor of sigma2 |ma|^2 - c |ar|^2, so it has a unit root where
    the density touched its minimum.
    """
    lam = np.pi * np.arange(grid + 1) / grid
    f = arma_density(ar, ma, sigma2, lam)
    i = int(np.argmin(f))
    lo, hi = lam[max(i - 1, 0)], lam[min(i + 1, grid)]
    res = optimize.minimize_scalar(lambda x: arma_density(ar, ma, sigma2, [x])[0],
                                   bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    c = min(f[i], res.fun)
    a = np.asarray(ar, dtype=float)
    m = np.asarray(ma, dtype=float)
    k = max(a.size, m.size)
    num = ma_acvf(m, sigma2, k - 1) - c * ma_acvf(a, 1.0, k - 1)
    new_ma, v = spec_fact(num)
    acvf = arma_acvf(a, m, sigma2, max_lag)
    acvf[0] -= c
    return new_ma, v, acvf, c


# ---------------------------------------------------------------------------
# component classes

def _scalar_polys(comp, serial):
    """(ar, ma, scale, c) for classes driven by scalar polynomials."""
    cls = comp.cls
    if cls == "white-noise":
        return np.array([1.0]), np.array([1.0]), 1.0, 0.0
    if cls == "arma":
        phi, theta = serial
        return np.r_[1.0, -phi], np.r_[1.0, -theta], 1.0, 0.0
    if cls == "sarma":
        phi, theta, Phi, Theta = serial
        s = comp.order[4]
        ar = poly_mult(np.r_[1.0, -phi], seasonal_expand(Phi, s))
        ma = poly_mult(np.r_[1.0, -theta], seasonal_expand(Theta, s))
        return ar, ma, 1.0, 0.0
    if cls == "damped-trend":
        return np.array([1.0, -serial[0][0]]), np.array([1.0]), 1.0, 0.0
    if comp.is_cycle:
        rho, omega = serial[0]
        n = comp.order[0]
        family = cls.replace("-stab", "")
        ar, ma, v = cycle_polys(family, rho, omega, n)
        c = 0.0
        if cls.endswith("-stab"):
            c = stabilize(family, rho, omega, n, 0)[1]
        return ar, ma, v, c
    return None


def _matrix_polys(comp, serial, N):
    eye = np.eye(N)[None]
    if comp.cls == "varma":
        Phi, Theta = serial
        return np.concatenate([eye, -Phi]), np.concatenate([eye, -Theta])
    phi, theta, Phi, Theta = serial
    s = comp.order[4]
    ar = poly_mult_mat(np.concatenate([eye, -phi]), seasonal_expand(Phi, s))
    ma = poly_mult_mat(np.concatenate([eye, -theta]), seasonal_expand(Theta, s))
    return ar, ma


def class_acvf(comp, serial, sigma, max_lag):
    """Autocovariances (max_lag+1, N, N) of the stationary core of a component."""
    sigma = np.atleast_2d(sigma)
    N = sigma.shape[0]
    if comp.cls in ("varma", "svarma"):
        ar, ma = _matrix_polys(comp, serial, N)
        return varma_acvf(ar, ma, sigma, max_lag)
    if comp.cls in ("balanced", "balanced-stab"):
        rho, omega = serial[0]
        g = balanced_acvf(rho, omega, comp.order[0], max_lag)
        if comp.cls == "balanced-stab":
            g[0] -= stabilize("balanced", rho, omega, comp.order[0], 0)[1]
    else:
        ar, ma, v, c = _scalar_polys(comp, serial)
        g = arma_acvf(ar, ma, v, max_lag)
        g[0] -= c
    return g[:, None, None] * sigma[None]


def class_spectrum(comp, serial, sigma, lam):
    """Spectral density matrices (len(lam), N, N) of the stationary core."""
    sigma = np.atleast_2d(sigma)
    N = sigma.shape[0]
    lam = np.asarray(lam, dtype=float)
    z = np.exp(-1j * lam)
    if comp.cls in ("varma", "svarma"):
        ar, ma = _matrix_polys(comp, serial, N)
        psi = np.linalg.solve(poly_eval(ar, z), poly_eval(ma, z))
        return psi @ sigma @ np.conj(np.swapaxes(psi, 1, 2))
    if comp.cls in ("balanced", "balanced-stab"):
        rho, omega = serial[0]
        f = balanced_density(rho, omega, comp.order[0], lam)
        if comp.cls == "balanced-stab":
            f = f - stabilize("balanced", rho, omega, comp.order[0], 0)[1]
    else:
        ar, ma, v, c = _scalar_polys(comp, serial)
        f = arma_density(ar, ma, v, lam) - c
    return f[:, None, None] * sigma[None].astype(complex)


def class_filter(comp, serial, N):
    """
    Causal filter driving a component: (ar, ma) polynomials and a variance
    multiplier.  Matrix polynomials for varma/svarma, scalar otherwise.
    """
    if comp.cls in ("varma", "svarma"):
        ar, ma = _matrix_polys(comp, serial, N)
        return ar, ma, 1.0
    ar, ma, v, c = _scalar_polys(comp, serial)
    if c > 0:
        k = max(ar.size, ma.size)
        num = ma_acvf(ma, v, k - 1) - c * ma_acvf(ar, 1.0, k - 1)
        ma, v = spec_fact(num)
    return ar, ma, v


def _filter_acvf(G, d, max_lag):
    # autocovariances of W_t = sum_i d_i S_{t-i} from those of S
    d = np.asarray(d, dtype=float)
    r = d.size - 1
    c = np.correlate(d, d, mode="full")[r:]          # c_m, m = 0..r
    out = c[0] * G[:max_lag + 1].copy()
    for m in range(1, r + 1):
        hp = np.arange(max_lag + 1) + m
        out += c[m] * G[hp]
        hm = np.arange(max_lag + 1) - m
        neg = hm < 0
        lagged = G[np.abs(hm)]
        lagged[neg] = np.swapaxes(lagged[neg], 1, 2)
        out += c[m] * lagged
    return out


def component_acvf(mdl, par, k, max_lag):
    """Autocovariances of delta^{(-k)}(B) applied to the core of component k."""
    d = mdl.delta_without(k)
    G = class_acvf(mdl.components[k], par.serial[k], par.sigma(k), max_lag + d.size - 1)
    return _filter_acvf(G, d, max_lag)


def total_acvf(mdl, par, max_lag):
    """Autocovariances of the fully differenced process delta(B) Y_t."""
    return sum(component_acvf(mdl, par, k, max_lag) for k in range(len(mdl.components)))


def spectra(mdl, par, k, grid_size):
    """Density of the differenced component k on lambda_m = pi m / grid_size."""
    lam = np.pi * np.arange(grid_size + 1) / grid_size
    d = mdl.delta_without(k)
    gain = np.abs(poly_eval(d, np.exp(-1j * lam))) ** 2
    f = class_spectrum(mdl.components[k], par.serial[k], par.sigma(k), lam)
    return gain[:, None, None] * f


def total_spectrum(mdl, par, lam):
    """Spectral density matrices of delta(B) Y_t at arbitrary frequencies."""
    lam = np.asarray(lam, dtype=float)
    z = np.exp(-1j * lam)
    out = 0
    for k, comp in enumerate(mdl.components):
        gain = np.abs(poly_eval(mdl.delta_without(k), z)) ** 2
        out = out + gain[:, None, None] * class_spectrum(comp, par.serial[k], par.sigma(k), lam)
    return out
