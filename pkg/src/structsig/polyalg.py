"""
Scalar and matrix lag-polynomial algebra.

Scalar polynomials are 1-d arrays of coefficients in ascending powers of the
backshift B.  Matrix polynomials are arrays of shape (d+1, N, N).
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "poly_mult", "poly_sum", "poly_mult_mat", "poly_eval", "poly_roots",
    "spec_fact", "spec_fact_mvar", "ma_acvf", "GCDPair", "gcd_decompose",
    "block_toeplitz", "toeplitz_from_acvf", "ub_generator", "unit_root_count",
]


def _as_poly(a):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.ndim != 1 or a.size == 0:
        raise ValueError("scalar polynomial must be a non-empty 1-d sequence")
    return a


def poly_mult(a, b):
    """Product of two scalar polynomials."""
    return np.convolve(_as_poly(a), _as_poly(b))


def poly_sum(a, b):
    """Sum of two scalar polynomials, zero-padding to the common degree."""
    a, b = _as_poly(a), _as_poly(b)
    out = np.zeros(max(a.size, b.size))
    out[:a.size] += a
    out[:b.size] += b
    return out


def poly_mult_mat(A, B):
    """Product of two matrix polynomials, sum_j A_j B_{h-j}."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 2:
        A = A[None]
    if B.ndim == 2:
        B = B[None]
    if A.shape[2] != B.shape[1]:
        raise ValueError("inner dimensions of matrix polynomials differ")
    out = np.zeros((A.shape[0] + B.shape[0] - 1, A.shape[1], B.shape[2]))
    for j in range(A.shape[0]):
        out[j:j + B.shape[0]] += np.einsum("ik,hkl->hil", A[j], B)
    return out


def poly_eval(a, z):
    """Evaluate a scalar or matrix polynomial at the points z."""
    a = np.asarray(a)
    z = np.asarray(z)
    powers = z[..., None] ** np.arange(a.shape[0])
    if a.ndim == 1:
        return powers @ a
    return np.tensordot(powers, a, axes=(-1, 0))


def poly_roots(a):
    """Roots of a scalar polynomial given in ascending coefficients."""
    a = np.trim_zeros(_as_poly(a), "b")
    if a.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(a[::-1])


def unit_root_count(a, tol=1e-10):
    """Multiplicity of the root z = 1, counted by repeated synthetic division."""
    a = _as_poly(a).copy()
    d = 0
    scale = np.abs(a).sum()
    while a.size > 1 and abs(a.sum()) <= tol * scale:
        # divide by (1 - z): q_k = sum_{j<=k} a_j
        a = np.cumsum(a)[:-1]
        d += 1
    return d


# ---------------------------------------------------------------------------
# spectral factorization

def ma_acvf(ma, sigma2=1.0, max_lag=None):
    """Autocovariances of an MA process with polynomial `ma` (plus convention)."""
    ma = _as_poly(ma)
    q = ma.size - 1
    full = np.correlate(ma, ma, mode="full")[q:] * sigma2
    if max_lag is None:
        return full
    out = np.zeros(max_lag + 1)
    n = min(max_lag + 1, full.size)
    out[:n] = full[:n]
    return out


def _density_check(acvf, grid=1024, tol=1e-10):
    lam = np.pi * np.arange(grid + 1) / grid
    h = np.arange(1, acvf.size)
    f = acvf[0] + 2 * np.cos(np.outer(lam, h)) @ acvf[1:]
    scale = max(np.abs(acvf).sum(), 1.0)
    if f.min() < -tol * scale:
        raise ValueError("implied spectral density is negative "
                         f"(min {f.min():.3e}); sequence is not nonnegative definite")


def _merge_unit_roots(r):
    # roots on the unit circle come in (numerically split) double pairs
    ang = np.angle(r)
    order = np.argsort(ang)
    r, ang = r[order], ang[order]
    if r.size % 2:
        return None
    merged = [np.exp(1j * 0.5 * (ang[i] + ang[i + 1])) for i in range(0, r.size, 2)]
    return np.array(merged)


def spec_fact(acvf, method="roots", tol=1e-12, maxiter=500):
    """
    Spectral factorization of a finite autocovariance sequence.

    Returns the monic polynomial `ma` with roots on or outside the unit
    circle, and the innovation variance, such that
    ``innov_var * ma(z) ma(1/z)`` has Laurent coefficients `acvf`.

    method : "roots" factors the symmetric Laurent polynomial directly, pairing
        unit-modulus double roots; "innovations" runs the innovations
        recursion on the covariance extension until the innovation variance
        settles (geometric convergence requires no unit roots).
    """
    g = np.asarray(acvf, dtype=float).ravel()
    if g.size == 0:
        raise ValueError("empty autocovariance sequence")
    scale = np.abs(g).max()
    if scale == 0:
        return np.array([1.0]), 0.0
    nz = np.nonzero(np.abs(g) > 1e-15 * scale)[0]
    g = g[:nz[-1] + 1]
    _density_check(g)
    q = g.size - 1
    if q == 0:
        return np.array([1.0]), float(g[0])
    if method == "innovations":
        ma, v = spec_fact_mvar(g[:, None, None], tol=tol, maxiter=maxiter)
        return ma[:, 0, 0].copy(), float(v[0, 0])
    if method != "roots":
        raise ValueError(f"unknown factorization method {method!r}")

    coefs = np.concatenate([g[:0:-1], g])
    r = np.roots(coefs[::-1])
    mod = np.abs(r)
    ring = np.abs(mod - 1) < 1e-6
    outside = r[(~ring) & (mod > 1)]
    unit = _merge_unit_roots(r[ring]) if ring.any() else np.zeros(0, complex)
    if unit is None or outside.size + unit.size != q:
        chosen = r[np.argsort(-mod)[:q]]
    else:
        chosen = np.concatenate([outside, unit])
    ma = np.array([1.0 + 0j])
    for root in chosen:
        ma = np.convolve(ma, [1.0, -1.0 / root])
    ma = ma.real
    innov = g[0] / np.dot(ma, ma)
    return ma, float(innov)


def spec_fact_mvar(acvf, tol=1e-12, maxiter=500):
    """
    Multivariate spectral factorization by the block innovations recursion.

    acvf : array (q+1, N, N) of Gamma(h) = E[X_{t+h} X_t'].
    Returns (ma, innov_cov) with ma of shape (q+1, N, N), ma[0] = I, so that
    X_t = sum_j ma_j e_{t-j} with Var(e) = innov_cov.
    """
    G = np.asarray(acvf, dtype=float)
    if G.ndim == 1:
        G = G[:, None, None]
    q, N = G.shape[0] - 1, G.shape[1]
    if not np.allclose(G[0], G[0].T, atol=1e-12 * max(1.0, np.abs(G[0]).max())):
        raise ValueError("lag-0 autocovariance is not symmetric")
    if N == 1:
        _density_check(G[:, 0, 0])
    eye = np.eye(N)
    if q == 0:
        return eye[None].copy(), G[0].copy()

    def gam(h):
        return G[h] if h <= q else np.zeros((N, N))

    # theta[n] holds Theta_{n,1..q}; V[n] innovation covariances
    V = [G[0].copy()]
    theta = [np.zeros((q, N, N))]
    scale = max(np.abs(G[0]).max(), 1e-300)
    for n in range(1, maxiter + 1):
        th = np.zeros((q, N, N))
        lo = max(0, n - q)
        for k in range(lo, n):
            acc = gam(n - k).copy()
            for j in range(lo, k):
                if k - j <= q:
                    acc -= th[n - j - 1] @ V[j] @ theta[k][k - j - 1].T
            th[n - k - 1] = acc @ np.linalg.pinv(V[k], rcond=1e-13)
        Vn = G[0].copy()
        for j in range(lo, n):
            Vn -= th[n - j - 1] @ V[j] @ th[n - j - 1].T
        V.append(0.5 * (Vn + Vn.T))
        theta.append(th)
        # keep only the window needed by the recursion
        if n > q + 1:
            V[n - q - 2] = None
            theta[n - q - 2] = None
        if np.abs(V[n] - V[n - 1]).max() < tol * scale:
            ma = np.concatenate([eye[None], th])
            return ma, V[n]
    raise RuntimeError("spectral factorization did not converge in "
                       f"{maxiter} iterations")


# ---------------------------------------------------------------------------
# generalized Cholesky

@dataclass(frozen=True)
class GCDPair:
    """Sigma = L diag(D) L' with L unit lower triangular, columns in vrank."""
    L: np.ndarray
    D: np.ndarray
    vrank: tuple

    @property
    def sigma(self):
        return (self.L * self.D) @ self.L.T

    @property
    def N(self):
        return self.L.shape[0]


def gcd_decompose(sigma, vrank=None, tol=1e-14):
    """
    Generalized Cholesky decomposition of a symmetric, possibly singular matrix.

    Pivots with |d_j| below ``tol * trace`` are set to zero and the
    corresponding column of L below the diagonal is zeroed.  Negative pivots
    are returned as computed, so an indefinite input yields negative D
    entries.  `vrank` selects the retained columns (0-based); default all.
    """
    S = np.atleast_2d(np.asarray(sigma, dtype=float))
    N = S.shape[0]
    if S.shape != (N, N):
        raise ValueError("sigma must be square")
    if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max())):
        raise ValueError("sigma must be symmetric")
    L = np.eye(N)
    D = np.zeros(N)
    thresh = tol * max(abs(np.trace(S)), np.abs(np.diag(S)).max(), 1e-300)
    for j in range(N):
        d = S[j, j] - np.sum(L[j, :j] ** 2 * D[:j])
        if abs(d) < thresh:
            D[j] = 0.0
            continue
        D[j] = d
        L[j + 1:, j] = (S[j + 1:, j] - (L[j + 1:, :j] * D[:j]) @ L[j, :j]) / d
    if vrank is None:
        vrank = tuple(range(N))
    vrank = tuple(sorted(int(v) for v in vrank))
    if any(v < 0 or v >= N for v in vrank):
        raise ValueError("vrank indices out of range")
    idx = list(vrank)
    return GCDPair(L[:, idx].copy(), D[idx].copy(), vrank)


# ---------------------------------------------------------------------------
# block Toeplitz

def block_toeplitz(blocks):
    """
    Assemble the NT x NT block Toeplitz matrix whose (i, j) block is
    ``blocks[i - j + T - 1]``; blocks holds lags -(T-1)..(T-1) in order.
    """
    B = np.asarray(blocks, dtype=float)
    if B.ndim == 1:
        B = B[:, None, None]
    m, N = B.shape[0], B.shape[1]
    if m % 2 == 0:
        raise ValueError("block count must be odd (2T - 1)")
    T = (m + 1) // 2
    i, j = np.meshgrid(np.arange(T), np.arange(T), indexing="ij")
    M = B[i - j + T - 1]                      # (T, T, N, N)
    return M.transpose(0, 2, 1, 3).reshape(T * N, T * N)


def toeplitz_from_acvf(acvf, T):
    """Covariance matrix of (X_1..X_T) stacked time-major, from Gamma(0..)."""
    G = np.asarray(acvf, dtype=float)
    if G.ndim == 1:
        G = G[:, None, None]
    N = G.shape[1]
    full = np.zeros((T, N, N))
    n = min(T, G.shape[0])
    full[:n] = G[:n]
    blocks = np.concatenate([np.transpose(full[:0:-1], (0, 2, 1)), full])
    return block_toeplitz(blocks)


# ---------------------------------------------------------------------------
# cepstral product polynomials

def ub_generator(period, n):
    """
    Coefficients of U_{n,s}(B) = prod_{k=1..n} (1 - 2cos(2 pi k/s) B + B^2).

    Computed by exponentiating the summed cepstral series, so the period may
    be fractional.
    """
    s = float(period)
    if s <= 2:
        raise ValueError("period must exceed 2")
    n = int(n)
    if n < 0 or n > np.floor(s / 2):
        raise ValueError(f"n={n} exceeds floor(s/2) for s={s}")
    m = 2 * n
    ell = np.arange(1, m + 1)
    k = np.arange(1, n + 1)
    tau = -2.0 * np.cos(2 * np.pi * np.outer(ell, k) / s).sum(axis=1) / ell
    # exp of a power series: a_j = (1/j) sum_{i=1..j} i tau_i a_{j-i}
    a = np.zeros(m + 1)
    a[0] = 1.0
    w = ell * tau
    for j in range(1, m + 1):
        a[j] = np.dot(w[:j], a[j - 1::-1]) / j
    return a
