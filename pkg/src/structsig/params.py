"""
Bijection between the unconstrained pre-parameter vector psi = (xi, zeta, beta)
and interpretable parameters, linear constraints, condition numbers and
rank reduction.
"""
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .polyalg import GCDPair, gcd_decompose

__all__ = [
    "pacf_map", "pacf_unmap", "var_map", "var_unmap", "bounded_map",
    "bounded_unmap", "xi_len", "xi_map", "xi_unmap", "zetalen", "zeta_map",
    "zeta_unmap", "ParamSet", "psi_len", "psi_to_par", "par_to_psi",
    "default_param", "Constraint", "eta_to_psi", "psi_to_eta", "constraint_affine",
    "conditions", "render_pd", "reduce", "constrain_reg", "companion_radius",
]


# ---------------------------------------------------------------------------
# scalar pacf map (AR polynomial 1 - sum phi_j z^j)

def pacf_map(zeta):
    """Map reals to the coefficients of a stable polynomial 1 - sum phi_j z^j."""
    zeta = np.asarray(zeta, dtype=float).ravel()
    phi = np.zeros(0)
    for z in zeta:
        a = np.tanh(0.5 * z)            # (e^z - 1)/(e^z + 1)
        phi = np.concatenate([phi - a * phi[::-1], [a]])
    return phi


def pacf_unmap(phi):
    """Inverse of pacf_map; raises for a polynomial with roots inside the unit disk."""
    phi = np.asarray(phi, dtype=float).ravel().copy()
    p = phi.size
    zeta = np.zeros(p)
    for j in range(p, 0, -1):
        a = phi[-1]
        if not abs(a) < 1:
            raise ValueError("polynomial is not stable (partial autocorrelation "
                             f"{a:.6g} at lag {j})")
        zeta[j - 1] = 2 * np.arctanh(a)
        head = phi[:-1]
        phi = (head + a * head[::-1]) / (1 - a * a)
    return zeta


# ---------------------------------------------------------------------------
# VAR map through partial autocorrelation matrices

def _contract(A):
    # R^{NxN} -> {P : ||P||_2 < 1}, P = A h(A'A) with singular values tanh(s/2)
    w, V = np.linalg.eigh(A.T @ A)
    s = np.sqrt(np.clip(w, 0, None))
    f = np.where(s > 1e-8, np.tanh(0.5 * s) / np.where(s > 1e-8, s, 1), 0.5 - s ** 2 / 24)
    return A @ (V * f) @ V.T


def _expand(P):
    w, V = np.linalg.eigh(P.T @ P)
    t = np.sqrt(np.clip(w, 0, None))
    if t.max(initial=0) >= 1:
        raise ValueError("partial autocorrelation matrix has norm >= 1")
    f = np.where(t > 1e-8, 2 * np.arctanh(t) / np.where(t > 1e-8, t, 1), 2 + 2 * t ** 2 / 3)
    return P @ (V * f) @ V.T


def companion_radius(Phi):
    """Spectral radius of the companion matrix of I - sum Phi_j z^j."""
    Phi = np.asarray(Phi, dtype=float)
    p, N = Phi.shape[0], Phi.shape[1]
    if p == 0:
        return 0.0
    F = np.zeros((p * N, p * N))
    F[:N] = np.concatenate(list(Phi), axis=1)
    F[N:, :-N] = np.eye((p - 1) * N)
    return np.abs(np.linalg.eigvals(F)).max()


def var_map(zeta, N):
    """
    Map p*N*N reals to a stable VAR(p) coefficient array (p, N, N).

    Each N x N block is contracted to a partial autocorrelation matrix, the
    multivariate Durbin-Levinson recursion builds a VAR with unit lag-0
    covariance, and a Cholesky similarity transform normalizes its
    innovation covariance to the identity.  N = 1 reproduces pacf_map.
    """
    zeta = np.asarray(zeta, dtype=float).ravel()
    p = zeta.size // (N * N)
    if p * N * N != zeta.size:
        raise ValueError("zeta length is not a multiple of N^2")
    if p == 0:
        return np.zeros((0, N, N))
    eye = np.eye(N)
    fwd = np.zeros((0, N, N))
    bwd = np.zeros((0, N, N))
    S, Sb = eye.copy(), eye.copy()
    for s in range(p):
        P = _contract(zeta[s * N * N:(s + 1) * N * N].reshape(N, N))
        Ls, Lb = np.linalg.cholesky(S), np.linalg.cholesky(Sb)
        a = Ls @ P @ np.linalg.inv(Lb)
        ab = Lb @ P.T @ np.linalg.inv(Ls)
        new_f = fwd - np.einsum("ij,kjl->kil", a, bwd[::-1])
        new_b = bwd - np.einsum("ij,kjl->kil", ab, fwd[::-1])
        fwd = np.concatenate([new_f, a[None]])
        bwd = np.concatenate([new_b, ab[None]])
        S, Sb = S - a @ Sb @ a.T, Sb - ab @ S @ ab.T
    M = np.linalg.inv(np.linalg.cholesky(S))
    Minv = np.linalg.inv(M)
    return np.einsum("ij,kjl,lm->kim", M, fwd, Minv)


def _var_acvf_unit(Phi, max_lag):
    # autocovariances of a VAR with identity innovation covariance
    p, N = Phi.shape[0], Phi.shape[1]
    F = np.zeros((p * N, p * N))
    F[:N] = np.concatenate(list(Phi), axis=1)
    F[N:, :-N] = np.eye((p - 1) * N)
    Q = np.zeros((p * N, p * N))
    Q[:N, :N] = np.eye(N)
    G = linalg.solve_discrete_lyapunov(F, Q)
    out = np.zeros((max_lag + 1, N, N))
    for h in range(min(p, max_lag + 1)):
        out[h] = G[:N, h * N:(h + 1) * N]
    for h in range(p, max_lag + 1):
        out[h] = sum(Phi[k] @ out[h - k - 1] for k in range(p))
    return out


def var_unmap(Phi):
    """Inverse of var_map; raises for a non-stable VAR."""
    Phi = np.asarray(Phi, dtype=float)
    p, N = Phi.shape[0], Phi.shape[1]
    if p == 0:
        return np.zeros(0)
    if companion_radius(Phi) >= 1:
        raise ValueError("VAR polynomial is not stable")
    G = _var_acvf_unit(Phi, p)
    C = np.linalg.cholesky(0.5 * (G[0] + G[0].T))
    Ci = np.linalg.inv(C)
    G = np.einsum("ij,hjk,lk->hil", Ci, G, Ci)
    fwd = np.zeros((0, N, N))
    bwd = np.zeros((0, N, N))
    S, Sb = G[0].copy(), G[0].copy()
    out = []
    for s in range(p):
        delta = G[s + 1] - sum(fwd[k] @ G[s - k] for k in range(s))
        Ls, Lb = np.linalg.cholesky(S), np.linalg.cholesky(Sb)
        P = np.linalg.solve(Ls, delta) @ np.linalg.inv(Lb).T
        out.append(_expand(P).ravel())
        a = delta @ np.linalg.inv(Sb)
        ab = delta.T @ np.linalg.inv(S)
        new_f = fwd - np.einsum("ij,kjl->kil", a, bwd[::-1])
        new_b = bwd - np.einsum("ij,kjl->kil", ab, fwd[::-1])
        fwd = np.concatenate([new_f, a[None]])
        bwd = np.concatenate([new_b, ab[None]])
        S, Sb = S - a @ Sb @ a.T, Sb - ab @ S @ ab.T
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# bounded (logistic) map

def bounded_map(zeta, low, high):
    zeta = np.asarray(zeta, dtype=float)
    return low + (high - low) / (1 + np.exp(-zeta))


def bounded_unmap(x, low, high):
    x = np.asarray(x, dtype=float)
    u = (x - low) / (high - low)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("value outside the open bounds")
    return np.log(u) - np.log1p(-u)


# ---------------------------------------------------------------------------
# covariance (xi) map

def xi_len(N, vrank):
    return sum(N - 1 - j for j in vrank) + len(vrank)


def xi_map(xi, N, vrank):
    """Fill the retained columns of L, then D = exp(xi) for each retained index."""
    xi = np.asarray(xi, dtype=float).ravel()
    vrank = tuple(vrank)
    if xi.size != xi_len(N, vrank):
        raise ValueError("xi slice has the wrong length")
    L = np.zeros((N, len(vrank)))
    pos = 0
    for c, j in enumerate(vrank):
        L[j, c] = 1.0
        L[j + 1:, c] = xi[pos:pos + N - 1 - j]
        pos += N - 1 - j
    D = np.exp(xi[pos:])
    return GCDPair(L, D, vrank)


def xi_unmap(gcd):
    if np.any(gcd.D <= 0):
        raise ValueError("D entries must be positive to map back to xi")
    parts = [gcd.L[j + 1:, c] for c, j in enumerate(gcd.vrank)]
    return np.concatenate(parts + [np.log(gcd.D)])


# ---------------------------------------------------------------------------
# serial (zeta) map per class

def zetalen(cls, order, N=1):
    if cls == "arma":
        return order[0] + order[1]
    if cls == "sarma":
        return sum(order[:4])
    if cls == "varma":
        return (order[0] + order[1]) * N * N
    if cls == "svarma":
        return sum(order[:4]) * N * N
    if cls in ("butterworth", "balanced", "butterworth-stab", "balanced-stab"):
        return 2
    if cls == "damped-trend":
        return 1
    if cls == "white-noise":
        return 0
    raise ValueError(f"unknown component class {cls!r}")


def _split(z, sizes):
    out, pos = [], 0
    for s in sizes:
        out.append(z[pos:pos + s])
        pos += s
    return out


def zeta_map(comp, zeta, N):
    """
    Serial parameters of a component.

    arma -> (phi, theta); sarma -> (phi, theta, Phi, Theta), all in the minus
    convention 1 - sum c_j z^j; varma -> (Phi, Theta) arrays (p, N, N);
    svarma -> four such arrays; cycles -> (array([rho, omega]),);
    damped-trend -> (array([phi]),); white-noise -> ().
    """
    cls, order = comp.cls, comp.order
    zeta = np.asarray(zeta, dtype=float).ravel()
    if zeta.size != zetalen(cls, order, N):
        raise ValueError(f"zeta slice for {cls} has the wrong length")
    if cls == "arma":
        return tuple(pacf_map(z) for z in _split(zeta, order[:2]))
    if cls == "sarma":
        return tuple(pacf_map(z) for z in _split(zeta, order[:4]))
    if cls in ("varma", "svarma"):
        k = 2 if cls == "varma" else 4
        return tuple(var_map(z, N) for z in _split(zeta, [o * N * N for o in order[:k]]))
    if comp.is_cycle:
        b = comp.bounds
        return (np.array([bounded_map(zeta[0], b[0], b[1]), bounded_map(zeta[1], b[2], b[3])]),)
    if cls == "damped-trend":
        b = comp.bounds
        return (np.array([bounded_map(zeta[0], b[0], b[1])]),)
    return ()


def zeta_unmap(comp, serial, N):
    cls = comp.cls
    if cls in ("arma", "sarma"):
        parts = [pacf_unmap(s) for s in serial]
    elif cls in ("varma", "svarma"):
        parts = [var_unmap(s) for s in serial]
    elif comp.is_cycle:
        b = comp.bounds
        rho, omega = serial[0]
        parts = [np.atleast_1d(bounded_unmap(rho, b[0], b[1])),
                 np.atleast_1d(bounded_unmap(omega, b[2], b[3]))]
    elif cls == "damped-trend":
        b = comp.bounds
        parts = [np.atleast_1d(bounded_unmap(serial[0][0], b[0], b[1]))]
    else:
        parts = []
    return np.concatenate(parts) if parts else np.zeros(0)


# ---------------------------------------------------------------------------
# full parameter set

@dataclass
class ParamSet:
    """Per-component covariance factors and serial parameters, plus beta."""
    gcd: list
    serial: list
    beta: np.ndarray

    def sigma(self, k):
        return self.gcd[k].sigma

    def copy(self):
        return ParamSet(list(self.gcd), [tuple(np.array(s) for s in ser) for ser in self.serial],
                        np.array(self.beta, dtype=float))


def _layout(mdl):
    N = mdl.N
    xs = [xi_len(N, c.vrank) for c in mdl.components]
    zs = [zetalen(c.cls, c.order, N) for c in mdl.components]
    return xs, zs


def psi_len(mdl):
    xs, zs = _layout(mdl)
    return sum(xs) + sum(zs) + mdl.n_beta


def psi_to_par(psi, mdl):
    psi = np.asarray(psi, dtype=float).ravel()
    xs, zs = _layout(mdl)
    if psi.size != sum(xs) + sum(zs) + mdl.n_beta:
        raise ValueError(f"psi has length {psi.size}, model needs {psi_len(mdl)}")
    xi = _split(psi, xs)
    zeta = _split(psi[sum(xs):], zs)
    gcd = [xi_map(x, mdl.N, c.vrank) for x, c in zip(xi, mdl.components)]
    serial = [zeta_map(c, z, mdl.N) for z, c in zip(zeta, mdl.components)]
    beta = psi[sum(xs) + sum(zs):].copy()
    return ParamSet(gcd, serial, beta)


def par_to_psi(par, mdl):
    xi = [xi_unmap(g) for g in par.gcd]
    zeta = [zeta_unmap(c, s, mdl.N) for c, s in zip(mdl.components, par.serial)]
    return np.concatenate(xi + zeta + [np.asarray(par.beta, dtype=float)])


def default_param(mdl):
    """Parameters at psi = 0: identity-like covariances, neutral dynamics, zero beta."""
    return psi_to_par(np.zeros(psi_len(mdl)), mdl)


# ---------------------------------------------------------------------------
# linear constraints C psi = b

@dataclass(frozen=True)
class Constraint:
    b: np.ndarray
    C: np.ndarray

    @classmethod
    def from_rows(cls, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return cls(rows[:, 0].copy(), rows[:, 1:].copy())

    @property
    def rows(self):
        return np.column_stack([self.b, self.C])

    def stack(self, other):
        return Constraint(np.concatenate([self.b, other.b]), np.vstack([self.C, other.C]))

    def residual(self, psi):
        return self.C @ np.asarray(psi, dtype=float) - self.b

    def to_csv(self, path):
        np.savetxt(path, self.rows, delimiter=",", fmt="%.17g")

    @classmethod
    def read_csv(cls, path):
        return cls.from_rows(np.loadtxt(Path(path), delimiter=",", ndmin=2))


def _qr_parts(con):
    C = np.atleast_2d(con.C)
    k, n = C.shape
    if k >= n:
        raise ValueError("constraint must have fewer rows than psi coordinates")
    Q, R, perm = linalg.qr(C, pivoting=True)
    if abs(R[k - 1, k - 1]) <= 1e-12 * max(abs(R[0, 0]), 1e-300):
        raise ValueError("constraint matrix is rank deficient")
    R1, R2 = R[:, :k], R[:, k:]
    nu0 = linalg.solve_triangular(R1, Q.T @ con.b)
    G = linalg.solve_triangular(R1, R2)
    return perm, nu0, G, k, n


def constraint_affine(con, n=None):
    """(A, c) with psi = A eta + c; identity when `con` is None."""
    if con is None:
        return np.eye(n), np.zeros(n)
    perm, nu0, G, k, n = _qr_parts(con)
    A = np.zeros((n, n - k))
    c = np.zeros(n)
    A[perm[:k]] = -G
    A[perm[k:]] = np.eye(n - k)
    c[perm[:k]] = nu0
    return A, c


def eta_to_psi(eta, con=None):
    eta = np.asarray(eta, dtype=float).ravel()
    if con is None:
        return eta.copy()
    perm, nu0, G, k, n = _qr_parts(con)
    psi = np.empty(n)
    psi[perm[:k]] = nu0 - G @ eta
    psi[perm[k:]] = eta
    return psi


def psi_to_eta(psi, con=None):
    psi = np.asarray(psi, dtype=float).ravel()
    if con is None:
        return psi.copy()
    perm, _, _, k, _ = _qr_parts(con)
    return psi[perm[k:]].copy()


# ---------------------------------------------------------------------------
# condition numbers and positive-definite rendering

def _full_gcd(sigma):
    S = np.atleast_2d(np.asarray(sigma, dtype=float))
    return gcd_decompose(S)


def conditions(sigma):
    """Log condition numbers log(d_j / Sigma_jj); -inf marks a singular index."""
    S = np.atleast_2d(np.asarray(sigma, dtype=float))
    g = _full_gcd(S)
    diag = np.diag(S)
    out = np.full(S.shape[0], -np.inf)
    ok = (g.D > 0) & (diag > 0)
    out[ok] = np.log(g.D[ok] / diag[ok])
    return out


def render_pd(sigma, alpha):
    """
    Raise D entries of the GCD so that every log condition number is >= alpha.

    L is kept; for index j the new pivot is max(d_j, q / (exp(-alpha) - 1))
    with q = l' D~ l accumulated over the already-modified earlier pivots.
    """
    if alpha >= 0:
        raise ValueError("alpha must be negative")
    g = _full_gcd(sigma)
    L, D = g.L, g.D.copy()
    c = np.expm1(-alpha)
    for j in range(1, D.size):
        q = np.sum(L[j, :j] ** 2 * D[:j])
        if q > 0 and D[j] < q / c:
            D[j] = q / c
    return (L * D) @ L.T


def reduce(param, mdl, thresh, model_flag=False):
    """
    Repair covariance estimates.

    model_flag False: render each component covariance positive definite at
    level `thresh`.  model_flag True: drop from each rank configuration the
    indices whose condition number falls below `thresh` or whose pivot is
    nonpositive, returning the reduced model and parameters.
    """
    par = param.copy()
    comps = list(mdl.components)
    for k, comp in enumerate(comps):
        sigma = par.gcd[k].sigma
        if not model_flag:
            par.gcd[k] = gcd_decompose(render_pd(sigma, thresh), comp.vrank)
            continue
        g = _full_gcd(sigma)
        tau = conditions(sigma)
        keep = [j for j in comp.vrank if g.D[j] > 0 and tau[j] >= thresh]
        if not keep:
            raise ValueError(f"component {comp.name or k} has no well-conditioned index")
        par.gcd[k] = GCDPair(g.L[:, keep].copy(), g.D[keep].copy(), tuple(keep))
        comps[k] = replace(comp, vrank=tuple(keep))
    return replace(mdl, components=tuple(comps)), par


def constrain_reg(mdl, regindex, combos=None):
    """
    Constraint rows on regression coordinates of psi.

    regindex : per series, indices of its regressors (0-based within series).
    combos   : optional rows (c_1..c_k, b) over the selected coordinates; when
               absent, consecutive equality rows beta_a - beta_b = 0 are built.
    """
    n = psi_len(mdl)
    offset = n - mdl.n_beta
    bidx = mdl.beta_index()
    coords = [offset + bidx[j][i] for j, idx in enumerate(regindex) for i in idx]
    k = len(coords)
    if combos is None:
        C = np.zeros((k - 1, n))
        for r in range(k - 1):
            C[r, coords[r]] = 1.0
            C[r, coords[r + 1]] = -1.0
        return Constraint(np.zeros(k - 1), C)
    combos = np.atleast_2d(np.asarray(combos, dtype=float))
    if combos.shape[1] != k + 1:
        raise ValueError("each combos row needs one weight per selected coordinate plus b")
    C = np.zeros((combos.shape[0], n))
    C[:, coords] = combos[:, :k]
    return Constraint(combos[:, k].copy(), C)
