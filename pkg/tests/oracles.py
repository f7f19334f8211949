"""Independent reference computations used by the tests."""
import numpy as np
from scipy import linalg

from structsig.acf import varma_acvf
from structsig.model import add_component, new_model


def dense_divergence(acvf, data):
    """-2 log density of the observed coordinates of a stationary series, no 2 pi."""
    acvf = np.asarray(acvf)
    if acvf.ndim == 1:
        acvf = acvf[:, None, None]
    T, N = data.shape
    S = np.zeros((T * N, T * N))
    for s in range(T):
        for t in range(T):
            h = t - s
            S[t * N:(t + 1) * N, s * N:(s + 1) * N] = acvf[h] if h >= 0 else acvf[-h].T
    obs = ~np.isnan(data.ravel())
    Sub = S[np.ix_(obs, obs)]
    x = data.ravel()[obs]
    cf = linalg.cho_factor(Sub, lower=True)
    return 2 * np.log(np.diag(cf[0])).sum() + x @ linalg.cho_solve(cf, x), S, obs


def dense_casts(acvf, data):
    """Conditional mean and covariance of the missing coordinates."""
    _, S, obs = dense_divergence(acvf, data)
    x = data.ravel()[obs]
    mis = ~obs
    K = S[np.ix_(mis, obs)] @ np.linalg.inv(S[np.ix_(obs, obs)])
    return K @ x, S[np.ix_(mis, mis)] - K @ S[np.ix_(obs, mis)]


def random_varma(rng, N, p=1, q=1, radius=0.9):
    """A stable VARMA(p, q) with a random positive-definite innovation covariance."""
    ar = np.zeros((p + 1, N, N))
    ar[0] = np.eye(N)
    for j in range(1, p + 1):
        A = rng.standard_normal((N, N))
        ar[j] = -A * (radius / p) / max(np.abs(np.linalg.eigvals(A)).max(), 1e-3)
    ma = np.zeros((q + 1, N, N))
    ma[0] = np.eye(N)
    for j in range(1, q + 1):
        ma[j] = 0.4 * rng.standard_normal((N, N))
    B = rng.standard_normal((N, N))
    return ar, ma, B @ B.T + 0.5 * np.eye(N)


def random_acvf(rng, N, max_lag):
    ar, ma, sig = random_varma(rng, N)
    return varma_acvf(ar, ma, sig, max_lag)


def llm(T, N=1):
    """Local level plus noise."""
    mdl = new_model(N, T)
    mdl = add_component(mdl, list(range(N)), "white-noise", name="trend", delta=[1.0, -1.0])
    return add_component(mdl, list(range(N)), "white-noise", name="irregular")


LLM_PSI = np.log([0.5, 2.0])


def classic_2x12():
    w = np.full(13, 1 / 12)
    w[[0, -1]] = 1 / 24
    return w
