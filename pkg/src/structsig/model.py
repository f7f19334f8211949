"""
Declarative latent-component model: components, differencing operators and
per-series regression effects.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .polyalg import poly_mult, unit_root_count

__all__ = [
    "CLASSES", "LatentComponent", "Regressor", "ModelSpec", "new_model",
    "add_component", "mean_init", "add_regressor", "fixed_effect",
    "regression_effect", "coprime", "NULL_TOL",
]

# class name -> number of integers in its order tuple
CLASSES = {
    "white-noise": 0,
    "arma": 2,
    "sarma": 5,
    "varma": 2,
    "svarma": 5,
    "butterworth": 1,
    "balanced": 1,
    "butterworth-stab": 1,
    "balanced-stab": 1,
    "damped-trend": 0,
}

CYCLES = ("butterworth", "balanced", "butterworth-stab", "balanced-stab")

NULL_TOL = 1e-8


def _default_bounds(cls):
    if cls in CYCLES:
        return (0.0, 1.0, 0.0, math.pi)
    if cls == "damped-trend":
        return (-1.0, 1.0)
    return None


@dataclass(frozen=True)
class LatentComponent:
    cls: str
    order: tuple
    vrank: tuple
    delta: np.ndarray
    name: str = ""
    bounds: tuple = None

    @property
    def is_cycle(self):
        return self.cls in CYCLES


@dataclass(frozen=True)
class Regressor:
    """Regressor for one series, stored in levels over t = 1..T.

    `power` marks a polynomial trend regressor t**power, which can be
    evaluated outside the sample.
    """
    series: int
    label: str
    values: np.ndarray
    power: int = None

    def evaluate(self, index):
        """Values at 0-based time indices; zero outside the sample unless a trend."""
        index = np.asarray(index)
        if self.power is not None:
            return (index + 1.0) ** self.power
        out = np.zeros(index.shape)
        ok = (index >= 0) & (index < self.values.size)
        out[ok] = self.values[index[ok]]
        return out


@dataclass(frozen=True)
class ModelSpec:
    N: int
    T: int
    components: tuple = ()
    regressors: tuple = ()
    names: tuple = field(default=None)

    @property
    def delta(self):
        d = np.array([1.0])
        for c in self.components:
            d = poly_mult(d, c.delta)
        return d

    def delta_without(self, k):
        d = np.array([1.0])
        for j, c in enumerate(self.components):
            if j != k:
                d = poly_mult(d, c.delta)
        return d

    def series_regressors(self, j):
        return [r for r in self.regressors if r.series == j]

    def beta_index(self):
        """Per series, the positions in beta of its regressors (series-major)."""
        out, pos = [], 0
        for j in range(self.N):
            n = len(self.series_regressors(j))
            out.append(np.arange(pos, pos + n))
            pos += n
        return out

    @property
    def n_beta(self):
        return len(self.regressors)

    def design(self, j, index=None):
        """Regression design matrix for series j at 0-based times (default 0..T-1)."""
        if index is None:
            index = np.arange(self.T)
        regs = self.series_regressors(j)
        if not regs:
            return np.zeros((len(index), 0))
        return np.column_stack([r.evaluate(index) for r in regs])


def new_model(N, T, names=None):
    """An empty model for N series of length T."""
    if names is not None:
        names = tuple(names)
    return ModelSpec(int(N), int(T), (), (), names)


def coprime(a, b, tol=NULL_TOL):
    """True when the polynomials a and b share no root.

    The test uses the smallest singular value of the Sylvester matrix, which
    stays well conditioned for repeated roots.
    """
    a = np.trim_zeros(np.asarray(a, float), "b")
    b = np.trim_zeros(np.asarray(b, float), "b")
    m, n = a.size - 1, b.size - 1
    if m == 0 or n == 0:
        return True
    S = np.zeros((m + n, m + n))
    for i in range(n):
        S[i, i:i + m + 1] = a / np.abs(a).max()
    for i in range(m):
        S[n + i, i:i + n + 1] = b / np.abs(b).max()
    sv = linalg.svdvals(S)
    return sv[-1] > tol * sv[0]


def add_component(mdl, vrank, cls, order=(), bounds=None, name="", delta=(1.0,)):
    """Append a latent component; its delta must be coprime with the others."""
    if cls not in CLASSES:
        raise ValueError(f"unknown component class {cls!r}")
    order = tuple(int(o) for o in np.atleast_1d(order)) if CLASSES[cls] else ()
    if len(order) != CLASSES[cls]:
        raise ValueError(f"class {cls} expects an order tuple of length {CLASSES[cls]}")
    vrank = tuple(sorted(int(v) for v in vrank))
    if not vrank or vrank[0] < 0 or vrank[-1] >= mdl.N or len(set(vrank)) != len(vrank):
        raise ValueError(f"vrank must be a non-empty subset of 0..{mdl.N - 1}")
    delta = np.asarray(delta, dtype=float)
    if delta[0] != 1.0:
        raise ValueError("delta must have unit leading coefficient")
    for c in mdl.components:
        if not coprime(c.delta, delta):
            raise ValueError(f"delta of {name or cls!r} shares a root with component "
                             f"{c.name or c.cls!r}")
    if bounds is None:
        bounds = _default_bounds(cls)
    comp = LatentComponent(cls, order, vrank, delta, name, tuple(bounds) if bounds else None)
    return replace(mdl, components=mdl.components + (comp,))


def _annihilated(mdl, values, tol):
    x = np.asarray(values, float)
    scale = np.abs(x).max()
    if scale == 0:
        return True
    d = mdl.delta
    if d.size > x.size:
        return False
    y = np.convolve(x, d, mode="valid")
    return np.abs(y).max() < tol * scale


def mean_init(mdl, data=None, d_extra=0):
    """
    Add trend-mean regressors to every series.

    With a d-fold unit root at one in delta (d > 0), the single regressor t**d
    is added; otherwise t**0 .. t**d_extra.
    """
    d = unit_root_count(mdl.delta)
    powers = [d] if d > 0 else list(range(int(d_extra) + 1))
    t = np.arange(1, mdl.T + 1, dtype=float)
    regs = list(mdl.regressors)
    for j in range(mdl.N):
        for p in powers:
            regs.append(Regressor(j, "Trend", t ** p, p))
    return replace(mdl, regressors=tuple(sorted(regs, key=lambda r: r.series)))


def add_regressor(mdl, series, reg, label, tol=NULL_TOL):
    """
    Append a regressor for one series unless delta(B) annihilates it, in
    which case the model is returned unchanged.
    """
    reg = np.asarray(reg, dtype=float).ravel()
    if reg.size != mdl.T:
        raise ValueError(f"regressor length {reg.size} differs from T={mdl.T}")
    if _annihilated(mdl, reg, tol):
        return mdl
    regs = list(mdl.regressors) + [Regressor(int(series), str(label), reg.copy())]
    return replace(mdl, regressors=tuple(sorted(regs, key=lambda r: r.series)))


def regression_effect(mdl, beta, index=None):
    """z_t' beta for every series at 0-based times; shape (len(index), N)."""
    if index is None:
        index = np.arange(mdl.T)
    beta = np.asarray(beta, dtype=float)
    out = np.zeros((len(index), mdl.N))
    for j, pos in enumerate(mdl.beta_index()):
        if pos.size:
            out[:, j] = mdl.design(j, index) @ beta[pos]
    return out


def fixed_effect(mdl, series, beta, label, index=None):
    """Sum of z_t(j) beta over the regressors of `series` carrying `label`."""
    if index is None:
        index = np.arange(mdl.T)
    regs = mdl.series_regressors(series)
    pos = mdl.beta_index()[series]
    hits = [i for i, r in enumerate(regs) if r.label == label]
    if not hits:
        raise KeyError(f"no regressor labelled {label!r} for series {series}")
    beta = np.asarray(beta, dtype=float)
    return sum(regs[i].evaluate(index) * beta[pos[i]] for i in hits)
