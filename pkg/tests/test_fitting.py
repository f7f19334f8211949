import numpy as np
import pytest

from structsig.fitting import (ar_spectrum, gauss_check, glr, mle_fit, mom_fit, mom_start,
                               num_gradient, num_hessian, portmanteau, sample_acvf, tstats)
from structsig.likelihood import lik, simulate
from structsig.model import add_component, mean_init, new_model
from structsig.params import Constraint, psi_to_par

from oracles import LLM_PSI, llm


@pytest.fixture(scope="module")
def llm_data():
    mdl = llm(600)
    return mdl, simulate(mdl, psi_to_par(LLM_PSI, mdl), 600, seed=21)


def test_numeric_derivatives_on_quadratic():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    f = lambda x: x @ A @ x + x[0]
    x = np.array([0.3, -0.7])
    np.testing.assert_allclose(num_gradient(f, x), 2 * A @ x + [1, 0], atol=1e-8)
    np.testing.assert_allclose(num_hessian(f, x), 2 * A, atol=1e-4)


def test_mle_recovers_llm(llm_data):
    mdl, y = llm_data
    res = mle_fit(y, np.zeros(2), mdl)
    assert res.divergence <= lik(LLM_PSI, mdl, y) + 1e-8
    se = np.sqrt(np.diag(2 * np.linalg.inv(res.hessian)))
    assert np.all(np.abs(res.psi - LLM_PSI) < 4 * se)
    assert np.isclose(res.divergence, lik(res.psi, mdl, y))


def test_whittle_objective(llm_data):
    mdl, y = llm_data
    res = mle_fit(y, np.zeros(2), mdl, objective="whittle", hessian=False)
    exact = mle_fit(y, np.zeros(2), mdl, hessian=False)
    np.testing.assert_allclose(res.psi, exact.psi, atol=0.3)


def test_constraint_pins_coordinate(llm_data):
    mdl, y = llm_data
    con = Constraint(np.array([np.log(2.0)]), np.array([[0.0, 1.0]]))
    res = mle_fit(y, np.array([0.0, np.log(2.0)]), mdl, constraint=con)
    assert res.psi[1] == pytest.approx(np.log(2.0), abs=1e-12)
    t = tstats(mdl, res.psi, res.hessian, con)
    assert np.isinf(t[1]) and np.isfinite(t[0])
    with pytest.raises(ValueError, match="row 0"):
        mle_fit(y, np.zeros(2), mdl, constraint=con)


def test_budget_returns_best_point(llm_data):
    mdl, y = llm_data
    res = mle_fit(y, np.zeros(2), mdl, maxfev=12)
    assert not res.converged and "budget" in res.message
    assert res.divergence == min(v for _, v in res.history)
    assert res.hessian is not None


def test_callback_sees_every_evaluation(llm_data):
    mdl, y = llm_data
    seen = []
    res = mle_fit(y, np.zeros(2), mdl, hessian=False, callback=lambda e, v: seen.append(v))
    assert len(seen) == len(res.history)


def test_mom_llm():
    mdl = llm(6000)
    y = simulate(mdl, psi_to_par(LLM_PSI, mdl), 6000, seed=8)
    par = mom_fit(y, mdl)
    est = [par.sigma(0)[0, 0], par.sigma(1)[0, 0]]
    np.testing.assert_allclose(est, [0.5, 2.0], rtol=0.25)


def test_mom_with_mean_and_start():
    m = add_component(new_model(2, 800), [0, 1], "white-noise", delta=[1, -1])
    m = mean_init(add_component(m, [0, 1], "white-noise"))
    psi = np.array([0.8, -1.0, 0.0, 0.2, 0.4, 0.5, 0.3, -0.2])
    y = simulate(m, psi_to_par(psi, m), 800, seed=4)
    par = mom_fit(y, m)
    np.testing.assert_allclose(par.beta, [0.3, -0.2], atol=0.3)
    start = mom_start(y, m)
    for k in range(2):
        assert np.all(np.linalg.eigvalsh(start.sigma(k)) > 0)
        assert np.isfinite(lik(None, m, y, par=start))


def test_sample_acvf_definition():
    x = np.arange(6.0)[:, None]
    C = sample_acvf(x, 2)
    assert C[1, 0, 0] == pytest.approx(sum(x[t + 1, 0] * x[t, 0] for t in range(5)) / 6)


def test_portmanteau_and_normality():
    rng = np.random.default_rng(2)
    e = rng.standard_normal((3000, 2))
    _, p = portmanteau(e, 10)
    assert p > 0.001
    ar = np.zeros(3000)
    for t in range(1, 3000):
        ar[t] = 0.5 * ar[t - 1] + e[t, 0]
    assert portmanteau(ar, 10)[1] < 1e-6
    assert gauss_check(e).min() > 0.001
    assert gauss_check(rng.exponential(size=500))[0] < 1e-6


def test_tstats_indefinite_hessian():
    t = tstats(llm(10), np.array([1.0, -1.0]), -np.eye(2))
    assert np.all(np.isinf(t)) and t[1] < 0


def test_glr_nested(llm_data):
    mdl, y = llm_data
    small = add_component(new_model(1, 600), [0], "white-noise", delta=[1, -1])
    big = mle_fit(y, np.zeros(2), mdl, hessian=False)
    sub = mle_fit(y, np.zeros(1), small, hessian=False)
    stat, dof = glr(y, sub.psi, big.psi, small, mdl)
    assert dof == 1 and stat > 0


def test_ar_spectrum_ar1():
    rng = np.random.default_rng(6)
    x = np.zeros(5000)
    e = rng.standard_normal(5000)
    for t in range(1, 5000):
        x[t] = 0.7 * x[t - 1] + e[t]
    lam, f, p = ar_spectrum(x)
    assert p >= 1
    truth = 1 / np.abs(1 - 0.7 * np.exp(-1j * lam)) ** 2
    np.testing.assert_allclose(f, truth, rtol=0.3)
