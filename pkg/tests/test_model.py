import numpy as np
import pytest

from structsig.model import (add_component, add_regressor, coprime, fixed_effect,
                             mean_init, new_model, regression_effect)
from structsig.polyalg import ub_generator


def test_coprime():
    assert coprime([1, -1], [1, 1])
    assert not coprime([1, -1], [1, 0, -1])
    assert not coprime(np.convolve([1, -1], [1, -1]), [1, -1])
    seas = ub_generator(12, 6)
    assert coprime([1, -2, 1], seas[:12])   # 1 + B + .. + B^11 has no root at 1


def test_add_component_rejects_shared_roots_and_bad_input():
    m = add_component(new_model(1, 50), [0], "white-noise", delta=[1, -1])
    with pytest.raises(ValueError):
        add_component(m, [0], "white-noise", delta=[1, -2, 1])
    with pytest.raises(ValueError):
        add_component(m, [3], "white-noise")
    with pytest.raises(ValueError):
        add_component(m, [0], "arma", order=(1,))
    m = add_component(m, [0], "arma", order=(1, 1))
    np.testing.assert_allclose(m.delta, [1, -1])


def test_mean_init_powers():
    m = add_component(new_model(2, 10), [0, 1], "white-noise", delta=[1, -2, 1])
    m = mean_init(m)
    assert [r.power for r in m.regressors] == [2, 2]
    s = mean_init(add_component(new_model(1, 10), [0], "white-noise"), d_extra=1)
    assert [r.power for r in s.regressors] == [0, 1]


def test_add_regressor_skips_annihilated():
    m = add_component(new_model(1, 20), [0], "white-noise", delta=[1, -1])
    assert add_regressor(m, 0, np.ones(20), "c").n_beta == 0
    step = (np.arange(20) >= 10).astype(float)
    assert add_regressor(m, 0, step, "ls").n_beta == 1


def test_regression_and_fixed_effect():
    m = add_component(new_model(2, 6), [0, 1], "white-noise")
    m = mean_init(m)
    ao = np.zeros(6)
    ao[3] = 1.0
    m = add_regressor(m, 1, ao, "AO")
    beta = np.array([2.0, -1.0, 5.0])
    eff = regression_effect(m, beta)
    np.testing.assert_allclose(eff[:, 0], 2.0)
    np.testing.assert_allclose(eff[:, 1], -1.0 + 5.0 * ao)
    np.testing.assert_allclose(fixed_effect(m, 1, beta, "AO"), 5.0 * ao)
    # trend regressors extrapolate, others are zero outside the sample
    out = regression_effect(m, beta, np.array([-2, 8]))
    np.testing.assert_allclose(out, [[2.0, -1.0], [2.0, -1.0]])
