"""
Local level model: simulate, fit by maximum likelihood, extract the level.

The level is a random walk observed with white noise.  After fitting, the
level is extracted twice, once with the exact finite-sample matrices and
once with a truncated Wiener-Kolmogorov filter.  With a window of 50 the two
differ only by the filter mass beyond lag 50.
"""
import numpy as np

import structsig as ss
from structsig.fitting import tstats

T = 300
mdl = ss.new_model(1, T, ["y"])
mdl = ss.add_component(mdl, [0], "white-noise", name="level", delta=[1, -1])
mdl = ss.add_component(mdl, [0], "white-noise", name="noise")

truth = np.log([0.5, 2.0])
y = ss.simulate(mdl, ss.psi_to_par(truth, mdl), seed=1)

fit = ss.mle_fit(y, np.zeros(2), mdl)
print("true variances     ", np.exp(truth))
print("estimated variances", np.exp(fit.psi).round(3))
print("divergence at fit  ", round(fit.divergence, 4),
      " at truth", round(ss.lik(truth, mdl, y), 4))
print("t statistics       ", tstats(mdl, fit.psi, fit.hessian).round(2))

wk = ss.wk_extract(fit.par, mdl, y, [0], window=50)
exact = ss.extract(y, ss.signal_matrix(y, fit.par, mdl, [0]), mdl, fit.par)
print("max |WK - exact|   ", f"{np.abs(wk.point - exact.point).max():.2e}")

# a stretch of missing values widens the bands locally
z = y.copy()
z[150:160] = np.nan
gap = ss.wk_extract(fit.par, mdl, z, [0], window=50)
half = (gap.upper - gap.point)[:, 0]
print("band half-width at t=100 / t=155:", half[100].round(3), half[155].round(3))
