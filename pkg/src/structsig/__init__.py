"""Latent-component time series models: fitting, casting and signal extraction."""
from . import acf, dates, extraction, fitting, likelihood, model, params, polyalg
from .extraction import (FilterKernel, adhoc_extract, extract, frf, hi_to_low,
                         publish_decomposition, signal_matrix, wk_coeffs, wk_extract,
                         x11_filters)
from .fitting import mle_fit, mom_fit, mom_start
from .likelihood import lik, midcast, resid, simulate
from .model import add_component, add_regressor, mean_init, new_model
from .params import Constraint, ParamSet, par_to_psi, psi_len, psi_to_par

__all__ = [
    "acf", "dates", "extraction", "fitting", "likelihood", "model", "params", "polyalg",
    "FilterKernel", "adhoc_extract", "extract", "frf", "hi_to_low", "publish_decomposition",
    "signal_matrix", "wk_coeffs", "wk_extract", "x11_filters", "mle_fit", "mom_fit",
    "mom_start", "lik", "midcast", "resid", "simulate", "add_component", "add_regressor",
    "mean_init", "new_model", "Constraint", "ParamSet", "par_to_psi", "psi_len", "psi_to_par",
]

__version__ = "0.1.0"
