"""Discrete modulars and Luxemburg norms on grid functions."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from orlicz_biharm.grid import GridFunction
from orlicz_biharm.nfunction import NFunction

__all__ = ["modular", "luxemburg_norm", "norm_2G", "modular_2G", "xi_minus", "xi_plus"]


def modular(spec: NFunction, u: GridFunction) -> float:
    """Quadrature of ``G(u)``: ``sum_i w_i G(u_i)``."""
    return float(np.dot(u.weights, spec.G(u.values)))


def weighted_modular(spec: NFunction, values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.dot(weights, spec.G(values)))


def _luxemburg(spec: NFunction, values: np.ndarray, weights: np.ndarray) -> float:
    peak = float(np.max(np.abs(values), initial=0.0))
    if peak == 0.0:
        return 0.0

    # work with the unit-peak shape so tiny or huge amplitudes stay representable
    shape = values / peak
    log_peak = math.log(peak)

    def excess(log_lam):
        return weighted_modular(spec, shape * math.exp(log_peak - log_lam), weights) - 1.0

    # modular(u / lam) is strictly decreasing in lam; bracket on the log axis
    lo = hi = log_peak
    while excess(lo) < 0:
        lo -= math.log(2.0)
    while excess(hi) > 0:
        hi += math.log(2.0)
    if lo == hi:
        return math.exp(lo)
    root = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(root)


def luxemburg_norm(spec: NFunction, u: GridFunction) -> float:
    """``inf {lam > 0 : modular(u / lam) <= 1}``; 0 for the zero function."""
    return _luxemburg(spec, u.values, u.weights)


def norm_2G(spec: NFunction, u: GridFunction) -> float:
    """Luxemburg norm of the clamped discrete Laplacian of ``u``."""
    from orlicz_biharm.biharmonic import apply_laplacian

    return luxemburg_norm(spec, apply_laplacian(u))


def modular_2G(spec: NFunction, u: GridFunction) -> float:
    """The second-order modular ``rho_G(Laplacian u)``."""
    from orlicz_biharm.biharmonic import apply_laplacian

    return modular(spec, apply_laplacian(u))


def xi_minus(t, p_minus: float, p_plus: float):
    t = np.asarray(t, dtype=float)
    return np.minimum(t**p_minus, t**p_plus)


def xi_plus(t, p_minus: float, p_plus: float):
    t = np.asarray(t, dtype=float)
    return np.maximum(t**p_minus, t**p_plus)
