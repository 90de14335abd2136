"""Constrained minimization of the biharmonic g-energy on a modular sphere.

For ``r > 0`` the solver minimizes ``rho_G(Laplacian u)`` subject to
``rho_G(u) = r`` and reports the minimizer ``u_r``, the minimum ``c_r`` and
the eigenvalue obtained by testing the weak equation with ``u_r`` itself:

    lambda_r = sum w g(|Lu|)|Lu| / sum w g(|u|)|u|.

Descent directions are gradients taken in the lagged metric
``A^T W diag(g(|Au|)/|Au|) A`` (frozen at the current iterate), projected
onto the tangent space of the constraint and retracted radially onto the
sphere.  A unit step is then nonlinear inverse iteration; with
``G(t) = t^2/2`` it is exactly inverse iteration.  Once the residual is small
the energy is flat at rounding level, and Newton steps on the bordered
eigen-system finish the solve.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse.linalg import splu

from orlicz_biharm.biharmonic import (
    _gradient_values,
    _residual_values,
    default_eps_reg,
    density,
    flux,
    flux_derivative,
    lagged_metric,
    laplacian_operator,
)
from orlicz_biharm.grid import Grid, GridFunction
from orlicz_biharm.nfunction import NFunction, require_growth_bound
from orlicz_biharm.orlicz_space import weighted_modular
from orlicz_biharm.parallel import map_concurrent

__all__ = [
    "SolverConfig",
    "EigenResult",
    "BoundCheck",
    "LowerBoundReport",
    "ProjectionError",
    "project_to_sphere",
    "solve_constrained",
    "rayleigh_quotient",
    "rayleigh_lambda0",
    "check_lower_bounds",
    "random_start",
]


ENERGY_SLACK = 1e-14
# residual below which Newton steps on the eigen-system are attempted
NEWTON_SWITCH = 1e-3


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 3000
    grad_tol: float = 1e-8
    step0: float = 1.0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    sphere_tol: float = 1e-12
    seed: int = 0
    n_starts: int = 4
    lambda0_starts: int = 8
    eps_reg: float | None = None

    def __post_init__(self):
        for name in ("max_iters", "grad_tol", "step0", "armijo_c", "sphere_tol",
                     "n_starts", "lambda0_starts"):
            if not getattr(self, name) > 0:
                raise ValueError(f"solver setting {name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.eps_reg is not None and self.eps_reg < 0:
            raise ValueError("eps_reg must be non-negative")

    def regularization(self, grid: Grid) -> float:
        return default_eps_reg(grid) if self.eps_reg is None else self.eps_reg


@dataclass(eq=False)
class EigenResult:
    u_r: GridFunction
    c_r: float
    lambda_r: float
    residual: float
    r: float
    iterations: int
    converged: bool
    eps_reg: float
    history: list = field(default_factory=list, repr=False)

    def scalars(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("u_r", "history")}
        d["n_nodes"] = self.u_r.grid.size
        return d


def _scale_to_modular(spec: NFunction, values: np.ndarray, weights: np.ndarray, r: float) -> float:
    """Scale ``s > 0`` with ``modular(s u) = r`` (the map is strictly increasing in ``s``)."""

    def excess(log_s):
        return weighted_modular(spec, math.exp(log_s) * values, weights) - r

    lo = hi = 0.0
    while excess(lo) > 0:
        lo -= math.log(2.0)
    while excess(hi) < 0:
        hi += math.log(2.0)
    if lo == hi:
        return 1.0
    return math.exp(brentq(excess, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200))


def project_to_sphere(spec: NFunction, u: GridFunction, r: float) -> GridFunction:
    """Radial projection ``s u`` onto ``{modular = r}``."""
    if not r > 0:
        raise ValueError("sphere radius r must be positive")
    if not np.any(u.values):
        raise ProjectionError("cannot project zero onto modular sphere")
    s = _scale_to_modular(spec, u.values, u.weights, r)
    return GridFunction(u.grid, s * u.values, u.closed)


def _project_values(spec, values, weights, r):
    return _scale_to_modular(spec, values, weights, r) * values


def random_start(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Smooth random nodal field: white noise passed once through the inverse biharmonic form."""
    op = laplacian_operator(grid)
    v = op.solve_stiffness(op.weights * rng.standard_normal(grid.size))
    return v / np.max(np.abs(v))


def _weak_quotient(specG, specB, op, values):
    lu = op(values)
    num = float(np.dot(op.closed_weights, specG.g(lu) * lu))
    den = float(np.dot(op.weights, specB.g(values) * values))
    return num / den


def _normalize_sign(values):
    k = int(np.argmax(np.abs(values)))
    return -values if values[k] < 0 else values


def _armijo_ok(E_trial, E, decrease):
    # rounding allowance: near convergence energy changes sit at summation-noise level
    return E_trial <= E - decrease + ENERGY_SLACK * abs(E)


def _newton_step(spec, op, values, lam, eps):
    """Newton update for ``grad E(u) = lam W flux(u)`` bordered with the sphere constraint."""
    A, w = op.matrix, op.weights
    J = (A.T @ sp.diags(op.closed_weights * flux_derivative(spec, op(values), eps)) @ A
         - sp.diags(lam * w * flux_derivative(spec, values, eps)))
    b = w * flux(spec, values, eps)
    c = w * spec.g(values)
    K = sp.bmat([[J, -b[:, None]], [c[None, :], None]], format="csc")
    F = _gradient_values(spec, op, values, eps) - lam * b
    try:
        delta = splu(K).solve(-np.append(F, 0.0))
    except RuntimeError:
        return None
    if not np.all(np.isfinite(delta)):
        return None
    return values + delta[:-1]


def _descend_on_sphere(spec, grid, r, cfg, u0):
    op = laplacian_operator(grid)
    eps = cfg.regularization(grid)
    w = op.weights
    u = _project_values(spec, u0, w, r)
    E = weighted_modular(spec, op(u), op.closed_weights)
    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gE = _gradient_values(spec, op, u, eps)
        gC = w * spec.g(u)
        lam = _weak_quotient(spec, spec, op, u)
        res = _residual_values(spec, spec, op, u, lam, eps)
        history.append({"iter": it - 1, "energy": E, "lambda": lam, "residual": res,
                        "modular": weighted_modular(spec, u, w)})
        if res < cfg.grad_tol:
            converged = True
            break
        if res < NEWTON_SWITCH:
            # the energy is flat at rounding level here, so accept on residual decrease
            cand = _newton_step(spec, op, u, lam, eps)
            if cand is not None and np.any(cand):
                cand = _project_values(spec, cand, w, r)
                E_cand = weighted_modular(spec, op(cand), op.closed_weights)
                lam_cand = _weak_quotient(spec, spec, op, cand)
                if (_armijo_ok(E_cand, E, 0.0)
                        and _residual_values(spec, spec, op, cand, lam_cand, eps) < 0.5 * res):
                    u, E = cand, E_cand
                    history[-1]["step"] = "newton"
                    continue
        solve = lagged_metric(spec, op, u, eps)
        xi = solve(gE)
        eta = solve(gC)
        mu = float(np.dot(gC, xi) / np.dot(gC, eta))
        d = xi - mu * eta
        slope = float(np.dot(gE, d))
        if not slope > 0:
            break
        tau = cfg.step0
        while True:
            trial = _project_values(spec, u - tau * d, w, r)
            E_trial = weighted_modular(spec, op(trial), op.closed_weights)
            if _armijo_ok(E_trial, E, cfg.armijo_c * tau * slope):
                break
            tau *= cfg.backtrack
            if tau < 1e-12 * cfg.step0:
                break
        if not _armijo_ok(E_trial, E, 0.0):
            break
        u, E = trial, E_trial
        history[-1]["step"] = tau
    lam = _weak_quotient(spec, spec, op, u)
    res = _residual_values(spec, spec, op, u, lam, eps)
    converged = converged or res < cfg.grad_tol
    return _normalize_sign(u), E, lam, res, it, converged, history


def solve_constrained(specG: NFunction, grid: Grid, r: float,
                      cfg: SolverConfig | None = None) -> EigenResult:
    """Minimize ``rho_G(Laplacian u)`` on ``{rho_G(u) = r}`` from ``cfg.n_starts`` seeded starts.

    The lowest-energy run is kept.  Non-convergence within ``max_iters`` is
    reported through ``converged=False``.
    """
    cfg = cfg or SolverConfig()
    require_growth_bound(specG)
    if not r > 0:
        raise ValueError("sphere radius r must be positive")
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_starts)
    starts = [random_start(grid, np.random.default_rng(s)) for s in seeds]
    runs = map_concurrent(lambda u0: _descend_on_sphere(specG, grid, r, cfg, u0), starts)
    u, E, lam, res, iters, conv, hist = min(runs, key=lambda run: (not run[5], run[1]))
    return EigenResult(GridFunction(grid, u), E, lam, res, r, iters, conv,
                       cfg.regularization(grid), hist)


# Rayleigh quotient ---------------------------------------------------------

def _h_prime(spec: NFunction, t):
    # derivative of t -> g(|t|)|t|
    return np.sign(t) * (spec.tdg(t) + np.abs(spec.g(t)))


def rayleigh_quotient(specG: NFunction, u: GridFunction) -> float:
    """``sum w g(|Lu|)|Lu| / sum w g(|u|)|u|``."""
    return _weak_quotient(specG, specG, laplacian_operator(u.grid), u.values)


_LOG_SCALES = np.arange(-30.0, 30.5, 0.5)


def _best_log_scale(quotient, u, around=None):
    """Log-amplitude minimizing the quotient along the ray through ``u``.

    Without ``around`` the whole range is scanned first; otherwise only a unit
    window around the previous optimum is searched.
    """
    def f(ls):
        return quotient(math.exp(ls) * u)

    if around is None:
        vals = [f(ls) for ls in _LOG_SCALES]
        k = int(np.argmin(vals))
        lo = _LOG_SCALES[max(k - 1, 0)]
        hi = _LOG_SCALES[min(k + 1, len(_LOG_SCALES) - 1)]
        best = (vals[k], float(_LOG_SCALES[k]))
    else:
        around = float(np.clip(around, _LOG_SCALES[0], _LOG_SCALES[-1]))
        lo, hi = around - 1.0, around + 1.0
        best = (f(around), around)
    opt = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
    return min((opt.fun, float(opt.x)), best)[1]


def _minimize_quotient(spec, grid, cfg, u0):
    """Nonlinear inverse iteration for ``sum w h(Lu) / sum w h(u)`` with ``h(t) = g(t) t``."""
    op = laplacian_operator(grid)
    w, wc, A = op.weights, op.closed_weights, op.matrix
    eps = cfg.regularization(grid)
    exps = spec.exponents()
    homogeneous = exps.exact and exps.p_minus == exps.p_plus

    def parts(v):
        lv = op(v)
        return float(np.dot(wc, spec.g(lv) * lv)), float(np.dot(w, spec.g(v) * v)), lv

    def quotient(v):
        N, D, _ = parts(v)
        return N / D

    shape = u0 / np.max(np.abs(u0))
    log_s = None
    Q = quotient(shape)
    flat = 0
    for _ in range(cfg.max_iters):
        # the shape stays at unit peak; amplitude only matters when G is not a pure power
        if homogeneous:
            u = shape
        else:
            log_s = _best_log_scale(quotient, shape, log_s)
            u = math.exp(log_s) * shape
        N, D, lu = parts(u)
        Q_u = N / D
        gQ = (op.transpose_apply(wc * _h_prime(spec, lu)) - Q_u * w * _h_prime(spec, u)) / D
        # lagged metric of h: a unit step is nonlinear inverse iteration
        phi = density(spec, lu, eps) + flux_derivative(spec, lu, eps)
        phi = np.maximum(phi, 1e-8 * float(np.max(phi)))
        M = (A.T @ sp.diags(wc * phi) @ A).tocsc()
        d = D * splu(M).solve(gQ)
        slope = float(np.dot(gQ, d))
        Q_new = Q_u
        if slope > 0:
            tau = cfg.step0
            while tau > 1e-12 * cfg.step0:
                trial = u - tau * d
                Nt, Dt, _ = parts(trial)
                if Dt > 0 and Nt / Dt <= Q_u - cfg.armijo_c * tau * slope:
                    u, Q_new = trial, Nt / Dt
                    break
                tau *= cfg.backtrack
        peak = float(np.max(np.abs(u)))
        shape = u / peak
        if log_s is not None:
            log_s += math.log(peak)
        flat = flat + 1 if Q - Q_new <= 1e-13 * Q else 0
        Q = min(Q, Q_new)
        if flat >= 3:
            break
    return Q


def rayleigh_lambda0(specG: NFunction, grid: Grid, cfg: SolverConfig | None = None) -> float:
    """Best quotient value found from ``cfg.lambda0_starts`` seeded starts.

    This is an upper estimate of the infimum of the quotient; attainment is
    not claimed.
    """
    cfg = cfg or SolverConfig()
    require_growth_bound(specG)
    seeds = np.random.SeedSequence([cfg.seed, 7]).spawn(cfg.lambda0_starts)
    starts = [random_start(grid, np.random.default_rng(s)) for s in seeds]
    values = map_concurrent(lambda u0: _minimize_quotient(specG, grid, cfg, u0), starts)
    return float(min(values))


# Lower bounds --------------------------------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    tol: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - self.tol


@dataclass(frozen=True)
class LowerBoundReport:
    checks: tuple[BoundCheck, ...]

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def failures(self) -> list[BoundCheck]:
        return [c for c in self.checks if not c.holds]


def check_lower_bounds(result: EigenResult, specG: NFunction,
                       lambda0_estimate: float | None = None,
                       cfg: SolverConfig | None = None, rel_tol: float = 1e-8) -> LowerBoundReport:
    """Check ``lambda_r >= p- c_r / (r p+)`` and ``lambda_r >= lambda0`` for a converged run."""
    if not result.converged:
        raise ValueError("lower bounds are only checked on converged runs")
    exps = require_growth_bound(specG)
    if lambda0_estimate is None:
        lambda0_estimate = rayleigh_lambda0(specG, result.u_r.grid, cfg)
    growth = exps.p_minus * result.c_r / (result.r * exps.p_plus)
    checks = (
        BoundCheck("growth", result.lambda_r, growth, rel_tol * abs(growth)),
        BoundCheck("lambda0", result.lambda_r, lambda0_estimate, rel_tol * abs(lambda0_estimate)),
    )
    return LowerBoundReport(checks)
