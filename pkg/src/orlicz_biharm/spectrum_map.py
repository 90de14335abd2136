"""Two-function eigenproblem ``Delta^2_g u = lambda b(|u|)/|u| u``.

Critical points of

    Phi_lambda(u) = rho_G(Laplacian u) - lambda rho_B(u)

are searched for by descent, with the search geometry chosen from the
ordering of the exponent quadruple ``(p-, p+, pB-, pB+)``:

* ``GlobalDescent``: unconstrained descent, for functionals bounded below.
* ``BallLocalMin``: descent inside ``{||u||_{2,G} <= rho}`` with radial
  retraction, for a negative local minimum near the origin.
* ``NehariMin``: descent of ``max_t Phi(t v)`` over ray directions ``v``, for
  the superlinear geometry where every nontrivial critical point sits at a
  positive level and no local minimum other than 0 exists.

Spectrum membership is operational: a run either returns a nontrivial point
with small first-order residual or reports "not found".  Thresholds built
on the embedding constant inherit its status as a sampled lower estimate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh, splu

from orlicz_biharm.biharmonic import (
    _gradient_values,
    dual_norm,
    flux,
    flux_derivative,
    lagged_metric,
    laplacian_operator,
)
from orlicz_biharm.eigensolver import ENERGY_SLACK, NEWTON_SWITCH, SolverConfig, random_start
from orlicz_biharm.grid import Grid, GridFunction
from orlicz_biharm.nfunction import (
    ExponentPair,
    NFunction,
    check_condition_L,
    require_growth_bound,
    sobolev_conjugate_exponent,
)
from orlicz_biharm.orlicz_space import _luxemburg, weighted_modular
from orlicz_biharm.parallel import map_concurrent

__all__ = [
    "Regime",
    "Method",
    "RegimeReport",
    "StartOutcome",
    "CriticalPointResult",
    "classify_regime",
    "regime_report",
    "estimate_embedding_constant",
    "lambda_star",
    "threshold_F",
    "threshold_range",
    "lower_envelope",
    "is_subcritical",
    "phi_value",
    "phi_gradient",
    "bump",
    "find_critical_point",
    "scan_spectrum",
    "summarize_scan",
    "anti_sobolev_witness",
    "sphere_values",
    "negative_multiple",
    "ray_values",
    "WitnessNotFoundError",
]

EXPONENT_TOL = 1e-6
# divergence guard for unconstrained descent
BLOWUP_PEAK = 1e12


class WitnessNotFoundError(RuntimeError):
    pass


class Regime(str, enum.Enum):
    NEAR_ZERO = "NearZero"
    WHOLE_LINE_COERCIVE = "WholeLineCoercive"
    NEAR_INFINITY = "NearInfinity"
    WHOLE_LINE_SUPERLINEAR = "WholeLineSuperlinear"
    UNCLASSIFIED = "Unclassified"


class Method(str, enum.Enum):
    GLOBAL_DESCENT = "GlobalDescent"
    BALL_LOCAL_MIN = "BallLocalMin"
    NEHARI_MIN = "NehariMin"


# Regime analysis -------------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    """Regime of an exponent quadruple plus the thresholds derived from it.

    ``embedding_C`` is a sampled lower estimate of the discrete constant in
    ``||u||_B <= C ||u||_{2,G}``, so ``lambda_star`` and ``lambda_star_star``
    are estimates too.
    """

    exponents: tuple[float, float, float, float]
    regime: Regime
    lambda_star: float | None = None
    lambda_star_star: float | None = None
    embedding_C: float | None = None
    subcritical: bool = True
    rho: float | None = None
    flags: dict = field(default_factory=dict, compare=False)

    def with_embedding(self, C: float, rho: float | None = None) -> "RegimeReport":
        """Fill in the thresholds for a given embedding constant ``C``."""
        if not C > 0:
            raise ValueError("embedding constant must be positive")
        rho = min(0.5 / C, 0.5) if rho is None else rho
        report = replace(self, embedding_C=C, rho=rho, lambda_star=None, lambda_star_star=None)
        if self.regime is Regime.NEAR_ZERO:
            report = replace(report, lambda_star=lambda_star(report, rho))
        rng = threshold_range(report)
        if rng is not None and rng[0] > 0:
            report = replace(report, lambda_star_star=rng[0])
        return report

    def to_dict(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "regime": self.regime.value,
            "lambda_star": self.lambda_star,
            "lambda_star_star": self.lambda_star_star,
            "embedding_C": self.embedding_C,
            "embedding_C_is_estimate": True,
            "subcritical": self.subcritical,
            "rho": self.rho,
            "flags": self.flags,
        }


def classify_regime(expG: ExponentPair, expB: ExponentPair) -> RegimeReport:
    """Regime from the ordering of ``(p-, p+, pB-, pB+)``; ties are left unclassified."""
    pm, pp, bm, bp = expG.p_minus, expG.p_plus, expB.p_minus, expB.p_plus
    if min(pm, pp, bm, bp) <= 1:
        raise ValueError("all four exponents must exceed 1")

    def lt(a, b):
        return a < b - EXPONENT_TOL

    if lt(bm, pm) and lt(pm, bp):
        regime = Regime.NEAR_ZERO
    elif lt(bp, pm):
        regime = Regime.WHOLE_LINE_COERCIVE
    elif lt(pm, bm) and lt(bm, pp):
        regime = Regime.NEAR_INFINITY
    elif lt(pp, bm):
        regime = Regime.WHOLE_LINE_SUPERLINEAR
    else:
        regime = Regime.UNCLASSIFIED
    return RegimeReport((pm, pp, bm, bp), regime)


def lambda_star(report: RegimeReport, rho: float) -> float:
    """``rho^(p+ - pB-) / (2C)``: below it ``Phi`` stays positive on the sphere of radius ``rho``."""
    if report.regime is not Regime.NEAR_ZERO:
        raise ValueError("lambda_star is defined for the NearZero regime")
    C = report.embedding_C
    if C is None:
        raise ValueError("report carries no embedding constant")
    if not (0 < rho < 1 and C * rho < 1):
        raise ValueError("rho too large for embedding constant")
    _, pp, bm, _ = report.exponents
    return rho ** (pp - bm) / (2.0 * C)


def threshold_F(report: RegimeReport, t: float) -> float:
    """``max(t^p+, t^p-) / (C min(t^pB+, t^pB-))`` evaluated piecewise."""
    if not t > 0:
        raise ValueError("threshold_F needs t > 0")
    C = report.embedding_C
    if C is None:
        raise ValueError("report carries no embedding constant")
    pm, pp, bm, bp = report.exponents
    if t < 1:
        return t ** (pm - bp) / C
    return t ** (pp - bm) / C


def threshold_range(report: RegimeReport) -> tuple[float, float] | None:
    """Range of :func:`threshold_F` when it is an unbounded interval, else ``None``.

    ``(0, inf)`` when ``p- > pB+`` and ``p+ > pB-``; ``[1/C, inf)`` when
    ``p- < pB+`` and ``p+ > pB-`` (its lower end is ``lambda**``).
    """
    C = report.embedding_C
    if C is None:
        raise ValueError("report carries no embedding constant")
    pm, pp, bm, bp = report.exponents
    if pp > bm + EXPONENT_TOL:
        if pm > bp + EXPONENT_TOL:
            return (0.0, math.inf)
        if pm < bp - EXPONENT_TOL:
            return (1.0 / C, math.inf)
    return None


def lower_envelope(spec: NFunction, eps: float = 0.25, t_grid=None) -> tuple[float, float | None]:
    """Largest sampled ``t0 <= 1`` with ``G(t) >= t^(p- + eps)`` on ``(0, t0)``.

    Returns ``(eps, t0)``; ``t0`` is ``None`` if the bound fails at the
    smallest sample.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    t = np.logspace(-12, 0, 241) if t_grid is None else np.sort(np.asarray(t_grid, dtype=float))
    p_minus = spec.exponents().p_minus
    ok = spec.G(t) >= t ** (p_minus + eps)
    if not ok[0]:
        return eps, None
    bad = np.flatnonzero(~ok)
    return eps, float(t[-1] if bad.size == 0 else t[bad[0] - 1])


def is_subcritical(specG: NFunction, specB: NFunction, dim: int) -> bool:
    """Whether ``B`` grows slower than the second-order Sobolev conjugate of ``G``.

    When ``2 p- > dim`` the second-order space embeds into bounded functions
    and every ``B`` qualifies.
    """
    expG = specG.exponents()
    if 2 * expG.p_minus > dim:
        return True
    p_star = sobolev_conjugate_exponent(specG, dim, order=2)
    return specB.exponents().p_plus < p_star - EXPONENT_TOL


def _principal_linear_mode(grid: Grid) -> np.ndarray:
    op = laplacian_operator(grid)
    M = sp.diags(op.weights).tocsc()
    v0 = np.ones(grid.size)
    _, vecs = eigsh(op.stiffness, k=1, M=M, sigma=0.0, which="LM", v0=v0)
    return vecs[:, 0]


def bump(grid: Grid) -> np.ndarray:
    """Clamped bump ``prod sin^2(pi x_k)``, peak 1."""
    pts = grid.coordinates()
    return np.prod(np.sin(np.pi * pts) ** 2, axis=1)


def estimate_embedding_constant(specG: NFunction, specB: NFunction, grid: Grid,
                                samples: int = 200, seed: int = 0) -> float:
    """Max of ``||u||_B / ||Laplacian u||_G`` over sampled ``u``.

    Candidates are the principal linear biharmonic mode, the clamped bump and
    ``samples`` smoothed random fields drawn in sequence, so a larger sample
    count always evaluates a superset.  The result is a lower estimate of the
    discrete constant.
    """
    if samples < 100:
        raise ValueError("embedding estimate needs at least 100 samples")
    op = laplacian_operator(grid)
    rng = np.random.default_rng(seed)
    candidates = [_principal_linear_mode(grid), bump(grid)]
    candidates += [random_start(grid, rng) for _ in range(samples)]

    def ratio(v):
        return _luxemburg(specB, v, op.weights) / _luxemburg(specG, op(v), op.closed_weights)

    return float(max(map_concurrent(ratio, candidates)))


def _envelope_flags(specG, specB, report):
    flags = {}
    if report.regime is Regime.NEAR_ZERO:
        eps, t0 = lower_envelope(specB)
        flags["envelope_B"] = [eps, t0]
        if t0 is not None:
            grid_t = np.logspace(-12, math.log10(t0), 121)
            bm, bp = report.exponents[2:]
            flags["condition_L_B"] = check_condition_L(specB, bm, bp, grid_t)
    if report.regime is Regime.NEAR_INFINITY:
        # the growth hypothesis here is the G-analog of the lower envelope for B
        eps, t0 = lower_envelope(specG)
        flags["envelope_G"] = [eps, t0]
        if t0 is not None:
            grid_t = np.logspace(-12, math.log10(t0), 121)
            pm, pp = report.exponents[:2]
            flags["condition_L_G"] = check_condition_L(specG, pm, pp, grid_t)
    return flags


def regime_report(specG: NFunction, specB: NFunction, grid: Grid, samples: int = 200,
                  seed: int = 0, rho: float | None = None) -> RegimeReport:
    """Classify, estimate the embedding constant and fill in every threshold."""
    expG, expB = require_growth_bound(specG), require_growth_bound(specB)
    report = classify_regime(expG, expB)
    C = estimate_embedding_constant(specG, specB, grid, samples, seed)
    report = report.with_embedding(C, rho)
    return replace(report, subcritical=is_subcritical(specG, specB, grid.dim),
                   flags=_envelope_flags(specG, specB, report))


# The functional ---------------------------------------------------------------

def phi_value(specG: NFunction, specB: NFunction, u: GridFunction, lam: float) -> float:
    """``rho_G(Laplacian u) - lam rho_B(u)``."""
    op = laplacian_operator(u.grid)
    return (weighted_modular(specG, op(u.values), op.closed_weights)
            - lam * weighted_modular(specB, u.values, op.weights))


def phi_gradient(specG: NFunction, specB: NFunction, u: GridFunction, lam: float,
                 eps_reg: float | None = None) -> np.ndarray:
    """Nodal gradient of :func:`phi_value`, paired with directions by the dot product."""
    op = laplacian_operator(u.grid)
    eps = SolverConfig(eps_reg=eps_reg).regularization(u.grid)
    return _gradient_values(specG, op, u.values, eps) - lam * op.weights * flux(specB, u.values, eps)


class _Phi:
    """``Phi_lambda`` and its derivatives on nodal vectors of one grid."""

    def __init__(self, specG, specB, grid, lam, eps):
        self.G, self.B, self.lam, self.eps = specG, specB, lam, eps
        self.grid = grid
        self.op = laplacian_operator(grid)

    def parts(self, v):
        op = self.op
        return (weighted_modular(self.G, op(v), op.closed_weights),
                weighted_modular(self.B, v, op.weights))

    def value(self, v):
        e, b = self.parts(v)
        return e - self.lam * b

    def scale(self, v):
        # magnitude against which rounding in value(v) is judged
        e, b = self.parts(v)
        return max(e, self.lam * b)

    # Gradients use the exact flux g(t), the eps -> 0 limit of the regularized
    # flux; tiny critical points would otherwise feel the regularization.
    # eps only enters the preconditioner and the Newton matrix.
    def _sides(self, v):
        op = self.op
        lhs = op.transpose_apply(op.closed_weights * self.G.g(op(v)))
        return lhs, self.lam * op.weights * self.B.g(v)

    def gradient(self, v):
        lhs, rhs = self._sides(v)
        return lhs - rhs

    def residual(self, v):
        """Residual normalized by ``max(1, ||lhs||)``, as reported."""
        lhs, rhs = self._sides(v)
        return dual_norm(lhs - rhs, self.grid) / max(1.0, dual_norm(lhs, self.grid))

    def stationarity(self, v):
        """Residual measured against the larger side, whatever the amplitude of ``v``.

        The reported residual only normalizes by gradients above 1, which is
        absolute for small critical points; stopping on this scale-free value
        as well keeps the ``v = u`` identity accurate at every amplitude.
        """
        lhs, rhs = self._sides(v)
        diff = dual_norm(lhs - rhs, self.grid)
        den = max(dual_norm(lhs, self.grid), dual_norm(rhs, self.grid))
        return max(diff / den if den > 0 else 0.0, diff / max(1.0, dual_norm(lhs, self.grid)))

    def norm(self, v):
        return _luxemburg(self.G, self.op(v), self.op.closed_weights)

    def ray_slope(self, v, t):
        """``d/dt Phi(t v)``."""
        op = self.op
        lv = op(v)
        return (float(np.dot(op.closed_weights * self.G.g(t * lv), lv))
                - self.lam * float(np.dot(op.weights * self.B.g(t * v), v)))

    def newton(self, v):
        op, A = self.op, self.op.matrix
        J = (A.T @ sp.diags(op.closed_weights * flux_derivative(self.G, op(v), self.eps)) @ A
             - sp.diags(self.lam * op.weights * flux_derivative(self.B, v, self.eps)))
        try:
            delta = splu(J.tocsc()).solve(-self.gradient(v))
        except RuntimeError:
            return None
        return v + delta if np.all(np.isfinite(delta)) else None

    def quotient(self, v):
        op = self.op
        lv = op(v)
        num = float(np.dot(op.closed_weights, self.G.g(lv) * lv))
        den = float(np.dot(op.weights, self.B.g(v) * v))
        return num / den if den > 0 else math.nan


_LOG2_RAY = np.arange(-60, 61)


def _ray_minimum(phi, v, max_norm=None):
    """Multiple ``2^k v`` with the lowest ``Phi`` (norm-capped when ``max_norm`` is given)."""
    best_val, best = math.inf, v
    norm_v = phi.norm(v) if max_norm is not None else None
    for k in _LOG2_RAY:
        t = 2.0 ** k
        if max_norm is not None and t * norm_v > max_norm:
            break
        val = phi.value(t * v)
        if val < best_val:
            best_val, best = val, t * v
    return best


def _nehari_projection(phi, v):
    """Point ``t v`` where ``t -> Phi(t v)`` has its first interior maximum, or ``None``."""
    peak = float(np.max(np.abs(v)))
    if peak == 0:
        return None
    v = v / peak
    prev_k, prev_s = None, None
    for k in np.arange(-40.0, 40.5, 0.5):
        s = phi.ray_slope(v, 2.0 ** k)
        if prev_s is not None and prev_s > 0 >= s:
            lk = brentq(lambda x: phi.ray_slope(v, 2.0 ** x), prev_k, k, xtol=1e-13)
            return 2.0 ** lk * v
        prev_k, prev_s = k, s
    return None


def _ball_retraction(phi, rho):
    def retract(v):
        nrm = phi.norm(v)
        return v * (rho / nrm) if nrm > rho else v
    return retract


# Descent ---------------------------------------------------------------------

def _descent(phi, u, cfg, retract, saddle=False):
    """Preconditioned Armijo descent of ``Phi`` (of its ray maximum when ``saddle``).

    Returns the final iterate and the iteration count.
    """
    f = phi.value(u)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        res = phi.stationarity(u)
        if res < cfg.grad_tol or not np.any(u):
            break
        if float(np.max(np.abs(u))) > BLOWUP_PEAK:
            break
        if res < NEWTON_SWITCH:
            cand = phi.newton(u)
            if cand is not None and np.any(cand):
                f_cand = phi.value(cand)
                inside = saddle or retract(cand) is cand
                no_rise = saddle or f_cand <= f + ENERGY_SLACK * phi.scale(u)
                if inside and no_rise and phi.stationarity(cand) < 0.5 * res:
                    u, f = cand, f_cand
                    continue
        grad = phi.gradient(u)
        d = lagged_metric(phi.G, phi.op, u, phi.eps)(grad)
        slope = float(np.dot(grad, d))
        if not slope > 0:
            break
        tau = cfg.step0
        accepted = False
        while tau >= 1e-12 * cfg.step0:
            trial = retract(u - tau * d)
            if trial is not None:
                f_trial = phi.value(trial)
                allowance = ENERGY_SLACK * phi.scale(u)
                if f_trial <= f - cfg.armijo_c * tau * slope + allowance:
                    accepted = True
                    break
            tau *= cfg.backtrack
        if not accepted:
            break
        u, f = trial, f_trial
    return u, it


@dataclass(frozen=True)
class StartOutcome:
    label: str
    method: Method
    found: bool
    phi_value: float
    residual: float


@dataclass(eq=False)
class CriticalPointResult:
    lam: float
    found: bool
    u: GridFunction | None
    phi_value: float
    residual: float
    method: Method
    norm_2G: float = 0.0
    quotient: float = math.nan
    iterations: int = 0
    starts: tuple[StartOutcome, ...] = ()
    warnings: tuple[str, ...] = ()

    def row(self) -> dict:
        return {"lambda": self.lam, "found": self.found, "phi": self.phi_value,
                "residual": self.residual, "method": self.method.value}


def _methods_for(regime: Regime) -> tuple[Method, ...]:
    if regime is Regime.WHOLE_LINE_COERCIVE:
        return (Method.GLOBAL_DESCENT,)
    if regime is Regime.NEAR_ZERO:
        return (Method.BALL_LOCAL_MIN,)
    if regime is Regime.WHOLE_LINE_SUPERLINEAR:
        return (Method.NEHARI_MIN,)
    return (Method.GLOBAL_DESCENT, Method.NEHARI_MIN)


def _is_found(method, phi_val, scale, residual, norm, cfg):
    floor = 10.0 * cfg.grad_tol
    if not (residual < cfg.grad_tol and norm > floor):
        return False
    # the level test is relative: Phi scales with a power of lambda at a fixed geometry.
    # Minimizers sit at a negative level, ray-maximum critical points at a positive one.
    if method is Method.NEHARI_MIN:
        return phi_val > floor * scale
    return phi_val < -floor * scale


def _run_start(phi, method, v, rho, cfg):
    if method is Method.GLOBAL_DESCENT:
        retract = lambda x: x  # noqa: E731
        u0 = _ray_minimum(phi, v) if np.any(v) else v
    elif method is Method.BALL_LOCAL_MIN:
        retract = _ball_retraction(phi, rho)
        u0 = _ray_minimum(phi, v, max_norm=rho) if np.any(v) else v
    else:
        def retract(x):
            return _nehari_projection(phi, x)
        u0 = _nehari_projection(phi, v) if np.any(v) else None
        if u0 is None:
            return v, 0
    return _descent(phi, u0, cfg, retract, saddle=method is Method.NEHARI_MIN)


def find_critical_point(specG: NFunction, specB: NFunction, grid: Grid, lam: float,
                        report: RegimeReport, cfg: SolverConfig | None = None,
                        starts=None) -> CriticalPointResult:
    """Search for a nontrivial critical point of ``Phi_lam`` with the regime's geometry.

    ``starts`` defaults to ``cfg.n_starts`` seeded random fields plus the
    clamped bump; each start's outcome is recorded.  Not finding a point is
    a regular outcome.
    """
    cfg = cfg or SolverConfig()
    require_growth_bound(specG)
    require_growth_bound(specB)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    phi = _Phi(specG, specB, grid, lam, cfg.regularization(grid))
    if starts is None:
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_starts)
        starts = [(f"seed{k}", random_start(grid, np.random.default_rng(s)))
                  for k, s in enumerate(seeds)]
        starts.append(("bump", bump(grid)))
    rho = report.rho if report.rho is not None else 0.5
    warnings = () if report.subcritical else ("B is not subcritical with respect to G",)

    outcomes, runs = [], []
    for method in _methods_for(report.regime):
        finals = map_concurrent(lambda item: _run_start(phi, method, item[1], rho, cfg), starts)
        for (label, _), (u, iters) in zip(starts, finals):
            val, res, nrm = phi.value(u), phi.residual(u), phi.norm(u)
            ok = _is_found(method, val, phi.scale(u), res, nrm, cfg)
            outcomes.append(StartOutcome(label, method, ok, val, res))
            runs.append((ok, val, res, nrm, u, iters, method))
        if any(run[0] for run in runs):
            break
    ok, val, res, nrm, u, iters, method = min(runs, key=lambda run: (not run[0], run[1], run[2]))
    k = int(np.argmax(np.abs(u)))
    if u[k] < 0:
        u = -u
    return CriticalPointResult(lam, ok, GridFunction(grid, u), val, res, method, nrm,
                               phi.quotient(u), iters, tuple(outcomes), warnings)


def scan_spectrum(specG: NFunction, specB: NFunction, grid: Grid, lambda_list,
                  cfg: SolverConfig | None = None,
                  report: RegimeReport | None = None) -> list[CriticalPointResult]:
    """Independent :func:`find_critical_point` runs over a sorted list of positive ``lambda``."""
    lams = [float(x) for x in lambda_list]
    if any(not x > 0 for x in lams):
        raise ValueError("lambda values must be positive")
    if lams != sorted(lams):
        raise ValueError("lambda values must be sorted")
    if not lams:
        return []
    report = report or regime_report(specG, specB, grid)
    return map_concurrent(lambda x: find_critical_point(specG, specB, grid, x, report, cfg), lams)


def _predicted(report: RegimeReport, lam: float) -> bool | None:
    r = report.regime
    if r in (Regime.WHOLE_LINE_COERCIVE, Regime.WHOLE_LINE_SUPERLINEAR):
        return True
    if r is Regime.NEAR_ZERO and report.lambda_star is not None:
        return lam < report.lambda_star
    if r is Regime.NEAR_INFINITY and report.lambda_star_star is not None:
        return lam > report.lambda_star_star
    return None


def summarize_scan(results, report: RegimeReport) -> dict:
    """Found / not-found counts split by whether existence is predicted for that ``lambda``."""
    summary = {"regime": report.regime.value, "found": 0, "not_found": 0,
               "predicted_found": 0, "predicted_not_found": 0}
    for res in results:
        summary["found" if res.found else "not_found"] += 1
        if _predicted(report, res.lam):
            summary["predicted_found" if res.found else "predicted_not_found"] += 1
    return summary


def anti_sobolev_witness(specG: NFunction, specB: NFunction, grid: Grid, C_target: float,
                         cfg: SolverConfig | None = None, report: RegimeReport | None = None,
                         prior=(), lam_floor: float = 1e-10) -> GridFunction:
    """A nontrivial ``u`` with ``sum w g(|Lu|)|Lu| / sum w b(|u|)|u| < C_target``.

    Previously found critical points in ``prior`` are tried first; otherwise
    ``lambda`` is halved from ``C_target / 2`` down to ``lam_floor``.
    """
    if not C_target > 0:
        raise ValueError("C_target must be positive")
    report = report or regime_report(specG, specB, grid)
    if report.regime not in (Regime.NEAR_ZERO, Regime.WHOLE_LINE_COERCIVE):
        raise ValueError("witness search needs the NearZero or WholeLineCoercive regime")
    for res in prior:
        if res.found and res.quotient < C_target:
            return res.u
    lam = min(0.5 * C_target, report.lambda_star or math.inf)
    while lam >= lam_floor:
        res = find_critical_point(specG, specB, grid, lam, report, cfg)
        if res.found and res.quotient < C_target:
            return res.u
        lam *= 0.5
    raise WitnessNotFoundError("witness not found at this resolution")


# Invariant probes ------------------------------------------------------------

def sphere_values(specG: NFunction, specB: NFunction, grid: Grid, lam: float, rho: float,
                  samples: int = 100, seed: int = 0) -> np.ndarray:
    """``Phi_lam`` on smoothed random ``u`` rescaled to ``||u||_{2,G} = rho``."""
    phi = _Phi(specG, specB, grid, lam, 0.0)
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    for k in range(samples):
        v = random_start(grid, rng)
        out[k] = phi.value(v * (rho / phi.norm(v)))
    return out


def negative_multiple(specG: NFunction, specB: NFunction, grid: Grid, lam: float,
                      v: np.ndarray | None = None, exponents=range(1, 21)):
    """First ``t = 2^-k`` with ``Phi_lam(t v) < 0`` (``v`` defaults to the bump), or ``None``."""
    phi = _Phi(specG, specB, grid, lam, 0.0)
    v = bump(grid) if v is None else np.asarray(v, dtype=float)
    for k in exponents:
        t = 2.0 ** -k
        if phi.value(t * v) < 0:
            return t
    return None


def ray_values(specG: NFunction, specB: NFunction, u: GridFunction, lam: float,
               exponents=range(0, 11)) -> np.ndarray:
    """``Phi_lam(2^k u)`` for ``k`` in ``exponents``."""
    phi = _Phi(specG, specB, u.grid, lam, 0.0)
    return np.array([phi.value(2.0 ** k * u.values) for k in exponents])
