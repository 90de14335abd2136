"""N-function families and their one-dimensional calculus.

Three families are supported:

``Power(p)``
    ``G(t) = |t|^p / p``.
``PiecewisePower(p, q)``
    ``g(t) = p t^(p-1)`` on ``[0, 1]`` and ``g(t) = p t^(q-1)`` above the knot,
    so ``g`` is continuous and ``G(t) = t^p`` below the knot.
``PowerLog``
    ``G(t) = (1 + |t|) log(1 + |t|) - |t|``.  Its ratio ``t g(t) / G(t)`` tends
    to 1 at infinity, so it fails the strict lower growth bound and is only
    usable for the calculus in this module.

All evaluation methods accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar

__all__ = [
    "NFunction",
    "Power",
    "PiecewisePower",
    "PowerLog",
    "ExponentPair",
    "ConjugateBracketError",
    "SubcriticalConditionError",
    "GrowthBoundError",
    "nfunction_from_config",
    "eval_G",
    "eval_g",
    "complementary",
    "delta2_exponents",
    "check_condition_L",
    "sobolev_conjugate_inverse",
    "sobolev_conjugate_exponent",
    "essentially_slower",
    "require_growth_bound",
]

EXPONENT_GRID = np.logspace(-8, 8, 1000)


class ConjugateBracketError(ArithmeticError):
    pass


class SubcriticalConditionError(ValueError):
    pass


class GrowthBoundError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentPair:
    """Lower/upper growth exponents ``inf`` / ``sup`` of ``t g(t) / G(t)``."""

    p_minus: float
    p_plus: float
    exact: bool
    growth_bound_violated: bool = False

    def __post_init__(self):
        if self.p_minus > self.p_plus:
            raise ValueError(f"p_minus={self.p_minus} exceeds p_plus={self.p_plus}")


def _solve_increasing(f, target, tol=1e-12, max_iter=200):
    """Vectorized solve of ``f(x) = target`` for ``x >= 0`` with ``f`` increasing.

    The bracket is grown geometrically around 1 and the root is then bisected
    at the geometric midpoint, which gives relative accuracy even for tiny or
    huge roots.
    """
    target = np.asarray(target, dtype=float)
    out = np.zeros_like(target)
    pos = target > 0
    if not np.any(pos):
        return out
    s = target[pos]
    lo = np.ones_like(s)
    hi = np.ones_like(s)
    for _ in range(2100):
        grow = f(hi) < s
        if not grow.any():
            break
        with np.errstate(over="ignore"):
            hi = np.where(grow, hi * 2.0, hi)
        if not np.all(np.isfinite(hi)):
            raise ConjugateBracketError("conjugate bracket not found")
    else:
        raise ConjugateBracketError("conjugate bracket not found")
    lo = np.where(hi > 1.0, hi / 2.0, lo)
    for _ in range(2100):
        shrink = f(lo) >= s
        if not shrink.any():
            break
        lo = np.where(shrink, lo / 2.0, lo)
        if np.any(lo == 0.0):
            break
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi) if np.all(lo > 0) else 0.5 * (lo + hi)
        below = f(mid) < s
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= tol * hi):
            break
    out[pos] = 0.5 * (lo + hi)
    return out


class NFunction(ABC):
    """Base class for the parametric N-function families."""

    family: ClassVar[str]

    @abstractmethod
    def _G(self, t: np.ndarray) -> np.ndarray:
        """``G`` on ``t >= 0``."""

    @abstractmethod
    def _g(self, t: np.ndarray) -> np.ndarray:
        """``g`` on ``t >= 0``."""

    @abstractmethod
    def _tdg(self, t: np.ndarray) -> np.ndarray:
        """``t g'(t)`` on ``t >= 0`` (finite at 0 for every family)."""

    @property
    @abstractmethod
    def zero_exponent(self) -> float:
        """Exponent ``a`` with ``G(t) ~ t^a`` as ``t -> 0``."""

    @abstractmethod
    def to_config(self) -> dict:
        ...

    def G(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        return self._G(t)

    def g(self, t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) * self._g(np.abs(t))

    def tdg(self, t):
        return self._tdg(np.abs(np.asarray(t, dtype=float)))

    def dg(self, t):
        """``g'(|t|)``; infinite at 0 when ``g`` has a vertical tangent there."""
        t = np.abs(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 0, self._tdg(t) / np.where(t > 0, t, 1.0),
                            self._dg_at_zero())

    def _dg_at_zero(self) -> float:
        a = self.zero_exponent
        if a < 2:
            return math.inf
        return 0.0 if a > 2 else float(self._tdg(np.array(1e-150)) / 1e-150)

    @property
    def singular_density(self) -> bool:
        """True when ``g(t)/t`` is unbounded as ``t -> 0``."""
        return self.zero_exponent < 2

    def g_inverse(self, s):
        s = np.asarray(s, dtype=float)
        return _solve_increasing(self._g, s)

    def G_inverse(self, s):
        s = np.asarray(s, dtype=float)
        return _solve_increasing(self._G, s)

    def conjugate(self, s):
        """Complementary function ``sup_w (s w - G(w))``, attained at ``g(w) = s``."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("complementary function evaluated at negative argument")
        w = self.g_inverse(s)
        return s * w - self._G(w)

    def conjugate_by_bisection(self, s):
        s = np.asarray(s, dtype=float)
        w = _solve_increasing(self._g, s)
        return s * w - self._G(w)

    def exponents(self) -> ExponentPair:
        return _sampled_exponents(self)


@dataclass(frozen=True)
class Power(NFunction):
    p: float
    family: ClassVar[str] = "power"

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"power family needs p > 1, got {self.p}")

    def _G(self, t):
        return t**self.p / self.p

    def _g(self, t):
        return t ** (self.p - 1)

    def _tdg(self, t):
        return (self.p - 1) * t ** (self.p - 1)

    @property
    def zero_exponent(self):
        return self.p

    def g_inverse(self, s):
        return np.asarray(s, dtype=float) ** (1.0 / (self.p - 1))

    def G_inverse(self, s):
        return (self.p * np.asarray(s, dtype=float)) ** (1.0 / self.p)

    def conjugate(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("complementary function evaluated at negative argument")
        pc = self.p / (self.p - 1)
        return s**pc / pc

    def exponents(self):
        return ExponentPair(self.p, self.p, exact=True)

    def to_config(self):
        return {"family": self.family, "p": float(self.p)}


@dataclass(frozen=True)
class PiecewisePower(NFunction):
    p: float
    q: float
    family: ClassVar[str] = "piecewise"

    def __post_init__(self):
        if not (self.p > 1 and self.q > 1):
            raise ValueError(f"piecewise family needs p, q > 1, got {self.p}, {self.q}")

    def _G(self, t):
        p, q = self.p, self.q
        with np.errstate(over="ignore"):
            return np.where(t <= 1, t**p, 1.0 + p * (t**q - 1.0) / q)

    def _g(self, t):
        return self.p * np.where(t <= 1, t ** (self.p - 1), t ** (self.q - 1))

    def _tdg(self, t):
        p, q = self.p, self.q
        return p * np.where(t <= 1, (p - 1) * t ** (p - 1), (q - 1) * t ** (q - 1))

    @property
    def zero_exponent(self):
        return self.p

    def g_inverse(self, s):
        s = np.asarray(s, dtype=float) / self.p
        return np.where(s <= 1, s ** (1.0 / (self.p - 1)), s ** (1.0 / (self.q - 1)))

    def G_inverse(self, s):
        s = np.asarray(s, dtype=float)
        upper = np.maximum((s - 1.0) * self.q / self.p + 1.0, 1.0)
        return np.where(s <= 1, s ** (1.0 / self.p), upper ** (1.0 / self.q))

    def to_config(self):
        return {"family": self.family, "p": float(self.p), "q": float(self.q)}


# Taylor coefficients of (1+t)log(1+t) - t and exp(s) - 1 - s, for small arguments.
_PL_G_SERIES = [(-1) ** k / (k * (k - 1)) for k in range(2, 10)]
_PL_CONJ_SERIES = [1.0 / math.factorial(k) for k in range(2, 10)]


def _series(coeffs, t):
    out = np.zeros_like(t)
    for k, c in zip(range(2, 2 + len(coeffs)), coeffs):
        out = out + c * t**k
    return out


@dataclass(frozen=True)
class PowerLog(NFunction):
    family: ClassVar[str] = "powerlog"

    def _G(self, t):
        small = t < 1e-3
        ts = np.where(small, t, 0.0)
        tl = np.where(small, 1.0, t)
        return np.where(small, _series(_PL_G_SERIES, ts), (1 + tl) * np.log1p(tl) - tl)

    def _g(self, t):
        return np.log1p(t)

    def _tdg(self, t):
        return t / (1.0 + t)

    @property
    def zero_exponent(self):
        return 2.0

    def _dg_at_zero(self):
        return 1.0

    def g_inverse(self, s):
        return np.expm1(np.asarray(s, dtype=float))

    def conjugate(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("complementary function evaluated at negative argument")
        small = s < 1e-3
        ss = np.where(small, s, 0.0)
        sl = np.where(small, 1.0, s)
        return np.where(small, _series(_PL_CONJ_SERIES, ss), np.expm1(sl) - sl)

    def exponents(self):
        sampled = _sampled_exponents(self)
        # t g / G -> 1 at infinity: the infimum is 1 and never attained.
        return ExponentPair(1.0, sampled.p_plus, exact=False, growth_bound_violated=True)

    def to_config(self):
        return {"family": self.family}


def nfunction_from_config(block: dict) -> NFunction:
    """Build an N-function from ``{family = ..., p = ..., q = ...}``."""
    family = str(block.get("family", "")).lower()
    if family == "power":
        return Power(float(block["p"]))
    if family == "piecewise":
        return PiecewisePower(float(block["p"]), float(block["q"]))
    if family == "powerlog":
        return PowerLog()
    raise ValueError(f"unknown N-function family {block.get('family')!r}")


def _ratio(spec: NFunction, t):
    t = np.asarray(t, dtype=float)
    return t * spec._g(t) / spec._G(t)


def _sampled_exponents(spec: NFunction) -> ExponentPair:
    t = EXPONENT_GRID
    r = _ratio(spec, t)
    logt = np.log(t)

    def refine(idx, sign):
        # golden-section on the log axis around an interior sampled extreme
        best = sign * r[idx]
        if 0 < idx < len(t) - 1:
            try:
                res = minimize_scalar(lambda x: sign * float(_ratio(spec, math.exp(x))),
                                      bracket=(logt[idx - 1], logt[idx], logt[idx + 1]),
                                      method="golden", tol=1e-10)
                best = min(best, res.fun)
            except ValueError:
                pass
        return sign * best

    p_minus = float(refine(int(np.argmin(r)), 1.0))
    p_plus = float(refine(int(np.argmax(r)), -1.0))
    return ExponentPair(p_minus, p_plus, exact=False, growth_bound_violated=not p_minus > 1)


def require_growth_bound(spec: NFunction) -> ExponentPair:
    """Return the exponents of ``spec`` or raise if the growth bound fails."""
    exps = spec.exponents()
    if exps.growth_bound_violated or not exps.p_minus > 1:
        raise GrowthBoundError(f"(G1) violated by {spec!r}: ratio t g/G has infimum {exps.p_minus}")
    return exps


def eval_G(spec: NFunction, t):
    return spec.G(t)


def eval_g(spec: NFunction, t):
    return spec.g(t)


def complementary(spec: NFunction, s):
    return spec.conjugate(s)


def delta2_exponents(spec: NFunction) -> ExponentPair:
    return spec.exponents()


def check_condition_L(spec: NFunction, p_minus: float, p_plus: float,
                      t_grid: Sequence[float], tol: float = 1e-6) -> bool:
    """Sampled check of ``p_minus - 1 <= t g'(t) / g(t) <= p_plus - 1``."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError("condition (L) is sampled on positive t only")
    ratio = spec._tdg(t) / spec._g(t)
    lo, hi = p_minus - 1.0, p_plus - 1.0
    return bool(np.all(ratio >= lo - tol * max(1.0, abs(lo)))
                and np.all(ratio <= hi + tol * max(1.0, abs(hi))))


# Sobolev conjugates ---------------------------------------------------------

_S0 = 1e-10
_GL_NODES, _GL_WEIGHTS = leggauss(16)
_PANELS = 64


def _tail_exponent(f, s0=_S0):
    """Local power-law exponent of ``f`` just above 0."""
    a, b = float(f(np.array([s0 * 1e-2]))[0]), float(f(np.array([s0]))[0])
    if not (a > 0 and b > 0):
        raise SubcriticalConditionError("subcritical condition fails")
    return math.log(b / a) / math.log(1e2), b


def _conjugate_inverse(base_inverse, n: int):
    """``t -> int_0^t base_inverse(s) / s^(1 + 1/n) ds`` as a vectorized callable."""

    def integrand(s):
        return base_inverse(s) / s ** (1.0 + 1.0 / n)

    alpha, f0 = _tail_exponent(integrand)
    if alpha <= -1.0 + 1e-6:
        raise SubcriticalConditionError("subcritical condition fails")
    tail = f0 * _S0 / (alpha + 1.0)

    def phi(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        small = t <= _S0
        out[small] = f0 * _S0 ** (-alpha) * t[small] ** (alpha + 1.0) / (alpha + 1.0)
        big = ~small
        if np.any(big):
            ya, yb = math.log(_S0), np.log(t[big])
            width = (yb - ya) / _PANELS
            # nodes[k, j, m]: integral k, panel j, Gauss node m
            left = ya + width[:, None] * np.arange(_PANELS)[None, :]
            y = left[:, :, None] + 0.5 * width[:, None, None] * (_GL_NODES + 1.0)
            s = np.exp(y)
            vals = integrand(s.ravel()).reshape(s.shape) * s
            out[big] = tail + 0.5 * width * np.einsum("kjm,m->k", vals, _GL_WEIGHTS)
        return out

    return phi


def sobolev_conjugate_inverse(spec: NFunction, n: int, t, order: int = 1):
    """Inverse of the order-``order`` Sobolev conjugate of ``spec`` in dimension ``n``.

    Order 1 integrates ``G^{-1}(s) / s^(1+1/n)`` from 0 to ``t``; order 2 applies
    the same integral to the order-1 inverse.  Raises
    :class:`SubcriticalConditionError` when an integrand is not integrable at 0.
    """
    if order not in (1, 2):
        raise ValueError("only Sobolev conjugates of order 1 and 2 are supported")
    phi = _conjugate_inverse(spec.G_inverse, n)
    if order == 2:
        phi = _conjugate_inverse(phi, n)
    out = phi(t)
    return out if np.ndim(t) else float(out[0])


def sobolev_conjugate_exponent(spec: NFunction, n: int, order: int = 1,
                               t_range=(1.0, 100.0), points: int = 25) -> float:
    """Log-log slope of the Sobolev conjugate over ``t_range``.

    The conjugate is known through its inverse ``phi``; the graph of the
    conjugate is ``{(phi(t), t)}``, so the slope is ``d log t / d log phi(t)``.
    """
    t = np.logspace(math.log10(t_range[0]), math.log10(t_range[1]), points)
    y = sobolev_conjugate_inverse(spec, n, t, order=order)
    return float(np.polyfit(np.log(y), np.log(t), 1)[0])


def essentially_slower(A: NFunction, B: NFunction, c_list=(0.5, 1.0, 2.0, 10.0),
                       threshold: float = 1e-6, max_tail_slope: float = -0.1) -> bool:
    """Sampled necessary check for ``A(c t) / B(t) -> 0`` as ``t -> infinity``.

    For each ``c`` the ratio must be non-increasing on the tail grid
    ``[1e4, 1e8]`` and either fall below ``threshold`` at ``t = 1e8`` or keep
    decaying algebraically there (log-log slope at most ``max_tail_slope``).
    This is evidence, not a proof.
    """
    t = np.logspace(4, 8, 41)
    for c in c_list:
        if c <= 0:
            raise ValueError("c_list entries must be positive")
        with np.errstate(over="ignore"):
            ratio = A.G(c * t) / B.G(t)
        if not np.all(np.isfinite(ratio)):
            return False
        if np.any(np.diff(ratio) > 1e-12 * ratio[:-1]):
            return False
        slope = math.log(ratio[-1] / ratio[-5]) / math.log(t[-1] / t[-5])
        if not (ratio[-1] < threshold or slope <= max_tail_slope):
            return False
    return True
