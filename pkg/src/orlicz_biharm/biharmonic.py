"""Clamped discrete Laplacian and the biharmonic g-Laplacian energy.

The Laplacian maps interior nodal values to values on the closed node set.
At a boundary node the ghost value across the boundary mirrors the adjacent
interior value (``u = 0`` and zero normal derivative), so the boundary rows
read ``2 u_adjacent / h^2``.  Integrating ``G(Laplacian u)`` with trapezoidal
weights on the closed set makes the quadratic case ``G(t) = t^2/2`` coincide
with the classical second-order clamped-plate stencil.
"""

from __future__ import annotations

import functools
import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from orlicz_biharm.grid import Grid, GridFunction
from orlicz_biharm.nfunction import NFunction
from orlicz_biharm.orlicz_space import weighted_modular

__all__ = [
    "LaplacianOperator",
    "SingularDensityError",
    "laplacian_operator",
    "apply_laplacian",
    "default_eps_reg",
    "flux",
    "density",
    "flux_derivative",
    "lagged_metric",
    "energy",
    "energy_gradient",
    "weak_residual",
    "dual_norm",
]


class SingularDensityError(ValueError):
    pass


def _second_difference(n: int, h: float) -> sp.csr_matrix:
    """Closed-node second difference of interior values, shape ``(n + 2, n)``."""
    rows, cols, vals = [], [], []
    for j in range(n):
        k = j + 1
        rows += [k - 1, k, k + 1]
        cols += [j, j, j]
        vals += [1.0, -2.0, 1.0]
    D = sp.coo_matrix((vals, (rows, cols)), shape=(n + 2, n)).tolil()
    # ghost reflection at the two boundary nodes
    D[0, 0] = 2.0
    D[n + 1, n - 1] = 2.0
    return (D.tocsr() / h**2).tocsr()


def _embedding(n: int) -> sp.csr_matrix:
    return sp.coo_matrix((np.ones(n), (np.arange(1, n + 1), np.arange(n))),
                         shape=(n + 2, n)).tocsr()


class LaplacianOperator:
    """3-point (1D) / 5-point (2D) Laplacian with clamped ghost handling."""

    def __init__(self, grid: Grid):
        self.grid = grid
        D = _second_difference(grid.n, grid.h)
        if grid.dim == 1:
            self.matrix = D
        else:
            E = _embedding(grid.n)
            self.matrix = (sp.kron(D, E) + sp.kron(E, D)).tocsr()
        self.closed_weights = grid.weights(closed=True)
        self.weights = grid.weights(closed=False)
        self.matrix_t = self.matrix.T.tocsr()
        self._stiffness = None
        self._solver = None

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def transpose_apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix_t @ values

    @property
    def stiffness(self) -> sp.csc_matrix:
        """``A^T W A``: the linear biharmonic form (``G(t) = t^2/2``)."""
        if self._stiffness is None:
            A = self.matrix
            self._stiffness = (A.T @ sp.diags(self.closed_weights) @ A).tocsc()
        return self._stiffness

    def solve_stiffness(self, rhs: np.ndarray) -> np.ndarray:
        if self._solver is None:
            self._solver = splu(self.stiffness)
        return self._solver.solve(rhs)


@functools.lru_cache(maxsize=32)
def laplacian_operator(grid: Grid) -> LaplacianOperator:
    return LaplacianOperator(grid)


def apply_laplacian(u: GridFunction) -> GridFunction:
    if u.closed:
        raise ValueError("the Laplacian acts on interior grid functions")
    op = laplacian_operator(u.grid)
    return GridFunction(u.grid, op(u.values), closed=True)


def default_eps_reg(grid: Grid) -> float:
    return 1e-8 * grid.h


def flux(spec: NFunction, t: np.ndarray, eps_reg: float) -> np.ndarray:
    """``g(|t|)/|t| * t`` with the density regularized when it blows up at 0."""
    if not spec.singular_density:
        return spec.g(t)
    if not eps_reg > 0:
        raise SingularDensityError("singular density requires regularization")
    s = np.sqrt(t * t + eps_reg * eps_reg)
    return spec._g(s) * t / s


def flux_derivative(spec: NFunction, t: np.ndarray, eps_reg: float) -> np.ndarray:
    """Derivative of :func:`flux` in ``t``."""
    if not spec.singular_density:
        return spec.dg(t)
    if not eps_reg > 0:
        raise SingularDensityError("singular density requires regularization")
    s2 = t * t + eps_reg * eps_reg
    s = np.sqrt(s2)
    return (spec._tdg(s) * t * t / s + spec._g(s) * eps_reg * eps_reg / s) / s2


def density(spec: NFunction, t: np.ndarray, eps_reg: float) -> np.ndarray:
    """``g(|t|)/|t|`` extended by its limit at 0 (regularized when that limit is infinite)."""
    t = np.abs(t)
    if spec.singular_density:
        if not eps_reg > 0:
            raise SingularDensityError("singular density requires regularization")
        t = np.sqrt(t * t + eps_reg * eps_reg)
        return spec._g(t) / t
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, spec._g(safe) / safe, spec.dg(0.0))


def lagged_metric(spec: NFunction, op: LaplacianOperator, values: np.ndarray,
                  eps_reg: float, floor: float = 1e-8):
    """Factorized ``A^T W diag(phi(Au)) A`` with ``phi`` floored at ``floor * max(phi)``.

    In this metric the energy gradient of ``G(Au)`` is represented by ``u``
    itself (up to the floor), which makes unit steps scale-free.
    """
    phi = density(spec, op(values), eps_reg)
    phi = np.maximum(phi, floor * float(np.max(phi)))
    A = op.matrix
    return splu((A.T @ sp.diags(op.closed_weights * phi) @ A).tocsc()).solve


def energy(spec: NFunction, u: GridFunction) -> float:
    """``L(u) = rho_G(Laplacian u)``."""
    op = laplacian_operator(u.grid)
    return weighted_modular(spec, op(u.values), op.closed_weights)


def _gradient_values(spec, op, values, eps_reg):
    return op.transpose_apply(op.closed_weights * flux(spec, op(values), eps_reg))


def energy_gradient(spec: NFunction, u: GridFunction, eps_reg: float | None = None) -> np.ndarray:
    """Nodal vector ``A^T W D(u)`` with ``D(u) = g(|Au|)/|Au| * Au``.

    Paired with a direction ``v`` by the plain dot product it gives the
    discrete weak form ``sum_i w_i g(|Au|)/|Au| (Au)_i (Av)_i``.
    """
    if eps_reg is None:
        eps_reg = default_eps_reg(u.grid)
    if eps_reg < 0:
        raise ValueError("eps_reg must be non-negative")
    return _gradient_values(spec, laplacian_operator(u.grid), u.values, eps_reg)


def dual_norm(vec: np.ndarray, grid: Grid) -> float:
    """Weighted Euclidean norm of the Riesz representative ``W^{-1} vec``."""
    return math.sqrt(float(np.dot(vec, vec)) / grid.weight)


def _residual_values(specG, specB, op, values, lam, eps_reg):
    grad = _gradient_values(specG, op, values, eps_reg)
    rhs = lam * op.weights * flux(specB, values, eps_reg)
    scale = max(1.0, dual_norm(grad, op.grid))
    return dual_norm(grad - rhs, op.grid) / scale


def weak_residual(specG: NFunction, specB: NFunction, u: GridFunction, lam: float,
                  eps_reg: float | None = None) -> float:
    """Relative residual of the weak eigen-equation with right-hand side ``lam b(|u|)/|u| u``.

    The residual norm is divided by ``max(1, norm of the energy gradient)``.
    """
    if eps_reg is None:
        eps_reg = default_eps_reg(u.grid)
    return _residual_values(specG, specB, laplacian_operator(u.grid), u.values, lam, eps_reg)
