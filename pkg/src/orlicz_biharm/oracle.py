"""Independent reference values for the linear (``G(t) = t^2/2``) clamped beam.

Two oracles that share no code with the sparse solver:

* the first root ``k1`` of ``cos k cosh k = 1``, giving the continuous
  eigenvalue ``k1^4`` of ``u'''' = lambda u`` with clamped ends on ``[0, 1]``;
* the smallest eigenvalue of the dense pencil ``(D^T W_c D, W)`` built from
  the closed-node second difference with mirrored ghost values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq

__all__ = ["OracleError", "PencilEigen", "beam_wavenumber", "beam_eigenvalue",
           "dense_pencil", "dense_pencil_eigen", "run_oracle_beam"]


class OracleError(ValueError):
    pass


def beam_wavenumber() -> float:
    """First positive root of ``cos k cosh k = 1`` (bracketed in ``[4, 5]``)."""
    return brentq(lambda k: math.cos(k) * math.cosh(k) - 1.0, 4.0, 5.0, xtol=1e-15, rtol=1e-15)


def beam_eigenvalue() -> float:
    return beam_wavenumber() ** 4


def dense_pencil(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(K, M)`` for ``n`` interior nodes on ``[0, 1]``.

    ``D`` maps interior values to second differences on all ``n + 2`` nodes;
    at an end node the ghost value equals the first interior value.  ``K``
    integrates ``(Du)^2`` by the trapezoidal rule and ``M`` is ``h I``.
    """
    h = 1.0 / (n + 1)
    D = np.zeros((n + 2, n))
    for j in range(n):
        D[j, j] += 1.0
        D[j + 1, j] -= 2.0
        D[j + 2, j] += 1.0
    D[0, 0] = 2.0
    D[n + 1, n - 1] = 2.0
    D /= h * h
    wc = np.full(n + 2, h)
    wc[0] = wc[-1] = h / 2
    K = D.T @ (wc[:, None] * D)
    return K, h * np.eye(n)


@dataclass(frozen=True)
class PencilEigen:
    value: float
    vector: np.ndarray
    residual: float


def dense_pencil_eigen(n: int) -> PencilEigen:
    """Smallest eigenpair of the dense pencil and its relative residual."""
    K, M = dense_pencil(n)
    vals, vecs = eigh(K, M, subset_by_index=[0, 0])
    lam, v = float(vals[0]), vecs[:, 0]
    Kv = K @ v
    res = float(np.linalg.norm(Kv - lam * (M @ v)) / np.linalg.norm(Kv))
    return PencilEigen(lam, v, res)


def run_oracle_beam(p_flag: float = 2, n: int = 200) -> float:
    """Smallest eigenvalue of the dense linear pencil with ``n`` interior nodes."""
    if p_flag != 2:
        raise OracleError("oracle is linear-only")
    if n < 10:
        raise OracleError("oracle needs n >= 10")
    return dense_pencil_eigen(n).value
