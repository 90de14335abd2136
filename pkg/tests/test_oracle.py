import math

import numpy as np
import pytest

from orlicz_biharm.oracle import (
    OracleError,
    beam_eigenvalue,
    beam_wavenumber,
    dense_pencil,
    dense_pencil_eigen,
    run_oracle_beam,
)


def test_wavenumber_root():
    k = beam_wavenumber()
    assert k == pytest.approx(4.7300408, abs=1e-7)
    assert abs(math.cos(k) * math.cosh(k) - 1) < 1e-12
    assert beam_eigenvalue() == pytest.approx(500.564, abs=1e-3)


def test_dense_pencil_structure():
    K, M = dense_pencil(12)
    np.testing.assert_allclose(K, K.T, atol=1e-9 * np.abs(K).max())
    assert np.all(np.linalg.eigvalsh(K) > 0)
    # interior rows of the linear biharmonic form carry the 1, -4, 6, -4, 1 stencil
    h = 1 / 13
    np.testing.assert_allclose(K[5, 3:8] * h**3, [1, -4, 6, -4, 1], atol=1e-9)
    # first row: clamped end gives 7 on the diagonal
    np.testing.assert_allclose(K[0, :3] * h**3, [7, -4, 1], atol=1e-9)
    np.testing.assert_allclose(M, np.eye(12) / 13)


def test_beam_at_200_nodes():
    lam = run_oracle_beam(2, 200)
    assert lam == pytest.approx(beam_eigenvalue(), rel=0.02)


def test_second_order_convergence():
    exact = beam_eigenvalue()
    e20 = abs(run_oracle_beam(2, 20) - exact)
    e40 = abs(run_oracle_beam(2, 40) - exact)
    assert e20 / e40 == pytest.approx(4.0, rel=0.1)


@pytest.mark.parametrize("n", [20, 40])
def test_eigenvector_residual(n):
    assert dense_pencil_eigen(n).residual < 1e-10


def test_errors():
    with pytest.raises(OracleError, match="oracle is linear-only"):
        run_oracle_beam(3, 50)
    with pytest.raises(OracleError):
        run_oracle_beam(2, 5)
