"""Thomas algorithm for tridiagonal systems."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from timobeam.fem import TriDiag


class SingularPivotError(ArithmeticError):
    """A pivot vanished during elimination (matrix singular or needs pivoting)."""


def _sweep(sub: list[float], main: list[float], sup: list[float], d: list[float]) -> list[float]:
    # Plain Python floats: an order of magnitude faster than numpy scalar
    # indexing for the small systems solved once per time step.
    n = len(main)
    tiny = np.finfo(float).tiny
    cp = [0.0] * n
    dp = [0.0] * n
    piv = main[0]
    if abs(piv) < tiny:
        raise SingularPivotError("zero pivot in row 0")
    cp[0] = sup[0] / piv if n > 1 else 0.0
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = main[i] - sub[i - 1] * cp[i - 1]
        if abs(piv) < tiny:
            raise SingularPivotError(f"zero pivot in row {i}")
        if i < n - 1:
            cp[i] = sup[i] / piv
        dp[i] = (d[i] - sub[i - 1] * dp[i - 1]) / piv
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def thomas_solve(A: TriDiag, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = rhs`` without pivoting.

    ``rhs`` may be a vector of length ``n`` or an ``(n, m)`` array of
    right-hand sides. Safe for diagonally dominant or SPD ``A``, which covers
    every matrix this package assembles.

    Raises
    ------
    SingularPivotError
        If a pivot magnitude falls below the smallest normal float.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != A.n:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, matrix has {A.n}")
    sub, main, sup = A.sub.tolist(), A.main.tolist(), A.sup.tolist()
    if rhs.ndim == 1:
        return np.array(_sweep(sub, main, sup, rhs.tolist()))
    cols = [_sweep(sub, main, sup, col) for col in rhs.reshape(A.n, -1).T.tolist()]
    return np.array(cols).T.reshape(rhs.shape)
