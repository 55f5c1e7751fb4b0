"""Uniform 1-D mesh and P1 Galerkin matrices for the Timoshenko beam.

Only interior nodes carry unknowns; the homogeneous Dirichlet values at
``x = 0`` and ``x = L`` are eliminated, so every matrix is square and
tridiagonal of dimension ``Nx``.

Conventions::

    M[i, j] = int w_i  w_j       (mass, symmetric positive definite)
    K[i, j] = int w_i' w_j'      (stiffness, symmetric positive definite)
    S[i, j] = int w_i' w_j       (coupling, skew-symmetric)
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from timobeam.linalg import thomas_solve

Kind = Literal["symmetric", "skew", "general"]


@dataclass(frozen=True)
class Mesh:
    """Uniform partition of ``[0, L]`` with ``Nx`` interior nodes."""

    length: float
    n_interior: int

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise ValueError(f"mesh length must be positive, got {self.length}")
        if int(self.n_interior) != self.n_interior or self.n_interior < 1:
            raise ValueError(f"n_interior must be an integer >= 1, got {self.n_interior}")
        object.__setattr__(self, "n_interior", int(self.n_interior))
        object.__setattr__(self, "length", float(self.length))

    @property
    def h(self) -> float:
        return self.length / (self.n_interior + 1)

    @property
    def nodes(self) -> np.ndarray:
        """All nodes including both boundary points; the last one is exactly ``L``."""
        x = np.arange(self.n_interior + 2) * self.h
        x[-1] = self.length
        return x

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]


@dataclass(frozen=True, eq=False)
class TriDiag:
    """Tridiagonal matrix stored as three diagonals.

    ``sub[i]`` is entry ``(i+1, i)`` and ``sup[i]`` is entry ``(i, i+1)``.
    """

    sub: np.ndarray
    main: np.ndarray
    sup: np.ndarray
    kind: Kind = "general"

    def __post_init__(self) -> None:
        main = np.array(self.main, dtype=float)
        sub = np.array(self.sub, dtype=float)
        sup = np.array(self.sup, dtype=float)
        n = main.shape[0]
        if main.ndim != 1 or n < 1:
            raise ValueError("main diagonal must be a non-empty 1-D array")
        if sub.shape != (n - 1,) or sup.shape != (n - 1,):
            raise ValueError(f"off-diagonals must have length {n - 1}")
        if self.kind == "symmetric" and not np.array_equal(sub, sup):
            raise ValueError("symmetric TriDiag requires sub == sup")
        if self.kind == "skew" and (not np.array_equal(sub, -sup) or np.any(main != 0)):
            raise ValueError("skew TriDiag requires sub == -sup and a zero main diagonal")
        for name, arr in (("sub", sub), ("main", main), ("sup", sup)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.main.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``A @ x`` for a vector or a stack of column vectors."""
        x = np.asarray(x, dtype=float)
        y = self.main.reshape((-1,) + (1,) * (x.ndim - 1)) * x
        if self.n > 1:
            off_shape = (-1,) + (1,) * (x.ndim - 1)
            y[:-1] += self.sup.reshape(off_shape) * x[1:]
            y[1:] += self.sub.reshape(off_shape) * x[:-1]
        return y

    __matmul__ = matvec

    def quad(self, x: np.ndarray, y: np.ndarray | None = None) -> float:
        """Bilinear form ``x^T A y`` (``y`` defaults to ``x``)."""
        y = x if y is None else y
        return float(np.dot(x, self.matvec(y)))

    def transpose(self) -> TriDiag:
        return TriDiag(self.sup, self.main, self.sub, self.kind)

    @property
    def T(self) -> TriDiag:
        return self.transpose()

    def scaled(self, alpha: float) -> TriDiag:
        return TriDiag(alpha * self.sub, alpha * self.main, alpha * self.sup, self.kind)

    def plus_diagonal(self, d: np.ndarray) -> TriDiag:
        """``A + diag(d)``; the symmetry tag survives only for symmetric ``A``."""
        kind: Kind = "symmetric" if self.kind == "symmetric" else "general"
        return TriDiag(self.sub, self.main + np.asarray(d, dtype=float), self.sup, kind)

    def to_dense(self) -> np.ndarray:
        A = np.diag(self.main)
        if self.n > 1:
            A += np.diag(self.sup, 1) + np.diag(self.sub, -1)
        return A


def assemble_mass(mesh: Mesh) -> TriDiag:
    n, h = mesh.n_interior, mesh.h
    off = np.full(n - 1, h / 6.0)
    return TriDiag(off, np.full(n, 2.0 * h / 3.0), off.copy(), "symmetric")


def assemble_stiffness(mesh: Mesh) -> TriDiag:
    n, h = mesh.n_interior, mesh.h
    off = np.full(n - 1, -1.0 / h)
    return TriDiag(off, np.full(n, 2.0 / h), off.copy(), "symmetric")


def assemble_coupling(mesh: Mesh) -> TriDiag:
    # S[i, i+1] = int w_i' w_{i+1} = -1/2, S[i+1, i] = +1/2, independent of h.
    n = mesh.n_interior
    return TriDiag(np.full(n - 1, 0.5), np.zeros(n), np.full(n - 1, -0.5), "skew")


def lump_mass(M: TriDiag) -> TriDiag:
    """Row-sum lumping of a symmetric mass matrix, giving ``int w_i`` per node.

    The first and last rows lost their coupling to the eliminated boundary
    nodes; on a uniform mesh that entry equals the retained off-diagonal of
    the same row, so it is added back. A 1x1 matrix has no neighbour to copy
    and is returned unchanged.
    """
    if M.kind != "symmetric":
        raise ValueError("mass lumping expects a symmetric matrix")
    row_sums = M.main.copy()
    if M.n > 1:
        row_sums[:-1] += M.sup
        row_sums[1:] += M.sub
        row_sums[0] += M.sup[0]
        row_sums[-1] += M.sub[-1]
    zeros = np.zeros(M.n - 1)
    return TriDiag(zeros, row_sums, zeros.copy(), "symmetric")


# ---------------------------------------------------------------------------
# independent quadrature route

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)


def _hat(mesh: Mesh, i: int, x: np.ndarray) -> np.ndarray:
    h = mesh.h
    xi = i * h
    return np.clip(1.0 - np.abs(x - xi) / h, 0.0, None)


def _hat_prime(mesh: Mesh, i: int, x: np.ndarray) -> np.ndarray:
    # Evaluated at Gauss points only, which never coincide with nodes.
    h = mesh.h
    xi = i * h
    d = np.zeros_like(x)
    d[(x > xi - h) & (x < xi)] = 1.0 / h
    d[(x > xi) & (x < xi + h)] = -1.0 / h
    return d


def quadrature_oracle(
    mesh: Mesh, kind: Literal["mass", "stiffness", "coupling"], i: int, j: int
) -> float:
    """Integrate a pair of hat-function products element by element.

    Uses a 3-point Gauss-Legendre rule on each element, which is exact for the
    piecewise quadratic integrands involved. Indices are 1-based interior node
    numbers, so ``1 <= i, j <= Nx``.
    """
    n = mesh.n_interior
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"indices ({i}, {j}) outside 1..{n}")
    if abs(i - j) > 1:
        return 0.0
    try:
        f, g = {
            "mass": (_hat, _hat),
            "stiffness": (_hat_prime, _hat_prime),
            "coupling": (_hat_prime, _hat),
        }[kind]
    except KeyError:
        raise ValueError(f"unknown matrix kind {kind!r}") from None

    h = mesh.h
    total = 0.0
    # elements touching node i: [x_{i-1}, x_i] and [x_i, x_{i+1}]
    for e in (i - 1, i):
        a = e * h
        x = a + 0.5 * h * (_GAUSS_X + 1.0)
        total += 0.5 * h * float(np.sum(_GAUSS_W * f(mesh, i, x) * g(mesh, j, x)))
    return total


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    """Everything the time stepper and energy observer need from the mesh."""

    mesh: Mesh
    M: TriDiag
    K: TriDiag
    S: TriDiag
    M_lumped: TriDiag

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> SystemMatrices:
        M = assemble_mass(mesh)
        # int w_i = h for every interior hat, including the 1x1 case lump_mass cannot infer
        n = mesh.n_interior
        lumped = TriDiag(np.zeros(n - 1), np.full(n, mesh.h), np.zeros(n - 1), "symmetric")
        return cls(mesh, M, assemble_stiffness(mesh), assemble_coupling(mesh), lumped)

    @cached_property
    def M_inv(self) -> np.ndarray:
        """Dense inverse of ``M``, built column by column with the Thomas solver."""
        return thomas_solve(self.M, np.eye(self.M.n))

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        return self.M_inv @ rhs

    def pairing_matrix(self, pairing: str) -> TriDiag:
        return self.M_lumped if str(getattr(pairing, "value", pairing)) == "lumped" else self.M
