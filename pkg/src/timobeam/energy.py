"""Discrete energies and the per-step dissipation identity.

Two energies are tracked at every time level. ``E_paper`` is the sum of
M- and K-norms used in the published analysis; ``E_phys`` adds the cross
term ``Phi^T S Psi`` so the shear contribution becomes the exact Galerkin
value of ``k int (phi_x + psi)^2``. The semi-discrete flow conserves
``E_phys``; ``E_paper`` is not conserved by anything and is kept for plotting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, NamedTuple

import numpy as np

from timobeam.damping import DampingKind, DampingModel, Materials, g_exp_flat
from timobeam.fem import SystemMatrices, TriDiag

UNIT_MATERIALS = Materials()


class Level(NamedTuple):
    """Nodal values at one time level (interior nodes only)."""

    phi: np.ndarray
    psi: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> Level:
        return cls(*(np.zeros(n) for _ in range(4)))


def energy_paper(level: Level, M: TriDiag, K: TriDiag, materials: Materials = UNIT_MATERIALS) -> float:
    phi, psi, u, v = level
    m = materials
    return 0.5 * (
        m.rho1 * M.quad(u)
        + m.rho2 * M.quad(v)
        + m.k * K.quad(phi)
        + m.b * K.quad(psi)
        + m.k * M.quad(psi)
    )


def energy_physical(
    level: Level, M: TriDiag, K: TriDiag, S: TriDiag, materials: Materials = UNIT_MATERIALS
) -> float:
    phi, psi, u, v = level
    m = materials
    shear = K.quad(phi) + 2.0 * S.quad(phi, psi) + M.quad(psi)
    return 0.5 * (m.rho1 * M.quad(u) + m.rho2 * M.quad(v) + m.b * K.quad(psi) + m.k * shear)


def predicted_rate(
    damping: DampingModel, mats: SystemMatrices, prev: Level, curr: Level, nxt: Level
) -> float:
    """Energy rate the damping term removes at the middle of three levels.

    Linear damping: ``-mu ||V^n||_P^2``. Averaged laws: ``-Vbar^T P (gamma Vbar)``
    with ``Vbar = (V^{n+1} + V^{n-1}) / 2`` and the step's coefficient
    ``gamma``; under lumped pairing this is ``-sum_i m_i gamma_i Vbar_i^2 <= 0``.
    Explicit literal variants: ``-Vbar^T F(level n)``.
    """
    kind = damping.kind
    if kind is DampingKind.UNDAMPED:
        return 0.0
    P = mats.pairing_matrix(damping.pairing)
    if kind is DampingKind.LINEAR:
        return -damping.mu * P.quad(curr.v)
    v_bar = 0.5 * (prev.v + nxt.v)
    if damping.semi_implicit:
        gamma = damping.step_coefficient(curr.v, prev.v)
        return -float(np.dot(v_bar, P.matvec(gamma * v_bar)))
    # explicit expflat, scheme-literal: K g(Psi^n)
    return -float(np.dot(v_bar, mats.K.matvec(g_exp_flat(curr.psi))))


def identity_residual(
    prev: Level,
    curr: Level,
    nxt: Level,
    damping: DampingModel,
    mats: SystemMatrices,
    dt: float,
    materials: Materials = UNIT_MATERIALS,
) -> float:
    """Centered rate of ``E_phys`` over two steps minus the damping law's prediction."""
    e_prev = energy_physical(prev, mats.M, mats.K, mats.S, materials)
    e_next = energy_physical(nxt, mats.M, mats.K, mats.S, materials)
    return (e_next - e_prev) / (2.0 * dt) - predicted_rate(damping, mats, prev, curr, nxt)


@dataclass(frozen=True)
class EnergySample:
    step: int
    t: float
    E_paper: float
    E_phys: float
    dissipation_rate: float
    identity_residual: float


@dataclass
class EnergyTrace:
    """Energy history of one run, one sample per time level.

    ``dissipation_rate`` and ``identity_residual`` need the neighbouring levels
    and are NaN at the first and last sample.
    """

    step: np.ndarray
    t: np.ndarray
    E_paper: np.ndarray
    E_phys: np.ndarray
    dissipation_rate: np.ndarray
    identity_residual: np.ndarray
    fingerprint: str = ""

    columns: ClassVar[tuple[str, ...]] = (
        "step",
        "t",
        "E_paper",
        "E_phys",
        "dissipation_rate",
        "identity_residual",
    )

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in self.columns:
            arr = np.asarray(getattr(self, name), dtype=int if name == "step" else float)
            if arr.shape != (n,):
                raise ValueError(f"column {name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trace times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> EnergySample:
        return EnergySample(
            int(self.step[i]),
            float(self.t[i]),
            float(self.E_paper[i]),
            float(self.E_phys[i]),
            float(self.dissipation_rate[i]),
            float(self.identity_residual[i]),
        )

    @property
    def samples(self) -> list[EnergySample]:
        return [self[i] for i in range(len(self))]

    def relative_drift(self) -> float:
        """``max_n |E_phys(n) - E_phys(0)| / E_phys(0)``."""
        e0 = self.E_phys[0]
        return float(np.max(np.abs(self.E_phys - e0)) / e0)

    def max_abs_residual(self) -> float:
        return float(np.nanmax(np.abs(self.identity_residual)))


def chain_energy(
    q_level: Level,
    p_level: Level,
    q_level_2: Level,
    mats: SystemMatrices,
    materials: Materials = UNIT_MATERIALS,
) -> float:
    """Energy of one leapfrog chain, exactly dissipated by the scheme.

    Leapfrog couples displacements at level ``n`` with velocities at ``n + 1``
    and displacements at ``n + 2``. With ``q = (Phi, Psi)``, ``p = (U, V)``::

        Z_n = 1/2 (||p^{n+1}||^2_Mt + (q^n)^T A q^{n+2})

    satisfies ``Z_n - Z_{n-2} = 2 dt * predicted_rate(n)`` to rounding for the
    undamped and the averaged damping variants. ``E_phys`` only does so up to
    an O(dt^2) oscillation.
    """
    m = materials
    M, K, S = mats.M, mats.K, mats.S
    kinetic = m.rho1 * M.quad(p_level.u) + m.rho2 * M.quad(p_level.v)
    a, b = q_level, q_level_2
    potential = (
        m.k * K.quad(a.phi, b.phi)
        + m.k * S.quad(a.phi, b.psi)
        + m.k * S.quad(b.phi, a.psi)
        + m.b * K.quad(a.psi, b.psi)
        + m.k * M.quad(a.psi, b.psi)
    )
    return 0.5 * (kinetic + potential)
