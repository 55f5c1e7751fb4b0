"""Leapfrog time integration of the P1 semi-discrete Timoshenko system.

Semi-discrete equations (interior nodes, ``S[i, j] = int w_i' w_j``)::

    rho1 M U' = -k (K Phi + S Psi)
    rho2 M V' = -b K Psi + k (S Phi - M Psi) - F_damp
    Phi' = U,  Psi' = V

The first level is produced by one forward Euler step, every later level by
the centered two-step leapfrog update.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from timobeam.damping import DampingKind, DampingModel, Materials, MassPairing, g_exp_flat, g_odd
from timobeam.energy import (
    UNIT_MATERIALS,
    EnergyTrace,
    Level,
    energy_paper,
    energy_physical,
    predicted_rate,
)
from timobeam.fem import Mesh, SystemMatrices
from timobeam.linalg import thomas_solve

DEFAULT_C_MAX = 0.5

InitialPreset = Literal["cos_sin", "sine_mode"]


class NonFiniteStateError(ArithmeticError):
    """The solution overflowed or produced NaN."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


@dataclass(frozen=True, eq=False)
class BeamState:
    """Two consecutive time levels, ``n - 1`` and ``n``.

    At ``n = 0`` only the current level is meaningful and ``prev`` holds a
    copy of it.
    """

    prev: Level
    curr: Level
    n: int
    dt: float

    def __post_init__(self) -> None:
        sizes = {len(a) for a in (*self.prev, *self.curr)}
        if len(sizes) != 1:
            raise ValueError(f"all state vectors must have the same length, got {sorted(sizes)}")
        if self.n < 0:
            raise ValueError("step index must be non-negative")

    @classmethod
    def initial(cls, level: Level, dt: float) -> BeamState:
        level = Level(*(np.array(a, dtype=float) for a in level))
        return cls(level, level, 0, dt)

    @property
    def t(self) -> float:
        return self.n * self.dt

    def advanced(self, nxt: Level) -> BeamState:
        return BeamState(self.curr, nxt, self.n + 1, self.dt)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.curr)


def initial_conditions(
    preset: InitialPreset,
    mesh: Mesh,
    amplitude: float = 1.0,
    mode: int = 2,
) -> Level:
    """Nodal interpolation at interior nodes; velocities start at rest.

    ``cos_sin``: ``phi = cos(2 pi x / L)``, ``psi = sin(2 pi x / L)``.
    ``sine_mode``: ``phi = sin(N pi x / L)``, ``psi = cos(N pi x / L)``.
    Boundary values of the formulas are discarded, which imposes the
    Dirichlet condition even where the formula is nonzero at ``x = 0, L``.
    """
    x = mesh.interior
    L = mesh.length
    if preset == "cos_sin":
        phi, psi = np.cos(2 * np.pi * x / L), np.sin(2 * np.pi * x / L)
    elif preset == "sine_mode":
        phi, psi = np.sin(mode * np.pi * x / L), np.cos(mode * np.pi * x / L)
    else:
        raise ValueError(f"unknown initial-condition preset {preset!r}")
    n = mesh.n_interior
    return Level(amplitude * phi, amplitude * psi, np.zeros(n), np.zeros(n))


def _elastic_forces(level: Level, mats: SystemMatrices, materials: Materials) -> tuple[np.ndarray, np.ndarray]:
    phi, psi = level.phi, level.psi
    k, b = materials.k, materials.b
    f_u = -k * (mats.K.matvec(phi) + mats.S.matvec(psi))
    f_v = -b * mats.K.matvec(psi) + k * (mats.S.matvec(phi) - mats.M.matvec(psi))
    return f_u, f_v


def damping_force(level: Level, mats: SystemMatrices, damping: DampingModel) -> np.ndarray:
    """Damping force evaluated explicitly at one level."""
    kind = damping.kind
    v = level.v
    if kind is DampingKind.UNDAMPED:
        return np.zeros_like(v)
    if kind is DampingKind.EXP_FLAT and damping.literal:
        return mats.K.matvec(g_exp_flat(level.psi))
    P = mats.pairing_matrix(damping.pairing)
    if kind is DampingKind.LINEAR:
        return damping.mu * P.matvec(v)
    if kind is DampingKind.POWER_LAW:
        return P.matvec(np.abs(v) * v)
    return P.matvec(g_odd(v))


def startup_step(
    state: BeamState,
    mats: SystemMatrices,
    damping: DampingModel,
    materials: Materials = UNIT_MATERIALS,
) -> BeamState:
    """One forward Euler step from level 0 to level 1."""
    if state.n != 0:
        raise ValueError(f"startup_step expects a level-0 state, got n={state.n}")
    dt = state.dt
    c = state.curr
    f_u, f_v = _elastic_forces(c, mats, materials)
    f_v = f_v - damping_force(c, mats, damping)
    nxt = Level(
        c.phi + dt * c.u,
        c.psi + dt * c.v,
        c.u + (dt / materials.rho1) * mats.solve_mass(f_u),
        c.v + (dt / materials.rho2) * mats.solve_mass(f_v),
    )
    out = state.advanced(nxt)
    if not out.is_finite():
        raise NonFiniteStateError(out.n)
    return out


def leapfrog_step(
    state: BeamState,
    mats: SystemMatrices,
    damping: DampingModel,
    materials: Materials = UNIT_MATERIALS,
) -> BeamState:
    """Centered update ``X^{n+1} = X^{n-1} + 2 dt F(X^n)``.

    Damping forces are written ``P diag(gamma) V`` and evaluated at
    ``(V^{n+1} + V^{n-1}) / 2``, which keeps the update linear in ``V^{n+1}``
    and damps the parasitic mode; ``gamma`` is ``mu``, ``|v|`` or
    ``g_odd(v) / v`` (see ``DampingModel.step_coefficient``). Explicit literal
    variants use ``F(V^n)`` instead. With the
    consistent mass the damping carries the same ``M`` that is inverted and the
    update is a per-node division; with the lumped mass it is a tridiagonal
    solve with ``rho2 M + dt M_L diag(gamma)``.
    """
    dt = state.dt
    p, c = state.prev, state.curr
    f_u, f_v = _elastic_forces(c, mats, materials)
    rho2 = materials.rho2

    phi = p.phi + 2 * dt * c.u
    psi = p.psi + 2 * dt * c.v
    u = p.u + (2 * dt / materials.rho1) * mats.solve_mass(f_u)

    if damping.semi_implicit:
        gamma = damping.step_coefficient(c.v, p.v)
        if damping.pairing is MassPairing.CONSISTENT:
            a = dt * gamma / rho2
            v = ((1 - a) * p.v + (2 * dt / rho2) * mats.solve_mass(f_v)) / (1 + a)
        else:
            d = dt * mats.M_lumped.main * gamma
            lhs = mats.M.scaled(rho2).plus_diagonal(d)
            rhs = rho2 * mats.M.matvec(p.v) - d * p.v + 2 * dt * f_v
            v = thomas_solve(lhs, rhs)
    else:
        f_v = f_v - damping_force(c, mats, damping)
        v = p.v + (2 * dt / rho2) * mats.solve_mass(f_v)

    out = state.advanced(Level(phi, psi, u, v))
    if not out.is_finite():
        raise NonFiniteStateError(out.n)
    return out


# ---------------------------------------------------------------------------
# run configuration and the marching loop


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    """One simulation. Defaults reproduce the published linear-damping constants."""

    L: float = 50.0
    Nx: int = 10
    T: float = 4.0
    c: float = 0.2
    materials: Materials = field(default_factory=Materials)
    damping: DampingModel = field(default_factory=lambda: DampingModel.linear(1.0))
    ic: InitialPreset = "sine_mode"
    mode: int = 2
    amplitude: float = 1.0
    c_max: float = DEFAULT_C_MAX
    allow_unstable: bool = False
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ConfigError(f"L: must be positive, got {self.L}")
        if int(self.Nx) != self.Nx or self.Nx < 1:
            raise ConfigError(f"Nx: must be an integer >= 1, got {self.Nx}")
        if not self.T > 0:
            raise ConfigError(f"T: must be positive, got {self.T}")
        if not self.c > 0:
            raise ConfigError(f"c: must be positive, got {self.c}")
        if self.c > self.c_max and not self.allow_unstable:
            raise ConfigError(
                f"c: Courant ratio {self.c} exceeds c_max={self.c_max} (set allow_unstable to override)"
            )
        if self.ic not in ("cos_sin", "sine_mode"):
            raise ConfigError(f"ic: unknown initial-condition preset {self.ic!r}")
        if int(self.mode) != self.mode or self.mode < 1:
            raise ConfigError(f"mode: must be a positive integer, got {self.mode}")

    @property
    def mesh(self) -> Mesh:
        return Mesh(self.L, int(self.Nx))

    @property
    def dt(self) -> float:
        return self.c * self.mesh.h

    @property
    def n_steps(self) -> int:
        """``round(T / dt)``, but at least one step so levels 0 and 1 always exist."""
        return max(1, round(self.T / self.dt))

    def with_(self, **changes) -> RunConfig:
        return replace(self, **changes)

    def fingerprint(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def stability_number(config: RunConfig) -> float:
    """``dt * omega_max`` for the undamped semi-discrete system; leapfrog needs < 1.

    ``omega_max^2`` is the largest eigenvalue of ``Mt^{-1} A`` with
    ``Mt = diag(rho1 M, rho2 M)`` and ``A`` the shear/bending stiffness.
    The zero-order ``k M`` block makes this exceed ``c * sqrt(12 k / rho1)``
    on coarse meshes, which the plain Courant guard does not see.
    """
    mats = SystemMatrices.from_mesh(config.mesh)
    m = config.materials
    M, K, S = (a.to_dense() for a in (mats.M, mats.K, mats.S))
    A = np.block([[m.k * K, m.k * S], [m.k * S.T, m.b * K + m.k * M]])
    C = np.linalg.cholesky(M)
    scale = np.concatenate([np.full(M.shape[0], 1 / math.sqrt(m.rho1)), np.full(M.shape[0], 1 / math.sqrt(m.rho2))])
    Cinv = np.linalg.inv(np.kron(np.eye(2), C)) * scale[:, None]
    omega2 = np.linalg.eigvalsh(Cinv @ A @ Cinv.T)
    return float(config.dt * math.sqrt(max(omega2[-1], 0.0)))


Observer = Callable[[BeamState], None]


def integrate(
    level0: Level,
    mats: SystemMatrices,
    damping: DampingModel,
    dt: float,
    n_steps: int,
    materials: Materials = UNIT_MATERIALS,
    observer: Observer | None = None,
    fingerprint: str = "",
) -> tuple[BeamState, EnergyTrace]:
    """March ``n_steps`` steps and record energies at every level.

    ``observer`` is called with the state after each level is produced,
    including level 0.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    M, K, S = mats.M, mats.K, mats.S
    E_paper = np.empty(n_steps + 1)
    E_phys = np.empty(n_steps + 1)
    rate = np.full(n_steps + 1, np.nan)

    def record(s: BeamState) -> None:
        E_paper[s.n] = energy_paper(s.curr, M, K, materials)
        E_phys[s.n] = energy_physical(s.curr, M, K, S, materials)
        if observer is not None:
            observer(s)

    state = BeamState.initial(level0, dt)
    if not state.is_finite():
        raise NonFiniteStateError(0)
    record(state)
    state = startup_step(state, mats, damping, materials)
    record(state)
    for _ in range(n_steps - 1):
        before = state.prev
        state = leapfrog_step(state, mats, damping, materials)
        record(state)
        rate[state.n - 1] = predicted_rate(damping, mats, before, state.prev, state.curr)

    residual = np.full(n_steps + 1, np.nan)
    residual[1:-1] = (E_phys[2:] - E_phys[:-2]) / (2 * dt) - rate[1:-1]
    if not damping.is_damped:
        rate[:] = 0.0
    steps = np.arange(n_steps + 1)
    trace = EnergyTrace(steps, steps * dt, E_paper, E_phys, rate, residual, fingerprint)
    return state, trace


def run_simulation(config: RunConfig, observer: Observer | None = None) -> tuple[BeamState, EnergyTrace]:
    mesh = config.mesh
    mats = SystemMatrices.from_mesh(mesh)
    level0 = initial_conditions(config.ic, mesh, config.amplitude, config.mode)
    return integrate(
        level0,
        mats,
        config.damping,
        config.dt,
        config.n_steps,
        config.materials,
        observer=observer,
        fingerprint=config.fingerprint(),
    )


def reference_solution(
    level0: Level,
    mats: SystemMatrices,
    damping: DampingModel,
    dt: float,
    n_steps: int,
    materials: Materials = UNIT_MATERIALS,
) -> Level:
    """Classical fourth-order Runge-Kutta on the semi-discrete system.

    Independent of the leapfrog path; used as the accuracy oracle. The damping
    force is evaluated pointwise in time (no averaging).
    """
    n = len(level0.phi)
    m = materials
    Minv = mats.M_inv
    K, S, M = (a.to_dense() for a in (mats.K, mats.S, mats.M))
    Z, I = np.zeros((n, n)), np.eye(n)
    # linear part y' = A y with y = (Phi, Psi, U, V)
    A = np.block(
        [
            [Z, Z, I, Z],
            [Z, Z, Z, I],
            [-(m.k / m.rho1) * Minv @ K, -(m.k / m.rho1) * Minv @ S, Z, Z],
            [(m.k / m.rho2) * Minv @ S, -Minv @ (m.b * K + m.k * M) / m.rho2, Z, Z],
        ]
    )

    def rhs(y: np.ndarray) -> np.ndarray:
        out = A @ y
        if damping.is_damped:
            lvl = Level(*y.reshape(4, n))
            out[3 * n :] -= Minv @ damping_force(lvl, mats, damping) / m.rho2
        return out

    y = np.concatenate([np.asarray(a, dtype=float) for a in level0])
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return Level(*(a.copy() for a in y.reshape(4, n)))


def observed_order(errors: list[float] | np.ndarray, ratio: float = 2.0) -> np.ndarray:
    """``log_ratio(e_k / e_{k+1})`` for a sequence refined by ``ratio``."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)
