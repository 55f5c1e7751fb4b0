"""Material constants and damping laws acting on the rotation equation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# 1/s**2 overflows below roughly 1e-154; exp(-1/s**2) is zero long before that.
_EXP_FLAT_CUTOFF = 1e-150


@dataclass(frozen=True)
class Materials:
    """``rho1 phi_tt = k (phi_x + psi)_x`` and ``rho2 psi_tt = b psi_xx - k (phi_x + psi)``."""

    rho1: float = 1.0
    rho2: float = 1.0
    b: float = 1.0
    k: float = 1.0

    def __post_init__(self) -> None:
        for name in ("rho1", "rho2", "b", "k"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"material constant {name} must be positive, got {value}")

    @property
    def equal_wave_speeds(self) -> bool:
        return bool(np.isclose(self.k / self.rho1, self.b / self.rho2, rtol=1e-12, atol=0.0))


class DampingKind(str, Enum):
    UNDAMPED = "undamped"
    LINEAR = "linear"
    POWER_LAW = "powerlaw"
    EXP_FLAT = "expflat"


class MassPairing(str, Enum):
    CONSISTENT = "consistent"
    LUMPED = "lumped"


# Linear damping keeps the consistent mass so that its dissipation is the
# M-norm of the velocity; the nonlinear laws are only sign-definite lumped.
_DEFAULT_PAIRING = {
    DampingKind.UNDAMPED: MassPairing.CONSISTENT,
    DampingKind.LINEAR: MassPairing.CONSISTENT,
    DampingKind.POWER_LAW: MassPairing.LUMPED,
    DampingKind.EXP_FLAT: MassPairing.LUMPED,
}


@dataclass(frozen=True)
class DampingModel:
    """Damping term ``F`` in ``rho2 M V' = -b K Psi + k (S Phi - M Psi) - F``.

    kind
        ``undamped``, ``linear`` (``mu * v``), ``powerlaw`` (``|v| v``) or
        ``expflat`` (``sign(v) exp(-1/v^2)``).
    pairing
        Mass matrix multiplying the nodal damping values. ``None`` picks
        consistent for undamped/linear and lumped for the nonlinear laws.
    literal
        Scheme-literal variants: explicit ``mu V^n`` for linear damping,
        ``|V^n|`` as the power-law coefficient, and ``K g(Psi^n)`` with the
        non-odd ``g`` for ``expflat``. The explicit ones excite the leapfrog
        parasitic mode.
    """

    kind: DampingKind = DampingKind.UNDAMPED
    mu: float = 0.0
    pairing: MassPairing | None = None
    literal: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DampingKind(self.kind))
        if self.pairing is None:
            object.__setattr__(self, "pairing", _DEFAULT_PAIRING[self.kind])
        else:
            object.__setattr__(self, "pairing", MassPairing(self.pairing))
        if self.kind is DampingKind.LINEAR and not self.mu > 0:
            raise ValueError(f"linear damping requires mu > 0, got {self.mu}")

    @classmethod
    def undamped(cls) -> DampingModel:
        return cls(DampingKind.UNDAMPED)

    @classmethod
    def linear(cls, mu: float = 1.0, **kw) -> DampingModel:
        return cls(DampingKind.LINEAR, mu=mu, **kw)

    @classmethod
    def power_law(cls, **kw) -> DampingModel:
        return cls(DampingKind.POWER_LAW, **kw)

    @classmethod
    def exp_flat(cls, **kw) -> DampingModel:
        return cls(DampingKind.EXP_FLAT, **kw)

    @property
    def is_damped(self) -> bool:
        return self.kind is not DampingKind.UNDAMPED

    @property
    def semi_implicit(self) -> bool:
        """Whether the scheme averages ``V^{n+1}`` and ``V^{n-1}`` in the damping term."""
        if self.kind is DampingKind.UNDAMPED:
            return False
        return not (self.literal and self.kind in (DampingKind.LINEAR, DampingKind.EXP_FLAT))

    def secant_coefficient(self, v: np.ndarray) -> np.ndarray:
        """Per-node ``gamma(v)`` with ``force_i = gamma_i * v_i`` (before the mass factor)."""
        v = np.asarray(v, dtype=float)
        if self.kind is DampingKind.LINEAR:
            return np.full_like(v, self.mu)
        if self.kind is DampingKind.POWER_LAW:
            return np.abs(v)
        if self.kind is DampingKind.EXP_FLAT:
            out = np.zeros_like(v)
            nz = v != 0
            out[nz] = g_odd(v[nz]) / v[nz]
            return out
        return np.zeros_like(v)

    def step_coefficient(self, v_curr: np.ndarray, v_prev: np.ndarray) -> np.ndarray:
        """Damping coefficient used by the centered step from ``n - 1`` to ``n + 1``.

        Leapfrog splits into two interleaved chains (even and odd levels), and
        ``gamma(V^n)`` damps each chain with the other chain's velocity. For
        the nonlinear laws that lets one chain die while the other keeps its
        energy undamped, so the coefficient is averaged over levels ``n`` and
        ``n - 1``. ``literal=True`` restores ``gamma(V^n)``.
        """
        if self.kind is DampingKind.LINEAR or self.literal:
            return self.secant_coefficient(v_curr)
        return 0.5 * (self.secant_coefficient(v_curr) + self.secant_coefficient(v_prev))


def g_exp_flat(s: np.ndarray) -> np.ndarray:
    """``exp(-1/s^2)`` as printed, extended by 0 at ``s = 0``. Even in ``s``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    big = np.abs(s) >= _EXP_FLAT_CUTOFF
    out[big] = np.exp(-1.0 / s[big] ** 2)
    return out


def g_odd(s: np.ndarray) -> np.ndarray:
    """Odd extension ``sign(s) exp(-1/s^2)``; satisfies ``s * g_odd(s) >= 0``."""
    s = np.asarray(s, dtype=float)
    return np.sign(s) * g_exp_flat(s)
