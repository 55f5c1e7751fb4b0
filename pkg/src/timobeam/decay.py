"""Least-squares classification of energy decay laws.

Each candidate law is a straight line in transformed coordinates::

    exponential   log E = a t            + b
    polynomial    log E = a log t        + b
    logarithmic   log E = a log(log t)   + b

The law whose line fits best (largest r^2) is selected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from timobeam.energy import EnergyTrace

MODELS = ("exponential", "polynomial", "logarithmic")

# smallest energy a sample may have, as a multiple of the smallest normal float
DEFAULT_FLOOR_FACTOR = 1e3


class DecayFitError(ValueError):
    pass


@dataclass(frozen=True)
class DecayFit:
    model: str
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    sample_count: int

    def predict_log_energy(self, t: np.ndarray) -> np.ndarray:
        return self.slope * _transform(self.model, np.asarray(t, dtype=float)) + self.intercept


@dataclass(frozen=True)
class DecayClassification:
    fits: dict[str, DecayFit]
    selected: str
    non_decaying: bool

    @property
    def best(self) -> DecayFit:
        return self.fits[self.selected]

    def runner_up(self) -> DecayFit | None:
        others = [f for name, f in self.fits.items() if name != self.selected]
        return max(others, key=lambda f: f.r_squared, default=None)


def fit_line(xs, ys) -> tuple[float, float, float]:
    """Ordinary least squares ``y ~ a x + b``; returns ``(a, b, r_squared)``.

    ``r_squared`` is defined as 1 when the ``ys`` have zero variance.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DecayFitError("xs and ys must be 1-D arrays of equal length")
    if x.size < 3:
        raise DecayFitError(f"need at least 3 points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DecayFitError("non-finite input to fit_line")
    if np.ptp(x) == 0.0:
        raise DecayFitError("xs have zero variance")
    if np.ptp(y) == 0.0:
        # the mean of equal values can round, so handle constants exactly
        return 0.0, float(y[0]), 1.0
    x_mean, y_mean = x.mean(), y.mean()
    dx, dy = x - x_mean, y - y_mean
    sxx = float(np.dot(dx, dx))
    slope = float(np.dot(dx, dy)) / sxx
    intercept = float(y_mean - slope * x_mean)
    ss_tot = float(np.dot(dy, dy))
    if ss_tot == 0.0:
        return slope, intercept, 1.0
    res = y - (slope * x + intercept)
    r2 = 1.0 - float(np.dot(res, res)) / ss_tot
    return slope, intercept, float(min(max(r2, 0.0), 1.0))


def _transform(model: str, t: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        if model == "exponential":
            return t
        if model == "polynomial":
            return np.log(t)
        if model == "logarithmic":
            return np.log(np.log(t))
    raise ValueError(f"unknown decay model {model!r}")


def _domain(model: str, t: np.ndarray) -> np.ndarray:
    if model == "polynomial":
        return t > 0
    if model == "logarithmic":
        return t > 1
    return np.ones_like(t, dtype=bool)


def classify_decay(
    trace: EnergyTrace | tuple[np.ndarray, np.ndarray],
    window_fraction: float = 0.1,
    energy: str = "E_phys",
    floor: float | None = None,
    min_samples: int = 10,
) -> DecayClassification:
    """Fit all three decay laws to an energy history and pick the best.

    The first ``window_fraction`` of the samples is discarded (startup
    transient) as are samples with energy at or below ``floor`` (default:
    1e3 times the smallest normal float). The polynomial law uses ``t > 0``
    only and the logarithmic law ``t > 1`` only. Ties in r^2 go to the
    earlier law in exponential, polynomial, logarithmic order.
    """
    if isinstance(trace, EnergyTrace):
        t, E = trace.t, getattr(trace, energy)
    else:
        t, E = (np.asarray(a, dtype=float) for a in trace)
    if not 0.0 <= window_fraction < 1.0:
        raise DecayFitError(f"window_fraction must be in [0, 1), got {window_fraction}")
    if np.all(E == 0):
        raise DecayFitError("all energies are zero")
    floor = DEFAULT_FLOOR_FACTOR * np.finfo(float).tiny if floor is None else floor

    start = int(np.floor(window_fraction * len(t)))
    keep = np.zeros(len(t), dtype=bool)
    keep[start:] = True
    keep &= np.isfinite(E) & (E > floor)
    if keep.sum() < min_samples:
        raise DecayFitError(f"only {int(keep.sum())} positive samples in the fit window, need {min_samples}")

    fits: dict[str, DecayFit] = {}
    for model in MODELS:
        mask = keep & _domain(model, t)
        if mask.sum() < 3:
            continue
        tm = t[mask]
        a, b, r2 = fit_line(_transform(model, tm), np.log(E[mask]))
        fits[model] = DecayFit(model, a, b, r2, (float(tm[0]), float(tm[-1])), int(mask.sum()))
    if not fits:
        raise DecayFitError("no decay law had enough samples in its domain")

    # max() keeps the first of equal keys, which gives the preference order
    selected = max(fits, key=lambda name: fits[name].r_squared)
    non_decaying = "exponential" in fits and abs(fits["exponential"].slope) < 1e-10
    return DecayClassification(fits, selected, non_decaying)
