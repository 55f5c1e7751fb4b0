"""Plain-text serialization: trace CSVs, snapshots, plot data and fit reports."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from timobeam.decay import MODELS, DecayClassification
from timobeam.energy import EnergyTrace, Level
from timobeam.fem import Mesh

PRECISION_ENV = "TIMOBEAM_DIGITS"
DEFAULT_DIGITS = 17


def significant_digits() -> int:
    """Digits used for reals in output files; ``TIMOBEAM_DIGITS`` overrides 17."""
    raw = os.environ.get(PRECISION_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DIGITS
    try:
        digits = int(raw)
    except ValueError:
        raise ValueError(f"{PRECISION_ENV}: expected an integer, got {raw!r}") from None
    if not 1 <= digits <= 17:
        raise ValueError(f"{PRECISION_ENV}: must be between 1 and 17, got {digits}")
    return digits


def fmt(x: float, digits: int | None = None) -> str:
    digits = significant_digits() if digits is None else digits
    return f"{float(x):.{digits - 1}e}"


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_trace_csv(trace: EnergyTrace, path: str | Path) -> Path:
    path = Path(path)
    digits = significant_digits()
    cols = [getattr(trace, name) for name in EnergyTrace.columns[1:]]
    rows = (
        [str(int(trace.step[i]))] + [fmt(c[i], digits) for c in cols] for i in range(len(trace))
    )
    _write_rows(path, list(EnergyTrace.columns), rows)
    return path


def read_trace_csv(path: str | Path, fingerprint: str = "") -> EnergyTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != EnergyTrace.columns:
            raise ValueError(f"{path}: expected header {','.join(EnergyTrace.columns)}")
        rows = [r for r in reader if r]
    data = np.array(rows, dtype=float).reshape(-1, len(EnergyTrace.columns))
    return EnergyTrace(data[:, 0].astype(int), *data[:, 1:].T, fingerprint=fingerprint)


def write_snapshot(level: Level, mesh: Mesh, path: str | Path) -> Path:
    """Nodal values including the two boundary zeros."""
    path = Path(path)
    digits = significant_digits()
    padded = [np.concatenate([[0.0], a, [0.0]]) for a in level]
    x = mesh.nodes
    rows = ([fmt(x[i], digits)] + [fmt(a[i], digits) for a in padded] for i in range(len(x)))
    _write_rows(path, ["x", "phi", "psi", "u", "v"], rows)
    return path


PLOT_FILES = {
    "exponential": ("plot_exponential.csv", ("t", "logE")),
    "polynomial": ("plot_polynomial.csv", ("logt", "logE")),
    "logarithmic": ("plot_logarithmic.csv", ("loglogt", "logE")),
}


def write_plot_data(t: np.ndarray, E: np.ndarray, out_dir: str | Path) -> list[Path]:
    """Two-column files in the coordinates where each decay law is a line."""
    out_dir = Path(out_dir)
    digits = significant_digits()
    positive = np.isfinite(E) & (E > 0)
    paths = []
    for model, (name, header) in PLOT_FILES.items():
        mask = positive & {"exponential": t >= 0, "polynomial": t > 0, "logarithmic": t > 1}[model]
        x, em = t[mask], np.log(E[mask])
        if model == "polynomial":
            x = np.log(x)
        elif model == "logarithmic":
            x = np.log(np.log(x))
        path = out_dir / name
        _write_rows(path, list(header), ([fmt(a, digits), fmt(b, digits)] for a, b in zip(x, em)))
        paths.append(path)
    return paths


def write_energy_difference(trace: EnergyTrace, path: str | Path) -> Path:
    """``E^n - E^{n-1}`` for both energies, the quantity plotted for the undamped run."""
    path = Path(path)
    digits = significant_digits()
    dp, dq = np.diff(trace.E_paper), np.diff(trace.E_phys)
    rows = ([fmt(trace.t[i + 1], digits), fmt(dp[i], digits), fmt(dq[i], digits)] for i in range(len(dp)))
    _write_rows(path, ["t", "dE_paper", "dE_phys"], rows)
    return path


def format_fit_report(
    result: DecayClassification | None,
    fingerprint: str,
    window_fraction: float,
    energy: str,
    error: str | None = None,
) -> str:
    lines = [
        "decay fit report",
        f"fingerprint: {fingerprint}",
        f"energy: {energy}",
        f"window_fraction: {window_fraction}",
    ]
    if result is None:
        lines.append(f"fit unavailable: {error}")
        return "\n".join(lines) + "\n"
    digits = significant_digits()
    lines.append("model,slope,intercept,r_squared,t_start,t_end,sample_count")
    for name in MODELS:
        f = result.fits.get(name)
        if f is None:
            lines.append(f"{name},nan,nan,nan,nan,nan,0")
            continue
        vals = [f.slope, f.intercept, f.r_squared, *f.window]
        lines.append(",".join([name, *(fmt(v, digits) for v in vals), str(f.sample_count)]))
    best = result.best
    lines.append(f"selected: {result.selected}")
    runner = result.runner_up()
    if runner is not None:
        lines.append(f"runner_up: {runner.model} (r_squared margin {best.r_squared - runner.r_squared:.3e})")
    lines.append(f"non_decaying: {'yes' if result.non_decaying else 'no'}")
    summary = {
        "exponential": f"E ~ exp({best.intercept:.4g}) * exp({best.slope:.4g} t)",
        "polynomial": f"E ~ exp({best.intercept:.4g}) * t^({best.slope:.4g})",
        "logarithmic": f"E ~ exp({best.intercept:.4g}) * (log t)^({best.slope:.4g})",
    }[result.selected]
    lines.append(f"summary: {summary}, r^2 = {best.r_squared:.6f}")
    return "\n".join(lines) + "\n"
