"""Command-line front end: ``timobeam run|fit|sweep|preset``.

Configuration is a set of ``key=value`` pairs, read from a text file
(``--config``, one pair per line, ``#`` comments) and from positional tokens
on the command line. Later sources win: defaults, preset, file, tokens, flags.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from timobeam import io
from timobeam.damping import DampingModel, Materials
from timobeam.decay import DecayFitError, classify_decay
from timobeam.fem import SystemMatrices
from timobeam.stepper import (
    ConfigError,
    NonFiniteStateError,
    RunConfig,
    initial_conditions,
    integrate,
    observed_order,
    stability_number,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

# dense eigenvalue check is skipped above this size
_STABILITY_CHECK_MAX_NX = 400


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _int(raw: str) -> int:
    value = float(raw)
    if value != int(value):
        raise ValueError("expected an integer")
    return int(value)


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.split(",") if p.strip())


def _choice(*allowed: str) -> Callable[[str], str]:
    def parse(raw: str) -> str:
        if raw not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return raw

    return parse


KEYS: dict[str, tuple[Callable[[str], Any], str]] = {
    "L": (float, "a number"),
    "Nx": (_int, "an integer"),
    "T": (float, "a number"),
    "c": (float, "a number"),
    "rho1": (float, "a number"),
    "rho2": (float, "a number"),
    "b": (float, "a number"),
    "k": (float, "a number"),
    "damping": (_choice("undamped", "linear", "powerlaw", "expflat"), "a damping law"),
    "mu": (float, "a number"),
    "pairing": (_choice("consistent", "lumped"), "a mass pairing"),
    "literal": (_bool, "a boolean"),
    "ic": (_choice("cos_sin", "sine_mode"), "an initial-condition preset"),
    "mode": (_int, "an integer"),
    "amplitude": (float, "a number"),
    "c_max": (float, "a number"),
    "allow_unstable": (_bool, "a boolean"),
    "snapshots": (_floats, "a comma-separated list of numbers"),
    "window_fraction": (float, "a number"),
    "energy": (_choice("E_phys", "E_paper"), "E_phys or E_paper"),
    "levels": (_int, "an integer"),
}
ALIASES = {"N": "mode", "Nt_levels": "levels"}

DEFAULTS: dict[str, Any] = {
    "L": 50.0,
    "Nx": 10,
    "T": 4.0,
    "c": 0.2,
    "rho1": 1.0,
    "rho2": 1.0,
    "b": 1.0,
    "k": 1.0,
    "damping": "linear",
    "mu": 1.0,
    "pairing": None,
    "literal": False,
    "ic": "sine_mode",
    "mode": 2,
    "amplitude": 1.0,
    "c_max": 0.5,
    "allow_unstable": False,
    "snapshots": (),
    "window_fraction": 0.1,
    "energy": "E_phys",
    "levels": 3,
}

# Long damped runs: ten interior nodes on [0, 10], first mode, amplitude 10.
_MATCHED = "L=10 Nx=10 T=300 c=0.1 amplitude=10 mode=1 ic=sine_mode"
_UNDAMPED = "damping=undamped L=2 Nx=50 T=10 c=0.2 ic=cos_sin"


@dataclass(frozen=True)
class Preset:
    description: str
    tokens: str
    energy_difference: bool = False


PRESETS: dict[str, Preset] = {
    "data": Preset("published constants, linear damping mu=1", ""),
    "fig1": Preset("initial data on L=2, Nx=50", _UNDAMPED + " snapshots=0"),
    "fig2": Preset("undamped solution snapshots", _UNDAMPED + " snapshots=0,2,4,6,8,10"),
    "fig3": Preset("undamped energy conservation", _UNDAMPED, energy_difference=True),
    "fig4": Preset("linear damping energy", _MATCHED + " damping=linear mu=1"),
    "fig5": Preset("linear damping, exponential fit", _MATCHED + " damping=linear mu=1"),
    "fig6": Preset("power-law damping energy", _MATCHED + " damping=powerlaw"),
    "fig7": Preset("power-law damping, polynomial fit", _MATCHED + " damping=powerlaw"),
    "fig8": Preset("exponentially flat damping, logarithmic fit", _MATCHED + " damping=expflat"),
}


def _normalize_key(key: str) -> str:
    key = ALIASES.get(key, key)
    if key not in KEYS:
        raise ConfigError(f"{key}: unknown key")
    return key


def parse_pairs(tokens: list[str], source: str = "command line") -> dict[str, Any]:
    """Parse ``key=value`` strings into typed values; errors name the key."""
    out: dict[str, Any] = {}
    for token in tokens:
        token = token.split("#", 1)[0].strip()
        if not token:
            continue
        if "=" not in token:
            raise ConfigError(f"{token}: expected key=value ({source})")
        key, raw = (s.strip() for s in token.split("=", 1))
        key = _normalize_key(key)
        parser, expected = KEYS[key]
        try:
            out[key] = parser(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected {expected}, got {raw!r}") from None
    return out


def read_config_file(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    return parse_pairs(text.splitlines(), source=str(path))


def build_run_config(values: dict[str, Any]) -> RunConfig:
    v = {**DEFAULTS, **values}
    for key in ("rho1", "rho2", "b", "k"):
        if not v[key] > 0:
            raise ConfigError(f"{key}: must be positive, got {v[key]}")
    materials = Materials(v["rho1"], v["rho2"], v["b"], v["k"])
    kind = v["damping"]
    try:
        damping = DampingModel(
            kind,
            mu=v["mu"] if kind == "linear" else 0.0,
            pairing=v["pairing"],
            literal=v["literal"],
        )
    except ValueError as exc:
        raise ConfigError(f"mu: {exc}") from None
    return RunConfig(
        L=v["L"],
        Nx=v["Nx"],
        T=v["T"],
        c=v["c"],
        materials=materials,
        damping=damping,
        ic=v["ic"],
        mode=v["mode"],
        amplitude=v["amplitude"],
        c_max=v["c_max"],
        allow_unstable=v["allow_unstable"],
        snapshot_times=tuple(v["snapshots"]),
    )


def parse_config(args: list[str] | tuple[str, ...] = (), file: str | Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from ``key=value`` tokens and an optional file.

    Tokens override file values; unset keys take the published defaults
    (``L=50, T=4, c=0.2, Nx=10``, unit materials, linear damping with
    ``mu=1``, ``sine_mode`` with ``N=2``).
    """
    values = read_config_file(file) if file is not None else {}
    values.update(parse_pairs(list(args)))
    return build_run_config(values)


# ---------------------------------------------------------------------------
# commands


def _warn(msg: str) -> None:
    print(f"timobeam: warning: {msg}", file=sys.stderr)


def _check_stability(config: RunConfig) -> None:
    if config.Nx > _STABILITY_CHECK_MAX_NX:
        return
    nu = stability_number(config)
    if nu >= 1.0:
        _warn(f"dt * omega_max = {nu:.3f} >= 1: leapfrog is unstable for this mesh and c")


def _simulate(config: RunConfig, snapshot_steps: set[int] | None = None):
    mesh = config.mesh
    mats = SystemMatrices.from_mesh(mesh)
    level0 = initial_conditions(config.ic, mesh, config.amplitude, config.mode)
    captured: dict[int, Any] = {}

    def observer(state) -> None:
        if snapshot_steps and state.n in snapshot_steps:
            captured[state.n] = state.curr

    _, trace = integrate(
        level0,
        mats,
        config.damping,
        config.dt,
        config.n_steps,
        config.materials,
        observer=observer if snapshot_steps else None,
        fingerprint=config.fingerprint(),
    )
    return trace, captured


def run_command(
    config: RunConfig,
    out_dir: str | Path,
    window_fraction: float = 0.1,
    energy: str = "E_phys",
    energy_difference: bool = False,
) -> list[Path]:
    """Simulate and write the trace, snapshots, fit report and plot data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _check_stability(config)
    steps = {
        int(min(max(round(t / config.dt), 0), config.n_steps)): t for t in config.snapshot_times
    }
    trace, captured = _simulate(config, set(steps))

    written = [io.write_trace_csv(trace, out / "trace.csv")]
    for n in sorted(captured):
        written.append(io.write_snapshot(captured[n], config.mesh, out / f"snapshot_{n:06d}.csv"))
    try:
        result, error = classify_decay(trace, window_fraction, energy), None
    except DecayFitError as exc:
        result, error = None, str(exc)
    report = io.format_fit_report(result, trace.fingerprint, window_fraction, energy, error)
    (out / "fit_report.txt").write_text(report)
    written.append(out / "fit_report.txt")
    written += io.write_plot_data(trace.t, getattr(trace, energy), out)
    if energy_difference:
        written.append(io.write_energy_difference(trace, out / "energy_difference.csv"))
    return written


def fit_command(trace_path: str | Path, out_dir: str | Path | None, window_fraction: float, energy: str) -> str:
    data = Path(trace_path).read_bytes()
    fingerprint = hashlib.sha256(data).hexdigest()[:16]
    trace = io.read_trace_csv(trace_path, fingerprint)
    result = classify_decay(trace, window_fraction, energy)
    report = io.format_fit_report(result, fingerprint, window_fraction, energy)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "fit_report.txt").write_text(report)
        io.write_plot_data(trace.t, getattr(trace, energy), out)
    return report


@dataclass(frozen=True)
class SweepRow:
    level: int
    dt: float
    n_steps: int
    drift: float
    residual: float


def _sweep_level(args: tuple[RunConfig, int]) -> SweepRow:
    config, level = args
    trace, _ = _simulate(config)
    return SweepRow(level, config.dt, config.n_steps, trace.relative_drift(), trace.max_abs_residual())


def sweep_command(config: RunConfig, levels: int, out_dir: str | Path | None = None, jobs: int = 1) -> list[str]:
    """Run at ``dt, dt/2, dt/4, ...`` on a fixed mesh and tabulate observed orders."""
    if levels < 2:
        raise ConfigError(f"levels: a sweep needs at least 2 levels, got {levels}")
    configs = [(config.with_(c=config.c / 2**i), i) for i in range(levels)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_level, configs))
    else:
        rows = [_sweep_level(a) for a in configs]
    drift_order = np.concatenate([[np.nan], observed_order([r.drift for r in rows])])
    res_order = np.concatenate([[np.nan], observed_order([r.residual for r in rows])])
    digits = io.significant_digits()
    lines = ["level,dt,n_steps,drift,residual,drift_order,residual_order"]
    for r, p, q in zip(rows, drift_order, res_order):
        vals = [io.fmt(x, digits) for x in (r.dt, r.drift, r.residual, p, q)]
        lines.append(",".join([str(r.level), vals[0], str(r.n_steps), *vals[1:]]))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return lines


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("pairs", nargs="*", metavar="key=value", help="configuration overrides")
    p.add_argument("--config", help="key=value text file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a figure preset")
    p.add_argument("--literal-paper", action="store_true", help="scheme-literal damping variants")
    p.add_argument("--window-fraction", type=float, help="fraction of samples skipped by the fitter")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="timobeam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate one configuration")
    _common(run)

    preset = sub.add_parser("preset", help="run a figure preset, or list them")
    preset.add_argument("name", nargs="?", choices=sorted(PRESETS))
    preset.add_argument("--list", action="store_true", help="print the preset table")
    _common(preset)

    sweep = sub.add_parser("sweep", help="time-step refinement study")
    _common(sweep)
    sweep.add_argument("--levels", type=int, help="number of refinement levels (>= 2)")
    sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    fit = sub.add_parser("fit", help="classify the decay of an existing trace CSV")
    fit.add_argument("trace", help="trace CSV written by run")
    fit.add_argument("--out", default=None, help="directory for the report and plot data")
    fit.add_argument("--window-fraction", type=float, default=0.1)
    fit.add_argument("--energy", choices=("E_phys", "E_paper"), default="E_phys")
    return parser


def _gather(ns: argparse.Namespace, preset_name: str | None) -> tuple[dict[str, Any], Preset | None]:
    values: dict[str, Any] = {}
    preset = PRESETS[preset_name] if preset_name else None
    if preset is not None:
        values.update(parse_pairs(preset.tokens.split(), source=f"preset {preset_name}"))
    if ns.config:
        values.update(read_config_file(ns.config))
    values.update(parse_pairs(ns.pairs))
    if ns.literal_paper:
        values["literal"] = True
    if ns.window_fraction is not None:
        values["window_fraction"] = ns.window_fraction
    if getattr(ns, "levels", None) is not None:
        values["levels"] = ns.levels
    return values, preset


def _dispatch(ns: argparse.Namespace) -> int:
    if ns.command == "fit":
        print(fit_command(ns.trace, ns.out, ns.window_fraction, ns.energy), end="")
        return EXIT_OK

    if ns.command == "preset":
        if ns.list or ns.name is None:
            for name, p in PRESETS.items():
                print(f"{name:5s}  {p.description}: {p.tokens or '(defaults)'}")
            return EXIT_OK if ns.list else EXIT_USAGE
        values, preset = _gather(ns, ns.name)
    else:
        values, preset = _gather(ns, ns.preset)

    config = build_run_config(values)
    merged = {**DEFAULTS, **values}
    if ns.command == "sweep":
        for line in sweep_command(config, merged["levels"], ns.out, ns.jobs):
            print(line)
        return EXIT_OK

    written = run_command(
        config,
        ns.out,
        merged["window_fraction"],
        merged["energy"],
        energy_difference=bool(preset and preset.energy_difference),
    )
    print(f"wrote {len(written)} files to {ns.out} (fingerprint {config.fingerprint()})")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        # overflow is reported once, as a non-finite state, not as numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            return _dispatch(ns)
    except ConfigError as exc:
        print(f"timobeam: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonFiniteStateError, DecayFitError, FloatingPointError) as exc:
        print(f"timobeam: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"timobeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
