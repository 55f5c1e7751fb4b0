"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a PASS/FAIL line that is printed in the pytest terminal
summary. Run alone with ``pytest tests/test_acceptance.py``.
"""

import time

import numpy as np

from timobeam import cli
from timobeam.damping import DampingModel
from timobeam.decay import classify_decay
from timobeam.energy import Level
from timobeam.fem import (
    Mesh,
    SystemMatrices,
    assemble_coupling,
    assemble_mass,
    assemble_stiffness,
    quadrature_oracle,
)
from timobeam.stepper import (
    RunConfig,
    initial_conditions,
    integrate,
    observed_order,
    reference_solution,
    run_simulation,
)

FIG3 = RunConfig(L=2, Nx=50, T=10, c=0.2, ic="cos_sin", damping=DampingModel.undamped())
MATCHED = RunConfig(L=10, Nx=10, T=300, c=0.1, amplitude=10, mode=1)


def _parity_monotone(E, tol):
    worst = max(float(np.max(np.diff(E[p::2]), initial=-np.inf)) for p in (0, 1))
    return worst <= tol, worst


def test_criterion_1_assembly_oracle(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for L in (1.0, 2.0, 50.0):
        for nx in (1, 2, 3, 10, 50):
            mesh = Mesh(L, nx)
            for kind, asm in (("mass", assemble_mass), ("stiffness", assemble_stiffness), ("coupling", assemble_coupling)):
                A = asm(mesh).to_dense()
                for i in range(nx):
                    # the oracle returns 0 off the band; check the band plus one zero on each side
                    for j in range(max(0, i - 2), min(nx, i + 3)):
                        worst = max(worst, abs(A[i, j] - quadrature_oracle(mesh, kind, i + 1, j + 1)))
                band = np.abs(np.subtract.outer(np.arange(nx), np.arange(nx))) > 1
                worst = max(worst, float(np.max(np.abs(A[band]), initial=0.0)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    acceptance(1, ok, f"max |A - oracle| = {worst:.2e} (<= 1e-12), {elapsed:.2f}s (< 1s)")
    assert ok


def test_criterion_2_undamped_conservation(acceptance):
    start = time.perf_counter()
    drift = run_simulation(FIG3)[1].relative_drift()
    drift_half = run_simulation(FIG3.with_(c=FIG3.c / 2))[1].relative_drift()
    elapsed = time.perf_counter() - start
    ratio = drift / drift_half
    ok = drift <= 1e-2 and ratio >= 3.0 and elapsed < 5.0
    acceptance(
        2,
        ok,
        f"drift {drift:.3e} (<= 1e-2), halving ratio {ratio:.2f} (>= 3), {elapsed:.2f}s (< 5s)",
    )
    assert ok


def test_criterion_3_linear_dissipation(acceptance):
    start = time.perf_counter()
    cfg = RunConfig()  # published constants, mu = 1
    traces = [run_simulation(cfg.with_(c=cfg.c / 2**i))[1] for i in range(3)]
    E = traces[0].E_phys
    mono, worst = _parity_monotone(E, 1e-12 * E[0])
    residuals = [t.max_abs_residual() for t in traces]
    orders = observed_order(residuals)
    elapsed = time.perf_counter() - start
    ok = mono and bool(np.all(orders >= 1.0)) and elapsed < 5.0
    acceptance(
        3,
        ok,
        f"parity monotone {mono} (max increase {worst / E[0]:.3e} E0, tol 1e-12 E0), "
        f"residual orders {np.round(orders, 2).tolist()} (>= 1), {elapsed:.2f}s (< 5s)",
    )
    assert ok


def test_criterion_4_decay_classification(acceptance):
    start = time.perf_counter()
    expected = {"linear": "exponential", "powerlaw": "polynomial", "expflat": "logarithmic"}
    parts, ok = [], True
    for damping in (DampingModel.linear(1.0), DampingModel.power_law(), DampingModel.exp_flat()):
        result = classify_decay(run_simulation(MATCHED.with_(damping=damping))[1])
        best, runner = result.best, result.runner_up()
        good = (
            result.selected == expected[damping.kind.value]
            and best.r_squared >= 0.9
            and best.r_squared > runner.r_squared
        )
        ok &= good
        parts.append(f"{damping.kind.value}->{result.selected} r2={best.r_squared:.4f} (next {runner.r_squared:.4f})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    acceptance(4, ok, "; ".join(parts) + f", {elapsed:.2f}s (< 30s)")
    assert ok


def test_criterion_5_fitter_round_trips(acceptance):
    start = time.perf_counter()
    cases = [
        ("exponential", -45.71, 160.0, np.linspace(0.0, 4.0, 401), lambda t: t),
        ("polynomial", -434.78, 1.61, np.linspace(1.001, 4.0, 401), np.log),
        ("logarithmic", -50.0, 1.10, np.linspace(2.0, 100.0, 401), lambda t: np.log(np.log(t))),
    ]
    worst_rel, worst_r2, ok = 0.0, 1.0, True
    for model, a, b, t, x in cases:
        result = classify_decay((t, np.exp(b + a * x(t))))
        fit = result.fits[model]
        rel = max(abs(fit.slope - a) / abs(a), abs(fit.intercept - b) / abs(b))
        worst_rel, worst_r2 = max(worst_rel, rel), min(worst_r2, fit.r_squared)
        ok &= result.selected == model
    elapsed = time.perf_counter() - start
    ok &= worst_rel <= 1e-9 and worst_r2 >= 1 - 1e-12 and elapsed < 1.0
    acceptance(
        5,
        ok,
        f"max relative error {worst_rel:.2e} (<= 1e-9), min r2 1-{1 - worst_r2:.1e} (>= 1-1e-12), {elapsed:.2f}s (< 1s)",
    )
    assert ok


def test_criterion_6_oracle_convergence(acceptance):
    start = time.perf_counter()
    mesh = Mesh(2.0, 3)
    mats = SystemMatrices.from_mesh(mesh)
    damping = DampingModel.undamped()
    level0 = initial_conditions("sine_mode", mesh)
    errors = []
    for r in (10, 20, 40):
        dt = mesh.h / r
        n = round(1.0 / dt)
        state, _ = integrate(level0, mats, damping, dt, n)
        ref = reference_solution(level0, mats, damping, dt / 100, 100 * n)
        errors.append(max(float(np.max(np.abs(a - b))) for a, b in zip(state.curr, ref)))
    orders = observed_order(errors)
    elapsed = time.perf_counter() - start
    ok = bool(np.all(orders >= 1.9)) and elapsed < 5.0
    acceptance(6, ok, f"observed orders {np.round(orders, 3).tolist()} (>= 1.9), {elapsed:.2f}s (< 5s)")
    assert ok


def test_criterion_7_lumped_power_law_sign(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(20240607)
    mesh = Mesh(10.0, 20)
    mats = SystemMatrices.from_mesh(mesh)
    damping = DampingModel.power_law(pairing="lumped")
    worst = -np.inf
    for _ in range(10):
        level0 = Level(*(rng.uniform(-3.0, 3.0, 20) for _ in range(4)))
        _, trace = integrate(level0, mats, damping, 0.2 * mesh.h, 500)
        worst = max(worst, float(np.max(trace.dissipation_rate[1:-1])))
    elapsed = time.perf_counter() - start
    ok = worst <= 0.0 and elapsed < 10.0
    acceptance(7, ok, f"max modeled dissipation {worst:.3e} (<= 0) over 10 random ICs, {elapsed:.2f}s (< 10s)")
    assert ok


def test_criterion_8_determinism(acceptance, tmp_path):
    paths = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert cli.main(["run", "--preset", "fig6", "T=50", "--out", str(out)]) == 0
        paths.append(out / "trace.csv")
    a, b = (p.read_bytes() for p in paths)
    ok = a == b and len(a) > 0
    acceptance(8, ok, f"two identical run invocations, {len(a)} bytes each, byte-identical={a == b}")
    assert ok
