"""Time-step refinement tables for the undamped and damped setups.

Prints drift and identity-residual norms at dt, dt/2, dt/4, dt/8 together with
observed orders, plus the stability number dt * omega_max of each base run.

Usage: python scripts/convergence_study.py [levels]
"""

import sys

from timobeam import cli
from timobeam.damping import DampingModel
from timobeam.stepper import RunConfig, stability_number

SETUPS = {
    "undamped, L=2 Nx=50 cos/sin": RunConfig(L=2, Nx=50, T=10, ic="cos_sin", damping=DampingModel.undamped()),
    "linear mu=1, L=50 Nx=10": RunConfig(),
    "linear mu=1, L=10 Nx=10": RunConfig(L=10, Nx=10, T=20, c=0.2, amplitude=10, mode=1),
    "powerlaw, L=10 Nx=10": RunConfig(L=10, Nx=10, T=20, c=0.2, amplitude=10, mode=1, damping=DampingModel.power_law()),
    "expflat, L=10 Nx=10": RunConfig(L=10, Nx=10, T=20, c=0.2, amplitude=10, mode=1, damping=DampingModel.exp_flat()),
}


def main(levels: int = 4) -> None:
    for title, cfg in SETUPS.items():
        print(f"# {title}  (dt * omega_max = {stability_number(cfg):.3f})")
        for line in cli.sweep_command(cfg, levels):
            print(line)
        print()


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 4)
