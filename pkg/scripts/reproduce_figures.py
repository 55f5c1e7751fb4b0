"""Run every figure preset and write its plot-ready data under one directory.

Usage: python scripts/reproduce_figures.py [out_dir]
"""

import sys
import time
from pathlib import Path

from timobeam import cli


def main(out_root: str = "figures") -> None:
    root = Path(out_root)
    for name in cli.PRESETS:
        start = time.perf_counter()
        code = cli.main(["preset", name, "--out", str(root / name)])
        elapsed = time.perf_counter() - start
        report = (root / name / "fit_report.txt").read_text().splitlines()
        selected = next((line for line in report if line.startswith(("selected", "fit unavailable"))), "")
        print(f"{name:5s} exit={code} {elapsed:6.2f}s  {selected}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
