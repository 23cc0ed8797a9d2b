"""Time series and bound chains for the three dimer regimes, with SVG plots."""
import sys
from pathlib import Path

from qres.cli import main

ROOT = Path(__file__).resolve().parent.parent
RUNS = [
    ("dynamics", "detuned_coherent"),
    ("dynamics", "resonant_underdamped"),
    ("bounds", "resonant_underdamped"),
    ("dynamics", "resonant_overdamped"),
    ("bounds", "resonant_overdamped"),
    ("bounds", "infeasible_target"),
]

if __name__ == "__main__":
    codes = [main([cmd, "--config", str(ROOT / "configs" / f"{name}.yaml"), "--plots"]) for cmd, name in RUNS]
    sys.exit(max(codes))
