"""Free/resource block structure and compatibility for the qubit examples."""
import sys
from pathlib import Path

from qres.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    codes = [main(["decompose", "--config", str(ROOT / "configs" / f"{n}.yaml")])
             for n in ("rabi", "pauli_decay", "custom_qubit")]
    sys.exit(max(codes))
