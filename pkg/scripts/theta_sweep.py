"""Static capacity against the mixing angle: closed form and spectral value side by side."""
import sys
from pathlib import Path

from qres.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(main(["sweep-theta", "--config", str(ROOT / "configs" / "detuned_coherent.yaml"), "--plots"]))
