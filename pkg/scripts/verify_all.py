"""Randomized invariant checks plus the single-shot discrimination experiment."""
import sys
from pathlib import Path

from qres.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    codes = [main(["verify", "--config", str(ROOT / "configs" / "verify.yaml")]),
             main(["hypothesis", "--config", str(ROOT / "configs" / "hypothesis.yaml")])]
    sys.exit(max(codes))
