"""
Command-line front end for the Neumann eigenvalue bound toolkit

Usage:
    python scripts/neumann_bounds.py bound --scenario ellipse-2-1
    python scripts/neumann_bounds.py validate --scenario rect-3-1
    python scripts/neumann_bounds.py sweep --config config/gamma_sweep.yaml --out gamma.csv
    python scripts/neumann_bounds.py reproduce
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / 'src'))

from cli.commands import main


if __name__ == "__main__":
    sys.exit(main())
