#!/usr/bin/env python3
"""Solve one precoder design and dump desired vs synthesized beampattern.

Writes beampattern.csv (angle, desired, synthesized) and design.json
(objective trace, convergence, per-user SINR) for the default fixed
placements. Any CLI flag can be appended, e.g.:

    python scripts/design_beampattern.py --gamma-db 6 --out-dir runs/design
"""

import sys

from dfrc_privacy.cli import main

if __name__ == "__main__":
    sys.exit(main(["design", *sys.argv[1:]]))
