#!/usr/bin/env python3
"""Detection statistics as the adversary's observation budget grows.

Monte Carlo sweep over the number of observations T at the fixed default
placements; writes results.csv / results.json. Append CLI flags to adjust:

    python scripts/observation_sweep.py --num-runs 250 --out-dir runs/obs
"""

import sys

from dfrc_privacy.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "--sweep", "T=30,60,100,150,200,300",
                   "--root-seed", "42", *sys.argv[1:]]))
