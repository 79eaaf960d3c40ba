#!/usr/bin/env python3
"""Detection statistics versus precoder-observation noise power.

Monte Carlo sweep over the observation noise sigma^2 (dBm) at the fixed
default placements; writes results.csv / results.json. Append CLI flags:

    python scripts/noise_sweep.py --t 300 --num-runs 250 --out-dir runs/noise
"""

import sys

from dfrc_privacy.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "--sweep", "sigma_sq_dBm=-30,-20,-10,0,10",
                   "--root-seed", "42", *sys.argv[1:]]))
