#!/usr/bin/env python3
"""Detection statistics versus transmit array size and QoS target.

Monte Carlo sweep over M_T x Gamma_dB with a moderate observation budget;
writes results.csv / results.json. Append CLI flags to adjust:

    python scripts/antenna_sweep.py --num-runs 100 --out-dir runs/antenna
"""

import sys

from dfrc_privacy.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "--sweep", "M_T=8,16",
                   "--sweep", "Gamma_dB=0,6,12",
                   "--t", "100", "--num-runs", "200",
                   "--root-seed", "42", *sys.argv[1:]]))
