#!/usr/bin/env python3
"""Particle-filter occupancy versus closed-form product posterior.

Runs the static-scene filter on a synthetic likelihood table and prints the
total-variation distance between the averaged cell occupancy and the exact
product-of-likelihoods posterior. Append CLI flags to adjust:

    python scripts/posterior_oracle.py --seeds 1000 --t 20
"""

import sys

from dfrc_privacy.cli import main

if __name__ == "__main__":
    sys.exit(main(["oracle", *sys.argv[1:]]))
