#!/usr/bin/env python3
"""One full design-and-localize trial with particle snapshots.

Dumps the particle cloud at the start, midway, and after the final round
(particles_t*.csv) plus the classified outcome (attack.json), so the
concentration of the filter onto the target cell can be plotted. Append
CLI flags to change any parameter:

    python scripts/attack_trace.py --sigma-sq-dbm -30 --out-dir runs/attack
"""

import sys

from dfrc_privacy.cli import main

if __name__ == "__main__":
    sys.exit(main(["attack", "--snapshot-times", "0,50,300",
                   *sys.argv[1:]]))
