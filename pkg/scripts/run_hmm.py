#!/usr/bin/env python3
"""Run the state-space comparison (interacting vs independent MwG).

Equivalent to `interchain hmm ...`.  Desk-scale defaults: reference
2000 chains x 2000 sweeps, 50 comparison chains, 3000 interacting sweeps.
"""

import sys

from interchain.cli import main

if __name__ == "__main__":
    sys.exit(main(["hmm", *sys.argv[1:]]))
