#!/usr/bin/env python3
"""Run the three-mode mixture benchmark with the paper-scale defaults.

Equivalent to `interchain multimodal ...`; kept as a script so the
experiment is one command away from a fresh checkout.
"""

import sys

from interchain.cli import main

if __name__ == "__main__":
    sys.exit(main(["multimodal", *sys.argv[1:]]))
