#!/usr/bin/env python3
"""Print the exact-kernel invariance and detailed-balance residuals.

Equivalent to `interchain oracle-check`.  Exit code 0 only if every check
passes, including the corrupted-acceptance negative controls.
"""

import sys

from interchain.cli import main

if __name__ == "__main__":
    sys.exit(main(["oracle-check", *sys.argv[1:]]))
