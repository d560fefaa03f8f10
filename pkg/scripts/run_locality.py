#!/usr/bin/env python3
"""Neighbor-overlap sweep over d_K and N; CSV to stdout or --out.

Extra arguments are passed through, e.g. `--dims 1,2,8 --sizes 2048 --out overlap.csv`.
"""

import sys

from zeta.cli import main

if __name__ == "__main__":
    sys.exit(main(["locality", *sys.argv[1:]]))
