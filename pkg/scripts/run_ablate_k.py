#!/usr/bin/env python3
"""Recall of the chunked Z-order search against exact kNN for several k.

Extra arguments are passed through, e.g. `--d-k 2 --ks 8,16,32`.
"""

import sys

from zeta.cli import main

if __name__ == "__main__":
    sys.exit(main(["ablate-k", *sys.argv[1:]]))
