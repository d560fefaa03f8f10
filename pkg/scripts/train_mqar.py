#!/usr/bin/env python3
"""Train the one-layer model on synthetic associative recall; loss trace CSV plus final accuracy.

Extra arguments are passed through, e.g. `--steps 200 --lr 0.02`.
"""

import sys

from zeta.cli import main

if __name__ == "__main__":
    sys.exit(main(["train", *sys.argv[1:]]))
