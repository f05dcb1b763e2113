#!/usr/bin/env python3
"""Scaling sweep over N in {256, 1024, 4096} at fixed epsilon, plus the
epsilon-halving measurement; asserts the growth-band checks."""
import sys

from vdo.cli import main

if __name__ == "__main__":
    sys.exit(main(["--mode", "scaling", "--trials", "50", "--seed", "2024",
                   "--out", "scaling_report.txt"] + sys.argv[1:]))
