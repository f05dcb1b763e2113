#!/usr/bin/env python3
"""Exhaustive small-scale verification suites (representation bound,
mixing identities, histogram decision bands)."""
import sys

from vdo.cli import main

if __name__ == "__main__":
    sys.exit(main(["--mode", "brute-force", "--out", "brute_force_report.txt"]
                  + sys.argv[1:]))
