#!/usr/bin/env python3
"""Recompute the tester calibration and print the constants file.

The committed file lives at src/vdo/constants.txt; rerun this after any
change to the tester internals and commit the output if it differs.
"""
import sys

from vdo.cli import main

if __name__ == "__main__":
    sys.exit(main(["--mode", "calibrate", "--n", "1000", "--trials", "200",
                   "--seed", "77", "--out", "calibration_report.txt"] + sys.argv[1:]))
