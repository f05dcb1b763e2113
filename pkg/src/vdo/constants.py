"""Calibrated tester constants, loaded from a key=value text file.

The committed file ships with the package; VDO_CONSTANTS overrides the
path. Values are parsed as exact rationals where they feed protocol
arithmetic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from fractions import Fraction
from importlib import resources

_ENV_VAR = "VDO_CONSTANTS"


@dataclass(frozen=True)
class Constants:
    version: int = 0
    c_id: int = 16  # identity tester D-sample coefficient
    c_unif: int = 16  # uniformity tester sample coefficient
    c_tail: int = 4  # tail-estimate sample coefficient (per eps^-4)
    c_hist: int = 4  # histogram sample coefficient (per log^3 N / tau^4)
    c_spot: int = 4  # spot-check probe coefficient (per 1/eps')
    c_ext: int = 8  # extractor replay coefficient (per N/eta)
    eps_floor_coeff: Fraction = Fraction(3, 20)  # eps must exceed this / N^(1/4)
    hist_probe_cap: int = 4096  # protocol-side cap on histogram probes
    decide_margin: Fraction = Fraction(3, 2)  # accept threshold = margin * tau

    def to_text(self) -> str:
        lines = ["# vdo calibration constants"]
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


def parse_constants(text: str) -> Constants:
    kw = {}
    types = {f.name: f.type for f in fields(Constants)}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in types:
            raise ValueError(f"unknown constants key: {key}")
        kw[key] = Fraction(val) if "Fraction" in str(types[key]) else int(val)
    return Constants(**kw)


_cached: Constants | None = None


def get_constants() -> Constants:
    """Constants from VDO_CONSTANTS, the packaged file, or defaults."""
    global _cached
    if _cached is not None:
        return _cached
    path = os.environ.get(_ENV_VAR)
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            _cached = parse_constants(fh.read())
        return _cached
    try:
        text = resources.files("vdo").joinpath("constants.txt").read_text()
        _cached = parse_constants(text)
    except (FileNotFoundError, ModuleNotFoundError):
        _cached = Constants()
    return _cached


def reset_cache() -> None:
    global _cached
    _cached = None
