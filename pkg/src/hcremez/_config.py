"""Shared numeric settings."""

from __future__ import annotations

import math
import os

PRUNE = 1e-15
DEFAULT_OVERSAMPLE = 8
DEFAULT_MEM_BUDGET = 4 << 30
MEM_ENV = "HCR_MEM_BUDGET"

# checker tolerances: exponents >= 1 vs quasi-norm regime
EPS = 1e-6
EPS_QUASI = 1e-3


class ResourceLimitError(MemoryError):
    """Raised when an operation would exceed the configured memory budget."""


def mem_budget():
    """Memory budget in bytes; ``HCR_MEM_BUDGET`` accepts plain bytes or K/M/G suffixes."""
    raw = os.environ.get(MEM_ENV, "").strip()
    if not raw:
        return DEFAULT_MEM_BUDGET
    return parse_bytes(raw)


def parse_bytes(raw):
    raw = str(raw).strip().upper().removesuffix("B").removesuffix("I")
    scale = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30}
    if raw and raw[-1] in scale:
        return int(float(raw[:-1]) * scale[raw[-1]])
    return int(float(raw))


def tolerance(*exponents):
    """Checker tolerance for a set of exponents (``inf`` allowed)."""
    return EPS_QUASI if any(e < 1 for e in exponents) else EPS


def is_inf(p):
    return p == math.inf
