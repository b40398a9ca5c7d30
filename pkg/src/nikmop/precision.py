"""Binary-precision plumbing shared by the arbitrary-precision modules.

Precision is always specified in bits and applied through mpmath's context
manager, so no function leaks a changed global precision to its caller.
"""
from __future__ import annotations

import math

from mpmath import mp

DEFAULT_PRECISION_BITS = 256

#: Pivot threshold exponent fraction for the moment-system elimination.
PIVOT_EXPONENT_FRACTION = 0.8

#: Relative width target exponent fraction for zero refinement.
REFINE_EXPONENT_FRACTION = 0.25


def working(bits: int):
    """Context manager running the enclosed block at ``bits`` binary digits."""
    if bits < 8:
        raise ValueError(f"precision must be at least 8 bits, got {bits}")
    return mp.workprec(bits)


def decimal_digits(bits: int) -> int:
    """Decimal digits carried by a ``bits``-bit mantissa (floor)."""
    return int(bits * math.log10(2.0))


def pivot_threshold(bits: int):
    """Relative pivot size below which the moment system counts as singular."""
    return mp.mpf(10) ** (-PIVOT_EXPONENT_FRACTION * bits * math.log10(2.0))


def refine_tolerance(bits: int):
    """Relative bracket width at which zero refinement stops."""
    return mp.mpf(10) ** (-REFINE_EXPONENT_FRACTION * bits)
