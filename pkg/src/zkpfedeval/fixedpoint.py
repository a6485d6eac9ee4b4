"""Fixed-point encoding of losses and thresholds at six decimal places.

Rounding goes through :class:`decimal.Decimal` on the exact binary value of
the input, so results never depend on platform float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .errors import RangeError

SCALE = 10**6
BITS = 32
MAX_RAW = 2**BITS  # exclusive
MAX_VALUE = MAX_RAW / SCALE  # exclusive


@dataclass(frozen=True, order=True)
class FixedLoss:
    raw: int

    def __post_init__(self):
        if not isinstance(self.raw, int) or isinstance(self.raw, bool):
            raise TypeError("raw must be an int")
        if not 0 <= self.raw < MAX_RAW:
            raise RangeError(f"raw value {self.raw} outside [0, 2^{BITS})")

    def __float__(self):
        return decode_fixed(self)


def encode_fixed(x) -> FixedLoss:
    """Round ``x * 10^6`` to the nearest integer, ties away from zero."""
    if isinstance(x, str):
        d = Decimal(x)
    else:
        if isinstance(x, float) and not math.isfinite(x):
            raise RangeError(f"cannot encode non-finite value {x!r}")
        d = Decimal(x)
    if not d.is_finite():
        raise RangeError(f"cannot encode non-finite value {x!r}")
    if d < 0:
        raise RangeError(f"losses are nonnegative, got {x!r}")
    raw = int((d * SCALE).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    if raw >= MAX_RAW:
        raise RangeError(f"{x!r} exceeds the encodable maximum {MAX_VALUE}")
    return FixedLoss(raw)


def decode_fixed(v: FixedLoss) -> float:
    return v.raw / SCALE
