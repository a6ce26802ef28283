"""Ratio/dB conversions and the shared cap convention.

Rejection ratios are linear power ratios everywhere inside the package;
dB appears only at interfaces.  Division by an exact zero power is reported
as the cap value (200 dB) so serialized output stays numeric; callers can
test for the cap with :func:`is_capped`.
"""

from __future__ import annotations

import math

CAP_DB = 200.0
CAP_LINEAR = 10.0 ** (CAP_DB / 10.0)

#: 10 / ln(10), slope of 10*log10 at ratio 1
DB_PER_NEPER = 10.0 / math.log(10.0)


def to_db(linear: float) -> float:
    if linear <= 0.0:
        raise ValueError(f"cannot convert non-positive ratio {linear!r} to dB")
    return min(10.0 * math.log10(linear), CAP_DB)


def from_db(db: float) -> float:
    return 10.0 ** (db / 10.0)


def cap_ratio(linear: float) -> float:
    return min(linear, CAP_LINEAR)


def is_capped(value: float, *, db: bool = False) -> bool:
    return value >= (CAP_DB if db else CAP_LINEAR)


def power_ratio_db(num_power: float, den_power: float) -> tuple[float, bool]:
    """10*log10(num/den) with the cap applied; returns (db, above_cap)."""
    if num_power < 0.0 or den_power < 0.0:
        raise ValueError("powers must be non-negative")
    if num_power == 0.0:
        # zero over anything: report the floor symmetrically as -cap
        return (-CAP_DB, False)
    if den_power == 0.0 or num_power / den_power >= CAP_LINEAR:
        return (CAP_DB, True)
    return (10.0 * math.log10(num_power / den_power), False)
