"""Input validation helpers shared across the package."""

from __future__ import annotations

import math

import numpy as np


def check_finite(value, name: str) -> float:
    x = float(value)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return x


def check_finite_complex(value, name: str) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return z


def check_positive(value, name: str, *, allow_zero: bool = False) -> float:
    x = check_finite(value, name)
    if allow_zero:
        if x < 0.0:
            raise ValueError(f"{name} must be >= 0, got {value!r}")
    elif x <= 0.0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return x


def check_index(i, n: int, name: str = "channel") -> int:
    k = int(i)
    if not 0 <= k < n:
        raise IndexError(f"{name} {i} out of range [0, {n})")
    return k


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, a seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
