"""Tone-injection calibration of the digital recombination constants.

A tone placed in one sideband at a time yields the complex ratio of the two
port voltages.  Written with the first and last recombination constants
fixed to 1 + 0j (any common gain only rescales the digital outputs), the
other two constants follow as negative reciprocals of the measured ratios.
Averaging is performed on the complex ratio itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .receiver import FrequencyPlan, Receiver, analog_outputs
from .validation import as_generator, check_index, check_positive

#: Division floor relative to the injected tone amplitude.  Ratios whose
#: denominator voltage falls below this are a topology degeneracy, not
#: numerical underflow.
DIVISION_FLOOR_FACTOR = 1e-12


class CalibrationError(RuntimeError):
    """Raised when a port voltage is too small to form a calibration ratio."""


def _observed_ratio(
    r: Receiver,
    channel: int,
    v_u: complex,
    v_l: complex,
    averages: int,
    rng,
    floor: float,
    num_port: int,
) -> complex:
    """Mean over ``averages`` observations of v<num>/v<den> at fixed inputs."""
    v1, v2 = analog_outputs(r, channel, v_u, v_l)
    if r.noise_sigma == 0.0:
        num, den = (v1, v2) if num_port == 1 else (v2, v1)
        if abs(den) < floor:
            raise CalibrationError(
                f"channel {channel}: |v{2 if num_port == 1 else 1}| below division "
                f"floor {floor:g}; the tone does not reach that port"
            )
        return num / den
    noise = as_generator(rng).normal(0.0, r.noise_sigma, size=(averages, 4))
    v1 = v1 + noise[:, 0] + 1j * noise[:, 1]
    v2 = v2 + noise[:, 2] + 1j * noise[:, 3]
    num, den = (v1, v2) if num_port == 1 else (v2, v1)
    if np.any(np.abs(den) < floor):
        raise CalibrationError(
            f"channel {channel}: |v{2 if num_port == 1 else 1}| below division "
            f"floor {floor:g}; the tone does not reach that port"
        )
    return complex(np.mean(num / den))


def measure_x1(
    r: Receiver,
    channel: int,
    tone_amplitude: float,
    averages: int,
    rng,
    *,
    division_floor: float | None = None,
) -> complex:
    """Ratio v1/v2 with a tone in the USB only, averaged over observations."""
    check_positive(tone_amplitude, "tone_amplitude")
    if int(averages) < 1:
        raise ValueError("averages must be >= 1")
    floor = DIVISION_FLOOR_FACTOR * tone_amplitude if division_floor is None else division_floor
    return _observed_ratio(
        r, channel, complex(tone_amplitude), 0j, int(averages), rng, floor, num_port=1
    )


def measure_x2(
    r: Receiver,
    channel: int,
    tone_amplitude: float,
    averages: int,
    rng,
    *,
    division_floor: float | None = None,
) -> complex:
    """Ratio v2/v1 with a tone in the LSB only, averaged over observations."""
    check_positive(tone_amplitude, "tone_amplitude")
    if int(averages) < 1:
        raise ValueError("averages must be >= 1")
    floor = DIVISION_FLOOR_FACTOR * tone_amplitude if division_floor is None else division_floor
    return _observed_ratio(
        r, channel, 0j, complex(tone_amplitude), int(averages), rng, floor, num_port=2
    )


def derive_constants(x1: complex, x2: complex) -> tuple[complex, complex, complex, complex]:
    """Recombination constants (1, -1/x2, -1/x1, 1) from the measured ratios."""
    x1 = complex(x1)
    x2 = complex(x2)
    if x1 == 0 or x2 == 0:
        raise ValueError("calibration ratios must be nonzero")
    return (1 + 0j, -1.0 / x2, -1.0 / x1, 1 + 0j)


@dataclass(frozen=True)
class CalibrationSet:
    """Per-channel calibration ratios and recombination constants."""

    plan: FrequencyPlan
    x1: np.ndarray
    x2: np.ndarray
    tone_amplitude: float = 1.0
    averages: int = 1
    c1: np.ndarray = field(init=False)
    c2: np.ndarray = field(init=False)
    c3: np.ndarray = field(init=False)
    c4: np.ndarray = field(init=False)

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=complex)
        x2 = np.asarray(self.x2, dtype=complex)
        n = self.plan.n_channels
        if x1.shape != (n,) or x2.shape != (n,):
            raise ValueError(f"expected {n} ratios per sideband")
        if np.any(x1 == 0) or np.any(x2 == 0):
            raise ValueError("calibration ratios must be nonzero at every channel")
        if not (np.all(np.isfinite(x1.view(float))) and np.all(np.isfinite(x2.view(float)))):
            raise ValueError("calibration ratios must be finite")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "c1", np.ones(n, dtype=complex))
        object.__setattr__(self, "c2", -1.0 / x2)
        object.__setattr__(self, "c3", -1.0 / x1)
        object.__setattr__(self, "c4", np.ones(n, dtype=complex))

    @property
    def n_channels(self) -> int:
        return self.plan.n_channels

    def constants(self, channel: int) -> tuple[complex, complex, complex, complex]:
        i = check_index(channel, self.n_channels)
        return (
            complex(self.c1[i]),
            complex(self.c2[i]),
            complex(self.c3[i]),
            complex(self.c4[i]),
        )


def sweep_calibrate(
    r: Receiver,
    plan: FrequencyPlan | None = None,
    tone_amplitude: float = 1.0,
    averages: int = 1,
    rng_seed: int = 0,
    *,
    division_floor: float | None = None,
) -> CalibrationSet:
    """Measure both ratios at every channel of the plan.

    Channel measurements use independent, deterministically derived random
    streams, so results do not depend on evaluation order and are
    reproducible for a given ``rng_seed``.
    """
    if plan is None:
        plan = r.plan
    elif plan.if_grid_mhz != r.plan.if_grid_mhz:
        raise ValueError("plan grid does not match the receiver's channelization")
    root = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    streams = root.spawn(2 * plan.n_channels)
    x1 = np.empty(plan.n_channels, dtype=complex)
    x2 = np.empty(plan.n_channels, dtype=complex)
    for i in range(plan.n_channels):
        x1[i] = measure_x1(
            r, i, tone_amplitude, averages,
            np.random.default_rng(streams[2 * i]),
            division_floor=division_floor,
        )
        x2[i] = measure_x2(
            r, i, tone_amplitude, averages,
            np.random.default_rng(streams[2 * i + 1]),
            division_floor=division_floor,
        )
    return CalibrationSet(plan, x1, x2, tone_amplitude, int(averages))
