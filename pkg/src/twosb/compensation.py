"""Digital recombination and compensated sideband-rejection figures.

The digital stage forms linear combinations of the two observed port
voltages,

    v1c = c1 * v1 + c2 * v2
    v2c = c3 * v1 + c4 * v2,

which recover USB on the first output and LSB on the second when the
constants come from calibration.  The compensated rejection ratio is also
available in a general closed form written purely in terms of the measured
port ratios, and in two simplified closed forms (quadrature-only receiver,
receiver with IF hybrid) that assume the two calibration ratios are equal.
All ratios are linear power quantities capped at 1e20 (200 dB); dB appears
only at serialization boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationSet
from .receiver import FrequencyPlan, Receiver, Sideband, observe
from .units import CAP_LINEAR, power_ratio_db
from .validation import as_generator, check_finite, check_index, check_positive


@dataclass(frozen=True)
class WorkingPoint:
    """Offset between calibration and measurement states.

    ``x`` is the magnitude ratio of the measured port ratio to its calibrated
    value, ``dphi_deg`` the corresponding phase offset.  ``m_a`` is the linear
    analog rejection of the chain; leave it ``None`` for a receiver without
    an IF hybrid.
    """

    x: float
    dphi_deg: float = 0.0
    m_a: float | None = None

    def __post_init__(self):
        check_positive(self.x, "x")
        check_finite(self.dphi_deg, "dphi_deg")
        if self.m_a is not None:
            check_positive(self.m_a, "m_a")


def recombine(
    v1: complex, v2: complex, constants: tuple[complex, complex, complex, complex]
) -> tuple[complex, complex]:
    """Linear recombination of a port-voltage pair with explicit constants."""
    c1, c2, c3, c4 = (complex(c) for c in constants)
    v1 = complex(v1)
    v2 = complex(v2)
    return (c1 * v1 + c2 * v2, c3 * v1 + c4 * v2)


def compensate(
    v1: complex, v2: complex, cal: CalibrationSet, channel: int
) -> tuple[complex, complex]:
    """Apply the channel's recombination constants to a port-voltage pair."""
    return recombine(v1, v2, cal.constants(channel))


def compensated_rejection(x1_cal: complex, x2_cal: complex, x1_m: complex) -> float:
    """Compensated USB rejection from the measured ratios alone.

    ``x1_cal`` and ``x2_cal`` are the calibration-time ratios, ``x1_m`` the
    ratio observed during the measurement.  Returns |v1c/v2c|^2, capped when
    the measurement reproduces the calibration (perfect rejection).
    """
    x1_cal = complex(x1_cal)
    x2_cal = complex(x2_cal)
    x1_m = complex(x1_m)
    if x2_cal == 0:
        raise ValueError("x2_cal must be nonzero")
    num = x1_cal * (x2_cal * x1_m - 1.0)
    den = x2_cal * (x1_cal - x1_m)
    if abs(den) <= 1e-15 * abs(num):
        return CAP_LINEAR
    return min(abs(num / den) ** 2, CAP_LINEAR)


def compensated_rejection_no_hybrid(wp: WorkingPoint) -> float:
    """Closed form for the quadrature-only receiver (no IF hybrid).

    Evaluated as ((1+x)^2 - 4x sin^2(dphi/2)) / ((1-x)^2 + 4x sin^2(dphi/2)),
    which is free of cancellation near the perfect-reproduction pole.
    """
    if wp.m_a is not None:
        raise ValueError("working point carries an analog rejection; use the hybrid form")
    x = wp.x
    ss = math.sin(math.radians(wp.dphi_deg) / 2.0) ** 2
    num = (1.0 + x) ** 2 - 4.0 * x * ss
    den = (1.0 - x) ** 2 + 4.0 * x * ss
    if den <= 1e-15 * num:
        return CAP_LINEAR
    return min(num / den, CAP_LINEAR)


def compensated_rejection_with_hybrid(wp: WorkingPoint) -> float:
    """Closed form for the receiver with an IF hybrid of analog rejection m_a.

    Evaluated as ((1-xm)^2 + 4xm sin^2(dphi/2)) / (m ((1-x)^2 + 4x sin^2(dphi/2)))
    with xm = x * m_a; at m_a = 1 numerator and denominator are the same
    expression, so the result is exactly 1.
    """
    if wp.m_a is None:
        raise ValueError("working point has no analog rejection; use the no-hybrid form")
    x = wp.x
    m = wp.m_a
    ss = math.sin(math.radians(wp.dphi_deg) / 2.0) ** 2
    xm = x * m
    num = (1.0 - xm) ** 2 + 4.0 * xm * ss
    den = m * ((1.0 - x) ** 2 + 4.0 * x * ss)
    if den <= 1e-15 * num:
        return CAP_LINEAR
    return min(num / den, CAP_LINEAR)


def rejection_from_working_point(wp: WorkingPoint) -> float:
    """Dispatch to whichever closed form matches the working point."""
    if wp.m_a is None:
        return compensated_rejection_no_hybrid(wp)
    return compensated_rejection_with_hybrid(wp)


def srr_from_tone(
    r: Receiver,
    cal: CalibrationSet,
    channel: int,
    sideband: Sideband | str,
    tone_amplitude: float = 1.0,
    rng=None,
    *,
    averages: int = 1,
) -> tuple[float, float]:
    """Sideband rejection read out with a single-sideband tone.

    Returns ``(raw_db, compensated_db)``: the power ratio of the signal port
    over the image port before and after digital recombination, both capped
    at 200 dB.  ``averages`` coherently averages that many noisy voltage
    observations before forming the ratios.
    """
    sideband = Sideband(sideband)
    check_positive(tone_amplitude, "tone_amplitude")
    if int(averages) < 1:
        raise ValueError("averages must be >= 1")
    check_index(channel, r.n_channels)
    if sideband is Sideband.USB:
        inputs = (complex(tone_amplitude), 0j)
    else:
        inputs = (0j, complex(tone_amplitude))
    gen = as_generator(rng)
    acc1 = 0j
    acc2 = 0j
    for _ in range(int(averages)):
        v1, v2 = observe(r, channel, inputs[0], inputs[1], gen)
        acc1 += v1
        acc2 += v2
    v1 = acc1 / averages
    v2 = acc2 / averages
    v1c, v2c = compensate(v1, v2, cal, channel)
    if sideband is Sideband.USB:
        raw_db, _ = power_ratio_db(abs(v1) ** 2, abs(v2) ** 2)
        comp_db, _ = power_ratio_db(abs(v1c) ** 2, abs(v2c) ** 2)
    else:
        raw_db, _ = power_ratio_db(abs(v2) ** 2, abs(v1) ** 2)
        comp_db, _ = power_ratio_db(abs(v2c) ** 2, abs(v1c) ** 2)
    return (raw_db, comp_db)


@dataclass(frozen=True)
class SrrSpectrum:
    """Per-channel rejection ratios for both sidebands, raw and compensated.

    Rows are channel-major with the USB entry first; flagged rows hold the
    200 dB cap in the compensated column.
    """

    plan: FrequencyPlan
    channel_index: np.ndarray
    sideband: tuple[Sideband, ...]
    raw_srr_db: np.ndarray
    compensated_srr_db: np.ndarray
    above_cap: np.ndarray

    def __post_init__(self):
        n = len(self.channel_index)
        for name in ("sideband", "raw_srr_db", "compensated_srr_db", "above_cap"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length mismatch")
        if not np.all(np.isfinite(self.raw_srr_db)):
            raise ValueError("raw_srr_db entries must be finite")
        if not np.all(np.isfinite(self.compensated_srr_db)):
            raise ValueError("compensated_srr_db entries must be finite")

    def __len__(self) -> int:
        return len(self.channel_index)


def srr_sweep(
    r: Receiver,
    cal: CalibrationSet,
    plan: FrequencyPlan | None = None,
    tone_amplitude: float = 1.0,
    rng_seed: int = 0,
    *,
    averages: int = 1,
) -> SrrSpectrum:
    """Tone rejection readout at every channel and both sidebands.

    Deterministic for a given seed; each (channel, sideband) cell draws from
    its own derived stream, so cells are independent and order-insensitive.
    """
    if plan is None:
        plan = r.plan
    elif plan.if_grid_mhz != r.plan.if_grid_mhz:
        raise ValueError("plan grid does not match the receiver's channelization")
    if cal.plan.if_grid_mhz != plan.if_grid_mhz:
        raise ValueError("calibration does not cover the requested plan")
    root = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    streams = root.spawn(2 * plan.n_channels)
    idx = []
    bands: list[Sideband] = []
    raw = []
    comp = []
    for i in range(plan.n_channels):
        for j, band in enumerate((Sideband.USB, Sideband.LSB)):
            rng = np.random.default_rng(streams[2 * i + j])
            raw_db, comp_db = srr_from_tone(
                r, cal, i, band, tone_amplitude, rng, averages=averages
            )
            idx.append(i)
            bands.append(band)
            raw.append(raw_db)
            comp.append(comp_db)
    comp_arr = np.asarray(comp)
    return SrrSpectrum(
        plan=plan,
        channel_index=np.asarray(idx, dtype=int),
        sideband=tuple(bands),
        raw_srr_db=np.asarray(raw),
        compensated_srr_db=comp_arr,
        above_cap=comp_arr >= 200.0,
    )
