"""Analog model of a sideband-separating (2SB) receiver front end.

The analog chain maps the upper/lower sideband inputs onto two output ports
through four complex voltage gains per IF channel,

    v1 = g1u * V_U + g1l * V_L
    v2 = g2u * V_U + g2l * V_L.

Everything the rest of the package needs from the hardware (arm imbalance,
an optional IF hybrid, additive measurement noise, slow gain/phase drift)
is expressed through those gains.  Receivers are immutable; drift produces a
new instance.  Randomness is confined to generators passed in by callers, so
parallel runs can partition seeds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Union

from .units import CAP_LINEAR, power_ratio_db
from .validation import (
    as_generator,
    check_finite,
    check_finite_complex,
    check_index,
    check_positive,
)

FrequencyFunction = Callable[[float], float]
ProfileTerm = Union[float, FrequencyFunction]


class Topology(enum.Enum):
    NO_IF_HYBRID = "no_if_hybrid"
    WITH_IF_HYBRID = "with_if_hybrid"


class Sideband(enum.Enum):
    USB = "USB"
    LSB = "LSB"


class DriftTarget(enum.Enum):
    PORT1 = "port1"
    PORT2 = "port2"
    BOTH = "both"


@dataclass(frozen=True)
class GainMatrix:
    """Complex voltage gains from (USB, LSB) inputs to ports 1 and 2."""

    g1u: complex
    g1l: complex
    g2u: complex
    g2l: complex

    def __post_init__(self):
        for name in ("g1u", "g1l", "g2u", "g2l"):
            object.__setattr__(self, name, check_finite_complex(getattr(self, name), name))
        if self.g1u == 0 and self.g2u == 0:
            raise ValueError("USB unrecoverable: g1u and g2u are both zero")
        if self.g1l == 0 and self.g2l == 0:
            raise ValueError("LSB unrecoverable: g1l and g2l are both zero")


def linear_ramp(offset: float, slope_per_ghz: float = 0.0) -> FrequencyFunction:
    """Linear-in-frequency profile term; argument is IF frequency in MHz."""
    return lambda f_mhz: offset + slope_per_ghz * f_mhz / 1000.0


@dataclass(frozen=True)
class ImbalanceProfile:
    """Frequency-dependent imbalance between the two receiver arms.

    ``amp_imbalance_db`` and ``phase_imbalance_deg`` may be constants or
    callables of IF frequency in MHz (see :func:`linear_ramp`).  The ripple
    term is a sinusoid in frequency standing in for reflections inside the
    front-end plumbing; it adds to the amplitude imbalance.
    """

    amp_imbalance_db: ProfileTerm = 0.0
    phase_imbalance_deg: ProfileTerm = 0.0
    ripple_amp_db: float = 0.0
    ripple_period_mhz: float = 250.0
    ripple_phase_deg: float = 0.0

    def __post_init__(self):
        check_positive(self.ripple_amp_db, "ripple_amp_db", allow_zero=True)
        check_positive(self.ripple_period_mhz, "ripple_period_mhz")
        check_finite(self.ripple_phase_deg, "ripple_phase_deg")

    def amp_db(self, f_mhz: float) -> float:
        base = self.amp_imbalance_db
        a = base(f_mhz) if callable(base) else base
        if self.ripple_amp_db:
            a += self.ripple_amp_db * math.sin(
                2.0 * math.pi * f_mhz / self.ripple_period_mhz
                + math.radians(self.ripple_phase_deg)
            )
        return check_finite(a, f"amp imbalance at {f_mhz} MHz")

    def phase_deg(self, f_mhz: float) -> float:
        base = self.phase_imbalance_deg
        p = base(f_mhz) if callable(base) else base
        return check_finite(p, f"phase imbalance at {f_mhz} MHz")

    def arm_ratio(self, f_mhz: float) -> complex:
        """Complex gain of arm 2 relative to arm 1 at the given frequency."""
        return 10.0 ** (self.amp_db(f_mhz) / 20.0) * complex(
            math.cos(math.radians(self.phase_deg(f_mhz))),
            math.sin(math.radians(self.phase_deg(f_mhz))),
        )


@dataclass(frozen=True)
class FrequencyPlan:
    """LO settings plus the IF channel grid; bookkeeping only."""

    lo1_ghz: float
    lo2_ghz: float
    if_grid_mhz: tuple[float, ...]
    sideband: Sideband = Sideband.USB

    def __post_init__(self):
        check_positive(self.lo1_ghz, "lo1_ghz")
        check_positive(self.lo2_ghz, "lo2_ghz")
        grid = tuple(float(f) for f in self.if_grid_mhz)
        if not grid:
            raise ValueError("if_grid_mhz must not be empty")
        for f in grid:
            check_positive(f, "if_grid_mhz entry")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("if_grid_mhz must be strictly increasing")
        object.__setattr__(self, "if_grid_mhz", grid)
        if not isinstance(self.sideband, Sideband):
            object.__setattr__(self, "sideband", Sideband(self.sideband))

    @property
    def n_channels(self) -> int:
        return len(self.if_grid_mhz)


@dataclass(frozen=True)
class DriftEvent:
    """Small multiplicative gain/phase change applied to one or both ports."""

    dgain_db: float = 0.0
    dphase_deg: float = 0.0
    target: DriftTarget = DriftTarget.BOTH

    def __post_init__(self):
        check_finite(self.dgain_db, "dgain_db")
        check_finite(self.dphase_deg, "dphase_deg")
        if not isinstance(self.target, DriftTarget):
            object.__setattr__(self, "target", DriftTarget(self.target))

    @property
    def factor(self) -> complex:
        r = math.radians(self.dphase_deg)
        return 10.0 ** (self.dgain_db / 20.0) * complex(math.cos(r), math.sin(r))


@dataclass(frozen=True)
class Receiver:
    """Immutable analog receiver state: per-channel gains plus a noise level.

    ``noise_sigma`` is the standard deviation of the additive Gaussian noise
    on each real/imaginary component of an observed port voltage, in the
    same units as the voltages themselves.
    """

    topology: Topology
    plan: FrequencyPlan
    gains: tuple[GainMatrix, ...]
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.topology, Topology):
            object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "gains", tuple(self.gains))
        if len(self.gains) != self.plan.n_channels:
            raise ValueError(
                f"{len(self.gains)} gain sets for {self.plan.n_channels} channels"
            )
        check_positive(self.noise_sigma, "noise_sigma", allow_zero=True)
        if self.topology is Topology.WITH_IF_HYBRID:
            for i, g in enumerate(self.gains):
                if g.g1u == 0 or g.g1l == 0:
                    raise ValueError(
                        f"channel {i}: analog rejection undefined (zero port-1 gain)"
                    )

    @property
    def n_channels(self) -> int:
        return self.plan.n_channels


def build_receiver(
    topology: Topology | str,
    profile: ImbalanceProfile,
    nominal_analog_rejection_db: float | None,
    plan: FrequencyPlan,
    noise_sigma: float = 0.0,
    rng_seed: int = 0,
) -> Receiver:
    """Synthesize per-channel gains from an imbalance description.

    Without an IF hybrid the nominal gains are the fixed quadrature
    convention (1, 1, -j, +j)/sqrt(2); the profile multiplies the second
    (quadrature) arm.  With an IF hybrid the two arms are combined so that
    the nominal gains realize the requested analog rejection exactly, the
    profile perturbs the arm ratio, and each port row is normalized to unit
    power so a unit sideband tone couples sqrt(M_A/(1+M_A)) of its voltage
    into the non-rejected port.
    """
    topology = Topology(topology)
    gains = []
    if topology is Topology.NO_IF_HYBRID:
        s = 1.0 / math.sqrt(2.0)
        for f in plan.if_grid_mhz:
            g = profile.arm_ratio(f)
            gains.append(GainMatrix(s, s, -1j * g * s, 1j * g * s))
    else:
        db = check_finite(nominal_analog_rejection_db, "nominal_analog_rejection_db")
        root = math.sqrt(10.0 ** (db / 10.0))
        gamma0 = (root - 1.0) / (root + 1.0)
        for f in plan.if_grid_mhz:
            gamma = gamma0 * profile.arm_ratio(f)
            if abs(1.0 - gamma) < 1e-15:
                raise ValueError(
                    f"profile drives the arm ratio to unity at {f} MHz; "
                    "analog rejection would be unbounded"
                )
            norm = math.sqrt(2.0 * (1.0 + abs(gamma) ** 2))
            gains.append(
                GainMatrix(
                    (1.0 + gamma) / norm,
                    (1.0 - gamma) / norm,
                    (1.0 - gamma) / norm,
                    (1.0 + gamma) / norm,
                )
            )
    return Receiver(topology, plan, tuple(gains), noise_sigma, int(rng_seed))


def analog_outputs(
    r: Receiver, channel: int, v_u: complex, v_l: complex
) -> tuple[complex, complex]:
    """Exact noise-free port voltages for the given sideband inputs."""
    g = r.gains[check_index(channel, r.n_channels)]
    v_u = complex(v_u)
    v_l = complex(v_l)
    return (g.g1u * v_u + g.g1l * v_l, g.g2u * v_u + g.g2l * v_l)


def observe(
    r: Receiver, channel: int, v_u: complex, v_l: complex, rng
) -> tuple[complex, complex]:
    """Port voltages with additive Gaussian noise on each component.

    With ``noise_sigma == 0`` this is a pure function of its inputs and does
    not touch the generator.  Noise draw order is fixed: re(v1), im(v1),
    re(v2), im(v2).
    """
    v1, v2 = analog_outputs(r, channel, v_u, v_l)
    if r.noise_sigma == 0.0:
        return (v1, v2)
    n = as_generator(rng).normal(0.0, r.noise_sigma, 4)
    return (v1 + complex(n[0], n[1]), v2 + complex(n[2], n[3]))


def analog_rejection(r: Receiver, channel: int) -> float:
    """Analog image rejection |g1u|^2/|g1l|^2 of the non-digital chain.

    Defined only for the IF-hybrid topology (port 1 nominally carries USB);
    returns a linear power ratio capped at 1e20.
    """
    if r.topology is not Topology.WITH_IF_HYBRID:
        raise ValueError("analog rejection is undefined without an IF hybrid")
    g = r.gains[check_index(channel, r.n_channels)]
    num = abs(g.g1u) ** 2
    den = abs(g.g1l) ** 2
    if den == 0.0 or num / den >= CAP_LINEAR:
        return CAP_LINEAR
    return num / den


def analog_rejection_db(r: Receiver, channel: int) -> tuple[float, bool]:
    """dB form of :func:`analog_rejection`; returns (db, above_cap)."""
    if r.topology is not Topology.WITH_IF_HYBRID:
        raise ValueError("analog rejection is undefined without an IF hybrid")
    g = r.gains[check_index(channel, r.n_channels)]
    return power_ratio_db(abs(g.g1u) ** 2, abs(g.g1l) ** 2)


def apply_drift(r: Receiver, event: DriftEvent) -> Receiver:
    """Return a new receiver with the targeted port gains multiplied by
    10**(dgain_db/20) * exp(j*dphase); the original is unchanged."""
    f = event.factor
    p1 = event.target in (DriftTarget.PORT1, DriftTarget.BOTH)
    p2 = event.target in (DriftTarget.PORT2, DriftTarget.BOTH)
    new = []
    for g in r.gains:
        new.append(
            GainMatrix(
                g.g1u * f if p1 else g.g1u,
                g.g1l * f if p1 else g.g1l,
                g.g2u * f if p2 else g.g2u,
                g.g2l * f if p2 else g.g2l,
            )
        )
    return replace(r, gains=tuple(new))
