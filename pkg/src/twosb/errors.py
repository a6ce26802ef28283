"""Systematic tolerance contours and random-error propagation.

Two error mechanisms are treated separately:

* systematic offsets between calibration and measurement (the working-point
  coordinates): for a desired compensated rejection, the admissible offsets
  trace closed contours in the (dphi, x) plane;
* random voltage noise: first-order propagation of the per-component
  voltage error onto the magnitude/phase of a measured port ratio and from
  there onto the compensated rejection, cross-checked by a Monte Carlo
  estimator that re-runs the general formula on perturbed voltages.

Error bars are computed in linear power and converted to dB half-widths via
the log-linear slope, which is also what the Monte Carlo's central-68%
half-width measures; the exact (asymmetric) dB arms are reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compensation import (
    WorkingPoint,
    compensated_rejection_no_hybrid,
    compensated_rejection_with_hybrid,
    rejection_from_working_point,
)
from .receiver import Topology
from .units import CAP_DB, CAP_LINEAR, DB_PER_NEPER, from_db, to_db
from .validation import check_finite, check_positive

#: Bisection tolerance on x for contour roots.
X_TOLERANCE = 1e-10

#: Default number of dphi grid points over [-90, +90] degrees.
DEFAULT_CONTOUR_POINTS = 721


class TargetUnreachableError(ValueError):
    """The requested compensated rejection cannot be met by any offset."""


def ratio_errors(dv_over_v: float, x: float) -> tuple[float, float]:
    """First-order magnitude and phase errors of a measured port ratio.

    ``dv_over_v`` is the per-component voltage error divided by the voltage
    of the non-rejected port; ``x`` is the ratio magnitude.  Returns
    ``(dx, dphi_rad)`` with dx = dv/v * x * sqrt(1 + x^2) and
    dphi = dv/v * sqrt(1 + x^2).
    """
    check_positive(x, "x")
    check_positive(dv_over_v, "dv_over_v", allow_zero=True)
    s = math.sqrt(1.0 + x * x)
    return (dv_over_v * x * s, dv_over_v * s)


def coupled_voltage(topology: Topology | str, p: float, m_a: float | None = None) -> float:
    """Voltage in the non-rejected port when power ``p`` couples the receiver.

    Without an IF hybrid both ports carry sqrt(p)/sqrt(2); with a hybrid the
    non-rejected port carries sqrt(p) * sqrt(m_a / (1 + m_a)).
    """
    topology = Topology(topology)
    check_positive(p, "p")
    if topology is Topology.NO_IF_HYBRID:
        return math.sqrt(p) / math.sqrt(2.0)
    if m_a is None:
        raise ValueError("m_a is required for the IF-hybrid topology")
    check_positive(m_a, "m_a")
    return math.sqrt(p) * math.sqrt(m_a / (1.0 + m_a))


@dataclass(frozen=True)
class ErrorBudget:
    """Propagated uncertainty at one working point.

    ``dm_uc_db`` is the one-sigma half-width of the rejection error bar in
    dB (log-linear convention, matching the Monte Carlo central-68%
    half-width); ``err_lo_db``/``err_hi_db`` are the exact asymmetric arms,
    with the lower arm capped when the bar reaches zero linear ratio.
    """

    dv_over_v: float
    dx: float
    dphi_rad: float
    dm_uc_db: float
    m_uc_db: float
    err_lo_db: float
    err_hi_db: float
    lo_unbounded: bool = False

    def __post_init__(self):
        for name in ("dv_over_v", "dx", "dphi_rad", "dm_uc_db"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and non-negative")

    @property
    def bar_width_db(self) -> float:
        """Full extent of the one-sigma error bar on a dB axis."""
        return 2.0 * self.dm_uc_db


def _rejection_at(
    wp: WorkingPoint, x_cal_ref: float, x_cal: float, x_m: float, phi_cal: float, phi_m: float
) -> float:
    """Closed-form rejection re-expressed in measured-ratio coordinates.

    For the hybrid form the analog rejection tracks the calibration ratio
    (m_a scales with x_cal^2), which is what makes the propagated error
    decrease monotonically with analog rejection and converge to the
    no-hybrid result.
    """
    x = x_m / x_cal
    dphi_deg = math.degrees(phi_m - phi_cal)
    if wp.m_a is None:
        return compensated_rejection_no_hybrid(WorkingPoint(x, dphi_deg))
    m_a = wp.m_a * (x_cal / x_cal_ref) ** 2
    return compensated_rejection_with_hybrid(WorkingPoint(x, dphi_deg, m_a))


def propagate_rejection_error(
    wp: WorkingPoint,
    dv_over_v_cal: float,
    dv_over_v_m: float | None = None,
    *,
    x_cal: float | None = None,
    include_calibration: bool = True,
) -> ErrorBudget:
    """First-order error bar on the compensated rejection at a working point.

    The four measured coordinates (ratio magnitude and phase, at calibration
    and at measurement) receive the errors from :func:`ratio_errors`; partial
    derivatives of the applicable closed form are taken by central finite
    differences with step 1e-6 * max(1, |value|).  Set
    ``include_calibration=False`` to count only the measurement-time
    uncertainty.
    """
    check_positive(dv_over_v_cal, "dv_over_v_cal", allow_zero=True)
    dv_m = dv_over_v_cal if dv_over_v_m is None else dv_over_v_m
    check_positive(dv_m, "dv_over_v_m", allow_zero=True)
    if x_cal is None:
        x_cal = math.sqrt(wp.m_a) if wp.m_a is not None else 1.0
    check_positive(x_cal, "x_cal")
    x_m = wp.x * x_cal
    phi_m = math.radians(wp.dphi_deg)

    m0 = rejection_from_working_point(wp)
    if m0 >= CAP_LINEAR:
        raise ValueError("working point is at the cap; error bar undefined there")

    dx_cal, dphi_cal = ratio_errors(dv_over_v_cal, x_cal)
    dx_m, dphi_m = ratio_errors(dv_m, x_m)

    coords = [x_cal, x_m, 0.0, phi_m]
    sigmas = [dx_cal, dx_m, dphi_cal, dphi_m]
    active = [include_calibration, True, include_calibration, True]

    var = 0.0
    for i, (sigma, on) in enumerate(zip(sigmas, active)):
        if not on or sigma == 0.0:
            continue
        h = 1e-6 * max(1.0, abs(coords[i]))
        hi = list(coords)
        lo = list(coords)
        hi[i] += h
        lo[i] -= h
        m_hi = _rejection_at(wp, x_cal, hi[0], hi[1], hi[2], hi[3])
        m_lo = _rejection_at(wp, x_cal, lo[0], lo[1], lo[2], lo[3])
        if m_hi >= CAP_LINEAR or m_lo >= CAP_LINEAR:
            raise ValueError("finite-difference stencil crosses the cap")
        var += ((m_hi - m_lo) / (2.0 * h) * sigma) ** 2

    dm = math.sqrt(var)
    rel = dm / m0
    err_hi = 10.0 * math.log10(1.0 + rel)
    if rel < 1.0:
        err_lo = -10.0 * math.log10(1.0 - rel)
        lo_unbounded = False
    else:
        err_lo = CAP_DB
        lo_unbounded = True
    return ErrorBudget(
        dv_over_v=dv_m,
        dx=dx_m,
        dphi_rad=dphi_m,
        dm_uc_db=DB_PER_NEPER * rel,
        m_uc_db=to_db(m0),
        err_lo_db=err_lo,
        err_hi_db=err_hi,
        lo_unbounded=lo_unbounded,
    )


@dataclass(frozen=True)
class McRejectionSummary:
    """Monte Carlo distribution summary of the compensated rejection."""

    mean_db: float
    half_width_68_db: float
    n_samples: int
    rng_seed: int


def monte_carlo_rejection_error(
    wp: WorkingPoint,
    dv_over_v: float,
    n_samples: int,
    rng_seed: int,
    *,
    dv_over_v_m: float | None = None,
    x_cal: float | None = None,
    include_calibration: bool = True,
) -> McRejectionSummary:
    """Monte Carlo cross-check of :func:`propagate_rejection_error`.

    Each sample perturbs the real/imaginary parts of the underlying port
    voltages with independent Gaussian noise, re-forms the three measured
    ratios and evaluates the general rejection formula.  Deterministic for a
    given seed.
    """
    if int(n_samples) < 1000:
        raise ValueError("n_samples must be >= 1000")
    check_positive(dv_over_v, "dv_over_v", allow_zero=True)
    dv_m = dv_over_v if dv_over_v_m is None else dv_over_v_m
    if x_cal is None:
        x_cal = math.sqrt(wp.m_a) if wp.m_a is not None else 1.0
    # Quadrature-only receivers sit at +90 deg ratio phase, hybrids at 0.
    base_phase = 0.0 if wp.m_a is not None else 0.5 * math.pi
    ratio_cal = x_cal * complex(math.cos(base_phase), math.sin(base_phase))
    phi_m = base_phase + math.radians(wp.dphi_deg)
    ratio_m = wp.x * x_cal * complex(math.cos(phi_m), math.sin(phi_m))

    n = int(n_samples)
    rng = np.random.default_rng(rng_seed)

    # The non-rejected port is normalized to 1, so dv is the absolute
    # per-component noise.  Draw order is fixed: (x1_cal, x2_cal, x1_m),
    # each consuming its four component streams.
    def perturbed(true_ratio: complex, dv: float) -> np.ndarray:
        num = np.full(n, 1.0 + 0j)
        den = np.full(n, 1.0 / true_ratio)
        if dv > 0.0:
            num = num + rng.normal(0.0, dv, n) + 1j * rng.normal(0.0, dv, n)
            den = den + rng.normal(0.0, dv, n) + 1j * rng.normal(0.0, dv, n)
        return num / den

    dv_cal_eff = dv_over_v if include_calibration else 0.0
    x1_cal = perturbed(ratio_cal, dv_cal_eff)
    x2_cal = perturbed(ratio_cal, dv_cal_eff)
    x1_m = perturbed(ratio_m, dv_m)

    num = x1_cal * (x2_cal * x1_m - 1.0)
    den = x2_cal * (x1_cal - x1_m)
    ratio = np.abs(num) ** 2
    den_p = np.abs(den) ** 2
    capped = den_p <= (1e-30 * ratio)
    m = np.empty(n)
    m[capped] = CAP_LINEAR
    m[~capped] = np.minimum(ratio[~capped] / den_p[~capped], CAP_LINEAR)
    db = 10.0 * np.log10(m)
    q16, q84 = np.quantile(db, (0.16, 0.84))
    return McRejectionSummary(
        mean_db=float(np.mean(db)),
        half_width_68_db=float((q84 - q16) / 2.0),
        n_samples=n,
        rng_seed=int(rng_seed),
    )


# ---------------------------------------------------------------------------
# Systematic-offset contours


def _rejection_linear(x: np.ndarray, sin_half_sq: np.ndarray, m_a: float | None) -> np.ndarray:
    """Vectorized closed-form rejection (no cap) for the contour solver.

    ``sin_half_sq`` is sin^2(dphi/2); the cancellation-free forms match
    :mod:`twosb.compensation`.
    """
    if m_a is None:
        return ((1.0 + x) ** 2 - 4.0 * x * sin_half_sq) / (
            (1.0 - x) ** 2 + 4.0 * x * sin_half_sq
        )
    xm = x * m_a
    return ((1.0 - xm) ** 2 + 4.0 * xm * sin_half_sq) / (
        m_a * ((1.0 - x) ** 2 + 4.0 * x * sin_half_sq)
    )


def _peak_x(cos_dphi: float, m_a: float | None) -> float | None:
    """Location of the closed form's maximum over x at fixed dphi.

    The quadrature-only form peaks at x = 1.  The hybrid form peaks at
    x = ((m+1) + sqrt((m+1)^2 - 4 m c^2)) / (2 m c) for c > 0; at c = 0 it
    is monotone in x (no interior maximum), signalled by ``None``.
    """
    if m_a is None:
        return 1.0
    c = cos_dphi
    if c <= 0.0:
        return None
    disc = (m_a + 1.0) ** 2 - 4.0 * m_a * c * c
    return ((m_a + 1.0) + math.sqrt(max(disc, 0.0))) / (2.0 * m_a * c)


def max_dphi_deg(target_db: float, m_a_db: float | None = None) -> float:
    """Largest |dphi| at which the target rejection is still attainable."""
    t = from_db(check_finite(target_db, "target_db"))
    if m_a_db is None:
        if t < 1.0:
            raise TargetUnreachableError("targets below 0 dB are outside the model")
        return math.degrees(math.acos((t - 1.0) / (t + 1.0)))
    m = from_db(check_finite(m_a_db, "m_a_db"))
    if abs(m - 1.0) < 1e-12:
        raise TargetUnreachableError(
            "0 dB analog rejection pins the compensated ratio to 0 dB"
        )
    if m >= t:
        # the region is unbounded in x; every dphi admits the target
        return 90.0
    arg = (t - m) * (t * m - 1.0) / (m * (t - 1.0) ** 2)
    if arg > 1.0:
        raise TargetUnreachableError(
            f"target {target_db} dB unreachable at analog rejection {m_a_db} dB"
        )
    return math.degrees(math.acos(math.sqrt(arg)))


def _bisect_roots(
    target: float, dphi_deg: np.ndarray, m_a: float | None
) -> tuple[np.ndarray, np.ndarray]:
    """Both x roots of rejection == target at each dphi, by bisection.

    At fixed dphi the closed form rises monotonically to a single peak and
    falls beyond it, so each feasible dphi brackets one root on each side.
    The upper root does not exist when the analog rejection exceeds the
    target; +inf is returned there.
    """
    dphi_deg = np.asarray(dphi_deg, dtype=float)
    lo_roots = np.empty_like(dphi_deg)
    hi_roots = np.empty_like(dphi_deg)

    def bisect(a: float, b: float, ss: float, rising: bool) -> float:
        # invariant: f - target changes sign on [a, b]
        while (b - a) > X_TOLERANCE:
            mid = 0.5 * (a + b)
            if (float(_rejection_linear(mid, ss, m_a)) < target) == rising:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    def expand_down(start: float, ss: float) -> float:
        a = 0.5 * start
        while float(_rejection_linear(a, ss, m_a)) >= target:
            a *= 0.5
            if a < 1e-12:
                raise TargetUnreachableError("no lower root found")
        return a

    unbounded = m_a is not None and m_a >= target
    for i, dp in enumerate(dphi_deg):
        half = math.radians(float(dp)) / 2.0
        ss = math.sin(half) ** 2
        c = math.cos(math.radians(float(dp)))
        xp = _peak_x(c, m_a)
        if xp is None:
            # hybrid at |dphi| >= 90 deg: monotone rise toward m_a
            if not unbounded:
                raise TargetUnreachableError(
                    "dphi grid extends beyond the feasible range"
                )
            a = expand_down(1.0, ss)
            b = 2.0
            while float(_rejection_linear(b, ss, m_a)) < target:
                b *= 2.0
                if b > 1e12:
                    raise TargetUnreachableError("no rising root found")
            lo_roots[i] = bisect(a, b, ss, rising=True)
            hi_roots[i] = math.inf
            continue
        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                peak = float(_rejection_linear(xp, ss, m_a))
        except ZeroDivisionError:
            peak = math.inf
        if not math.isfinite(peak) or peak >= CAP_LINEAR:
            peak = math.inf
        if peak < target * (1.0 - 1e-7):
            raise TargetUnreachableError(
                "dphi grid extends beyond the feasible range"
            )
        if peak <= target * (1.0 + 1e-7):
            # turning point: the two branches meet at the peak
            lo_roots[i] = hi_roots[i] = xp
            continue
        lo_roots[i] = bisect(expand_down(xp, ss), xp, ss, rising=True)
        if unbounded:
            # beyond the peak the ratio never falls back below the target
            hi_roots[i] = math.inf
            continue
        b = 2.0 * xp
        while float(_rejection_linear(b, ss, m_a)) >= target:
            b *= 2.0
            if b > 1e12:
                raise TargetUnreachableError("no upper root found")
        hi_roots[i] = bisect(xp, b, ss, rising=False)
    return lo_roots, hi_roots


def x_interval(
    target_db: float, m_a_db: float | None = None, dphi_deg: float = 0.0
) -> tuple[float, float]:
    """Admissible [x_lo, x_hi] at fixed dphi for the target rejection.

    ``x_hi`` is +inf when the analog rejection alone already exceeds the
    target (the allowed region is unbounded on the high side).
    """
    limit = max_dphi_deg(target_db, m_a_db)
    if abs(dphi_deg) > limit + 1e-12:
        raise TargetUnreachableError(
            f"target {target_db} dB unreachable at dphi = {dphi_deg} deg"
        )
    t = from_db(target_db)
    m = None if m_a_db is None else from_db(m_a_db)
    lo, hi = _bisect_roots(t, np.asarray([dphi_deg]), m)
    return (float(lo[0]), float(hi[0]))


@dataclass(frozen=True)
class ContourResult:
    """Closed contour of working-point offsets reaching a target rejection."""

    target_m_uc_db: float
    m_a_db: float | None
    dphi_deg: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        """(dphi_deg, x) pairs tracing the closed contour once around."""
        fwd = [(float(p), float(x)) for p, x in zip(self.dphi_deg, self.x_lo)]
        back = [(float(p), float(x)) for p, x in zip(self.dphi_deg[::-1], self.x_hi[::-1])]
        loop = fwd + back
        if loop and loop[0] != loop[-1]:
            loop.append(loop[0])
        return loop


def tolerance_contour(
    target_m_uc_db: float,
    m_a_db: float | None = None,
    n_points: int = DEFAULT_CONTOUR_POINTS,
) -> ContourResult:
    """Contour of (dphi, x) offsets that produce the target rejection.

    For the hybrid topology the analog rejection must sit below the target,
    otherwise no closed contour exists.  The returned grid covers the
    feasible dphi range inside [-90, +90] degrees, including the exact
    turning points where the two x branches meet.
    """
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    t = from_db(check_finite(target_m_uc_db, "target_m_uc_db"))
    m = None
    if m_a_db is not None:
        m = from_db(check_finite(m_a_db, "m_a_db"))
        if m >= t:
            raise TargetUnreachableError(
                "no closed contour: analog rejection meets the target on its own"
            )
    if m is None and t <= 1.0 + 1e-12:
        # degenerate target: only the quadrature line dphi = +/-90 deg works,
        # collapsed here to its x = 1 representative points
        grid = np.asarray([-90.0, 90.0])
        ones = np.ones(2)
        return ContourResult(float(target_m_uc_db), None, grid, ones, ones.copy())
    limit = max_dphi_deg(target_m_uc_db, m_a_db)
    grid = np.linspace(-90.0, 90.0, int(n_points))
    grid = grid[np.abs(grid) <= limit]
    if limit < 90.0:
        grid = np.unique(np.concatenate(([-limit], grid, [limit])))
    lo, hi = _bisect_roots(t, grid, m)
    return ContourResult(
        target_m_uc_db=float(target_m_uc_db),
        m_a_db=None if m_a_db is None else float(m_a_db),
        dphi_deg=grid,
        x_lo=lo,
        x_hi=hi,
    )
