"""TOML configuration ingestion for receivers and experiment scenarios.

Receiver files carry [topology], [profile], [plan] and [noise] sections;
scenario files reference a receiver file and add [experiment], [drift] and
[output] sections.  Validation failures raise :class:`ConfigError` with a
one-line diagnostic.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .receiver import (
    DriftTarget,
    FrequencyPlan,
    ImbalanceProfile,
    Receiver,
    Sideband,
    Topology,
    build_receiver,
    linear_ramp,
)

EXPERIMENTS = (
    "calibrate",
    "sweep",
    "stability",
    "defluxing",
    "contours",
    "errorbars",
    "montecarlo",
)


class ConfigError(ValueError):
    pass


def _section(data: dict, name: str, path) -> dict:
    try:
        sec = data[name]
    except KeyError:
        raise ConfigError(f"{path}: missing [{name}] section") from None
    if not isinstance(sec, dict):
        raise ConfigError(f"{path}: [{name}] must be a table")
    return sec


def _load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})") from None


def load_receiver_config(path: str | Path) -> Receiver:
    """Build a receiver from a TOML description."""
    path = Path(path)
    data = _load_toml(path)
    topo_sec = _section(data, "topology", path)
    profile_sec = data.get("profile", {})
    plan_sec = _section(data, "plan", path)
    noise_sec = data.get("noise", {})

    try:
        topology = Topology(topo_sec.get("kind", "no_if_hybrid"))
    except ValueError:
        raise ConfigError(
            f"{path}: topology.kind must be one of "
            f"{[t.value for t in Topology]}"
        ) from None
    nominal_db = topo_sec.get("nominal_analog_rejection_db")
    if topology is Topology.WITH_IF_HYBRID and nominal_db is None:
        raise ConfigError(f"{path}: topology.nominal_analog_rejection_db is required")

    amp = float(profile_sec.get("amp_imbalance_db", 0.0))
    amp_slope = float(profile_sec.get("amp_slope_db_per_ghz", 0.0))
    phase = float(profile_sec.get("phase_imbalance_deg", 0.0))
    phase_slope = float(profile_sec.get("phase_slope_deg_per_ghz", 0.0))
    try:
        profile = ImbalanceProfile(
            amp_imbalance_db=linear_ramp(amp, amp_slope) if amp_slope else amp,
            phase_imbalance_deg=linear_ramp(phase, phase_slope) if phase_slope else phase,
            ripple_amp_db=float(profile_sec.get("ripple_amp_db", 0.0)),
            ripple_period_mhz=float(profile_sec.get("ripple_period_mhz", 250.0)),
            ripple_phase_deg=float(profile_sec.get("ripple_phase_deg", 0.0)),
        )
        plan = FrequencyPlan(
            lo1_ghz=float(plan_sec.get("lo1_ghz", 0.0)),
            lo2_ghz=float(plan_sec.get("lo2_ghz", 0.0)),
            if_grid_mhz=tuple(plan_sec.get("if_grid_mhz", ())),
            sideband=Sideband(plan_sec.get("sideband", "USB")),
        )
        return build_receiver(
            topology,
            profile,
            nominal_db,
            plan,
            noise_sigma=float(noise_sec.get("sigma", 0.0)),
            rng_seed=int(noise_sec.get("rng_seed", 0)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class DriftSchedule:
    """Per-repetition perturbation bounds plus a one-off settling offset."""

    gain_step_db: float = 0.0
    phase_step_deg: float = 0.0
    target: DriftTarget = DriftTarget.PORT1
    initial_gain_db: float = 0.0
    initial_phase_deg: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated description of one experiment run."""

    receiver: Receiver
    receiver_path: str
    experiment: str
    out_dir: Path
    seed: int = 0
    repetitions: int = 48
    averages: int = 64
    tone_amplitude: float = 1.0
    drift: DriftSchedule = field(default_factory=DriftSchedule)
    targets_db: tuple[float, ...] = (30.0, 40.0)
    m_a_grid_db: tuple[float, ...] = (10.0, 15.0, 20.0, 30.0)
    dv_over_v_ref: float = 1e-3
    anchor_m_a_db: float = 20.0
    n_points: int = 721
    n_samples: int = 100_000
    x: float = 1.0
    dphi_deg: float = 0.0
    m_a_db: float | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}"
            )
        if self.repetitions < 1:
            raise ConfigError("experiment.repetitions must be >= 1")
        if self.averages < 1:
            raise ConfigError("experiment.averages must be >= 1")
        if self.tone_amplitude <= 0:
            raise ConfigError("experiment.tone_amplitude must be > 0")
        if self.experiment == "montecarlo" and self.n_samples < 1000:
            raise ConfigError("experiment.n_samples must be >= 1000")


def load_scenario(
    path: str | Path,
    *,
    experiment: str | None = None,
    seed: int | None = None,
    out_dir: str | Path | None = None,
) -> ScenarioConfig:
    """Parse and validate a scenario file, with optional CLI overrides."""
    path = Path(path)
    data = _load_toml(path)
    rec_sec = _section(data, "receiver", path)
    exp_sec = data.get("experiment", {})
    drift_sec = data.get("drift", {})
    out_sec = data.get("output", {})

    rec_path = rec_sec.get("path")
    if not rec_path:
        raise ConfigError(f"{path}: receiver.path is required")
    rec_path = (path.parent / rec_path).resolve()
    receiver = load_receiver_config(rec_path)

    exp = experiment or exp_sec.get("type")
    if not exp:
        raise ConfigError(f"{path}: experiment.type is required")

    try:
        drift = DriftSchedule(
            gain_step_db=float(drift_sec.get("gain_step_db", 0.0)),
            phase_step_deg=float(drift_sec.get("phase_step_deg", 0.0)),
            target=DriftTarget(drift_sec.get("target", "port1")),
            initial_gain_db=float(drift_sec.get("initial_gain_db", 0.0)),
            initial_phase_deg=float(drift_sec.get("initial_phase_deg", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [drift] {exc}") from None

    m_a_db = exp_sec.get("m_a_db")
    cfg = ScenarioConfig(
        receiver=receiver,
        receiver_path=str(rec_path),
        experiment=str(exp),
        out_dir=Path(out_dir) if out_dir is not None else Path(out_sec.get("dir", "out")),
        seed=int(seed if seed is not None else exp_sec.get("seed", 0)),
        repetitions=int(exp_sec.get("repetitions", 48)),
        averages=int(exp_sec.get("averages", 64)),
        tone_amplitude=float(exp_sec.get("tone_amplitude", 1.0)),
        drift=drift,
        targets_db=tuple(float(t) for t in exp_sec.get("targets_db", (30.0, 40.0))),
        m_a_grid_db=tuple(float(m) for m in exp_sec.get("m_a_grid_db", (10.0, 15.0, 20.0, 30.0))),
        dv_over_v_ref=float(exp_sec.get("dv_over_v_ref", 1e-3)),
        anchor_m_a_db=float(exp_sec.get("anchor_m_a_db", 20.0)),
        n_points=int(exp_sec.get("n_points", 721)),
        n_samples=int(exp_sec.get("n_samples", 100_000)),
        x=float(exp_sec.get("x", 1.0)),
        dphi_deg=float(exp_sec.get("dphi_deg", 0.0)),
        m_a_db=None if m_a_db is None else float(m_a_db),
    )
    return cfg
