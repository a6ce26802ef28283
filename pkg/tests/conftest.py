from pathlib import Path

import pytest

RECEIVER_TOML = """\
[topology]
kind = "with_if_hybrid"
nominal_analog_rejection_db = 20.0

[profile]
amp_imbalance_db = 0.0
ripple_amp_db = 0.85
ripple_period_mhz = 2400.0

[plan]
lo1_ghz = 662.0
lo2_ghz = 7.0
if_grid_mhz = [4250.0, 4750.0, 5250.0, 5750.0, 6250.0, 6750.0, 7250.0, 7750.0]
sideband = "USB"

[noise]
sigma = 1e-3
rng_seed = 11
"""

SCENARIO_TOML = """\
[receiver]
path = "receiver.toml"

[experiment]
type = "stability"
seed = 42
repetitions = 12
averages = 16
tone_amplitude = 1.0
targets_db = [30.0, 40.0]
m_a_grid_db = [10.0, 15.0]
n_points = 61
n_samples = 2000
x = 0.99
dphi_deg = 0.0

[drift]
gain_step_db = 0.01
phase_step_deg = 0.05
target = "port1"
initial_gain_db = 0.35
initial_phase_deg = 1.4

[output]
dir = "out"
"""


@pytest.fixture
def config_dir(tmp_path: Path) -> Path:
    (tmp_path / "receiver.toml").write_text(RECEIVER_TOML)
    (tmp_path / "scenario.toml").write_text(SCENARIO_TOML)
    return tmp_path
