import numpy as np
import pytest

from twosb import (
    FrequencyPlan,
    ImbalanceProfile,
    NotFittedError,
    SidebandCompensator,
    Topology,
    analog_outputs,
    build_receiver,
)

PLAN = FrequencyPlan(662.0, 7.0, (4000.0, 5000.0, 6000.0))
PROFILE = ImbalanceProfile(amp_imbalance_db=0.4, phase_imbalance_deg=3.0)


def make_receiver(sigma=0.0):
    return build_receiver(Topology.NO_IF_HYBRID, PROFILE, None, PLAN, noise_sigma=sigma)


def tone_voltages(receiver, v_u=1.0, v_l=0.0):
    return np.array(
        [analog_outputs(receiver, ch, v_u, v_l) for ch in range(receiver.n_channels)]
    )


class TestEstimatorProtocol:
    def test_get_params_round_trip(self):
        est = SidebandCompensator(tone_amplitude=2.0, averages=8, rng_seed=3)
        params = est.get_params()
        clone = SidebandCompensator(**params)
        assert clone.get_params() == params

    def test_set_params_chains_and_validates(self):
        est = SidebandCompensator()
        assert est.set_params(averages=4).averages == 4
        with pytest.raises(ValueError, match="invalid parameter"):
            est.set_params(bogus=1)

    def test_repr_lists_params(self):
        text = repr(SidebandCompensator(averages=2))
        assert "averages=2" in text

    def test_transform_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            SidebandCompensator().transform(np.zeros((3, 2), complex))

    def test_fit_requires_receiver(self):
        with pytest.raises(TypeError):
            SidebandCompensator().fit(np.zeros((3, 2)))


class TestFitTransform:
    def test_fit_learns_calibration(self):
        est = SidebandCompensator().fit(make_receiver())
        assert est.n_channels_ == 3
        assert np.all(est.calibration_.c1 == 1.0)

    def test_usb_tone_suppressed_on_lsb_output(self):
        receiver = make_receiver()
        est = SidebandCompensator().fit(receiver)
        out = est.transform(tone_voltages(receiver, v_u=1.0))
        assert np.all(np.abs(out[:, 1]) < 1e-12)
        assert np.all(np.abs(out[:, 0]) > 0.1)

    def test_lsb_tone_suppressed_on_usb_output(self):
        receiver = make_receiver()
        est = SidebandCompensator().fit(receiver)
        out = est.transform(tone_voltages(receiver, v_u=0.0, v_l=1.0))
        assert np.all(np.abs(out[:, 0]) < 1e-12)

    def test_batch_dimension_broadcasts(self):
        receiver = make_receiver()
        est = SidebandCompensator().fit(receiver)
        single = tone_voltages(receiver)
        batch = np.stack([single, 2.0 * single])
        out = est.transform(batch)
        assert out.shape == (2, 3, 2)
        assert np.allclose(out[1], 2.0 * out[0])

    def test_shape_validation(self):
        est = SidebandCompensator().fit(make_receiver())
        with pytest.raises(ValueError, match="expected shape"):
            est.transform(np.zeros((4, 2), complex))
        with pytest.raises(ValueError, match="finite"):
            est.transform(np.full((3, 2), np.nan + 0j))

    def test_fit_transform_equals_fit_then_transform(self):
        receiver = make_receiver()
        v = tone_voltages(receiver)
        a = SidebandCompensator(rng_seed=5).fit_transform(receiver, v)
        b = SidebandCompensator(rng_seed=5).fit(receiver).transform(v)
        assert np.array_equal(a, b)

    def test_noisy_fit_deterministic_by_seed(self):
        receiver = make_receiver(sigma=1e-3)
        a = SidebandCompensator(averages=4, rng_seed=7).fit(receiver)
        b = SidebandCompensator(averages=4, rng_seed=7).fit(receiver)
        assert np.array_equal(a.calibration_.x1, b.calibration_.x1)
