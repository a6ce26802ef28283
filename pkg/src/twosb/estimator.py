"""Scikit-learn style front door to calibration plus compensation.

``SidebandCompensator.fit`` learns the per-channel recombination constants
from a receiver by tone injection; ``transform`` applies them to observed
port-voltage pairs.  The class follows the estimator protocol (get_params /
set_params, trailing-underscore fitted attributes, ``NotFittedError``-style
failure before fit) so it drops into pipelines and grid search without
depending on scikit-learn itself.
"""

from __future__ import annotations

import numpy as np

from .calibration import CalibrationSet, sweep_calibrate
from .receiver import Receiver


class NotFittedError(RuntimeError):
    pass


class SidebandCompensator:
    """Learn digital sideband-separation constants and apply them.

    Parameters
    ----------
    tone_amplitude : float
        Amplitude of the injected calibration tone.
    averages : int
        Observations averaged per calibration ratio.
    rng_seed : int
        Seed for the calibration noise streams.
    """

    def __init__(self, tone_amplitude: float = 1.0, averages: int = 1, rng_seed: int = 0):
        self.tone_amplitude = tone_amplitude
        self.averages = averages
        self.rng_seed = rng_seed

    # -- estimator protocol -------------------------------------------------

    def get_params(self, deep: bool = True) -> dict:
        return {
            "tone_amplitude": self.tone_amplitude,
            "averages": self.averages,
            "rng_seed": self.rng_seed,
        }

    def set_params(self, **params) -> "SidebandCompensator":
        valid = self.get_params()
        for key, value in params.items():
            if key not in valid:
                raise ValueError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    # -- fitting ------------------------------------------------------------

    def fit(self, receiver: Receiver, y=None) -> "SidebandCompensator":
        """Calibrate against the given receiver; returns self."""
        if not isinstance(receiver, Receiver):
            raise TypeError(f"fit expects a Receiver, got {type(receiver).__name__}")
        self.calibration_: CalibrationSet = sweep_calibrate(
            receiver,
            tone_amplitude=self.tone_amplitude,
            averages=self.averages,
            rng_seed=self.rng_seed,
        )
        self.n_channels_ = self.calibration_.n_channels
        return self

    def _check_fitted(self):
        if not hasattr(self, "calibration_"):
            raise NotFittedError(
                "this SidebandCompensator is not fitted yet; call fit(receiver) first"
            )

    # -- transforming -------------------------------------------------------

    def transform(self, voltages) -> np.ndarray:
        """Recombine port-voltage pairs into sideband-separated outputs.

        ``voltages`` has shape (..., n_channels, 2) holding complex
        (port 1, port 2) pairs per channel; the result has the same shape
        with (USB output, LSB output) pairs.
        """
        self._check_fitted()
        v = np.asarray(voltages, dtype=complex)
        if v.ndim < 2 or v.shape[-1] != 2 or v.shape[-2] != self.n_channels_:
            raise ValueError(
                f"expected shape (..., {self.n_channels_}, 2), got {v.shape}"
            )
        if not np.all(np.isfinite(v.view(float))):
            raise ValueError("voltages must be finite")
        cal = self.calibration_
        out = np.empty_like(v)
        out[..., 0] = cal.c1 * v[..., 0] + cal.c2 * v[..., 1]
        out[..., 1] = cal.c3 * v[..., 0] + cal.c4 * v[..., 1]
        return out

    def fit_transform(self, receiver: Receiver, voltages) -> np.ndarray:
        return self.fit(receiver).transform(voltages)
