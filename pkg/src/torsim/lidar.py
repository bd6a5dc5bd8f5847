"""Continuous-wave nacelle lidar emulation: frozen-field preview plus
spatial-averaging low-pass filtering.

Under the frozen-turbulence hypothesis the field advects at the mean wind
speed, so the sample at the focal plane equals the wind arriving at the
rotor one flight time f/v0 later. The circular-scan spatial averaging is
equivalent to a non-phase-distorting low pass whose 3 dB bandwidth is
87/f^2 Hz; it is realized as a forward-backward second-order Butterworth
over the whole series. The double pass would place the composite -3 dB
point below the single-pass cutoff, so the single-pass cutoff is pre-warped
such that the composite response is -3 dB exactly at 87/f^2.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .exceptions import ConfigError, EndOfDataError

LIDAR_BW_CONSTANT = 87.0  # Hz * m^2, scan-averaging bandwidth constant
# (sqrt(2) - 1)^(1/4): frequency ratio at which a squared order-2
# Butterworth magnitude falls to 1/sqrt(2).
PREWARP_ORDER2 = (math.sqrt(2.0) - 1.0) ** 0.25


@dataclass
class LidarConfig:
    focal_distance: float = 60.0   # m
    preview_horizon: float = 1.5   # s, constant usable preview length
    scan_points: int = 24          # retained for interface fidelity; the
                                   # scan average collapses into the filter
    noise_std: float = 0.0         # measurement noise hook, disabled
    wind_evolution: float = 0.0    # wind evolution hook, disabled

    def __post_init__(self):
        if self.focal_distance <= 0.0:
            raise ConfigError("focal_distance must be > 0")
        if self.preview_horizon <= 0.0:
            raise ConfigError("preview_horizon must be > 0")

    @property
    def filter_cutoff(self):
        """Composite -3 dB bandwidth, Hz."""
        return LIDAR_BW_CONSTANT / self.focal_distance**2

    def flight_time(self, v0):
        return self.focal_distance / v0

    def validate_preview(self, v0_max):
        if self.preview_horizon > self.flight_time(v0_max):
            raise ConfigError(
                "preview_horizon exceeds the flight time at the fastest mean wind")


def zero_phase_lowpass(samples, dt, cutoff_hz):
    """Forward-backward order-2 Butterworth with composite -3 dB at cutoff_hz."""
    nyq = 0.5 / dt
    single_pass = cutoff_hz / PREWARP_ORDER2
    if single_pass >= nyq:
        raise ConfigError("lidar filter cutoff above Nyquist of the wind series")
    b, a = signal.butter(2, single_pass / nyq)
    return signal.filtfilt(b, a, samples)


class PreviewTrack:
    """Filtered frozen-field preview for one wind series.

    The whole series is filtered once at construction, which keeps the
    zero-phase filtering deterministic and makes concurrent reads safe.
    Lookups are indexed by measurement time: the value measured at time t
    is the filtered wind arriving at the rotor at t + f/v0.
    """

    def __init__(self, series, config, v0=None):
        self.series = series
        self.config = config
        self.v0 = series.v0 if v0 is None else v0
        self.t_flight = config.flight_time(self.v0)
        self.filtered = zero_phase_lowpass(series.samples, series.dt,
                                           config.filter_cutoff)
        self._times = series.times()

    def arrival_value(self, t):
        """Filtered wind at rotor-arrival time t (measured t_flight earlier)."""
        if t < 0.0 or t > self.series.duration + 1e-9:
            raise EndOfDataError(f"arrival time {t} outside the wind record")
        return float(np.interp(t, self._times, self.filtered))

    def measure(self, t):
        """Lidar output at measurement time t."""
        t_arr = t + self.t_flight
        if t_arr > self.series.duration + 1e-9:
            raise EndOfDataError(
                f"preview at t={t} needs wind {t_arr:.2f}s in, record ends at "
                f"{self.series.duration:.2f}s")
        return self.arrival_value(t_arr)

    def window(self, t, ts_ctrl):
        """Measurements over [t, t + preview_horizon] at the controller rate."""
        n = int(round(self.config.preview_horizon / ts_ctrl)) + 1
        return np.array([self.measure(t + i * ts_ctrl) for i in range(n)])

    def dump_csv(self, path):
        data = np.column_stack([self._times, self.filtered])
        np.savetxt(path, data, fmt="%.17g", delimiter=",",
                   header="time_s,preview_mps")


def measure(series, t, config, v0=None):
    """One-shot lidar measurement (builds the full track; see PreviewTrack)."""
    return PreviewTrack(series, config, v0).measure(t)


def preview_window(series, t, config, ts_ctrl, v0=None):
    """One-shot preview window at the controller sample period."""
    return PreviewTrack(series, config, v0).window(t, ts_ctrl)
