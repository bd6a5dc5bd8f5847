"""Synthesize a turbulent wind record and look at what the nacelle lidar sees.

The lidar focuses 60 m upstream: under frozen advection its measurement at
time t is the (spatially averaged, i.e. low-pass filtered) wind that will
reach the rotor a flight time later.
"""

import numpy as np

from torsim import LidarConfig, PreviewTrack, synthesize
from torsim.metrics import psd_welch
from torsim.wind import kaimal_psd

v0 = 18.0
wind = synthesize(v0, "A", duration=1800.0, dt=0.05, seed=1)
print(f"mean {wind.samples[:-1].mean():.3f} m/s, "
      f"turbulence intensity {100 * wind.ti:.1f}%, "
      f"std {wind.samples[:-1].std():.3f} m/s")

# spectral check against the target spectrum
freqs, dens = psd_welch(wind.samples[:-1], 1.0 / wind.dt, 300.0)
sigma = wind.ti * v0
band = (freqs > 0.01) & (freqs < 0.5)
ratio_db = 10 * np.log10(dens[band] / kaimal_psd(freqs[band], v0, sigma))
print(f"synthesized PSD vs target over 0.01-0.5 Hz: "
      f"median offset {np.median(ratio_db):+.2f} dB")

cfg = LidarConfig(focal_distance=60.0)
track = PreviewTrack(wind, cfg, v0=v0)
print(f"flight time {track.t_flight:.2f} s, "
      f"filter cutoff {cfg.filter_cutoff * 1e3:.1f} mHz")
print(f"variance: raw {wind.samples.var():.2f}, "
      f"previewed {track.filtered.var():.2f} (m/s)^2")

t = 600.0
window = track.window(t, 0.1)
print(f"preview window at t={t:.0f}s: {len(window)} samples, "
      f"first={window[0]:.2f} m/s, last={window[-1]:.2f} m/s")
