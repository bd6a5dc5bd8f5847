"""Turbulent hub-height wind synthesis and wind statistics utilities.

Single-point series are synthesized from the Kaimal spectrum

    S(f) = 4 sigma^2 (L/v0) / (1 + 6 f L / v0)^(5/3),   L = 340.2 m

as a sum of cosines with seeded random phases, realized through an inverse
real FFT. Turbulence intensity follows the IEC 61400-1 normal turbulence
model for the requested class.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError

KAIMAL_LENGTH_SCALE = 340.2  # m
IEC_I_REF = {"A": 0.16, "B": 0.14, "C": 0.12}
SAMPLE_FLOOR = 0.5  # m/s, negative-tail clamp
MAX_DT = 0.1        # s, coarser sampling loses the band of interest


def iec_turbulence_intensity(v0, turbulence_class="A"):
    """Normal-turbulence-model TI: sigma1 = I_ref (0.75 v0 + 5.6), as a fraction."""
    try:
        i_ref = IEC_I_REF[turbulence_class]
    except KeyError:
        raise ConfigError(f"unknown turbulence class {turbulence_class!r}") from None
    return i_ref * (0.75 * v0 + 5.6) / v0


def kaimal_psd(f, v0, sigma):
    """One-sided Kaimal density, (m/s)^2 per Hz."""
    f = np.asarray(f, dtype=float)
    l_over_v = KAIMAL_LENGTH_SCALE / v0
    return 4.0 * sigma**2 * l_over_v / (1.0 + 6.0 * f * l_over_v) ** (5.0 / 3.0)


@dataclass
class WindSeries:
    dt: float
    samples: np.ndarray  # includes the periodic wrap point, spans [0, duration]
    v0: float
    ti: float
    seed: int
    clamp_count: int = 0

    @property
    def duration(self):
        return (len(self.samples) - 1) * self.dt

    def times(self):
        return np.arange(len(self.samples)) * self.dt

    def at(self, t):
        """Linear interpolation; t may be scalar or array within [0, duration]."""
        return np.interp(t, self.times(), self.samples)


def synthesize(v0, turbulence_class="A", duration=3700.0, dt=0.05, seed=0):
    """Seeded spectral synthesis of a hub-height longitudinal wind series.

    Deterministic in all arguments. The returned series carries one extra
    sample closing the synthesis period, so trapezoid averages over the full
    span coincide with the mean of the unique samples.
    """
    if v0 <= 0.0:
        raise ConfigError("mean wind speed must be > 0")
    if duration < 200.0:
        raise ConfigError("duration must be >= 200 s")
    if dt > MAX_DT:
        raise ConfigError(f"wind sample step {dt} too coarse (max {MAX_DT} s)")
    ti = iec_turbulence_intensity(v0, turbulence_class)
    sigma = ti * v0
    n = int(round(duration / dt))
    freqs = np.fft.rfftfreq(n, d=dt)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, len(freqs))
    amp = np.zeros(len(freqs))
    df = 1.0 / (n * dt)
    amp[1:] = np.sqrt(2.0 * kaimal_psd(freqs[1:], v0, sigma) * df)
    spectrum = 0.5 * n * amp * np.exp(1j * phases)
    spectrum[0] = n * v0
    if n % 2 == 0:
        spectrum[-1] = spectrum[-1].real  # Nyquist bin must be real
    x = np.fft.irfft(spectrum, n=n)
    clamps = int(np.count_nonzero(x < SAMPLE_FLOOR))
    if clamps:
        x = np.maximum(x, SAMPLE_FLOOR)
    samples = np.concatenate([x, x[:1]])
    return WindSeries(dt=dt, samples=samples, v0=v0, ti=ti, seed=seed,
                      clamp_count=clamps)


def cumulative_mean(series, t):
    """(1/t) * integral of the series over [0, t], trapezoid rule."""
    if not 0.0 < t <= series.duration + 1e-9:
        raise ValueError(f"t={t} outside (0, {series.duration}]")
    dt = series.dt
    x = series.samples
    k = int(t / dt)
    k = min(k, len(x) - 1)
    integral = np.trapezoid(x[:k + 1], dx=dt)
    rem = t - k * dt
    if rem > 1e-12 and k + 1 < len(x):
        x_t = x[k] + (x[k + 1] - x[k]) * rem / dt
        integral += 0.5 * (x[k] + x_t) * rem
    return integral / t


def cumulative_mean_track(series):
    """Cumulative trapezoid mean at every sample time (first point = sample 0)."""
    x = series.samples
    dt = series.dt
    integ = np.concatenate([[0.0], np.cumsum(0.5 * (x[1:] + x[:-1]) * dt)])
    track = np.empty_like(x)
    track[0] = x[0]
    track[1:] = integ[1:] / (np.arange(1, len(x)) * dt)
    return track


@dataclass
class WeibullSpec:
    shape: float = 2.0
    scale: float = 9.0  # m/s

    def __post_init__(self):
        if self.shape <= 0.0 or self.scale <= 0.0:
            raise ConfigError("Weibull shape and scale must be > 0")

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        k, c = self.shape, self.scale
        return (k / c) * (v / c) ** (k - 1.0) * np.exp(-((v / c) ** k))


def weibull_weights(speeds, spec=WeibullSpec()):
    """Normalized relative frequencies of the given mean wind speeds."""
    speeds = np.asarray(speeds, dtype=float)
    if speeds.size == 0:
        raise ConfigError("weibull_weights needs at least one speed")
    if speeds.size > 1 and not np.all(np.diff(speeds) > 0.0):
        raise ConfigError("speeds must be strictly increasing")
    w = spec.pdf(speeds)
    return w / w.sum()


def save_csv(series, path):
    header = (f"v0={series.v0!r} ti={series.ti!r} seed={series.seed} "
              f"dt={series.dt!r} clamp_count={series.clamp_count}\n"
              "time_s,wind_mps")
    data = np.column_stack([series.times(), series.samples])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header)


def load_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        meta_line = fh.readline().lstrip("# ").strip()
    meta = dict(item.split("=", 1) for item in meta_line.split())
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    dt = float(meta["dt"])
    return WindSeries(dt=dt, samples=data[:, 1].copy(), v0=float(meta["v0"]),
                      ti=float(meta["ti"]), seed=int(meta["seed"]),
                      clamp_count=int(meta.get("clamp_count", 0)))
