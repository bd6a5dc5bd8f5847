"""Fatigue and performance post-processing.

Rainflow counting uses the four-point method on the reversal sequence with
the residue counted as half cycles. Damage equivalent loads follow

    DEL = (sum_i n_i S_i^m / N_ref)^(1/m)

with a configurable Woehler exponent per channel. Spectra are Welch
periodograms (Hann window, 50% overlap).
"""

import csv
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np
from scipy import signal


class Cycle(NamedTuple):
    range: float
    mean: float
    count: float  # 1.0 full, 0.5 half


@dataclass
class CycleSet:
    cycles: list

    @property
    def ranges(self):
        return np.array([c.range for c in self.cycles])

    @property
    def counts(self):
        return np.array([c.count for c in self.cycles])

    def total_count(self):
        return float(sum(c.count for c in self.cycles))


def reversals(series):
    """Local extrema of a sampled series, endpoints included."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        return x.copy()
    keep = [0]
    direction = 0
    for i in range(1, x.size):
        step = x[i] - x[keep[-1]]
        if step == 0.0:
            continue
        d = 1 if step > 0.0 else -1
        if d == direction:
            keep[-1] = i
        else:
            keep.append(i)
            direction = d
    return x[keep]


def rainflow(series):
    """Four-point rainflow counting with residue half cycles."""
    if len(series) < 2:
        raise ValueError("rainflow needs at least two samples")
    rev = reversals(series)
    stack = []
    cycles = []
    for point in rev:
        stack.append(point)
        while len(stack) >= 4:
            r_left = abs(stack[-3] - stack[-4])
            r_inner = abs(stack[-2] - stack[-3])
            r_right = abs(stack[-1] - stack[-2])
            if r_inner <= r_left and r_inner <= r_right:
                cycles.append(Cycle(range=r_inner,
                                    mean=0.5 * (stack[-2] + stack[-3]),
                                    count=1.0))
                del stack[-3:-1]
            else:
                break
    for a, b in zip(stack, stack[1:]):
        if a != b:
            cycles.append(Cycle(range=abs(b - a), mean=0.5 * (a + b), count=0.5))
    return CycleSet(cycles=cycles)


def damage_equivalent_load(cycles, m, n_ref):
    """Single-amplitude load at n_ref cycles with equal fatigue damage."""
    if m < 1.0 or n_ref <= 0.0:
        raise ValueError("need Woehler exponent >= 1 and n_ref > 0")
    if not cycles.cycles:
        return 0.0
    return float((np.sum(cycles.counts * cycles.ranges**m) / n_ref) ** (1.0 / m))


def psd_welch(series, fs, segment_s):
    """One-sided Welch density: Hann window, 50% overlap.

    The global mean is removed up front instead of detrending per segment;
    per-segment detrending silently discards the below-resolution energy of
    strongly red spectra and breaks the Parseval check.
    """
    x = np.asarray(series, dtype=float)
    nperseg = int(round(segment_s * fs))
    if nperseg < 8 or x.size < 2 * nperseg:
        raise ValueError("series shorter than two Welch segments")
    return signal.welch(x - x.mean(), fs=fs, window="hann", nperseg=nperseg,
                        noverlap=nperseg // 2, detrend=False)


def ctr(m_g, dt):
    """RMS rate of generator torque changes."""
    m_g = np.asarray(m_g, dtype=float)
    if m_g.size < 2:
        return 0.0
    rate = np.diff(m_g) / dt
    return float(np.sqrt(np.mean(rate**2)))


def pitch_travel(theta, dt=None):
    """Total variation of the pitch series (dt kept for signature parity)."""
    return float(np.abs(np.diff(np.asarray(theta, dtype=float))).sum())


@dataclass
class MetricsReport:
    del_m_yt: float
    del_m_yb: float
    del_lss: float
    std_p: float
    std_omega: float
    std_lambda: float
    p_mean: float
    ctr: float
    pitch_travel: float

    FIELDS = ("del_m_yt", "del_m_yb", "del_lss", "std_p", "std_omega",
              "std_lambda", "p_mean", "ctr", "pitch_travel")

    def as_tuple(self):
        return tuple(getattr(self, name) for name in self.FIELDS)

    def validate(self, rated_power=None):
        for name in self.FIELDS:
            if getattr(self, name) < 0.0:
                raise ValueError(f"metric {name} must be non-negative")
        if rated_power is not None and self.p_mean > 1.05 * rated_power:
            raise ValueError("mean power exceeds 105% of rated")
        return self


def compute_metrics(log, cfg, t0=None, t1=None):
    """MetricsReport over [t0, t1] (defaults: warm-up excluded, full tail)."""
    mc = cfg.metrics
    t0 = cfg.warmup if t0 is None else t0
    sel = log.window(t0, t1)
    dt = cfg.dt_phys
    ch = log.channels
    lam = ch["omega_r"][sel] * cfg.turbine.rotor_radius / ch["v_x"][sel]
    report = MetricsReport(
        del_m_yt=damage_equivalent_load(rainflow(ch["m_yt"][sel]),
                                        mc.woehler_tower, mc.del_n_ref),
        del_m_yb=damage_equivalent_load(rainflow(ch["m_yb"][sel]),
                                        mc.woehler_blade, mc.del_n_ref),
        del_lss=damage_equivalent_load(rainflow(ch["lss_torque"][sel]),
                                       mc.woehler_lss, mc.del_n_ref),
        std_p=float(ch["p_mech"][sel].std()),
        std_omega=float(ch["omega_r"][sel].std()),
        std_lambda=float(lam.std()),
        p_mean=float(ch["p_mech"][sel].mean()),
        ctr=ctr(ch["m_g"][sel], dt),
        pitch_travel=pitch_travel(ch["theta"][sel]),
    )
    return report.validate(rated_power=cfg.turbine.rated_power)


def lifetime_aggregate(per_speed, weights):
    """Weighted arithmetic mean of MetricsReports across mean wind speeds.

    per_speed maps speed -> MetricsReport; weights maps speed -> weight
    (normalized here).
    """
    speeds = sorted(per_speed)
    w = np.array([weights[s] for s in speeds], dtype=float)
    w = w / w.sum()
    vals = {}
    for name in MetricsReport.FIELDS:
        vals[name] = float(sum(wi * getattr(per_speed[s], name)
                               for wi, s in zip(w, speeds)))
    return MetricsReport(**vals)


def write_metrics_csv(path, rows):
    """rows: iterable of (ident dict, MetricsReport); ident keys become columns."""
    rows = list(rows)
    if not rows:
        raise ValueError("no metrics rows to write")
    id_keys = list(rows[0][0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(id_keys + list(MetricsReport.FIELDS))
        for ident, rep in rows:
            wr.writerow([ident[k] for k in id_keys] +
                        [repr(float(v)) for v in rep.as_tuple()])


def read_metrics_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        id_keys = [k for k in header if k not in MetricsReport.FIELDS]
        out = []
        for row in rd:
            ident = dict(zip(id_keys, row[:len(id_keys)]))
            vals = [float(v) for v in row[len(id_keys):]]
            out.append((ident, MetricsReport(**dict(zip(MetricsReport.FIELDS, vals)))))
    return out
