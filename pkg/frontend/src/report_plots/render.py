"""Render comparison figures from torsim CSV artifacts.

Four figure kinds, all strictly read-only over their inputs:

  timeseries  channel overlays from per-run log.csv files
  del_bars    damage-equivalent-load bars per mean wind speed
  psd         spectral overlays from per-run psd.csv files (0.01-1 Hz)
  actuation   torque-rate and pitch-travel bars per mean wind speed

Controllers keep a fixed color convention: Baseline green, DAC blue,
EOR red. Below-rated (Region 2) speeds get a shaded background on the bar
charts.

Usage:
  report-plots --kind timeseries --in Baseline=a/log.csv --in EOR=b/log.csv \
               --out overlay.svg
  report-plots --kind del_bars --in sweep_metrics.csv --out dels.svg
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

COLORS = {"Baseline": "green", "DAC": "blue", "EOR": "red"}
KINDS = ("timeseries", "del_bars", "psd", "actuation")
RATED_WIND = 11.4  # m/s, Region 2/3 boundary for background shading
PSD_BAND = (0.01, 1.0)  # Hz

DEFAULT_TS_CHANNELS = ("v_x", "omega_r", "theta", "m_g", "lss_torque")
DEFAULT_PSD_CHANNELS = ("psd_m_yt", "psd_lss_torque", "psd_m_yb", "psd_p_mech")

# deterministic SVG output (stable element ids, no timestamps)
plt.rcParams["svg.hashsalt"] = "report-plots"
SVG_METADATA = {"Date": None}


class RenderError(RuntimeError):
    pass


@dataclass
class PlotSpec:
    kind: str
    inputs: dict            # label -> path for per-run CSVs, or {"": path}
    out: str
    channels: tuple = ()
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        if not self.inputs:
            raise RenderError("no input CSVs given")


def read_csv_columns(path):
    """Header-keyed float columns of a simple CSV."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        try:
            header = next(rd)
        except StopIteration:
            raise RenderError(f"{path}: empty CSV") from None
        rows = [r for r in rd if r]
    if not rows:
        raise RenderError(f"{path}: CSV has a header but no data rows")
    cols = {}
    data = np.array(rows, dtype=object)
    for i, name in enumerate(header):
        col = data[:, i]
        try:
            cols[name] = col.astype(float)
        except ValueError:
            cols[name] = col  # identity columns (controller, region)
    return cols


def color_for(label):
    return COLORS.get(label, "gray")


def _require(cols, name, path):
    if name not in cols:
        raise RenderError(f"{path}: missing channel {name!r}; available: "
                          f"{sorted(cols)}")
    return cols[name]


def build_timeseries(spec):
    channels = spec.channels or DEFAULT_TS_CHANNELS
    fig, axes = plt.subplots(len(channels), 1, sharex=True,
                             figsize=(9, 1.9 * len(channels)))
    axes = np.atleast_1d(axes)
    for label, path in spec.inputs.items():
        cols = read_csv_columns(path)
        t = _require(cols, "time_s", path)
        for ax, name in zip(axes, channels):
            ax.plot(t, _require(cols, name, path), color=color_for(label),
                    lw=0.8, label=label)
    for ax, name in zip(axes, channels):
        ax.set_ylabel(name)
        ax.grid(alpha=0.3)
    axes[0].legend(loc="upper right", ncols=len(spec.inputs))
    axes[-1].set_xlabel("time (s)")
    fig.suptitle(spec.title or "response overlay")
    return fig


def _seed_averaged(rows_cols, value_field):
    """(controller, v0) -> mean over seeds of one metric column."""
    ctrl = rows_cols["controller"]
    v0 = rows_cols["v0"].astype(float)
    vals = rows_cols[value_field]
    out = {}
    for c, v, x in zip(ctrl, v0, vals):
        out.setdefault((c, v), []).append(x)
    return {k: float(np.mean(v)) for k, v in out.items()}


def _grouped_bars(ax, table, ylabel):
    controllers = sorted({c for c, _ in table}, key=lambda c: list(COLORS).index(c)
                         if c in COLORS else 99)
    speeds = sorted({v for _, v in table})
    width = 0.8 / len(controllers)
    for i, ctrl in enumerate(controllers):
        xs = np.arange(len(speeds)) + (i - (len(controllers) - 1) / 2) * width
        ys = [table.get((ctrl, v), np.nan) for v in speeds]
        ax.bar(xs, ys, width=width, color=color_for(ctrl), label=ctrl)
    # Region 2 background shading
    for j, v in enumerate(speeds):
        if v < RATED_WIND:
            ax.axvspan(j - 0.5, j + 0.5, color="0.85", zorder=0)
    ax.set_xticks(np.arange(len(speeds)))
    ax.set_xticklabels([f"{v:g}" for v in speeds])
    ax.set_xlabel("mean wind speed (m/s)")
    ax.set_ylabel(ylabel)
    ax.grid(axis="y", alpha=0.3)


def build_del_bars(spec):
    path = next(iter(spec.inputs.values()))
    cols = read_csv_columns(path)
    fields = spec.channels or ("del_m_yt", "del_m_yb", "del_lss")
    fig, axes = plt.subplots(1, len(fields), figsize=(4.2 * len(fields), 3.6))
    axes = np.atleast_1d(axes)
    for ax, fieldname in zip(axes, fields):
        _require(cols, fieldname, path)
        _grouped_bars(ax, _seed_averaged(cols, fieldname), fieldname)
    axes[0].legend()
    fig.suptitle(spec.title or "damage equivalent loads (shaded: below rated)")
    fig.tight_layout()
    return fig


def build_psd(spec):
    channels = spec.channels or DEFAULT_PSD_CHANNELS
    fig, axes = plt.subplots(2, (len(channels) + 1) // 2,
                             figsize=(5.2 * ((len(channels) + 1) // 2), 7))
    axes = np.ravel(np.atleast_1d(axes))
    for label, path in spec.inputs.items():
        cols = read_csv_columns(path)
        f = _require(cols, "freq_hz", path)
        band = (f >= PSD_BAND[0]) & (f <= PSD_BAND[1])
        for ax, name in zip(axes, channels):
            ax.loglog(f[band], _require(cols, name, path)[band],
                      color=color_for(label), lw=0.9, label=label)
    for ax, name in zip(axes, channels):
        ax.set_xlim(*PSD_BAND)
        ax.set_ylabel(name)
        ax.set_xlabel("frequency (Hz)")
        ax.grid(which="both", alpha=0.3)
    axes[0].legend()
    fig.suptitle(spec.title or "power spectral densities")
    fig.tight_layout()
    return fig


def build_actuation(spec):
    path = next(iter(spec.inputs.values()))
    cols = read_csv_columns(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    _require(cols, "ctr", path)
    _grouped_bars(ax1, _seed_averaged(cols, "ctr"), "torque rate RMS (Nm/s)")
    _grouped_bars(ax2, _seed_averaged(cols, "pitch_travel"), "pitch travel (rad)")
    ax1.legend()
    fig.suptitle(spec.title or "actuation effort (shaded: below rated)")
    fig.tight_layout()
    return fig


BUILDERS = {"timeseries": build_timeseries, "del_bars": build_del_bars,
            "psd": build_psd, "actuation": build_actuation}


def render(spec):
    """Build and write the figure; returns the output path."""
    fig = BUILDERS[spec.kind](spec)
    try:
        if spec.out.endswith(".svg"):
            fig.savefig(spec.out, metadata=SVG_METADATA)
        else:
            fig.savefig(spec.out, dpi=130)
    finally:
        plt.close(fig)
    return spec.out


def parse_inputs(pairs):
    inputs = {}
    for item in pairs:
        if "=" in item:
            label, _, path = item.partition("=")
        else:
            label, path = "", item
        inputs[label] = path
    return inputs


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="report-plots",
        description="Render figures from torsim CSV artifacts")
    ap.add_argument("--kind", required=True, choices=KINDS)
    ap.add_argument("--in", dest="inputs", action="append", required=True,
                    metavar="[LABEL=]PATH",
                    help="input CSV; label per-run files with the controller "
                         "name (Baseline/DAC/EOR)")
    ap.add_argument("--out", required=True, help="output image path (.svg/.png)")
    ap.add_argument("--channels", help="comma list overriding the default "
                                       "channel selection")
    ap.add_argument("--title", default="")
    args = ap.parse_args(argv)
    try:
        spec = PlotSpec(kind=args.kind, inputs=parse_inputs(args.inputs),
                        out=args.out,
                        channels=tuple(args.channels.split(","))
                        if args.channels else (),
                        title=args.title)
        path = render(spec)
    except (RenderError, OSError, ValueError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(f"written: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
