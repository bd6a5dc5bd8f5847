"""Command line front end: single runs, speed sweeps, controller comparisons.

Exit codes: 0 success, 2 configuration error, 3 numerical synthesis or
equilibrium failure, 4 I/O failure.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import metrics as met
from . import sim as simmod
from .exceptions import ConfigError, EquilibriumError, SynthesisError
from .params import NREL5MW, save_turbine_config
from .sim import (SimConfig, load_sim_config, run, sim_config_from_mapping,
                  sim_config_to_mapping, write_log_csv, write_meta)
from .turbine import REGION2
from .control import dump_gains
from .wind import WeibullSpec, weibull_weights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SYNTH = 3
EXIT_IO = 4

DEFAULT_SPEEDS = tuple(float(v) for v in range(8, 25, 2))
DEFAULT_SEEDS = (1, 2, 3, 4, 5)
CONTROLLERS = ("Baseline", "DAC", "EOR")


def _output_root(args_out):
    if args_out:
        return Path(args_out)
    env = os.environ.get("TORSIM_OUT")
    return Path(env) if env else Path("torsim_out")


def _load_config(path, overrides):
    if path:
        return load_sim_config(path, overrides)
    return sim_config_from_mapping(overrides)


def _run_id(cfg):
    return f"{cfg.controller}_v{cfg.v0:g}_s{cfg.seed}"


def _config_hash(cfg):
    text = json.dumps({k: repr(v) for k, v in sim_config_to_mapping(cfg).items()},
                      sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def run_one(cfg, out_dir, write_psd=True):
    """Execute one run and write log.csv / metrics.csv / psd.csv / meta.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    log = run(cfg)
    report = met.compute_metrics(log, cfg)
    write_log_csv(log, out_dir / "log.csv")
    log.meta["wall_clock_s"] = round(time.perf_counter() - t0, 3)
    log.meta["config_hash"] = _config_hash(cfg)
    write_meta(log, out_dir / "meta.json")
    ident = {"controller": cfg.controller, "v0": cfg.v0, "seed": cfg.seed,
             "region": log.meta["anchor"]["region"] if log.meta["anchor"] else ""}
    met.write_metrics_csv(out_dir / "metrics.csv", [(ident, report)])
    if log.synth is not None:
        dump_gains(out_dir / "gains.txt", log.synth.gains,
                   reg=log.synth.regulator, exo=log.synth.exo)
    if write_psd:
        _write_psd_csv(log, cfg, out_dir / "psd.csv")
    return report, log.meta


PSD_CHANNELS = ("m_yt", "m_yb", "lss_torque", "p_mech", "omega_r")
PSD_DECIMATE = 8


def _write_psd_csv(log, cfg, path):
    sel = log.window(cfg.warmup)
    fs = 1.0 / (cfg.dt_phys * PSD_DECIMATE)
    span = (log.t[sel][-1] - log.t[sel][0])
    segment = min(600.0, span / 4.0)
    cols, names = [], ["freq_hz"]
    for name in PSD_CHANNELS:
        x = log.channels[name][sel][::PSD_DECIMATE]
        freqs, dens = met.psd_welch(x, fs, segment)
        if not cols:
            cols.append(freqs)
        cols.append(dens)
        names.append(f"psd_{name}")
    np.savetxt(path, np.column_stack(cols), fmt="%.17g", delimiter=",",
               header=",".join(names), comments="")


def cmd_simulate(args):
    overrides = dict(args.set or [])
    for key in ("controller", "v0", "seed", "duration"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = str(val)
    cfg = _load_config(args.config, overrides)
    out_dir = _output_root(args.out) / _run_id(cfg)
    report, meta = run_one(cfg, out_dir)
    print(f"run {_run_id(cfg)} complete: out={out_dir}")
    print(f"  P_mean={report.p_mean/1e6:.4f} MW  std(omega)={report.std_omega:.5f} "
          f"  DEL_LSS={report.del_lss/1e3:.1f} kNm")
    for note in meta.get("notes", []):
        print(f"  note: {note}")
    return EXIT_OK


def _sweep_task(task):
    cfg_map, out_dir = task
    cfg = sim_config_from_mapping(cfg_map)
    report, meta = run_one(cfg, out_dir)
    return _run_id(cfg), report, meta


def cmd_sweep(args):
    overrides = dict(args.set or [])
    base = _load_config(args.config, overrides)
    speeds = [float(s) for s in args.speeds.split(",")] if args.speeds \
        else list(DEFAULT_SPEEDS)
    controllers = args.controllers.split(",") if args.controllers \
        else list(CONTROLLERS)
    for c in controllers:
        if c not in CONTROLLERS:
            raise ConfigError(f"unknown controller {c!r} in --controllers")
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds \
        else list(DEFAULT_SEEDS)
    root = _output_root(args.out)
    root.mkdir(parents=True, exist_ok=True)
    manifest_path = root / "manifest.json"
    manifest = {"runs": {}}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())

    tasks = []
    for v0 in speeds:
        for ctrl in controllers:
            for seed in seeds:
                cfg = replace(base, v0=v0, controller=ctrl, seed=seed)
                rid = _run_id(cfg)
                entry = manifest["runs"].get(rid)
                run_dir = root / "runs" / rid
                if entry and entry.get("hash") == _config_hash(cfg) and \
                        (run_dir / "metrics.csv").exists():
                    continue  # resumable: skip completed runs
                tasks.append((sim_config_to_mapping(cfg), str(run_dir)))

    t0 = time.perf_counter()
    if tasks:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                results = list(ex.map(_sweep_task, tasks))
        else:
            results = [_sweep_task(t) for t in tasks]
        for rid, report, meta in results:
            manifest["runs"][rid] = {
                "hash": meta["config_hash"],
                "wall_clock_s": meta["wall_clock_s"],
                "dir": str(root / "runs" / rid),
            }
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"sweep: {len(tasks)} runs executed, "
          f"{len(manifest['runs']) - len(tasks)} reused, "
          f"{time.perf_counter() - t0:.1f}s")

    rows = _collect_metrics(root, speeds, controllers, seeds)
    per_speed_path = root / "sweep_metrics.csv"
    met.write_metrics_csv(per_speed_path, rows)
    spec = WeibullSpec(shape=base.metrics.weibull_shape,
                       scale=base.metrics.weibull_scale)
    table = aggregate_table(rows, spec)
    agg_path = root / "aggregate.csv"
    _write_table(agg_path, table)
    print(f"per-run metrics: {per_speed_path}")
    print(f"weighted aggregate: {agg_path}")
    return EXIT_OK


def _collect_metrics(root, speeds, controllers, seeds):
    rows = []
    for v0 in speeds:
        for ctrl in controllers:
            for seed in seeds:
                rid = f"{ctrl}_v{v0:g}_s{seed}"
                path = root / "runs" / rid / "metrics.csv"
                if not path.exists():
                    raise FileNotFoundError(f"missing metrics for {rid}")
                rows.extend(met.read_metrics_csv(path))
    return rows


def aggregate_table(rows, weibull_spec, baseline="Baseline"):
    """Weibull-weighted per-controller aggregate plus percent-vs-baseline rows.

    Seed metrics are averaged first; Region-2 speeds are flagged in the
    per-speed breakdown by the region column of the per-run metrics.
    """
    by = {}
    for ident, rep in rows:
        key = (ident["controller"], float(ident["v0"]))
        by.setdefault(key, []).append(rep)
    controllers = sorted({k[0] for k in by})
    speeds = sorted({k[1] for k in by})
    weights = dict(zip(speeds, weibull_weights(speeds, weibull_spec)))
    table = [["row"] + list(met.MetricsReport.FIELDS)]
    agg = {}
    for ctrl in controllers:
        per_speed = {}
        for v0 in speeds:
            reps = by[(ctrl, v0)]
            per_speed[v0] = met.MetricsReport(**{
                f: float(np.mean([getattr(r, f) for r in reps]))
                for f in met.MetricsReport.FIELDS})
        agg[ctrl] = met.lifetime_aggregate(per_speed, weights)
        table.append([ctrl] + [repr(v) for v in agg[ctrl].as_tuple()])
    if baseline in agg:
        base_vals = agg[baseline].as_tuple()
        for ctrl in controllers:
            if ctrl == baseline:
                continue
            pct = [(100.0 * (b - v) / b if b else 0.0)
                   for v, b in zip(agg[ctrl].as_tuple(), base_vals)]
            table.append([f"{ctrl} cf. {baseline} %"] +
                         [f"{x:.2f}" for x in pct])
    return table


def _write_table(path, table):
    with open(path, "w", encoding="utf-8") as fh:
        for row in table:
            fh.write(",".join(str(c) for c in row) + "\n")


def cmd_compare(args):
    rows = []
    for path in args.metrics:
        rows.extend(met.read_metrics_csv(path))
    sets = {}
    for ident, rep in rows:
        sets.setdefault(ident["controller"], set()).add(
            (ident["v0"], ident["seed"]))
    if "Baseline" not in sets:
        raise ConfigError("compare needs a Baseline run set")
    ref = sets["Baseline"]
    for ctrl, got in sets.items():
        if got != ref:
            raise ConfigError(
                f"mismatched (v0, seed) coverage between Baseline and {ctrl}")
    spec = WeibullSpec()
    table = aggregate_table(rows, spec)
    out = args.out or "comparison.csv"
    _write_table(out, table)
    for row in table:
        print(",".join(str(c) for c in row))
    print(f"written: {out}")
    return EXIT_OK


def cmd_write_config(args):
    mapping = sim_config_to_mapping(SimConfig())
    lines = ["# torsim flat configuration (key = value, '#' comments)"]
    lines += [f"{k} = {v}" for k, v in mapping.items()]
    Path(args.path).write_text("\n".join(lines) + "\n")
    print(f"default config written: {args.path}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="torsim",
        description="Closed-loop wind turbine control simulation "
                    "(output-regulation, accommodation and baseline controllers)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output directory (default $TORSIM_OUT or ./torsim_out)")
        p.add_argument("--set", nargs=2, action="append", metavar=("KEY", "VALUE"),
                       help="override a single config key")

    ps = sub.add_parser("simulate", help="run one simulation")
    common(ps)
    ps.add_argument("--controller", choices=CONTROLLERS)
    ps.add_argument("--v0", type=float, help="mean wind speed, m/s")
    ps.add_argument("--seed", type=int)
    ps.add_argument("--duration", type=float, help="seconds")
    ps.set_defaults(func=cmd_simulate)

    pw = sub.add_parser("sweep", help="run a speeds x controllers x seeds sweep")
    common(pw)
    pw.add_argument("--speeds", help="comma list of mean wind speeds")
    pw.add_argument("--controllers", help="comma list from "
                    + ",".join(CONTROLLERS))
    pw.add_argument("--seeds", help="comma list of integer seeds")
    pw.add_argument("--jobs", type=int, default=1, help="parallel workers")
    pw.set_defaults(func=cmd_sweep)

    pc = sub.add_parser("compare", help="percent table vs the Baseline run set")
    pc.add_argument("metrics", nargs="+", help="metrics CSV files")
    pc.add_argument("--out", help="output CSV path")
    pc.set_defaults(func=cmd_compare)

    pg = sub.add_parser("write-config", help="write the default flat config")
    pg.add_argument("path")
    pg.set_defaults(func=cmd_write_config)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SynthesisError, EquilibriumError, FloatingPointError) as exc:
        print(f"synthesis error: {exc}", file=sys.stderr)
        return EXIT_SYNTH
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
