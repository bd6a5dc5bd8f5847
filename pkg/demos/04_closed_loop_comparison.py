"""Run the three controllers on the same turbulent record and compare.

One seed, 700 s at 18 m/s mean wind (the first 100 s initialize the
estimators and are excluded from the metrics).
"""

import numpy as np

from torsim import SimConfig, compute_metrics, run

rows = []
for controller in ("Baseline", "DAC", "EOR"):
    cfg = SimConfig(v0=18.0, duration=700.0, controller=controller, seed=1)
    log = run(cfg)
    rep = compute_metrics(log, cfg)
    rows.append((controller, rep))
    a = log.meta["anchor"]
    print(f"{controller:9s}: anchored at {a['vhat0']:.2f} m/s ({a['region']}), "
          f"pitch trim {a['pitch_trim_deg']:+.2f} deg, "
          f"{log.meta['counters']['saturation_events']} saturation events")

print(f"\n{'':9s} {'DEL LSS':>9s} {'std(om)':>9s} {'std(P)':>9s} "
      f"{'P mean':>8s} {'CTR':>9s} {'PT':>8s}")
for name, r in rows:
    print(f"{name:9s} {r.del_lss/1e3:7.1f}kN {r.std_omega:9.4f} "
          f"{r.std_p/1e3:7.1f}kW {r.p_mean/1e6:6.3f}MW "
          f"{r.ctr/1e3:7.1f}kN {np.degrees(r.pitch_travel):6.1f}d")

base = rows[0][1]
for name, r in rows[1:]:
    print(f"\n{name} vs Baseline: "
          f"LSS DEL {100*(base.del_lss - r.del_lss)/base.del_lss:+.1f}%, "
          f"std(omega) {100*(base.std_omega - r.std_omega)/base.std_omega:+.1f}%, "
          f"pitch travel {100*(base.pitch_travel - r.pitch_travel)/base.pitch_travel:+.1f}% "
          f"(positive = better than Baseline)")
