"""Acceptance suite.

Each criterion prints one pass/fail line (run with ``pytest -s`` to see them
all). Criterion A7 evaluates the directional comparison claims on seed
means over the five pinned seeds; its 9 m/s power-parity clause is known to
be unattainable for the accommodation controller with this plant (see the
README notes on desk-scale fidelity).
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from torsim.control import (dac_gain, kalman_gain, lqr, make_eor_controller,
                            solve_regulator, synthesize_feedback,
                            ControllerGains)
from torsim.exosystem import ExoModel, RlsEstimator, build_exosystem, companion
from torsim.lidar import LidarConfig, PreviewTrack, zero_phase_lowpass
from torsim.metrics import (Cycle, CycleSet, compute_metrics,
                            damage_equivalent_load, rainflow)
from torsim.params import NREL5MW as P
from torsim.sim import CHANNELS, SimConfig, run
from torsim.turbine import LinearModel, REGION2, discretize, find_equilibrium, linearize
from torsim.wind import WindSeries, synthesize

SEEDS = (1, 2, 3, 4, 5)
SPEEDS_A1 = (8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0)


def report(name, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] {name}"
    if detail:
        line += f" - {detail}"
    print(line)
    return passed


def const_wind(v0, duration, dt=0.05):
    n = int(round(duration / dt))
    return WindSeries(dt=dt, samples=np.full(n + 1, float(v0)), v0=v0,
                      ti=0.0, seed=0)


def test_a1_exact_regulation_on_design_model():
    t0 = time.perf_counter()
    worst_e, worst_res = 0.0, 0.0
    for v0 in SPEEDS_A1:
        md = discretize(linearize(find_equilibrium(v0, P)), 0.1)
        gains = synthesize_feedback(md)
        a1 = 2.0 * math.cos(0.05)  # marginally stable oscillatory pair
        exo = build_exosystem([a1, -1.0], md.region, P, v0=v0, ts=0.1)
        reg = solve_regulator(md, exo, gains.f)
        worst_res = max(worst_res, reg.residual_dyn, reg.residual_out)
        ctrl = make_eor_controller(gains, reg, exo)
        e_w, d_w = md.h @ exo.l_d, -exo.l_r
        rng = np.random.default_rng(1)
        x = 0.01 * rng.standard_normal(md.n)
        w = np.array([0.5, 0.5 * math.cos(-0.05), 0.5 * math.cos(-0.10)])
        errs = np.empty(2000)
        for k in range(2000):
            u = ctrl.step(w)
            errs[k] = (md.c_z @ x + d_w @ w)[0]
            ctrl.advance(md.c_y @ x, w, u)
            x = md.a @ x + md.b[:, 0] * u + e_w @ w
            w = exo.s @ w
        worst_e = max(worst_e, np.abs(errs[1000:]).max())
    elapsed = time.perf_counter() - t0
    ok = worst_e <= 1e-6 and worst_res <= 1e-8 and elapsed < 5.0
    assert report("A1 exact regulation on the design model", ok,
                  f"max|e|={worst_e:.2e} (<=1e-6), residuals<={worst_res:.2e} "
                  f"(<=1e-8), {elapsed:.1f}s (<5s)")


def test_a2_dac_special_case():
    rng = np.random.default_rng(3)
    worst = 0.0
    for trial in range(20):
        n = rng.integers(2, 6)
        a = 0.5 * rng.standard_normal((n, n))
        a = a / max(1.0, 1.3 * np.abs(np.linalg.eigvals(a)).max())
        b = rng.standard_normal((n, 1))
        c = rng.uniform(-2.0, 2.0)
        h = b * c  # exact-cancellation instance
        m = LinearModel(region=REGION2, a=a, b=b, h=h,
                        c_y=np.eye(n), c_z=rng.standard_normal((1, n)),
                        x_star=np.zeros(n), u_star=0.0, d_star=0.0,
                        gamma=0.0, alpha=0.0, beta=0.0, ts=0.1)
        exo = ExoModel(s=np.zeros((1, 1)), l_d=np.ones((1, 1)),
                       l_r=np.zeros((1, 1)), ts=0.1, region=REGION2)
        f = lqr(a, b, np.eye(n), [[1.0]])
        reg = solve_regulator(m, exo, f)
        g_d, exact = dac_gain(b, h)
        assert exact
        worst = max(worst, abs(reg.g[0, 0] - g_d[0, 0]))
    ok = worst <= 1e-10
    assert report("A2 accommodation gain as the constant-exosystem special case",
                  ok, f"max|G - G_d|={worst:.2e} (<=1e-10) over 20 instances")


def test_a3_steady_wind_trims():
    t0 = time.perf_counter()
    log = run(SimConfig(v0=8.0, duration=320.0, controller="Baseline"),
              wind=const_wind(8.0, 340.0))
    tail = log.window(300.0)
    tsr = float((log.channels["omega_r"][tail] * P.rotor_radius /
                 log.channels["v_x"][tail]).mean())
    log3 = run(SimConfig(v0=18.0, duration=400.0, controller="Baseline"),
               wind=const_wind(18.0, 420.0))
    tail3 = log3.window(350.0)
    rpm = float(log3.channels["omega_r"][tail3].mean() * 30.0 / math.pi)
    p_mech = float(log3.channels["p_mech"][tail3].mean())
    elapsed = time.perf_counter() - t0
    ok = (abs(tsr - 7.55) <= 0.02 * 7.55 and abs(rpm - 12.1) <= 0.01 * 12.1
          and abs(p_mech - P.rated_power) <= 0.02 * P.rated_power
          and elapsed < 30.0)
    assert report("A3 steady-wind trims", ok,
                  f"TSR={tsr:.3f} (7.55 +-2%), {rpm:.3f} rpm (12.1 +-1%), "
                  f"P={p_mech/1e6:.3f} MW (rated +-2%), {elapsed:.1f}s (<30s)")


def test_a4_rainflow_and_del():
    cs = rainflow([-2, 1, -3, 5, -1, 3, -4, 4, -2])
    got = sorted((c.range, c.mean, c.count) for c in cs.cycles)
    frozen = sorted([(4.0, 1.0, 1.0), (3.0, -0.5, 0.5), (4.0, -1.0, 0.5),
                     (8.0, 1.0, 0.5), (9.0, 0.5, 0.5), (8.0, 0.0, 0.5),
                     (6.0, 1.0, 0.5)])
    fixture_ok = got == frozen
    cs2 = CycleSet([Cycle(3.0, 0.0, 1.0), Cycle(4.0, 0.0, 1.0)])
    arith = damage_equivalent_load(cs2, 4.0, 1.0)
    arith_ok = abs(arith - 4.285) <= 1e-3 + abs(337.0**0.25 - 4.285)
    arith_ok = abs(arith - 337.0**0.25) <= 1e-12 and abs(arith - 4.285) <= 1e-3
    rng = np.random.default_rng(4)
    homog_ok = True
    for _ in range(100):
        x = rng.standard_normal(150).cumsum()
        c1 = rainflow(x)
        if not c1.cycles:
            continue
        d1 = damage_equivalent_load(c1, 4.0, 2e6)
        d2 = damage_equivalent_load(rainflow(3.0 * x), 4.0, 2e6)
        homog_ok &= abs(d2 - 3.0 * d1) <= 1e-9 * d2
    ok = fixture_ok and arith_ok and homog_ok
    assert report("A4 rainflow/DEL correctness", ok,
                  f"fixture={'ok' if fixture_ok else 'MISMATCH'}, "
                  f"DEL(3,4)={arith:.4f} (4.285 +-1e-3), homogeneity over 100 "
                  f"series={'ok' if homog_ok else 'BROKEN'}")


def test_a5_rls_identification():
    rng = np.random.default_rng(0)
    x = np.empty(202)
    x[0], x[1] = 1.0, 0.6
    for k in range(2, 202):
        x[k] = 1.6 * x[k - 1] - 0.64 * x[k - 2] + 1e-8 * rng.standard_normal()
    rls = RlsEstimator(order=2, forgetting=0.90)
    for s in x:
        rls.update(s)
    err = np.abs(rls.coeffs - [1.6, -0.64]).max()
    recovery_ok = rls.updates == 200 and err <= 1e-3

    n = 2000
    y = np.empty(n)
    y[0], y[1] = 0.3, -0.1
    for k in range(2, n):
        y[k] = 0.9 * y[k - 1] - 0.5 * y[k - 2] + 0.3 * rng.standard_normal()
    rls1 = RlsEstimator(order=2, forgetting=1.0, p0=1e9)
    for s in y:
        rls1.update(s)
    phi = np.column_stack([y[1:-1], y[:-2]])
    batch = np.linalg.lstsq(phi, y[2:], rcond=None)[0]
    batch_err = np.abs(rls1.coeffs - batch).max()
    ok = recovery_ok and batch_err <= 1e-6
    assert report("A5 recursive identification", ok,
                  f"AR(2) error={err:.2e} (<=1e-3 in 200 updates), "
                  f"batch equivalence={batch_err:.2e} (<=1e-6)")


def test_a6_lidar_filter():
    worst_gain = 0.0
    for f in (40.0, 60.0, 90.0):
        fc = LidarConfig(focal_distance=f).filter_cutoff
        dt = 0.05
        t = np.arange(0.0, 25.0 / fc, dt)
        y = zero_phase_lowpass(np.sin(2 * np.pi * fc * t), dt, fc)
        mid = slice(len(t) // 4, 3 * len(t) // 4)
        worst_gain = max(worst_gain,
                         abs(np.abs(y[mid]).max() - 1.0 / math.sqrt(2.0))
                         * math.sqrt(2.0))
    dc = np.abs(zero_phase_lowpass(np.full(4000, 3.3), 0.05, 87.0 / 3600.0)
                - 3.3).max()

    wind = synthesize(18.0, "A", 900.0, 0.05, seed=5)
    track = PreviewTrack(wind, LidarConfig(), v0=18.0)
    dt = wind.dt
    meas_t = np.arange(50.0, 700.0, dt)
    preview = np.interp(meas_t + track.t_flight, wind.times(), track.filtered)
    lags = range(-5, 6)
    scores = []
    for lag in lags:
        target = np.interp(meas_t + track.t_flight + lag * dt, wind.times(),
                           track.filtered)
        scores.append(np.corrcoef(preview, target)[0, 1])
    lag_best = list(lags)[int(np.argmax(scores))]
    ok = worst_gain <= 0.05 and dc <= 1e-9 and abs(lag_best) <= 1
    assert report("A6 preview filter", ok,
                  f"composite gain error at 87/f^2: {100*worst_gain:.2f}% (<=5%), "
                  f"DC error={dc:.1e} (<=1e-9), lag={lag_best} samples (+-1)")


def _a7_run(task):
    ctrl, seed, v0 = task
    cfg = SimConfig(v0=v0, duration=700.0, controller=ctrl, seed=seed)
    log = run(cfg)
    log.check_finite()
    return ctrl, v0, compute_metrics(log, cfg), log.meta


@pytest.fixture(scope="module")
def a7_matrix():
    tasks = [(c, s, v) for v in (18.0, 9.0)
             for c in ("Baseline", "DAC", "EOR") for s in SEEDS]
    out = {}
    meta_all = []
    t0 = time.perf_counter()
    with ProcessPoolExecutor(max_workers=4) as ex:
        for ctrl, v0, rep, meta in ex.map(_a7_run, tasks):
            out.setdefault((v0, ctrl), []).append(rep)
            meta_all.append(meta)
    means = {}
    for (v0, ctrl), reps in out.items():
        means[(v0, ctrl)] = {f: float(np.mean([getattr(r, f) for r in reps]))
                             for f in reps[0].FIELDS}
    return means, meta_all, time.perf_counter() - t0


def test_a7_directional_reproduction(a7_matrix):
    means, _, elapsed = a7_matrix
    bl, dac, eor = (means[(18.0, c)] for c in ("Baseline", "DAC", "EOR"))
    p18 = [means[(18.0, c)]["p_mean"] for c in ("Baseline", "DAC", "EOR")]
    p9 = [means[(9.0, c)]["p_mean"] for c in ("Baseline", "DAC", "EOR")]
    clauses = [
        ("LSS DEL EOR<BL", eor["del_lss"] < bl["del_lss"]),
        ("LSS DEL EOR<DAC", eor["del_lss"] < dac["del_lss"]),
        ("std(omega) EOR<BL", eor["std_omega"] < bl["std_omega"]),
        ("std(omega) DAC>BL", dac["std_omega"] > bl["std_omega"]),
        ("std(P) EOR<BL", eor["std_p"] < bl["std_p"]),
        ("std(P) DAC>BL", dac["std_p"] > bl["std_p"]),
        ("CTR EOR<BL", eor["ctr"] < bl["ctr"]),
        ("PT EOR<BL", eor["pitch_travel"] < bl["pitch_travel"]),
        ("PT DAC<BL", dac["pitch_travel"] < bl["pitch_travel"]),
        ("P parity 18 m/s",
         max(p18) - min(p18) < 0.01 * max(p18)),
        ("P parity 9 m/s",
         max(p9) - min(p9) < 0.01 * max(p9)),
    ]
    failed = [name for name, ok in clauses if not ok]
    ok = not failed and elapsed < 600.0
    assert report(
        "A7 directional reproduction of the comparison trends", ok,
        f"{len(clauses) - len(failed)}/{len(clauses)} clauses on 5-seed means"
        + (f"; failing: {failed}" if failed else "") + f"; {elapsed:.0f}s"), \
        (f"failing clauses: {failed}; the 9 m/s parity gap is structural "
         "for the accommodation controller (see notes/decisions ledger)")


def test_a8_numerical_hygiene(a7_matrix):
    _, meta_all, _ = a7_matrix
    # finiteness was asserted inside every sweep run
    sweep_ok = len(meta_all) == 30

    base = SimConfig(v0=18.0, duration=220.0, controller="EOR", seed=2)
    fine = SimConfig(v0=18.0, duration=220.0, controller="EOR", seed=2,
                     dt_phys=base.dt_phys / 2.0)
    la, lb = run(base), run(fine)
    worst = 0.0
    for name in ("omega_r", "phi", "theta", "x_t", "p_mech", "lss_torque"):
        sa = la.channels[name][la.window(100.0)]
        sb = lb.channels[name][lb.window(100.0)]
        rms_a, rms_b = np.sqrt(np.mean(sa**2)), np.sqrt(np.mean(sb**2))
        worst = max(worst, abs(rms_a - rms_b) / max(rms_a, rms_b))
    conv_ok = worst < 0.005

    c = SimConfig(v0=18.0, duration=220.0, controller="EOR", seed=4)
    r1, r2 = run(c), run(c)
    det_ok = all(np.array_equal(r1.channels[n], r2.channels[n])
                 for n in CHANNELS)
    ok = sweep_ok and conv_ok and det_ok
    assert report("A8 numerical hygiene", ok,
                  f"30/30 sweep runs finite, dt-halving RMS shift "
                  f"{100*worst:.3f}% (<0.5%), repeat bit-identical="
                  f"{det_ok}")
