import subprocess
import sys

import numpy as np
import pytest

from report_plots.render import (COLORS, PlotSpec, RenderError, build_psd,
                                 main, parse_inputs, read_csv_columns, render)


def write_log_csv(path, n=200, scale=1.0):
    t = np.arange(n) * 0.0125
    header = ("time_s,v_x,v_preview,omega_r,omega_g,phi,theta,theta_dot,"
              "x_t,x_t_dot,m_g,theta_c,p_mech,lss_torque,m_yt,m_yb,e,a1,a2,a3")
    cols = [t] + [scale * (i + 1) * np.sin(0.1 * t + i)
                  for i in range(len(header.split(",")) - 1)]
    np.savetxt(path, np.column_stack(cols), fmt="%.8g", delimiter=",",
               header=header, comments="")
    return path


def write_metrics_csv(path):
    lines = ["controller,v0,seed,region,del_m_yt,del_m_yb,del_lss,std_p,"
             "std_omega,std_lambda,p_mean,ctr,pitch_travel"]
    for ctrl, base in (("Baseline", 3.0), ("DAC", 2.0), ("EOR", 1.0)):
        for v0, region in ((9.0, "Region2"), (18.0, "Region3")):
            for seed in (1, 2):
                vals = [base * (k + 1) * (1 + 0.01 * seed) for k in range(9)]
                lines.append(f"{ctrl},{v0},{seed},{region}," +
                             ",".join(f"{v:.6g}" for v in vals))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_psd_csv(path):
    f = np.logspace(-3, 0.7, 300)
    header = "freq_hz,psd_m_yt,psd_m_yb,psd_lss_torque,psd_p_mech,psd_omega_r"
    cols = [f] + [1e3 * f ** (-5.0 / 3.0) * (i + 1) for i in range(5)]
    np.savetxt(path, np.column_stack(cols), fmt="%.8g", delimiter=",",
               header=header, comments="")
    return path


class TestKinds:
    def test_timeseries(self, tmp_path):
        inputs = {c: str(write_log_csv(tmp_path / f"{c}.csv", scale=s))
                  for c, s in (("Baseline", 1.0), ("DAC", 1.1), ("EOR", 0.9))}
        out = render(PlotSpec("timeseries", inputs, str(tmp_path / "ts.svg")))
        assert (tmp_path / "ts.svg").stat().st_size > 0

    def test_del_bars(self, tmp_path):
        path = write_metrics_csv(tmp_path / "metrics.csv")
        render(PlotSpec("del_bars", {"": str(path)}, str(tmp_path / "d.svg")))
        assert (tmp_path / "d.svg").stat().st_size > 0

    def test_actuation(self, tmp_path):
        path = write_metrics_csv(tmp_path / "metrics.csv")
        render(PlotSpec("actuation", {"": str(path)}, str(tmp_path / "a.png")))
        assert (tmp_path / "a.png").stat().st_size > 0

    def test_psd_axis_band(self, tmp_path):
        inputs = {c: str(write_psd_csv(tmp_path / f"{c}.csv"))
                  for c in ("Baseline", "EOR")}
        spec = PlotSpec("psd", inputs, str(tmp_path / "p.svg"))
        fig = build_psd(spec)
        ax = fig.axes[0]
        assert ax.get_xscale() == "log" and ax.get_yscale() == "log"
        assert ax.get_xlim() == pytest.approx((0.01, 1.0))
        import matplotlib.pyplot as plt
        plt.close(fig)
        render(spec)
        assert (tmp_path / "p.svg").stat().st_size > 0


class TestContract:
    def test_color_convention(self):
        assert COLORS == {"Baseline": "green", "DAC": "blue", "EOR": "red"}

    def test_idempotent_svg(self, tmp_path):
        inputs = {"EOR": str(write_log_csv(tmp_path / "log.csv"))}
        s1 = render(PlotSpec("timeseries", inputs, str(tmp_path / "a.svg")))
        s2 = render(PlotSpec("timeseries", inputs, str(tmp_path / "b.svg")))
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()

    def test_missing_channel_lists_available(self, tmp_path):
        path = write_log_csv(tmp_path / "log.csv")
        spec = PlotSpec("timeseries", {"EOR": str(path)},
                        str(tmp_path / "x.svg"), channels=("no_such",))
        with pytest.raises(RenderError, match="available"):
            render(spec)

    def test_empty_csv_clean_error(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(RenderError, match="empty"):
            read_csv_columns(empty)

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(RenderError):
            PlotSpec("scatter", {"": "x"}, "y")

    def test_cli_error_exit(self, tmp_path):
        rc = main(["--kind", "del_bars", "--in", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path / "o.svg")])
        assert rc == 1

    def test_cli_ok(self, tmp_path):
        path = write_metrics_csv(tmp_path / "metrics.csv")
        rc = main(["--kind", "del_bars", "--in", str(path),
                   "--out", str(tmp_path / "o.svg")])
        assert rc == 0

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "report_plots.render",
                               "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "timeseries" in proc.stdout

    def test_parse_inputs(self):
        assert parse_inputs(["EOR=a.csv", "b.csv"]) == {"EOR": "a.csv",
                                                        "": "b.csv"}
