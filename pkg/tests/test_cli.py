from __future__ import annotations

import io
import json
import subprocess
import sys

import numpy as np
import pytest

from igcx import cli, kernels, validation


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return np.genfromtxt(io.StringIO("\n".join(lines)), delimiter=",", names=True)


def test_metric_reduced_at_zero_correlation(capsys):
    code, out, _ = run(["metric", "--model", "reduced3d", "--r", "0", "--sigma", "1"], capsys)
    assert code == 0
    res = json.loads(out)
    assert np.array_equal(np.array(res["metric"]), np.diag([1.0, 1.0, 4.0]))
    assert res["determinant"] == 4.0


def test_metric_full_with_quadrature(capsys):
    code, out, _ = run(["metric", "--model", "full4d", "--r", "0.5", "--sigma-x", "1", "--sigma-y", "1", "--check-quadrature"], capsys)
    assert code == 0
    assert json.loads(out)["max_deviation"] < 1e-6


def test_metric_diagonal_with_quadrature(capsys):
    code, out, _ = run(["metric", "--model", "diagonal", "--sigma-x", "2", "--sigma-y", "0.5", "--check-quadrature"], capsys)
    assert code == 0
    res = json.loads(out)
    assert np.allclose(np.diag(res["metric"]), [0.25, 0.5, 4.0, 8.0])
    assert res["max_deviation"] < 1e-6


def test_metric_bad_correlation(capsys):
    code, _, err = run(["metric", "--model", "reduced3d", "--r", "1.5", "--sigma", "1"], capsys)
    assert code == 2
    assert "-1 < r < 1" in err


def test_reduced_quadrature_check_reports_embedding_gap(capsys):
    # the equal-spread metric differs from the pulled-back bivariate metric off the diagonal when r != 0
    code, out, err = run(["metric", "--model", "reduced3d", "--r", "0.5", "--check-quadrature"], capsys)
    assert code == 3
    res = json.loads(out)
    assert res["max_deviation"] == pytest.approx(1 / 3, rel=1e-9)
    code, _, _ = run(["metric", "--model", "reduced3d", "--r", "0", "--check-quadrature"], capsys)
    assert code == 0


def test_metric_csv_format(capsys):
    code, out, _ = run(["metric", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "quantity,i,j,value"
    assert "\r" not in out


def test_curvature_analytic_and_fd(capsys):
    _, out, _ = run(["curvature", "--model", "reduced3d", "--mu-x", "2", "--sigma", "0.4", "--r", "-0.3"], capsys)
    assert json.loads(out)["scalar"] == pytest.approx(-1.5, abs=1e-12)
    _, out, _ = run(["curvature", "--model", "reduced3d", "--mode", "fd"], capsys)
    assert json.loads(out)["scalar"] == pytest.approx(-1.5, abs=1e-5)


def test_curvature_flat_hidden_model(capsys):
    code, out, _ = run(["curvature", "--model", "flat-test"], capsys)
    res = json.loads(out)
    assert code == 0 and res["scalar"] == 0.0 and res["christoffel"] == []
    assert not np.any(res["ricci"])
    help_text = cli.build_parser()[1]["curvature"].format_help()
    assert "flat-test" not in help_text


def test_curvature_full_model_needs_fd(capsys):
    code, _, err = run(["curvature", "--model", "full4d", "--mode", "analytic"], capsys)
    assert code == 2 and "--mode fd" in err
    code, out, _ = run(["curvature", "--model", "full4d"], capsys)
    assert code == 0 and json.loads(out)["mode"] == "fd"


def test_geodesic_both(capsys):
    code, out, _ = run(["geodesic", "--method", "both", "--r", "0.5", "--sigma0", "1", "--a1", "1", "--a2", "-1", "--tau-max", "10", "--steps", "1000"], capsys)
    assert code == 0
    d = _csv(out)
    assert len(d) == 1001
    assert d["sigma"][0] == 1.0
    assert max(d["abs_err_mu_x"].max(), d["abs_err_mu_y"].max(), d["abs_err_sigma"].max()) < 1e-6
    assert d["conserved_drift"].max() < 1e-8


def test_geodesic_zero_momentum_constant(capsys):
    code, out, _ = run(["geodesic", "--a1", "0", "--a2", "0", "--method", "closed"], capsys)
    d = _csv(out)
    for col in ("mu_x", "mu_y", "sigma", "dmu_x", "dmu_y", "dsigma"):
        assert np.all(d[col] == d[col][0])


def test_geodesic_deviation_exit(capsys, monkeypatch):
    from igcx import geodesics

    real = geodesics.integrate_geodesic

    def skewed(cfg, initial, *a, **k):
        path = real(cfg, initial, *a, **k)
        states = path.states.copy()
        states[:, 2] *= 1.001
        return geodesics.GeodesicPath(path.taus, states, path.conserved_drift)

    monkeypatch.setattr(geodesics, "integrate_geodesic", skewed)
    code, _, err = run(["geodesic"], capsys)
    assert code == 3 and "deviates" in err


def test_igc_defaults(capsys):
    code, out, err = run(["igc"], capsys)
    assert code == 0 and err == ""
    footer = json.loads([l for l in out.splitlines() if l.startswith("# ")][-1][2:])
    assert footer["fitted_exponent"] == pytest.approx(-1.0, abs=0.01)
    assert footer["asymptotic_constant"] == pytest.approx(1.2 * np.sqrt(2.0))
    d = _csv(out)
    assert len(d) == 500
    assert np.all(d["avg_vol"] > 0) and np.all(d["vol"] >= 0)


def test_igc_avg_matches_trapezoid_of_vol_column(capsys):
    code, out, _ = run(["igc", "--tau-min", "0.001", "--tau-max", "30", "--points", "30000", "--no-log-grid"], capsys)
    d = _csv(out)
    t, vol, avg = d["tau"], d["vol"], d["avg_vol"]
    # integral of vol between the first node and each node, from the CSV columns alone
    integral = kernels.cumulative_trapezoid(t, vol)
    from_avg = avg * t - avg[0] * t[0]
    np.testing.assert_allclose(integral[1:], from_avg[1:], rtol=1e-6)


def test_igc_rejects_r_outside_open_interval(capsys):
    assert run(["igc", "--r", "0"], capsys)[0] == 2
    assert run(["igc", "--r", "1"], capsys)[0] == 2


def test_igc_warns_on_short_grid(capsys):
    code, _, err = run(["igc", "--tau-max", "10"], capsys)
    assert code == 0 and "asymptotic" in err


def test_ratio_defaults(capsys):
    code, out, _ = run(["ratio"], capsys)
    d = _csv(out)
    assert code == 0 and len(d) == 999
    i = int(np.argmin(np.abs(d["r"] - 0.5)))
    assert d["r"][i] == pytest.approx(0.5, abs=1e-12)
    assert d["F"][i] == pytest.approx(0.6, abs=1e-12)
    assert abs(d["F"][0] - 1.0) < 1e-3 and d["F"][0] <= 1.0
    assert np.all(np.diff(d["F"]) <= 0)


@pytest.mark.parametrize("args", [["--r-min", "0.9", "--r-max", "0.1"], ["--r-min", "0"], ["--r-max", "1.2"], ["--points", "1"]])
def test_ratio_bad_range(capsys, args):
    assert run(["ratio", *args], capsys)[0] == 2


def test_out_file_manifest_and_replay(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert run(["igc", "--r", "0.3", "--points", "50", "--out", str(out)], capsys)[0] == 0
    manifest = json.loads((tmp_path / "curve.csv.manifest.json").read_text())
    assert manifest["command"] == "igc"
    assert manifest["parameters"]["r"] == 0.3
    assert manifest["tool_version"]
    assert "timestamp" in manifest and "seed" in manifest
    replay = tmp_path / "replay.csv"
    assert run(["igc", "--config", str(tmp_path / "curve.csv.manifest.json"), "--out", str(replay)], capsys)[0] == 0
    assert replay.read_bytes() == out.read_bytes()
    assert b"\r\n" not in out.read_bytes()


def test_csv_full_precision(tmp_path, capsys):
    out = tmp_path / "ratio.csv"
    run(["ratio", "--points", "7", "--out", str(out)], capsys)
    d = _csv(out.read_text())
    from igcx.complexity import compression_ratio

    for r, f in zip(d["r"], d["F"]):
        assert f == compression_ratio(r)


def test_config_flat_dict_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"r-min": 0.2, "r_max": 0.4, "points": 3}))
    _, out, _ = run(["ratio", "--config", str(cfg)], capsys)
    assert _csv(out)["r"].tolist() == pytest.approx([0.2, 0.3, 0.4])
    _, out, _ = run(["ratio", "--config", str(cfg), "--points", "5"], capsys)
    assert len(_csv(out)) == 5


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert run(["ratio", "--config", str(bad)], capsys)[0] == 2
    other = tmp_path / "m.json"
    other.write_text(json.dumps({"command": "igc", "parameters": {"r": 0.5}}))
    assert run(["ratio", "--config", str(other)], capsys)[0] == 2
    assert run(["ratio", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("IGCX_THREADS", "abc")
    assert run(["ratio", "--points", "3"], capsys)[0] == 2
    monkeypatch.setenv("IGCX_THREADS", "1")
    assert run(["ratio", "--points", "3"], capsys)[0] == 0


def test_unknown_flag_is_invalid_input(capsys):
    assert run(["ratio", "--bogus"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_validate_negative_control(monkeypatch, capsys):
    real = kernels.ricci_contract
    monkeypatch.setattr(kernels, "ricci_contract", lambda gamma, dgamma: -np.asarray(real(gamma, dgamma)))
    results = validation.run_checks()
    assert not results[0].passed
    code, out, _ = run(["validate"], capsys)
    assert code == 1
    assert "FAIL" in out.splitlines()[3]


def test_validate_report_header(capsys):
    code, out, _ = run(["validate"], capsys)
    assert code == 0
    assert "igcx 0.1.0" in out.splitlines()[0]
    assert "ode_tol=1e-11" in out and "fd_step_scale=" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "igcx.cli", "ratio", "--points", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "r,F"
