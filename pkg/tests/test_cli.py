"""Command line interface: output shapes, oracles, exit codes."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from resolvent_asym.cli import main
from resolvent_asym.params import ProblemParams
from resolvent_asym.radial import Geometry, RadialSolution, eval_log_u


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [ln for ln in text.strip().splitlines() if "," in ln]
    keys = lines[0].split(",")
    return [dict(zip(keys, ln.split(","))) for ln in lines[1:]]


class TestEvalRadial:
    def test_ball_boundary_values(self, capsys):
        code, out, _ = run_cli(capsys, "eval-radial", "--N", "3", "--p", "2",
                               "--eps", "0.2", "--geometry", "ball",
                               "--R", "1.0", "--r", "0.5", "1.0")
        assert code == 0
        rows = parse_csv(out)
        assert list(rows[0]) == ["r", "log_u", "varadhan_residual"]
        boundary = rows[1]
        assert float(boundary["log_u"]) == pytest.approx(0.0, abs=1e-12)
        assert float(boundary["varadhan_residual"]) == pytest.approx(
            0.0, abs=1e-12)
        params = ProblemParams(n=3, p=2.0, eps=0.2)
        sol = RadialSolution(params, Geometry.ball(1.0))
        assert float(rows[0]["log_u"]) == pytest.approx(
            eval_log_u(sol, 0.5), rel=1e-10)

    def test_exterior_infinity_residual_zero(self, capsys):
        code, out, _ = run_cli(capsys, "eval-radial", "--N", "2", "--p",
                               "inf", "--eps", "0.1", "--geometry",
                               "exterior", "--R", "1.0",
                               "--r", "1.0", "1.5", "3.0")
        assert code == 0
        for row in parse_csv(out):
            r = float(row["r"])
            assert float(row["log_u"]) == pytest.approx(-(r - 1.0) / 0.1,
                                                        abs=1e-12)
            assert float(row["varadhan_residual"]) == pytest.approx(
                0.0, abs=1e-12)

    def test_invalid_exponent_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "eval-radial", "--N", "2", "--p", "1",
                               "--eps", "0.1", "--geometry", "ball",
                               "--R", "1.0", "--r", "0.5")
        assert code == 2
        assert "error" in err

    def test_bad_choice_exits_2(self):
        with pytest.raises(SystemExit) as ei:
            main(["eval-radial", "--N", "2", "--p", "2", "--eps", "0.1",
                  "--geometry", "annulus", "--R", "1.0", "--r", "0.5"])
        assert ei.value.code == 2

    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as ei:
            main([])
        assert ei.value.code == 2


class TestSpecialF:
    def test_alpha_one_closed_form(self, capsys):
        code, out, _ = run_cli(capsys, "special-f", "--sigma", "2.0",
                               "--alpha", "1.0")
        assert code == 0
        row = parse_csv(out)[0]
        assert float(row["f"]) == pytest.approx(0.5, rel=1e-10)
        assert float(row["log_f"]) == pytest.approx(math.log(0.5), rel=1e-10)

    def test_check_bessel_column(self, capsys):
        code, out, _ = run_cli(capsys, "special-f", "--sigma", "3.0",
                               "--alpha", "0.5", "--check-bessel")
        assert code == 0
        row = parse_csv(out)[0]
        assert abs(float(row["bessel_residual"])) < 1e-6

    def test_starved_refinement_exits_3(self, capsys):
        code, _, err = run_cli(capsys, "special-f", "--sigma", "5.0",
                               "--alpha", "0.7", "--rel-tol", "1e-15",
                               "--max-refinements", "1")
        assert code == 3
        assert "non-convergence" in err

    def test_negative_sigma_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "special-f", "--sigma", "-1.0",
                               "--alpha", "1.0")
        assert code == 2
        assert "error" in err


class TestBarriers:
    def test_infinity_closed_forms(self, capsys):
        code, out, _ = run_cli(capsys, "barriers", "--N", "2", "--p", "inf",
                               "--eps", "0.1", "--r-inner", "1.0",
                               "--r-outer", "1.0", "--tau", "0.0", "0.5",
                               "3.0")
        assert code == 0
        rows = parse_csv(out)
        sigma_i = 10.0
        for row in rows:
            tau = float(row["tau"])
            assert float(row["log_U"]) == pytest.approx(-tau, abs=1e-12)
            expected_v = (math.log(math.cosh(sigma_i - tau))
                          - math.log(math.cosh(sigma_i)))
            assert float(row["log_V"]) == pytest.approx(expected_v, rel=1e-9)
            assert float(row["log_V"]) >= float(row["log_U"]) - 1e-12

    def test_finite_p_ordering(self, capsys):
        code, out, _ = run_cli(capsys, "barriers", "--N", "3", "--p", "2.5",
                               "--eps", "0.25", "--r-inner", "0.8",
                               "--r-outer", "1.2", "--tau", "0.0", "1.0",
                               "4.0")
        assert code == 0
        for row in parse_csv(out):
            assert float(row["log_V"]) >= float(row["log_U"]) - 1e-12

    def test_negative_tau_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "barriers", "--N", "2", "--p", "2",
                               "--eps", "0.1", "--r-inner", "1.0",
                               "--r-outer", "1.0", "--tau", "-0.5")
        assert code == 2
        assert "tau" in err


class TestGeom:
    def test_ball_benchmark_ratio(self, capsys):
        code, out, _ = run_cli(capsys, "geom", "--kind", "ball",
                               "--domain-radius", "1.0", "--R", "0.5",
                               "--N", "2", "--s", "1e-4")
        assert code == 0
        row = parse_csv(out)[0]
        # cells carry 12 significant digits, so parsing loses the tail
        limit = float(row["predicted_limit"])
        assert limit == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-11)
        assert float(row["ratio"]) == pytest.approx(limit, rel=0.01)

    def test_exterior_benchmark_three_dim(self, capsys):
        code, out, _ = run_cli(capsys, "geom", "--kind", "exterior",
                               "--domain-radius", "1.0", "--R", "1.0",
                               "--N", "3", "--s", "1e-4")
        assert code == 0
        row = parse_csv(out)[0]
        assert float(row["predicted_limit"]) == pytest.approx(math.pi,
                                                              rel=1e-11)
        assert float(row["ratio"]) == pytest.approx(math.pi, rel=0.01)

    def test_invalid_level_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "geom", "--kind", "ball",
                               "--domain-radius", "1.0", "--R", "0.5",
                               "--N", "2", "--s", "-0.1")
        assert code == 2
        assert "error" in err


def qmean_config(tmp_path, **overrides):
    doc = {
        "params_grid": {"N": [2], "p": ["inf"], "q": [2.0]},
        "eps_sequence": {"start": 0.05, "factor": 0.5, "count": 2},
        "geometry": {"kind": "ball", "domain_radius": 1.0, "R": 0.5},
        "seed": 3,
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestQmeanCommand:
    def test_writes_csv(self, capsys, tmp_path):
        out_path = tmp_path / "rows.csv"
        cfg_path = qmean_config(tmp_path, output=str(out_path))
        code, out, _ = run_cli(capsys, "qmean", "--config", str(cfg_path))
        assert code == 0
        assert f"wrote 2 rows to {out_path}" in out
        text = out_path.read_text()
        assert text.startswith("n,p,q,eps,")
        assert text.endswith("\n")

    def test_reruns_byte_identical(self, capsys, tmp_path):
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        code, _, _ = run_cli(capsys, "qmean", "--config",
                             str(qmean_config(tmp_path, output=str(out_a))))
        assert code == 0
        code, _, _ = run_cli(capsys, "qmean", "--config",
                             str(qmean_config(tmp_path, output=str(out_b))))
        assert code == 0
        a = out_a.read_bytes()
        b = out_b.read_bytes()
        assert a.replace(b"a.json", b"x") == b.replace(b"b.json", b"x")

    def test_stdout_when_no_output(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "qmean", "--config",
                               str(qmean_config(tmp_path)))
        assert code == 0
        rows = parse_csv(out)
        assert len(rows) == 2
        assert rows[0]["path"] == "coarea"

    def test_missing_config_exits_2(self, capsys, tmp_path):
        missing = tmp_path / "nope.json"
        code, _, err = run_cli(capsys, "qmean", "--config", str(missing))
        assert code == 2
        assert "nope.json" in err

    def test_invalid_json_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run_cli(capsys, "qmean", "--config", str(bad))
        assert code == 2
        assert "not valid JSON" in err

    def test_unknown_config_key_exits_2(self, capsys, tmp_path):
        cfg_path = qmean_config(tmp_path, typo=1)
        code, _, err = run_cli(capsys, "qmean", "--config", str(cfg_path))
        assert code == 2
        assert "unknown config keys" in err


class TestRatesCommand:
    def test_degenerate_exterior_with_psi_table(self, capsys, tmp_path):
        out_path = tmp_path / "rates.csv"
        cfg_path = qmean_config(
            tmp_path,
            output=str(out_path),
            geometry={"kind": "exterior", "domain_radius": 1.0, "R": 1.0},
            eps_sequence={"start": 0.1, "factor": 0.1, "count": 4},
            modulus={"kind": "linear", "r": 1.0, "slope": 2.0})
        code, out, _ = run_cli(capsys, "rates", "--config", str(cfg_path))
        assert code == 0
        assert "fit N=2 p=inf model=eps" in out
        assert "degenerate=true" in out
        assert "eps,psi,eps_log_psi,eps_loglog_psi" in out
        assert "eps_log_psi_converges true" in out
        assert out_path.exists()

    def test_ball_finite_p_matched(self, capsys, tmp_path):
        cfg_path = qmean_config(
            tmp_path,
            params_grid={"N": [2], "p": [2.0], "q": [2.0]},
            eps_sequence={"start": 0.1, "factor": 0.1, "count": 4})
        code, out, _ = run_cli(capsys, "rates", "--config", str(cfg_path))
        assert code == 0
        assert "model=eps_log" in out
        assert "matched=true" in out
        assert "eps_log_psi_converges" not in out


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "resolvent_asym.cli",
                           "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("eval-radial", "special-f", "barriers", "geom", "qmean",
                 "rates"):
        assert name in proc.stdout
