import json

import numpy as np
import pytest

from parosc import cli
from parosc.grids import GridSpec
from parosc.transform import GridFunction

SMALL = ["--grid.rho_halfwidth", "8", "--grid.rho_points", "32", "--grid.x_halfwidth", "10",
         "--grid.x_points", "64", "--hermite.max_degree", "12"]


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_info(capsys):
    code, out, _ = run(["info"], capsys)
    assert code == 0
    assert "grid.rho_points=256" in out
    assert "imaginary-power" in out


def test_usage_errors(capsys):
    assert run(["verify", "nonsense"], capsys)[0] == 2
    assert run(["--no.such.key", "1", "info"], capsys)[0] == 2
    assert run(["info", "--grid.rho_points", "7"], capsys)[0] == 2
    assert run(["--format", "xml", "info"], capsys)[0] == 2
    assert run(["apply", "--symbol", "csv:/nonexistent/file.csv"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_config_round_trip():
    cfg = cli.RunConfig.parse("seed = 5\ngrid.dim=2  # comment\n\nprobe.p_list=1.5,3\n")
    again = cli.RunConfig.parse(cfg.to_text())
    assert again.values == cfg.values
    assert again.seed() == 5 and again.grid().dim == 2 and again.p_list() == [1.5, 3.0]
    with pytest.raises(cli.UsageError):
        cli.RunConfig.parse("grid.unknown=1\n")
    with pytest.raises(cli.UsageError):
        cli.RunConfig.parse("just text\n")


def test_precedence_flag_over_file(tmp_path, capsys):
    conf = tmp_path / "run.cfg"
    conf.write_text("grid.x_points=90\nseed=4\n", encoding="utf-8")
    code, out, _ = run(["--config", str(conf), "--seed", "9", "info"], capsys)
    assert code == 0
    assert "grid.x_points=90" in out and "seed=9" in out


def test_verify_plancherel(capsys):
    code, out, _ = run(["verify", "plancherel"], capsys)
    assert code == 0
    assert "3/3 checks passed" in out


def test_apply_identity(tmp_path, capsys):
    src, dst = tmp_path / "f.csv", tmp_path / "g.csv"
    code, _, _ = run(SMALL + ["apply", "--symbol", "one", "--input", "random", "--out", str(src)], capsys)
    assert code == 0
    code, out, _ = run(SMALL + ["apply", "--symbol", "one", "--input", str(src), "--out", str(dst),
                                "--p", "1.5,2"], capsys)
    assert code == 0
    assert out.count("norm_f=") == 2
    spec = GridSpec(8.0, 32, 10.0, 64)
    f = GridFunction.from_csv(spec, src.read_text(encoding="utf-8"))
    g = GridFunction.from_csv(spec, dst.read_text(encoding="utf-8"))
    assert np.max(np.abs(f.values - g.values)) < 1e-10


def test_apply_heat_on_eigenfunction(tmp_path, capsys):
    dst = tmp_path / "g.csv"
    code, out, _ = run(SMALL + ["apply", "--symbol", "heat:t=0.5",
                                "--input", "eigenfunction:tau_bin=2,mu=1", "--out", str(dst)], capsys)
    assert code == 0
    lam = (np.pi * 2 / 8.0) ** 2 + 3
    fields = dict(item.split("=") for item in out.split())
    assert float(fields["norm_Tf"]) == pytest.approx(np.exp(-0.5 * lam) * float(fields["norm_f"]), rel=1e-10)


def test_require_certificate(tmp_path, capsys):
    table = tmp_path / "m.csv"
    rows = ["tau,k,re,im"] + [f"{t},0,{t},0" for t in range(0, 257)]
    table.write_text("\n".join(rows) + "\n", encoding="utf-8")
    argv = SMALL + ["apply", "--symbol", f"csv:{table}", "--require-certificate",
                    "--out", str(tmp_path / "o.csv")]
    assert run(argv, capsys)[0] == 3
    ok = SMALL + ["apply", "--symbol", "imaginary-power:gamma=1", "--require-certificate",
                  "--out", str(tmp_path / "o.csv")]
    assert run(ok, capsys)[0] == 0


def test_certify_json_deterministic(capsys):
    code, first, _ = run(["certify", "--symbol", "imaginary-power:gamma=2", "--certify.samples", "512"], capsys)
    assert code == 0
    _, second, _ = run(["certify", "--symbol", "imaginary-power:gamma=2", "--certify.samples", "512"], capsys)
    assert first == second
    report = json.loads(first)
    assert report["pass"] is True and report["seed"] == 0


def test_certify_one_csv_format(capsys):
    code, out, _ = run(["--format", "csv", "certify", "--symbol", "one", "--certify.samples", "256"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "key,value"
    assert "C_tau[1],0.0" in lines and "pass,True" in lines


def test_probe_kernel_bounds(tmp_path, capsys):
    argv = ["probe", "kernel-bounds", "--probe.samples", "200", "--probe.N", "1"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(argv + ["--out", str(a)], capsys)[0] == 0
    assert run(argv + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["seed"] == 0
    assert set(report["results"]) == {"heat_kernel_N0", "heat_kernel_N1", "multiplier_pointwise_N0",
                                      "multiplier_pointwise_N1", "multiplier_integral_N0",
                                      "multiplier_integral_N1"}


def test_probe_lp_equivalence(capsys):
    code, out, _ = run(SMALL + ["--probe.family_size", "4", "probe", "lp-equivalence"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["results"]["2.0"]["c2"] == pytest.approx(1.0, abs=1e-6)
