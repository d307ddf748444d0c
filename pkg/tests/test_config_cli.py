import csv
import hashlib
import json
import subprocess
import sys

import pytest

from railcommute import cli
from railcommute.config import BUNDLED_TABLE2, apply_overrides, load_config, load_table2, parse_config, parse_time
from railcommute.core import TABLE2_COST, TABLE2_PARAMS
from railcommute.errors import ConfigError, ConfigParseError, ConfigValidationError

TABLE2 = str(BUNDLED_TABLE2)


# config


def test_bundled_table2_matches_constants():
    cfg = load_table2()
    assert _close(cfg.params, TABLE2_PARAMS)
    assert cfg.cost == TABLE2_COST
    assert cfg.demand.t_star == pytest.approx(4.0)
    assert cfg.demand.N_p == 30000
    assert cfg.a_c == 12
    assert cfg.dt == pytest.approx(1 / 60)
    assert cfg.demand_wt2.w_start == pytest.approx(3.5)
    assert cfg.demand_wt2.w_end == pytest.approx(4.5)


def _close(a, b):
    return all(getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-12) for f in a.__dataclass_fields__)


@pytest.mark.parametrize("text, hours", [("20s", 20 / 3600), ("1min", 1 / 60), ("4h", 4.0), ("240", 4.0), ("1.5 h", 1.5), ("30 sec", 30 / 3600)])
def test_parse_time(text, hours):
    assert parse_time(text) == pytest.approx(hours)


@pytest.mark.parametrize("text", ["", "4 days", "h"])
def test_parse_time_rejects(text):
    with pytest.raises(ValueError):
        parse_time(text)


def _text(**changes):
    lines = []
    for line in BUNDLED_TABLE2.read_text().splitlines():
        key = line.split("=", 1)[0].strip()
        if key in changes:
            value = changes.pop(key)
            if value is None:
                continue
            line = f"{key} = {value}"
        lines.append(line)
    lines += [f"{k} = {v}" for k, v in changes.items() if v is not None]
    return "\n".join(lines) + "\n"


def test_validation_error_names_rule():
    with pytest.raises(ConfigValidationError) as info:
        parse_config(_text(alpha="8"))
    assert "alpha > beta" in info.value.failures


def test_empty_file_lists_required_keys(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    with pytest.raises(ConfigParseError) as info:
        load_config(path)
    for key in ("l", "alpha", "t_star", "N_p", "a_c or inflow"):
        assert key in str(info.value)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.cfg")


@pytest.mark.parametrize("extra, line_no", [("bogus = 1", 1), ("just words", 1), ("l = 1.2\nl = 1.3", 2)])
def test_parse_errors_carry_line(extra, line_no):
    with pytest.raises(ConfigParseError) as info:
        parse_config(extra)
    assert info.value.line == line_no
    assert str(info.value).startswith(f"line {line_no}:")


def test_bad_value_reports_its_line():
    text = _text(tau="fast")
    with pytest.raises(ConfigParseError) as info:
        parse_config(text)
    expected = next(i for i, l in enumerate(text.splitlines(), 1) if l.startswith("tau"))
    assert info.value.line == expected


def test_inflow_segments():
    cfg = parse_config(_text(a_c=None, inflow="0min:8, 180min:14, 210min:10"))
    assert cfg.inflow.rates == (8.0, 14.0, 10.0)
    assert cfg.inflow.starts == pytest.approx((0.0, 3.0, 3.5))
    assert not cfg.is_constant_inflow


def test_invalid_inflow_segments():
    with pytest.raises(ConfigValidationError):
        parse_config(_text(a_c=None, inflow="0:8, 0:9"))


def test_resolved_text_round_trip():
    cfg = load_table2()
    assert parse_config(cfg.to_text()) == cfg


def test_overrides():
    cfg = apply_overrides(load_table2(), ["N_p=1000", "a_c=9"])
    assert cfg.demand.N_p == 1000
    assert cfg.a_c == 9
    with pytest.raises(ConfigParseError):
        apply_overrides(cfg, ["nonsense"])


# CLI


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def summary(path):
    return cli.read_summary(path / "summary.txt")


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert run("solve", "--config", TABLE2, "--case", "wt1", "--out", out) == cli.EXIT_OK
    return out


def test_solve_outputs(solved):
    s = summary(solved)
    assert float(s["tc_e"]) == pytest.approx(18.2, abs=0.05)
    assert s["pattern"] == "FCF"
    for key in ("t0_h", "tm_h", "ted_h", "sum_tdc", "sum_sdc", "sum_tc", "iterations"):
        assert key in s
    assert rows(solved / "trains.csv")[0] == cli.TRAINS_HEADER
    assert rows(solved / "curves.csv")[0] == cli.CURVES_HEADER


def test_nine_significant_digits(solved):
    body = rows(solved / "trains.csv")[1:]
    for row in body[:50]:
        for value in row[:-1]:
            digits = value.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(digits) <= 9


def test_manifest_complete(solved):
    manifest = json.loads((solved / "manifest.json").read_text())
    names = {e["name"] for e in manifest["files"]}
    assert names == {p.name for p in solved.iterdir()} - {"manifest.json"}
    for e in manifest["files"]:
        assert hashlib.sha256((solved / e["name"]).read_bytes()).hexdigest() == e["sha256"]
    assert manifest["diagnostics"]["converged"] is True


def test_deterministic_outputs(solved, tmp_path):
    assert run("solve", "--config", TABLE2, "--out", tmp_path) == 0
    for name in ("trains.csv", "curves.csv", "summary.txt", "config.resolved.cfg"):
        assert (tmp_path / name).read_bytes() == (solved / name).read_bytes()


def test_check_accepts_and_detects_tampering(solved, tmp_path, capsys):
    assert run("check", "--dir", solved) == cli.EXIT_OK
    for f in solved.iterdir():
        (tmp_path / f.name).write_bytes(f.read_bytes())
    lines = (tmp_path / "trains.csv").read_text().splitlines()
    parts = lines[100].split(",")
    parts[8] = str(float(parts[8]) + 500)
    lines[100] = ",".join(parts)
    (tmp_path / "trains.csv").write_text("\n".join(lines) + "\n")
    assert run("check", "--dir", tmp_path) == cli.EXIT_VALIDATION
    assert "checksum mismatch" in capsys.readouterr().out


def test_check_reverifies_physics(solved, tmp_path):
    # rewrite a row consistently with a fresh manifest: checksum passes, invariants fail
    for f in solved.iterdir():
        (tmp_path / f.name).write_bytes(f.read_bytes())
    lines = (tmp_path / "trains.csv").read_text().splitlines()
    parts = lines[100].split(",")
    parts[3] = str(float(parts[3]) + 0.01)
    lines[100] = ",".join(parts)
    data = ("\n".join(lines) + "\n").encode()
    (tmp_path / "trains.csv").write_bytes(data)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for e in manifest["files"]:
        if e["name"] == "trains.csv":
            e["sha256"] = hashlib.sha256(data).hexdigest()
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    problems = cli.check_directory(tmp_path)
    assert any(p.startswith("cost constancy") for p in problems)


def test_solve_wt2(tmp_path):
    assert run("solve", "--config", TABLE2, "--case", "wt2", "--out", tmp_path) == 0
    s = summary(tmp_path)
    assert s["converged"] == "true"
    assert float(s["t0_h"]) < 3.5 < float(s["tm_h"])
    assert run("check", "--dir", tmp_path) == 0


def test_solve_zero_demand(tmp_path):
    assert run("solve", "--config", TABLE2, "--set", "N_p=0", "--out", tmp_path) == 0
    assert rows(tmp_path / "trains.csv") == [cli.TRAINS_HEADER]
    s = summary(tmp_path)
    assert float(s["tc_e"]) == 0.0
    assert run("check", "--dir", tmp_path) == 0


def test_solve_infeasible_exit_code(tmp_path, capsys):
    assert run("solve", "--config", TABLE2, "--set", "a_c=15", "--out", tmp_path) == cli.EXIT_INFEASIBLE
    assert "train" in capsys.readouterr().err


def test_solve_nonconvergence_exit_code(tmp_path, monkeypatch):
    from railcommute import equilibrium

    monkeypatch.setattr(cli, "solve_wt1", lambda *a, **k: equilibrium.solve_wt1(*a, max_iter=2, **k))
    assert run("solve", "--config", TABLE2, "--out", tmp_path) == cli.EXIT_NONCONVERGED


def test_validation_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(_text(alpha="8"))
    assert run("solve", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_VALIDATION
    assert run("solve", "--config", tmp_path / "missing.cfg", "--out", tmp_path / "o") == cli.EXIT_VALIDATION


def test_usage_exit_codes(tmp_path):
    with pytest.raises(SystemExit) as info:
        run("solve")
    assert info.value.code == cli.EXIT_USAGE
    assert run("sweep", "--config", TABLE2, "--param", "mu", "--from", 1, "--to", 2, "--step", 1, "--out", tmp_path) == cli.EXIT_USAGE
    assert run("solve", "--config", TABLE2) == cli.EXIT_USAGE


def test_analytic_report(capsys):
    assert run("analytic", "--config", TABLE2) == 0
    out = cli.parse_summary_text(capsys.readouterr().out)
    assert float(out["zeta1"]) == pytest.approx(0.75)
    assert float(out["zeta2"]) == pytest.approx(1.3846, abs=1e-4)
    assert float(out["omega"]) == pytest.approx(0.4545, abs=1e-4)
    assert [round(float(out[k]), 2) for k in ("tc_ff_max", "tc_fcf_max", "tc_fccf_max")] == [8.39, 23.67, 25.17]
    assert out["pattern"] == "FCF"


def test_analytic_fcf_onset_earlier_for_higher_inflow(capsys):
    run("analytic", "--config", TABLE2, "--set", "a_c=15")
    high = cli.parse_summary_text(capsys.readouterr().out)
    run("analytic", "--config", TABLE2)
    base = cli.parse_summary_text(capsys.readouterr().out)
    assert float(high["n_p_ff"]) < float(base["n_p_ff"])


def test_analytic_rejects_varying_inflow(tmp_path):
    cfg = tmp_path / "seg.cfg"
    cfg.write_text(_text(a_c=None, inflow="0:8, 180:14"))
    assert run("analytic", "--config", cfg) == cli.EXIT_USAGE


def _sweep(tmp_path, *extra):
    out = tmp_path / "_".join(str(e) for e in extra)
    assert run("sweep", "--config", TABLE2, *extra, "--out", out) == 0
    table = rows(out / "sweep.csv")
    assert table[0] == cli.SWEEP_HEADER
    return table[1:]


def test_sweep_demand(tmp_path):
    body = _sweep(tmp_path, "--param", "Np", "--from", 5000, "--to", 40000, "--step", 5000)
    tcs = [float(r[3]) for r in body]
    assert all(b > a for a, b in zip(tcs, tcs[1:]))
    assert [r[4] for r in body][0] == "FF"


def test_sweep_inflow_crossover(tmp_path):
    low = _sweep(tmp_path, "--param", "Np", "--from", 10000, "--to", 30000, "--step", 20000)
    high = _sweep(tmp_path, "--set", "a_c=15", "--param", "Np", "--from", 10000, "--to", 30000, "--step", 20000)
    assert float(high[0][2]) < float(low[0][2])
    assert float(high[1][2]) > float(low[1][2])


def test_sweep_cost_parameters(tmp_path):
    beta = _sweep(tmp_path, "--param", "beta", "--from", 2, "--to", 10, "--step", 4)
    gamma = _sweep(tmp_path, "--param", "gamma", "--from", 21, "--to", 37, "--step", 4)
    b = [float(r[2]) for r in beta]
    g = [float(r[2]) for r in gamma]
    assert all(y > x for x, y in zip(b, b[1:]))
    assert all(y > x for x, y in zip(g, g[1:]))
    assert (b[-1] - b[0]) / 8 > (g[-1] - g[0]) / 16
    alpha = _sweep(tmp_path, "--param", "alpha", "--from", 12, "--to", 24, "--step", 3)
    a = [float(r[2]) for r in alpha]
    lowest = a.index(min(a))
    assert 0 < lowest < len(a) - 1


def test_optimize_coarse(tmp_path):
    out = tmp_path / "opt"
    assert run("optimize", "--config", TABLE2, "--a0", 18, "--step", 1, "--scenario", "S2:12,6.5", "--out", out) == 0
    assert rows(out / "surface.csv")[0] == cli.SURFACE_HEADER
    body = rows(out / "surface.csv")[1:]
    assert any(r[2] == "INF" for r in body)
    table = rows(out / "breakdown.csv")
    assert table[0] == cli.BREAKDOWN_HEADER
    assert [r[0] for r in table[1:]] == ["optimum", "S2"]
    assert float(table[2][-1]) > 0
    assert run("check", "--dir", out) == 0


def test_optimize_single_cell(tmp_path):
    out = tmp_path / "one"
    code = run("optimize", "--config", TABLE2, "--set", "N_p=1000", "--a0", 5, "--step", 10, "--out", out)
    assert code == cli.EXIT_INFEASIBLE
    assert rows(out / "surface.csv") == [cli.SURFACE_HEADER, ["10", "10", "INF"]]


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "railcommute", "--version"], capture_output=True, text=True)
    assert done.returncode == 0
    assert "railcommute" in done.stdout
