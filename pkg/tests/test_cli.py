import json

import pytest

from fidsus.cli import main
from fidsus.config import ConfigError, SweepConfig, load_config, parse_config_text
from fidsus.sweep import CSV_TAG, COLUMNS, format_csv, read_csv, run_sweep

CONFIG = """\
# small Hubbard sweep
model = hubbard
L = 4, 6
boundary = auto
u_min = 0.0
u_max = 1.0
u_step = 0.5
dlambda = 0.04, 0.05
routes = finite_difference, krylov_integral
seed = 7
"""


def test_parse_config_text():
    values = parse_config_text(CONFIG)
    assert values["L"] == (4, 6)
    assert values["grid_min"] == 0.0 and values["grid_step"] == 0.5
    assert values["routes"] == ("finite_difference", "krylov_integral")
    cfg = load_config(overrides=values)
    assert cfg.grid_points() == [0.0, 0.5, 1.0]


def test_grid_points_rounding():
    cfg = SweepConfig(L=(4,), grid_min=0.0, grid_max=0.3, grid_step=0.1)
    assert cfg.grid_points() == [0.0, 0.1, 0.2, 0.3]


@pytest.mark.parametrize("text", [
    "model = potts\nL = 4\ngrid = 1",
    "L = 4\ngrid = 1\nroutes = temperature",
    "L = 4\ngrid = 1\ndlambda = -0.1",
    "L = 4\nu_min = 1\nu_max = 0\nu_step = 0.1",
    "L = four\ngrid = 1",
    "L = 4\ngrid = 1\ncolour = blue",
    "just some words",
    "model = ising2d\ngrid = 0.1\ndos = wang_landau\nroutes = field",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        load_config(overrides=parse_config_text(text))


def test_sweep_rows_and_schema():
    cfg = load_config(overrides=parse_config_text(CONFIG))
    rows = run_sweep(cfg)
    # 2 sizes x 3 points x (2 finite-difference steps + 1 Krylov)
    assert len(rows) == 18
    assert all(r["status"] == "ok" for r in rows)
    assert all(r["wall_time"] == "" for r in rows)
    text = format_csv(rows)
    assert text.splitlines()[0] == CSV_TAG
    assert text.splitlines()[1] == ",".join(COLUMNS)
    fd = [r for r in rows if r["route"] == "finite_difference"]
    kr = [r for r in rows if r["route"] == "krylov_integral"]
    for a, b in zip(fd[::2], kr):
        assert float(a["chi_F"]) == pytest.approx(float(b["chi_F"]), rel=1e-5)


def _write(tmp_path, text=CONFIG):
    p = tmp_path / "sweep.cfg"
    p.write_text(text)
    return str(p)


def test_cli_sweep_deterministic_across_workers(tmp_path):
    cfg = _write(tmp_path)
    outs = []
    for w in (1, 4, 1):
        out = tmp_path / f"out{len(outs)}.csv"
        assert main(["sweep", "--config", cfg, "--workers", str(w), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_cli_partial_failure_exit_code(tmp_path, capsys):
    # L = 8 periodic at U = 0 is degenerate; U = 1 is fine
    cfg = _write(tmp_path, "L = 8\nboundary = periodic\ngrid = 0, 1\n")
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 1
    rows = read_csv(out)
    assert rows[0]["status"].startswith("error: DegenerateGroundStateError")
    assert rows[1]["status"] == "ok"
    assert "row failed" in capsys.readouterr().err


def test_cli_config_error_exit_code(tmp_path):
    out = tmp_path / "o.csv"
    cfg = _write(tmp_path, "L = 4\nu_min = 1\nu_max = 0\nu_step = 0.5\n")
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert main(["sweep", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_set_override(tmp_path):
    cfg = _write(tmp_path)
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", cfg, "--set", "L=4", "--set", "routes=spectral",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert {r["L"] for r in rows} == {"4"} and {r["route"] for r in rows} == {"spectral"}


def test_cli_chi_u0(tmp_path, capsys):
    out = tmp_path / "ff.csv"
    assert main(["chi-u0", "--L", "6", "10", "14", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["L"] for r in rows] == ["6", "10", "14"]
    assert {r["boundary"] for r in rows} == {"periodic"}
    assert "relative change" in capsys.readouterr().err


def test_cli_thermal(tmp_path):
    out, dos = tmp_path / "t.csv", tmp_path / "dos.txt"
    assert main(["thermal", "--lx", "3", "--ly", "3", "--beta-min", "0.2", "--beta-max", "0.4",
                 "--out", str(out), "--dos-out", str(dos)]) == 0
    rows = read_csv(out)
    assert len(rows) == 3 * 4
    assert {r["route"] for r in rows} == {"temperature", "temperature_fd", "field", "field_fd"}
    assert dos.read_text().startswith("# fidsus-dos v1")


def test_cli_validate_quick_and_fault(capsys):
    assert main(["validate", "--quick", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert all(r["passed"] for r in report)
    assert main(["validate", "--quick", "--inject-fault", "sign_flip"]) == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out and "krylov_exact_subspace_L4" in captured.err
