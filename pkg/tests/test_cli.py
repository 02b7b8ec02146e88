import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from cvmagic import cli
from cvmagic.magic import classify
from cvmagic.numerics import NumericsConfig
from cvmagic.ssdmaps import QubitDensityMatrix, ssd
from cvmagic.states import psi_eval, state_from_json
from cvmagic.sweep import SweepSpec, optimize_rom, run_sweep, write_csv
from cvmagic.wigner import wln

VACUUM = '{"family":"gaussian","params":{"zeta":0,"Theta":0,"s_q":0,"s_p":0}}'

GOLDEN_PANEL = [
    VACUUM,
    '{"family":"gaussian","params":{"zeta":0.26,"Theta":0.785398163,"s_q":0.1,"s_p":-0.2}}',
    '{"family":"gkp","params":{"Delta":0.3,"theta":0.955316618,"phi":0.785398163}}',
    '{"family":"gkp","params":{"Delta":0.0,"theta":1.0,"phi":0.2}}',
    '{"family":"cat","params":{"r":1.2,"Phi":0.4}}',
    '{"family":"cubic","params":{"gamma":0.3,"zeta":0.0}}',
    '{"family":"mixture","params":{"components":[{"weight":0.4,"state":' + VACUUM + '},'
    '{"weight":0.6,"state":{"family":"cat","params":{"r":1.0}}}]}}',
]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("state", GOLDEN_PANEL)
@pytest.mark.parametrize("kind", ["stabilizer", "modular", "gaussian_modular"])
def test_ssd_golden(capsys, state, kind):
    code, out, _ = run(capsys, "ssd", state, "--map", kind)
    assert code == 0
    model = state_from_json(json.loads(state))
    q = ssd(model, kind)
    got = json.loads(out)
    assert got["qubit"] == q.to_json()
    assert got["magic"] == classify(q).to_json()


def test_ssd_vacuum_rom(capsys):
    code, out, _ = run(capsys, "ssd", VACUUM)
    assert code == 0
    assert json.loads(out)["magic"]["rom"] == pytest.approx(1.160, abs=5e-3)


def test_cubic_gm_differs_from_modular(capsys):
    state = '{"family":"cubic","params":{"gamma":0.3,"zeta":0}}'
    _, a, _ = run(capsys, "ssd", state, "--map", "gaussian_modular")
    _, b, _ = run(capsys, "ssd", state, "--map", "modular")
    qa, qb = json.loads(a)["qubit"], json.loads(b)["qubit"]
    assert max(abs(qa[k] - qb[k]) for k in ("rho00", "rho01_re", "rho01_im")) > 1e-3


def test_ssd_csv_format(capsys):
    code, out, _ = run(capsys, "ssd", VACUUM, "--format", "csv")
    header, row = out.strip().splitlines()
    assert header.startswith("rho00,rho11,rho01_re,rho01_im,map,rom,rom_raw")
    assert row.split(",")[4] == "stabilizer"
    assert "true" in row.split(",") or "false" in row.split(",")


def test_magic_golden(capsys):
    qj = {"rho00": 0.7, "rho11": 0.3, "rho01_re": 0.3, "rho01_im": -0.2}
    code, out, _ = run(capsys, "magic", json.dumps(qj))
    assert code == 0
    q = QubitDensityMatrix.from_json(qj)
    assert json.loads(out) == {"qubit": q.to_json(), "magic": classify(q).to_json()}


def test_state_eval_golden(capsys):
    state = GOLDEN_PANEL[4]
    code, out, _ = run(capsys, "state-eval", state, "--x", "0", "0.5", "-1.25")
    assert code == 0
    got = json.loads(out)
    psi = psi_eval(state_from_json(json.loads(state)), np.array([0.0, 0.5, -1.25]))
    assert got["psi_re"] == psi.real.tolist() and got["psi_im"] == psi.imag.tolist()


def test_state_eval_grid_csv(capsys):
    code, out, _ = run(capsys, "state-eval", VACUUM, "--grid", "-1", "1", "5", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "x,psi_re,psi_im" and len(lines) == 6
    x, re_, im = lines[3].split(",")
    assert float(x) == 0 and float(re_) == pytest.approx(math.pi ** -0.25, rel=1e-8)


def test_wln_golden(capsys):
    state = '{"family":"cat","params":{"r":1.5}}'
    code, out, _ = run(capsys, "wln", state)
    assert code == 0
    assert json.loads(out)["wln"] == wln(state_from_json(json.loads(state)))


def test_wln_bad_grid_is_coverage_error(capsys):
    code, _, err = run(capsys, "wln", VACUUM, "--grid",
                       '{"q_max":1,"p_max":1,"nq":64,"np":64,"x_cutoff":8}')
    assert code == 3 and "boundary" in err


def sweep_spec_json(**kw):
    spec = {"family": "gkp", "fixed": {"phi": math.pi / 4},
            "axes": [{"name": "theta", "lo": 0.0, "hi": math.pi, "steps": 5},
                     {"name": "Delta", "lo": 0.2, "hi": 0.6, "steps": 3}],
            "map": "stabilizer"}
    spec.update(kw)
    return json.dumps(spec)


def test_sweep_golden_and_summary(capsys):
    spec = sweep_spec_json()
    code, out, err = run(capsys, "sweep", spec, "--threads", "1")
    assert code == 0
    lib = SweepSpec.from_json(json.loads(spec))
    assert out == write_csv(run_sweep(lib, threads=1), lib)
    assert err.startswith("grid 5x3 (15 points): max rom_raw")


def test_sweep_trivial_grid(capsys):
    spec = json.dumps({"family": "gaussian", "fixed": {}, "axes": [{"name": "zeta", "lo": 0, "hi": 1, "steps": 2}]})
    code, out, _ = run(capsys, "sweep", spec)
    assert code == 0 and len(out.strip().splitlines()) == 3


def test_sweep_partial_failures_keep_exit_zero(capsys):
    spec = json.dumps({"family": "cat", "fixed": {"logical_label": "odd"},
                       "axes": [{"name": "r", "lo": 0, "hi": 1, "steps": 3}]})
    code, out, err = run(capsys, "sweep", spec)
    assert code == 0
    assert "DegenerateStateError" in out and "1 errors" in err


def test_sweep_json_format(capsys):
    code, out, _ = run(capsys, "sweep", sweep_spec_json(), "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data["rows"]) == 15 and data["spec"]["map"] == "stabilizer"


def test_sweep_file_hash_deterministic(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(sweep_spec_json())
    hashes = set()
    for i, threads in enumerate(["1", "1", None]):
        out = tmp_path / f"out{i}.csv"
        argv = ["sweep", str(spec), "--out", str(out)] + (["--threads", threads] if threads else [])
        assert cli.main(argv) == 0
        hashes.add(hashlib.sha256(out.read_bytes()).hexdigest())
    capsys.readouterr()
    assert len(hashes) == 1


def test_optimize_golden(capsys):
    problem = {"family": "cat", "fixed": {}, "bounds": {"r": [0.5, 2.5], "Phi": [0, 1.5707963]}}
    code, out, _ = run(capsys, "optimize", json.dumps(problem), "--starts", "3", "--threads", "1")
    assert code == 0
    lib = optimize_rom("cat", {}, {"r": (0.5, 2.5), "Phi": (0, 1.5707963)}, starts=3, threads=1)
    assert json.loads(out) == lib.to_json()
    assert lib.best_rom_raw == pytest.approx(1.39, abs=0.02)


def test_optimize_degenerate_bounds(capsys):
    problem = {"family": "gaussian", "fixed": {"s_q": 0, "s_p": 0},
               "bounds": {"zeta": [0, 0], "Theta": [0, 0]}}
    code, out, _ = run(capsys, "optimize", json.dumps(problem))
    got = json.loads(out)
    assert code == 0 and got["converged"] is True and got["evaluations"] == 1


def test_optimize_csv(capsys):
    problem = {"family": "gaussian", "bounds": {"zeta": [0, 0.5]}}
    code, out, _ = run(capsys, "optimize", json.dumps(problem), "--starts", "2", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "zeta,best_rom_raw,evaluations,starts,converged"


def test_config_file_and_out(tmp_path, capsys):
    cfg = {"numerics": {"nodes_per_cell": 24}, "format": "csv", "output_path": str(tmp_path / "o.csv")}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "--config", str(path), "ssd", VACUUM)
    assert code == 0 and out == ""
    text = (tmp_path / "o.csv").read_text()
    q = ssd(state_from_json(json.loads(VACUUM)), "stabilizer", NumericsConfig(nodes_per_cell=24))
    assert text.splitlines()[1].split(",")[0] == format(q.rho00, ".9g")


def test_flags_after_subcommand_override_config(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"format": "csv"}))
    code, out, _ = run(capsys, "ssd", VACUUM, "--config", str(path), "--format", "json")
    assert code == 0 and json.loads(out)["qubit"]


def test_state_from_stdin(monkeypatch, capsys):
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO(VACUUM))
    code, out, _ = run(capsys, "ssd", "-")
    assert code == 0 and "magic" in json.loads(out)


@pytest.mark.parametrize("argv", [
    ["ssd", "{not json"],
    ["ssd", '{"family":"gaussian","params":{"zeta":"x"}}'],
    ["ssd", '{"family":"nope"}'],
    ["ssd", '{"family":"gaussian","params":{"bogus":1}}'],
    ["ssd", "/nonexistent/state.json"],
    ["magic", '{"rho00":0.5}'],
    ["magic", '{"rho00":0.9,"rho11":0.9,"rho01_re":0,"rho01_im":0}'],
    ["magic", "[1, 2]"],
    ["sweep", '{"family":"gaussian","axes":[{"name":"zeta","lo":1,"hi":0,"steps":3}]}'],
    ["optimize", '{"family":"gaussian"}'],
    ["optimize", '{"family":"gaussian","bounds":{"zeta":[0]}}'],
    ["ssd", VACUUM, "--threads", "0"],
    ["ssd", VACUUM, "--config", '{"bogus":1}'],
    ["ssd", VACUUM, "--config", '{"numerics":{"nodes_per_cell":-3}}'],
])
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_numerics_error_exit_3(capsys):
    code, _, err = run(capsys, "ssd", '{"family":"cat","params":{"r":0,"logical_label":"odd"}}')
    assert code == 3 and err.startswith("numerics error:")


def test_gkp_wln_below_limit_exit_3(capsys):
    code, _, _ = run(capsys, "wln", '{"family":"gkp","params":{"Delta":0.1}}')
    assert code == 3


def test_optimization_error_exit_4(capsys):
    problem = {"family": "cat", "fixed": {"logical_label": "odd"}, "bounds": {"r": [0, 0]}}
    code, _, err = run(capsys, "optimize", json.dumps(problem))
    assert code == 4 and "optimization failed" in err


def test_nonconverged_optimize_exit_4(capsys, monkeypatch):
    from cvmagic import sweep as sweep_mod
    real = sweep_mod.optimize_rom

    def not_converged(*a, **k):
        res = real(*a, **k)
        return sweep_mod.OptimizeResult(res.best_params, res.best_rom_raw, res.evaluations,
                                        res.starts, False, res.start_values)

    monkeypatch.setattr(cli, "optimize_rom", not_converged)
    problem = {"family": "gaussian", "bounds": {"zeta": [0, 0.5]}}
    code, out, _ = run(capsys, "optimize", json.dumps(problem), "--starts", "1")
    assert code == 4 and json.loads(out)["converged"] is False


def test_help_documents_everything(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    out = capsys.readouterr().out
    assert exc.value.code == 0
    for word in ("state-eval", "ssd", "magic", "sweep", "optimize", "wln",
                 "--config", "--out", "--format", "--threads"):
        assert word in out


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "cvmagic", "ssd", VACUUM], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["magic"]["rom"] == pytest.approx(1.160, abs=5e-3)
