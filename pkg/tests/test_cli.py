import json

import numpy as np
import pytest

from kldro import cli, cones
from kldro.harness import DistributionSpec, ExperimentConfig, NewsvendorProblem


def write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def single_scenario(tmp_path, **extra):
    data = {"problem": "newsvendor", "costs": {"c": 1, "c_b": 2, "c_h": 1},
            "demand": {"support": [5], "probs": [1]}, "epsilon": 0.3}
    data.update(extra)
    return write(tmp_path / "nv.json", data)


def test_solve_single_scenario(tmp_path, capsys):
    assert cli.main(["solve", "--config", single_scenario(tmp_path)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "status Optimal" in out
    assert "y*=5 objective=5.000000" in out
    assert "p*[0]" in out


def test_solve_writes_program_under_out(tmp_path, capsys):
    out_dir = tmp_path / "dump"
    code = cli.main(["solve", "--config", single_scenario(tmp_path), "--out", str(out_dir)])
    assert code == cli.EXIT_OK
    assert sorted(p.parent for p in out_dir.rglob("*") if p.is_file()) == [out_dir, out_dir]


def test_solve_prints_worst_case_distribution(tmp_path, capsys):
    path = write(tmp_path / "nv.json", {
        "problem": "newsvendor", "costs": {"c": 1, "c_b": 2, "c_h": 1},
        "demand": {"support": [2, 6], "probs": ["1/2", "1/2"]}, "theta": 0.5})
    assert cli.main(["solve", "--config", path]) == cli.EXIT_OK
    line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("p*[0]")][0]
    probs = [float(tok.split(":")[1]) for tok in line.split()[3:]]
    assert sum(probs) == pytest.approx(1.0, abs=1e-5)


def test_solve_ufl_line_file(tmp_path, capsys):
    from kldro.apps.instances import line_ufl_text

    data = json.loads(line_ufl_text())
    data["demands"] = [{"support": [1, 2, 3], "probs": [0.2, 0.5, 0.3]}] * 12
    data["theta"] = 0.05
    assert cli.main(["solve", "--config", write(tmp_path / "ufl.json", data)]) == cli.EXIT_OK
    assert "y*=" in capsys.readouterr().out


def test_infeasible_first_stage(tmp_path, capsys):
    path = single_scenario(tmp_path, constraints=[
        {"coeffs": [1], "sense": ">=", "rhs": 3},
        {"coeffs": [1], "sense": "<=", "rhs": 2}])
    assert cli.main(["solve", "--config", path]) == cli.EXIT_FAILURE
    assert "status PrimalInfeasible" in capsys.readouterr().out


@pytest.mark.parametrize("text,needle", [
    ('{"problem": "newsvendor",\n "costs": {', "line 2"),
    ('{"problem": "newsvendor", "demand": {"support": [1], "probs": [1]}}', "costs"),
    ('{"problem": "newsvendor", "costs": {"c": 1, "c_b": 2, "c_h": 1},'
     ' "demand": {"support": [1, 2], "probs": [0.5, 0.4]}}', "demand"),
    ('{"problem": "cutting-stock", "costs": {}}', "problem"),
])
def test_malformed_instance_exits_2(tmp_path, capsys, text, needle):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert cli.main(["solve", "--config", str(path)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "configuration error" in err and needle in err


def test_missing_config_exits_2(tmp_path, capsys):
    assert cli.main(["solve"]) == cli.EXIT_CONFIG
    assert cli.main(["experiment", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG
    assert cli.main(["solve", "--config", single_scenario(tmp_path), "--tol", "-1"]) == cli.EXIT_CONFIG


def test_bad_flags_are_rejected():
    with pytest.raises(SystemExit) as exc:
        cli.main(["experiment", "--thetas", "a,b"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        cli.main([])


def experiment_file(tmp_path, **kw):
    cfg = ExperimentConfig(NewsvendorProblem(), DistributionSpec("Binomial", (10, 0.5)),
                           seed=3, output_dir=str(tmp_path / "results"), **kw)
    return write(tmp_path / "exp.json", cfg.to_dict())


def test_experiment_writes_six_row_table(tmp_path, capsys):
    assert cli.main(["experiment", "--config", experiment_file(tmp_path)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "seed 3" in out and "max KL" in out
    table = tmp_path / "results" / "newsvendor_binomial_table.csv"
    assert len(table.read_text().splitlines()) == 7
    assert (tmp_path / "results" / "newsvendor_binomial_boxplot.csv").exists()


def test_experiment_overrides(tmp_path, capsys):
    out = tmp_path / "other"
    code = cli.main(["experiment", "--config", experiment_file(tmp_path), "--seed", "8",
                     "--thetas", "0,0.2", "--out", str(out)])
    assert code == cli.EXIT_OK
    assert "seed 8" in capsys.readouterr().out
    lines = (out / "newsvendor_binomial_table.csv").read_text().splitlines()
    assert [l.split(",")[0] for l in lines[1:]] == ["0.00", "0.20"]
    assert not (tmp_path / "results").exists()


def test_experiment_invalid_override_exits_2(tmp_path):
    assert cli.main(["experiment", "--config", experiment_file(tmp_path),
                     "--thetas", "0.2,0.1"]) == cli.EXIT_CONFIG


def test_experiment_is_deterministic(tmp_path):
    path = experiment_file(tmp_path, thetas=(0.0, 0.1))
    files = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli.main(["experiment", "--config", path, "--out", str(out)]) == cli.EXIT_OK
        files.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert files[0] == files[1] and len(files[0]) == 3


def test_reproduce_configs():
    cfgs = cli.bundled_configs()
    assert len(cfgs) == 6
    assert {c.seed for c in cfgs} == {cli.DEFAULT_SEED}
    assert len({c.name for c in cfgs}) == 6
    assert all(c.R == 100 and len(c.thetas) == 6 for c in cfgs)


def test_reproduce_runs_all_six(tmp_path, capsys):
    code = cli.main(["reproduce", "--thetas", "0,0.05", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    tables = sorted(p.name for p in tmp_path.glob("*_table.csv"))
    assert len(tables) == 6
    ufl = (tmp_path / "ufl_poisson_table.csv").read_text().splitlines()
    assert ufl[2].startswith('0.05,"1,0,1"')


def test_check_passes(capsys):
    assert cli.main(["check"]) == cli.EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert sum(l.startswith("PASS") for l in out) >= 4
    assert out[-1].endswith("0 failed")


def test_check_detects_tampered_barrier_constant(monkeypatch, capsys):
    bad = np.array(cones.EXP_CENTRAL_POINT, dtype=float) * 1.01
    monkeypatch.setattr(cones, "EXP_CENTRAL_POINT", bad)
    assert cli.main(["check"]) == cli.EXIT_FAILURE
    assert "FAIL exp-cone barrier" in capsys.readouterr().out
