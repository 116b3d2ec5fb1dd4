import json

import pytest

from gmconsensus.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


X0 = "6.5,0.2,3.2,1,4.4"


def test_simulate_entropic(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, stdout, _ = run(capsys, "simulate", "--graph", "fig1b.edges", "--protocol", "entropic",
                          "--x0", X0, "--t-end", "200", "--out", str(out))
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0] == "consensus 2.4444"
    assert "am 3.0600" in lines and "gm 1.7886" in lines
    assert "am_w 3.5884" in lines and "gm_w 2.4444" in lines
    header = out.read_text().splitlines()[0]
    assert header == "t,x0,x1,x2,x3,x4,spread,conserved"


def test_simulate_scaling(capsys):
    code, stdout, _ = run(capsys, "simulate", "--graph", "fig1b.edges", "--protocol", "scaling",
                          "--x0", X0, "--t-end", "500")
    assert code == 0 and stdout.startswith("consensus 3.5884")


def test_simulate_uniform(capsys):
    code, stdout, _ = run(capsys, "simulate", "--graph", "complete:3", "--protocol",
                          "polynomial", "--x0", "2,2,2")
    assert code == 0 and stdout.startswith("consensus 2.0000")


def test_simulate_sampled_x0(capsys):
    code, stdout, _ = run(capsys, "simulate", "--graph", "complete:4", "--normalized",
                          "--protocol", "polynomial", "--x0", "sample:4,3", "--seed", "2",
                          "--t-end", "200")
    assert code == 0 and "am 4.0000" in stdout and "gm 3.0000" in stdout


def test_simulate_horizon(capsys):
    code, stdout, _ = run(capsys, "simulate", "--graph", "fig1b.edges", "--protocol", "scaling",
                          "--x0", X0, "--t-end", "0.5")
    assert code == 2 and stdout.startswith("horizon")


def test_graph_info(capsys, tmp_path):
    code, stdout, _ = run(capsys, "graph-info", "--graph", "fig1b.edges")
    info = json.loads(stdout)
    assert code == 0
    assert info["n"] == 5 and info["edges"] == 9
    assert info["balanced"] is False and info["strongly_connected"] is True
    assert info["perron"] == pytest.approx([0.2558, 0.1395, 0.3721, 0.0930, 0.1395], abs=1e-4)
    code, stdout, _ = run(capsys, "graph-info", "--graph", "triangle.edges")
    info = json.loads(stdout)
    assert info["balanced"] is True and info["perron"] == pytest.approx([1 / 3] * 3)


def test_solve_gm(capsys):
    code, stdout, _ = run(capsys, "solve-gm", "--x", X0)
    assert code == 0
    assert stdout.splitlines()[0] == "y* = 1.7886 * ones(5)"
    assert "am(y*) 1.7886" in stdout and "gm(x) 1.7886" in stdout
    code, stdout, _ = run(capsys, "solve-gm", "--x", "1,1")
    assert code == 0 and stdout.startswith("y* = 1.0000 * ones(2)")
    code, _, err = run(capsys, "solve-gm", "--x", "0.1,0.4")
    assert code == 1 and "not a consensus" in err


def test_experiment_ratio(capsys, tmp_path):
    out = tmp_path / "ratio.csv"
    code, stdout, _ = run(capsys, "experiment", "ratio", "--n", "5", "--trials", "10", "--seed",
                          "1", "--out", str(out))
    assert code == 0
    summary = json.loads(stdout)
    assert summary["trials"] == 10 and summary["upper_violations"] == 0
    assert len(out.read_text().splitlines()) == 11


def test_experiment_is_deterministic(capsys):
    args = ("experiment", "sweep", "--n", "2..4", "--trials", "2", "--seed", "5")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second and first.startswith("family,n,d")


def test_config_file_and_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "simulate", "graph": "fig1b.edges",
                               "protocol": "scaling", "x0": X0, "t_end": 500.0}))
    code, stdout, _ = run(capsys, "simulate", "--config", str(cfg))
    assert code == 0 and stdout.startswith("consensus 3.5884")
    code, stdout, _ = run(capsys, "simulate", "--config", str(cfg), "--protocol", "entropic")
    assert code == 0 and stdout.startswith("consensus 2.4444")


@pytest.mark.parametrize("argv, expected", [
    ([], 64),
    (["simulate", "--bogus"], 64),
    (["simulate", "--graph", "fig1b.edges", "--protocol", "nope", "--x0", X0], 64),
    (["simulate", "--graph", "fig1b.edges", "--x0", "1,2"], 64),
    (["simulate", "--graph", "fig1b.edges", "--x0", X0, "--dt", "-1"], 64),
    (["experiment", "regular", "--n", "6", "--d", "6"], 64),
    (["graph-info", "--graph", "does/not/exist.edges"], 66),
    (["simulate", "--graph", "complete:2", "--protocol", "entropic", "--x0=-1,2"], 1),
])
def test_exit_codes(capsys, argv, expected):
    assert main(argv) == expected


def test_malformed_graph_exit_65(tmp_path):
    bad = tmp_path / "bad.edges"
    bad.write_text("3\n0 1 x\n")
    assert main(["graph-info", "--graph", str(bad)]) == 65


def test_unwritable_output_exit_73(tmp_path):
    target = tmp_path / "missing" / "out.csv"
    assert main(["simulate", "--graph", "triangle.edges", "--x0", "1,2,3", "--out",
                 str(target)]) == 73


def test_config_errors(tmp_path):
    unknown = tmp_path / "u.json"
    unknown.write_text(json.dumps({"graph": "fig1b.edges", "colour": "red"}))
    assert main(["graph-info", "--config", str(unknown)]) == 64
    broken = tmp_path / "b.json"
    broken.write_text("{not json")
    assert main(["graph-info", "--config", str(broken)]) == 65
    assert main(["graph-info", "--config", str(tmp_path / "none.json")]) == 66
    wrong = tmp_path / "w.json"
    wrong.write_text(json.dumps({"command": "experiment sweep"}))
    assert main(["graph-info", "--config", str(wrong), "--graph", "fig1b.edges"]) == 64
