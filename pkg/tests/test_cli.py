import csv
import json

import numpy as np
import pytest

from hyperctrl.cli import main
from hyperctrl.fixtures import INTRO_TAU, intro_hyperbolic, steering_control
from hyperctrl.network import graph_to_dict, random_merge_graph
from hyperctrl.system import BoundaryState, system_to_dict

INTRO = {"K": [[0, 1], [1, 0]], "B": [[0], [1]], "delays": [1.0, INTRO_TAU]}


def write(path, payload):
    path.write_text(json.dumps(payload))
    return path


def ring_spec(gamma, weights=None):
    d = {"vertices": 2,
         "edges": [{"tail": 0, "head": 1, "speed": -1.0}, {"tail": 1, "head": 0, "speed": -1.0 / INTRO_TAU}],
         "gamma": gamma}
    if weights is not None:
        d["weights"] = weights
    return d


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_analyze_intro(tmp_path, capsys):
    spec = write(tmp_path / "intro.json", INTRO)
    out = tmp_path / "report.json"
    assert main(["analyze", "--input", str(spec), "--output", str(out)]) == 0
    assert "approximate: Controllable" in capsys.readouterr().out
    rep = json.loads(out.read_text())
    assert rep["approximate"]["verdict"] == "Controllable"
    assert rep["exact"]["notes"]


def test_analyze_without_control(tmp_path):
    spec = write(tmp_path / "noB.json", dict(INTRO, B=[[0], [0]]))
    out = tmp_path / "r.json"
    assert main(["analyze", "--input", str(spec), "--output", str(out)]) == 1
    p = json.loads(out.read_text())["approximate"]["argmin_p"]
    assert abs(complex(*p)) < 1e-6


def test_analyze_errors(tmp_path, capsys):
    spec = tmp_path / "cut.json"
    spec.write_text(json.dumps(INTRO)[:25])
    assert main(["analyze", "--input", str(spec)]) == 3
    assert "error" in capsys.readouterr().err
    assert main(["analyze", "--input", str(tmp_path / "missing.json")]) == 3
    assert main(["analyze", "--bogus"]) == 3
    assert main(["analyze", "--input", str(write(tmp_path / "a.json", INTRO)), "--q", "0.5"]) == 3


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERCTRL_OUTPUT_DIR", str(tmp_path / "env"))
    spec = write(tmp_path / "intro.json", INTRO)
    assert main(["analyze", "--input", str(spec)]) == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_exit_code_is_deterministic(tmp_path):
    spec = write(tmp_path / "intro.json", dict(INTRO, B=[[0], [0]]))
    codes = {main(["analyze", "--input", str(spec), "--output", str(tmp_path / f"r{i}.json")]) for i in range(2)}
    assert codes == {1}
    assert (tmp_path / "r0.json").read_text() != ""


def test_simulate_zero_data(tmp_path):
    spec = write(tmp_path / "intro.json", INTRO)
    out = tmp_path / "sim"
    assert main(["simulate", "--input", str(spec), "--horizon", "2.0", "--output", str(out),
                 "--resolution", "20"]) == 0
    rows = read_rows(out / "trajectory.csv")
    assert rows and all(float(r["value"]) == 0.0 for r in rows)


def test_simulate_intro_steering(tmp_path):
    rng = np.random.default_rng(5)
    hs = intro_hyperbolic()
    tau = [1.0, INTRO_TAU]
    start, target = BoundaryState.random(rng, tau), BoundaryState.random(rng, tau)
    u = steering_control(start, target)
    spec = write(tmp_path / "intro.json", system_to_dict(hs))
    init = write(tmp_path / "phi.json", {"components": [c.to_dict() for c in start]})
    ctrl = write(tmp_path / "u.json", {"components": [c.to_dict() for c in u]})
    out = tmp_path / "sim"
    assert main(["simulate", "--input", str(spec), "--initial", str(init), "--control", str(ctrl),
                 "--output", str(out), "--snapshot", "0.5"]) == 0
    rows = read_rows(out / "final_state.csv")
    err = max(abs(float(r["value"]) - float(target[int(r["component"])](float(r["s"])))) for r in rows)
    assert err < 1e-10
    assert read_rows(out / "pde_t0.5.csv")


def test_simulate_csv_initial_state(tmp_path):
    rng = np.random.default_rng(6)
    tau = [1.0, INTRO_TAU]
    spec = write(tmp_path / "intro.json", INTRO)
    a, b = tmp_path / "a", tmp_path / "b"
    init = write(tmp_path / "phi.json", {"components": [c.to_dict() for c in BoundaryState.random(rng, tau)]})
    assert main(["simulate", "--input", str(spec), "--initial", str(init), "--horizon", "0",
                 "--output", str(a)]) == 0
    # re-ingesting the exported state reproduces the same outputs
    assert main(["simulate", "--input", str(spec), "--initial", str(a / "final_state.csv"), "--horizon", "0",
                 "--output", str(b)]) == 0
    assert (a / "final_state.csv").read_text() == (b / "final_state.csv").read_text()


def test_simulate_errors(tmp_path):
    spec = write(tmp_path / "intro.json", INTRO)
    assert main(["simulate", "--input", str(spec), "--horizon", "1.0", "--resolution", "0"]) == 3
    ctrl = write(tmp_path / "u.json", {"components": [{"breakpoints": [0.0, 1.0], "values": [1.0]}]})
    assert main(["simulate", "--input", str(spec), "--control", str(ctrl), "--horizon", "2.0",
                 "--output", str(tmp_path / "x")]) == 3


def test_network_controllable(tmp_path, capsys):
    spec = write(tmp_path / "g.json", ring_spec([[0.0], [1.0]]))
    out = tmp_path / "n.json"
    assert main(["network", "--input", str(spec), "--output", str(out)]) == 0
    assert "approximate: Controllable" in capsys.readouterr().out
    assert json.loads(out.read_text())["approximate"]["certificates"]["cycles"]["sizes"] == [2]


def test_network_obstruction(tmp_path, capsys):
    g = random_merge_graph(np.random.default_rng(1))
    spec = write(tmp_path / "merge.json", graph_to_dict(g))
    assert main(["network", "--input", str(spec), "--output", str(tmp_path / "n.json")]) == 1
    assert '"obstruction"' in capsys.readouterr().out


def test_network_bad_weights(tmp_path, capsys):
    spec = write(tmp_path / "g.json", ring_spec([[0.0], [1.0]], weights=[[0, 0, 0.5], [1, 1, 1.0]]))
    assert main(["network", "--input", str(spec)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err[0]["kind"] == "normalization" and err[0]["vertex"] == 0


def test_verify_default_and_fault(capsys):
    assert main(["verify"]) == 0
    assert "13/13" in capsys.readouterr().out
    assert main(["verify", "--inject-fault"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_verify_unknown_flag():
    assert main(["verify", "--frobnicate"]) == 3


@pytest.mark.parametrize("argv", [["--help"], ["analyze", "--help"]])
def test_help(argv, capsys):
    assert main(argv) == 0
    assert "Usage" in capsys.readouterr().out
