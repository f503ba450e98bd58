import json
import subprocess
import sys

import pytest

from nctransport.cli import main
from nctransport.instances import (builtin_names, load_instance,
                                   write_builtin)


@pytest.fixture(scope="module")
def instances(tmp_path_factory):
    root = tmp_path_factory.mktemp("instances")
    paths = {}
    for name in builtin_names():
        p = root / f"{name}.json"
        write_builtin(name, str(p))
        paths[name] = str(p)
    return paths


def run(argv):
    proc = subprocess.run([sys.executable, "-m", "nctransport.cli"] + argv,
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def test_instance_loading(instances):
    inst = load_instance(instances["two_point"])
    assert inst.kind == "graph"
    assert inst.rho0 is not None and inst.rho1 is not None and inst.a is not None
    inst = load_instance(instances["qubit_depol"])
    assert inst.kind == "lindblad"
    assert abs(inst.derivation.algebra.trace_of_identity - 1.0) < 1e-12


def test_malformed_instance(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"schema": 1, "kind": "graph", "nodes": "x"}')
    code, out, err = run(["info", "--instance", str(p)])
    assert code == 2
    assert "nodes" in err


def test_missing_file_exit_code():
    code, out, err = run(["info", "--instance", "/does/not/exist.json"])
    assert code == 2 and err.startswith("error:")


def test_unknown_flag_exit_code(instances):
    code, _, _ = run(["dist", "--instance", instances["two_point"],
                      "--bogus", "1"])
    assert code == 2


def test_dist_output_schema(instances):
    code, out, _ = run(["dist", "--instance", instances["two_point"],
                        "--grid", "8"])
    assert code == 0
    doc = json.loads(out)
    assert {"distance", "error_bar", "certificates"} <= set(doc)
    assert doc["certificates"]["feasibility_residual"] <= 1e-9


def test_flow_csv(instances):
    code, out, _ = run(["flow", "--instance", instances["two_point"],
                        "--t-max", "1", "--steps", "5"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t,entropy,fisher,l1_to_equilibrium"
    assert len(lines) == 6


def test_seminorm(instances):
    code, out, _ = run(["seminorm", "--instance", instances["two_point"]])
    assert code == 0
    doc = json.loads(out)
    assert doc["converged"] and doc["value"] <= doc["am_value"] * (1 + 1e-8)


def test_verify_talagrand(instances):
    code, out, _ = run(["verify", "talagrand", "--instance",
                        instances["two_point"], "--K", "3.8", "--grid", "8"])
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] is True


def test_verify_ge_json(instances):
    code, out, _ = run(["verify", "ge", "--instance", instances["two_point"],
                        "--samples", "10", "--seed", "4"])
    assert code == 0
    doc = json.loads(out)
    assert doc["K_hat"] == pytest.approx(4.0, rel=1e-2)


def test_seventeen_digit_roundtrip(instances):
    code, out, _ = run(["dist", "--instance", instances["two_point"],
                        "--grid", "8"])
    doc = json.loads(out)
    # serializing the parsed float back at 17 significant digits is identity
    x = doc["distance"]
    assert float(f"{x:.17g}") == x


def test_main_in_process(instances, capsys):
    assert main(["info", "--instance", instances["two_point"]]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["irreducible"] is True
