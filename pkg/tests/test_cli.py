import io
import json
import subprocess
import sys

import numpy as np
import pytest

from canoncurve.cli import parse_array, run


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stream=buf)
    return code, json.loads(buf.getvalue())


def test_constants_example():
    code, rep = call("constants", "--g", "4", "--n", "2")
    assert code == 0 and rep["schema"] == 1
    assert rep["result"]["value"] == 1008
    assert rep["field"] == {"kind": "prime", "p": 2**62 - 57} and rep["seed"] == 0


def test_constants_budget_refusal():
    code, rep = call("constants", "--g", "5")
    assert code == 2 and rep["status"] == "budget"
    assert rep["enumeration_size"] == 120**6


def test_theta_spin_example():
    code, rep = call("theta-spin", "--g", "3")
    assert code == 0
    assert {k: rep["result"][k] for k in ("even", "odd")} == {"even": 36, "odd": 28}


def test_verify_lemma_example():
    code, rep = call("verify-lemma", "--lemma", "unconditioned", "--g", "3", "--field", "fp", "--trials", "20")
    assert code == 0 and rep["result"]["exact_passes"] == 20


@pytest.mark.parametrize("lemma,extra", [("conditioned", []), ("extended", ["--pair", "4", "3"])])
def test_verify_other_lemmas(lemma, extra):
    code, rep = call("verify-lemma", "--lemma", lemma, "--g", "4", "--n", "2", "--trials", "2", *extra)
    assert code == 0 and rep["result"]["exact_passes"] == 2


def test_verify_lemma_budget():
    code, _ = call("verify-lemma", "--lemma", "unconditioned", "--g", "4", "--trials", "1", "--max-perms", "1000")
    assert code == 2


def test_unknown_flag_and_subcommand():
    for argv in (["constants", "--g", "4", "--bogus"], ["no-such-command"]):
        with pytest.raises(SystemExit) as e:
            run(argv, stream=io.StringIO())
        assert e.value.code == 3


def test_usage_on_stderr_from_module_entry():
    p = subprocess.run([sys.executable, "-m", "canoncurve", "theta-spin", "--nope"], capture_output=True, text=True)
    assert p.returncode == 3 and "usage:" in p.stderr


def test_bad_json_and_bad_matrix():
    assert call("theta-eval", "--Z", "[[1,2],[3")[0] == 3
    assert call("siegel-metric", "--Y", "[[1,0],[0,-1]]")[0] == 3
    assert call("theta-eval", "--Z", "[[[0,1],[0,0]],[[0,0],[0,1]]]", "--g", "3")[0] == 3


def test_theta_eval_matches_library():
    from canoncurve.siegel import PeriodPoint, theta
    code, rep = call("theta-eval", "--Z", "[[[0.1,1.0],[0,0.3]],[[0,0.3],[0,2.0]]]", "--z", "[0.2, 0.1]")
    Z = np.array([[0.1 + 1j, 0.3j], [0.3j, 2j]])
    v = theta(np.array([0.2, 0.1]), PeriodPoint(Z))
    assert code == 0 and np.allclose(rep["result"]["value"], [v.real, v.imag], atol=1e-15)


def test_siegel_metric_identity():
    code, rep = call("siegel-metric", "--Y", "[[1,0],[0,1]]")
    assert code == 0 and rep["result"]["gS"] == [[1, 0, 0], [0, 1, 0], [0, 0, 2]]


def test_curve_pipeline_through_files(tmp_path):
    path = tmp_path / "s.json"
    code, rep = call("curve-sample", "--out", str(path))
    assert code == 0 and rep["result"]["rank_ww"] == 9 and path.exists()
    for cmd in ("petri-quadrics", "petri-cubics", "petri-structure"):
        code, rep = call(cmd, "--samples", str(path))
        assert code == 0, (cmd, [c for c in rep["result"]["checks"] if not c["passed"]])
    code, rep = call("theorem-main", "--samples", str(path), "--control")
    assert code == 0


def test_check_failure_exit_code(tmp_path):
    path = tmp_path / "s.json"
    call("curve-sample", "--out", str(path))
    d = json.loads(path.read_text())
    # one point off the quadric is not enough to break the sum, two are
    d["points"][0]["coords"] = [[0.3, 0.1], [1.0, 0.0], [-0.7, 0.2], [0.5, -0.4]]
    d["points"][1]["coords"] = [[1.0, 0.0], [0.2, -0.6], [0.4, 0.4], [-0.9, 0.1]]
    path.write_text(json.dumps(d))
    code, rep = call("theorem-main", "--samples", str(path))
    assert code == 1 and rep["status"] == "fail"


def test_siegel_gxi_files(tmp_path):
    B = np.hstack([np.eye(9), np.zeros((9, 1))])
    (tmp_path / "B.json").write_text(json.dumps(B.tolist()))
    (tmp_path / "tau.json").write_text(json.dumps(np.stack([np.zeros((4, 4)), np.eye(4)], -1).tolist()))
    code, rep = call("siegel-gxi", "--B", str(tmp_path / "B.json"), "--tau", str(tmp_path / "tau.json"))
    assert code == 0 and rep["result"]["tau_provenance"] == "input"
    G = parse_array(json.dumps(rep["result"]["gXi"]), 2)
    assert np.allclose(G, np.diag([1.0] * 4 + [2.0] * 5))
    code, rep = call("siegel-gxi")
    assert code == 0 and rep["result"]["B_provenance"] == "curve samples"


def test_reports_are_deterministic():
    argv = ["report-all", "--quick", "--only", "8", "9", "10", "--deterministic", "--seed", "3"]
    a, b = io.StringIO(), io.StringIO()
    assert run(argv, stream=a) == 0 and run(argv, stream=b) == 0
    assert a.getvalue() == b.getvalue()
    assert "elapsed_s" not in a.getvalue()


def test_parse_array_complex_pairs():
    a = parse_array("[[1, 2], [3, 4]]", 2)
    assert a.dtype == float
    b = parse_array("[[[1, 2], [3, 4]]]", 2)
    assert b.shape == (1, 2) and b[0, 1] == 3 + 4j
