import json

import pytest

from qiso.cli import ConfigError, JobConfig, main, render


def run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_laplacian_circle(tmp_path):
    code, rep = run(tmp_path, "--task", "laplacian", "--model", "circle", "--truncation", "16")
    assert code == 0
    assert rep["eigenvalues"][:5] == [0, -1, -1, -4, -4]
    assert rep["multiplicities"] == [1] + [2] * 16


def test_verify_action_holomorphic(tmp_path):
    code, rep = run(tmp_path, "--task", "verify-action", "--model", "holomorphic")
    assert code == 0 and rep["passed"]
    assert rep["concrete"]["passed"] and rep["coaction_square"]["passed"]


def test_verify_action_full(tmp_path):
    code, rep = run(tmp_path, "--task", "verify-action", "--model", "full")
    assert code == 0 and rep["concrete"]["passed"]


def test_derive_empty_ansatz(tmp_path, capsys):
    ans = tmp_path / "empty.json"
    ans.write_text(json.dumps({"generators": {}}))
    code, rep = run(tmp_path, "--task", "derive", "--model", "circle", "--action", str(ans))
    assert code == 2
    assert "no surviving terms" in rep["error"]
    assert "no surviving terms" in capsys.readouterr().err


def test_derive_circle(tmp_path):
    code, rep = run(tmp_path, "--task", "derive", "--model", "circle")
    assert code == 0
    assert rep["relation_count"] == 7
    assert rep["implied"] == ["reduced-to-zero"] * 7


def test_check_presentation(tmp_path):
    code, rep = run(tmp_path, "--task", "check-presentation", "--model", "holomorphic")
    assert code == 0 and rep["coassociative"] and rep["ideal_stable"]


def test_full_presentation_has_no_coproduct(tmp_path):
    code, rep = run(tmp_path, "--task", "check-presentation", "--model", "full")
    assert code == 2 and "coproduct" in rep["error"]


def test_disconnected_admissibility_fails(tmp_path):
    code, rep = run(tmp_path, "--task", "admissibility", "--model", "disconnected")
    assert code == 1
    assert rep["kernel_dimension"] == 2 and rep["verdicts"]["v_connected"] is False


def test_torus_admissibility_passes(tmp_path):
    code, rep = run(tmp_path, "--task", "admissibility", "--model", "holomorphic")
    assert code == 0 and rep["passed"]


def test_equivariance_circle(tmp_path):
    code, rep = run(tmp_path, "--task", "equivariance", "--model", "circle", "--truncation", "6")
    assert code == 0 and rep["equivariance_residual"] < 1e-8


def test_byte_identical_reports(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for out in (a, b):
        assert main(["--task", "verify-action", "--model", "holomorphic", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_render_rounds_to_twelve_digits():
    text = render({"x": 1 / 3, "b": True, "a": [2.0]})
    assert text.index('"a"') < text.index('"b"') < text.index('"x"')
    assert "0.333333333333" in text and "0.3333333333333" not in text


@pytest.mark.parametrize(
    "args",
    [
        ["--task", "laplacian", "--model", "circle", "--truncation", "3"],
        ["--task", "laplacian", "--model", "circle", "--tolerance", "0.5"],
        ["--task", "laplacian", "--model", "circle", "--tolerance", "0"],
        ["--task", "bogus", "--model", "circle"],
        ["--task", "laplacian", "--model", "/nonexistent/model.json"],
        ["--task", "laplacian"],
    ],
)
def test_config_errors_exit_2(args, capsys):
    assert main(args) == 2


def test_invalid_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--task", "laplacian", "--model", str(bad)]) == 2


def test_derive_needs_ansatz_on_disconnected(tmp_path):
    code, _ = run(tmp_path, "--task", "derive", "--model", "disconnected")
    assert code == 2


def test_jobconfig_validation():
    with pytest.raises(ConfigError):
        JobConfig(model="circle", task="laplacian", truncation=2)
    with pytest.raises(ConfigError):
        JobConfig(model="circle", task="nope")
    assert JobConfig(model="circle", task="laplacian", tolerance=1e-2).tolerance == 1e-2
