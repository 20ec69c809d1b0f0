import hashlib
import json

import numpy as np
import pytest

from flagrecon import io
from flagrecon.cli import main
from flagrecon.sphere import as_direction


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def report_of(out):
    return json.loads(out)


@pytest.fixture(scope="module")
def harmonic_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("harmonic")
    assert main(["synth", "harmonic", "--seed", "7", "--density", str(d / "h.json"),
                 "--flag", str(d / "F.json")]) == 0
    return d


def test_synth_sphere_writes_valid_flag(tmp_path, capsys):
    code, _ = run(capsys, "synth", "sphere", "--radius", 1, "--flag", tmp_path / "s.json")
    assert code == 0
    F, obj = io.read_flag(tmp_path / "s.json")
    assert np.all(F.a0 == 1.0) and obj["body_valid"] is True


def test_synth_harmonic_deterministic(tmp_path, capsys, harmonic_files):
    run(capsys, "synth", "harmonic", "--seed", 7, "--density", tmp_path / "h.json",
        "--flag", tmp_path / "F.json")
    for name in ("h.json", "F.json"):
        a = hashlib.sha256((tmp_path / name).read_bytes()).hexdigest()
        b = hashlib.sha256((harmonic_files / name).read_bytes()).hexdigest()
        assert a == b


def test_synth_negative_margin_annotated(tmp_path, capsys):
    code, _ = run(capsys, "synth", "harmonic", "--margin", -0.05, "--density", tmp_path / "b.json")
    assert code == 0
    _, obj = io.read_scalar(tmp_path / "b.json")
    assert obj["body_valid"] is False
    assert obj["lindquist_margin"] == pytest.approx(-0.05, abs=1e-9)


def test_synth_needs_output(capsys):
    assert run(capsys, "synth", "sphere")[0] == 3


def test_validate_sphere(tmp_path, capsys):
    run(capsys, "synth", "sphere", "--flag", tmp_path / "s.json")
    code, out = run(capsys, "validate", tmp_path / "s.json", "--tol", 1e-4,
                    "--report", tmp_path / "r.json")
    assert code == 0
    rep = report_of(out)
    assert rep["passed"] and rep["frame_convention"] == "zcross-v1"
    assert rep["n_lat"] == 32 and rep["n_lon"] == 64 and rep["seed"] == 0
    assert json.loads((tmp_path / "r.json").read_text()) == rep


def test_validate_forward_field(harmonic_files, capsys):
    code, out = run(capsys, "validate", harmonic_files / "F.json", "--tol", 5e-3)
    assert code == 0 and report_of(out)["max_residual"] < 5e-3


def test_validate_perturbed_field(harmonic_files, tmp_path, capsys):
    F, _ = io.read_flag(harmonic_files / "F.json")
    c = as_direction([0.4, 0.2, 0.9])
    region = (np.abs(F.grid.nodes @ c) > np.cos(0.3)).astype(float)
    io.write_flag(tmp_path / "P.json", F.with_harmonic(0, 0.1 * region))
    code, out = run(capsys, "validate", tmp_path / "P.json", "--tol", 5e-3)
    assert code == 1
    assert report_of(out)["max_residual"] >= 0.04


def test_validate_reports_extra_harmonics(harmonic_files, tmp_path, capsys):
    F, _ = io.read_flag(harmonic_files / "F.json")
    io.write_flag(tmp_path / "X.json", F.with_harmonic(4, 0.01))
    code, out = run(capsys, "validate", tmp_path / "X.json")
    rep = report_of(out)
    assert code == 1
    assert rep["residual_by_harmonic"]["other"] == pytest.approx(0.01)


def test_reconstruct_sphere(tmp_path, capsys):
    run(capsys, "synth", "sphere", "--flag", tmp_path / "s.json")
    code, _ = run(capsys, "reconstruct", tmp_path / "s.json", tmp_path / "out")
    assert code == 0
    lines = (tmp_path / "out" / "mesh.obj").read_text().splitlines()
    v = np.array([[float(t) for t in l.split()[1:]] for l in lines if l.startswith("v ")])
    assert len(v) == 642
    assert np.max(np.abs(np.linalg.norm(v, axis=1) - 1)) < 1e-4
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["audit"]["passed"] and rep["frame_convention"] == "zcross-v1"


def test_reconstruct_harmonic_matches_source(harmonic_files, tmp_path, capsys):
    code, _ = run(capsys, "reconstruct", harmonic_files / "F.json", tmp_path / "out",
                  "--subdiv", 1)
    assert code == 0
    f, _ = io.read_scalar(tmp_path / "out" / "density.json")
    h, _ = io.read_scalar(harmonic_files / "h.json")
    from flagrecon.scalar_field import SphereGrid
    nodes = SphereGrid(32, 64).nodes
    assert np.max(np.abs(f(nodes) - h(nodes))) < 2e-2 * np.max(np.abs(h(nodes)))


def test_reconstruct_not_a_body(tmp_path, capsys):
    run(capsys, "synth", "harmonic", "--margin", -0.05, "--flag", tmp_path / "bad.json")
    code, _ = run(capsys, "reconstruct", tmp_path / "bad.json", tmp_path / "out")
    assert code == 2
    assert (tmp_path / "out" / "density.json").exists()
    assert not (tmp_path / "out" / "mesh.obj").exists()
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["body_valid"] is False and rep["lindquist_margin"] < 0


def test_reconstruct_rejects_extras_unless_allowed(harmonic_files, tmp_path, capsys):
    F, _ = io.read_flag(harmonic_files / "F.json")
    io.write_flag(tmp_path / "X.json", F.with_harmonic(4, 0.01))
    assert run(capsys, "reconstruct", tmp_path / "X.json", tmp_path / "o1")[0] == 3
    code, _ = run(capsys, "reconstruct", tmp_path / "X.json", tmp_path / "o2",
                  "--allow-extra-harmonics", "--subdiv", 0)
    assert code == 0


def test_forward_sphere_and_roundtrip(tmp_path, capsys):
    run(capsys, "synth", "sphere", "--radius", 2, "--density", tmp_path / "d.json")
    assert run(capsys, "forward", tmp_path / "d.json", tmp_path / "F.json")[0] == 0
    F, _ = io.read_flag(tmp_path / "F.json")
    assert np.max(np.abs(F.a0 - 2)) < 1e-12 and np.max(np.abs(F.a2)) < 1e-12
    assert run(capsys, "validate", tmp_path / "F.json", "--tol", 1e-4)[0] == 0


def test_forward_then_validate_harmonic(harmonic_files, tmp_path, capsys):
    run(capsys, "forward", harmonic_files / "h.json", tmp_path / "F.json")
    assert run(capsys, "validate", tmp_path / "F.json", "--tol", 5e-3)[0] == 0


def test_roundtrip_metrics(harmonic_files, capsys):
    code, out = run(capsys, "roundtrip", harmonic_files / "h.json", "--subdiv", 1)
    rep = report_of(out)
    assert code == 0
    assert rep["consistency"]["max_residual"] < 5e-3
    assert rep["density_rel_error"] < 2e-2
    assert rep["coeff_error"] < 3e-2
    assert rep["audit"]["passed"]
    assert rep["seed"] == 0 and rep["frame_convention"] == "zcross-v1"


def test_format_errors(tmp_path, capsys):
    (tmp_path / "j.json").write_text('{"kind": "flag_field"}')
    assert run(capsys, "validate", tmp_path / "j.json")[0] == 3
    assert run(capsys, "forward", tmp_path / "missing.json", tmp_path / "o.json")[0] == 3
    (tmp_path / "odd.json").write_text(
        json.dumps({"kind": "scalar_field", "lmax": 2, "coeffs": [[1, 0, 1.0]]}))
    assert run(capsys, "roundtrip", tmp_path / "odd.json")[0] == 3
