import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ballspectra import cli
from ballspectra.eigenbasis import MultiIndex, eval_field, normalized_record


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_eigs_curl_table(capsys):
    code, out, _ = run(["eigs", "--operator", "curl", "--nmax", "1", "--mmax", "1"], capsys)
    table = rows(out)
    assert code == 0
    assert table[0] == ["operator", "n", "m", "k", "sign", "eigenvalue"]
    assert len(table) == 7
    assert all(abs(abs(float(r[5])) - 4.4934) <= 1e-3 for r in table[1:])
    assert out.endswith("\n") and "\r" not in out


def test_eigs_graddiv_degree_zero(capsys):
    _, out, _ = run(["eigs", "--operator", "graddiv", "--nmax", "0", "--mmax", "3"], capsys)
    body = rows(out)[1:]
    assert len(body) == 3 and {r[3] for r in body} == {"0"}


def test_eigs_radius_scaling(capsys):
    _, one, _ = run(["eigs", "--nmax", "2", "--mmax", "2"], capsys)
    _, two, _ = run(["eigs", "--nmax", "2", "--mmax", "2", "--radius", "2"], capsys)
    for a, b in zip(rows(one)[1:], rows(two)[1:]):
        assert a[:5] == b[:5]
        assert float(b[5]) == pytest.approx(float(a[5]) / 2, rel=1e-15)


def test_eigs_zero_table(capsys):
    _, out, _ = run(["eigs", "--zeros", "--nmax", "1", "--mmax", "2"], capsys)
    table = rows(out)
    assert table[0] == ["kind", "n", "m", "value"]
    assert ["rho", "0", "1", "3.1415926535897931"] in table
    assert len(table) == 1 + 2 * 2 * 2


def test_eigs_json(capsys):
    _, out, _ = run(["eigs", "--format", "json"], capsys)
    data = json.loads(out)
    assert data["schema_version"] == 1 and len(data["eigenvalues"]) == 6


def test_field_header_only_without_interior_points(capsys):
    code, out, _ = run(["field", "--index", "curl:1,1,0,+", "--grid", "2"], capsys)
    assert code == 0 and out == "x,y,z,ux,uy,uz\n"


def test_field_boundary_scan(tmp_path, capsys):
    path = tmp_path / "f.csv"
    assert cli.main(["field", "--index", "curl:1,1,0,+", "--grid", "21", "--out", str(path)]) == 0
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    p, u = data[:, :3], data[:, 3:]
    r = np.linalg.norm(p, axis=1)
    assert r.max() < 1.0
    # lattice spacing 0.1: boundary-adjacent means within one spacing of the sphere
    near = r > 0.9
    normal = np.abs(np.sum(p[near] * u[near], axis=1)) / r[near]
    rec = normalized_record(MultiIndex(1, 1, 0))
    rr = np.linspace(0.85, 1.0, 301)[:, None]
    th = np.linspace(0, np.pi, 61)[None, :]
    slope = np.max(np.abs(np.diff(eval_field(rec, rr, th, 0 * th).u_r, axis=0))) / (rr[1, 0] - rr[0, 0])
    assert np.all(normal <= 1.01 * slope * (1.0 - r[near]))
    assert np.max(np.linalg.norm(u[r < 0.5], axis=1)) > 0.1


def test_field_bytes_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.main(["field", "--index", "graddiv:1,1,1", "--grid", "9", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_field_bad_index(capsys):
    code, _, err = run(["field", "--index", "curl:0,1,0"], capsys)
    assert code == 2 and "ballspectra" in err


def test_verify_fault_injection(capsys):
    argv = ["verify", "--suite", "eigen", "--nmax", "1", "--mmax", "1"]
    code, out, _ = run(argv, capsys)
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(argv + ["--lambda-scale", "1.01"], capsys)
    report = json.loads(out)
    assert code == 1 and not report["passed"]
    assert any(c["name"].startswith("eigen_residual") and not c["passed"] for c in report["checks"])


def test_verify_report_schema_stable(capsys):
    argv = ["verify", "--suite", "operators"]
    first = json.loads(run(argv, capsys)[1])
    second = json.loads(run(argv, capsys)[1])
    assert first == second
    assert set(first) == {"schema_version", "suite", "seed", "config", "checks", "passed"}
    assert set(first["checks"][0]) == {"name", "value", "threshold", "passed"}


def test_project_rigid_rotation(capsys):
    code, out, _ = run(["project", "--field", "rigid", "--trunc", "2,2"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["potential_energy"] <= 1e-6 * data["l2_input"] ** 2


def test_project_single_eigenfield(capsys):
    _, out, _ = run(["project", "--field", "eigen:curl:2,1,1,-", "--trunc", "2,2"], capsys)
    data = json.loads(out)
    values = sorted((abs(c["value"]) for c in data["coefficients"]), reverse=True)
    assert values[0] == pytest.approx(1.0, abs=1e-10) and values[1] < 1e-10
    assert data["l2_residual"] < 1e-6


def test_project_residual_decreases(capsys):
    res = []
    for trunc in ("2,2", "4,4"):
        _, out, _ = run(["project", "--field", "rigid", "--trunc", trunc], capsys)
        res.append(json.loads(out)["l2_residual"])
    assert res[1] < res[0]


def test_project_sampled_file(tmp_path, capsys):
    path = tmp_path / "in.csv"
    assert cli.main(["field", "--index", "curl:1,1,0,+", "--grid", "15", "--out", str(path)]) == 0
    code, out, _ = run(["project", "--field-file", str(path), "--trunc", "1,1"], capsys)
    coeffs = {(c["operator"], c["n"], c["m"], c["k"], c["sign"]): c["value"]
              for c in json.loads(out)["coefficients"]}
    assert code == 0 and coeffs[("curl", 1, 1, 0, "+")] > 0.8


def test_project_unknown_field(capsys):
    assert run(["project", "--field", "nope"], capsys)[0] == 2


def test_project_missing_file(capsys):
    assert run(["project", "--field-file", "/nonexistent/in.csv"], capsys)[0] == 3


def test_solve_single_coefficient(capsys):
    code, out, _ = run(["solve", "--equation", "graddiv_power", "--power", "1",
                        "--rhs", "graddiv:1,1,0=1", "--trunc", "2,2"], capsys)
    data = json.loads(out)
    nu = normalized_record(MultiIndex.parse("graddiv:1,1,0")).wavenumber
    sol = {(c["operator"], c["n"], c["m"], c["k"]): c["value"] for c in data["solution"]}
    assert code == 0 and sol[("graddiv", 1, 1, 0)] == pytest.approx(nu**-4, rel=1e-14)
    assert data["residual"] <= 1e-12


@pytest.mark.parametrize("equation", ["graddiv_power", "curl_power"])
def test_solve_random_rhs(equation, capsys):
    code, out, _ = run(["solve", "--equation", equation, "--rhs", "random:10", "--seed", "3"], capsys)
    data = json.loads(out)
    assert code == 0 and data["residual"] <= 1e-12 and data["seed"] == 3


def test_solve_mixed_rhs_is_domain_error(capsys):
    code, _, err = run(["solve", "--equation", "graddiv_power",
                        "--rhs", "graddiv:1,1,0=1;curl:1,1,0,+=1"], capsys)
    assert code == 2 and "curl part" in err


def test_solve_rhs_file(tmp_path, capsys):
    from ballspectra import spectral

    c = spectral.basis_vector(MultiIndex.parse("curl:1,1,0,-"), spectral.Truncation(1, 1), value=2.0)
    path = tmp_path / "rhs.json"
    path.write_text(c.to_json())
    code, out, _ = run(["solve", "--equation", "curl_power", "--rhs", f"@{path}"], capsys)
    assert code == 0 and json.loads(out)["residual"] == 0.0


def test_trace_outputs(tmp_path, capsys):
    path = tmp_path / "t.csv"
    code = cli.main(["trace", "--point", "0,0,0.5", "--point", "0.4,0,0.2",
                     "--max-steps", "300", "--out", str(path)])
    assert code == 0
    table = rows(path.read_text())
    assert table[0] == ["trace_id", "s", "x", "y", "z"]
    assert {r[0] for r in table[1:]} == {"0", "1"}
    diag = json.loads((tmp_path / "t.csv.diag.json").read_text())
    assert diag["traces"][0]["max_offaxis"] <= 1e-8
    assert diag["traces"][1]["flux_max_rel_drift"] < 1e-10


def test_trace_seed_outside_ball(capsys):
    assert run(["trace", "--point", "0,0,1.5"], capsys)[0] == 2


def test_io_error_exit_code(capsys):
    assert run(["eigs", "--out", "/nonexistent/dir/x.csv"], capsys)[0] == 3


def test_usage_error_exit_code(capsys):
    assert run(["eigs", "--bogus"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ballspectra.cli", "eigs"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("operator,")
