import json

import pytest

from crosscap import cli
from crosscap.errors import ConsistencyError
from crosscap.germs import MODEL_S1_PLUS
from crosscap.reports import to_json

EX4 = "u; -u^2 + v^2; u^2 + v^3 + v*s + u^2*v"
EX5 = "u; v^2; v^3 - v*s^2 + u^2*v"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def last_json(out):
    return json.loads(out[out.index("{"):])


# -- analyze -----------------------------------------------------------------------


def test_analyze_s1_point(capsys):
    code, out = run(capsys, "analyze", "--germ", MODEL_S1_PLUS, "--point", "0,0")
    assert code == 0
    rep = last_json(out)
    assert rep["deformation"]["classification"] == "S1Plus"
    assert rep["rank"] == 1
    assert rep["whitney_umbrella"] is False
    assert rep["curvature_parabola"]["kind"] == "half-line"


def test_analyze_cross_cap(capsys):
    code, out = run(capsys, "analyze", "--germ", "u; u*v; v^2", "--point", "0,0")
    assert code == 0
    rep = last_json(out)
    assert rep["whitney_umbrella"] is True
    assert "invariants" in rep


def test_analyze_regular_point(capsys):
    code, out = run(
        capsys, "analyze", "--germ", MODEL_S1_PLUS, "--point", "0,0", "--s", "1"
    )
    assert code == 0
    rep = last_json(out)
    assert rep["rank"] == 2
    assert rep["regular"] is True
    assert "invariants" not in rep


def test_analyze_bad_germ_usage_error(capsys):
    code, out = run(capsys, "analyze", "--germ", "u; v")
    assert code == 2
    assert last_json(out)["error"]["type"] == "usage"


def test_germ_file_input(capsys, tmp_path):
    src = tmp_path / "germ.txt"
    src.write_text("# deformation source\nu\nv^2\nv*(u^2 + v^2) + s*v\n")
    code, out = run(capsys, "analyze", "--file", str(src), "--point", "0,0")
    assert code == 0
    assert last_json(out)["deformation"]["classification"] == "S1Plus"


def test_order_range_enforced(capsys):
    code, out = run(
        capsys, "analyze", "--germ", MODEL_S1_PLUS, "--order", "3"
    )
    assert code == 2


# -- normal-form -------------------------------------------------------------------


def test_normal_form_report(capsys, tmp_path):
    code, out = run(
        capsys,
        "normal-form",
        "--germ",
        MODEL_S1_PLUS,
        "--out",
        str(tmp_path),
    )
    assert code == 0
    rep = last_json(out)
    assert rep["classification"] == "S1Plus"
    assert rep["parameter_normalized"] is True
    assert rep["monomials"]["a21"][0] == pytest.approx(1.0, abs=1e-10)
    on_disk = json.loads((tmp_path / "normal_form.json").read_text())
    assert on_disk == rep


# -- trace -------------------------------------------------------------------------


def test_trace_files_and_determinism(capsys, tmp_path):
    args = (
        "trace",
        "--germ",
        "u; v^2; u^2 + v^3 + u^2*v + s*v",
        "--s-tilde-grid",
        "0.1:2:5",
        "--out",
        str(tmp_path),
    )
    code, _ = run(capsys, *args)
    assert code == 0
    csv1 = (tmp_path / "trace.csv").read_bytes()
    json1 = (tmp_path / "trace_asymptotics.json").read_bytes()
    code, _ = run(capsys, *args)
    assert code == 0
    assert (tmp_path / "trace.csv").read_bytes() == csv1
    assert (tmp_path / "trace_asymptotics.json").read_bytes() == json1

    header = csv1.decode().splitlines()[0]
    assert header == "s_tilde,u_plus,u_minus,a20,a11,a02,ku_ext,ka,conic_kind"
    rep = json.loads(json1)
    assert rep["asymptotics"]["limits"]["a02"] == pytest.approx(0.5, abs=1e-5)
    assert rep["all_conics"] == ["hyperbola"]


def test_trace_csv_round_trip(capsys, tmp_path):
    code, _ = run(
        capsys,
        "trace",
        "--germ",
        MODEL_S1_PLUS,
        "--s-tilde-grid",
        "0.1:2:4",
        "--out",
        str(tmp_path),
    )
    assert code == 0
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    for line in lines[1:]:
        cells = line.split(",")
        st = float(cells[0])
        a02 = float(cells[5])
        assert abs(a02 - 1.0 / (2 * st * st)) <= 1e-12 * a02


def test_trace_empty_locus_exit_zero(capsys, tmp_path):
    code, out = run(
        capsys,
        "trace",
        "--germ",
        "u; v^2; v*(s - u^2)",
        "--out",
        str(tmp_path),
    )
    assert code == 0
    rep = last_json(out)
    assert rep["rows"] == 0
    assert (tmp_path / "trace.csv").read_text().splitlines() == [
        "s_tilde,u_plus,u_minus,a20,a11,a02,ku_ext,ka,conic_kind"
    ]


# -- focal -------------------------------------------------------------------------


def test_focal_example4_kinds(capsys, tmp_path):
    for s, kind in (("-1", "ellipse"), ("-0.2", "hyperbola"), ("0", "two-lines")):
        code, out = run(
            capsys, "focal", "--germ", EX4, "--s", s, "--out", str(tmp_path)
        )
        assert code == 0
        assert last_json(out)["conic"]["kind"] == kind
        svg = (tmp_path / "focal.svg").read_text()
        assert 'viewBox="-5 -5 10 10"' in svg
        assert kind in svg


def test_focal_example5_parabola(capsys, tmp_path):
    code, out = run(
        capsys, "focal", "--germ", EX5, "--s", "-1", "--out", str(tmp_path)
    )
    assert code == 0
    assert last_json(out)["conic"]["kind"] == "parabola"


def test_focal_no_singular_point_is_domain_error(capsys):
    code, out = run(capsys, "focal", "--germ", MODEL_S1_PLUS, "--s", "1")
    assert code == 3
    assert last_json(out)["error"]["type"] == "math-domain"


# -- gauss-probe --------------------------------------------------------------------


def test_gauss_probe_cli(capsys):
    code, out = run(
        capsys,
        "gauss-probe",
        "--germ",
        "u; v^2 + u*s; u^2 + v^3 + u^2*v + v*s",
        "--s-tilde",
        "0.05",
    )
    assert code == 0
    rep = last_json(out)
    assert rep["agreement"] == 1
    assert rep["theta_count"] == 16 and rep["k_count"] == 8


# -- mesh --------------------------------------------------------------------------


def test_mesh_vertex_count_and_ksign(capsys, tmp_path):
    code, _ = run(
        capsys,
        "mesh",
        "--germ",
        MODEL_S1_PLUS,
        "--s",
        "-1",
        "--nu",
        "50",
        "--nv",
        "50",
        "--k-sign",
        "--out",
        str(tmp_path),
    )
    assert code == 0
    obj = (tmp_path / "mesh.obj").read_text().splitlines()
    assert sum(1 for line in obj if line.startswith("v ")) == 2500
    assert sum(1 for line in obj if line.startswith("f ")) == 2 * 49 * 49
    signs = (tmp_path / "mesh_ksign.txt").read_text().split()
    assert len(signs) == 2500
    assert {"-1", "1"} <= set(signs)  # the sign flips across the singular segment


def test_mesh_degenerate_grid_usage_error(capsys, tmp_path):
    code, out = run(
        capsys,
        "mesh",
        "--germ",
        MODEL_S1_PLUS,
        "--nu",
        "1",
        "--nv",
        "1",
        "--out",
        str(tmp_path),
    )
    assert code == 2


# -- serialization ------------------------------------------------------------------


def test_json_floats_round_trip():
    values = [0.1, 1 / 3, 2e-17, -5.0, 123456.789e10]
    text = to_json({"values": values})
    back = json.loads(text)["values"]
    assert back == values


def test_consistency_error_maps_to_exit_4(capsys, monkeypatch):
    def boom(args):
        raise ConsistencyError("routes disagree")

    monkeypatch.setitem(cli._COMMANDS, "analyze", boom)
    code, out = run(capsys, "analyze", "--germ", MODEL_S1_PLUS)
    assert code == 4
    assert last_json(out)["error"]["type"] == "internal-consistency"
