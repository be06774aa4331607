import json

import pytest

from qkdplan.cli import main


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_plan_and_validate_round_trip(tmp_path, capsys):
    out = tmp_path / "plan.json"
    assert main(["plan", "--apps", "20", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "reservations      4x20" in printed
    doc = json.loads(out.read_text())
    assert doc["method"] == "SP" and len(doc["routes"]) == 20
    assert set(doc["cost"]) == {"phase1", "phase2_expected", "overall"}
    assert main(["validate", str(out)]) == 0
    assert json.loads(capsys.readouterr().out) == []

    doc["routes"][0]["wavelengths"] = [99]
    bad = write(tmp_path, "bad.json", doc)
    assert main(["validate", bad]) == 1
    report = json.loads(capsys.readouterr().out)
    assert {r["constraint"] for r in report} >= {"wavelength_capacity"}
    assert set(report[0]) == {"constraint", "app_id", "detail"}


@pytest.mark.parametrize("method", ["evf", "random", "oracle"])
def test_plan_methods(method, capsys):
    apps = "3" if method == "oracle" else "15"
    extra = ["--scenarios", "5"] if method == "oracle" else []
    assert main(["plan", "--apps", apps, "--method", method, *extra]) == 0
    assert method.upper() in capsys.readouterr().out


def test_sweep_and_compare_outputs(tmp_path, capsys):
    csv_path, svg_path = tmp_path / "s.csv", tmp_path / "s.svg"
    assert main(["sweep", "--apps", "30", "--out", str(csv_path), "--plot", str(svg_path)]) == 0
    assert len(csv_path.read_text().splitlines()) == 12
    assert svg_path.read_text().lstrip().startswith("<?xml")
    assert main(["compare", "--apps", "10", "--app-counts", "5,10", "--random-seeds", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("n_applications,") and len(lines) == 3


def test_pairs_file_and_catalog(tmp_path, capsys):
    pairs = write(tmp_path, "pairs.json", [[0, 1], [2, 3]])
    catalog = write(tmp_path, "cat.json", {"satellite": 0, "uav": 0, "od_transmitter": 0,
                                           "od_receiver": 0, "secret_key_buffer": 0,
                                           "od_security_infrastructure": 0})
    assert main(["plan", "--pairs", pairs, "--catalog", catalog]) == 0
    out = capsys.readouterr().out
    assert "reservations      0x2" in out and "file:" in out


def test_input_errors_exit_2(tmp_path, capsys):
    assert main(["plan", "--topology", str(tmp_path / "none.json")]) == 2
    assert main(["plan", "--pairs", write(tmp_path, "p.json", [[0, 0]])]) == 2
    assert main(["plan", "--scenarios", "0"]) == 2
    assert main(["compare", "--app-counts", "a,b"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["plan", "--apps", "many"])
    assert exc.value.code == 2


def test_infeasible_exit_1(tmp_path, capsys):
    topo = write(tmp_path, "far.json", {
        "nodes": [{"id": 0, "x_km": 0, "y_km": 0}, {"id": 1, "x_km": 1500, "y_km": 0}],
        "edges": [{"u": 0, "v": 1, "length_km": 80}]})
    args = ["plan", "--topology", topo, "--apps", "1", "--scenarios", "3", "--uav-outage", "1",
            "--capacity", "1"]
    assert main(args) == 1
    assert "infeasible" in capsys.readouterr().err
