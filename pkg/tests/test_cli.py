import json
import subprocess
import sys

import pytest

from astrocity.cli import EXIT_OK, EXIT_PROBLEMS, EXIT_USAGE, run
from astrocity.model import read_document
from conftest import RECIPES


def mars_recipe_without_seed(tmp_path):
    data = json.loads((RECIPES / "mars.recipe").read_text())
    del data["seed"]
    for step in data["inputs"]:
        if "source" in step:
            step["source"] = str(RECIPES / step["source"])
        if "dem" in step.get("parameters", {}):
            step["parameters"]["dem"] = str(RECIPES / step["parameters"]["dem"])
    path = tmp_path / "noseed.recipe"
    path.write_text(json.dumps(data))
    return path


def test_project_forward_and_inverse(capsys):
    assert run(["project", "--crs", "IAU_2015:30185", "--lat", "0.67416", "--lon", "23.47314"]) == EXIT_OK
    x, y = map(float, capsys.readouterr().out.split())
    assert abs(x - 797715.8357) < 0.5 and abs(y + 1084015.403) < 0.5
    assert run(["project", "--crs", "IAU_2015:30185", "--inverse", "--x", str(x), "--y", str(y)]) == EXIT_OK
    lat, lon = map(float, capsys.readouterr().out.split())
    assert lat == pytest.approx(0.67416, abs=1e-5) and lon == pytest.approx(23.47314, abs=1e-5)


def test_project_usage_errors(capsys):
    assert run(["project", "--crs", "EPSG:4326", "--lat", "0", "--lon", "0"]) == EXIT_USAGE
    assert run(["project", "--crs", "IAU_2015:30185", "--lat", "0"]) == EXIT_USAGE
    assert run(["project", "--crs", "IAU_2015:30185", "--lat", "95", "--lon", "0"]) == EXIT_USAGE
    assert "astrocity:" in capsys.readouterr().err


def test_build_is_deterministic_with_a_seed(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["build", str(RECIPES / "mars.recipe"), "-o", str(a)]) == EXIT_OK
    assert run(["build", str(RECIPES / "mars.recipe"), "-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert "1 +SpaceCrater" in capsys.readouterr().out
    c = tmp_path / "c.json"
    assert run(["build", str(RECIPES / "mars.recipe"), "-o", str(c), "--seed", "7"]) == EXIT_OK
    assert c.read_bytes() != a.read_bytes()


def test_build_seed_from_environment(tmp_path, monkeypatch):
    recipe = mars_recipe_without_seed(tmp_path)
    monkeypatch.setenv("ASTROCITY_SEED", "99")
    outs = []
    for name in ("x.json", "y.json"):
        assert run(["build", str(recipe), "-o", str(tmp_path / name)]) == EXIT_OK
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    monkeypatch.setenv("ASTROCITY_SEED", "abc")
    assert run(["build", str(recipe), "-o", str(tmp_path / "z.json")]) == EXIT_USAGE


def test_build_usage_errors(tmp_path):
    assert run(["build", str(tmp_path / "missing.recipe")]) == EXIT_USAGE
    bad = tmp_path / "bad.recipe"
    bad.write_text(json.dumps({"crs": "EPSG:103885", "output": "o.json", "inputs": [{"name": "a", "role": "volcano"}]}))
    assert run(["build", str(bad), "-o", str(tmp_path / "o.json")]) == EXIT_USAGE


def test_emit_then_validate_against_emitted_file(tmp_path, capsys):
    ext, out = tmp_path / "3dspace.ext.json", tmp_path / "m.json"
    assert run(["extension", "emit", "-o", str(ext)]) == EXIT_OK
    assert json.loads(ext.read_text())["name"] == "3DSpace"
    assert run(["build", str(RECIPES / "mars.recipe"), "-o", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert run(["validate", str(out), "--extension", str(ext), "--strict"]) == EXIT_OK
    assert "0 error(s), 0 warning(s)" in capsys.readouterr().out


def test_validate_reports_problems_as_json(tmp_path, capsys, demo_texts):
    data = json.loads(demo_texts["mars"])
    crater = next(k for k, v in data["CityObjects"].items() if v["type"] == "+SpaceCrater")
    data["CityObjects"][crater]["attributes"]["craterID"] = "14300"
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(data))
    assert run(["validate", str(path), "--report", "json"]) == EXIT_PROBLEMS
    report = json.loads(capsys.readouterr().out)
    assert report["valid"] is False and report["errors"] == 1
    assert report["issues"][0]["code"] == "ATTR_TYPE"
    assert report["issues"][0]["object_id"] == crater


def test_validate_usage_errors(tmp_path):
    assert run(["validate", str(tmp_path / "nope.json")]) == EXIT_USAGE
    junk = tmp_path / "junk.json"
    junk.write_text("{")
    assert run(["validate", str(junk)]) == EXIT_USAGE
    assert run(["validate", str(junk), "--report", "xml"]) == EXIT_USAGE
    assert run(["frobnicate"]) == EXIT_USAGE
    assert run([]) == EXIT_USAGE


def test_upgrade(tmp_path, demo_texts):
    old = json.loads(demo_texts["mars"])
    old["version"] = "1.0"
    old["metadata"]["referenceSystem"] = "urn:ogc:def:crs:EPSG::103885"
    src, dst = tmp_path / "old.json", tmp_path / "new.json"
    src.write_text(json.dumps(old))
    assert run(["upgrade", str(src), "-o", str(dst)]) == EXIT_OK
    doc = read_document(dst.read_text())
    assert doc.version == "2.0"
    assert doc.reference_system_url == "https://www.opengis.net/def/crs/EPSG/0/103885"
    assert run(["upgrade", str(dst), "-o", str(tmp_path / "again.json")]) == EXIT_PROBLEMS
    assert not (tmp_path / "again.json").exists()


def test_info(tmp_path, capsys, demo_texts):
    path = tmp_path / "m.json"
    path.write_text(demo_texts["mars"])
    assert run(["info", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "version: 2.0" in out
    assert "extension: 3DSpace 2.0" in out
    assert "+SpaceRestriction: 1" in out


def test_help_exits_zero(capsys):
    assert run(["--help"]) == EXIT_OK


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "astrocity", "project", "--crs", "ESRI:103885", "--lat", "0", "--lon", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.0000 0.0000"
