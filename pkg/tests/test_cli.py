import json
import subprocess
import sys

import pytest

from pisot_lab.cli import SCHEMA, main

from conftest import FIB, NONUNI, RAUZY


def _run(tmp_path, *args):
    code = main(list(args) + ["--out", str(tmp_path)])
    return code


def _load(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


def test_analyze_rauzy(tmp_path):
    assert _run(tmp_path, "analyze", "--sub", RAUZY) == 0
    rep = _load(tmp_path, "analyze.json")
    assert rep["schema"] == SCHEMA
    assert rep["automaton"]["D"] == 5
    assert rep["automaton"]["A"] == [[1, 0, 1, 0, 1], [1, 0, 1, 0, 1], [0, 1, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 0, 1, 0]]
    assert rep["spectral_check"]["ok"] and rep["parry"]["exact_identities"]


def test_analyze_nonunimodular(tmp_path):
    assert _run(tmp_path, "analyze", "--sub", NONUNI) == 0
    fin = [p for p in _load(tmp_path, "analyze.json")["places"] if p["kind"] == "finite"]
    assert [(p["q"], p["nu"]) for p in fin] == [(2, 1)]


@pytest.mark.parametrize("sub,code", [
    ("1->1;2->2", 2),          # not primitive
    ("1->12;2->", 1),          # parse
    ("1->11;2->22", 2),
    ("1->2;2->1", 2),          # primitive but not Pisot (|x^2 - 1| reducible)
])
def test_exit_codes(tmp_path, capsys, sub, code):
    assert _run(tmp_path, "analyze", "--sub", sub) == code


def test_large_norm_field_hits_cap(tmp_path, capsys):
    # x^2 - 6x - 5: the Z0 search box at deep levels exceeds the candidate cap
    assert _run(tmp_path, "analyze", "--sub", "1->1111112;2->11111") == 4


def test_not_primitive_message(tmp_path, capsys):
    _run(tmp_path, "analyze", "--sub", "1->1;2->2")
    assert "not primitive" in capsys.readouterr().err


def test_sub_from_file_and_config(tmp_path):
    f = tmp_path / "s.txt"
    f.write_text(FIB + "\n")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k_max": 3}))
    assert main(["coincide", "--sub", f"@{f}", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = _load(tmp_path, "coincide.json")
    assert rep["k_max"] == 3 and rep["strong_coincidence"]
    assert all(v["k"] == 1 for v in rep["pairs"].values())


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nope": 1}))
    assert main(["analyze", "--sub", FIB, "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_coincide_kmax_zero(tmp_path):
    assert _run(tmp_path, "coincide", "--sub", RAUZY, "--k-max", "0") == 0
    rep = _load(tmp_path, "coincide.json")
    assert not rep["strong_coincidence"] and "notice" in rep


def test_render_depth_zero(tmp_path):
    assert _run(tmp_path, "render", "--sub", RAUZY, "--depth", "0", "--format", "svg") == 0
    rep = _load(tmp_path, "render.json")
    assert rep["points"] == {"1": 1, "2": 1, "3": 1}
    assert (tmp_path / "render.svg").read_text().startswith("<svg")


def test_render_cap(tmp_path):
    assert _run(tmp_path, "render", "--sub", RAUZY, "--depth", "40") == 4


@pytest.mark.parametrize("args", [
    ["render", "--sub", RAUZY, "--depth", "8", "--format", "ppm", "--resolution", "64"],
    ["tile", "--sub", FIB, "--depth", "10", "--samples", "50", "--seed", "3"],
    ["simulate", "--sub", FIB, "--samples", "500", "--garsia-trials", "50", "--pairs", "30",
     "--horizon", "200", "--entries", "30", "--seed", "7"],
])
def test_deterministic_artifacts(tmp_path, args):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        ra, rb = (a / n).read_bytes(), (b / n).read_bytes()
        if n.endswith(".json"):
            ra, rb = ra.replace(str(a).encode(), b""), rb.replace(str(b).encode(), b"")
        assert ra == rb, n


def test_tile_nonunimodular_reports_unsupported(tmp_path):
    assert _run(tmp_path, "tile", "--sub", NONUNI, "--samples", "5") == 0
    assert "unsupported" in _load(tmp_path, "tile.json")["covering"]


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "pisot_lab", "analyze", "--sub", FIB, "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and (tmp_path / "analyze.json").exists()
