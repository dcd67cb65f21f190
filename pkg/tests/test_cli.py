from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

from corner_calculus.arrangement import PCleanFamily, sub_from_equations, three_coplanar_lines
from corner_calculus.cli import (EXIT_FALSIFIED, EXIT_INPUT, EXIT_OK, canonical_json, family_from_json,
                                 family_to_json, main)
from corner_calculus.orthant import OrthantChart


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv: str) -> tuple[int, dict]:
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def _write(path: Path, data: dict) -> str:
    path.write_text(json.dumps(data))
    return str(path)


def three_lines_without_their_point() -> PCleanFamily:
    ch = OrthantChart(0, 2)
    els = tuple(sub_from_equations(ch, (), [row]) for row in ([0, 1, 0], [1, 2, 0], [1, 0, 0]))
    return PCleanFamily(els, ("A", "B", "C"))


def test_build_scl_manifest_counts_front_faces(capsys) -> None:
    code, data = run_json(capsys, "build", "--kind", "scl", "--fibre-dim", "1", "--base-dim", "1", "--K", "3")
    assert code == EXIT_OK
    assert data["spec"] == {"K": 3, "base_dim": 1, "fibre_dim": 1, "kind": "scl"}
    assert len(data["model"]["levels"]["3"]["front_faces"]) == 4


def test_build_writes_manifest_and_atlases(capsys, tmp_path: Path) -> None:
    out = tmp_path / "pr"
    assert run(capsys, "build", "--kind", "group", "--group", "positive-reals", "--K", "3", "--out", str(out))[0] == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["atlas_files"] == {"1": "atlas_k1.json", "2": "atlas_k2.json", "3": "atlas_k3.json"}
    assert all((out / f).exists() for f in manifest["atlas_files"].values())


def test_build_from_spec_file(capsys, tmp_path: Path) -> None:
    spec = _write(tmp_path / "spec.json", {"kind": "fibre-product", "K": 2, "fibre_dim": 1, "base_dim": 0})
    code, data = run_json(capsys, "build", "--spec", spec)
    assert code == EXIT_OK and data["spec"]["kind"] == "fibre-product"


@pytest.mark.parametrize("spec", [
    {"kind": "scl", "K": 3},  # missing dimensions
    {"kind": "group", "K": 3, "group": "circle"},
    {"kind": "fibre-product", "K": 9, "fibre_dim": 1, "base_dim": 0},
    {"kind": "bphi", "K": 2, "colour": "red"},
])
def test_malformed_spec_is_an_input_error(capsys, tmp_path: Path, spec: dict) -> None:
    code, out, err = run(capsys, "build", "--spec", _write(tmp_path / "bad.json", spec))
    assert code == EXIT_INPUT and out == ""
    assert err.startswith("error: ") and "schema violation" in err


def test_unreadable_inputs(capsys, tmp_path: Path) -> None:
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "build", "--spec", str(bad))[0] == EXIT_INPUT
    assert run(capsys, "build", "--spec", str(tmp_path / "missing.json"))[0] == EXIT_INPUT
    assert run(capsys, "build")[0] == EXIT_INPUT
    assert run(capsys, "frobnicate")[0] == EXIT_INPUT


def test_resolve_reports_clean_flags(capsys) -> None:
    code, data = run_json(capsys, "resolve", "--builtin", "coplanar-lines", "--order", "F1,F2,F3,F4")
    assert code == EXIT_OK
    assert [s["p_clean"] for s in data["steps"]][:2] == [False, True]
    assert data["front_faces"] == ["ff[F1]", "ff[F2]", "ff[F3]", "ff[F4]"]
    assert run(capsys, "resolve", "--builtin", "coplanar-lines", "--order", "F1,F2")[0] == EXIT_INPUT


def test_resolve_step_error_is_a_falsification(capsys, tmp_path: Path) -> None:
    path = _write(tmp_path / "fam.json", family_to_json(three_lines_without_their_point()))
    code, data = run_json(capsys, "resolve", "--family", path, "--order", "A,B,C")
    assert code == EXIT_FALSIFIED
    assert data["step_error"]["step"] == 2 and data["step_error"]["not_p_positioned"]


def test_family_json_round_trip() -> None:
    fam = three_coplanar_lines()
    back = family_from_json(json.loads(canonical_json(family_to_json(fam))))
    assert back.names == fam.names and back.elements == fam.elements


def test_family_file_validation(capsys, tmp_path: Path) -> None:
    data = family_to_json(three_coplanar_lines())
    data["elements"]["F1"]["equations"]["rhs"][0] = "1/0"
    assert run(capsys, "resolve", "--family", _write(tmp_path / "f.json", data))[0] == EXIT_INPUT
    assert run(capsys, "resolve", "--builtin", "nope")[0] == EXIT_INPUT
    assert run(capsys, "resolve")[0] == EXIT_INPUT


def test_orders_of_the_coplanar_lines(capsys) -> None:
    code, data = run_json(capsys, "orders", "--builtin", "coplanar-lines")
    assert code == EXIT_OK and data["count"] == 24 and not data["truncated"]
    code, data = run_json(capsys, "orders", "--builtin", "coplanar-lines", "--cap", "5")
    assert data["count"] == 5 and data["truncated"]


def test_classify_reports_step_errors(capsys, tmp_path: Path) -> None:
    fam = three_lines_without_their_point()
    # not intersection-closed, so orders refuses it
    path = _write(tmp_path / "fam.json", family_to_json(fam))
    assert run(capsys, "orders", "--family", path)[0] == EXIT_INPUT
    code, data = run_json(capsys, "orders", "--family", path, "--close", "--mode", "classify")
    assert code == EXIT_OK and data["count"] == 24
    # only the orders leaving the common point to the end fail, and those are never intersection orders
    failed = [r for r in data["orders"] if r["class"] == "StepError"]
    assert len(failed) == 6
    assert all(r["order"][-1] == "(A^B)" and r["order_class"] == "Neither" for r in failed)
    assert all(r["step_error"]["step"] == 2 and r["step_error"]["cause"] == "NotPPositioned" for r in failed)


def test_single_element_family_has_one_order(capsys) -> None:
    code, data = run_json(capsys, "orders", "--builtin", "corner", "--mode", "classify")
    assert code == EXIT_OK and data["count"] == 1 and data["summary"]["SizeOrder"] == 1


def test_equiv_all_on_the_scl_diagonal_closure(capsys, monkeypatch) -> None:
    argv = ("orders", "--builtin", "diagonal:3:1:scl", "--close", "--mode", "equiv-all")
    code, one, _ = run(capsys, *argv)
    assert code == EXIT_OK
    data = json.loads(one)
    assert data["all_equivalent"] and data["summary"]["Neither"] == 0
    assert all(r["equivalent_to_reference"] == "TRUE" for r in data["orders"])
    monkeypatch.setenv("CORNER_CALCULUS_THREADS", "3")
    assert run(capsys, *argv)[1] == one


def test_bad_thread_count(capsys, monkeypatch) -> None:
    monkeypatch.setenv("CORNER_CALCULUS_THREADS", "x")
    assert run(capsys, "orders", "--builtin", "corner")[0] == EXIT_INPUT
    monkeypatch.setenv("CORNER_CALCULUS_THREADS", "0")
    assert run(capsys, "orders", "--builtin", "corner")[0] == EXIT_INPUT


def test_equiv(capsys) -> None:
    code, data = run_json(capsys, "equiv", "--builtin", "coplanar-lines", "--first", "F1,F2,F3,F4",
                          "--second", "F2,F1,F3,F4")
    assert code == EXIT_OK and data["status"] == "TRUE"


def test_axioms(capsys) -> None:
    code, data = run_json(capsys, "axioms", "--kind", "fibre-product", "--fibre-dim", "1", "--base-dim", "0")
    assert code == EXIT_OK and data["failures"] == [] and data["all_simple"]


def test_corner_lattice_dot(capsys) -> None:
    code, dot, _ = run(capsys, "lattice", "--builtin", "corner", "--format", "dot")
    assert code == EXIT_OK
    assert len(re.findall(r"^\s*f\d+ \[", dot, re.M)) == 5
    assert len(re.findall(r"->", dot)) == 4
    assert run(capsys, "lattice", "--builtin", "corner", "--format", "dot")[1] == dot


def test_empty_lattice_and_unknown_format(capsys) -> None:
    code, data = run_json(capsys, "lattice", "--kind", "fibre-product", "--fibre-dim", "1", "--base-dim", "0")
    assert code == EXIT_OK and data["nodes"] == [] and data["covers"] == []
    code, dot, _ = run(capsys, "lattice", "--kind", "fibre-product", "--fibre-dim", "1", "--base-dim", "0",
                       "--format", "dot")
    assert dot == "digraph faces {\n}\n"
    assert run(capsys, "lattice", "--builtin", "corner", "--format", "svg")[0] == EXIT_INPUT
    assert run(capsys, "lattice", "--kind", "bphi", "--K", "2", "--level", "5")[0] == EXIT_INPUT


def test_bracket_verb(capsys) -> None:
    code, data = run_json(capsys, "bracket", "--fibre-dim", "2", "--v1", "0; x1_0", "--v2", "x1_1; 0")
    assert code == EXIT_OK
    assert data["bracket"] == ["x1_0", "-x1_1"]
    code, data = run_json(capsys, "bracket", "--model", "scl", "--v1", "1", "--v2", "z0")
    assert data["anchor"]["V1"] == "(eps)*d/dz0"
    assert data["bracket"] == ["eps"]
    assert run(capsys, "bracket", "--fibre-dim", "2", "--v1", "1", "--v2", "0; 0")[0] == EXIT_INPUT
    assert run(capsys, "bracket", "--v1", "1/(1+x1_0)", "--v2", "0")[0] == EXIT_INPUT


def test_output_file_is_byte_identical(capsys, tmp_path: Path) -> None:
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run(capsys, "resolve", "--builtin", "diagonal:3:1:scl", "--atlas", "--out", str(p))
    assert a.read_bytes() == b.read_bytes()
