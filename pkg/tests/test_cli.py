import json

import numpy as np
import pytest
from PIL import Image

from minvset.cli import (
    EXIT_OK,
    EXIT_PARSE,
    EXIT_PRECONDITION,
    EXIT_UNBOUNDED,
    main,
    operator_from_json,
    operator_to_json,
    read_csv,
    write_csv,
)
from minvset.errors import ParseError
from minvset.operator import DiffOperator

from .operators import EXPANDING, LEVY, hyp_operator


def spec_file(tmp_path, T, name="op.json"):
    path = tmp_path / name
    path.write_text(json.dumps(operator_to_json(T)))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spec_round_trip():
    T = operator_from_json(json.loads(json.dumps(operator_to_json(LEVY))))
    assert T.allclose(LEVY, atol=0)
    mixed = {"coeffs": [[1, "2-3i"], [[0.5, -1]]]}
    assert operator_from_json(mixed).allclose(DiffOperator([[1, 2 - 3j], [0.5 - 1j]]))


@pytest.mark.parametrize("bad", [{}, {"coeffs": 3}, {"coeffs": [[True]]}, {"coeffs": [["x"]]}])
def test_spec_rejections(bad):
    with pytest.raises(ParseError):
        operator_from_json(bad)


def test_malformed_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"coeffs": [[1,\n 2,]]}')
    code, _, err = run(capsys, "classify", path)
    assert code == EXIT_PARSE
    assert "line 2" in err and "column" in err


def test_all_zero_operator_is_a_parse_error(tmp_path, capsys):
    path = tmp_path / "zero.json"
    path.write_text('{"coeffs": [[0], [0, 0]]}')
    assert run(capsys, "classify", path)[0] == EXIT_PARSE


def test_classify_reports_spectrum(tmp_path, capsys):
    code, out, _ = run(capsys, "classify", spec_file(tmp_path, EXPANDING))
    rep = json.loads(out)
    assert code == EXIT_OK and rep["exactly_solvable"] and rep["n"] == 2
    lam = [complex(*p) if isinstance(p, list) else p for p in rep["spectrum"]]
    assert np.allclose(lam, [-27 / 32, -15 / 16, 1])


def test_correspond_family(capsys):
    code, out, _ = run(capsys, "correspond", "family", "--m", 1, "--n", 2, "--q", "a=1,b=0")
    T = operator_from_json(json.loads(out))
    assert code == EXIT_OK
    assert T.allclose(DiffOperator([[-2], [0, 1]]))


def test_correspond_ifs(capsys):
    code, out, _ = run(capsys, "correspond", "ifs", "--maps", "[[-2.25,1],[0.375,1]]")
    assert code == EXIT_OK
    assert operator_from_json(json.loads(out)).allclose(EXPANDING, atol=1e-15)


def test_correspond_one_point(tmp_path, capsys):
    code, out, _ = run(capsys, "correspond", "one-point", spec_file(tmp_path, hyp_operator(3)), "--n", 3)
    pts = json.loads(out)["points"]
    got = sorted(complex(*p["z0"]).real for p in pts)
    assert code == EXIT_OK and np.allclose(got, [1, 2, 3], atol=1e-8)


def test_correspond_psi_then_phi(tmp_path, capsys):
    code, out, _ = run(capsys, "correspond", "psi", spec_file(tmp_path, LEVY), "--n", 2)
    rep = json.loads(out)
    assert code == EXIT_OK and len(rep["affine_maps"]) == 2
    matrix = tmp_path / "psi.json"
    matrix.write_text(json.dumps(rep))
    code, out, _ = run(capsys, "correspond", "phi", matrix, "--k", 2)
    assert operator_from_json(json.loads(out)).allclose(LEVY, atol=1e-14)


def test_julia_needs_a_z_dependent_image(tmp_path, capsys):
    path = spec_file(tmp_path, DiffOperator([[0], [1, 1]]))
    code, _, err = run(capsys, "julia", path, "--out", tmp_path / "j")
    assert code == EXIT_PRECONDITION and "DegenerateImage" in err


def test_converge_precondition(tmp_path, capsys):
    path = spec_file(tmp_path, DiffOperator.derivative())
    code, _, _ = run(capsys, "converge", path, "--n-range", "1-2", "--out", tmp_path / "c")
    assert code == EXIT_PRECONDITION


def test_iterate_unbounded_exit_code(tmp_path, capsys):
    out = tmp_path / "it"
    code, _, _ = run(capsys, "iterate", spec_file(tmp_path, EXPANDING), "--n", 2, "--eps", "5e-3", "--out", out)
    assert code == EXIT_UNBOUNDED
    assert json.loads((out / "report.json").read_text())["status"] == "Unbounded"


def test_iterate_writes_csv_png_and_manifest(tmp_path, capsys):
    out = tmp_path / "it"
    argv = ["iterate", spec_file(tmp_path, LEVY), "--n", 2, "--eps", "1e-2", "--png", "120x80", "--out", out]
    assert run(capsys, *argv)[0] == EXIT_OK
    with Image.open(out / "cloud.png") as im:
        assert im.size == (120, 80)
    cloud = read_csv(out / "cloud.csv")
    assert cloud.size > 100
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "iterate" and man["config"]["eps"] == 1e-2
    assert "threads" not in json.dumps(man)
    assert run(capsys, "replay", out / "manifest.json")[0] == EXIT_OK
    assert (out / "replay" / "cloud.csv").read_bytes() == (out / "cloud.csv").read_bytes()


def test_bad_png_size(tmp_path, capsys):
    argv = ["iterate", spec_file(tmp_path, LEVY), "--n", 2, "--png", "12by8", "--out", tmp_path / "x"]
    assert run(capsys, *argv)[0] == EXIT_PRECONDITION


def test_bad_family_letter(capsys):
    assert run(capsys, "correspond", "family", "--m", 1, "--n", 2, "--q", "c=1")[0] == EXIT_PARSE


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(12)
    z = rng.normal(size=200) + 1j * rng.normal(size=200)
    z[0] = 0.1 + 1e-300j
    write_csv(tmp_path / "c.csv", z)
    assert (tmp_path / "c.csv").read_text().startswith("re,im\n")
    assert np.array_equal(read_csv(tmp_path / "c.csv"), z)
