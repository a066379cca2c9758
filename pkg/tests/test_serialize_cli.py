import json
import os
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tropadel import serialize as ser
from tropadel.adelic import BoundaryDatum
from tropadel.berkovich import CoefficientSpec, LaurentPoly, MonomialPoint, TRational
from tropadel.cli import main, run
from tropadel.conical import PLConical
from tropadel.divisors import MonomialArc, ToricBoundaryDivisor
from tropadel.heights import HomogeneousRational
from tropadel.intersect import RationalPolytope
from tropadel.lattice import product_of_lines, projective_space


def write(tmp, name, obj):
    path = tmp / name
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    p2 = projective_space(2)
    sq = product_of_lines(2)
    paths = {
        "p2": write(tmp, "p2.json", ser.fan_to_json(p2)),
        "sq": write(tmp, "sq.json", ser.fan_to_json(sq)),
        "H": write(tmp, "H.json", ser.divisor_to_json(ToricBoundaryDivisor.prime(p2, 0))),
        "z": write(tmp, "z.json", ser.divisor_to_json(ToricBoundaryDivisor(sq, [1, 1, 1, 1]))),
        "a32": write(tmp, "a32.json", ser.point_to_json(MonomialPoint(F(0), (F(3), F(-2))))),
        "o": write(tmp, "o.json", ser.point_to_json(MonomialPoint(F(0), (F(0), F(0))))),
        "p34": write(tmp, "p34.json", ser.point_to_json(MonomialPoint(F(0), (F(3), F(4))))),
        "f": write(tmp, "f.json", ser.pl_to_json(PLConical(sq, [2, 1, 1, 3]))),
        "g": write(tmp, "g.json", ser.pl_to_json(PLConical(sq, [1, 1, 2, 1]))),
        "h": write(tmp, "h.json", ser.pl_to_json(PLConical(sq, [1, 1, 1, 1]))),
        "poly": write(tmp, "poly.json", ser.poly_to_json(LaurentPoly({(1, 0): 1, (0, 1): 2}))),
        "ideal": write(tmp, "ideal.json", {"gens": [[1, 0], [0, 1]]}),
        "arc": write(tmp, "arc.json", ser.arc_to_json(MonomialArc((0, 1), (2, 3)))),
        "mu": write(tmp, "mu.json", ser.mu_to_json(
            HomogeneousRational({(1, 1): 1}, {(1, 0): 1, (0, 1): 1}))),
    }
    res = run(["adelic", "approx", "--oracle", "euclid", "--fan", paths["sq"],
               "--boundary", paths["z"], "--tol", "1/50"])
    assert res.exit_code == 0, res.stderr
    paths["seq"] = str(tmp / "seq.json")
    with open(paths["seq"], "w") as fh:
        fh.write(res.stdout)
    x = np.logspace(-1, 2.8, 20)
    rows = "\n".join(f"{float(np.exp(-v))!r},{float(0.75 * v)!r}" for v in x)
    (tmp / "slope.csv").write_text("s,h\n" + rows + "\n")
    paths["slope"] = str(tmp / "slope.csv")
    rng = np.random.default_rng(0)
    xs = 10 ** rng.uniform(-1, 2.5, size=(300, 2))
    rows = "\n".join(f"{float(np.exp(-a))!r},{float(np.exp(-b))!r},{float(a + 2 * b + 1)!r}" for a, b in xs)
    (tmp / "res.csv").write_text("z1,z2,g\n" + rows + "\n")
    paths["res"] = str(tmp / "res.csv")
    paths["bad"] = write(tmp, "bad.json", {"dim": 2})
    (tmp / "junk.json").write_text("{not json")
    paths["junk"] = str(tmp / "junk.json")
    paths["tmp"] = tmp
    return paths


def ok(argv):
    res = run(argv)
    assert res.exit_code == 0, res.stderr
    return json.loads(res.stdout)


# ---------------------------------------------------------------- round trips

def test_number_format():
    assert ser.dump_number(F(3, 2)) == "3/2"
    assert ser.dump_number(F(4)) == "4/1"
    assert ser.dump_number(float("inf")) == "inf"
    assert ser.load_number("-7/3") == F(-7, 3)
    for bad in ("inf", "x/2", "1/0"):
        with pytest.raises(ser.FormatError):
            ser.load_number(bad)


@given(st.lists(st.fractions(max_denominator=50), min_size=4, max_size=4))
def test_pl_round_trip(vals):
    f = PLConical(product_of_lines(2), vals)
    g = ser.pl_from_json(json.loads(ser.dumps(ser.pl_to_json(f))))
    assert list(g.ray_values) == list(f.ray_values) and g.fan.same_as(f.fan)


def test_object_round_trips():
    p2 = projective_space(2)
    d = ToricBoundaryDivisor(p2, [F(1, 3), 2, -1])
    assert ser.divisor_from_json(ser.divisor_to_json(d)).coeffs == d.coeffs
    tadic = CoefficientSpec("t-adic")
    poly = LaurentPoly({(1, 0): TRational({1: F(2)}, {0: F(1), 2: F(1)}), (0, 2): F(5)}, tadic)
    back = ser.poly_from_json(json.loads(ser.dumps(ser.poly_to_json(poly))))
    assert ser.poly_to_json(back) == ser.poly_to_json(poly)
    pt = MonomialPoint(F(1, 2), (F(3), F(-1, 7)), tadic)
    assert ser.point_from_json(ser.point_to_json(pt)) == pt
    poly3 = RationalPolytope.from_points([[0, 0], [1, 0], [0, 1], [F(1, 3), F(1, 3)]])
    assert sorted(ser.polytope_from_json(ser.polytope_to_json(poly3)).vertices) == sorted(poly3.vertices)
    mu = HomogeneousRational({(2, 0): F(1, 2), (1, 1): 3}, {(1, 0): 1})
    assert ser.mu_to_json(ser.mu_from_json(ser.mu_to_json(mu))) == ser.mu_to_json(mu)


def test_fan_json_normalizes_rays():
    f = ser.fan_from_json({"dim": 1, "rays": [["2/1"], ["-1/3"]], "cones": [[0], [1]]})
    assert f.rays == ((1,), (-1,))


def test_format_errors():
    with pytest.raises(ser.FormatError):
        ser.fan_from_json({"dim": 2})
    with pytest.raises(ser.FormatError):
        ser.fan_from_json({"dim": 1, "rays": [["0"]], "cones": [[0]]})
    with pytest.raises(ser.FormatError):
        ser.read_samples_csv("1,2\n3,4\n")
    with pytest.raises(ser.FormatError):
        ser.read_samples_csv("a,b\n1,x\n")
    with pytest.raises(ser.FormatError):
        ser.read_samples_csv("")


def test_sequence_round_trip(files):
    with open(files["seq"]) as fh:
        obj = json.load(fh)
    seq = ser.sequence_from_json(obj)
    assert ser.dumps(ser.sequence_to_json(seq)) + "\n" == open(files["seq"]).read()


# ---------------------------------------------------------------- commands

def test_pair_intersect_example(files):
    assert ok(["pair", "intersect", "--divisors", files["H"], files["H"]]) == {"value": "1/1"}


def test_point_trop_example(files):
    assert ok(["point", "trop", "--point", files["a32"]]) == {"a": ["3/1", "-2/1"]}


def test_adelic_verify_example(files):
    rep = ok(["adelic", "verify", "--seq", files["seq"], "--boundary", files["z"], "--prefix", "3"])
    assert rep["passed"] and len(rep["pairs"]) == 3


def test_verify_jobs_is_byte_identical(files):
    argv = ["adelic", "verify", "--seq", files["seq"], "--prefix", "3"]
    assert run(argv).stdout == run(argv + ["--jobs", "2"]).stdout


def test_adelic_green(files):
    out = ok(["adelic", "green", "--seq", files["seq"], "--point", files["p34"], "--tol", "1/2"])
    assert abs(float(F(out["value"])) - 5) <= float(F(out["error_bound"]))
    # the short sequence cannot certify a tight tolerance
    tight = run(["adelic", "green", "--seq", files["seq"], "--point", files["p34"], "--tol", "1/1000"])
    assert tight.exit_code == 1


def test_fan_commands(files):
    v = ok(["fan", "validate", "--fan", files["p2"]])
    assert v["valid"] and v["complete"] and v["simplicial"]
    r = ok(["fan", "refine", "--fans", files["p2"], files["sq"]])
    assert ser.fan_from_json(r).is_simplicial
    s = ok(["fan", "simplicialize", "--fan", files["sq"]])
    assert len(s["cones"]) == 4


def test_sf_commands(files):
    assert ok(["sf", "eval", "--function", files["f"], "--at", "1/2,1"]) == {"value": "2/1"}
    added = ser.pl_from_json(ok(["sf", "add", "--functions", files["f"], files["g"]]))
    assert [str(x) for x in added.ray_values] == ["3", "2", "3", "4"]
    lo = ser.pl_from_json(ok(["sf", "min", "--functions", files["f"], files["g"]]))
    assert lo.eval([1, 0]) == 1
    norm = ok(["sf", "norm", "--function", files["f"], "--boundary", files["z"]])
    assert norm["value"] == "3/1"


def test_divisor_commands(files):
    sf = ser.pl_from_json(ok(["divisor", "sf", "--divisor", files["H"]]))
    assert sf.eval(projective_space(2).rays[0]) == 1
    pb = ok(["divisor", "pullback", "--divisor", files["H"], "--a=-1,0"])
    assert set(pb) == {"ord_at_0", "ord_at_infty"}
    assert ok(["divisor", "arc-order", "--divisor", files["H"], "--arc", files["arc"]]) == {"value": "2/1"}


def test_point_commands(files):
    assert ok(["point", "eval", "--point", files["a32"], "--poly", files["poly"]]) == {"value": "-2/1"}
    assert ok(["point", "equiv", "--points", files["a32"], files["a32"]])["equivalent"]
    assert ok(["point", "green", "--point", files["p34"], "--ideal", files["ideal"]]) == {"value": "3/1"}
    assert ok(["point", "interior", "--point", files["a32"], "--boundary", files["z"]]) == {"interior": False}
    assert ok(["point", "interior", "--point", files["o"], "--boundary", files["z"]]) == {"interior": True}


def test_pair_adelic_and_ma(files):
    sq_h = write(files["tmp"], "sqh.json", ser.divisor_to_json(
        ToricBoundaryDivisor.prime(product_of_lines(2), 0)))
    rep = ok(["pair", "adelic", "--seq", files["seq"], "--divisors", sq_h, "--tol", "1/5"])
    assert F(rep["certified_error"]) >= 0
    ma = ok(["pair", "ma", "--function", files["h"], "--divisors", sq_h, "--boundary", files["z"]])
    assert ma == {"value": "2/1"}


def test_slope_commands(files):
    fit = ok(["slope", "fit", "--samples", files["slope"]])
    assert fit["slope"] == pytest.approx(0.75) and fit["samples"] == 20
    assert ok(["slope", "expect", "--mu", files["mu"], "--orders", "1,2"]) == {"value": "2/3"}
    res = ok(["slope", "residual", "--samples", files["res"], "--vertex-values", "1,2"])
    assert res["passed"]


def test_failed_check_exits_one(files):
    res = run(["slope", "residual", "--samples", files["res"], "--vertex-values", "1,3"])
    assert res.exit_code == 1 and "check failed" in res.stderr
    assert json.loads(res.stdout)["passed"] is False


@pytest.mark.parametrize("argv", [
    ["nosuch"],
    ["fan", "explode", "--fan", "x"],
    ["fan", "validate"],
    ["fan", "validate", "--fan", "/does/not/exist.json"],
])
def test_input_errors_exit_two(argv):
    assert run(argv).exit_code == 2


def test_malformed_files_exit_two(files):
    assert run(["fan", "validate", "--fan", files["bad"]]).exit_code == 2
    assert run(["fan", "validate", "--fan", files["junk"]]).exit_code == 2
    assert run(["sf", "eval", "--function", files["f"], "--at", "1,q"]).exit_code == 2
    assert run(["point", "trop", "--point", files["a32"], "--jobs", "0"]).exit_code == 2


def test_determinism(files):
    argv = ["adelic", "approx", "--fan", files["sq"], "--boundary", files["z"], "--tol", "1/20",
            "--seed", "3"]
    assert run(argv).stdout == run(argv).stdout


def test_no_color_env(files, monkeypatch):
    monkeypatch.setenv("TROPADEL_NO_COLOR", "1")
    assert "\033[" not in run(["fan", "validate", "--fan", files["bad"]]).stderr


def test_main_writes_streams(files, capsys):
    assert main(["point", "trop", "--point", files["a32"]]) == 0
    assert json.loads(capsys.readouterr().out) == {"a": ["3/1", "-2/1"]}


def test_module_entry_point(files):
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-m", "tropadel", "point", "trop", "--point", files["a32"]],
                         capture_output=True, text=True, env={**os.environ, "TROPADEL_NO_COLOR": "1"})
    assert out.returncode == 0 and json.loads(out.stdout)["a"] == ["3/1", "-2/1"]
