import io
import json

from main import main

Y = "0.3,0.7,1.1,1.4"


def run(*argv):
    out = io.StringIO()
    status = main(list(argv), out=out)
    return status, out.getvalue()


def report(*argv):
    status, text = run(*argv)
    assert status == 0, text
    return json.loads(text)


def test_eval_integer_route_is_real():
    out = report("eval", "--alpha", "1", "--x", "0.8", "--y", Y)
    assert out["method"] == "contour-i"
    assert abs(out["value_im"]) <= max(out["err_estimate"], 1e-14)
    assert out["params"]["r"] == 4 and out["params"]["case"] == "0F0"
    assert out["wall_ms"] is None


def test_eval_zero_argument():
    out = report("eval", "--case", "1F1", "--a", "1.6", "--b", "2.4", "--x", "0", "--y", Y)
    assert out["value_re"] == 1 and out["value_im"] == 0
    assert out["effort"] == 0


def test_oracle_and_sphere_methods():
    series = report("oracle", "--x", "0.8", "--y", "1.2,0.7,0.3")
    assert series["method"] == "series"
    sphere = report("eval", "--method", "sphere", "--samples", "20000", "--x", "0.8", "--y", "1.2,0.7,0.3")
    assert sphere["method"] == "sphere-mc" and sphere["effort"] == 20000
    assert abs(sphere["value_re"] - series["value_re"]) <= 5 * sphere["err_estimate"]


def test_compare_reports_route_gaps():
    out = report("compare", "--case", "1F1", "--a", "1.6", "--b", "2.4", "--x", "0.8", "--y", "1.2,0.7,0.3")
    assert out["method"] == "contour-iii"
    assert set(out["results"]) == {"contour-ii", "contour-iii", "series"}
    assert out["failures"] == {}
    assert out["gaps"]["contour-ii|contour-iii"] < 1e-7
    assert out["gaps"]["contour-iii|series"] < 1e-7


def test_density_commands():
    lr = report("lr", "--n1", "10", "--n2", "12", "--h", "0.7", "--f", "1.5,0.8")
    assert lr["value_re"] > 0 and lr["params"]["p"] == 2
    density = report("density", "--n1", "10", "--n2", "12", "--h", "0.7", "--f", "1.5,0.8,0.3")
    assert density["method"] == "contour-iii"
    limit = report("lr-limit", "--n1", "10", "--h", "0.5", "--mu", "2,0.5")
    assert limit["params"]["tau"] == 0.5 / 1.5


def test_domain_failure_exit_code():
    status, text = run("eval", "--case", "1F0", "--a", "0.5", "--x", "1", "--y", "0.5,1.5")
    assert status == 2
    assert json.loads(text)["error"] == "DomainError"


def test_validation_failure_exit_code():
    status, _ = run("eval", "--case", "1F1", "--a", "1", "--x", "0.5", "--y", Y)
    assert status == 2
    status, text = run("lr", "--n1", "10", "--n2", "12", "--h", "0", "--f", "1.5,0.8")
    assert status == 2 and json.loads(text)["error"] == "ParameterError"
    status, _ = run("density", "--n1", "10", "--n2", "12", "--h", "0.7", "--f", "0.8,1.5")
    assert status == 2


def test_convergence_failure_exit_code():
    status, text = run("eval", "--alpha", "1", "--x", "0.8", "--y", Y, "--nodes", "40")
    assert status == 3
    assert json.loads(text)["error"] == "ConvergenceError"


def test_input_failure_exit_code(tmp_path):
    status, _ = run("eval", "--x", "0.8", "--y-file", str(tmp_path / "missing.txt"))
    assert status == 4
    bad = tmp_path / "bad.txt"
    bad.write_text("0.5\nabc\n")
    status, _ = run("eval", "--x", "0.8", "--y-file", str(bad))
    assert status == 4


def test_spectrum_file(tmp_path):
    path = tmp_path / "y.txt"
    path.write_text("# spectrum\n0.3\n0.7\n\n1.1\n1.4\n")
    from_file = report("eval", "--alpha", "1", "--x", "0.8", "--y-file", str(path))
    inline = report("eval", "--alpha", "1", "--x", "0.8", "--y", Y)
    assert from_file["value_re"] == inline["value_re"]


def test_csv_output():
    status, text = run("eval", "--alpha", "1", "--x", "0.8", "--y", Y, "--format", "csv")
    assert status == 0
    header, row = text.strip().split("\n")
    columns = dict(zip(header.split(","), row.split(",")))
    assert columns["method"] == "contour-i"
    assert columns["params.y"] == "0.29999999999999999;0.69999999999999996;1.1000000000000001;1.3999999999999999"
    assert columns["wall_ms"] == ""


def test_reports_are_deterministic():
    argv = ("eval", "--x", "0.8", "--y", "1.2,0.7,0.3")
    assert run(*argv) == run(*argv)


def test_timing_fills_wall_ms():
    out = report("eval", "--alpha", "1", "--x", "0.8", "--y", Y, "--timing")
    assert out["wall_ms"] >= 0


def test_eval_small_denominator_in_the_real_case():
    out = report("eval", "--case", "0F1", "--b", "1.2", "--alpha", "2", "--x", "0.8", "--y", "0.3,0.85,1.4")
    series = report("oracle", "--case", "0F1", "--b", "1.2", "--alpha", "2", "--x", "0.8", "--y", "0.3,0.85,1.4")
    assert out["method"] == "contour-ii"
    assert abs(out["value_re"] - series["value_re"]) <= 1e-7 * abs(series["value_re"])
