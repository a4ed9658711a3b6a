import json

import pytest

from betatargets import cli
from betatargets.errors import PlanError

CLASSIFY = """
mode = "classify"
betas = [2, 3]
psi = ["exp(-1.2*n)", "exp(-n^2)"]
f = "r^0.9"
n_range = [3, 12]
"""


def plan_errors(text, fmt=None):
    with pytest.raises(PlanError) as info:
        cli.parse_plan(text, fmt)
    return dict(info.value.errors)


def test_minimal_classify_plan():
    plan = cli.parse_plan(CLASSIFY)
    assert plan.mode == "classify" and plan.betas == [2, 3] and plan.f == "r^0.9"


def test_json_plan_equals_toml_plan():
    data = {"mode": "classify", "betas": [2, 3], "psi": ["exp(-1.2*n)", "exp(-n^2)"], "f": "r^0.9",
            "n_range": [3, 12]}
    assert cli.parse_plan(json.dumps(data)).plan_hash() == cli.parse_plan(CLASSIFY).plan_hash()


def test_unsorted_betas_rejected():
    errs = plan_errors(CLASSIFY.replace("[2, 3]", "[3, 2]"))
    assert "betas must be nondecreasing" in errs["betas"]


def test_decreasing_f_rejected():
    errs = plan_errors(CLASSIFY.replace('"r^0.9"', '"r^-1"'))
    assert "dimension function must be nondecreasing" in errs["f"]


def test_all_errors_reported_with_paths():
    errs = plan_errors('mode = "classify"\nbetas = [3, 2]\nf = "r^-1"\nbogus = 1\n[output]\ncolour = "red"\n')
    assert {"betas", "f", "bogus", "output.colour"} <= set(errs)


def test_unknown_mode_and_bad_syntax():
    assert "mode" in plan_errors('mode = "nope"')
    assert "$" in plan_errors("mode = ", "toml")


def test_plan_hash_ignores_output():
    a = cli.parse_plan(CLASSIFY)
    b = cli.parse_plan(CLASSIFY + '\n[output]\ndir = "/tmp/x"\nformat = "csv"\n')
    assert a.plan_hash() == b.plan_hash()
    assert a.plan_hash() != cli.parse_plan(CLASSIFY.replace("12]", "13]")).plan_hash()


def test_w2star_bundle():
    bundle = cli.run(cli.plan_from_dict({"mode": "w2star", "t": "2", "f": "r^1", "grid": False}))
    assert bundle.verdicts["w2star"]["conclusion"] == "MeasureZero"
    assert bundle.passed


def test_verify_core_golden():
    bundle = cli.run(cli.plan_from_dict({"mode": "verify-core", "betas": ["golden"], "n_range": [1, 12]}))
    names = [c.name for c in bundle.checks]
    assert len(names) == len(set(names))
    assert any("renyi" in n for n in names) and any("li" in n for n in names) and any("concat" in n for n in names)
    assert bundle.passed


def test_non_integer_divergence_is_flagged_not_failed(tmp_path):
    cfg = tmp_path / "plan.toml"
    cfg.write_text('mode = "classify"\nbetas = [2, 2.5]\npsi = ["1/n", "1/n"]\nf = "r^1"\nn_range = [3, 8]\n')
    out = tmp_path / "out"
    assert cli.main(["classify", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["verdicts"]["classify"]["conclusion"] == "HypothesisFailed"
    assert any(c["status"] == "flagged" for c in report["checks"])


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(CLASSIFY.replace("[2, 3]", "[3, 2]"))
    assert cli.main(["classify", "--config", str(bad)]) == cli.EXIT_USAGE
    assert "plan error at betas" in capsys.readouterr().err
    assert cli.main(["classify", "--config", str(tmp_path / "missing.toml")]) == cli.EXIT_USAGE
    assert cli.main(["no-such-command"]) == cli.EXIT_USAGE
    assert cli.main(["w2star", "--config", str(bad)]) == cli.EXIT_USAGE


def test_failed_check_gives_exit_one(monkeypatch):
    from betatargets import suites

    def failing(plan):
        res = suites.SuiteResult()
        res.check("always_false", False)
        return res

    monkeypatch.setitem(suites.SUITES, "enumerate", failing)
    assert cli.main(["enumerate", "--format", "csv"]) == cli.EXIT_FAIL


def test_resource_error_gives_partial_bundle(tmp_path):
    cfg = tmp_path / "plan.json"
    cfg.write_text(json.dumps({"mode": "enumerate", "betas": [3], "n_range": [1, 30]}))
    out = tmp_path / "out"
    assert cli.main(["enumerate", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_RESOURCE
    report = json.loads((out / "report.json").read_text())
    assert report["incomplete"] and "cap" in report["error"]


def test_report_files_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["measure", "--seed", "3", "--out", str(out), "--format", "csv"]) == cli.EXIT_OK
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert {"report.json", "run_info.json", "checks.csv", "measure.csv", "measure.png"} <= {p.name for p in a.iterdir()}
    report = json.loads((a / "report.json").read_text())
    assert report["schema_version"] == cli.SCHEMA_VERSION and report["plan"]["seed"] == 3


def test_seed_changes_hash():
    a = cli.plan_from_dict({"mode": "measure", "seed": 1})
    b = cli.plan_from_dict({"mode": "measure", "seed": 2})
    assert a.plan_hash() != b.plan_hash()


def test_stdout_csv(capsys):
    assert cli.main(["w2star", "--format", "csv"]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith("name,status,measured")


def test_map_specs_in_plan():
    plan = cli.plan_from_dict({"mode": "measure", "maps": [{"kind": "affine", "slope": "0.5", "offset": "0.1"}],
                               "n_range": [3, 8], "samples": 2000})
    assert cli.run(plan).passed
    plan = cli.plan_from_dict({"mode": "measure", "maps": ["identity"], "n_range": [3, 8], "samples": 2000})
    assert cli.run(plan).passed


def test_exact_oracle_uses_constant_from_dict():
    plan = cli.plan_from_dict({"mode": "measure", "maps": [{"kind": "constant", "value": "1/3"}], "betas": [3],
                               "n_range": [3, 6], "samples": 20000})
    bundle = cli.run(plan)
    exact = next(r["value"] for r in bundle.tables["measure"] if r["quantity"] == "exact_union")
    assert bundle.passed
    # listing oracle value for h = 1/3, psi = 1/n, base 3, levels 3..6
    assert exact == pytest.approx(251 / 270, rel=1e-12)
