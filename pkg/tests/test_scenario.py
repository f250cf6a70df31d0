import json
from fractions import Fraction

import pytest
import toml
from click.testing import CliRunner

from folnerkit.cli import main
from folnerkit.errors import ScenarioError
from folnerkit.scenario import (
    EXIT_ERROR,
    EXIT_OK,
    EXIT_TARGET_NOT_MET,
    DefectTask,
    SuiteTask,
    config_hash,
    execute,
    load_scenario,
    parse_scenario,
    run_scenario,
)

BOX = """
name = "box"
task = "defect"
E = ["1,0", "0,1"]
radius = "{radius}"
theta = "{theta}"

[model]
kind = "lattice"
params = {{ dimension = 2 }}

[F]
box = 4
"""

LATTICE = json.dumps({"kind": "lattice", "params": {"dimension": 2}})
FREE = json.dumps({"kind": "free", "params": {"rank": 2}})


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_box_scenario_writes_three_artifacts(write_scenario, tmp_path):
    path = write_scenario("box", BOX.format(radius="0", theta="3/4"))
    out = tmp_path / "out"
    assert run_scenario(path, out) == EXIT_OK
    certificate = json.loads((out / "box.json").read_text())
    assert certificate["theta"] == "3/4"
    assert (out / "box.csv").read_text().splitlines()[0].startswith("g,size,mu,theta")
    manifest = toml.load(out / "box.manifest.toml")
    assert manifest["scenario"]["config_hash"] == config_hash(load_scenario(path))
    assert manifest["run"]["status"] == EXIT_OK
    assert manifest["artifacts"] == {"certificate": "box.json", "report": "box.csv"}


def test_unmet_target_exits_two(write_scenario, tmp_path):
    path = write_scenario("box", BOX.format(radius="0", theta="4/5"))
    assert run_scenario(path, tmp_path / "out") == EXIT_TARGET_NOT_MET


def test_certificates_are_byte_identical_across_runs(write_scenario, tmp_path):
    path = write_scenario("box", BOX.format(radius="0", theta="3/4"))
    run_scenario(path, tmp_path / "a")
    run_scenario(path, tmp_path / "b", workers=3)
    assert (tmp_path / "a" / "box.json").read_bytes() == (tmp_path / "b" / "box.json").read_bytes()


def test_malformed_radius_names_its_field(write_scenario):
    path = write_scenario("box", BOX.format(radius="0.1.1", theta="3/4"))
    with pytest.raises(ScenarioError) as caught:
        load_scenario(path)
    assert caught.value.field_path == "defect.radius"


@pytest.mark.parametrize(
    "text",
    [
        'task = "defect"\n[model]\nkind = "lattice"\n',
        'task = "teleport"\n',
        'name = "x"\ntask = "suite"\nunknown = 1\n',
        'task = "defect"\nE = []\n[model]\nkind = "lattice"\n[F]\nbox = 2\nball = 2\n',
        "task = [unterminated\n",
    ],
)
def test_malformed_scenarios_exit_one(write_scenario, tmp_path, text):
    assert run_scenario(write_scenario("bad", text), tmp_path / "out") == EXIT_ERROR
    assert not (tmp_path / "out" / "bad.json").exists()


def test_missing_scenario_file_exits_one(tmp_path):
    assert run_scenario(tmp_path / "nowhere.toml", tmp_path) == EXIT_ERROR


def test_parse_scenario_defaults():
    scenario = parse_scenario({"task": "defect", "model": {"kind": "free"}, "F": {"ball": 2}, "E": ["a"]})
    assert isinstance(scenario, DefectTask)
    assert scenario.radius == 0 and scenario.theta is None and scenario.name == "scenario"
    assert isinstance(parse_scenario({"task": "suite"}), SuiteTask)


def test_config_hash_ignores_spelling_of_rationals():
    base = {"task": "defect", "model": {"kind": "free"}, "F": {"ball": 2}, "E": ["a"]}
    one = parse_scenario({**base, "radius": "1/2"})
    two = parse_scenario({**base, "radius": "0.5"})
    assert one.radius == Fraction(1, 2)
    assert config_hash(one) == config_hash(two)


def test_execute_precedence_of_budget():
    scenario = parse_scenario({"task": "search", "model": {"kind": "free"}, "E": ["a", "b"], "theta": "3/5", "budget": 3})
    assert len(execute(scenario).rows) == 3
    assert len(execute(scenario, budget=2).rows) == 2


def test_bundled_scenarios_parse(scenario_dir):
    names = sorted(p.stem for p in scenario_dir.glob("*.toml"))
    assert "defect_z2_box" in names
    for path in scenario_dir.glob("*.toml"):
        assert load_scenario(path).name == path.stem


def test_cli_run_with_config(write_scenario, tmp_path):
    path = write_scenario("box", BOX.format(radius="0", theta="3/4"))
    result = invoke("--out-dir", tmp_path / "out", "run", "--config", path)
    assert result.exit_code == EXIT_OK
    assert (tmp_path / "out" / "box.json").exists()


def test_cli_malformed_radius_exits_one(write_scenario, tmp_path):
    path = write_scenario("box", BOX.format(radius="0.1.1", theta="3/4"))
    assert invoke("--out-dir", tmp_path, "run", "--config", path).exit_code == EXIT_ERROR
    assert invoke("--out-dir", tmp_path, "run", "--config", tmp_path / "missing.toml").exit_code == EXIT_ERROR


def test_cli_defect_from_options(tmp_path):
    result = invoke(
        "--out-dir", tmp_path, "folner-defect",
        "--model", LATTICE, "--F", json.dumps(["0,0", "1,0", "0,1", "1,1"]), "--E", json.dumps(["1,0"]), "--name", "square",
    )
    assert result.exit_code == EXIT_OK
    assert json.loads((tmp_path / "square.json").read_text())["theta"] == "1/2"


def test_cli_option_errors_exit_one(tmp_path):
    assert invoke("--out-dir", tmp_path, "folner-defect", "--model", "{not json", "--F", "[]", "--E", "[]").exit_code == EXIT_ERROR
    assert invoke("--out-dir", tmp_path, "folner-defect", "--F", "[]", "--E", "[]").exit_code == EXIT_ERROR
    assert invoke("--out-dir", tmp_path, "folner-defect", "--model", LATTICE, "--F", '["0,0"]', "--E", '["1,0"]', "--radius", "0.1.1").exit_code == EXIT_ERROR


def test_cli_search_not_met_exits_two(tmp_path):
    result = invoke(
        "--out-dir", tmp_path, "--budget", 4, "folner-search",
        "--model", FREE, "--E", json.dumps(["a", "b"]), "--theta", "3/5", "--strategy", "balls",
    )
    assert result.exit_code == EXIT_TARGET_NOT_MET
    payload = json.loads((tmp_path / "search.json").read_text())
    assert payload["found"] is False and payload["best_theta"] == "80/161"


def test_cli_matching_prints_witness():
    instance = json.dumps({"E": [0, 1, 2], "F": [0, 1], "edges": [[0, 0], [1, 0], [2, 0]]})
    result = invoke("matching", "--instance", instance)
    assert result.exit_code == EXIT_OK
    payload = json.loads(result.output)
    assert payload["result"]["mu"] == 1
    assert payload["result"]["witness"] == [0, 1, 2]


def test_cli_model_prints_norms():
    result = invoke("model", "--model", FREE, "--element", "abA")
    assert result.exit_code == EXIT_OK
    assert "norm=3" in result.output
    assert invoke("model", "--model", json.dumps({"kind": "klein"})).exit_code == EXIT_ERROR


def test_cli_paradox_verify(tmp_path):
    result = invoke("--out-dir", tmp_path, "paradox", "verify", "--model", FREE, "--ball", 3)
    assert result.exit_code == EXIT_OK
    payload = json.loads((tmp_path / "paradox-verify.json").read_text())
    assert payload["interior_violations"] == 0 and payload["window_size"] == 53


def test_cli_perturb_verify_reports_violations(tmp_path):
    circle = json.dumps({"kind": "circle"})
    action = {"window": ["0", "1/2"], "pool": ["1/2"], "rows": {"1/2": [0, 1]}, "radius": "1/10"}
    result = invoke("perturb", "verify", "--model", circle, "--action", json.dumps(action), "--radius", "1/10")
    assert result.exit_code == EXIT_TARGET_NOT_MET
    assert "2 violations" in result.output


def test_cli_wobble_prints_pieces():
    z = json.dumps({"kind": "lattice", "params": {"dimension": 1}})
    result = invoke("perturb", "wobble", "--model", z, "--permutation", json.dumps({"0": "1", "1": "0"}), "--pool", json.dumps(["-1", "1"]))
    assert result.exit_code == EXIT_OK
    assert result.output.splitlines() == ["-1\t1", "1\t0"]
    failed = invoke("perturb", "wobble", "--model", z, "--permutation", json.dumps({"0": "1", "1": "0"}), "--pool", json.dumps(["1"]))
    assert failed.exit_code == EXIT_ERROR
    assert "witness 1" in failed.output


def test_exhausted_budget_exits_two_with_partial_report(tmp_path):
    family = json.dumps([{"E": ["0", "1/5"], "n": 4}])
    result = invoke(
        "--out-dir", tmp_path, "--budget", 1, "perturb", "build",
        "--model", json.dumps({"kind": "circle"}), "--family", family, "--radius", "1/10",
    )
    assert result.exit_code == EXIT_TARGET_NOT_MET
    payload = json.loads((tmp_path / "perturb.json").read_text())
    assert payload["budget_exhausted"] is True and payload["task"] == "perturb"
    assert payload["partial"]["evaluated"] == 1 and payload["partial"]["index"] == 0
    assert payload["partial"]["packages"] == []
    assert "budget exhausted" in (tmp_path / "perturb.csv").read_text()
    manifest = toml.load(tmp_path / "perturb.manifest.toml")
    assert manifest["run"]["status"] == EXIT_TARGET_NOT_MET
    assert manifest["failure"]["kind"] == "BudgetExhaustedError"


def test_suite_report_is_stable_and_timing_goes_to_the_manifest(write_scenario, tmp_path):
    cases = tmp_path / "cases"
    cases.mkdir()
    (cases / "line.toml").write_text(
        'name = "line"\ntask = "defect"\nE = ["1"]\n[model]\nkind = "lattice"\nparams = { dimension = 1 }\n[F]\ninterval = [0, 3]\n'
    )
    path = write_scenario("table", 'name = "table"\ntask = "suite"\nchecks = []\nscenario_dir = "cases"\n')
    assert run_scenario(path, tmp_path / "a") == EXIT_OK
    assert run_scenario(path, tmp_path / "b") == EXIT_OK
    report = (tmp_path / "a" / "table.csv").read_text()
    assert report.splitlines()[0] == "check,passed,measured"
    assert report == (tmp_path / "b" / "table.csv").read_text()
    manifest = toml.load(tmp_path / "a" / "table.manifest.toml")
    assert set(manifest["timing"]["checks"]) == {"scenario:line"}
