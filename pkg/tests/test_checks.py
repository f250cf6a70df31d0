from folnerkit.checks import CheckResult, load_checks, run_suite, timed
from folnerkit.checks.matching import engine_mu, hall_deficiency, hall_identity, perfect_hall, random_instances
from folnerkit.matching import BipartiteInstance


def off_by_one(instance):
    return max(engine_mu(instance) - 1, 0)


def test_engine_passes_the_matching_checks():
    assert hall_identity().passed
    assert perfect_hall().passed


def test_fault_injected_matcher_is_caught():
    result = hall_identity(off_by_one)
    assert not result.passed
    assert "first mismatch" in result.measured
    assert not perfect_hall(off_by_one).passed


def test_random_instances_are_reproducible():
    first = [inst.to_json() for inst in random_instances(20, seed=7)]
    assert first == [inst.to_json() for inst in random_instances(20, seed=7)]


def test_hall_deficiency_by_enumeration():
    star = BipartiteInstance.from_edges(3, 2, [(0, 0), (1, 0), (2, 0)])
    assert hall_deficiency(star) == 2
    assert hall_deficiency(BipartiteInstance.from_edges(2, 2, [(0, 0), (1, 1)])) == 0


def test_timed_turns_exceptions_into_failed_rows():
    def body():
        raise RuntimeError("solver fell over")

    result = timed("broken", body)
    assert not result.passed
    assert result.measured == "error: solver fell over"
    assert timed("fine", lambda: (True, 3)).as_row()["measured"] == "3"


def test_check_result_row_leaves_timing_out():
    fast = CheckResult("matching", True, "ok", 0.12345).as_row()
    slow = CheckResult("matching", True, "ok", 9.5).as_row()
    assert fast == slow == {"check": "matching", "passed": True, "measured": "ok"}


def test_unknown_check_module_is_skipped():
    assert load_checks(["no_such_check"]) == []
    assert len(load_checks(["matching"])) == 2


def test_empty_suite(tmp_path):
    assert run_suite([], tmp_path) == []
    assert run_suite([], tmp_path / "missing") == []


def test_scenario_rows_fail_only_on_errors(tmp_path):
    (tmp_path / "good.toml").write_text(
        'name = "good"\ntask = "defect"\nE = ["1"]\ntheta = "1"\n[model]\nkind = "lattice"\nparams = { dimension = 1 }\n[F]\ninterval = [0, 3]\n'
    )
    (tmp_path / "bad.toml").write_text('task = "defect"\n')
    rows = {row.name: row for row in run_suite([], tmp_path)}
    assert rows["scenario:good"].passed and rows["scenario:good"].measured == "exit 2"
    assert not rows["scenario:bad"].passed
