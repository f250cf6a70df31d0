"""Acceptance checks, loaded by module name from suite.toml."""

import importlib
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import toml
from loguru import logger

from ..errors import ResourceExhaustedError


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: str
    seconds: float = 0.0

    def as_row(self) -> Dict[str, Any]:
        """Report row; timing is kept out so reruns produce identical tables."""
        return {"check": self.name, "passed": self.passed, "measured": self.measured}


Check = Callable[[], CheckResult]


def suite_settings() -> Dict[str, Any]:
    """suite.toml from the working directory or the repository root."""
    for path in (Path.cwd() / "suite.toml", Path(__file__).resolve().parents[2] / "suite.toml"):
        if path.exists():
            try:
                return toml.load(path)
            except toml.TomlDecodeError as e:
                logger.warning("suite.toml at {} is malformed: {}", path, e)
                return {}
    return {}


def default_scenario_dir() -> Optional[Path]:
    configured = suite_settings().get("checks", {}).get("scenario_dir")
    if configured is None:
        return None
    path = Path(configured)
    return path if path.is_absolute() else Path.cwd() / path


def load_checks(enabled: Optional[List[str]] = None) -> List[Check]:
    """Collect ``checks`` from each enabled module in this package."""
    if enabled is None:
        enabled = suite_settings().get("checks", {}).get("enabled", [])

    found: List[Check] = []
    for name in enabled:
        try:
            module = importlib.import_module(f"{__name__}.{name.replace('-', '_')}")
            found.extend(getattr(module, "checks", []))
        except ImportError as e:
            logger.error("cannot load check module {}: {}", name, e)
    return found


def timed(name: str, body: Callable[[], tuple]) -> CheckResult:
    """Run ``body`` returning (passed, measured) and time it."""
    start = time.perf_counter()
    try:
        passed, measured = body()
    except Exception as e:
        logger.exception("check {} raised", name)
        passed, measured = False, f"error: {e}"
    return CheckResult(name, bool(passed), str(measured), time.perf_counter() - start)


def scenario_rows(scenario_dir: Path) -> List[CheckResult]:
    from ..scenario import EXIT_ERROR, EXIT_TARGET_NOT_MET, SuiteTask, execute, load_scenario

    rows = []
    for path in sorted(scenario_dir.glob("*.toml")):
        def body(path=path):
            scenario = load_scenario(path)
            if isinstance(scenario, SuiteTask):
                return True, "skipped (suite)"
            try:
                status = execute(scenario, path.parent).status
            except ResourceExhaustedError:
                status = EXIT_TARGET_NOT_MET
            return status != EXIT_ERROR, f"exit {status}"
        rows.append(timed(f"scenario:{path.stem}", body))
    return rows


def run_suite(enabled: Optional[List[str]] = None, scenario_dir: Optional[Path] = None) -> List[CheckResult]:
    """One row per acceptance check, then one per scenario file; failures are rows."""
    rows = [check() for check in load_checks(enabled)]
    if scenario_dir is not None and scenario_dir.is_dir():
        rows += scenario_rows(scenario_dir)
    for row in rows:
        logger.info("{:<28} {} {}", row.name, "PASS" if row.passed else "FAIL", row.measured)
    return rows
