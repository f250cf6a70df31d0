"""Certificates from repeated scenario runs are byte-identical."""

import tempfile
from pathlib import Path
from typing import Dict, Optional

from . import CheckResult, default_scenario_dir, timed


def _certificates(scenario_dir: Path, out_dir: Path) -> Dict[str, bytes]:
    from ..scenario import SuiteTask, load_scenario, run_scenario

    for path in sorted(scenario_dir.glob("*.toml")):
        if not isinstance(load_scenario(path), SuiteTask):
            run_scenario(path, out_dir)
    return {p.name: p.read_bytes() for p in sorted(out_dir.glob("*.json"))}


def determinism(scenario_dir: Optional[Path] = None) -> CheckResult:
    def body():
        source = scenario_dir or default_scenario_dir()
        if source is None or not source.is_dir():
            return True, "no scenario directory"
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            a = _certificates(source, Path(first))
            b = _certificates(source, Path(second))
        differing = sorted(name for name in a.keys() | b.keys() if a.get(name) != b.get(name))
        return bool(a) and not differing, f"{len(a)} certificates, differing {differing}"
    return timed("determinism", body)


checks = [determinism]
