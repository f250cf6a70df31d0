"""Scenario files: strict schema, task runners and run artifacts.

A scenario is a TOML file naming a group model and one task. Running it writes
three files into the output directory: ``<name>.json`` (the certificate, fully
determined by the scenario and seed), ``<name>.csv`` (the report table) and
``<name>.manifest.toml`` (hash, versions and timing).
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import pydantic
import pytz
import toml
import tomli
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from . import __version__
from .algebra import FiniteWeight, invariance_defect, seminorm_pd
from .config import get_config
from .errors import FolnerKitError, PreconditionError, ResourceExhaustedError, ScenarioError
from .folner import STRATEGIES, folner_search, seminorm_bridge, topological_defect
from .groups import Entourage, FiniteWindow, GroupModel, LatticeGroup, ModelDescriptor, Rational, format_rational, load_model
from .paradox import ParadoxCertificate, f2_standard_certificate, search_small_paradox, verify_on_window
from .perturb import build_perturbation, precompact_cover_witness, precompact_perturbation, verify_perturbation

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TARGET_NOT_MET = 2


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


class WindowSpec(_Strict):
    """Exactly one of: explicit elements, a lattice box, a word ball, a grid, an integer interval."""
    elements: Optional[List[str]] = None
    box: Optional[int] = Field(default=None, gt=0)
    ball: Optional[int] = Field(default=None, ge=0)
    grid: Optional[int] = Field(default=None, gt=0)
    interval: Optional[Tuple[int, int]] = None

    @model_validator(mode="after")
    def _one_shape(self) -> "WindowSpec":
        given = [k for k in ("elements", "box", "ball", "grid", "interval") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(f"give exactly one window shape, got {given or 'none'}")
        return self

    def resolve(self, model: GroupModel) -> FiniteWindow:
        if self.elements is not None:
            return FiniteWindow.parse(model, self.elements)
        if self.box is not None:
            if not isinstance(model, LatticeGroup):
                raise PreconditionError("box windows need a lattice model")
            return model.box(self.box)
        if self.ball is not None:
            return model.ball(self.ball)
        if self.grid is not None:
            return model.grid(self.grid)
        lo, hi = self.interval
        return FiniteWindow(model.element((k,)) for k in range(lo, hi + 1))


class _ModelTask(_Strict):
    name: str = "scenario"
    model: ModelDescriptor
    seed: Optional[int] = None
    budget: Optional[int] = Field(default=None, gt=0)


class DefectTask(_ModelTask):
    task: Literal["defect"]
    F: WindowSpec
    E: List[str]
    radius: Rational = Fraction(0)
    theta: Optional[Rational] = None


class SearchTask(_ModelTask):
    task: Literal["search"]
    E: List[str]
    radius: Rational = Fraction(0)
    theta: Rational
    strategy: Literal[STRATEGIES] = "balls"


class SeminormTask(_ModelTask):
    task: Literal["seminorm"]
    weight: Dict[str, Rational]
    E: List[str] = []


class IndexSpec(_Strict):
    E: List[str]
    n: int = Field(gt=0)


class PerturbTask(_ModelTask):
    task: Literal["perturb"]
    family: List[IndexSpec]
    radius: Rational


class PrecompactTask(_ModelTask):
    task: Literal["precompact"]
    radius: Rational
    window: WindowSpec
    pool: Optional[List[str]] = None


class ParadoxVerifyTask(_ModelTask):
    task: Literal["paradox-verify"]
    window: WindowSpec
    certificate: Union[str, Dict[str, Any]] = "f2-standard"


class ParadoxSearchTask(_ModelTask):
    task: Literal["paradox-search"]
    window: WindowSpec
    pool: List[str]
    max_pieces: int = Field(default=4, ge=2)


class SuiteTask(_Strict):
    name: str = "suite"
    task: Literal["suite"]
    checks: Optional[List[str]] = None
    scenario_dir: Optional[str] = None


Scenario = Annotated[
    Union[DefectTask, SearchTask, SeminormTask, PerturbTask, PrecompactTask, ParadoxVerifyTask, ParadoxSearchTask, SuiteTask],
    Field(discriminator="task"),
]
_SCENARIO = TypeAdapter(Scenario)


def load_scenario(path: Path) -> Scenario:
    """Parse and validate a scenario file; errors carry the offending field path."""
    try:
        with open(path, "rb") as f:
            data = tomli.load(f)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found at {path}")
    except tomli.TOMLDecodeError as e:
        raise ScenarioError(f"not valid TOML: {e}")
    return parse_scenario(data)


def config_hash(scenario: Scenario) -> str:
    """sha256 of the canonical JSON form of a validated scenario."""
    canonical = json.dumps(_SCENARIO.dump_python(scenario, mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class Outcome:
    status: int
    certificate: Dict[str, Any]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    failure: Dict[str, str] = field(default_factory=dict)


def _exhausted(scenario: Scenario, error: ResourceExhaustedError) -> Outcome:
    """Status 2 with whatever the task had reached when its budget ran out."""
    payload = {"task": scenario.task, "budget_exhausted": True, "error": str(error), "partial": error.partial}
    rows = [{"task": scenario.task, "status": "budget exhausted", "error": str(error)}]
    return Outcome(EXIT_TARGET_NOT_MET, payload, rows, failure={"kind": type(error).__name__, "error": str(error)})


def _fmt(value: Any) -> Any:
    return format_rational(value) if isinstance(value, Fraction) else value


def _run_defect(s: DefectTask, model: GroupModel, **_) -> Outcome:
    F = s.F.resolve(model)
    E = FiniteWindow.parse(model, s.E)
    cert = topological_defect(F, E, Entourage(model.metric, s.radius))
    bridge = {row.g: row for row in seminorm_bridge(cert) or []} if len(F) <= 144 else {}
    rows = []
    for m in cert.matchings:
        row = {"g": str(m.g), "size": len(F), "mu": m.result.mu, "theta": _fmt(m.ratio)}
        if m.g in bridge:
            row.update(unit_seminorm=_fmt(bridge[m.g].unit_value), seminorm_bound=_fmt(bridge[m.g].unit_bound), bridge_passed=bridge[m.g].passed)
        rows.append(row)
    rows.append({"g": "min", "size": len(F), "mu": "", "theta": _fmt(cert.theta)})
    met = s.theta is None or cert.theta >= s.theta
    return Outcome(EXIT_OK if met else EXIT_TARGET_NOT_MET, cert.to_json(), rows)


def _run_search(s: SearchTask, model: GroupModel, seed: int, budget: int, workers: Optional[int], **_) -> Outcome:
    E = FiniteWindow.parse(model, s.E)
    result = folner_search(model, E, Entourage(model.metric, s.radius), s.theta, s.strategy, budget, seed, workers)
    rows = [
        {"candidate_id": r.candidate_id, "label": r.label, "size": r.size, "theta": _fmt(r.theta), "seminorm_bound": _fmt(r.seminorm_bound), "passed": r.passed}
        for r in result.rows
    ]
    payload = {
        "found": result.found,
        "reason": result.reason,
        "best_theta": _fmt(result.best_theta),
        "evaluated": result.evaluated,
        "certificate": result.certificate.to_json() if result.certificate else None,
    }
    return Outcome(EXIT_OK if result.found else EXIT_TARGET_NOT_MET, payload, rows)


def _run_seminorm(s: SeminormTask, model: GroupModel, workers: Optional[int], **_) -> Outcome:
    weight = FiniteWeight.of(model, {model.parse(k): v for k, v in s.weight.items()})
    value = seminorm_pd(weight, model.metric)
    rows = [{"g": "", "p_d_defect": _fmt(value.value), "lp_pivots": value.pivots, "witness_range": "/".join(_fmt(v) for v in value.witness_range)}]
    payload: Dict[str, Any] = {"weight": weight.to_json(), "p_d": _fmt(value.value), "certified": value.certified}
    if s.E:
        defect = invariance_defect(weight, FiniteWindow.parse(model, s.E), model.metric, workers)
        for row in defect.rows:
            rows.append({"g": str(row.g), "p_d_defect": _fmt(row.full.value), "lp_pivots": row.full.pivots, "witness_range": "/".join(_fmt(v) for v in row.full.witness_range)})
        payload.update(invariance_full=_fmt(defect.full), invariance_unit=_fmt(defect.unit))
    return Outcome(EXIT_OK, payload, rows)


def _perturbation_rows(report) -> List[Dict[str, Any]]:
    rows = [{"kind": "deviation", "g": str(v.g), "h": str(v.h), "value": _fmt(v.distance)} for v in report.violations]
    rows += [{"kind": "rosenblatt", "g": r.package, "h": r.size, "value": f"{_fmt(r.ratio)}<={_fmt(r.bound)}"} for r in report.rosenblatt]
    rows.append({"kind": "summary", "g": "", "h": report.checked, "value": "ok" if report.ok else "violations"})
    return rows


def _run_perturb(s: PerturbTask, model: GroupModel, budget: int, workers: Optional[int], **_) -> Outcome:
    U = Entourage(model.metric, s.radius)
    family = [(model.parse_many(index.E), index.n) for index in s.family]
    action = build_perturbation(family, U, budget)
    report = verify_perturbation(action, U, workers)
    involutive = all(action.involutions.values())
    payload = {
        "action": action.to_json(),
        "packages": [p.to_json() for p in action.packages],
        "involutions": involutive,
        "violations": len(report.violations),
    }
    return Outcome(EXIT_OK if report.ok and involutive else EXIT_TARGET_NOT_MET, payload, _perturbation_rows(report))


def _run_precompact(s: PrecompactTask, model: GroupModel, workers: Optional[int], **_) -> Outcome:
    U = Entourage(model.metric, s.radius)
    window = s.window.resolve(model)
    pool = FiniteWindow.parse(model, s.pool) if s.pool is not None else None
    result = precompact_perturbation(U, window, pool)
    report = verify_perturbation(result.action, U, workers)
    net, covered = precompact_cover_witness(result.action, U)
    payload = {
        "action": result.action.to_json(),
        "F": result.F.to_json(),
        "spacing": result.spacing,
        "gamma": {str(g): list(p) for g, p in result.gamma.items()},
        "group_order": result.group_order,
        "order_divides_factorial": result.order_divides_factorial,
        "cover_witness": net.to_json(),
        "covered": covered,
    }
    status = EXIT_OK if report.ok and result.order_divides_factorial is not False else EXIT_TARGET_NOT_MET
    return Outcome(status, payload, _perturbation_rows(report))


def _certificate(spec: Union[str, Dict[str, Any]], base: Path) -> ParadoxCertificate:
    if isinstance(spec, dict):
        return ParadoxCertificate.from_json(spec)
    if spec == "f2-standard":
        return f2_standard_certificate()
    path = Path(spec) if Path(spec).is_absolute() else base / spec
    try:
        return ParadoxCertificate.from_json(json.loads(path.read_text()))
    except FileNotFoundError:
        raise ScenarioError(f"certificate file not found at {path}", "certificate")


def _run_paradox_verify(s: ParadoxVerifyTask, model: GroupModel, workers: Optional[int], base: Path, **_) -> Outcome:
    cert = _certificate(s.certificate, base)
    window = s.window.resolve(model)
    report = verify_on_window(cert, window, model, workers=workers)
    payload = {
        "certificate": cert.to_json(),
        "window_size": report.window_size,
        "interior_violations": report.interior_violations,
        "boundary_defects": report.boundary_defects,
        "witnesses": report.witnesses(),
    }
    return Outcome(EXIT_OK if report.interior_violations == 0 else EXIT_TARGET_NOT_MET, payload, report.csv_rows())


def _run_paradox_search(s: ParadoxSearchTask, model: GroupModel, budget: int, workers: Optional[int], **_) -> Outcome:
    window = s.window.resolve(model)
    pool = FiniteWindow.parse(model, s.pool)
    result = search_small_paradox(window, pool, model, s.max_pieces, budget, workers=workers)
    rows = [
        {"pieces": r.pieces, "best_defect": r.best_defect, "zero_defect_possible": r.zero_defect_possible, "configurations": r.configurations, "exhausted": r.exhausted}
        for r in result.rows
    ]
    payload = {
        "best_defect": result.best_defect,
        "certificate": result.best.to_json() if result.best else None,
        "rows": rows,
    }
    return Outcome(EXIT_TARGET_NOT_MET if result.exhausted else EXIT_OK, payload, rows)


def _run_suite(s: SuiteTask, base: Path, **_) -> Outcome:
    from .checks import run_suite

    scenario_dir = Path(s.scenario_dir) if s.scenario_dir and Path(s.scenario_dir).is_absolute() else (base / s.scenario_dir if s.scenario_dir else None)
    rows = run_suite(s.checks, scenario_dir)
    table = [r.as_row() for r in rows]
    timings = {r.name: round(r.seconds, 3) for r in rows}
    return Outcome(EXIT_OK if all(r.passed for r in rows) else EXIT_TARGET_NOT_MET, {"rows": table}, table, timings)


_RUNNERS = {
    "defect": _run_defect,
    "search": _run_search,
    "seminorm": _run_seminorm,
    "perturb": _run_perturb,
    "precompact": _run_precompact,
    "paradox-verify": _run_paradox_verify,
    "paradox-search": _run_paradox_search,
    "suite": _run_suite,
}


def execute(scenario: Scenario, base: Path = Path("."), seed: Optional[int] = None, budget: Optional[int] = None, workers: Optional[int] = None) -> Outcome:
    """Run one validated scenario. Precedence: explicit argument, scenario field, config.toml."""
    run = get_config().run
    model = load_model(scenario.model) if not isinstance(scenario, SuiteTask) else None
    seed = seed if seed is not None else getattr(scenario, "seed", None)
    budget = budget or getattr(scenario, "budget", None) or run.budget
    return _RUNNERS[scenario.task](
        scenario,
        model=model,
        seed=seed if seed is not None else run.seed,
        budget=budget,
        workers=workers,
        base=base,
    )


def write_csv(path: Path, rows: List[Dict[str, Any]]) -> None:
    columns: List[str] = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    """Validate an in-memory scenario mapping (command-line options build these)."""
    try:
        return _SCENARIO.validate_python(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ScenarioError(first["msg"], ".".join(str(part) for part in first["loc"]))


def run_validated(
    scenario: Scenario,
    base: Path = Path("."),
    source: str = "<command line>",
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    budget: Optional[int] = None,
    workers: Optional[int] = None,
) -> int:
    """Run a validated scenario and write its certificate, report and manifest."""
    out_dir = Path(out_dir or get_config().run.out_dir)
    started = datetime.datetime.now(pytz.utc)
    clock = time.perf_counter()
    try:
        outcome = execute(scenario, base, seed, budget, workers)
    except ResourceExhaustedError as e:
        logger.warning("{}: {} (partial report written)", scenario.name, e)
        outcome = _exhausted(scenario, e)
    except FolnerKitError as e:
        logger.error("{}: {}", scenario.name, e)
        return EXIT_ERROR

    out_dir.mkdir(parents=True, exist_ok=True)
    stem = scenario.name
    certificate_path = out_dir / f"{stem}.json"
    report_path = out_dir / f"{stem}.csv"
    certificate_path.write_text(json.dumps(outcome.certificate, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    write_csv(report_path, outcome.rows)
    manifest = {
        "scenario": {"name": stem, "task": scenario.task, "source": source, "config_hash": config_hash(scenario)},
        "run": {"status": outcome.status, "seed": seed if seed is not None else getattr(scenario, "seed", None) or get_config().run.seed},
        "versions": {"folnerkit": __version__, "python": platform.python_version(), "pydantic": pydantic.VERSION},
        "timing": {"started": started.isoformat(), "wall_seconds": round(time.perf_counter() - clock, 3), **({"checks": outcome.timings} if outcome.timings else {})},
        "artifacts": {"certificate": certificate_path.name, "report": report_path.name},
    }
    if outcome.failure:
        manifest["failure"] = outcome.failure
    with open(out_dir / f"{stem}.manifest.toml", "w", encoding="utf-8") as f:
        toml.dump(manifest, f)
    logger.info("{} finished with status {} -> {}", stem, outcome.status, out_dir)
    return outcome.status


def run_scenario(
    config_path: Path,
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    budget: Optional[int] = None,
    workers: Optional[int] = None,
) -> int:
    """Load, run and record a scenario file; returns the process exit status."""
    config_path = Path(config_path)
    try:
        scenario = load_scenario(config_path)
    except ScenarioError as e:
        logger.error("{}: {}", config_path.name, e)
        return EXIT_ERROR
    return run_validated(scenario, config_path.parent, str(config_path), out_dir, seed, budget, workers)
