"""Command-line front end.

Every task subcommand either runs a scenario file (``--config``) or builds the
same scenario from its options, so both paths share one schema and one set of
artifacts.
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
from loguru import logger

from . import __version__
from .config import get_config, override
from .errors import FolnerKitError
from .groups import Entourage, FiniteWindow, load_model
from .matching import BipartiteInstance, build_graph, max_matching
from .perturb import PerturbedAction, decompose_wobbling, verify_perturbation
from .scenario import EXIT_ERROR, EXIT_OK, EXIT_TARGET_NOT_MET, parse_scenario, run_scenario, run_validated


def _json_arg(value: Optional[str]) -> Any:
    """Inline JSON or a path to a JSON file; unreadable input ends the run with status 1."""
    if value is None:
        click.echo("error: missing a required JSON option (or pass --config)", err=True)
        _finish(EXIT_ERROR)
    try:
        path = Path(value)
        if path.exists():
            return json.loads(path.read_text())
        return json.loads(value)
    except ValueError as e:
        click.echo(f"error: not valid JSON: {e}", err=True)
        _finish(EXIT_ERROR)


def _configure_logging(verbose: bool, level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else level, format="<level>{level: <8}</level> {message}")


def _finish(status: int) -> None:
    sys.exit(status)


def _run(ctx: click.Context, config: Optional[Path], data: Dict[str, Any]) -> None:
    opts = ctx.obj
    try:
        if config is not None:
            status = run_scenario(config, opts["out_dir"], opts["seed"], opts["budget"], opts["workers"])
        else:
            scenario = parse_scenario({k: v for k, v in data.items() if v is not None})
            status = run_validated(scenario, out_dir=opts["out_dir"], seed=opts["seed"], budget=opts["budget"], workers=opts["workers"])
    except FolnerKitError as e:
        click.echo(f"error: {e}", err=True)
        status = EXIT_ERROR
    _finish(status)


def _model_option(f):
    return click.option("--model", "model", type=str, help="model descriptor: inline JSON or a JSON file")(f)


def _config_option(f):
    return click.option("--config", "config", type=click.Path(dir_okay=False, path_type=Path), help="scenario TOML file")(f)


@click.group()
@click.version_option(__version__)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None, help="artifact directory")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="concurrent matching/LP solves")
@click.option("--seed", type=int, default=None, help="seed for randomized strategies")
@click.option("--budget", type=click.IntRange(min=1), default=None, help="candidate/configuration budget")
@click.option("--verbose", is_flag=True, help="debug logging")
@click.pass_context
def main(ctx: click.Context, out_dir, workers, seed, budget, verbose):
    """Exact Følner, seminorm, perturbation and paradox certificates."""
    config = override(workers=workers, seed=seed, budget=budget, out_dir=str(out_dir) if out_dir else None)
    _configure_logging(verbose, config.run.log_level)
    ctx.obj = {"out_dir": out_dir, "workers": workers, "seed": seed, "budget": budget}


@main.command()
@_config_option
@click.pass_context
def run(ctx, config):
    """Run any scenario file."""
    if config is None:
        raise click.UsageError("--config is required")
    _run(ctx, config, {})


@main.command()
@_model_option
@click.option("--element", "elements", multiple=True, help="element to show with its norm")
def model(model, elements):
    """Validate a model descriptor and print norms of elements."""
    try:
        m = load_model(_json_arg(model))
        click.echo(json.dumps(m.descriptor(), sort_keys=True))
        for text in elements:
            g = m.parse(text)
            click.echo(f"{g}\tnorm={m.metric.norm(g)}\tinverse={m.inv(g)}")
    except (FolnerKitError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        _finish(EXIT_ERROR)


@main.command()
@click.option("--instance", type=str, default=None, help='{"E": [...], "F": [...], "edges": [[i, j], ...]}')
@_model_option
@click.option("--E", "E", type=str, default=None, help="left window (JSON list)")
@click.option("--F", "F", type=str, default=None, help="right window (JSON list)")
@click.option("--radius", type=str, default="0")
def matching(instance, model, E, F, radius):
    """Maximum matching and König witness for B(E, F, U) or a raw instance."""
    try:
        if instance is not None:
            payload = _json_arg(instance)
            inst = BipartiteInstance.from_edges(len(payload["E"]), len(payload["F"]), (tuple(e) for e in payload["edges"]))
        else:
            m = load_model(_json_arg(model))
            inst = build_graph(FiniteWindow.parse(m, _json_arg(E)), FiniteWindow.parse(m, _json_arg(F)), Entourage(m.metric, radius))
        click.echo(json.dumps({"instance": inst.to_json(), "result": max_matching(inst).to_json()}, sort_keys=True, indent=2))
    except (FolnerKitError, ValueError, KeyError) as e:
        click.echo(f"error: {e}", err=True)
        _finish(EXIT_ERROR)


@main.command("folner-defect")
@_config_option
@_model_option
@click.option("--F", "F", type=str, help="Følner window (JSON list)")
@click.option("--E", "E", type=str, help="generators (JSON list)")
@click.option("--radius", type=str, default="0")
@click.option("--name", default="defect")
@click.pass_context
def folner_defect(ctx, config, model, F, E, radius, name):
    """θ(F) = min_g μ(F, gF, U)/|F| with the matchings as certificate."""
    data = {"task": "defect", "name": name, "radius": radius}
    if config is None:
        data.update(model=_json_arg(model), F={"elements": _json_arg(F)}, E=_json_arg(E))
    _run(ctx, config, data)


@main.command("folner-search")
@_config_option
@_model_option
@click.option("--E", "E", type=str, help="generators (JSON list)")
@click.option("--radius", type=str, default="0")
@click.option("--theta", type=str, help="target θ, e.g. 9/10")
@click.option("--strategy", type=click.Choice(["balls", "boxes", "grid", "local"]), default="balls")
@click.option("--name", default="search")
@click.pass_context
def folner_search(ctx, config, model, E, radius, theta, strategy, name):
    """Budgeted search for a θ-Følner set."""
    data = {"task": "search", "name": name, "radius": radius, "theta": theta, "strategy": strategy}
    if config is None:
        data.update(model=_json_arg(model), E=_json_arg(E))
    _run(ctx, config, data)


@main.command()
@_config_option
@_model_option
@click.option("--weight", type=str, help='{"element": "p/q", ...}')
@click.option("--E", "E", type=str, default=None, help="translations for the invariance defect (JSON list)")
@click.option("--name", default="seminorm")
@click.pass_context
def seminorm(ctx, config, model, weight, E, name):
    """Exact p_d of a finite weight, optionally with invariance defects."""
    data = {"task": "seminorm", "name": name}
    if config is None:
        data.update(model=_json_arg(model), weight=_json_arg(weight), E=_json_arg(E) if E else None)
    _run(ctx, config, data)


@main.group()
def perturb():
    """Perturbed translation actions: build, verify, precompact, wobble."""


@perturb.command("build")
@_config_option
@_model_option
@click.option("--family", type=str, help='[{"E": [...], "n": 4}, ...]')
@click.option("--radius", type=str)
@click.option("--name", default="perturb")
@click.pass_context
def perturb_build(ctx, config, model, family, radius, name):
    data = {"task": "perturb", "name": name, "radius": radius}
    if config is None:
        data.update(model=_json_arg(model), family=_json_arg(family))
    _run(ctx, config, data)


@perturb.command("verify")
@_model_option
@click.option("--action", type=str, required=True, help="PerturbedAction JSON")
@click.option("--radius", type=str, required=True)
def perturb_verify(model, action, radius):
    try:
        m = load_model(_json_arg(model))
        alpha = PerturbedAction.from_json(m, _json_arg(action))
        report = verify_perturbation(alpha, Entourage(m.metric, radius))
        for v in report.violations:
            click.echo(f"violation g={v.g} h={v.h} image={v.image} distance={v.distance}")
        click.echo(f"checked {report.checked} entries, {len(report.violations)} violations")
        _finish(EXIT_OK if report.ok else EXIT_TARGET_NOT_MET)
    except (FolnerKitError, ValueError, KeyError) as e:
        click.echo(f"error: {e}", err=True)
        _finish(EXIT_ERROR)


def _precompact(ctx, config, model, radius, grid, pool, name):
    data = {"task": "precompact", "name": name, "radius": radius}
    if config is None:
        data.update(model=_json_arg(model), window={"grid": grid}, pool=_json_arg(pool) if pool else None)
    _run(ctx, config, data)


_precompact_options = [
    _config_option,
    _model_option,
    click.option("--radius", type=str),
    click.option("--grid", type=int, help="window resolution (cyclic models: the modulus); it needs a divisor spacing points more than r/3 apart with cells within r/3"),
    click.option("--pool", type=str, default=None, help="translations (JSON list); default the whole window"),
    click.option("--name", default="precompact"),
    click.pass_context,
]


def _with(options, f):
    for option in reversed(options):
        f = option(f)
    return f


perturb.command("precompact")(_with(_precompact_options, _precompact))
main.command("precompact")(_with(_precompact_options, _precompact))


@perturb.command("wobble")
@_model_option
@click.option("--permutation", type=str, required=True, help='{"x": "γ(x)", ...}')
@click.option("--pool", type=str, required=True, help="translators (JSON list)")
def perturb_wobble(model, permutation, pool):
    try:
        m = load_model(_json_arg(model))
        gamma = {m.parse(k): m.parse(v) for k, v in _json_arg(permutation).items()}
        wobbling = decompose_wobbling(gamma, m.parse_many(_json_arg(pool)), m.mul)
        for g, piece in wobbling.pieces.items():
            click.echo(f"{g}\t{' '.join(piece.to_json())}")
    except FolnerKitError as e:
        click.echo(f"error: {e}" + (f" (witness {e.witness})" if hasattr(e, "witness") else ""), err=True)
        _finish(EXIT_ERROR)


@main.group()
def paradox():
    """Paradoxical-decomposition certificates on finite windows."""


def _window(window: Optional[str], ball: Optional[int]) -> Dict[str, Any]:
    if ball is not None:
        return {"ball": ball}
    payload = _json_arg(window)
    return payload if isinstance(payload, dict) else {"elements": payload}


@paradox.command("verify")
@_config_option
@_model_option
@click.option("--window", type=str, default=None, help="window spec or JSON list")
@click.option("--ball", type=int, default=None, help="word ball of this radius")
@click.option("--cert", type=str, default="f2-standard", help="certificate JSON, or f2-standard")
@click.option("--name", default="paradox-verify")
@click.pass_context
def paradox_verify(ctx, config, model, window, ball, cert, name):
    data = {"task": "paradox-verify", "name": name}
    if config is None:
        data.update(
            model=_json_arg(model),
            window=_window(window, ball),
            certificate=cert if cert == "f2-standard" else _json_arg(cert),
        )
    _run(ctx, config, data)


@paradox.command("search")
@_config_option
@_model_option
@click.option("--window", type=str, default=None, help="window spec or JSON list")
@click.option("--ball", type=int, default=None)
@click.option("--pool", type=str, help="translators (JSON list)")
@click.option("--max-pieces", type=click.IntRange(min=2), default=4)
@click.option("--name", default="paradox-search")
@click.pass_context
def paradox_search(ctx, config, model, window, ball, pool, max_pieces, name):
    data = {"task": "paradox-search", "name": name, "max_pieces": max_pieces}
    if config is None:
        data.update(model=_json_arg(model), window=_window(window, ball), pool=_json_arg(pool))
    _run(ctx, config, data)


@main.command()
@_config_option
@click.option("--check", "checks", multiple=True, help="check module to run; default: suite.toml")
@click.option("--scenario-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.pass_context
def suite(ctx, config, checks: List[str], scenario_dir):
    """Acceptance checks as a pass/fail table."""
    data = {
        "task": "suite",
        "checks": list(checks) or None,
        "scenario_dir": str(scenario_dir.resolve()) if scenario_dir else None,
    }
    if config is None:
        table = Path(ctx.obj["out_dir"] or get_config().run.out_dir) / "suite.csv"
        ctx.call_on_close(lambda: table.exists() and click.echo(table.read_text(encoding="utf-8"), nl=False))
    _run(ctx, config, data)


if __name__ == "__main__":
    main()
