"""Command-line surface: one-shot runs, the simulator, and the service."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import engine
from .runtime import build_team
from .scenarios import list_scenarios
from .sim import SimConfig, analytic, simulate, sweep
from .storage import default_root
from .types import (
    BackendSelector,
    EngineConfig,
    Feedback,
    Query,
    Session,
    StepOutcome,
)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _engine_config(config_file: dict, scenario: str | None, mode: str,
                   max_layers: int | None, max_refinements: int | None) -> EngineConfig:
    settings = dict(config_file.get("engine", {}))
    if "backend" in config_file:
        settings["backend"] = config_file["backend"]
    if scenario:
        settings["backend"] = BackendSelector(kind="scripted", scenario=scenario).to_dict()
    if mode != "vanilla":
        settings["verification_mode"] = mode
    if max_layers is not None:
        settings["max_layers"] = max_layers
    if max_refinements is not None:
        settings["max_refinements"] = max_refinements
    return EngineConfig.from_dict(settings)


@click.group()
def main() -> None:
    """Layered, verification-gated reasoning pipeline."""


@main.command()
@click.option("--query", "query_text", default=None, help="Question to answer.")
@click.option("--scenario", default=None, help="Bundled scenario name or scenario file path.")
@click.option("--mode", type=click.Choice(["automatic", "interactive", "hybrid", "vanilla"]),
              default="automatic", show_default=True)
@click.option("--max-layers", type=int, default=None)
@click.option("--max-refinements", type=int, default=None)
@click.option("--config", "config_path", default=None, help="JSON config file; flags override it.")
@click.option("--trace", "trace_path", default=None, help="Write the event log (JSON Lines) here.")
def run(query_text: str | None, scenario: str | None, mode: str,
        max_layers: int | None, max_refinements: int | None,
        config_path: str | None, trace_path: str | None) -> None:
    """Run one session to completion, prompting on stdin when a layer awaits review."""
    config = _engine_config(_load_config_file(config_path), scenario, mode,
                            max_layers, max_refinements)
    team, store = build_team(config.backend)

    if query_text is None and scenario:
        from .scenarios import load_scenario

        query_text = load_scenario(scenario).query
    if not query_text:
        raise click.UsageError("provide --query or a --scenario that bundles one")

    query = Query(text=query_text)

    if mode == "vanilla":
        answer, events = engine.run_vanilla(query, team)
        _write_trace(events, trace_path)
        click.echo(answer.text)
        click.echo(f"[quality={answer.quality:.3f} backend_calls={engine.backend_calls(events)}]")
        return

    session = Session.create(query, config)
    engine.plan_layers(session, team)
    outcome = engine.run_until_blocked(session, team, store)
    while outcome is StepOutcome.AWAITING_USER:
        _review_on_stdin(session)
        if session.closed:
            break
        outcome = engine.run_until_blocked(session, team, store)

    _write_trace(session.events, trace_path)
    if session.final is not None:
        click.echo(session.final.text)
        click.echo(
            f"[quality={session.final.quality:.3f} "
            f"backend_calls={engine.backend_calls(session.events)}]"
        )
    else:
        click.echo("session failed: " + session.status, err=True)
        sys.exit(1)


def _review_on_stdin(session: Session) -> None:
    k = session.awaiting_layer()
    assert k is not None
    view = session._layer_view(k)
    click.echo(f"\n--- layer {k}: {view['objective']} (attempt {view['attempt']}) ---")
    click.echo(view["narrative"])
    for claim in view["claims"]:
        click.echo(f"  [{claim['status'] or '?'}] {claim['statement']}  ({claim['evidence']})")
    action = click.prompt("action", type=click.Choice(["approve", "reject", "annotate"]))
    note = None
    constraint = None
    if action == "reject":
        note = click.prompt("note")
    elif action == "annotate":
        constraint = click.prompt("constraint")
    engine.apply_feedback(
        session,
        Feedback(session_id=session.id, layer_index=k, action=action,
                 note=note, added_constraint=constraint),
    )


def _write_trace(events, trace_path: str | None) -> None:
    if not trace_path:
        return
    with open(trace_path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(event.to_json() + "\n")


@main.command("simulate")
@click.option("--num-tasks", type=int, default=1000, show_default=True)
@click.option("--layers", "num_layers", type=int, default=5, show_default=True)
@click.option("--error-prob", type=float, default=0.2, show_default=True)
@click.option("--detection-prob", type=float, default=0.9, show_default=True)
@click.option("--max-refinements", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sweep", "sweep_param", type=click.Choice(["p", "q", "N", "R"]), default=None,
              help="Vary one parameter over --values.")
@click.option("--values", default=None, help="Comma-separated sweep values.")
@click.option("--csv", "csv_path", default=None, help="Write sweep rows as CSV here.")
def simulate_cmd(num_tasks: int, num_layers: int, error_prob: float, detection_prob: float,
                 max_refinements: int, seed: int, sweep_param: str | None,
                 values: str | None, csv_path: str | None) -> None:
    """Monte Carlo vs closed-form comparison of layered and single-pass error rates."""
    config = SimConfig(
        num_tasks=num_tasks,
        num_layers=num_layers,
        error_prob=error_prob,
        detection_prob=detection_prob,
        max_refinements=max_refinements,
        seed=seed,
    )
    if sweep_param is None:
        result = simulate(config)
        closed_form = analytic(config)
        click.echo(json.dumps(
            {"result": result.to_dict(), "analytic": closed_form.to_dict()}, indent=2
        ))
        return
    if not values:
        raise click.UsageError("--sweep needs --values")
    table = sweep(config, sweep_param, [float(v) for v in values.split(",")])
    csv_text = table.to_csv()
    if csv_path:
        Path(csv_path).write_text(csv_text, encoding="utf-8")
        click.echo(f"wrote {len(table.rows)} rows to {csv_path}")
    else:
        click.echo(csv_text, nl=False)


@main.command()
@click.option("--addr", default="127.0.0.1:8000", show_default=True)
@click.option("--storage-root", default=None,
              help=f"Event-log directory (default: $LAYERCOT_STORAGE_ROOT or ./layercot_sessions).")
def serve(addr: str, storage_root: str | None) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .server import create_app

    host, _, port = addr.partition(":")
    app = create_app(storage_root if storage_root else default_root())
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")


@main.group()
def scenarios() -> None:
    """Bundled scripted scenarios."""


@scenarios.command("list")
def scenarios_list() -> None:
    for name in list_scenarios():
        click.echo(name)


if __name__ == "__main__":
    main()
