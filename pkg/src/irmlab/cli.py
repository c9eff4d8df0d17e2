"""Command-line front end.

Subcommands: run a configured simulation (trace CSV + metrics JSON +
optional figure), plot an existing trace, replay a recorded trace against
re-execution, and calibrate controller gains against target anchors.

Exit codes: 0 success, 1 usage, 2 validation (bad config/trace/targets),
3 runtime (arithmetic, replay divergence, I/O during a run).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import calibrate as calibrate_mod
from . import engine, tracefile
from .config import load_run_config
from .exceptions import IrmLabError, ValidationError
from .numerics import Dec, get_backend


def _render(trace_csv, out_path, title):
    # matplotlib is heavy; import it only when a figure is actually requested
    from .plotting import render_trace_file

    render_trace_file(trace_csv, out_path, title=title)


@click.group()
def cli():
    """Deterministic interest-rate-model simulation lab."""


@cli.command("run")
@click.option("--config", "config_path", required=True, help="Run configuration (JSON).")
@click.option("--out", "out_path", required=True, help="Trace CSV output path.")
@click.option("--metrics", "metrics_path", default=None, help="Metrics JSON path (default: OUT.metrics.json).")
@click.option("--plot", "plot_path", default=None, help="Also render the trace figure (SVG) here.")
@click.option("--backend", type=click.Choice(["fixed", "reference"]), default=None, help="Override the config's arithmetic backend.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--band", default=None, help="Override the settling band (decimal string).")
def cmd_run(config_path, out_path, metrics_path, plot_path, backend, seed, band):
    """Run the configured simulation and write its trace and metrics."""
    cfg = load_run_config(config_path)
    backend_obj = get_backend(backend or cfg.backend_name)
    band_dec = Dec(band) if band is not None else cfg.band
    trace = engine.run(
        cfg.strategies,
        cfg.spec,
        backend=backend_obj,
        seed=seed,
        settle_target=cfg.settle_target,
    )
    tracefile.write_trace(trace, out_path)
    metrics = engine.compute_metrics(trace, band_dec, cfg.u_threshold, cfg.probes)
    metrics_out = metrics_path or f"{out_path}.metrics.json"
    tracefile.write_json(engine.metrics_record(metrics, trace), metrics_out)
    if plot_path:
        _render(out_path, plot_path, title=Path(config_path).stem)
    click.echo(f"wrote {len(trace)} rows to {out_path} (backend={backend_obj.name})")
    click.echo(f"wrote metrics to {metrics_out}")
    if plot_path:
        click.echo(f"wrote figure to {plot_path}")


@cli.command("plot")
@click.argument("trace_csv")
@click.option("--out", "out_path", required=True, help="SVG output path.")
@click.option("--title", default=None, help="Figure title.")
def cmd_plot(trace_csv, out_path, title):
    """Render a recorded trace CSV as an SVG figure."""
    _render(trace_csv, out_path, title=title)
    click.echo(f"wrote figure to {out_path}")


@cli.command("replay")
@click.argument("trace_csv")
@click.option("--config", "config_path", required=True, help="Run configuration that produced the trace.")
@click.option("--backend", type=click.Choice(["fixed", "reference"]), default=None, help="Backend for re-execution.")
@click.option("--rel-tol", default=None, help="Relative tolerance (decimal string); exact compare when omitted.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--regen-golden", is_flag=True, help="Overwrite the trace from a fresh run instead of comparing.")
def cmd_replay(trace_csv, config_path, backend, rel_tol, seed, regen_golden):
    """Re-execute a recorded trace and fail on the first divergent cell."""
    cfg = load_run_config(config_path)
    backend_obj = get_backend(backend or cfg.backend_name)
    if regen_golden:
        trace = engine.run(
            cfg.strategies, cfg.spec, backend=backend_obj, seed=seed, settle_target=cfg.settle_target
        )
        tracefile.write_trace(trace, trace_csv)
        click.echo(f"regenerated {trace_csv} ({len(trace)} rows, backend={backend_obj.name})")
        return
    engine.replay(
        cfg.strategies,
        cfg.spec,
        trace_csv,
        backend=backend_obj,
        rel_tol=Dec(rel_tol) if rel_tol is not None else None,
        seed=seed,
        settle_target=cfg.settle_target,
    )
    click.echo(f"{trace_csv} replays clean (backend={backend_obj.name})")


@cli.command("calibrate")
@click.option("--targets", "targets_path", required=True, help="Calibration targets and grid (JSON).")
@click.option("--out", "out_path", default=None, help="Write the winning strategy block (JSON) here.")
@click.option("--report", "report_path", default=None, help="Write the full miss table (JSON) here.")
def cmd_calibrate(targets_path, out_path, report_path):
    """Grid-search controller gains against rate targets."""
    result = calibrate_mod.calibrate(targets_path)
    report = calibrate_mod.result_report(result)
    if out_path:
        tracefile.write_json(calibrate_mod.result_strategy_block(result), out_path)
        click.echo(f"wrote strategy block to {out_path}")
    if report_path:
        tracefile.write_json(report, report_path)
        click.echo(f"wrote report to {report_path}")
    click.echo(
        f"evaluated {result.candidates_evaluated} candidates; "
        f"worst relative miss {result.score.canonical()}"
    )
    for row in report["targets"]:
        mark = "ok " if row["feasible"] else "MISS"
        click.echo(
            f"  [{mark}] {row['name']}: achieved {row['achieved']} "
            f"vs target {row['target']} ± {row['tol']}"
        )
    if not result.feasible:
        click.echo("warning: best candidate misses at least one target tolerance", err=True)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except ValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return 2
    except IrmLabError as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return 3
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
