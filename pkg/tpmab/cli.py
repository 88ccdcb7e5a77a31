"""
Main CLI entry point for tpmab.
"""

import csv
import dataclasses
import functools
import io
import json
import logging
import sys
import time
from pathlib import Path

import click
from rich.logging import RichHandler

from . import __version__
from .bounds import BOUNDS_COLUMNS, bounds_table, log_grid, summarize_instance, tightness_condition
from .config import PRESETS_DIR, list_presets, load_config
from .errors import InvalidParameterError, TpmabError
from .harness import export_results, run_experiment, summary_rows
from .models import close_database, init_database, recent_runs, record_run
from .plotting import load_series, render_curves, render_pmf
from .spread import SPREAD_PRESETS, expected_index, index_of_coincidence, parse_spread_spec
from .ui import (
    console,
    create_config_panel,
    create_history_table,
    create_instance_table,
    create_moments_panel,
    create_pmf_table,
    create_presets_table,
    create_progress,
    create_summary_table,
    err_console,
    print_error,
)
from .utils import parse_dist_option, parse_float_list

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = "results"
DRY_RUN_HORIZON = 1000
DRY_RUN_RUNS = 2


def setup_logging(verbosity: int):
    """WARNING by default, INFO with -v, DEBUG with -vv."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def handle_errors(func):
    """Turn library and I/O errors into a diagnostic and exit status 1."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (TpmabError, OSError) as e:
            logger.debug("Command failed", exc_info=True)
            print_error(str(e))
            sys.exit(1)
    return wrapper


@click.group(invoke_without_command=True)
@click.option('--version', '-V', is_flag=True, help='Show version')
@click.option('--verbose', '-v', count=True, help='More logging (-v info, -vv debug)')
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None,
              help='Base seed for every subcommand that simulates')
@click.option('--workers', '-w', type=click.IntRange(min=1), default=None,
              help='Worker processes for experiments')
@click.option('--out-dir', type=click.Path(file_okay=False), envvar='TPMAB_OUT_DIR', default=None,
              help='Output directory (default: $TPMAB_OUT_DIR or ./results)')
@click.pass_context
def main(ctx, version, verbose, seed, workers, out_dir):
    """
    tpmab - bandits with temporally-partitioned rewards.

    Run experiments, evaluate regret bounds, inspect spread distributions and
    plot results.
    """
    setup_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, workers=workers, out_dir=out_dir)

    if version:
        console.print(f"[cyan]tpmab[/] version [bold]{__version__}[/]")
        return

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@main.command('run', help='Run an experiment from a config file or bundled preset')
@click.option('--config', '-c', 'config_name', required=True,
              help='Config file path or preset name (see `tpmab presets`)')
@click.option('--horizon', '-T', type=click.IntRange(min=1), default=None, help='Override horizon')
@click.option('--runs', '-n', type=click.IntRange(min=1), default=None, help='Override run count')
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None, help='Override seed')
@click.option('--workers', '-w', type=click.IntRange(min=1), default=None,
              help='Override worker count')
@click.option('--out-dir', type=click.Path(file_okay=False), default=None,
              help='Output directory')
@click.option('--dry-run', is_flag=True,
              help=f'Quick check: T={DRY_RUN_HORIZON}, {DRY_RUN_RUNS} runs')
@click.option('--no-record', is_flag=True, help='Do not store the run in the history registry')
@click.pass_context
@handle_errors
def run_cmd(ctx, config_name, horizon, runs, seed, workers, out_dir, dry_run, no_record):
    """Execute an experiment and write CSV/JSON results."""
    opts = ctx.obj or {}
    config = load_config(config_name)

    overrides = {}
    seed = seed if seed is not None else opts.get('seed')
    workers = workers or opts.get('workers')
    if dry_run:
        horizon, runs = DRY_RUN_HORIZON, DRY_RUN_RUNS
    if horizon is not None:
        overrides['horizon'] = horizon
    if runs is not None:
        overrides['runs'] = runs
    if seed is not None:
        overrides['seed'] = seed
    if workers is not None:
        overrides['workers'] = workers
    if overrides:
        config = dataclasses.replace(config, **overrides)

    out = Path(out_dir or opts.get('out_dir') or DEFAULT_OUT_DIR)
    csv_path = out / (config.output_csv or f"{config.name}.csv")
    json_path = out / (config.output_json or f"{config.name}.json")

    console.print(create_config_panel(config))
    start = time.time()
    try:
        with create_progress() as progress:
            task = progress.add_task("Episodes", total=len(config.policies) * config.runs)
            result = run_experiment(
                config, progress=lambda done, total: progress.update(task, completed=done)
            )
    except TpmabError as e:
        if not no_record:
            _record(config, [], time.time() - start, success=False, message=str(e))
        raise
    duration = time.time() - start

    export_results(result, 'csv', csv_path)
    export_results(result, 'json', json_path)

    rows = summary_rows(result)
    console.print(create_summary_table(rows))
    console.print(f"[green]✓ Results written to[/] {csv_path} [dim]and[/] {json_path}")

    if not no_record:
        _record(config, rows, duration, output_csv=str(csv_path), output_json=str(json_path))


def _record(config, rows, duration, success=True, message=None, output_csv=None,
            output_json=None):
    try:
        init_database()
        record_run(config.to_dict(), rows, duration, success=success, message=message,
                   output_csv=output_csv, output_json=output_json)
    except Exception as e:
        logger.warning(f"Could not record run in history: {e}")
    finally:
        close_database()


@main.command('bounds', help='Evaluate the regret bounds over a log-spaced horizon grid')
@click.option('--alpha', type=click.IntRange(min=1), required=True, help='Number of z-groups')
@click.option('--tau-max', type=click.IntRange(min=1), required=True, help='Maximum delay')
@click.option('--means', required=True, help='Comma separated arm means')
@click.option('--max-rewards', required=True, help='Comma separated maximum rewards R_i')
@click.option('--dist', 'dist', default='uniform', show_default=True,
              help='uniform | named:<name> | beta_binomial:<a>,<b> | zipfian:<s> | '
                   'boltzmann:<lambda> | hypergeometric:<N>')
@click.option('--t-min', type=click.IntRange(min=2), default=2, show_default=True)
@click.option('--t-max', type=click.IntRange(min=2), default=100000, show_default=True)
@click.option('--points', type=click.IntRange(min=1), default=50, show_default=True)
@click.option('--output', '-o', type=click.Path(dir_okay=False), default=None,
              help='Write the CSV here instead of stdout')
@click.option('--tightness', is_flag=True, help='Print the lower-bound comparison condition')
@handle_errors
def bounds_cmd(alpha, tau_max, means, max_rewards, dist, t_min, t_max, points, output, tightness):
    """Emit T, lower_bound, upper_bound, upper_bound_uniform, tightness_value as CSV."""
    spread = parse_spread_spec(parse_dist_option(dist, alpha), alpha=alpha)
    inst = summarize_instance(parse_float_list(means), parse_float_list(max_rewards), tau_max,
                              spread)
    rows = bounds_table(inst, log_grid(t_min, t_max, points))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(BOUNDS_COLUMNS)
    for row in rows:
        writer.writerow([row['T']] + [repr(float(row[c])) for c in BOUNDS_COLUMNS[1:]])

    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(buf.getvalue(), encoding='utf-8')
        console.print(create_instance_table(inst))
        console.print(f"[green]✓ Wrote {len(rows)} rows to[/] {output}")
    else:
        click.echo(buf.getvalue(), nl=False)

    if tightness:
        value, tighter = tightness_condition(alpha, spread)
        verdict = "tighter than" if tighter else "not tighter than"
        click.echo(f"tightness value: {value!r} ({spread.label} lower bound is {verdict} "
                   f"the alpha-smooth one)", err=output is None)


@main.command('dist', help='Show a spread PMF with its expected index and index of coincidence')
@click.option('--kind', type=click.Choice(['uniform', 'beta_binomial', 'zipfian', 'boltzmann',
                                           'hypergeometric']), default=None)
@click.option('--named', default=None, help=f"Preset name ({', '.join(SPREAD_PRESETS)})")
@click.option('--alpha', type=click.IntRange(min=1), required=True, help='Number of z-groups')
@click.option('--a', type=float, default=None, help='Beta-Binomial a')
@click.option('--b', type=float, default=None, help='Beta-Binomial b')
@click.option('--s', type=float, default=None, help='Zipf exponent')
@click.option('--lam', type=float, default=None, help='Boltzmann rate')
@click.option('--n-pop', type=int, default=None, help='Hypergeometric population size')
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False), default=None,
              help='Write k,probability rows to this file')
@click.option('--svg', 'svg_path', type=click.Path(dir_okay=False), default=None,
              help='Write a bar chart to this file')
@handle_errors
def dist_cmd(kind, named, alpha, a, b, s, lam, n_pop, csv_path, svg_path):
    """Print the PMF of a spread distribution."""
    if (kind is None) == (named is None):
        raise click.UsageError("give exactly one of --kind or --named")
    if named is not None:
        record = {'kind': 'named', 'name': named}
    else:
        params = {'a': a, 'b': b, 's': s, 'lambda': lam, 'n_pop': n_pop}
        record = {'kind': kind, **{k: v for k, v in params.items() if v is not None}}
    pmf = parse_spread_spec(record, alpha=alpha)

    console.print(create_pmf_table(pmf))
    console.print(create_moments_panel(pmf))

    if csv_path:
        with open(csv_path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['k', 'probability'])
            for k, p in enumerate(pmf.probs, 1):
                writer.writerow([k, repr(float(p))])
            writer.writerow(['expected_index', repr(expected_index(pmf))])
            writer.writerow(['index_of_coincidence', repr(index_of_coincidence(pmf))])
        console.print(f"[green]✓ Wrote[/] {csv_path}")
    if svg_path:
        render_pmf(pmf, svg_path)
        console.print(f"[green]✓ Wrote[/] {svg_path}")


@main.command('plot', help='Render regret (and bound) curves as a standalone SVG')
@click.option('--input', '-i', 'input_path', type=click.Path(exists=True, dir_okay=False),
              required=True, help='Results CSV/JSON from `run`, or a bounds CSV')
@click.option('--overlay-bounds', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Bounds CSV from `bounds` to draw on top')
@click.option('--log-x', is_flag=True, help='Logarithmic round axis')
@click.option('--title', default=None, help='Chart title')
@click.option('--output', '-o', type=click.Path(dir_okay=False), required=True)
@handle_errors
def plot_cmd(input_path, overlay_bounds, log_x, title, output):
    """Write an SVG with one polyline and CI band per policy."""
    series = load_series(input_path)
    if overlay_bounds:
        series += load_series(overlay_bounds)
    render_curves(series, output, title=title or Path(input_path).stem, log_x=log_x)
    console.print(f"[green]✓ Wrote[/] {output} [dim]({len(series)} curves)[/]")


@main.command('presets', help='List bundled experiment presets')
@click.option('--show', default=None, help='Print the JSON of one preset')
@handle_errors
def presets_cmd(show):
    """List presets usable with `tpmab run --config <name>`."""
    if show:
        path = PRESETS_DIR / f"{show}.json"
        if not path.exists():
            raise InvalidParameterError(
                f"unknown preset '{show}' (valid: {', '.join(list_presets())})"
            )
        click.echo(path.read_text(encoding='utf-8'), nl=False)
        return

    presets = []
    for name in list_presets():
        data = json.loads((PRESETS_DIR / f"{name}.json").read_text(encoding='utf-8'))
        env = data.get('environment', {})
        desc = ", ".join(f"{k}={v}" for k, v in env.items() if k not in ('path',))
        presets.append({
            'name': name,
            'environment': desc,
            'policies': len(data.get('policies', [])),
            'horizon': data.get('horizon'),
            'runs': data.get('runs', 1),
        })
    console.print(create_presets_table(presets))


@main.command('history', help='Show recently recorded runs')
@click.option('--limit', '-n', default=20, help='Number of runs to show')
@handle_errors
def history_cmd(limit):
    """List runs stored in the registry."""
    init_database()
    try:
        runs = recent_runs(limit)
        if not runs:
            console.print("[yellow]No runs recorded yet.[/]")
            console.print("Try [cyan]tpmab run --config setting1_alpha20 --dry-run[/] first.")
            return
        console.print(create_history_table(runs))
    finally:
        close_database()


if __name__ == '__main__':
    main()
