"""
Terminal output for the command line.
Uses Rich for tables and the experiment progress bar.
"""

from typing import Any, Dict, List, Optional

from rich import box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table
from rich.text import Text

from .bounds import InstanceSummary
from .harness import ExperimentConfig
from .models import ExperimentRun
from .spread import SpreadPmf, expected_index, index_of_coincidence
from .utils import format_duration, format_percent, format_regret, format_time_ago

console = Console()
err_console = Console(stderr=True)


def _table(title: str, expand: bool = False) -> Table:
    return Table(
        title=title,
        box=box.ROUNDED,
        show_header=True,
        header_style="bold cyan",
        border_style="dim",
        expand=expand,
    )


def create_config_panel(config: ExperimentConfig) -> Panel:
    """Overview of an experiment before it runs."""
    env = config.environment
    content = Text()
    content.append(f"{config.name or 'experiment'}\n\n", style="bold cyan")
    content.append("Environment: ", style="bold")
    content.append(f"{env.name or 'custom'}\n", style="cyan")
    content.append("Shape: ", style="bold")
    content.append(f"K={env.num_arms}, tau_max={env.tau_max}, alpha={env.alpha}\n")
    content.append("Schedule: ", style="bold")
    content.append(f"T={config.horizon}, {config.runs} run(s), seeds {config.seed}.."
                   f"{config.seed + config.runs - 1}, {config.workers} worker(s)\n")
    content.append("Policies: ", style="bold")
    content.append(", ".join(p.name for p in config.policies), style="dim")
    return Panel(content, border_style="cyan", box=box.ROUNDED)


def create_progress() -> Progress:
    return Progress(
        TextColumn("[cyan]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


def create_summary_table(rows: List[Dict[str, Any]], title: str = "Time-averaged regret") -> Table:
    """
    Policies sorted by time-averaged regret (cumulative regret averaged over the
    checkpoints). Decreases are against TP-UCB-FR, on that average and on the final regret.
    """
    table = _table(title)
    table.add_column("#", style="dim", width=4, justify="right")
    table.add_column("Policy", style="bold", min_width=20)
    table.add_column("Time-avg regret", justify="right")
    table.add_column("CI (95%)", justify="right", style="dim")
    table.add_column("Final regret", justify="right")
    table.add_column("CI (95%)", justify="right", style="dim")
    table.add_column("Decrease (avg)", justify="right")
    table.add_column("Decrease (final)", justify="right")

    for idx, row in enumerate(rows, 1):
        table.add_row(
            str(idx),
            escape(row['name']),
            format_regret(row['time_averaged']),
            format_regret(row['time_averaged_ci']),
            format_regret(row['final']),
            format_regret(row['final_ci']),
            _decrease_cell(row, 'decrease'),
            _decrease_cell(row, 'final_decrease'),
        )
    return table


def _decrease_cell(row: Dict[str, Any], key: str) -> Text:
    value = row.get(key)
    if row.get('is_baseline'):
        return Text("baseline", style="dim")
    if value is None:
        return Text("-", style="dim")
    return Text(format_percent(value), style="green" if value > 0 else "red")


def create_pmf_table(pmf: SpreadPmf) -> Table:
    table = _table(f"{pmf.label or 'spread'} (alpha={pmf.alpha})")
    table.add_column("k", style="dim", justify="right")
    table.add_column("B(k)", justify="right")
    for k, p in enumerate(pmf.probs, 1):
        table.add_row(str(k), f"{p:.6g}")
    return table


def create_moments_panel(pmf: SpreadPmf) -> Panel:
    content = Text()
    content.append("E[Y]: ", style="bold")
    content.append(f"{expected_index(pmf):.6g}\n", style="cyan")
    content.append("Index of coincidence: ", style="bold")
    content.append(f"{index_of_coincidence(pmf):.6g}\n", style="cyan")
    content.append("Mode: ", style="bold")
    content.append(f"k={pmf.mode}")
    return Panel(content, border_style="cyan", box=box.ROUNDED)


def create_instance_table(inst: InstanceSummary) -> Table:
    table = _table(f"Instance (alpha={inst.alpha}, phi={inst.phi}, spread={inst.spread.label})")
    table.add_column("Arm", style="dim", justify="right")
    table.add_column("mu", justify="right")
    table.add_column("R", justify="right")
    table.add_column("Gap", justify="right")
    for i, (mu, r, gap) in enumerate(zip(inst.means, inst.max_rewards, inst.gaps)):
        style = "bold green" if gap == 0 else ""
        table.add_row(str(i), f"{mu:g}", f"{r:g}", f"{gap:g}", style=style)
    return table


def create_presets_table(presets: List[Dict[str, Any]]) -> Table:
    table = _table("Bundled presets")
    table.add_column("Name", style="bold")
    table.add_column("Environment", style="cyan")
    table.add_column("Policies", justify="center")
    table.add_column("T", justify="right")
    table.add_column("Runs", justify="right")
    for p in presets:
        table.add_row(p['name'], p['environment'], str(p['policies']), str(p['horizon']),
                      str(p['runs']))
    return table


def create_history_table(runs: List[ExperimentRun]) -> Table:
    table = _table("Recent runs", expand=True)
    table.add_column("#", style="dim", width=5, justify="right")
    table.add_column("Name", style="bold", min_width=15)
    table.add_column("When", style="yellow", width=10)
    table.add_column("T", justify="right")
    table.add_column("Runs", justify="right")
    table.add_column("Seed", justify="right")
    table.add_column("Took", justify="right")
    table.add_column("Status", min_width=8)
    table.add_column("Best policy", overflow="ellipsis")

    for run in runs:
        best = min(run.summaries, key=lambda s: s.time_averaged, default=None)
        status = Text("✓ ok", style="green") if run.success else Text("✗ failed", style="red")
        table.add_row(
            str(run.id),
            run.name,
            format_time_ago(run.created_at.timestamp()),
            str(run.horizon),
            str(run.runs),
            str(run.seed),
            format_duration(run.duration_seconds),
            status,
            f"{best.policy_name} ({format_regret(best.time_averaged)})" if best else "-",
        )
    return table


def print_error(message: str, hint: Optional[str] = None):
    err_console.print(f"[red]Error:[/] {escape(message)}")
    if hint:
        err_console.print(f"[dim]{hint}[/]")
