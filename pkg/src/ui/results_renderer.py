"""
Console rendering of command results.

Reports are printed as small tables under ``=== Title ===`` headers. Machine
readable output (CSV, JSON) never goes through this module.
"""

import math

import click
import numpy as np
import pandas as pd


def render_header(title: str) -> None:
    click.echo(f"\n=== {title} ===")


def _number(value) -> str:
    if value is None:
        return "∞ (does not exist)"
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return f"{value:.10g}"


def render_written(path, rows: int, what: str = "rows") -> None:
    click.echo(f"Wrote {rows} {what} to {path}")


def render_moments(rows: list[dict]) -> None:
    """
    Renders the moment table.

    Args:
        rows (list[dict]): Entries with keys theta, analytic, mc, se.
    """
    render_header("Moments")
    if not rows:
        click.secho("No moments requested.", fg="yellow")
        return
    table = pd.DataFrame(
        {
            "theta": [",".join(f"{t:g}" for t in row["theta"]) for row in rows],
            "analytic": [_number(row["analytic"]) for row in rows],
            "mc": [_number(row["mc"]) for row in rows],
            "mc_se": [_number(row["se"]) for row in rows],
        }
    )
    click.echo(table.to_string(index=False))


def render_projection(report) -> None:
    """Atom, projected representation and transform residuals."""
    render_header("Projection")
    law = report.law
    click.echo(f"Atom at zero: {report.atom:.10g}")
    click.echo(f"Index blocks: {list(law.blocks.alphas)} sizes {list(law.blocks.dims)}")
    click.echo("pi = " + np.array2string(law.rep.pi, precision=6))
    click.echo("T =\n" + np.array2string(law.rep.T, precision=6))
    worst = max(report.residuals) if report.residuals else 0.0
    click.echo(f"Transform residuals: {', '.join(f'{r:.3g}' for r in report.residuals)}")
    click.echo(f"Worst residual: {worst:.3g}")


def render_figure_summary(summary: dict) -> None:
    render_header(f"Figure {summary['name']}")
    for key in sorted(summary):
        click.echo(f"  {key}: {summary[key]}")


def render_validation(report) -> None:
    """One line per check, failures highlighted."""
    render_header("Validation")
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        line = (
            f"[{status}] {result.module}.{result.name}: "
            f"residual {result.residual:.3g} (tolerance {result.tolerance:.3g}, "
            f"{result.elapsed:.2f}s)"
        )
        click.secho(line, fg=None if result.passed else "red")
        if result.error:
            click.secho(f"       {result.error}", fg="red")
    failed = len(report.failures)
    total = len(report.results)
    if failed:
        click.secho(f"\n{failed} of {total} checks failed.", fg="red", bold=True)
    else:
        click.secho(f"\nAll {total} checks passed.", fg="green")
