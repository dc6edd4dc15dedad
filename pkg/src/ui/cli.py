"""
Command-line front end.

Every command reads its model from ``--config`` (a TOML model file), writes
CSV/JSON through src.utils.exporter and reports on the console through
results_renderer. Failures map onto a fixed set of exit codes: 1 for usage and
configuration problems, 2 for numerical failures, 3 for invalid models.
"""

import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np
import pandas as pd

from src.core import config, model_loader, models, validation_suite
from src.core.errors import ConfigError, DomainError, ModelError, NumericFailure
from src.core.gmml import correlation_power
from src.core.mlfun import MLParams, ml_scalar
from src.core.model_interface import Model, build_model, figure_model
from src.core.sampling import RngState, empirical_moment
from src.ui import results_renderer
from src.utils import exporter, grid_helpers

logger = logging.getLogger(__name__)

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


@dataclass
class Session:
    """Global options shared by every command."""

    config: Path | None
    out: Path | None
    seed: int
    grid: str | None
    threads: int

    def model(self) -> Model:
        if self.config is None:
            raise ConfigError("this command needs --config")
        return build_model(model_loader.load_config(self.config))

    def grid_spec(self, dim: int, default: str | None = None) -> grid_helpers.GridSpec:
        text = self.grid if self.grid is not None else default
        if text is None:
            raise ConfigError("this command needs --grid")
        return grid_helpers.parse_grid(text, dim)

    def rng(self) -> RngState:
        return RngState(self.seed)


def exit_code_for(error: BaseException) -> int:
    """Exit code of an exception raised while running a command."""
    if isinstance(error, ModelError):
        return config.EXIT_MODEL
    if isinstance(error, (ConfigError, DomainError, OSError)):
        return config.EXIT_USAGE
    return config.EXIT_NUMERIC


class ExitCodeGroup(click.Group):
    """Click group that turns every failure into one of the documented exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            result = super().main(
                args=args,
                prog_name=prog_name,
                complete_var=complete_var,
                standalone_mode=False,
                **extra,
            )
            code = result if isinstance(result, int) else config.EXIT_OK
        except click.ClickException as e:
            e.show()
            code = config.EXIT_USAGE
        except click.Abort:
            click.echo("Aborted!", err=True)
            code = config.EXIT_USAGE
        except Exception as e:
            code = exit_code_for(e)
            if code == config.EXIT_NUMERIC and not isinstance(e, NumericFailure):
                logger.exception("unexpected failure")
            click.secho(f"Error: {e}", fg="red", err=True)
        if standalone_mode:
            sys.exit(code)
        return code


def _emit_csv(session: Session, df: pd.DataFrame, metadata: dict, default_name: str | None = None):
    path = session.out
    if path is not None and path.is_dir() and default_name is not None:
        path = path / default_name
    if path is None:
        click.echo(exporter.csv_text(df, metadata), nl=False)
        return
    exporter.write_csv(df, path, metadata)
    results_renderer.render_written(path, len(df))


def _coordinate_names(prefix: str, n: int) -> list[str]:
    return [prefix] if n == 1 else [f"{prefix}{i + 1}" for i in range(n)]


@click.group(cls=ExitCodeGroup)
@click.option("--config", "config_path", type=click.Path(path_type=Path), help="TOML model file.")
@click.option("--out", type=click.Path(path_type=Path), help="Output file or directory.")
@click.option("--seed", type=int, default=config.DEFAULT_SEED, show_default=True)
@click.option("--grid", help="Evaluation grid, e.g. 0.01:10:50:log,0.01:10:50:log.")
@click.option("--threads", type=click.IntRange(min=1), default=config.DEFAULT_THREADS)
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging.")
@click.pass_context
def cli(ctx, config_path, out, seed, grid, threads, verbose):
    """Matrix Mittag-Leffler distributions: evaluation, sampling and checks."""
    logging.getLogger().setLevel(LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)])
    ctx.obj = Session(config=config_path, out=out, seed=seed, grid=grid, threads=threads)


@cli.command("ml")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--z", "z_text", required=True, help="Values 'a,b,c' or range 'min:max:count'.")
@click.pass_obj
def cmd_ml(session: Session, alpha, beta, z_text):
    """Tabulates E_{alpha,beta}(z) on a list of real arguments."""
    params = MLParams(alpha, beta)
    zs = grid_helpers.parse_values(z_text)
    values = [ml_scalar(params, z).real for z in zs]
    df = pd.DataFrame({"z": zs, "value": values})
    _emit_csv(session, df, {"alpha": alpha, "beta": beta})


@cli.command("density")
@click.pass_obj
def cmd_density(session: Session):
    """Writes the (joint) density on the --grid points."""
    model = session.model()
    grid = session.grid_spec(model.n)
    values = model.density_grid(grid.nodes())
    df = pd.DataFrame(grid.points(), columns=_coordinate_names("x", model.n))
    df["f"] = values
    _emit_csv(session, df, {"grid": grid.to_text(), "kind": model.kind}, config.DENSITY_FILENAME)


@cli.command("cdf")
@click.pass_obj
def cmd_cdf(session: Session):
    """Writes the distribution function, one column per coordinate marginal."""
    model = session.model()
    grid = session.grid_spec(1)
    xs = grid.nodes()[0]
    df = pd.DataFrame({"x": xs})
    for k, name in enumerate(_coordinate_names("F", model.n)):
        df[name] = [model.marginal_cdf(k, x) for x in xs]
    _emit_csv(session, df, {"grid": grid.to_text(), "kind": model.kind})


@cli.command("laplace")
@click.pass_obj
def cmd_laplace(session: Session):
    """Writes the joint Laplace transform on the --grid points."""
    model = session.model()
    grid = session.grid_spec(model.n)
    points = grid.points()
    df = pd.DataFrame(points, columns=_coordinate_names("u", model.n))
    df["L"] = [model.laplace(u) for u in points]
    _emit_csv(session, df, {"grid": grid.to_text(), "kind": model.kind})


@cli.command("sample")
@click.option("-n", "--n", "count", type=int, required=True, help="Number of draws.")
@click.pass_obj
def cmd_sample(session: Session, count):
    """Draws exact samples; the file ends with the seed and a SHA-256 fingerprint."""
    if count < 1:
        raise ConfigError(f"-n must be at least 1, got {count}")
    model = session.model()
    batch = model.sample(count, session.rng(), threads=session.threads)
    df = pd.DataFrame(batch.values, columns=_coordinate_names("x", model.n))
    metadata = {
        "algorithm": batch.rng.algorithm,
        "fingerprint": batch.fingerprint,
        "kind": model.kind,
        "rows": batch.rows,
        "seed": batch.rng.seed,
    }
    _emit_csv(session, df, metadata, config.SAMPLES_FILENAME)


def _parse_theta(text: str, n: int) -> np.ndarray:
    theta = grid_helpers.parse_values(text)
    if theta.shape != (n,):
        raise ConfigError(f"theta '{text}' must have {n} entries")
    return theta


@cli.command("moments")
@click.option("--theta", "thetas", multiple=True, required=True, help="Orders, e.g. 1,1.")
@click.option("-n", "--n", "count", type=int, default=config.MOMENT_DRAWS, show_default=True)
@click.pass_obj
def cmd_moments(session: Session, thetas, count):
    """Analytic moments next to Monte Carlo estimates and their standard errors."""
    if count < 2:
        raise ConfigError(f"-n must be at least 2, got {count}")
    model = session.model()
    orders = [_parse_theta(text, model.n) for text in thetas]
    batch = model.sample(count, session.rng(), threads=session.threads)
    rows = []
    for theta in orders:
        analytic = model.moment(theta).analytic
        mc, se = empirical_moment(batch, theta)
        rows.append({"theta": tuple(theta), "analytic": analytic, "mc": mc, "se": se})
    results_renderer.render_moments(rows)
    if session.out is not None:
        df = pd.DataFrame(
            {
                "theta": [";".join(f"{t!r}" for t in row["theta"]) for row in rows],
                "analytic": [np.inf if r["analytic"] is None else r["analytic"] for r in rows],
                "exists": [r["analytic"] is not None for r in rows],
                "mc": [r["mc"] for r in rows],
                "mc_se": [r["se"] for r in rows],
            }
        )
        metadata = {"fingerprint": batch.fingerprint, "rows": batch.rows, "seed": session.seed}
        exporter.write_csv(df, session.out, metadata)
        results_renderer.render_written(session.out, len(df))


@cli.command("project")
@click.option("--w", "w_text", required=True, help="Nonnegative weights, e.g. 1,0.5.")
@click.pass_obj
def cmd_project(session: Session, w_text):
    """Law of <X, w>: atom at zero, projected representation and residual check."""
    model = session.model()
    w = grid_helpers.parse_values(w_text)
    if w.shape != (model.n,):
        raise ConfigError(f"w must have {model.n} entries, got {w.size}")
    if np.any(w < 0.0) or not np.any(w > 0.0):
        raise ConfigError("w must be nonnegative with a positive entry")
    report = model.project(w)
    results_renderer.render_projection(report)
    if session.out is not None:
        summary = {
            "atom": report.atom,
            "alphas": list(report.law.blocks.alphas),
            "dims": list(report.law.blocks.dims),
            "pi": report.law.rep.pi,
            "T": report.law.rep.T,
            "residuals": list(report.residuals),
        }
        exporter.write_json(summary, session.out)
        results_renderer.render_written(session.out, 1, "summary")


def figure_summary(bundle: models.FigureBundle, batch) -> dict:
    """Statistics of a figure run with their expected values and tolerances."""
    summary = {
        "name": bundle.name,
        "statistic": bundle.statistic,
        "expected": bundle.expected,
        "sample_size": batch.rows,
        "seed": batch.rng.seed,
        "fingerprint": batch.fingerprint,
        "tail_exceedance": models.tail_exceedance(batch),
    }
    if bundle.statistic == "log_correlation":
        estimate = models.log_correlation(batch)
        tolerance = bundle.tolerance
        summary["tolerance_rule"] = f"fixed band {tolerance:g} around the expected value"
    else:
        tail = float(np.min(bundle.nu * bundle.ff.alphas))
        summary["tolerance_rule"] = (
            f"fixed band {config.PEARSON_MC_TOLERANCE:g}: tail index {tail:g} leaves the "
            "fourth moments infinite, so the sample correlation has no standard error"
        )
        analytic = correlation_power(bundle.ff, bundle.nu)
        summary["analytic"] = analytic
        summary["analytic_tolerance"] = bundle.tolerance
        summary["analytic_within_tolerance"] = abs(analytic - bundle.expected) <= bundle.tolerance
        estimate = models.pearson_correlation(batch)
        tolerance = config.PEARSON_MC_TOLERANCE
    summary["estimate"] = estimate
    summary["tolerance"] = tolerance
    summary["within_tolerance"] = abs(estimate - bundle.expected) <= tolerance
    return summary


@cli.command("figure")
@click.argument("name")
@click.option("-n", "--n", "count", type=int, default=None, help="Override the sample size.")
@click.pass_obj
def cmd_figure(session: Session, name, count):
    """Writes density grid, samples and summary of a built-in example model."""
    model = figure_model(name)
    bundle = model.figure
    size = count if count is not None else bundle.sample_size
    if size < 2:
        raise ConfigError(f"-n must be at least 2, got {size}")
    out_dir = session.out if session.out is not None else Path(f"figure_{name}")

    default_grid = ",".join(f"{lo!r}:{hi!r}:{n}:{spacing}" for lo, hi, n, spacing in bundle.grid)
    grid = session.grid_spec(model.n, default_grid)
    density_df = pd.DataFrame(grid.points(), columns=_coordinate_names("x", model.n))
    density_df["f"] = model.density_grid(grid.nodes())
    exporter.write_csv(
        density_df,
        out_dir / config.DENSITY_FILENAME,
        {"figure": name, "grid": grid.to_text()},
    )

    batch = model.sample(size, session.rng(), threads=session.threads)
    samples_df = pd.DataFrame(batch.values, columns=_coordinate_names("x", model.n))
    exporter.write_csv(
        samples_df,
        out_dir / config.SAMPLES_FILENAME,
        {
            "figure": name,
            "fingerprint": batch.fingerprint,
            "rows": batch.rows,
            "seed": batch.rng.seed,
        },
    )

    summary = figure_summary(bundle, batch)
    exporter.write_json(summary, out_dir / config.SUMMARY_FILENAME)
    results_renderer.render_figure_summary(summary)
    results_renderer.render_written(out_dir, 3, "files")


@cli.command("validate")
@click.option("--module", "modules", multiple=True, help="Run only this module's checks.")
@click.pass_context
def cmd_validate(ctx, modules):
    """Runs the invariant suite; exits with 2 when a check fails."""
    printer = validation_suite.CheckPrinter(start_time=time.time())
    report = validation_suite.run_suite(modules, printer)
    click.echo("", err=True)
    results_renderer.render_validation(report)
    if not report.ok:
        ctx.exit(config.EXIT_NUMERIC)
