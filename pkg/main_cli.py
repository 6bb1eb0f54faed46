import functools
import json

import click
import numpy as np
from loguru import logger

from __init__ import __version__
from commons.datasets import load_dataset, resolve_dataset
from commons.logger import setup_logger
from commons.reports import CSV, FORMATS, write_summary, write_table
from commons.settings import get_settings
from commons.utils import file_checksum, parse_float_list, parse_index_list
from errors.base_errors import RenyiError
from errors.input_errors import ConfigError
from infrastructure.estimation.estimation_manager import ASYMPTOTIC, CONVENTIONS, fit_mle
from infrastructure.reports.report_manager import (
    ARE_ALPHAS,
    DEFAULT_ALPHAS,
    build_are_table,
    build_fit_table,
    build_gross_error_table,
    build_influence_tables,
    build_power_plan,
    build_power_table,
    build_test_table,
)
from infrastructure.simulation.simulation_manager import (
    TABLE_ALPHAS,
    TABLE_DISTANCES,
    load_study_config,
    make_design,
    run_study,
)
from models.DatasetModel import LOG_LOG, NO_TRANSFORM, RunManifest
from models.FitModel import SolverOptions
from models.InferenceModel import LinearHypothesis
from models.RegressionModel import ModelData, Theta
from models.RobustnessModel import ALL_DIRECTIONS
from models.SimulationModel import FIXED_NORMAL, TWO_POINT, DesignSpec

EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 3
OUTLIERS = "outliers"


def handle_errors(source: str):
    """Maps package errors to their exit code after logging them and echoing the JSON error report."""

    def decorator(command):
        @functools.wraps(command)
        def wrapper(*args, **kwargs):
            try:
                return command(*args, **kwargs)
            except RenyiError as error:
                logger.error(f"{source} - {error.__str__()}")
                click.echo(json.dumps(error.to_json()), err=True)
                click.get_current_context().exit(error.exit_code)

        return wrapper

    return decorator


class RenyiGroup(click.Group):
    """Usage errors exit with 1; exit code 2 belongs to numerical errors."""

    def parse_args(self, ctx, args):
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as error:
            error.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as error:
            error.exit_code = EXIT_USAGE
            raise


def dataset_options(command):
    command = click.option("--dataset", default="brain_weight", show_default=True,
                           help="brain_weight, first_word or the path of a CSV file.")(command)
    command = click.option("--response", default=None, help="Response column of a user CSV.")(command)
    command = click.option("--covariates", default=None, help="Comma separated covariate columns of a user CSV.")(command)
    command = click.option("--transform", type=click.Choice([LOG_LOG, NO_TRANSFORM]), default=None,
                           help="Overrides the dataset's transform.")(command)
    command = click.option("--no-header", is_flag=True, help="The user CSV has no header line.")(command)
    return command


def _load(dataset, response, covariates, transform, no_header):
    descriptor = resolve_dataset(dataset, response, None if covariates is None else covariates.split(","),
                                 transform, header=not no_header)
    return descriptor, load_dataset(descriptor)


def _exclusions(ctx, descriptor) -> list[int]:
    text = ctx.obj["exclude"]
    if text is None:
        return []
    if text == OUTLIERS:
        return list(descriptor.outliers)
    return parse_index_list(text, source="--exclude")


def _alphas(ctx, default):
    return default if ctx.obj["alphas"] is None else parse_float_list(ctx.obj["alphas"], source="--alphas")


def _manifest(ctx, command: str, inputs: list[str] = ()) -> RunManifest:
    options = dict(ctx.obj)
    options.update(ctx.params)
    return RunManifest(command, options, ctx.obj["seed"], {path: file_checksum(path) for path in inputs if path})


def _emit(ctx, frame, stem: str, manifest: RunManifest, summary: dict = None):
    click.echo(frame.to_string(index=False))
    write_table(frame, ctx.obj["output"], stem, ctx.obj["format"], manifest)
    if summary is not None:
        write_summary(summary, ctx.obj["output"], f"{stem}_summary", manifest)
        click.echo(json.dumps(summary, indent=2, default=str))


@click.group(cls=RenyiGroup)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="64-bit seed, RENYI_SEED by default.")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=CSV, show_default=True)
@click.option("--output", type=click.Path(file_okay=False), default=None, help="Report directory, RENYI_OUTPUT_DIR by default.")
@click.option("--alphas", default=None, help="Comma separated tuning parameters.")
@click.option("--exclude", default=None, help="Comma separated 1-based rows to drop, or 'outliers'.")
@click.option("--verbose", is_flag=True, help="Debug logging.")
@click.version_option(__version__)
@click.pass_context
def cli(ctx, seed, fmt, output, alphas, exclude, verbose):
    """Minimum Rényi pseudodistance estimation and Wald-type tests for the fixed design normal linear model."""
    settings = get_settings()
    setup_logger("DEBUG" if verbose else settings.log_level)
    ctx.obj = {
        "seed": settings.seed if seed is None else seed,
        "format": fmt,
        "output": settings.output_dir if output is None else output,
        "alphas": alphas,
        "exclude": exclude,
        "verbose": verbose,
    }


@cli.command()
@dataset_options
@click.option("--convention", type=click.Choice(CONVENTIONS), default=ASYMPTOTIC, show_default=True)
@click.option("--multistart", is_flag=True, help="Add random restarts and keep the best objective.")
@click.pass_context
@handle_errors("fit")
def fit(ctx, dataset, response, covariates, transform, no_header, convention, multistart):
    """Fits every α, with and without the excluded rows."""
    descriptor, data = _load(dataset, response, covariates, transform, no_header)
    options = SolverOptions(multistart=multistart, seed=ctx.obj["seed"])
    frame = build_fit_table(data, _alphas(ctx, DEFAULT_ALPHAS), _exclusions(ctx, descriptor), options, convention)
    _emit(ctx, frame, "fit", _manifest(ctx, "fit", [descriptor.path]))
    if not frame["converged"].all():
        ctx.exit(EXIT_NOT_CONVERGED)


def _read_hypothesis_file(path: str, label: str) -> LinearHypothesis:
    try:
        rows = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as error:
        raise ConfigError(f"cannot read restrictions from '{path}': {error}", source="test", key="hypothesis-file")
    return LinearHypothesis.from_rows(rows, label=label)


@cli.command()
@dataset_options
@click.option("--hypothesis", "hypotheses", multiple=True, help='e.g. "beta0=1.98" or "beta0=112.56,beta1=-1.28".')
@click.option("--hypothesis-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV, one restriction per line: coefficients of every θ coordinate then the value.")
@click.option("--level", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.05, show_default=True)
@click.option("--convention", type=click.Choice(CONVENTIONS), default=ASYMPTOTIC, show_default=True)
@click.pass_context
@handle_errors("test")
def test(ctx, dataset, response, covariates, transform, no_header, hypotheses, hypothesis_file, level, convention):
    """Wald-type tests of linear hypotheses, p-values per α."""
    descriptor, data = _load(dataset, response, covariates, transform, no_header)
    parsed = [LinearHypothesis.from_assignments(text, data.parameter_names) for text in hypotheses]
    if hypothesis_file is not None:
        parsed.append(_read_hypothesis_file(hypothesis_file, label=hypothesis_file))
    if not parsed:
        raise ConfigError("give at least one --hypothesis or --hypothesis-file", source="test", key="hypothesis")
    frame = build_test_table(data, parsed, _alphas(ctx, DEFAULT_ALPHAS), level, _exclusions(ctx, descriptor),
                             convention=convention)
    _emit(ctx, frame, "test", _manifest(ctx, "test", [descriptor.path, hypothesis_file]))
    if not frame["converged"].all():
        ctx.exit(EXIT_NOT_CONVERGED)


def _influence_data(dataset, design, n, a, b, design_seed, theta_text) -> tuple[ModelData, Theta, list[str]]:
    if dataset is not None:
        descriptor, data = _load(dataset, None, None, None, False)
        theta = fit_mle(data).theta_hat if theta_text is None else Theta.from_vector(parse_float_list(theta_text))
        return data, theta, [descriptor.path]
    spec = DesignSpec(design, n, a, b, design_seed)
    matrix = make_design(spec)
    theta = Theta(np.ones(2), 1.0) if theta_text is None else Theta.from_vector(parse_float_list(theta_text))
    # the IF depends on the design only, the response is a placeholder
    return ModelData(matrix, matrix @ theta.beta), theta, []


@cli.command()
@click.option("--dataset", default=None, help="Use a dataset's design instead of a synthetic one.")
@click.option("--design", type=click.Choice([TWO_POINT, FIXED_NORMAL]), default=TWO_POINT, show_default=True)
@click.option("--n", "n", type=click.IntRange(3), default=100, show_default=True)
@click.option("--a", "a", type=float, default=1.0, show_default=True)
@click.option("--b", "b", type=float, default=5.0, show_default=True)
@click.option("--design-seed", type=int, default=7, show_default=True)
@click.option("--theta", "theta_text", default=None, help="β and σ, comma separated; (1,1,1) by default.")
@click.option("--direction", default="1", show_default=True, help="1-based row or 'all'.")
@click.option("--t-min", type=float, default=None, help="Grid start, x_i0ᵀβ − 10σ by default.")
@click.option("--t-max", type=float, default=None, help="Grid end, x_i0ᵀβ + 10σ by default.")
@click.option("--t-steps", type=click.IntRange(2), default=201, show_default=True)
@click.option("--hypothesis", default=None, help="Composite null for the second order IF, e.g. beta1=1.")
@click.option("--gross-error", is_flag=True, help="Also write gross error sensitivities and their optimal α.")
@click.pass_context
@handle_errors("influence")
def influence(ctx, dataset, design, n, a, b, design_seed, theta_text, direction, t_min, t_max, t_steps, hypothesis,
              gross_error):
    """Influence function curves and gross error sensitivities."""
    data, theta, inputs = _influence_data(dataset, design, n, a, b, design_seed, theta_text)
    if direction != ALL_DIRECTIONS and not direction.isdigit():
        raise ConfigError(f"direction must be a 1-based row or 'all', got '{direction}'", source="influence",
                          key="direction")
    direction = ALL_DIRECTIONS if direction == ALL_DIRECTIONS else int(direction)
    i0 = 1 if direction == ALL_DIRECTIONS else direction
    centre = float(data.design[i0 - 1] @ theta.beta)
    t_min = centre - 10 * theta.sigma if t_min is None else t_min
    t_max = centre + 10 * theta.sigma if t_max is None else t_max
    hyp = None if hypothesis is None else LinearHypothesis.from_assignments(hypothesis, data.parameter_names)
    alphas = _alphas(ctx, DEFAULT_ALPHAS)
    frame, summary = build_influence_tables(data, theta, alphas, direction, np.linspace(t_min, t_max, t_steps), hyp)
    manifest = _manifest(ctx, "influence", inputs)
    _emit(ctx, frame, "influence", manifest, summary)
    if gross_error:
        table, optima = build_gross_error_table(data, theta, i0, alphas)
        _emit(ctx, table, "gross_error", manifest, optima)


@cli.command("are")
@click.pass_context
@handle_errors("are")
def are_command(ctx):
    """Asymptotic relative efficiencies (percent)."""
    frame = build_are_table(_alphas(ctx, ARE_ALPHAS))
    _emit(ctx, frame, "are", _manifest(ctx, "are"))


@cli.command()
@click.option("--d-values", default=None, help="Comma separated distances d_x.")
@click.option("--sigma", type=click.FloatRange(0, min_open=True), default=1.0, show_default=True)
@click.option("--level", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.05, show_default=True)
@click.option("--plan", is_flag=True, help="Approximate power over --n-grid and the n reaching --target-power.")
@click.option("--theta-star", default="1,0.9,1", show_default=True)
@click.option("--theta0", default="1,1,1", show_default=True)
@click.option("--n-grid", default="50,100,200,400,800", show_default=True)
@click.option("--target-power", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.8,
              show_default=True)
@click.option("--design", type=click.Choice([TWO_POINT, FIXED_NORMAL]), default=TWO_POINT, show_default=True)
@click.option("--a", "a", type=float, default=1.0, show_default=True)
@click.option("--b", "b", type=float, default=5.0, show_default=True)
@click.pass_context
@handle_errors("power")
def power(ctx, d_values, sigma, level, plan, theta_star, theta0, n_grid, target_power, design, a, b):
    """Contiguous alternative power table, or power planning with --plan."""
    manifest = _manifest(ctx, "power")
    if not plan:
        distances = TABLE_DISTANCES if d_values is None else parse_float_list(d_values, source="--d-values")
        _emit(ctx, build_power_table(_alphas(ctx, TABLE_ALPHAS), distances, sigma, level), "power", manifest)
        return
    matrix = make_design(DesignSpec(design, 100, a, b))
    moment = matrix.T @ matrix / matrix.shape[0]
    frame, summary = build_power_plan(
        moment,
        Theta.from_vector(parse_float_list(theta_star, source="--theta-star")),
        Theta.from_vector(parse_float_list(theta0, source="--theta0")),
        _alphas(ctx, TABLE_ALPHAS),
        [int(value) for value in parse_float_list(n_grid, source="--n-grid")],
        level,
        target_power,
    )
    _emit(ctx, frame, "power_plan", manifest, summary)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="key = value file (or .yml) mapping to the study fields.")
@click.option("--workers", type=click.IntRange(1), default=None, help="joblib workers, RENYI_WORKERS by default.")
@click.pass_context
@handle_errors("simulate")
def simulate(ctx, config_path, workers):
    """Monte Carlo study: RMSE, empirical level and power per (α, n, hypothesis)."""
    config = load_study_config(config_path)
    if ctx.parent.params["seed"] is not None:
        config = config.model_copy(update={"seed": ctx.obj["seed"]})
    else:
        ctx.obj["seed"] = config.seed
    result = run_study(config, workers)
    manifest = _manifest(ctx, "simulate", [config_path])
    manifest.options["study"] = config.model_dump()
    _emit(ctx, result.to_frame(), "study", manifest)


if __name__ == "__main__":
    cli()
