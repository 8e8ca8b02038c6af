#!/usr/bin/env python3
"""
Command-line interface for counting interference-alignment solutions.

Exit codes: 0 success, 2 usage or parse error, 3 the scenario does not meet
the chosen method's hypotheses.
"""

import csv
import logging
import time

import click
from pydantic import ValidationError

from config import Settings, get_settings
from exact_counter import bezout_bound, binomial_bound, closed_form_count, count_single_beam
from mc_counter import Checkpoint, estimate_general, estimate_square
from psi import feasibility_test
from results import ResultRecord, base_record, estimate_fields, exact_fields, feasibility_fields
from scenario import HypothesisError, Scenario, ScenarioError, dims, parse_scenario

EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3

FORMATS = ["json", "csv", "text"]

logger = logging.getLogger(__name__)


def _fail(message: str, code: int):
    click.echo(f"❌ Error: {message}", err=True)
    raise SystemExit(code)


def _parse(text: str) -> Scenario:
    try:
        return parse_scenario(text)
    except ScenarioError as e:
        if e.offset is not None:
            prefix = text.encode("utf-8")[: e.offset].decode("utf-8", "ignore")
            click.echo(f"   {text}", err=True)
            click.echo("   " + " " * len(prefix) + "^", err=True)
        _fail(str(e), EXIT_USAGE)


def _emit(record: ResultRecord, fmt: str, started: float) -> None:
    record.wall_time_seconds = round(time.perf_counter() - started, 6)
    click.echo(record.render(fmt))


def format_option(f):
    return click.option(
        "--format", "fmt", type=click.Choice(FORMATS), default="json", show_default=True,
        help="Output format",
    )(f)


@click.group()
@click.option("--verbose", "-v", count=True, help="-v for progress, -vv for debug output")
@click.pass_context
def cli(ctx, verbose):
    """IA Counter - count interference-alignment solutions of MIMO interference channels.

    Scenarios are written (MxN,d)^K or as a product such as (2x2,1)(3x3,1)(2x2,1):
    M transmit antennas, N receive antennas, d streams per user.
    """
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    try:
        ctx.obj = get_settings()
    except ValidationError as e:
        _fail(f"invalid IACOUNT_* setting: {e}", EXIT_USAGE)


@cli.command()
@click.argument("scenario")
@format_option
def info(scenario, fmt):
    """Show s, the size of Psi and the properness class of a scenario."""
    started = time.perf_counter()
    sc = _parse(scenario)
    fields = {}
    if sc.is_single_beam:
        fields = {"bezout_bound": bezout_bound(sc), "binomial_bound": binomial_bound(sc)}
    _emit(base_record("info", sc, **fields), fmt, started)


@cli.command()
@click.argument("scenario")
@click.option("--seed", type=int, default=None, help="Master seed (default: IACOUNT_SEED or 0)")
@click.option("--draws", type=click.IntRange(min=1), default=1, show_default=True,
              help="Independent random points; the majority verdict wins")
@format_option
@click.pass_obj
def feasibility(settings: Settings, scenario, seed, draws, fmt):
    """Test feasibility from the rank of Psi at random channels."""
    started = time.perf_counter()
    sc = _parse(scenario)
    seed = settings.seed if seed is None else seed
    result = feasibility_test(sc, seed=seed, draws=draws, rank_rtol=settings.rank_rtol)
    record = base_record("feasibility", sc, seed=seed, **feasibility_fields(result))
    _emit(record, fmt, started)


def _auto_method(sc: Scenario) -> str:
    if sc.is_single_beam:
        return "exact"
    u = sc.users[0]
    if sc.is_square_symmetric and sc.K >= 3 and u.N >= 2 * u.d:
        return "mc-square"
    return "mc-general"


@cli.command()
@click.argument("scenario")
@click.option("--method", "-m", type=click.Choice(["auto", "exact", "mc-general", "mc-square"]),
              default="auto", show_default=True)
@click.option("--epsilon", type=float, default=None, help="Relative-error target (default 0.05)")
@click.option("--seed", type=int, default=None, help="Master seed (default: IACOUNT_SEED or 0)")
@click.option("--max-samples", type=click.IntRange(min=1), default=None)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.option("--strategy", type=click.Choice(["backtracking", "dp"]), default="backtracking",
              show_default=True, help="Exact counter engine")
@click.option("--stopping", type=click.Choice(["std-error", "sample-std"]), default="std-error",
              show_default=True, help="Monte Carlo stop rule")
@click.option("--trace", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write Monte Carlo checkpoints (n, mean, std_error_rel) to this CSV file")
@format_option
@click.pass_obj
def count(settings: Settings, scenario, method, epsilon, seed, max_samples, threads,
          strategy, stopping, trace, fmt):
    """Count the IA solutions of a tight scenario, exactly or by Monte Carlo."""
    started = time.perf_counter()
    sc = _parse(scenario)
    epsilon = settings.epsilon if epsilon is None else epsilon
    seed = settings.seed if seed is None else seed
    max_samples = settings.max_samples if max_samples is None else max_samples
    threads = settings.threads if threads is None else threads
    if epsilon <= 0:
        _fail(f"--epsilon must be positive, got {epsilon}", EXIT_USAGE)

    if method == "auto":
        if dims(sc).s != 0:
            _fail(f"counting needs a tight scenario (s = 0); {sc} has s = {dims(sc).s}", EXIT_HYPOTHESIS)
        method = _auto_method(sc)
        logger.info("auto method: %s", method)

    trace_file = open(trace, "w", newline="", encoding="utf-8") if trace else None
    try:
        if method == "exact":
            result = count_single_beam(sc, strategy=strategy, workers=threads)
            record = base_record("count", sc, **exact_fields(result, closed_form_count(sc)))
        else:
            on_checkpoint = None
            if trace_file is not None:
                writer = csv.writer(trace_file)
                writer.writerow(Checkpoint._fields)

                def on_checkpoint(cp: Checkpoint):
                    writer.writerow(cp)

            estimator = estimate_square if method == "mc-square" else estimate_general
            est = estimator(
                sc,
                epsilon=epsilon,
                seed=seed,
                max_samples=max_samples,
                min_samples=settings.min_samples,
                stopping=stopping.replace("-", "_"),
                workers=threads,
                batch_size=settings.batch_size,
                checkpoint_every=settings.checkpoint_every,
                on_checkpoint=on_checkpoint,
                singular_rtol=settings.singular_rtol,
            )
            if est.all_zero:
                click.echo("⚠️  every sample of Psi was singular: the scenario is infeasible", err=True)
            record = base_record("count", sc, seed=seed, **estimate_fields(est))
    except HypothesisError as e:
        _fail(str(e), EXIT_HYPOTHESIS)
    finally:
        if trace_file is not None:
            trace_file.close()

    _emit(record, fmt, started)


if __name__ == "__main__":
    cli()
