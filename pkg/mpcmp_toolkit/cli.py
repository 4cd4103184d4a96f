"""
Command-line interface for mpcmp-toolkit.

Every subcommand builds its complete output before writing anything, so a
failing run leaves stdout empty. Numerical failures exit with status 1 and
a single `error [<stage>]: <message>` line on stderr; usage errors exit 2.
"""

import functools
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
from loguru import logger
from rich.console import Console

from mpcmp_toolkit import __version__
from mpcmp_toolkit.analysis import (
    Bandwidth,
    bench_workload,
    cv_bandwidth,
    empirical_baseline,
    fit_mle,
    read_counts,
    run_benchmark,
    smooth,
)
from mpcmp_toolkit.analysis.fitting import aic
from mpcmp_toolkit.config import (
    DEFAULT_BENCH_MU_RANGE,
    DEFAULT_BENCH_NU_RANGE,
    DEFAULT_BENCH_WORKLOAD,
    DEFAULT_LOG_LEVEL,
    DEFAULT_NU_MAX,
    DEFAULT_NU_MIN,
    DEFAULT_SOLVE_TOL,
    DEFAULT_TAIL_TOL,
    VALID_LOG_LEVELS,
    FitSettings,
    SolverSettings,
)
from mpcmp_toolkit.distribution import (
    BracketStrategy,
    MeanCMP,
    MeanParams,
    build_grid_from_means,
    convergence_diagnostic,
    interpolate_eta,
    limit_pmf,
    load_grid,
    solve,
)
from mpcmp_toolkit.distribution.grid import GridDocument
from mpcmp_toolkit.errors import CmpError
from mpcmp_toolkit.logging import EventLogger

FLOAT_FORMAT = "%.17g"


class NonNegativeFloat(click.ParamType):
    """A finite real >= 0."""

    name = "nonneg-float"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> float:
        if isinstance(value, float):
            number = value
        else:
            try:
                number = float(value)
            except (TypeError, ValueError):
                self.fail(f"{value!r} is not a number", param, ctx)
        if not np.isfinite(number) or number < 0.0:
            self.fail(f"{value!r} must be finite and non-negative", param, ctx)
        return number


class FloatList(click.ParamType):
    """Comma-separated finite reals, optionally with a fixed length."""

    name = "float-list"

    def __init__(self, length: Optional[int] = None, positive: bool = False):
        self.length = length
        self.positive = positive

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> List[float]:
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        try:
            numbers = [float(part) for part in str(value).split(",") if part.strip()]
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)
        if not numbers:
            self.fail("expected at least one number", param, ctx)
        if self.length is not None and len(numbers) != self.length:
            self.fail(f"expected {self.length} comma-separated numbers, got {len(numbers)}", param, ctx)
        if not all(np.isfinite(numbers)) or min(numbers) < 0.0:
            self.fail("values must be finite and non-negative", param, ctx)
        if self.positive and min(numbers) <= 0.0:
            self.fail("values must be positive", param, ctx)
        return numbers


NONNEG = NonNegativeFloat()
UNIT_OPEN = click.FloatRange(min=0.0, max=1.0, min_open=True, max_open=True)


def configure_logging(log_level: str) -> None:
    """Route loguru to stderr at the requested level; stdout carries data only."""
    logger.remove()
    logger.add(sys.stderr, level=log_level, format="{time:HH:mm:ss} | {level: <8} | {name}:{line} - {message}")


def format_json(value: Any) -> str:
    """JSON with every float at 17 significant digits."""
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {format_json(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(format_json(v) for v in value) + "]"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if np.isfinite(value):
            return FLOAT_FORMAT % value
        return json.dumps(float(value))
    return json.dumps(value)


def format_csv(df: pd.DataFrame) -> str:
    return df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _write(text: str, output: Optional[Path]) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")


def _emit(fmt: str, output: Optional[Path], table: pd.DataFrame, payload: Any) -> None:
    text = format_csv(table) if fmt == "csv" else format_json(payload) + "\n"
    _write(text, output)


def numeric_options(default_format: str = "csv") -> Callable:
    """--tol, --tail-tol, --format and --output, shared by every subcommand."""

    def decorator(f: Callable) -> Callable:
        f = click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), help="Write output to a file instead of stdout.")(f)
        f = click.option(
            "--format", "fmt", type=click.Choice(["csv", "json"]), default=default_format, show_default=True, help="Output format."
        )(f)
        f = click.option("--tail-tol", type=UNIT_OPEN, default=DEFAULT_TAIL_TOL, show_default=True, help="Series truncation tolerance.")(f)
        f = click.option("--tol", type=UNIT_OPEN, default=DEFAULT_SOLVE_TOL, show_default=True, help="Relative solver tolerance.")(f)
        return f

    return decorator


def handle_errors(f: Callable) -> Callable:
    """Turn library errors into a one-line diagnostic and exit status 1."""

    @functools.wraps(f)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return f(*args, **kwargs)
        except CmpError as e:
            logger.debug(f"{type(e).__name__} details: {e.details}")
            ctx = click.get_current_context(silent=True)
            event_logger = (ctx.obj or {}).get("event_logger") if ctx is not None else None
            if event_logger is not None:
                event_logger.log_error(e, source=f"cli:{ctx.info_name}")
            Console(stderr=True, soft_wrap=True, highlight=False).print(f"error [{e.stage}]: {e}", markup=False)
            sys.exit(1)

    return wrapper


def _event_logger() -> Optional[EventLogger]:
    ctx = click.get_current_context()
    return (ctx.obj or {}).get("event_logger")


@click.group()
@click.version_option(__version__, prog_name="mpcmp")
@click.option(
    "--log-level",
    type=click.Choice(VALID_LOG_LEVELS, case_sensitive=False),
    default=DEFAULT_LOG_LEVEL,
    show_default=True,
    help="Logging level for diagnostics on stderr.",
)
@click.option("--log-file", type=click.Path(dir_okay=False, path_type=Path), help="Append structured events as JSONL.")
@click.pass_context
def main(ctx: click.Context, log_level: str, log_file: Optional[Path]) -> None:
    """Mean-parametrized Conway-Maxwell-Poisson distributions."""
    configure_logging(log_level.upper())
    ctx.ensure_object(dict)
    if log_file is not None:
        event_logger = EventLogger(log_file, console_output=log_level.upper() == "DEBUG")
        ctx.obj["event_logger"] = event_logger
        ctx.call_on_close(event_logger.close)


@main.command()
@click.option("--mu", type=NONNEG, required=True, help="Target mean.")
@click.option("--nu", type=NONNEG, required=True, help="Dispersion.")
@click.option("--y-max", type=click.IntRange(min=0), help="Last y to print (default: truncation point).")
@numeric_options()
@handle_errors
def pmf(mu: float, nu: float, y_max: Optional[int], tol: float, tail_tol: float, fmt: str, output: Optional[Path]) -> None:
    """Print the pmf of CMP(mu, nu)."""
    dist = MeanCMP.from_mean(mu, nu, tol, tail_tol)
    top = dist.y_hi if y_max is None else y_max
    ys = np.arange(top + 1)
    probs = np.array([dist.pmf(int(y)) for y in ys])
    table = pd.DataFrame({"y": ys, "probability": probs})
    _emit(fmt, output, table, {str(int(y)): float(p) for y, p in zip(ys, probs)})


@main.command("solve")
@click.option("--mu", type=NONNEG, required=True, help="Target mean.")
@click.option("--nu", type=NONNEG, required=True, help="Dispersion.")
@click.option(
    "--strategy",
    type=click.Choice([s.value for s in BracketStrategy]),
    default=BracketStrategy.LEMMA.value,
    show_default=True,
    help="Initial bracket: rate bounds or expansion only.",
)
@numeric_options()
@handle_errors
def solve_command(mu: float, nu: float, strategy: str, tol: float, tail_tol: float, fmt: str, output: Optional[Path]) -> None:
    """Solve the mean constraint for log(lambda)."""
    result = solve(
        MeanParams(mu, nu),
        SolverSettings(tol=tol, tail_tol=tail_tol),
        strategy=BracketStrategy(strategy),
        event_logger=_event_logger(),
    )
    table = pd.DataFrame({"mu": [mu], "nu": [nu], "log_lambda": [result.eta]})
    payload: Dict[str, Any] = {"mu": mu, "nu": nu, "log_lambda": result.eta}
    if result.bracket is not None:
        payload.update(
            eta_lo=result.bracket.eta_lo,
            eta_hi=result.bracket.eta_hi,
            rule=result.bracket.rule.value,
        )
    payload.update(iterations=result.iterations, evaluations=result.evaluations)
    _emit(fmt, output, table, payload)


@main.command()
@click.option("--mu", type=NONNEG, required=True, help="Target mean.")
@click.option("--nu", type=NONNEG, required=True, help="Dispersion.")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Number of draws.")
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), required=True, help="Generator seed.")
@numeric_options()
@handle_errors
def sample(mu: float, nu: float, n: int, seed: int, tol: float, tail_tol: float, fmt: str, output: Optional[Path]) -> None:
    """Draw n seeded samples from CMP(mu, nu)."""
    values = MeanCMP.from_mean(mu, nu, tol, tail_tol).sample(n, seed)
    table = pd.DataFrame({"value": values})
    _emit(fmt, output, table, {"mu": mu, "nu": nu, "seed": seed, "values": values.tolist()})


@main.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Counts, one per line.")
@click.option("--nu-min", type=click.FloatRange(min=0.0, min_open=True), default=DEFAULT_NU_MIN, show_default=True)
@click.option("--nu-max", type=click.FloatRange(min=0.0, min_open=True), default=DEFAULT_NU_MAX, show_default=True)
@click.option("--reference-loglik", type=float, help="Externally reported empirical log-likelihood to show next to ours.")
@numeric_options(default_format="json")
@handle_errors
def fit(
    input_path: Path,
    nu_min: float,
    nu_max: float,
    reference_loglik: Optional[float],
    tol: float,
    tail_tol: float,
    fmt: str,
    output: Optional[Path],
) -> None:
    """Fit (mu, nu) by maximum likelihood and compare with the empirical model."""
    if nu_min >= nu_max:
        raise click.BadParameter(f"--nu-min ({nu_min}) must be below --nu-max ({nu_max})")
    settings = FitSettings(nu_min=nu_min, nu_max=nu_max, solver=SolverSettings(tol=tol, tail_tol=tail_tol))

    data = read_counts(input_path)
    result = fit_mle(data, settings, event_logger=_event_logger())
    baseline = empirical_baseline(data)

    payload = result.to_dict()
    payload.update(sample_mean=data.sample_mean, sample_variance=data.sample_variance)
    empirical: Dict[str, Any] = {
        "probabilities": {str(y): p for y, p in baseline.probabilities.items()},
        "loglik": baseline.loglik,
        "aic": baseline.aic,
        "parameters": baseline.n_parameters,
    }
    if reference_loglik is not None:
        empirical.update(
            reference_loglik=reference_loglik,
            reference_aic=aic(reference_loglik, baseline.n_parameters),
            loglik_gap=baseline.loglik - reference_loglik,
        )
    payload["empirical"] = empirical

    table = pd.DataFrame([result.to_dict()])
    table["empirical_loglik"] = baseline.loglik
    table["empirical_aic"] = baseline.aic
    _emit(fmt, output, table, payload)


@main.command()
@click.option("--mu", type=NONNEG, required=True, help="Target mean.")
@numeric_options(default_format="json")
@handle_errors
def limit(mu: float, tol: float, tail_tol: float, fmt: str, output: Optional[Path]) -> None:
    """Print the limiting pmf as nu grows without bound."""
    masses = limit_pmf(mu).as_dict()
    table = pd.DataFrame({"y": list(masses), "probability": list(masses.values())})
    _emit(fmt, output, table, {str(y): p for y, p in masses.items()})


@main.command()
@click.option("--mu", type=NONNEG, required=True, help="Target mean.")
@click.option("--nus", type=FloatList(), required=True, help="Comma-separated dispersions.")
@numeric_options()
@handle_errors
def diag(mu: float, nus: Sequence[float], tol: float, tail_tol: float, fmt: str, output: Optional[Path]) -> None:
    """Total-variation distance to the limiting pmf for each nu."""
    distances = [convergence_diagnostic(mu, nu, tol, tail_tol) for nu in nus]
    table = pd.DataFrame({"nu": list(nus), "tv_distance": distances})
    _emit(fmt, output, table, {"mu": mu, "nu": list(nus), "tv_distance": distances})


def _knot_counts(value: Sequence[float]) -> List[int]:
    counts = [int(v) for v in value]
    if any(c != v or c < 1 for c, v in zip(counts, value)):
        raise click.BadParameter("knot counts must be positive integers", param_hint="--knots")
    return counts * 2 if len(counts) == 1 else counts


@main.command("grid-build")
@click.option("--mu-range", type=FloatList(length=2, positive=True), required=True, help="lo,hi for log-spaced mu knots.")
@click.option("--nu-range", type=FloatList(length=2), required=True, help="lo,hi for linearly spaced nu knots.")
@click.option("--knots", type=FloatList(), default="20", show_default=True, help="Knot count, or mu_count,nu_count.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Threads for solving cells.")
@click.option("--tol", type=UNIT_OPEN, default=DEFAULT_SOLVE_TOL, show_default=True, help="Relative solver tolerance.")
@click.option("--tail-tol", type=UNIT_OPEN, default=DEFAULT_TAIL_TOL, show_default=True, help="Series truncation tolerance.")
@click.option("--strict", is_flag=True, help="Fail if eta does not increase along mu.")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), help="Grid file (default: stdout).")
@handle_errors
def grid_build(
    mu_range: Sequence[float],
    nu_range: Sequence[float],
    knots: Sequence[float],
    workers: int,
    tol: float,
    tail_tol: float,
    output: Optional[Path],
    strict: bool,
) -> None:
    """Precompute log(lambda) over a (mu, nu) grid."""
    counts = _knot_counts(knots)
    if len(counts) != 2:
        raise click.BadParameter("expected one or two knot counts", param_hint="--knots")
    for name, (lo, hi), count in (("--mu-range", mu_range, counts[0]), ("--nu-range", nu_range, counts[1])):
        if lo > hi or (lo == hi and count > 1):
            raise click.BadParameter("lo must be below hi", param_hint=name)

    mu_knots = np.geomspace(mu_range[0], mu_range[1], counts[0])
    nu_knots = np.linspace(nu_range[0], nu_range[1], counts[1])
    grid = build_grid_from_means(
        mu_knots,
        nu_knots,
        settings=SolverSettings(tol=tol, tail_tol=tail_tol),
        max_workers=workers,
        event_logger=_event_logger(),
        strict=strict,
    )
    _write(GridDocument.from_grid(grid).model_dump_json(indent=2) + "\n", output)


@main.command("grid-eval")
@click.option("--grid", "grid_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Grid file.")
@click.option("--mu", type=NONNEG, required=True, help="Target mean.")
@click.option("--nu", type=NONNEG, required=True, help="Dispersion.")
@numeric_options()
@handle_errors
def grid_eval(grid_path: Path, mu: float, nu: float, tol: float, tail_tol: float, fmt: str, output: Optional[Path]) -> None:
    """Interpolate log(lambda) from a stored grid."""
    eta = interpolate_eta(load_grid(grid_path), MeanParams(mu, nu))
    table = pd.DataFrame({"mu": [mu], "nu": [nu], "log_lambda": [eta]})
    _emit(fmt, output, table, {"mu": mu, "nu": nu, "log_lambda": eta})


@main.command("smooth")
@click.option("--input", "input_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Counts, one per line.")
@click.option("--bandwidth", type=click.FloatRange(min=0.0, min_open=True), help="Bandwidth h (nu = 1/h).")
@click.option("--cv-grid", type=FloatList(positive=True), help="Candidate bandwidths for LSCV selection.")
@click.option("--y-max", type=click.IntRange(min=0), help="Last support point (default: largest count).")
@click.option("--renormalize/--no-renormalize", default=False, show_default=True, help="Rescale estimates to unit mass.")
@numeric_options()
@handle_errors
def smooth_command(
    input_path: Path,
    bandwidth: Optional[float],
    cv_grid: Optional[Sequence[float]],
    y_max: Optional[int],
    renormalize: bool,
    tol: float,
    tail_tol: float,
    fmt: str,
    output: Optional[Path],
) -> None:
    """Kernel-smoothed pmf of count data."""
    if (bandwidth is None) == (cv_grid is None):
        raise click.UsageError("give exactly one of --bandwidth and --cv-grid")

    data = read_counts(input_path)
    bw = Bandwidth(bandwidth) if bandwidth is not None else cv_bandwidth(data, cv_grid, y_max, tol, tail_tol)
    estimate = smooth(data, bw, y_max, renormalize, tol, tail_tol)
    table = pd.DataFrame({"y": estimate.support, "probability": estimate.estimates})
    _emit(
        fmt,
        output,
        table,
        {
            "bandwidth": bw.h,
            "renormalized": estimate.renormalized,
            "raw_total_mass": estimate.raw_total_mass,
            "probabilities": {str(y): p for y, p in estimate.as_dict().items()},
        },
    )


@main.command()
@click.option("--mu", type=NONNEG, default=4.321, show_default=True, help="Target mean.")
@click.option("--nus", type=FloatList(), default="1,5,10,25,100", show_default=True, help="Comma-separated dispersions.")
@click.option("--y-max", type=click.IntRange(min=0), help="Last y in every block (default: each truncation point).")
@numeric_options()
@handle_errors
def figure1(
    mu: float,
    nus: Sequence[float],
    y_max: Optional[int],
    tol: float,
    tail_tol: float,
    fmt: str,
    output: Optional[Path],
) -> None:
    """Pmfs at one mean across several dispersions, one block per nu."""
    blocks = []
    for nu in nus:
        dist = MeanCMP.from_mean(mu, nu, tol, tail_tol)
        top = dist.y_hi if y_max is None else y_max
        ys = np.arange(top + 1)
        blocks.append((nu, pd.DataFrame({"y": ys, "probability": [dist.pmf(int(y)) for y in ys]})))

    if fmt == "csv":
        text = "".join(f"# nu={FLOAT_FORMAT % nu}\n" + format_csv(table) for nu, table in blocks)
    else:
        text = format_json(
            {
                "mu": mu,
                "pmfs": {FLOAT_FORMAT % nu: table["probability"].tolist() for nu, table in blocks},
            }
        ) + "\n"
    _write(text, output)


@main.command()
@click.option("--n", "n", type=click.IntRange(min=1), default=DEFAULT_BENCH_WORKLOAD, show_default=True, help="Workload size.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True, help="Seed for the workload draw.")
@click.option("--mu-range", type=FloatList(length=2, positive=True), default=",".join(map(str, DEFAULT_BENCH_MU_RANGE)), show_default=True)
@click.option("--nu-range", type=FloatList(length=2, positive=True), default=",".join(map(str, DEFAULT_BENCH_NU_RANGE)), show_default=True)
@numeric_options()
@handle_errors
def bench(
    n: int,
    seed: int,
    mu_range: Sequence[float],
    nu_range: Sequence[float],
    tol: float,
    tail_tol: float,
    fmt: str,
    output: Optional[Path],
) -> None:
    """Compare rate-bound brackets with expansion-only bracketing."""
    workload = bench_workload(n, seed, tuple(mu_range), tuple(nu_range))
    report = run_benchmark(workload, SolverSettings(tol=tol, tail_tol=tail_tol), event_logger=_event_logger())
    summary = report.to_dict()
    _emit(fmt, output, pd.DataFrame([summary]), summary)


if __name__ == "__main__":
    main()
