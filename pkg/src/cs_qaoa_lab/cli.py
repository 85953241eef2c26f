"""Command-line interface for cs-qaoa-lab."""

# pyright: reportMissingImports=false

from pathlib import Path
import sys
from typing import NoReturn

try:
    import typer
except ModuleNotFoundError as e:
    print(f"Error: Missing dependency: {e}", file=sys.stderr)
    print("Install with: pip install cs-qaoa-lab", file=sys.stderr)
    raise SystemExit(1) from e

try:
    from rich.console import Console
except ModuleNotFoundError as e:
    print(f"Error: Missing dependency: {e}", file=sys.stderr)
    print("Install with: pip install cs-qaoa-lab", file=sys.stderr)
    raise SystemExit(1) from e

from cs_qaoa_lab.config import ExperimentConfig, build_config, load_config
from cs_qaoa_lab.database import CompressorDatabase
from cs_qaoa_lab.errors import ConfigError, CsQaoaError, SizeCapError, TrainingThresholdError
from cs_qaoa_lab.experiments import (
    SuiteResult,
    build_instances,
    build_report,
    run_fluctuation_suite,
    run_noise_suite,
    run_qaoa_suite,
    train_compressors,
    write_instances,
    write_suite,
)
from cs_qaoa_lab.formatter import format_json, format_table
from cs_qaoa_lab.instances import brute_force, load_instance
from cs_qaoa_lab.logs import configure_logging


app = typer.Typer(
    name="cs-qaoa-lab",
    help="Compressed-space QAOA simulation lab",
    no_args_is_help=True,
)

EXIT_CONFIG = 2
EXIT_TRAINING = 3
EXIT_SIZE_CAP = 4

ConfigOption = typer.Option(None, "--config", help="Path to TOML or JSON experiment config")
SeedOption = typer.Option(None, "--seed", min=0, help="Master seed (overrides the config)")
JobsOption = typer.Option(1, "--jobs", min=1, help="Worker processes")
OutOption = typer.Option(None, "--out", help="Output directory (overrides the config)")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Debug logging")
FormatOption = typer.Option("table", "--output-format", help="Output format: table or json")

_HANDLED = (CsQaoaError, FileNotFoundError, ValueError, OSError)


def _exit_code(error: Exception) -> int:
    if isinstance(error, (ConfigError, FileNotFoundError)):
        return EXIT_CONFIG
    if isinstance(error, TrainingThresholdError):
        return EXIT_TRAINING
    if isinstance(error, SizeCapError):
        return EXIT_SIZE_CAP
    return 1


def _fail(console: Console, error: Exception) -> NoReturn:
    console.print(f"[red]Error: {error}[/red]")
    raise typer.Exit(_exit_code(error))


def _check_format(console: Console, output_format: str) -> None:
    if output_format not in ("table", "json"):
        console.print(f"[red]Error: Unsupported --output-format '{output_format}'. Use 'table' or 'json'.[/red]")
        raise typer.Exit(EXIT_CONFIG)


def _resolve(config_file: Path | None, seed: int | None, out: Path | None) -> ExperimentConfig:
    return build_config(load_config(config_file), seed=seed, out=str(out) if out is not None else None)


def _emit(suite: SuiteResult, output_format: str, title: str, written: list[Path], console: Console) -> None:
    if output_format == "json":
        print(format_json({"summary": suite.summary or suite.rows, "files": [str(p) for p in written]}))
    else:
        if suite.summary_columns:
            print(format_table(suite.summary, suite.summary_columns, title))
        else:
            print(format_table(suite.rows, suite.columns, title))
        for path in written:
            console.print(f"[green]Wrote[/green] {path}")


@app.command("run-qaoa")
def run_qaoa(
    config_file: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    jobs: int = JobsOption,
    out: Path | None = OutOption,
    verbose: bool = VerboseOption,
    output_format: str = FormatOption,
) -> None:
    """Optimize QAOA / CS-QAOA over an instance ensemble and report success probabilities."""
    console = Console(stderr=True)
    configure_logging(verbose)
    _check_format(console, output_format)
    try:
        config = _resolve(config_file, seed, out)
        suite = run_qaoa_suite(config, jobs)
        written = write_suite(suite, config, Path(config.out))
    except _HANDLED as e:
        _fail(console, e)
    _emit(suite, output_format, "Success probability", written, console)


@app.command("train-compressor")
def train_compressor(
    config_file: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    out: Path | None = OutOption,
    verbose: bool = VerboseOption,
    output_format: str = FormatOption,
) -> None:
    """Train compression unitaries for the configured constraints and store them in the database."""
    console = Console(stderr=True)
    configure_logging(verbose)
    _check_format(console, output_format)
    try:
        config = _resolve(config_file, seed, out)
        db_path = Path(config.compressor.database or Path(config.out) / "compressors.json")
        database = CompressorDatabase.load(db_path) if db_path.exists() else CompressorDatabase()
        suite, records = train_compressors(config, database)
        database.save(db_path)
        written = write_suite(suite, config, Path(config.out)) + [db_path]
    except _HANDLED as e:
        _fail(console, e)
    _emit(suite, output_format, "Trained compressors", written, console)

    failed = [r for r in records if r.failed]
    if failed:
        console.print(f"[red]Error: {len(failed)} compressor(s) stayed below the survival threshold[/red]")
        raise typer.Exit(EXIT_TRAINING)


@app.command("sweep-noise")
def sweep_noise(
    config_file: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    jobs: int = JobsOption,
    out: Path | None = OutOption,
    verbose: bool = VerboseOption,
    output_format: str = FormatOption,
) -> None:
    """Success and discard probabilities as a function of the two-qubit gate error."""
    console = Console(stderr=True)
    configure_logging(verbose)
    _check_format(console, output_format)
    try:
        config = _resolve(config_file, seed, out)
        suite = run_noise_suite(config, jobs)
        written = write_suite(suite, config, Path(config.out))
    except _HANDLED as e:
        _fail(console, e)
    _emit(suite, output_format, "Noise sweep", written, console)


@app.command("fluctuation")
def fluctuation(
    config_file: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    jobs: int = JobsOption,
    out: Path | None = OutOption,
    verbose: bool = VerboseOption,
    output_format: str = FormatOption,
) -> None:
    """Energy fluctuation over uniformly random QAOA angles."""
    console = Console(stderr=True)
    configure_logging(verbose)
    _check_format(console, output_format)
    try:
        config = _resolve(config_file, seed, out)
        suite = run_fluctuation_suite(config, jobs)
        written = write_suite(suite, config, Path(config.out))
    except _HANDLED as e:
        _fail(console, e)
    _emit(suite, output_format, "Energy fluctuation", written, console)


@app.command("report")
def report(
    inputs: list[Path] = typer.Argument(..., help="Summary CSV files from run-qaoa, sweep-noise or fluctuation"),
    config_file: Path | None = ConfigOption,
    out: Path | None = OutOption,
    verbose: bool = VerboseOption,
    output_format: str = FormatOption,
) -> None:
    """Merge summary CSVs into plot_data.csv (figure, series, x, y, yerr)."""
    console = Console(stderr=True)
    configure_logging(verbose)
    _check_format(console, output_format)
    try:
        config = _resolve(config_file, None, out)
        suite = build_report(inputs)
        written = write_suite(suite, config, Path(config.out))
    except _HANDLED as e:
        _fail(console, e)
    _emit(suite, output_format, "Plot data", written, console)


@app.command("gen-instances")
def gen_instances(
    config_file: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    out: Path | None = OutOption,
    verbose: bool = VerboseOption,
    output_format: str = FormatOption,
) -> None:
    """Generate the seeded instance ensemble with oracle reports."""
    console = Console(stderr=True)
    configure_logging(verbose)
    _check_format(console, output_format)
    try:
        config = _resolve(config_file, seed, out)
        records = build_instances(config)
        written = write_instances(records, Path(config.out) / "instances")
    except _HANDLED as e:
        _fail(console, e)

    rows = [
        {
            "problem": r.problem,
            "size": r.size,
            "instance": r.index,
            "qubits": r.instance.n_qubits,
            "feasible": r.oracle.n_feasible,
            "p_f": r.oracle.p_f,
            "optima": len(r.oracle.optima),
            "value": r.oracle.value,
        }
        for r in records
    ]
    suite = SuiteResult("instances", list(rows[0]) if rows else [], rows, [], [])
    _emit(suite, output_format, "Instances", written, console)


@app.command("oracle")
def oracle(
    instance_file: Path = typer.Argument(..., help="Instance file (.json, or .txt QKP benchmark)"),
    k: int = typer.Option(3, "--k", min=2, help="Subset count for bare graph files"),
    output_format: str = typer.Option("json", "--output-format", help="Output format: table or json"),
    verbose: bool = VerboseOption,
) -> None:
    """Brute-force optima and feasible-space statistics of one instance."""
    console = Console(stderr=True)
    configure_logging(verbose)
    _check_format(console, output_format)
    try:
        instance = load_instance(instance_file, k=k)
        result = brute_force(instance)
    except _HANDLED as e:
        _fail(console, e)

    payload = {"kind": instance.kind, **result.to_dict()}
    if output_format == "json":
        print(format_json(payload))
    else:
        row = {**payload, "optima": len(result.optima)}
        print(format_table([row], list(row), "Oracle"))


def cli_main() -> None:
    """Main entry point for CLI."""
    app()
