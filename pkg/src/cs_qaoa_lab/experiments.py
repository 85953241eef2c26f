"""Experiment suites behind the CLI: task lists, worker pool, CSV and metadata output."""

from __future__ import annotations

import csv
import json
import logging
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from cs_qaoa_lab import __version__
from cs_qaoa_lab.ansatz import TrainingBudget, train_with_escalation, trained_stage
from cs_qaoa_lab.compression import Compressor, StageBuilder, build_qap_compressor, compose_constraints
from cs_qaoa_lab.config import CompressorSection, ExperimentConfig, ProblemSection, parse_mode
from cs_qaoa_lab.constraints import ConstraintSpec, build_hcs
from cs_qaoa_lab.database import CompressorDatabase, CompressorRecord, record_from_training
from cs_qaoa_lab.encoders import Encoding, encode
from cs_qaoa_lab.errors import ConfigError, FullyDiscardedError
from cs_qaoa_lab.instances import (
    OracleReport,
    QkpBenchmark,
    accept_instance,
    brute_force,
    derive_qkp,
    gen_maxkcut,
    gen_qap,
    gen_qkp_benchmark,
    load_qkp,
    save_instance,
    toy_problem,
    write_qkp,
)
from cs_qaoa_lab.noise import estimate_discard_rate, fit_discard_constant
from cs_qaoa_lab.optimizers import PowellConfig, SaConfig
from cs_qaoa_lab.problems import CopInstance, Qap, feasible_mask
from cs_qaoa_lab.qaoa import (
    QaoaConfig,
    QaoaResult,
    energy_fluctuation,
    layer_two_qubit_gates,
    solve_qaoa,
    tune_penalty,
)
from cs_qaoa_lab.qubo import assemble, qubo_to_ising

logger = logging.getLogger(__name__)

# Independent random streams, mixed into every derived seed.
INSTANCE_STREAM = 0
COMPRESSOR_STREAM = 1
QAOA_STREAM = 2
FLUCTUATION_STREAM = 3
TRAINING_STREAM = 4

DEFAULT_VARIANT = {"maxkcut": "onehot", "qap": "binary-parity", "qkp": "D", "linear": "onehot"}

QAOA_COLUMNS = [
    "problem", "size", "instance", "instance_seed", "mode", "p", "penalty", "p_suc", "p_suc_std",
    "p_dis", "energy", "infeasible_mass", "n_compressors",
]
QAOA_SUMMARY = [
    "problem", "size", "mode", "p", "n_instances", "penalty_mean", "p_suc_mean",
    "p_suc_std", "p_dis_mean", "compressor_std_mean",
]
NOISE_COLUMNS = [
    "problem", "size", "instance", "instance_seed", "mode", "p", "epsilon", "trajectories", "penalty",
    "p_suc", "p_dis", "normalized", "n_two", "p_dis_estimate",
]
NOISE_SUMMARY = [
    "problem", "size", "mode", "p", "epsilon", "n_instances", "p_suc_mean", "p_suc_std",
    "p_dis_mean", "normalized_mean", "normalized_std", "p_dis_estimate_mean",
]
FLUCTUATION_COLUMNS = ["problem", "size", "instance", "instance_seed", "mode", "p", "penalty", "delta_e", "e_ave", "ratio"]
FLUCTUATION_SUMMARY = ["problem", "size", "mode", "p", "n_instances", "delta_e_mean", "delta_e_std", "e_ave_mean"]
TRAINING_COLUMNS = [
    "kind", "n", "m", "ansatz", "layers", "p_sur", "fs_ratio_original", "fs_ratio_compressed", "failed",
]
PLOT_COLUMNS = ["figure", "series", "x", "y", "yerr"]


def seed_for(*keys: int) -> int:
    """Deterministic 32-bit seed from integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True, eq=False)
class InstanceRecord:
    size: int
    index: int
    seed: int
    instance: CopInstance
    oracle: OracleReport
    benchmark: QkpBenchmark | None = None

    @property
    def problem(self) -> str:
        return self.instance.kind


@dataclass
class SuiteResult:
    name: str
    columns: list[str]
    rows: list[dict[str, Any]]
    summary_columns: list[str]
    summary: list[dict[str, Any]]
    wall_time: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)


def _load_benchmarks(path: str) -> list[QkpBenchmark]:
    location = Path(path)
    files = sorted(location.glob("*.txt")) if location.is_dir() else [location]
    if not files:
        raise FileNotFoundError(f"No QKP benchmark files in {location}")
    return [load_qkp(f) for f in files]


def _generate(
    problem: ProblemSection,
    size: int,
    index: int,
    seed: int,
    benchmarks: list[QkpBenchmark] | None,
) -> tuple[CopInstance, QkpBenchmark | None]:
    if problem.kind == "maxkcut":
        return gen_maxkcut(size, problem.k, seed), None
    if problem.kind == "qap":
        return gen_qap(size, seed), None
    if problem.kind == "qkp":
        if benchmarks is not None:
            benchmark = benchmarks[index % len(benchmarks)]
        else:
            benchmark = gen_qkp_benchmark(
                problem.benchmark_items,
                seed,
                problem.benchmark_density,
                label=f"n_{problem.benchmark_items}_{index + 1}",
            )
        return derive_qkp(benchmark, size), benchmark
    return toy_problem(), None


def build_instances(config: ExperimentConfig) -> list[InstanceRecord]:
    """Seeded instance ensemble with exhaustive oracles, filtered on p_F when requested."""
    problem = config.problem
    benchmarks = _load_benchmarks(problem.benchmark) if problem.kind == "qkp" and problem.benchmark else None
    sizes = (2,) if problem.kind == "toy" else problem.sizes
    n_instances = 1 if problem.kind == "toy" else problem.n_instances
    records: list[InstanceRecord] = []
    for size in sizes:
        for index in range(n_instances):
            for draw in range(problem.max_draws):
                seed = seed_for(config.seed, INSTANCE_STREAM, size, index, draw)
                instance, benchmark = _generate(problem, size, index, seed, benchmarks)
                report = brute_force(instance)
                if not problem.filter or accept_instance(report, problem.accept_low, problem.accept_high):
                    break
                if benchmarks is not None or problem.kind == "toy":
                    raise ValueError(
                        f"Instance {index} of size {size} has p_F={report.p_f:.4f} outside "
                        f"[{problem.accept_low}, {problem.accept_high}]"
                    )
                logger.debug("Rejected draw %d for size %d instance %d: p_F=%.4f", draw, size, index, report.p_f)
            else:
                raise ValueError(
                    f"No {problem.kind} instance of size {size} with p_F in "
                    f"[{problem.accept_low}, {problem.accept_high}] after {problem.max_draws} draws"
                )
            records.append(InstanceRecord(size, index, seed, instance, report, benchmark))
            logger.info(
                "Instance %s size=%d #%d: N=%d, |F|=%d, %d optima",
                problem.kind, size, index, instance.n_qubits, report.n_feasible, len(report.optima),
            )
    return records


def write_instances(records: Sequence[InstanceRecord], out_dir: Path) -> list[Path]:
    written: list[Path] = []
    for record in records:
        stem = f"{record.problem}_{record.size}_{record.index}"
        instance_path = out_dir / f"{stem}.json"
        save_instance(record.instance, instance_path)
        oracle_path = out_dir / f"{stem}.oracle.json"
        oracle_path.write_text(json.dumps({"seed": record.seed, **record.oracle.to_dict()}, indent=2) + "\n")
        written += [instance_path, oracle_path]
        if record.benchmark is not None:
            benchmark_path = out_dir / "benchmarks" / f"{record.benchmark.label}.txt"
            if not benchmark_path.exists():
                write_qkp(record.benchmark, benchmark_path)
                written.append(benchmark_path)
    return written


def training_budget(section: CompressorSection, ansatz: str | None = None) -> TrainingBudget:
    return TrainingBudget(
        ansatz=ansatz or section.ansatz,
        layers=section.layers,
        n_rep=section.n_rep,
        sa=SaConfig(section.n_loop, section.t_initial, section.t_final),
        threshold=section.threshold,
        max_escalations=section.max_escalations,
    )


def compressor_databases(section: CompressorSection) -> list[CompressorDatabase]:
    """Databases consulted before training: the configured file first, then the bundled records."""
    databases = []
    if section.database:
        databases.append(CompressorDatabase.load(section.database))
    databases.append(CompressorDatabase.bundled())
    return databases


@dataclass
class StoredOrTrainedStage:
    """Stage builder that reuses a stored compressor for constraints on untouched qubits.

    A stored record is valid as a stage only while none of the constraint's
    qubits has been discarded or acted on by an earlier stage.
    """

    databases: Sequence[CompressorDatabase]
    budget: TrainingBudget
    reused: int = 0
    trained: int = 0

    def __call__(self, spec: ConstraintSpec, current: Compressor, rng: np.random.Generator) -> Compressor:
        fresh = not set(spec.variables) & (set(current.discard) | current.touched_qubits())
        if fresh:
            for database in self.databases:
                record = database.lookup(spec, ansatz=self.budget.ansatz)
                if record is not None:
                    self.reused += 1
                    logger.debug("Reusing stored %s-ansatz compressor (m=%d) for %s on %s", record.ansatz, record.m, spec.kind, spec.variables)
                    return record.compressor(spec.variables, current.n_qubits)
        self.trained += 1
        build: StageBuilder = trained_stage(self.budget)
        return build(spec, current, rng)


def build_compressors(
    record: InstanceRecord,
    variant: str | None,
    config: ExperimentConfig,
    form: str | None = None,
) -> list[Compressor]:
    """One compressor for deterministic variants, ``n_compressors`` trained ones for C/D.

    C/D stages come from the compressor databases when a record matches; a
    compressor assembled entirely from stored stages is returned once.
    """
    instance = record.instance
    variant = variant or DEFAULT_VARIANT[instance.kind]
    form = form or config.compressor.form
    constraints = instance.constraints()
    if variant in ("C", "D"):
        source = StoredOrTrainedStage(compressor_databases(config.compressor), training_budget(config.compressor, variant))
        compressors = []
        for j in range(config.compressor.n_compressors):
            rng = np.random.default_rng([config.seed, COMPRESSOR_STREAM, record.size, record.index, j])
            compressors.append(compose_constraints(constraints, [source] * len(constraints), instance.n_qubits, rng))
            if source.trained == 0:
                logger.info("%s size=%d #%d: %s compressor taken from the database", record.problem, record.size, record.index, variant)
                break
        return compressors
    if variant in ("binary", "binary-parity"):
        if not isinstance(instance, Qap):
            raise ConfigError(f"Mode variant '{variant}' applies to QAP instances only")
        return [build_qap_compressor(instance.n_f, variant, form)]
    strategy = "onehot-gate" if variant == "onehot-gate" or form == "gate" else "onehot"
    return [compose_constraints(constraints, [strategy] * len(constraints), instance.n_qubits)]


def _qaoa_config(
    record: InstanceRecord,
    encoding: Encoding,
    mode: str,
    layers: int,
    penalty: float,
    compressor: Compressor | None,
    config: ExperimentConfig,
    epsilon: float = 0.0,
    trajectories: int = 1,
) -> QaoaConfig:
    objective, constraint, layout = encoding
    return QaoaConfig(
        ising=qubo_to_ising(assemble(objective, constraint, penalty)),
        layers=layers,
        mode=mode,
        compressor=compressor if mode == "cs" else None,
        groups=layout.groups,
        xy_scope=config.qaoa.xy_scope,
        epsilon=epsilon,
        trajectories=trajectories,
        seed=seed_for(config.seed, QAOA_STREAM, record.size, record.index, layers),
        n_starts=config.qaoa.n_starts,
        start_range=config.qaoa.start_range,
    )


def _powell(config: ExperimentConfig) -> PowellConfig:
    return PowellConfig(config.qaoa.ftol, config.qaoa.xtol, config.qaoa.max_iter)


def _solve(qaoa: QaoaConfig, record: InstanceRecord, config: ExperimentConfig) -> QaoaResult | None:
    try:
        return solve_qaoa(qaoa, record.oracle.optima, _powell(config), feasible_mask(record.instance))
    except FullyDiscardedError as e:
        logger.warning("%s", e)
        return None


def _with_penalty(qaoa: QaoaConfig, record: InstanceRecord, config: ExperimentConfig) -> tuple[float, QaoaResult | None]:
    """Result at ``penalty.fixed``, or at the tuned A* when no fixed value is set."""
    penalty = config.penalty
    if penalty.fixed is not None:
        return penalty.fixed, _solve(qaoa, record, config)
    return tune_penalty(
        record.instance,
        qaoa,
        penalty.precision,
        penalty.lower,
        penalty.upper,
        penalty.grid_points,
        _powell(config),
        record.oracle.optima,
    )


def _initial_penalty(config: ExperimentConfig) -> float:
    return config.penalty.fixed if config.penalty.fixed is not None else config.penalty.lower


def qaoa_task(config: ExperimentConfig, record: InstanceRecord, mode_label: str, layers: int) -> dict[str, Any]:
    """One (instance, mode, p) point; CS variational modes report the median over compressors."""
    mode, variant = parse_mode(mode_label)
    encoding = encode(record.instance)
    compressors: list[Compressor | None] = list(build_compressors(record, variant, config)) if mode == "cs" else [None]
    penalties, results = [], []
    for compressor in compressors:
        qaoa = _qaoa_config(record, encoding, mode, layers, _initial_penalty(config), compressor, config)
        penalty, result = _with_penalty(qaoa, record, config)
        penalties.append(penalty)
        results.append(result)

    p_sucs = np.array([r.p_suc if r is not None else 0.0 for r in results])
    p_dis = np.array([r.p_dis if r is not None else 1.0 for r in results])
    energies = [r.energy for r in results if r is not None]
    masses = [r.infeasible_mass for r in results if r is not None and r.infeasible_mass is not None]
    logger.info(
        "%s size=%d #%d mode=%s p=%d: p_suc=%.4f",
        record.problem, record.size, record.index, mode_label, layers, float(np.median(p_sucs)),
    )
    return {
        "problem": record.problem,
        "size": record.size,
        "instance": record.index,
        "instance_seed": record.seed,
        "mode": mode_label,
        "p": layers,
        "penalty": float(np.mean(penalties)),
        "p_suc": float(np.median(p_sucs)),
        "p_suc_std": float(np.std(p_sucs)),
        "p_dis": float(np.median(p_dis)),
        "energy": float(np.median(energies)) if energies else None,
        "infeasible_mass": float(np.median(masses)) if masses else None,
        "n_compressors": len(compressors) if mode == "cs" else 0,
    }


def noise_task(config: ExperimentConfig, record: InstanceRecord, mode_label: str, layers: int) -> list[dict[str, Any]]:
    """Penalty tuned on the coherent run, then reused for every gate error rate.

    ``n_two`` (two-qubit noise positions per layer) is only set for runs that
    project qubits, the ones whose discard rate the estimate describes.
    """
    mode, variant = parse_mode(mode_label)
    encoding = encode(record.instance)
    compressor = build_compressors(record, variant, config, form="gate")[0] if mode == "cs" else None
    coherent = _qaoa_config(record, encoding, mode, layers, _initial_penalty(config), compressor, config)
    penalty, _ = _with_penalty(coherent, record, config)
    n_two = None
    if compressor is not None and compressor.discard:
        n_two = layer_two_qubit_gates(_qaoa_config(record, encoding, mode, layers, penalty, compressor, config))
    rows = []
    for epsilon in config.noise.epsilons:
        trajectories = config.noise.trajectories if epsilon > 0.0 else 1
        qaoa = _qaoa_config(record, encoding, mode, layers, penalty, compressor, config, epsilon, trajectories)
        result = _solve(qaoa, record, config)
        p_suc = result.p_suc if result is not None else 0.0
        p_dis = result.p_dis if result is not None else 1.0
        rows.append(
            {
                "problem": record.problem,
                "size": record.size,
                "instance": record.index,
                "instance_seed": record.seed,
                "mode": mode_label,
                "p": layers,
                "epsilon": epsilon,
                "trajectories": trajectories,
                "penalty": penalty,
                "p_suc": p_suc,
                "p_dis": p_dis,
                "normalized": p_suc / (1.0 - p_dis) if p_dis < 1.0 else 0.0,
                "n_two": n_two,
                "p_dis_estimate": None,
            }
        )
        logger.info("%s #%d mode=%s p=%d eps=%g: p_suc=%.4f p_dis=%.4f", record.problem, record.index, mode_label, layers, epsilon, p_suc, p_dis)
    return rows


def fit_discard_estimates(rows: Sequence[dict[str, Any]]) -> float | None:
    """Fit the discard constant over noisy projecting rows and fill ``p_dis_estimate``.

    Returns None, leaving the estimates empty, when no row carries signal.
    """
    samples = [(r["epsilon"], r["n_two"], r["p"], r["p_dis"]) for r in rows if r["n_two"] is not None and r["epsilon"] > 0.0]
    try:
        constant = fit_discard_constant(samples)
    except ValueError:
        logger.debug("No noisy projecting rows; discard constant not fitted")
        return None
    for row in rows:
        if row["n_two"] is not None:
            row["p_dis_estimate"] = estimate_discard_rate(row["n_two"], row["epsilon"], row["p"], constant)
    logger.info("Fitted discard constant C=%.4f over %d rows", constant, len(samples))
    return constant


def fluctuation_task(config: ExperimentConfig, record: InstanceRecord, mode_label: str, layers: int) -> dict[str, Any]:
    """Energy spread over random angles at penalty ``penalty.fixed`` (default ``penalty.upper``)."""
    mode, variant = parse_mode(mode_label)
    encoding = encode(record.instance)
    compressor = build_compressors(record, variant, config)[0] if mode == "cs" else None
    penalty = config.penalty.fixed if config.penalty.fixed is not None else config.penalty.upper
    qaoa = _qaoa_config(record, encoding, mode, layers, penalty, compressor, config)
    rng = np.random.default_rng([config.seed, FLUCTUATION_STREAM, record.size, record.index, layers])
    fluctuation = energy_fluctuation(qaoa, config.fluctuation.samples, rng)
    return {
        "problem": record.problem,
        "size": record.size,
        "instance": record.index,
        "instance_seed": record.seed,
        "mode": mode_label,
        "p": layers,
        "penalty": penalty,
        "delta_e": fluctuation.delta_e,
        "e_ave": fluctuation.e_ave,
        "ratio": fluctuation.ratio,
    }


def run_tasks(
    task: Callable[..., Any],
    config: ExperimentConfig,
    points: Sequence[tuple[InstanceRecord, str, int]],
    jobs: int = 1,
) -> list[Any]:
    """Run ``task(config, *point)`` for every point, in submission order."""
    if jobs < 1:
        raise ValueError(f"--jobs must be >= 1, got {jobs}")
    if jobs == 1 or len(points) <= 1:
        return [task(config, r, m, p) for r, m, p in points]
    records, modes, layers = (list(column) for column in zip(*points))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(task, [config] * len(points), records, modes, layers))


def _points(config: ExperimentConfig, records: Sequence[InstanceRecord]) -> list[tuple[InstanceRecord, str, int]]:
    return [(r, mode, p) for r in records for mode in config.qaoa.modes for p in config.qaoa.layers]


def summarize(
    rows: Sequence[dict[str, Any]],
    keys: Sequence[str],
    metrics: dict[str, tuple[str, str]],
) -> list[dict[str, Any]]:
    """Group rows by ``keys`` (first-seen order) and reduce ``metrics``.

    ``metrics`` maps an output column to (source column, "mean" | "std").
    """
    groups: dict[tuple[Any, ...], list[dict[str, Any]]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    summary = []
    for key, members in groups.items():
        out: dict[str, Any] = dict(zip(keys, key))
        out["n_instances"] = len(members)
        for name, (source, reduction) in metrics.items():
            values = np.array([m[source] for m in members if m[source] is not None], dtype=np.float64)
            if values.size == 0:
                out[name] = None
            else:
                out[name] = float(np.mean(values) if reduction == "mean" else np.std(values))
        summary.append(out)
    return summary


def run_qaoa_suite(config: ExperimentConfig, jobs: int = 1) -> SuiteResult:
    start = time.perf_counter()
    records = build_instances(config)
    rows = run_tasks(qaoa_task, config, _points(config, records), jobs)
    summary = summarize(
        rows,
        ["problem", "size", "mode", "p"],
        {
            "penalty_mean": ("penalty", "mean"),
            "p_suc_mean": ("p_suc", "mean"),
            "p_suc_std": ("p_suc", "std"),
            "p_dis_mean": ("p_dis", "mean"),
            "compressor_std_mean": ("p_suc_std", "mean"),
        },
    )
    return SuiteResult("run_qaoa", QAOA_COLUMNS, rows, QAOA_SUMMARY, summary, time.perf_counter() - start)


def run_noise_suite(config: ExperimentConfig, jobs: int = 1) -> SuiteResult:
    start = time.perf_counter()
    records = build_instances(config)
    nested = run_tasks(noise_task, config, _points(config, records), jobs)
    rows = [row for chunk in nested for row in chunk]
    constant = fit_discard_estimates(rows)
    summary = summarize(
        rows,
        ["problem", "size", "mode", "p", "epsilon"],
        {
            "p_suc_mean": ("p_suc", "mean"),
            "p_suc_std": ("p_suc", "std"),
            "p_dis_mean": ("p_dis", "mean"),
            "normalized_mean": ("normalized", "mean"),
            "normalized_std": ("normalized", "std"),
            "p_dis_estimate_mean": ("p_dis_estimate", "mean"),
        },
    )
    return SuiteResult(
        "sweep_noise",
        NOISE_COLUMNS,
        rows,
        NOISE_SUMMARY,
        summary,
        time.perf_counter() - start,
        {"discard_constant": constant},
    )


def run_fluctuation_suite(config: ExperimentConfig, jobs: int = 1) -> SuiteResult:
    start = time.perf_counter()
    records = build_instances(config)
    rows = run_tasks(fluctuation_task, config, _points(config, records), jobs)
    summary = summarize(
        rows,
        ["problem", "size", "mode", "p"],
        {
            "delta_e_mean": ("delta_e", "mean"),
            "delta_e_std": ("delta_e", "std"),
            "e_ave_mean": ("e_ave", "mean"),
        },
    )
    return SuiteResult(
        "fluctuation", FLUCTUATION_COLUMNS, rows, FLUCTUATION_SUMMARY, summary, time.perf_counter() - start
    )


def train_compressors(config: ExperimentConfig, database: CompressorDatabase) -> tuple[SuiteResult, list[CompressorRecord]]:
    """Train every configured target and append the records to ``database``."""
    section = config.compressor
    if not section.targets:
        raise ConfigError("Config key 'compressor.targets' must list at least one constraint to train")
    start = time.perf_counter()
    budget = training_budget(section)
    new_records = []
    for index, target in enumerate(section.targets):
        spec = target.constraint()
        rng = np.random.default_rng([config.seed, TRAINING_STREAM, index])
        hcs = build_hcs(spec, rng, n_qubits=target.n)
        result = train_with_escalation(hcs, budget, rng, m=target.m)
        record = record_from_training(spec, result, {**budget.describe(), "attempts": result.attempts})
        database.add(record)
        new_records.append(record)
        logger.info("Trained %s n=%d m=%d: p_sur=%.4f%s", spec.kind, record.n, record.m, record.p_sur, " (failed)" if record.failed else "")
    rows = [
        {
            "kind": r.constraint["kind"],
            "n": r.n,
            "m": r.m,
            "ansatz": r.ansatz,
            "layers": r.layers,
            "p_sur": r.p_sur,
            "fs_ratio_original": r.fs_ratio_original,
            "fs_ratio_compressed": r.fs_ratio_compressed,
            "failed": r.failed,
        }
        for r in new_records
    ]
    suite = SuiteResult("train_compressor", TRAINING_COLUMNS, rows, [], [], time.perf_counter() - start)
    return suite, new_records


def _plot_rows(rows: Iterable[dict[str, str]]) -> list[dict[str, Any]]:
    out = []
    for row in rows:
        if "epsilon" in row:
            series = f"{row['problem']}-{row['size']}-{row['mode']}-p{row['p']}"
            out.append({"figure": "noise", "series": f"{series}:p_suc", "x": row["epsilon"], "y": row["p_suc_mean"], "yerr": row["p_suc_std"]})
            out.append({"figure": "noise", "series": f"{series}:normalized", "x": row["epsilon"], "y": row["normalized_mean"], "yerr": row["normalized_std"]})
            out.append({"figure": "noise", "series": f"{series}:p_dis", "x": row["epsilon"], "y": row["p_dis_mean"], "yerr": ""})
            if row.get("p_dis_estimate_mean"):
                out.append({"figure": "noise", "series": f"{series}:p_dis_estimate", "x": row["epsilon"], "y": row["p_dis_estimate_mean"], "yerr": ""})
        elif "delta_e_mean" in row:
            out.append({"figure": "fluctuation", "series": f"{row['problem']}-{row['mode']}-p{row['p']}", "x": row["size"], "y": row["delta_e_mean"], "yerr": row["delta_e_std"]})
        elif "p_suc_mean" in row:
            out.append({"figure": "success", "series": f"{row['problem']}-{row['size']}-{row['mode']}", "x": row["p"], "y": row["p_suc_mean"], "yerr": row["p_suc_std"]})
        else:
            raise ValueError(f"Unrecognized summary row with columns {', '.join(row)}")
    return out


def build_report(inputs: Sequence[Path]) -> SuiteResult:
    """Merge summary CSVs into long-format (figure, series, x, y, yerr) rows."""
    start = time.perf_counter()
    rows: list[dict[str, Any]] = []
    for path in inputs:
        if not path.exists():
            raise FileNotFoundError(f"Report input not found: {path}")
        with open(path, newline="", encoding="utf-8") as f:
            rows += _plot_rows(csv.DictReader(f))
    return SuiteResult("plot_data", PLOT_COLUMNS, rows, [], [], time.perf_counter() - start, {"inputs": [str(p) for p in inputs]})


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict[str, Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def protocol_constants(config: ExperimentConfig) -> dict[str, Any]:
    return {
        "powell": {"ftol": config.qaoa.ftol, "xtol": config.qaoa.xtol, "max_iter": config.qaoa.max_iter},
        "n_starts": config.qaoa.n_starts,
        "sa_schedule": "geometric",
        "cnots_per_cswap": 8,
        "cnots_per_toffoli": 6,
        "penalty_scan": "grid refined around the best A until the bracket is within precision; ties to the smaller A",
        "compressor_reuse": "configured database, then bundled records, for constraints on qubits no earlier stage touched",
        "discard_estimate": "p_dis ~ 1 - exp(-C epsilon p n_two), C fitted by least squares over noisy projecting rows",
    }


def write_suite(suite: SuiteResult, config: ExperimentConfig, out_dir: Path) -> list[Path]:
    """CSV body plus ``<name>.meta.json``; a summary CSV when the suite has one."""
    written = []
    body = out_dir / f"{suite.name}.csv"
    write_csv(body, suite.columns, suite.rows)
    written.append(body)
    if suite.summary_columns:
        summary = out_dir / f"{suite.name}_summary.csv"
        write_csv(summary, suite.summary_columns, suite.summary)
        written.append(summary)
    meta = {
        "config": config.to_dict(),
        "config_hash": config.hash,
        "seed": config.seed,
        "version": __version__,
        "wall_time": suite.wall_time,
        "protocol": protocol_constants(config),
        **suite.extra,
    }
    meta_path = out_dir / f"{suite.name}.meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(meta_path)
    return written
