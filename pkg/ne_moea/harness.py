from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from loguru import logger
from typing import Sequence
import csv
import io
import os
import time
import numpy as np

from ne_moea.core import RandomSource
from ne_moea.algorithms import AlgorithmConfig, AlgorithmId, run
from ne_moea.experiment import ExperimentConfig, problem_name
from ne_moea.indicators import NormalizationSpec, hypervolume_2d, normalize
from ne_moea.problems import Problem, write_instance
from ne_moea.stats import SummaryRow, summarize

CSV_COLUMNS = (
    "problem",
    "algorithm",
    "run",
    "seed",
    "hypervolume",
    "evaluations",
    "archive_path",
    "population_path",
    "wall_ms",
)
SUMMARY_COLUMNS = (
    "problem", "algorithm", "runs", "mean", "sd", "p_value", "significant", "best", "reversed"
)
BASELINE = str(AlgorithmId.NE_MOEA)
REVERSAL_TOLERANCE = 0.005


class ResultsParseError(ValueError):
    """Raised for malformed results CSVs and front dumps.

    Args:
        message: Description of the problem.
        row: 1-based row (CSV, header included) or line (dump) number.
    """

    def __init__(self, message: str, row: int) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class RunRecord:
    """One row of the results CSV.

    Attributes:
        problem: Problem identifier.
        algorithm: Algorithm identifier.
        run: Run index within the (problem, algorithm) cell.
        seed: 64-bit seed of the run's random stream.
        hypervolume: Normalized archive hypervolume.
        evaluations: Evaluations consumed, N * (G + 1).
        archive_path: Archive dump, relative to the CSV directory.
        population_path: Final population dump, relative to the CSV directory.
        wall_ms: Wall time of the run; not covered by reproducibility.
    """

    problem: str
    algorithm: str
    run: int
    seed: int
    hypervolume: float
    evaluations: int
    archive_path: str
    population_path: str
    wall_ms: int


def write_front(path: str, objectives: np.ndarray) -> None:
    """Writes objective vectors as a front dump.

    The first line is `# m=<m> count=<count>`, then one vector per line,
    components space-separated at full precision.
    """
    objectives = np.asarray(objectives, dtype=float)
    count = objectives.shape[0]
    m = objectives.shape[1] if objectives.ndim == 2 else 0
    lines = [f"# m={m} count={count}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in objectives]
    with open(path, "w") as file:
        file.write("\n".join(lines) + "\n")


def read_front(path: str) -> np.ndarray:
    """Reads a front dump written by write_front.

    Returns:
        (count, m) array of objective vectors.

    Raises:
        ResultsParseError if the header or a vector is malformed.
    """
    with open(path, "r") as file:
        lines = file.read().splitlines()
    if not lines:
        raise ResultsParseError(f"'{path}' is empty, missing header", 1)
    fields = dict(
        item.partition("=")[::2] for item in lines[0].lstrip("#").split() if "=" in item
    )
    try:
        m, count = int(fields["m"]), int(fields["count"])
    except (KeyError, ValueError):
        raise ResultsParseError(f"malformed header '{lines[0]}' in '{path}'", 1) from None
    body = [(number, line) for number, line in enumerate(lines[1:], start=2) if line.strip()]
    if len(body) != count:
        raise ResultsParseError(
            f"'{path}' announces {count} vectors but holds {len(body)}", len(lines)
        )
    points = np.zeros((count, m))
    for i, (number, line) in enumerate(body):
        try:
            values = [float(v) for v in line.split()]
        except ValueError:
            raise ResultsParseError(f"non-numeric vector '{line}' in '{path}'", number) from None
        if len(values) != m:
            raise ResultsParseError(f"expected {m} components in '{path}'", number)
        points[i] = values
    return points


@dataclass(frozen=True)
class _Job:
    problem_index: int
    algorithm_index: int
    run: int
    problem: str
    instance: Problem
    config: AlgorithmConfig
    seed: int
    output: str


@dataclass(frozen=True)
class _Outcome:
    job: _Job
    archive: np.ndarray
    evaluations: int
    archive_path: str
    population_path: str
    wall_ms: int


def _slug(label: str) -> str:
    return label.lower().replace("-", "")


def _execute(job: _Job) -> _Outcome:
    """Runs one job and writes its dumps; executed in worker processes."""
    start = time.perf_counter()
    result = run(job.instance, job.config, RandomSource(job.seed))
    wall_ms = int(round((time.perf_counter() - start) * 1000))
    stem = os.path.join("fronts", f"{job.problem}_{_slug(str(job.config.algorithm))}_run{job.run:02d}")
    archive_path = f"{stem}_archive.txt"
    population_path = f"{stem}_population.txt"
    write_front(os.path.join(job.output, archive_path), result.archive.objectives)
    write_front(os.path.join(job.output, population_path), result.population.objectives)
    logger.info(
        f"Finished run {job.run} of {job.config.algorithm} on {job.problem}: "
        f"archive size {len(result.archive)}, {result.evaluations} evaluations, {wall_ms} ms"
    )
    return _Outcome(
        job=job,
        archive=result.archive.objectives,
        evaluations=result.evaluations,
        archive_path=archive_path,
        population_path=population_path,
        wall_ms=wall_ms,
    )


def run_seed(master_seed: int, problem_index: int, algorithm_index: int, run_index: int) -> int:
    """Seed of one run, a pure function of its position in the experiment."""
    return RandomSource(master_seed).fork([problem_index, algorithm_index, run_index]).derive_seed()


def _normalization(instance: Problem, archives: Sequence[np.ndarray]) -> NormalizationSpec:
    """NK objectives are scored raw, knapsack ones by the union maxima."""
    if instance.family == "nk":
        return NormalizationSpec.identity(instance.m)
    return NormalizationSpec.from_maxima(archives)


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    """Executes every (problem, algorithm, run) of an experiment.

    Instances are built (or read) before any run starts. Runs execute
    serially or in `config.workers` processes; the resulting rows do not
    depend on the scheduling. The results CSV, the instance files and the
    per-run dumps are written below `config.output`.

    Args:
        config: The validated experiment.

    Returns:
        The records, sorted by (problem, algorithm, run) position.
    """
    os.makedirs(os.path.join(config.output, "fronts"), exist_ok=True)
    os.makedirs(os.path.join(config.output, "instances"), exist_ok=True)
    instances = []
    for spec in config.problems:
        instance = spec.build()
        write_instance(
            instance, os.path.join(config.output, "instances", f"{problem_name(spec)}.txt")
        )
        instances.append(instance)

    jobs = [
        _Job(
            problem_index=p,
            algorithm_index=a,
            run=r,
            problem=problem_name(spec),
            instance=instances[p],
            config=algorithm,
            seed=run_seed(config.master_seed, p, a, r),
            output=config.output,
        )
        for p, spec in enumerate(config.problems)
        for a, algorithm in enumerate(config.algorithms)
        for r in range(config.runs)
    ]
    logger.info(
        f"Starting {len(jobs)} runs ({len(config.problems)} problems x "
        f"{len(config.algorithms)} algorithms x {config.runs} runs) with "
        f"{config.workers} worker(s), {config.evaluations_per_run} evaluations each"
    )
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            outcomes = list(executor.map(_execute, jobs))
    else:
        outcomes = [_execute(job) for job in jobs]
    outcomes.sort(key=lambda o: (o.job.problem_index, o.job.algorithm_index, o.job.run))

    records = []
    for p, instance in enumerate(instances):
        cell = [o for o in outcomes if o.job.problem_index == p]
        spec = _normalization(instance, [o.archive for o in cell])
        logger.debug(f"Normalization of {problem_name(config.problems[p])}: {spec.scales}")
        for outcome in cell:
            job = outcome.job
            if instance.m == 2:
                hypervolume = hypervolume_2d(
                    normalize(outcome.archive, spec), job.config.reference_point
                )
            else:
                hypervolume = float("nan")
            records.append(
                RunRecord(
                    problem=job.problem,
                    algorithm=str(job.config.algorithm),
                    run=job.run,
                    seed=job.seed,
                    hypervolume=hypervolume,
                    evaluations=outcome.evaluations,
                    archive_path=outcome.archive_path,
                    population_path=outcome.population_path,
                    wall_ms=outcome.wall_ms,
                )
            )
    write_results(records, os.path.join(config.output, "results.csv"))
    return records


def write_results(records: Sequence[RunRecord], path: str) -> None:
    """Writes the results CSV, one row per run."""
    with open(path, "w", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            row = asdict(record)
            row["hypervolume"] = repr(float(record.hypervolume))
            writer.writerow([row[column] for column in CSV_COLUMNS])
    logger.info(f"Wrote {len(records)} run records to '{path}'")


def read_results(path: str) -> list[RunRecord]:
    """Reads a results CSV written by write_results.

    Raises:
        ResultsParseError naming the offending row.
    """
    with open(path, "r", newline="") as file:
        rows = list(csv.reader(file))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ResultsParseError(f"expected header {','.join(CSV_COLUMNS)}", 1)
    records = []
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise ResultsParseError(
                f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", number
            )
        values = dict(zip(CSV_COLUMNS, row))
        try:
            record = RunRecord(
                problem=values["problem"],
                algorithm=values["algorithm"],
                run=int(values["run"]),
                seed=int(values["seed"]),
                hypervolume=float(values["hypervolume"]),
                evaluations=int(values["evaluations"]),
                archive_path=values["archive_path"],
                population_path=values["population_path"],
                wall_ms=int(values["wall_ms"]),
            )
        except ValueError as e:
            raise ResultsParseError(f"invalid value ({e})", number) from None
        if not np.isfinite(record.hypervolume):
            raise ResultsParseError("hypervolume is not finite", number)
        records.append(record)
    return records


def _algorithm_order(labels: Sequence[str]) -> list[str]:
    known = [str(a) for a in AlgorithmId if str(a) in labels]
    return known + [label for label in labels if label not in known]


def reversed_problems(
    rows: Sequence[SummaryRow], baseline: str = BASELINE, tolerance: float = REVERSAL_TOLERANCE
) -> set[str]:
    """Problems where another algorithm's mean beats the baseline's by more
    than `tolerance`."""
    flagged = set()
    means = {(r.problem, r.algorithm): r.mean for r in rows}
    for row in rows:
        reference = means.get((row.problem, baseline))
        if reference is not None and row.algorithm != baseline and row.mean > reference + tolerance:
            flagged.add(row.problem)
    return flagged


def render_table(
    rows: Sequence[SummaryRow], baseline: str = BASELINE, tolerance: float = REVERSAL_TOLERANCE
) -> str:
    """Aligned text table, one line per problem and one column per algorithm.

    Cells read `mean (sd)`; `*` marks the best mean of a problem, `†` a
    significant difference to the baseline, and `!` after a problem name an
    algorithm beating the baseline by more than the tolerance.
    """
    problems = list(dict.fromkeys(r.problem for r in rows))
    algorithms = _algorithm_order(list(dict.fromkeys(r.algorithm for r in rows)))
    cells = {(r.problem, r.algorithm): r for r in rows}
    flagged = reversed_problems(rows, baseline, tolerance)
    table = [["Problems"] + algorithms]
    for problem in problems:
        line = [problem + (" !" if problem in flagged else "")]
        for algorithm in algorithms:
            row = cells.get((problem, algorithm))
            if row is None:
                line.append("-")
                continue
            text = f"{'*' if row.best else ''}{row.mean:.4e} ({row.sd:.2e})"
            line.append(text + ("†" if row.significant else ""))
        table.append(line)
    widths = [max(len(line[i]) for line in table) for i in range(len(table[0]))]
    rendered = [
        " | ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip()
        for line in table
    ]
    rendered.insert(1, "-+-".join("-" * width for width in widths))
    rendered += [
        "",
        "* best mean of the problem",
        f"† significantly different from {baseline} (Wilcoxon rank-sum, 95%)",
        f"! another algorithm's mean exceeds {baseline}'s by more than {tolerance}",
    ]
    return "\n".join(rendered) + "\n"


def render_summary_csv(
    rows: Sequence[SummaryRow], baseline: str = BASELINE, tolerance: float = REVERSAL_TOLERANCE
) -> str:
    """The summary as CSV, one row per (problem, algorithm)."""
    flagged = reversed_problems(rows, baseline, tolerance)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([
            row.problem,
            row.algorithm,
            row.runs,
            repr(row.mean),
            repr(row.sd),
            "" if row.pvalue is None else repr(row.pvalue),
            int(row.significant),
            int(row.best),
            int(row.problem in flagged),
        ])
    return buffer.getvalue()


def report(
    records: Sequence[RunRecord],
    output: str,
    baseline: str = BASELINE,
    tolerance: float = REVERSAL_TOLERANCE,
) -> str:
    """Summarizes records and writes summary.txt and summary.csv to `output`.

    Returns:
        The rendered text table.
    """
    rows = summarize(records, baseline=baseline)
    for problem in sorted(reversed_problems(rows, baseline, tolerance)):
        logger.warning(
            f"On {problem} another algorithm beats {baseline} by more than {tolerance}"
        )
    text = render_table(rows, baseline, tolerance)
    os.makedirs(output, exist_ok=True)
    with open(os.path.join(output, "summary.txt"), "w") as file:
        file.write(text)
    with open(os.path.join(output, "summary.csv"), "w", newline="") as file:
        file.write(render_summary_csv(rows, baseline, tolerance))
    logger.info(f"Wrote summary of {len(rows)} cells to '{output}'")
    return text
