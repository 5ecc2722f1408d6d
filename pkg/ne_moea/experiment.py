from __future__ import annotations
from dataclasses import dataclass, field, replace
from importlib.resources import files
from loguru import logger
from typing import Any
import os
import yaml

from ne_moea.core import ConfigError, RandomSource
from ne_moea.algorithms import AlgorithmConfig, AlgorithmId
from ne_moea.problems import (
    InstanceParseError,
    KnapsackInstance,
    NKInstance,
    Problem,
    read_instance,
)

PRESETS = ("desk", "paper")
FAMILIES = ("kp", "nk")

_SECTIONS = {
    "experiment": {"runs", "master_seed", "output", "workers", "reference_point"},
    "budget": {"population_size", "generations"},
    "variation": {
        "tournament_size",
        "crossover_rate",
        "mutation_rate",
        "mutation_delta",
        "reference_directions",
        "repair_genomes",
    },
    "algorithms": None,
    "overrides": None,
    "problems": None,
}
_PROBLEM_KEYS = {"family", "n", "k", "m", "seed", "file", "name"}


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark instance of an experiment.

    Attributes:
        family: 'kp' or 'nk'.
        n: Genome length.
        m: Number of objectives.
        k: Epistasis degree (NK only).
        seed: Instance generation seed.
        file: Instance file, used instead of generation when set.
        name: Identifier in results; derived from the parameters if empty.
    """

    family: str
    n: int = 0
    m: int = 2
    k: int | None = None
    seed: int = 0
    file: str | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"Unknown problem family '{self.family}', expected kp or nk")
        if self.file is not None:
            return
        if self.n < 1 or self.m < 2:
            raise ConfigError(f"Problem needs n >= 1 and m >= 2, got n={self.n}, m={self.m}")
        if self.family == "nk" and (self.k is None or not 0 <= self.k <= self.n - 1):
            raise ConfigError(f"NK problem needs 0 <= k <= n-1, got k={self.k}, n={self.n}")
        if self.family == "kp" and self.k is not None:
            raise ConfigError("Knapsack problems take no 'k'")

    def build(self) -> Problem:
        """Generates the instance, or reads it from `file`."""
        if self.file is not None:
            try:
                instance = read_instance(self.file)
            except (OSError, InstanceParseError) as e:
                raise ConfigError(f"Cannot resolve instance file '{self.file}': {e}") from e
            if instance.family != self.family:
                raise ConfigError(
                    f"Instance file '{self.file}' holds a '{instance.family}' problem, "
                    f"not '{self.family}'"
                )
            return instance
        rng = RandomSource(self.seed)
        if self.family == "kp":
            return KnapsackInstance.generate(self.n, self.m, rng)
        return NKInstance.generate(self.n, self.k, self.m, rng)  # type: ignore


@dataclass(frozen=True)
class ExperimentConfig:
    """A full experiment: problems x algorithms x runs.

    All algorithms share one budget section, so every algorithm consumes
    the same number of evaluations.

    Attributes:
        problems: Instances, in report order.
        algorithms: Per-algorithm configurations, in report order.
        runs: Independent runs R per (problem, algorithm).
        master_seed: Seed all run seeds are forked from.
        output: Output directory.
        workers: Number of worker processes.
    """

    problems: list[ProblemSpec]
    algorithms: list[AlgorithmConfig]
    runs: int = 10
    master_seed: int = 0
    output: str = "results"
    workers: int = 1
    source: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ConfigError(f"At least one run is required, got {self.runs}")
        if self.workers < 1:
            raise ConfigError(f"At least one worker is required, got {self.workers}")
        if not self.problems:
            raise ConfigError("No problems configured")
        if not self.algorithms:
            raise ConfigError("No algorithms configured")
        budgets = {(a.population_size, a.generations) for a in self.algorithms}
        if len(budgets) != 1:
            raise ConfigError(f"Algorithms must share N and G, got {sorted(budgets)}")
        ids = [a.algorithm for a in self.algorithms]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"Duplicate algorithms in {[str(i) for i in ids]}")
        names = [problem_name(p) for p in self.problems]
        if len(set(names)) != len(names):
            raise ConfigError(f"Duplicate problem names in {names}")

    @property
    def evaluations_per_run(self) -> int:
        """N * (G + 1), identical for every algorithm."""
        first = self.algorithms[0]
        return first.population_size * (first.generations + 1)

    @property
    def offspring_evaluations_per_run(self) -> int:
        first = self.algorithms[0]
        return first.population_size * first.generations

    def with_overrides(
        self, output: str | None = None, workers: int | None = None, seed: int | None = None
    ) -> ExperimentConfig:
        """Returns a copy with command-line overrides applied."""
        changes: dict[str, Any] = {}
        if output is not None:
            changes["output"] = output
        if workers is not None:
            changes["workers"] = workers
        if seed is not None:
            changes["master_seed"] = seed
        return replace(self, **changes)


def problem_name(spec: ProblemSpec) -> str:
    """Identifier of a problem in results and file names."""
    if spec.name:
        return spec.name
    if spec.file is not None:
        return os.path.splitext(os.path.basename(spec.file))[0]
    parts = [spec.family, f"n{spec.n}"]
    if spec.k is not None:
        parts.append(f"k{spec.k}")
    if spec.m != 2:
        parts.append(f"m{spec.m}")
    return "_".join(parts)


def _check_keys(section: str, values: dict, allowed: set[str]) -> None:
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(f"Unknown key(s) {sorted(unknown)} in section '{section}'")


def _section(raw: dict, name: str, kind: type) -> Any:
    value = raw.get(name, kind())
    if value is None:
        value = kind()
    if not isinstance(value, kind):
        raise ConfigError(f"Section '{name}' must be a {kind.__name__}")
    return value


def parse_config(raw: Any, source: str = "") -> ExperimentConfig:
    """Validates a decoded YAML document and builds the ExperimentConfig.

    Args:
        raw: The decoded document.
        source: Where the document came from, for messages.

    Returns:
        The validated configuration.

    Raises:
        ConfigError on unknown keys, invalid values, or budget overrides.
    """
    if not isinstance(raw, dict):
        raise ConfigError("The configuration must be a mapping of sections")
    _check_keys("<top level>", raw, set(_SECTIONS))
    experiment = _section(raw, "experiment", dict)
    budget = _section(raw, "budget", dict)
    variation = _section(raw, "variation", dict)
    overrides = _section(raw, "overrides", dict)
    for name in ("experiment", "budget", "variation"):
        _check_keys(name, _section(raw, name, dict), _SECTIONS[name])  # type: ignore
    if set(budget) != _SECTIONS["budget"]:
        raise ConfigError("Section 'budget' needs population_size and generations")

    algorithm_names = _section(raw, "algorithms", list)
    shared: dict[str, Any] = dict(budget)
    shared.update(variation)
    if "reference_point" in experiment:
        try:
            shared["reference_point"] = tuple(float(z) for z in experiment["reference_point"])
        except (TypeError, ValueError):
            raise ConfigError(
                f"reference_point must be a list of numbers, got {experiment['reference_point']!r}"
            ) from None
    algorithms = []
    for name in algorithm_names:
        extra = overrides.get(name) or {}
        if not isinstance(extra, dict):
            raise ConfigError(f"Overrides of '{name}' must be a mapping")
        if set(extra) & _SECTIONS["budget"]:
            raise ConfigError(
                f"'{name}' overrides {sorted(set(extra) & _SECTIONS['budget'])}; the "
                "budget is shared by all algorithms"
            )
        _check_keys(f"overrides.{name}", extra, _SECTIONS["variation"])  # type: ignore
        try:
            algorithms.append(AlgorithmConfig(algorithm=name, **{**shared, **extra}))
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid settings for '{name}': {e}") from None
    unknown = set(overrides) - set(algorithm_names)
    if unknown:
        raise ConfigError(f"Overrides for algorithms not in the list: {sorted(unknown)}")

    problems = []
    for entry in _section(raw, "problems", list):
        if not isinstance(entry, dict):
            raise ConfigError("Every problem must be a mapping")
        _check_keys("problems", entry, _PROBLEM_KEYS)
        try:
            problems.append(ProblemSpec(**entry))
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid problem {entry}: {e}") from None

    try:
        return ExperimentConfig(
            problems=problems,
            algorithms=algorithms,
            runs=int(experiment.get("runs", 10)),
            master_seed=int(experiment.get("master_seed", 0)),
            output=str(experiment.get("output", "results")),
            workers=int(experiment.get("workers", 1)),
            source=source,
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid 'experiment' section: {e}") from None


def load_config(path: str) -> ExperimentConfig:
    """Reads an experiment configuration file.

    Raises:
        ConfigError if the file is missing, not YAML, or invalid.
    """
    try:
        with open(path, "r") as file:
            raw = yaml.safe_load(file)
    except (OSError, yaml.YAMLError) as e:
        logger.error(f"Failed to load experiment config from '{path}'")
        raise ConfigError(f"Cannot read config '{path}': {e}") from e
    config = parse_config(raw, source=path)
    logger.info(f"Successfully loaded experiment config from '{path}'")
    return config


def load_preset(name: str) -> ExperimentConfig:
    """Reads one of the bundled presets, 'desk' or 'paper'."""
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}', expected one of {PRESETS}")
    text = files("ne_moea").joinpath("presets", f"{name}.yaml").read_text()
    return parse_config(yaml.safe_load(text), source=f"preset:{name}")
