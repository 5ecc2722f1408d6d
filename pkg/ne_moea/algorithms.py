from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from loguru import logger
from typing import Sequence
import math
import numpy as np

from ne_moea.core import (
    Archive,
    ConfigError,
    FrontPartition,
    Population,
    RandomSource,
    Solution,
    UnsupportedDimensionError,
    nondominated_sort,
)
from ne_moea.indicators import (
    REFERENCE_POINT,
    hypervolume_2d,
    hypervolume_contributions_2d,
)
from ne_moea.operators import (
    DEFAULT_DELTA,
    bitflip_mutate,
    threshold_mutation_rate,
    tournament_indices,
    uniform_crossover,
)
from ne_moea.problems import Problem


class AlgorithmId(str, Enum):
    """Supported optimizers, in the column order of the comparison report."""

    NSGA2 = "NSGA-II"
    SMS_EMOA = "SMS-EMOA"
    NSGA3 = "NSGA-III"
    NE_MOEA = "NE-MOEA"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AlgorithmConfig:
    """Parameters of one optimizer run.

    Attributes:
        algorithm: Which optimizer to run.
        population_size: N, constant across generations.
        generations: G, the only stop condition.
        tournament_size: k of NE-MOEA's mating selection.
        crossover_rate: Probability of uniform crossover per pair (baselines).
        mutation_rate: Per-bit flip probability; None selects the default,
            (1-delta)ln(k)/n for NE-MOEA and 1/n for the baselines.
        mutation_delta: delta of the threshold rate.
        reference_directions: NSGA-III direction budget, None means N.
        reference_point: Reference point of hypervolume computations.
        repair_genomes: Store repaired genomes in the population.
        validate_archive: Check archive invariants after every insert.
    """

    algorithm: AlgorithmId
    population_size: int
    generations: int
    tournament_size: int = 8
    crossover_rate: float = 0.9
    mutation_rate: float | None = None
    mutation_delta: float = DEFAULT_DELTA
    reference_directions: int | None = None
    reference_point: tuple[float, ...] = REFERENCE_POINT
    repair_genomes: bool = False
    validate_archive: bool = False

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "algorithm", AlgorithmId(self.algorithm))
        except ValueError:
            valid = ", ".join(a.value for a in AlgorithmId)
            raise ConfigError(
                f"Unknown algorithm '{self.algorithm}', expected one of: {valid}"
            ) from None
        object.__setattr__(
            self, "reference_point", tuple(float(v) for v in self.reference_point)
        )
        if self.population_size < 2:
            raise ConfigError(f"Population size must be at least 2, got {self.population_size}")
        if self.generations < 1:
            raise ConfigError(f"Generations must be at least 1, got {self.generations}")
        if not 0 <= self.crossover_rate <= 1:
            raise ConfigError(f"Crossover rate {self.crossover_rate} must lie in [0, 1]")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate < 1:
            raise ConfigError(f"Mutation rate {self.mutation_rate} must lie in [0, 1)")
        if self.algorithm is AlgorithmId.NE_MOEA:
            if not 1 <= self.tournament_size <= self.population_size:
                raise ConfigError(
                    f"Tournament size {self.tournament_size} must lie in "
                    f"[1, {self.population_size}]"
                )
            if self.mutation_rate is None and self.tournament_size < 2:
                raise ConfigError("The threshold mutation rate needs a tournament size >= 2")
        if self.reference_directions is not None and self.reference_directions < 1:
            raise ConfigError("At least one reference direction is required")

    def mutation(self, n: int) -> float:
        """Per-bit flip probability for genomes of length n."""
        if self.mutation_rate is not None:
            return self.mutation_rate
        if self.algorithm is AlgorithmId.NE_MOEA:
            return threshold_mutation_rate(self.tournament_size, n, self.mutation_delta)
        return 1.0 / n


@dataclass
class RunState:
    """Loop variables of a run.

    Attributes:
        population: Current population P_t.
        generation: Generation counter t.
        archive: All non-dominated solutions evaluated so far.
        evaluations: Number of evaluated genomes, N * (t + 1).
    """

    population: Population
    generation: int
    archive: Archive
    evaluations: int


@dataclass
class RunResult:
    """Outcome of one run.

    Attributes:
        algorithm: The optimizer that produced the result.
        archive: Final archive.
        population: Final population.
        hypervolume: Archive hypervolume w.r.t. the configured reference
            point, NaN for m != 2.
        evaluations: Total evaluations consumed.
    """

    algorithm: AlgorithmId
    archive: Archive
    population: Population
    hypervolume: float
    evaluations: int = field(default=0)


def _evaluate(
    problem: Problem, genomes: np.ndarray, config: AlgorithmConfig
) -> tuple[Population, Population]:
    """Evaluates genomes.

    Returns:
        (members, scored): members keep the stored genomes unless repair is
        written back; scored carries the genomes actually evaluated, which is
        what the archive keeps.
    """
    objectives, scored = problem.evaluate_many(genomes)
    stored = scored if config.repair_genomes else np.asarray(genomes, dtype=np.uint8)
    return Population(stored, objectives), Population(scored, objectives)


def crowding_distance(objectives: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance of the members of one front.

    Boundary solutions of every objective receive infinite distance; inner
    solutions add the normalized gap between their neighbors per objective.

    Args:
        objectives: (count, m) objective vectors of one front.

    Returns:
        Distance per member.
    """
    objectives = np.asarray(objectives, dtype=float)
    count, m = objectives.shape
    distance = np.zeros(count)
    if count <= 2:
        distance[:] = np.inf
        return distance
    for i in range(m):
        order = np.argsort(objectives[:, i], kind="stable")
        values = objectives[order, i]
        distance[order[0]] = distance[order[-1]] = np.inf
        span = values[-1] - values[0]
        if span > 0:
            distance[order[1:-1]] += (values[2:] - values[:-2]) / span
    return distance


def _per_front(objectives: np.ndarray, partition: FrontPartition, measure) -> np.ndarray:
    values = np.zeros(objectives.shape[0])
    for front in partition.fronts:
        values[front] = measure(objectives[front])
    return values


def _truncate_by_fronts(
    partition: FrontPartition, size: int
) -> tuple[list[int], np.ndarray | None]:
    """Fills whole fronts while they fit.

    Returns:
        (selected, split): the indices of the fully taken fronts and the
        front that has to be split, None if the fronts filled size exactly.
    """
    selected: list[int] = []
    for front in partition.fronts:
        if len(selected) + front.size <= size:
            selected.extend(int(i) for i in front)
            if len(selected) == size:
                return selected, None
        else:
            return selected, front
    return selected, None


def nsga2_update(parents: Population, offspring: Population) -> Population:
    """NSGA-II survival on the union of parents and offspring.

    Fronts are taken in rank order; the first front that does not fit is
    truncated by descending crowding distance, ties keeping the lower union
    index.

    Args:
        parents: Current population of size N.
        offspring: N offspring.

    Returns:
        The next population of size N.
    """
    union = parents.concat(offspring)
    size = parents.size
    partition = nondominated_sort(union.objectives)
    selected, split = _truncate_by_fronts(partition, size)
    if split is not None:
        distance = crowding_distance(union.objectives[split])
        order = np.argsort(-distance, kind="stable")
        selected.extend(int(i) for i in split[order[: size - len(selected)]])
    return union.take(np.sort(selected))


def _sms_emoa_survival(
    union: Population, ref: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Drops the least contributing member of the worst front.

    Returns:
        (keep, ranks): surviving union indices and their front ranks, which
        the removal leaves unchanged.
    """
    if union.objectives.shape[1] != 2:
        raise UnsupportedDimensionError(
            f"SMS-EMOA survival is implemented for m=2, got m={union.objectives.shape[1]}"
        )
    partition = nondominated_sort(union.objectives)
    worst = partition.fronts[-1]
    contributions = hypervolume_contributions_2d(union.objectives[worst], ref)
    # Among equal contributions the latest member goes, the offspring first
    loser = worst[worst.size - 1 - np.argmin(contributions[::-1])]
    keep = np.delete(np.arange(union.size), loser)
    return keep, partition.ranks[keep]


def sms_emoa_update(
    population: Population, offspring: Solution, ref: Sequence[float] = REFERENCE_POINT
) -> Population:
    """Steady-state SMS-EMOA survival of one offspring.

    Args:
        population: Current population of size N.
        offspring: One evaluated offspring.
        ref: Reference point of the contribution computation.

    Returns:
        The next population of size N.

    Raises:
        UnsupportedDimensionError for m != 2.
    """
    if offspring.objectives is None:
        raise ValueError("The offspring must be evaluated")
    union = population.concat(
        Population(offspring.genome[None, :], offspring.objectives[None, :])
    )
    keep, _ = _sms_emoa_survival(union, ref)
    return union.take(keep)


def das_dennis(m: int, divisions: int) -> np.ndarray:
    """Simplex-lattice directions with `divisions` steps per objective.

    Returns:
        (C(divisions+m-1, m-1), m) array whose rows sum to 1.
    """
    if m < 1 or divisions < 1:
        raise ConfigError(f"Simplex lattice needs m >= 1 and divisions >= 1, got {m}, {divisions}")
    slots = divisions + m - 1
    directions = []
    for bars in combinations(range(slots), m - 1):
        edges = (-1,) + bars + (slots,)
        directions.append([edges[i + 1] - edges[i] - 1 for i in range(m)])
    return np.array(directions, dtype=float) / divisions


def reference_directions(m: int, count: int) -> np.ndarray:
    """Largest simplex lattice with at most `count` directions."""
    divisions = 1
    while math.comb(divisions + m, m - 1) <= count:
        divisions += 1
    return das_dennis(m, divisions)


def associate(points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Associates normalized points with their closest reference direction.

    Args:
        points: (count, m) normalized objective vectors.
        directions: (D, m) reference directions.

    Returns:
        (index, distance): nearest direction per point and the perpendicular
        distance to its ray.
    """
    points = np.asarray(points, dtype=float)
    directions = np.asarray(directions, dtype=float)
    unit = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    projection = points @ unit.T
    # (count, D, m) residual of each point from its projection onto each ray
    residual = points[:, None, :] - projection[:, :, None] * unit[None, :, :]
    distances = np.linalg.norm(residual, axis=2)
    index = np.argmin(distances, axis=1)
    return index, distances[np.arange(points.shape[0]), index]


def _nsga3_normalize(costs: np.ndarray) -> np.ndarray:
    """Normalizes minimization costs by ideal point and intercepts."""
    m = costs.shape[1]
    translated = costs - costs.min(axis=0)
    weights = np.full((m, m), 1e-6)
    np.fill_diagonal(weights, 1.0)
    extremes = [int(np.argmin(np.max(translated / w, axis=1))) for w in weights]
    intercepts = None
    if len(set(extremes)) == m:
        try:
            plane = np.linalg.solve(translated[extremes], np.ones(m))
            if np.all(plane > 1e-12):
                intercepts = 1.0 / plane
        except np.linalg.LinAlgError:
            pass
    if intercepts is None or not np.all(np.isfinite(intercepts)):
        # Degenerate hyperplane, fall back to the nadir of the candidates
        intercepts = translated.max(axis=0)
    intercepts = np.where(intercepts > 1e-12, intercepts, 1.0)
    return translated / intercepts


def _niching(
    count: int,
    niche_counts: np.ndarray,
    index: np.ndarray,
    distance: np.ndarray,
    rng: RandomSource,
) -> np.ndarray:
    """Picks `count` candidates, least crowded directions first.

    Randomness is only drawn when a choice is actually ambiguous.
    """
    niche_counts = niche_counts.copy()
    open_niches = np.ones(niche_counts.shape[0], dtype=bool)
    taken = np.zeros(index.shape[0], dtype=bool)
    chosen: list[int] = []
    while len(chosen) < count:
        candidates = np.flatnonzero(open_niches)
        crowding = niche_counts[candidates]
        candidates = candidates[crowding == crowding.min()]
        niche = candidates[0] if candidates.size == 1 else candidates[rng.integers(0, candidates.size)]
        members = np.flatnonzero((index == niche) & ~taken)
        if members.size == 0:
            open_niches[niche] = False
            continue
        if niche_counts[niche] == 0:
            pick = members[np.argmin(distance[members])]
        elif members.size == 1:
            pick = members[0]
        else:
            pick = members[rng.integers(0, members.size)]
        taken[pick] = True
        chosen.append(int(pick))
        niche_counts[niche] += 1
    return np.array(chosen, dtype=np.int64)


def nsga3_update(
    parents: Population,
    offspring: Population,
    directions: np.ndarray,
    rng: RandomSource,
) -> Population:
    """NSGA-III survival on the union of parents and offspring.

    Whole fronts are taken while they fit; the split front is resolved by
    reference-direction niching on objectives normalized by the ideal point
    and the extreme-point intercepts.

    Args:
        parents: Current population of size N.
        offspring: N offspring.
        directions: Simplex-lattice reference directions.
        rng: Source of randomness for niching ties.

    Returns:
        The next population of size N.
    """
    union = parents.concat(offspring)
    size = parents.size
    partition = nondominated_sort(union.objectives)
    selected, split = _truncate_by_fronts(partition, size)
    if split is None:
        return union.take(np.sort(selected))
    candidates = np.concatenate([np.array(selected, dtype=np.int64), split])
    # Niching works on minimization costs
    normalized = _nsga3_normalize(-union.objectives[candidates])
    index, distance = associate(normalized, directions)
    niche_counts = np.bincount(index[: len(selected)], minlength=directions.shape[0])
    chosen = _niching(
        size - len(selected),
        niche_counts,
        index[len(selected):],
        distance[len(selected):],
        rng,
    )
    return union.take(np.sort(np.concatenate([candidates[: len(selected)], split[chosen]])))


def elitist_reproduce(
    population: Population,
    partition: FrontPartition,
    config: AlgorithmConfig,
    rng: RandomSource,
    secondary: np.ndarray | None = None,
    count: int | None = None,
) -> np.ndarray:
    """Offspring genomes of the elitist baselines.

    Parents are picked in pairs by binary tournament on (rank, secondary),
    crossed by uniform crossover with probability pc and mutated bit-wise.

    Args:
        population: Current population.
        partition: Its non-dominated sorting.
        config: Rates of the run.
        rng: Source of randomness.
        secondary: Tie-break score per member, higher is better; random if
            None.
        count: Number of offspring, N by default.

    Returns:
        (count, n) offspring genomes, unevaluated.
    """
    count = population.size if count is None else count
    n = population.genomes.shape[1]
    pairs = (count + 1) // 2
    parents = tournament_indices(partition.ranks, 2, rng, 2 * pairs, secondary).reshape(pairs, 2)
    first = population.genomes[parents[:, 0]]
    second = population.genomes[parents[:, 1]]
    crossed = (rng.random(pairs) < config.crossover_rate)[:, None]
    child_a, child_b = uniform_crossover(first, second, rng)
    children = np.empty((2 * pairs, n), dtype=np.uint8)
    children[0::2] = np.where(crossed, child_a, first)
    children[1::2] = np.where(crossed, child_b, second)
    return bitflip_mutate(children[:count], config.mutation(n), rng)


def ne_moea_step(
    state: RunState, problem: Problem, config: AlgorithmConfig, rng: RandomSource
) -> RunState:
    """One NE-MOEA generation.

    N parents are chosen by k-tournament on front rank and mutated at the
    configured rate; the offspring replace the population unconditionally.

    Args:
        state: Current run state.
        problem: Problem being optimized.
        config: NE-MOEA parameters.
        rng: Source of randomness.

    Returns:
        The state of the next generation.
    """
    population = state.population
    partition = nondominated_sort(population.objectives)
    parents = tournament_indices(
        partition.ranks, config.tournament_size, rng, population.size
    )
    children = bitflip_mutate(population.genomes[parents], config.mutation(problem.n), rng)
    offspring, scored = _evaluate(problem, children, config)
    state.archive.update(scored)
    return RunState(
        population=offspring,
        generation=state.generation + 1,
        archive=state.archive,
        evaluations=state.evaluations + offspring.size,
    )


class Algorithm(ABC):
    """A generational optimizer with an external unbounded archive.

    The outer loop is shared: N uniform random genomes are evaluated and
    archived, then `step` runs G times. Subclasses implement `step`.

    Args:
        config: Parameters of the run.
    """

    def __init__(self, config: AlgorithmConfig) -> None:
        self.config = config

    def initialize(self, problem: Problem, rng: RandomSource) -> RunState:
        """Evaluates and archives a uniform random population."""
        size = self.config.population_size
        genomes = rng.integers(0, 2, size=(size, problem.n)).astype(np.uint8)
        population, scored = _evaluate(problem, genomes, self.config)
        archive = Archive(validate=self.config.validate_archive)
        archive.update(scored)
        return RunState(population, generation=0, archive=archive, evaluations=size)

    def run(self, problem: Problem, rng: RandomSource) -> RunResult:
        """Runs the configured number of generations.

        Args:
            problem: Problem to optimize.
            rng: Source of randomness, owned by this run.

        Returns:
            Final archive, population, archive hypervolume and evaluations.
        """
        self.prepare(problem)
        state = self.initialize(problem, rng)
        generations = self.config.generations
        report_every = max(1, generations // 10)
        for _ in range(generations):
            state = self.step(state, problem, rng)
            if state.generation % report_every == 0:
                logger.debug(
                    f"{self.config.algorithm} generation {state.generation}/{generations}: "
                    f"archive size {len(state.archive)}"
                )
        if problem.m == 2:
            hypervolume = hypervolume_2d(state.archive.objectives, self.config.reference_point)
        else:
            hypervolume = float("nan")
        return RunResult(
            algorithm=self.config.algorithm,
            archive=state.archive,
            population=state.population,
            hypervolume=hypervolume,
            evaluations=state.evaluations,
        )

    def prepare(self, problem: Problem) -> None:
        """Hook for per-problem setup before initialization."""

    @abstractmethod
    def step(self, state: RunState, problem: Problem, rng: RandomSource) -> RunState:
        """Advances the run by one generation (N evaluations)."""


class NEMOEA(Algorithm):
    """Non-elitist MOEA: offspring become the next population."""

    def step(self, state: RunState, problem: Problem, rng: RandomSource) -> RunState:
        return ne_moea_step(state, problem, self.config, rng)


class NSGA2(Algorithm):
    """NSGA-II with crowded binary tournament mating selection."""

    def step(self, state: RunState, problem: Problem, rng: RandomSource) -> RunState:
        population = state.population
        partition = nondominated_sort(population.objectives)
        crowding = _per_front(population.objectives, partition, crowding_distance)
        children = elitist_reproduce(population, partition, self.config, rng, crowding)
        offspring, scored = _evaluate(problem, children, self.config)
        state.archive.update(scored)
        return RunState(
            population=nsga2_update(population, offspring),
            generation=state.generation + 1,
            archive=state.archive,
            evaluations=state.evaluations + offspring.size,
        )


class NSGA3(Algorithm):
    """NSGA-III with rank-then-random binary tournament mating selection."""

    directions: np.ndarray

    def prepare(self, problem: Problem) -> None:
        budget = self.config.reference_directions or self.config.population_size
        self.directions = reference_directions(problem.m, budget)
        logger.debug(f"NSGA-III uses {self.directions.shape[0]} reference directions")

    def step(self, state: RunState, problem: Problem, rng: RandomSource) -> RunState:
        population = state.population
        partition = nondominated_sort(population.objectives)
        children = elitist_reproduce(population, partition, self.config, rng)
        offspring, scored = _evaluate(problem, children, self.config)
        state.archive.update(scored)
        return RunState(
            population=nsga3_update(population, offspring, self.directions, rng),
            generation=state.generation + 1,
            archive=state.archive,
            evaluations=state.evaluations + offspring.size,
        )


class SMSEMOA(Algorithm):
    """Steady-state SMS-EMOA; N single-offspring steps form one generation."""

    def prepare(self, problem: Problem) -> None:
        if problem.m != 2:
            raise UnsupportedDimensionError(
                f"SMS-EMOA is implemented for m=2, got m={problem.m}"
            )

    def step(self, state: RunState, problem: Problem, rng: RandomSource) -> RunState:
        population = state.population
        ref = self.config.reference_point
        ranks = nondominated_sort(population.objectives).ranks
        for _ in range(population.size):
            partition = FrontPartition(
                ranks=ranks,
                fronts=[np.flatnonzero(ranks == r) for r in np.unique(ranks)],
            )
            contributions = _per_front(
                population.objectives,
                partition,
                lambda front: hypervolume_contributions_2d(front, ref),
            )
            child = elitist_reproduce(
                population, partition, self.config, rng, contributions, count=1
            )
            offspring, scored = _evaluate(problem, child, self.config)
            state.archive.update(scored)
            union = population.concat(offspring)
            keep, ranks = _sms_emoa_survival(union, ref)
            population = union.take(keep)
        return RunState(
            population=population,
            generation=state.generation + 1,
            archive=state.archive,
            evaluations=state.evaluations + population.size,
        )


ALGORITHMS: dict[AlgorithmId, type[Algorithm]] = {
    AlgorithmId.NE_MOEA: NEMOEA,
    AlgorithmId.NSGA2: NSGA2,
    AlgorithmId.SMS_EMOA: SMSEMOA,
    AlgorithmId.NSGA3: NSGA3,
}


def create_algorithm(config: AlgorithmConfig) -> Algorithm:
    """Returns the optimizer configured by `config`."""
    return ALGORITHMS[config.algorithm](config)


def run(problem: Problem, config: AlgorithmConfig, rng: RandomSource) -> RunResult:
    """Runs one optimizer on one problem.

    Args:
        problem: Problem to optimize.
        config: Optimizer parameters.
        rng: Source of randomness, owned by this run.

    Returns:
        The RunResult.
    """
    return create_algorithm(config).run(problem, rng)
