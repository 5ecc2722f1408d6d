from __future__ import annotations
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Sequence
import numpy as np


class DimensionError(ValueError):
    """Raised when objective vectors or genomes of different length meet."""


class UnsupportedDimensionError(DimensionError):
    """Raised by routines that only handle a fixed number of objectives."""


class ConfigError(ValueError):
    """Raised for invalid parameters or configuration values."""


class Dominance(IntEnum):
    """Outcome of comparing two objective vectors under maximization."""

    B_DOMINATES = -1
    NONE = 0
    A_DOMINATES = 1


def dominates(a: Sequence[float], b: Sequence[float]) -> Dominance:
    """Compares two objective vectors, all objectives maximized.

    Args:
        a: First objective vector.
        b: Second objective vector.

    Returns:
        A_DOMINATES if a is componentwise >= b with one strict component,
        B_DOMINATES for the symmetric case, NONE if the vectors are
        incomparable or equal.

    Raises:
        DimensionError if the vectors differ in length.
    """
    if len(a) != len(b):
        raise DimensionError(
            f"Cannot compare objective vectors of dimension {len(a)} and {len(b)}"
        )
    better = worse = False
    for x, y in zip(a, b):
        if x > y:
            better = True
        elif x < y:
            worse = True
        if better and worse:
            return Dominance.NONE
    if better:
        return Dominance.A_DOMINATES
    if worse:
        return Dominance.B_DOMINATES
    return Dominance.NONE


def dominance_matrix(objectives: np.ndarray) -> np.ndarray:
    """Returns D with D[i, j] True iff row i dominates row j."""
    objectives = np.asarray(objectives, dtype=float)
    if objectives.ndim != 2:
        raise DimensionError(
            f"Expected a 2-D objective array, got shape {objectives.shape}"
        )
    lhs = objectives[:, None, :]
    rhs = objectives[None, :, :]
    return np.all(lhs >= rhs, axis=2) & np.any(lhs > rhs, axis=2)


@dataclass(frozen=True)
class FrontPartition:
    """Partition of a population into non-dominated fronts.

    Attributes:
        ranks: 1-based front index per solution, lower is better.
        fronts: Index arrays, front 1 first.
    """

    ranks: np.ndarray
    fronts: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.fronts)

    def front_of(self, index: int) -> np.ndarray:
        """Returns the indices sharing the front of solution `index`."""
        return self.fronts[int(self.ranks[index]) - 1]


def nondominated_sort(objectives: np.ndarray) -> FrontPartition:
    """Fast non-dominated sorting (Deb et al. 2002), maximization.

    For each solution the number of dominators is counted once; peeling front
    i then decrements the counters of everything front i dominates, and the
    solutions reaching zero form front i+1.

    Args:
        objectives: (N, m) array of evaluated objective vectors, N >= 1.

    Returns:
        The FrontPartition of the rows.
    """
    objectives = np.asarray(objectives, dtype=float)
    size = objectives.shape[0]
    if size == 0:
        raise ValueError("Cannot sort an empty population")
    dominated_by = dominance_matrix(objectives)
    counts = dominated_by.sum(axis=0)
    ranks = np.zeros(size, dtype=np.int64)
    fronts: list[np.ndarray] = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        ranks[current] = len(fronts) + 1
        fronts.append(current)
        counts = counts - dominated_by[current].sum(axis=0)
        # Members of earlier fronts drop below zero and never reappear
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
    return FrontPartition(ranks=ranks, fronts=fronts)


@dataclass(eq=False)
class Solution:
    """A bit string genome with its cached objective vector.

    Attributes:
        genome: uint8 array of 0/1 values, length n.
        objectives: Objective vector f(genome), None until evaluated.
    """

    genome: np.ndarray
    objectives: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        self.genome = np.asarray(self.genome, dtype=np.uint8)
        if self.objectives is not None:
            self.objectives = np.asarray(self.objectives, dtype=float)

    def __eq__(self, other) -> bool:
        """Solutions are equal if genome and objectives are identical.

        Args:
            other: Other object to compare with.

        Returns:
            True if other is a Solution with the same bits and objectives.
        """
        if not isinstance(other, Solution):
            return NotImplemented
        if not np.array_equal(self.genome, other.genome):
            return False
        if self.objectives is None or other.objectives is None:
            return self.objectives is None and other.objectives is None
        return np.array_equal(self.objectives, other.objectives)

    def __hash__(self) -> int:
        return hash(self.genome.tobytes())

    def __str__(self) -> str:
        bits = "".join(str(b) for b in self.genome)
        if self.objectives is None:
            return bits
        return f"{bits} -> {tuple(float(v) for v in self.objectives)}"


@dataclass(frozen=True)
class Population:
    """An ordered multiset of N evaluated solutions stored column-wise.

    Attributes:
        genomes: (N, n) uint8 array.
        objectives: (N, m) float array.
    """

    genomes: np.ndarray
    objectives: np.ndarray

    def __post_init__(self) -> None:
        if self.genomes.shape[0] != self.objectives.shape[0]:
            raise DimensionError(
                f"{self.genomes.shape[0]} genomes but "
                f"{self.objectives.shape[0]} objective vectors"
            )

    @classmethod
    def from_solutions(cls, solutions: Sequence[Solution]) -> Population:
        """Stacks evaluated solutions into a population."""
        if any(s.objectives is None for s in solutions):
            raise ValueError("All solutions must be evaluated")
        return cls(
            genomes=np.stack([s.genome for s in solutions]).astype(np.uint8),
            objectives=np.stack([s.objectives for s in solutions]).astype(float),
        )

    @property
    def size(self) -> int:
        return self.genomes.shape[0]

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, index: int) -> Solution:
        return Solution(self.genomes[index].copy(), self.objectives[index].copy())

    def __iter__(self) -> Iterator[Solution]:
        for i in range(self.size):
            yield self[i]

    def take(self, indices: np.ndarray | Sequence[int]) -> Population:
        """Returns the sub-population at `indices`, in that order."""
        indices = np.asarray(indices, dtype=np.int64)
        return Population(self.genomes[indices], self.objectives[indices])

    def concat(self, other: Population) -> Population:
        """Returns self followed by other."""
        return Population(
            np.concatenate([self.genomes, other.genomes]),
            np.concatenate([self.objectives, other.objectives]),
        )


class Archive:
    """Unbounded store of mutually non-dominated solutions.

    Distinct genomes with tied objective vectors are all kept; a genome that
    is already stored with the same objectives is rejected.

    Args:
        validate: Check pairwise non-dominance after every insert.

    Methods:
        insert: Offer one solution.
        update: Offer every member of a population, in order.
        objectives: Objective vectors of the members.
        genomes: Genomes of the members.
    """

    def __init__(self, validate: bool = False) -> None:
        self._validate = validate
        self._genomes: np.ndarray | None = None
        self._objectives: np.ndarray | None = None

    def __len__(self) -> int:
        return 0 if self._objectives is None else self._objectives.shape[0]

    def __iter__(self) -> Iterator[Solution]:
        for i in range(len(self)):
            yield Solution(self._genomes[i].copy(), self._objectives[i].copy())  # type: ignore

    @property
    def objectives(self) -> np.ndarray:
        if self._objectives is None:
            return np.empty((0, 0))
        return self._objectives.copy()

    @property
    def genomes(self) -> np.ndarray:
        if self._genomes is None:
            return np.empty((0, 0), dtype=np.uint8)
        return self._genomes.copy()

    def insert(self, solution: Solution) -> bool:
        """Offers a solution to the archive.

        Args:
            solution: An evaluated solution.

        Returns:
            True if the solution was added, False if a member dominates it or
            the identical solution is already stored.
        """
        if solution.objectives is None:
            raise ValueError("Only evaluated solutions can be archived")
        return self._insert(solution.genome, solution.objectives)

    def update(self, population: Population) -> int:
        """Offers every member of the population in order.

        Returns:
            The number of accepted solutions.
        """
        accepted = 0
        if population.size == 0:
            return accepted
        genomes = np.asarray(population.genomes, dtype=np.uint8)
        objectives = np.asarray(population.objectives, dtype=float)
        # Skip the bulk of offspring that an unchanged archive already dominates
        if self._objectives is not None:
            lhs = self._objectives[:, None, :]
            rhs = objectives[None, :, :]
            covered = np.any(
                np.all(lhs >= rhs, axis=2) & np.any(lhs > rhs, axis=2), axis=0
            )
        else:
            covered = np.zeros(population.size, dtype=bool)
        for i in np.flatnonzero(~covered):
            accepted += self._insert(genomes[i], objectives[i])
        return accepted

    def _insert(self, genome: np.ndarray, objectives: np.ndarray) -> bool:
        genome = np.asarray(genome, dtype=np.uint8)
        objectives = np.asarray(objectives, dtype=float)
        if self._objectives is None:
            self._genomes = genome[None, :].copy()
            self._objectives = objectives[None, :].copy()
            return True
        if self._objectives.shape[1] != objectives.shape[0]:
            raise DimensionError(
                f"Archive holds {self._objectives.shape[1]} objectives, "
                f"got {objectives.shape[0]}"
            )
        ge = np.all(self._objectives >= objectives, axis=1)
        gt = np.any(self._objectives > objectives, axis=1)
        if np.any(ge & gt):
            return False
        tied = np.flatnonzero(np.all(self._objectives == objectives, axis=1))
        if tied.size and np.any(np.all(self._genomes[tied] == genome, axis=1)):  # type: ignore
            return False
        le = np.all(self._objectives <= objectives, axis=1)
        lt = np.any(self._objectives < objectives, axis=1)
        keep = ~(le & lt)
        self._genomes = np.concatenate([self._genomes[keep], genome[None, :]])  # type: ignore
        self._objectives = np.concatenate([self._objectives[keep], objectives[None, :]])
        if self._validate:
            self._check()
        return True

    def _check(self) -> None:
        matrix = dominance_matrix(self._objectives)  # type: ignore
        assert not matrix.any(), "Archive members dominate each other"


class RandomSource:
    """Deterministic, splittable random stream.

    Streams are Philox (counter-based) generators keyed by numpy's
    SeedSequence of (seed, label), so identical (seed, label) pairs give
    bit-identical draws on every platform and distinct labels give
    independent streams.

    Args:
        seed: 64-bit unsigned master seed.
        label: Spawn key identifying the child stream.
    """

    def __init__(self, seed: int, label: Sequence[int] = ()) -> None:
        if not 0 <= int(seed) < 2**64:
            raise ConfigError(f"Seed {seed} is not a 64-bit unsigned integer")
        self.seed = int(seed)
        self.label = tuple(int(x) for x in label)
        self._sequence = np.random.SeedSequence(self.seed, spawn_key=self.label)
        self.generator = np.random.Generator(np.random.Philox(self._sequence))

    def fork(self, label: Sequence[int]) -> RandomSource:
        """Returns the child stream for `label`, independent of draws made."""
        return RandomSource(self.seed, self.label + tuple(int(x) for x in label))

    def derive_seed(self) -> int:
        """Returns a 64-bit seed fixed by (seed, label)."""
        return int(self._sequence.generate_state(1, np.uint64)[0])

    def random(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def integers(self, low: int, high: int | None = None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size=size)

    def choice(self, a, size=None, replace: bool = True):
        return self.generator.choice(a, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, label={list(self.label)})"


def rng_fork(master: RandomSource, label: Sequence[int]) -> RandomSource:
    """Deterministic child stream of `master` for `label`."""
    return master.fork(label)
