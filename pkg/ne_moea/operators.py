from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
import math
import numpy as np

from ne_moea.core import (
    ConfigError,
    DimensionError,
    FrontPartition,
    Population,
    RandomSource,
    Solution,
)

DEFAULT_DELTA = 0.05


class MutationMode(str, Enum):
    FIXED = "fixed-rate"
    THRESHOLD = "threshold-rate"


@dataclass(frozen=True)
class MutationConfig:
    """Per-bit flip probability and how it was chosen.

    Attributes:
        rate: Flip probability p, 0 < p < 1.
        mode: FIXED for an explicit rate, THRESHOLD for (1-delta)ln(k)/n.
    """

    rate: float
    mode: MutationMode = field(default=MutationMode.FIXED)

    def __post_init__(self) -> None:
        if not 0 < self.rate < 1:
            raise ConfigError(f"Mutation rate {self.rate} must lie in (0, 1)")

    @classmethod
    def threshold(cls, k: int, n: int, delta: float = DEFAULT_DELTA) -> MutationConfig:
        return cls(threshold_mutation_rate(k, n, delta), MutationMode.THRESHOLD)

    @classmethod
    def one_over_n(cls, n: int) -> MutationConfig:
        if n < 2:
            raise ConfigError(f"A rate of 1/n needs n >= 2, got n={n}")
        return cls(1.0 / n, MutationMode.FIXED)


@dataclass(frozen=True)
class TournamentConfig:
    """Tournament size k, 1 <= k <= N."""

    k: int

    def validate(self, population_size: int) -> None:
        if not 1 <= self.k <= population_size:
            raise ConfigError(
                f"Tournament size {self.k} must lie in [1, {population_size}]"
            )


def threshold_mutation_rate(k: int, n: int, delta: float = DEFAULT_DELTA) -> float:
    """Mutation rate a factor (1-delta) below the error threshold ln(k)/n.

    Args:
        k: Tournament size, k >= 2.
        n: Genome length, n >= 1.
        delta: Safety margin in (0, 1).

    Returns:
        (1 - delta) * ln(k) / n

    Raises:
        ConfigError if k < 2, n < 1 or delta is outside (0, 1).
    """
    if k < 2:
        raise ConfigError(
            f"Tournament size {k} gives no selection pressure and a zero threshold rate"
        )
    if n < 1:
        raise ConfigError(f"Genome length must be positive, got {n}")
    if not 0 < delta < 1:
        raise ConfigError(f"Margin delta={delta} must lie in (0, 1)")
    return (1.0 - delta) * math.log(k) / n


def bitflip_mutate(genomes: np.ndarray, p: float, rng: RandomSource) -> np.ndarray:
    """Flips every bit independently with probability p.

    Works on a single genome or a (N, n) batch; the input is not modified.
    One uniform draw is consumed per bit.

    Args:
        genomes: 0/1 array, last axis is the genome.
        p: Flip probability in [0, 1).
        rng: Source of randomness.

    Returns:
        The mutated copy.
    """
    if not 0 <= p < 1:
        raise ConfigError(f"Mutation rate {p} must lie in [0, 1)")
    genomes = np.asarray(genomes, dtype=np.uint8)
    flips = rng.random(genomes.shape) < p
    return genomes ^ flips.astype(np.uint8)


def uniform_crossover(
    a: np.ndarray, b: np.ndarray, rng: RandomSource
) -> tuple[np.ndarray, np.ndarray]:
    """Swaps each bit between two parents with probability 1/2.

    Args:
        a: First parent (or batch of parents).
        b: Second parent, same shape as a.
        rng: Source of randomness.

    Returns:
        Two children holding, per position, one bit of each parent.

    Raises:
        DimensionError if the parents differ in shape.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise DimensionError(f"Parents of shape {a.shape} and {b.shape} cannot be crossed")
    swap = rng.random(a.shape) < 0.5
    return np.where(swap, b, a), np.where(swap, a, b)


def tournament_indices(
    ranks: np.ndarray,
    k: int,
    rng: RandomSource,
    count: int,
    secondary: np.ndarray | None = None,
) -> np.ndarray:
    """Runs `count` independent k-tournaments over a population.

    Each tournament draws k members uniformly with replacement and keeps the
    lowest rank; a secondary score, if given, is maximized among equal ranks;
    remaining ties are broken uniformly at random.

    Args:
        ranks: Front rank per member (lower is better).
        k: Tournament size, k >= 1.
        rng: Source of randomness.
        count: Number of winners to return.
        secondary: Optional per-member score, higher is better.

    Returns:
        Population indices of the winners.
    """
    ranks = np.asarray(ranks)
    if k < 1:
        raise ConfigError(f"Tournament size must be at least 1, got {k}")
    draws = rng.integers(0, ranks.shape[0], size=(count, k))
    candidate_ranks = ranks[draws]
    best = candidate_ranks == candidate_ranks.min(axis=1, keepdims=True)
    if secondary is not None:
        scores = np.where(best, np.asarray(secondary, dtype=float)[draws], -np.inf)
        best &= scores == scores.max(axis=1, keepdims=True)
    tie_break = np.where(best, rng.random((count, k)), -1.0)
    return draws[np.arange(count), np.argmax(tie_break, axis=1)]


def tournament_select(
    population: Population, partition: FrontPartition, k: int, rng: RandomSource
) -> Solution:
    """Returns the winner of one k-tournament on front rank."""
    index = tournament_indices(partition.ranks, k, rng, count=1)[0]
    return population[int(index)]
