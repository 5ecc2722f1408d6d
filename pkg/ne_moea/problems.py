from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from loguru import logger
import numpy as np

from ne_moea.core import RandomSource, ConfigError, DimensionError


class InstanceParseError(ValueError):
    """Raised when an instance file cannot be parsed.

    Args:
        message: Description of the problem.
        line: 1-based line number where parsing failed.
    """

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Evaluation:
    """Result of evaluating one genome.

    Attributes:
        objectives: The objective vector, maximized.
        feasible: Whether the evaluated genome satisfies all constraints.
        repaired_genome: The genome actually scored, present only if repair
            changed the input.
    """

    objectives: np.ndarray
    feasible: bool = field(default=True)
    repaired_genome: np.ndarray | None = field(default=None)


class Problem(ABC):
    """A bit string problem with m maximized objectives.

    Subclasses implement batch evaluation; single-genome evaluation and
    serialization build on it.
    """

    family: str = ""

    @property
    @abstractmethod
    def n(self) -> int:
        """Genome length."""

    @property
    @abstractmethod
    def m(self) -> int:
        """Number of objectives."""

    @abstractmethod
    def evaluate_many(self, genomes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Evaluates a batch of genomes.

        Args:
            genomes: (N, n) 0/1 array.

        Returns:
            (objectives, scored_genomes): the (N, m) objective array and the
            (N, n) genomes actually scored after any repair.
        """

    @abstractmethod
    def _dump_sections(self) -> list[tuple[str, np.ndarray]]:
        """Named tables written after the header line, in order."""

    @abstractmethod
    def _header_fields(self) -> dict[str, int]:
        """Header values following the family name."""

    def evaluate(self, genome: np.ndarray) -> Evaluation:
        """Evaluates a single genome.

        Args:
            genome: 0/1 array of length n.

        Returns:
            The Evaluation of the genome.
        """
        genome = self._check_genome(genome)
        objectives, scored = self.evaluate_many(genome[None, :])
        repaired = None
        if not np.array_equal(scored[0], genome):
            repaired = scored[0]
        return Evaluation(objectives=objectives[0], feasible=True, repaired_genome=repaired)

    def identifier(self) -> str:
        """Short file-system safe name, e.g. 'kp_n100' or 'nk_n100_k10'."""
        fields = self._header_fields()
        parts = [self.family, f"n{fields['n']}"]
        if "k" in fields:
            parts.append(f"k{fields['k']}")
        if fields["m"] != 2:
            parts.append(f"m{fields['m']}")
        return "_".join(parts)

    def _check_genome(self, genome: np.ndarray) -> np.ndarray:
        genome = np.asarray(genome, dtype=np.uint8)
        if genome.shape != (self.n,):
            raise DimensionError(
                f"Genome of shape {genome.shape} does not match n={self.n}"
            )
        return genome


class KnapsackInstance(Problem):
    """Multi-objective 0/1 knapsack with m knapsacks.

    Infeasible selections are repaired at evaluation time by dropping items
    in increasing order of their best profit/weight ratio; ties drop the lower
    index first.

    Args:
        profits: (m, n) table of positive profits.
        weights: (m, n) table of positive weights.
        capacities: m positive capacities.
    """

    family = "kp"

    def __init__(
        self, profits: np.ndarray, weights: np.ndarray, capacities: np.ndarray
    ) -> None:
        self.profits = np.asarray(profits, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.capacities = np.asarray(capacities, dtype=float)
        if self.profits.ndim != 2 or self.profits.shape != self.weights.shape:
            raise DimensionError(
                f"Profit table {self.profits.shape} and weight table "
                f"{self.weights.shape} must both be (m, n)"
            )
        if self.capacities.shape != (self.profits.shape[0],):
            raise DimensionError(
                f"Expected {self.profits.shape[0]} capacities, got "
                f"{self.capacities.shape}"
            )
        if np.any(self.profits <= 0) or np.any(self.weights <= 0):
            raise ConfigError("Profits and weights must be strictly positive")
        if np.any(self.capacities <= 0):
            raise ConfigError("Capacities must be strictly positive")
        if np.any(self.capacities >= self.weights.sum(axis=1)):
            raise ConfigError("Every capacity must be below the total weight of its knapsack")
        ratios = (self.profits / self.weights).max(axis=0)
        # Stable sort: equal ratios keep ascending index order
        self.removal_order = np.argsort(ratios, kind="stable")

    @property
    def n(self) -> int:
        return self.profits.shape[1]

    @property
    def m(self) -> int:
        return self.profits.shape[0]

    @classmethod
    def generate(cls, n: int, m: int, rng: RandomSource) -> KnapsackInstance:
        """Draws a random instance in the usual benchmark convention.

        Profits and weights are uniform integers in [10, 100]; every capacity
        is half the total weight of its knapsack.

        Args:
            n: Number of items, n >= 1.
            m: Number of objectives/knapsacks, m >= 2.
            rng: Source of randomness.

        Returns:
            The generated instance.
        """
        if n < 1 or m < 2:
            raise ConfigError(f"Knapsack generation needs n >= 1 and m >= 2, got n={n}, m={m}")
        profits = rng.integers(10, 101, size=(m, n)).astype(float)
        weights = rng.integers(10, 101, size=(m, n)).astype(float)
        capacities = weights.sum(axis=1) / 2.0
        logger.debug(f"Generated knapsack instance with n={n}, m={m}")
        return cls(profits, weights, capacities)

    def repair(self, genome: np.ndarray) -> np.ndarray:
        """Returns the greedily repaired copy of a genome."""
        genome = self._check_genome(genome)
        return self.repair_many(genome[None, :])[0]

    def repair_many(self, genomes: np.ndarray) -> np.ndarray:
        """Repairs a batch of genomes, leaving feasible rows untouched.

        Args:
            genomes: (N, n) 0/1 array.

        Returns:
            A new (N, n) array in which every row is feasible.
        """
        genomes = np.array(genomes, dtype=np.uint8, copy=True)
        loads = genomes @ self.weights.T
        infeasible = np.flatnonzero(np.any(loads > self.capacities, axis=1))
        if infeasible.size == 0:
            return genomes
        order = self.removal_order
        selected = genomes[np.ix_(infeasible, order)].astype(bool)
        # removed[r, i, t]: weight in knapsack i freed by dropping order[:t+1]
        removed = np.cumsum(selected[:, None, :] * self.weights[:, order][None, :, :], axis=2)
        remaining = loads[infeasible][:, :, None] - removed
        fits = np.all(remaining <= self.capacities[None, :, None], axis=1)
        # The empty knapsack always fits, so every row has a first True
        stop = np.argmax(fits, axis=1)
        drop = selected & (np.arange(self.n)[None, :] <= stop[:, None])
        rows = genomes[infeasible]
        rows[:, order] = np.where(drop, 0, rows[:, order])
        genomes[infeasible] = rows
        return genomes

    def evaluate_many(self, genomes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        repaired = self.repair_many(genomes)
        return repaired @ self.profits.T, repaired

    def _header_fields(self) -> dict[str, int]:
        return {"n": self.n, "m": self.m}

    def _dump_sections(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("profits", self.profits),
            ("weights", self.weights),
            ("capacities", self.capacities[None, :]),
        ]


class NKInstance(Problem):
    """Multi-objective NK-landscape with random epistatic neighbors.

    The table index of bit j is formed with bit j as the most significant bit
    followed by its neighbors in stored order.

    Args:
        neighbors: (m, n, k) integer array of neighbor indices.
        tables: (m, n, 2**(k+1)) array of contributions in [0, 1].
    """

    family = "nk"

    def __init__(self, neighbors: np.ndarray, tables: np.ndarray) -> None:
        self.neighbors = np.asarray(neighbors, dtype=np.int64)
        self.tables = np.asarray(tables, dtype=float)
        if self.neighbors.ndim != 3 or self.tables.ndim != 3:
            raise DimensionError("Neighbors and tables must be 3-D arrays")
        m, n, k = self.neighbors.shape
        if self.tables.shape != (m, n, 2 ** (k + 1)):
            raise DimensionError(
                f"Expected tables of shape {(m, n, 2 ** (k + 1))}, got {self.tables.shape}"
            )
        if not 0 <= k <= n - 1:
            raise ConfigError(f"Epistasis degree k={k} must lie in [0, {n - 1}]")
        if np.any(self.tables < 0) or np.any(self.tables > 1):
            raise ConfigError("Table entries must lie in [0, 1]")
        if np.any(self.neighbors < 0) or np.any(self.neighbors >= n):
            raise ConfigError("Neighbor index out of range")
        own = np.arange(n)[None, :, None]
        if np.any(self.neighbors == own):
            raise ConfigError("A bit cannot be its own neighbor")
        if k > 1:
            ordered = np.sort(self.neighbors, axis=2)
            if np.any(ordered[:, :, 1:] == ordered[:, :, :-1]):
                raise ConfigError("Neighbor lists must contain distinct indices")
        self.k = k
        # Column 0 is the bit itself, then its neighbors
        self._positions = np.concatenate(
            [np.broadcast_to(own, (m, n, 1)), self.neighbors], axis=2
        )
        self._place_values = 2 ** np.arange(k, -1, -1)

    @property
    def n(self) -> int:
        return self.neighbors.shape[1]

    @property
    def m(self) -> int:
        return self.neighbors.shape[0]

    @classmethod
    def generate(cls, n: int, k: int, m: int, rng: RandomSource) -> NKInstance:
        """Draws a random instance, objectives independent of each other.

        Args:
            n: Number of bits, n >= 1.
            k: Epistasis degree, 0 <= k <= n-1.
            m: Number of objectives, m >= 2.
            rng: Source of randomness.

        Returns:
            The generated instance.
        """
        if n < 1 or m < 2 or not 0 <= k <= n - 1:
            raise ConfigError(
                f"NK generation needs n >= 1, m >= 2 and 0 <= k <= n-1, got "
                f"n={n}, k={k}, m={m}"
            )
        neighbors = np.zeros((m, n, k), dtype=np.int64)
        tables = np.zeros((m, n, 2 ** (k + 1)))
        for i in range(m):
            for j in range(n):
                others = np.delete(np.arange(n), j)
                neighbors[i, j] = rng.choice(others, size=k, replace=False)
            tables[i] = rng.random((n, 2 ** (k + 1)))
        logger.debug(f"Generated NK instance with n={n}, k={k}, m={m}")
        return cls(neighbors, tables)

    def evaluate_many(self, genomes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        genomes = np.asarray(genomes, dtype=np.uint8)
        if genomes.ndim != 2 or genomes.shape[1] != self.n:
            raise DimensionError(
                f"Genomes of shape {genomes.shape} do not match n={self.n}"
            )
        objectives = np.empty((genomes.shape[0], self.m))
        bits = np.arange(self.n)
        for i in range(self.m):
            context = genomes[:, self._positions[i]].astype(np.int64)
            index = context @ self._place_values
            objectives[:, i] = self.tables[i][bits[None, :], index].mean(axis=1)
        return objectives, genomes

    def _header_fields(self) -> dict[str, int]:
        return {"n": self.n, "m": self.m, "k": self.k}

    def _dump_sections(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("neighbors", self.neighbors.reshape(self.m * self.n, self.k)),
            ("tables", self.tables.reshape(self.m * self.n, -1)),
        ]


def _format_value(value) -> str:
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return repr(float(value))


def save_instance(instance: Problem) -> bytes:
    """Serializes an instance to its text format.

    The first line is `problem=<kp|nk> n=<n> m=<m>` (plus `k=<k>` for NK),
    followed by one named section per table: the section name on its own
    line, then one row per line. Knapsack: profits (m rows), weights
    (m rows), capacities (1 row). NK: neighbors (m*n rows, objective-major),
    tables (m*n rows).

    Args:
        instance: The instance to serialize.

    Returns:
        UTF-8 encoded file content.
    """
    header = " ".join(
        [f"problem={instance.family}"]
        + [f"{key}={value}" for key, value in instance._header_fields().items()]
    )
    lines = [header]
    for name, table in instance._dump_sections():
        lines.append(name)
        for row in table:
            lines.append(" ".join(_format_value(v) for v in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


class _Tokens:
    """Whitespace token stream that remembers line numbers."""

    def __init__(self, lines: list[str], first_line: int) -> None:
        self._items = [
            (token, number)
            for number, line in enumerate(lines, start=first_line)
            for token in line.split()
        ]
        self._pos = 0
        self._last_line = max(first_line + len(lines) - 1, 1)

    def next(self, what: str) -> tuple[str, int]:
        if self._pos >= len(self._items):
            raise InstanceParseError(
                f"unexpected end of input, expected {what}", self._last_line
            )
        item = self._items[self._pos]
        self._pos += 1
        return item

    def expect(self, keyword: str) -> None:
        token, line = self.next(f"section '{keyword}'")
        if token != keyword:
            raise InstanceParseError(f"expected section '{keyword}', got '{token}'", line)

    def numbers(self, count: int, kind: type, what: str) -> np.ndarray:
        values = []
        for _ in range(count):
            token, line = self.next(what)
            try:
                values.append(kind(token))
            except ValueError:
                raise InstanceParseError(f"invalid {what} value '{token}'", line) from None
        return np.array(values, dtype=kind)

    def finish(self) -> None:
        if self._pos < len(self._items):
            token, line = self._items[self._pos]
            raise InstanceParseError(f"unexpected trailing content '{token}'", line)


def load_instance(data: bytes) -> Problem:
    """Parses an instance written by save_instance.

    Args:
        data: File content.

    Returns:
        The KnapsackInstance or NKInstance described by the data.

    Raises:
        InstanceParseError if the content is malformed or truncated.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise InstanceParseError(f"not UTF-8 text ({e.reason})", 1) from None
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise InstanceParseError("missing header line", 1)
    header: dict[str, str] = {}
    for item in lines[0].split():
        key, sep, value = item.partition("=")
        if not sep:
            raise InstanceParseError(f"malformed header field '{item}'", 1)
        header[key] = value
    family = header.get("problem")
    required = {"kp": ("n", "m"), "nk": ("n", "m", "k")}.get(family or "")
    if required is None:
        raise InstanceParseError(f"unknown problem family '{family}'", 1)
    sizes: dict[str, int] = {}
    for key in required:
        try:
            sizes[key] = int(header[key])
        except (KeyError, ValueError):
            raise InstanceParseError(f"header field '{key}' missing or not an integer", 1) from None
        if sizes[key] < 0:
            raise InstanceParseError(f"header field '{key}' is negative", 1)

    tokens = _Tokens(lines[1:], first_line=2)
    try:
        n, m = sizes["n"], sizes["m"]
        if family == "kp":
            tokens.expect("profits")
            profits = tokens.numbers(m * n, float, "profit").reshape(m, n)
            tokens.expect("weights")
            weights = tokens.numbers(m * n, float, "weight").reshape(m, n)
            tokens.expect("capacities")
            capacities = tokens.numbers(m, float, "capacity")
            tokens.finish()
            instance: Problem = KnapsackInstance(profits, weights, capacities)
        else:
            k = sizes["k"]
            tokens.expect("neighbors")
            neighbors = tokens.numbers(m * n * k, int, "neighbor").reshape(m, n, k)
            tokens.expect("tables")
            tables = tokens.numbers(m * n * 2 ** (k + 1), float, "table").reshape(
                m, n, 2 ** (k + 1)
            )
            tokens.finish()
            instance = NKInstance(neighbors, tables)
    except (ConfigError, DimensionError) as e:
        raise InstanceParseError(f"invalid instance: {e}", len(lines)) from None
    return instance


def write_instance(instance: Problem, path: str) -> None:
    """Writes an instance file."""
    with open(path, "wb") as file:
        file.write(save_instance(instance))
    logger.info(f"Wrote {instance.family} instance to '{path}'")


def read_instance(path: str) -> Problem:
    """Reads an instance file.

    Raises:
        InstanceParseError if the file is malformed.
    """
    with open(path, "rb") as file:
        data = file.read()
    try:
        return load_instance(data)
    except InstanceParseError:
        logger.error(f"Failed to parse instance file '{path}'")
        raise
