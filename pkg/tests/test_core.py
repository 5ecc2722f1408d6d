import numpy as np
import pytest

from ne_moea import (
    Archive,
    ConfigError,
    DimensionError,
    Dominance,
    Population,
    RandomSource,
    Solution,
    dominance_matrix,
    dominates,
    nondominated_sort,
)
from ne_moea.core import rng_fork
from conftest import brute_force_fronts


def solution(*objectives, genome=None) -> Solution:
    if genome is None:
        genome = [int(v) % 2 for v in objectives]
    return Solution(np.array(genome), np.array(objectives, dtype=float))


def archive_points(archive: Archive) -> set[tuple[float, ...]]:
    return {tuple(row) for row in archive.objectives}


class TestDominates:
    def test_strict_in_one_component(self):
        assert dominates((3, 5), (2, 5)) is Dominance.A_DOMINATES
        assert dominates((2, 5), (3, 5)) is Dominance.B_DOMINATES

    def test_conflicting_components(self):
        assert dominates((1, 2), (2, 1)) is Dominance.NONE

    def test_equal_vectors(self):
        assert dominates((4, 4), (4, 4)) is Dominance.NONE

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            dominates((1, 2), (1, 2, 3))

    def test_partial_order_axioms(self):
        rng = RandomSource(3)
        for _ in range(10_000):
            a, b, c = rng.integers(0, 4, size=(3, 3))
            # irreflexive
            assert dominates(a, a) is Dominance.NONE
            # antisymmetric
            assert dominates(a, b) == -dominates(b, a)
            # transitive
            if dominates(a, b) is Dominance.A_DOMINATES and dominates(b, c) is Dominance.A_DOMINATES:
                assert dominates(a, c) is Dominance.A_DOMINATES

    def test_matrix_matches_pairwise(self):
        points = RandomSource(4).integers(0, 3, size=(20, 3))
        matrix = dominance_matrix(points)
        for i in range(20):
            for j in range(20):
                expected = dominates(points[i], points[j]) is Dominance.A_DOMINATES
                assert matrix[i, j] == expected


class TestNondominatedSort:
    def test_singleton(self):
        partition = nondominated_sort(np.array([[1.0, 1.0]]))
        assert len(partition) == 1
        assert partition.ranks.tolist() == [1]

    def test_two_fronts(self):
        partition = nondominated_sort(np.array([[2, 2], [1, 1], [3, 1], [1, 3]]))
        assert [set(f.tolist()) for f in partition.fronts] == [{0, 2, 3}, {1}]
        assert partition.ranks.tolist() == [1, 2, 1, 1]
        assert set(partition.front_of(2).tolist()) == {0, 2, 3}

    def test_duplicates_share_a_front(self):
        partition = nondominated_sort(np.array([[1, 1], [1, 1], [0, 0]]))
        assert partition.ranks.tolist() == [1, 1, 2]

    def test_empty_population(self):
        with pytest.raises(ValueError):
            nondominated_sort(np.empty((0, 2)))

    def test_matches_brute_force(self):
        rng = RandomSource(1)
        for trial in range(1000):
            size = int(rng.integers(1, 65))
            m = 2 + trial % 2
            # Small integer range forces ties and duplicates
            points = rng.integers(0, 8, size=(size, m)).astype(float)
            partition = nondominated_sort(points)
            assert [set(f.tolist()) for f in partition.fronts] == brute_force_fronts(points)


class TestArchive:
    def test_incomparable_insert(self):
        archive = Archive(validate=True)
        archive.insert(solution(1, 3))
        archive.insert(solution(3, 1))
        assert archive.insert(solution(2, 2))
        assert archive_points(archive) == {(1, 3), (3, 1), (2, 2)}

    def test_dominating_insert_evicts(self):
        archive = Archive(validate=True)
        archive.insert(solution(1, 3))
        archive.insert(solution(3, 1))
        assert archive.insert(solution(3, 3))
        assert archive_points(archive) == {(3, 3)}

    def test_dominated_insert_rejected(self):
        archive = Archive(validate=True)
        archive.insert(solution(2, 2))
        assert not archive.insert(solution(1, 1))
        assert archive_points(archive) == {(2, 2)}

    def test_tied_objectives(self):
        archive = Archive(validate=True)
        assert archive.insert(solution(2, 2, genome=[0, 1]))
        assert archive.insert(solution(2, 2, genome=[1, 0]))
        assert not archive.insert(solution(2, 2, genome=[1, 0]))
        assert len(archive) == 2

    def test_update_counts_accepted(self):
        archive = Archive()
        population = Population(
            np.array([[0, 0], [0, 1], [1, 0]], dtype=np.uint8),
            np.array([[1.0, 1.0], [2.0, 0.5], [0.5, 0.5]]),
        )
        assert archive.update(population) == 2
        assert archive_points(archive) == {(1, 1), (2, 0.5)}

    def test_empty_archive(self):
        archive = Archive()
        assert len(archive) == 0
        assert archive.objectives.shape[0] == 0
        assert list(archive) == []

    def test_insertion_order_independent(self):
        rng = RandomSource(11)
        for _ in range(10_000 // 50):
            size = int(rng.integers(1, 30))
            genomes = rng.integers(0, 2, size=(size, 6)).astype(np.uint8)
            objectives = rng.integers(0, 6, size=(size, 2)).astype(float)
            results = []
            for _ in range(50 if size > 1 else 1):
                archive = Archive()
                for i in rng.generator.permutation(size):
                    archive.insert(Solution(genomes[i], objectives[i]))
                results.append({(s.genome.tobytes(), tuple(s.objectives)) for s in archive})
            assert all(r == results[0] for r in results)

    def test_members_stay_non_dominated(self):
        rng = RandomSource(5)
        archive = Archive(validate=True)
        for _ in range(20):
            population = Population(
                rng.integers(0, 2, size=(10, 8)).astype(np.uint8), rng.random((10, 3))
            )
            archive.update(population)
        assert not dominance_matrix(archive.objectives).any()


class TestRandomSource:
    def test_fork_is_deterministic(self):
        master = RandomSource(7)
        assert np.array_equal(rng_fork(master, [0]).random(1000), rng_fork(master, [0]).random(1000))

    def test_labels_separate_streams(self):
        master = RandomSource(7)
        assert not np.array_equal(rng_fork(master, [0]).random(1000), rng_fork(master, [1]).random(1000))

    def test_seeds_separate_streams(self):
        a = rng_fork(RandomSource(7), [0]).random(1000)
        b = rng_fork(RandomSource(8), [0]).random(1000)
        assert not np.array_equal(a, b)

    def test_fork_ignores_parent_draws(self):
        used = RandomSource(7)
        used.random(50)
        assert np.array_equal(used.fork([2]).random(10), RandomSource(7).fork([2]).random(10))

    def test_stream_is_philox_keyed_by_seed_and_label(self):
        expected = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(7, spawn_key=(0, 3)))
        ).random(100)
        assert np.array_equal(RandomSource(7).fork([0, 3]).random(100), expected)

    def test_derived_seed(self):
        a = RandomSource(7).fork([1, 2, 3]).derive_seed()
        assert a == RandomSource(7).fork([1, 2, 3]).derive_seed()
        assert a != RandomSource(7).fork([1, 2, 4]).derive_seed()
        assert 0 <= a < 2**64

    def test_invalid_seed(self):
        with pytest.raises(ConfigError):
            RandomSource(-1)


def test_population_take_and_concat():
    a = Population(np.zeros((2, 3), dtype=np.uint8), np.array([[1.0, 2.0], [3.0, 4.0]]))
    b = Population(np.ones((1, 3), dtype=np.uint8), np.array([[5.0, 6.0]]))
    union = a.concat(b)
    assert union.size == 3
    assert union.take([2, 0]).objectives.tolist() == [[5.0, 6.0], [1.0, 2.0]]
    assert union[2] == Solution(np.ones(3), np.array([5.0, 6.0]))
    with pytest.raises(DimensionError):
        Population(np.zeros((2, 3), dtype=np.uint8), np.zeros((3, 2)))
