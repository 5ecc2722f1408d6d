import numpy as np
import pytest

from ne_moea import (
    ConfigError,
    InstanceParseError,
    KnapsackInstance,
    NKInstance,
    RandomSource,
    load_instance,
    read_instance,
    save_instance,
    write_instance,
)


@pytest.fixture
def knapsack() -> KnapsackInstance:
    return KnapsackInstance.generate(50, 2, RandomSource(1))


@pytest.fixture
def landscape() -> NKInstance:
    return NKInstance.generate(30, 4, 2, RandomSource(2))


def feasible(instance: KnapsackInstance, genomes: np.ndarray) -> bool:
    return bool(np.all(np.atleast_2d(genomes) @ instance.weights.T <= instance.capacities))


class TestKnapsack:
    def test_generate_is_deterministic(self):
        a = KnapsackInstance.generate(50, 2, RandomSource(9))
        b = KnapsackInstance.generate(50, 2, RandomSource(9))
        assert save_instance(a) == save_instance(b)

    def test_generated_ranges(self, knapsack):
        assert knapsack.n == 50 and knapsack.m == 2
        assert knapsack.profits.min() >= 10 and knapsack.profits.max() <= 100
        assert knapsack.weights.min() >= 10 and knapsack.weights.max() <= 100
        assert np.all(knapsack.capacities >= 25 * 10)
        assert np.all(knapsack.capacities <= 25 * 100)
        assert np.array_equal(knapsack.capacities, knapsack.weights.sum(axis=1) / 2)

    def test_single_item_never_fits(self):
        instance = KnapsackInstance.generate(1, 2, RandomSource(3))
        assert np.array_equal(instance.capacities, instance.weights[:, 0] / 2)
        assert instance.repair(np.array([1])).tolist() == [0]
        assert instance.evaluate(np.array([1])).objectives.tolist() == [0.0, 0.0]

    def test_repair_hand_trace(self):
        instance = KnapsackInstance(
            profits=np.array([[60.0, 30.0, 10.0]]),
            weights=np.array([[10.0, 10.0, 10.0]]),
            capacities=np.array([15.0]),
        )
        assert instance.repair(np.array([1, 1, 1])).tolist() == [1, 0, 0]

    def test_repair_ties_drop_lower_index(self):
        instance = KnapsackInstance(
            profits=np.array([[10.0, 10.0, 10.0]]),
            weights=np.array([[10.0, 10.0, 10.0]]),
            capacities=np.array([25.0]),
        )
        assert instance.repair(np.array([1, 1, 1])).tolist() == [0, 1, 1]

    def test_repair_keeps_feasible(self, knapsack):
        genome = np.zeros(50, dtype=np.uint8)
        genome[:5] = 1
        assert feasible(knapsack, genome)
        assert np.array_equal(knapsack.repair(genome), genome)
        assert knapsack.evaluate(genome).repaired_genome is None

    def test_repair_all_ones(self, knapsack):
        repaired = knapsack.repair(np.ones(50, dtype=np.uint8))
        assert feasible(knapsack, repaired)
        evaluation = knapsack.evaluate(np.ones(50, dtype=np.uint8))
        assert np.array_equal(evaluation.repaired_genome, repaired)
        assert evaluation.feasible

    def test_batch_repair_matches_single(self, knapsack):
        genomes = RandomSource(4).integers(0, 2, size=(40, 50)).astype(np.uint8)
        batch = knapsack.repair_many(genomes)
        assert feasible(knapsack, batch)
        for genome, repaired in zip(genomes, batch):
            assert np.array_equal(knapsack.repair(genome), repaired)
            # Repair only removes items
            assert np.all(repaired <= genome)

    def test_evaluate_values(self, knapsack):
        assert knapsack.evaluate(np.zeros(50)).objectives.tolist() == [0.0, 0.0]
        genome = np.zeros(50, dtype=np.uint8)
        genome[7] = 1
        assert knapsack.evaluate(genome).objectives.tolist() == knapsack.profits[:, 7].tolist()

    def test_invalid_tables(self):
        with pytest.raises(ConfigError):
            KnapsackInstance(np.ones((2, 3)), np.zeros((2, 3)), np.ones(2))

    def test_capacity_must_bind(self):
        weights = np.array([[10.0, 20.0], [5.0, 5.0]])
        with pytest.raises(ConfigError):
            KnapsackInstance(np.ones((2, 2)), weights, np.array([15.0, 10.0]))

    def test_exhaustive_evaluation(self):
        instance = KnapsackInstance.generate(12, 2, RandomSource(10))
        ratio = (instance.profits / instance.weights).max(axis=0)
        order = sorted(range(12), key=lambda j: (ratio[j], j))
        genomes = (np.arange(2**12)[:, None] >> np.arange(12)) & 1
        objectives, _ = instance.evaluate_many(genomes)
        for genome, values in zip(genomes, objectives):
            kept = genome.tolist()
            for j in order:
                loads = [sum(w * x for w, x in zip(row, kept)) for row in instance.weights]
                if all(load <= c for load, c in zip(loads, instance.capacities)):
                    break
                kept[j] = 0
            expected = [sum(p * x for p, x in zip(row, kept)) for row in instance.profits]
            assert values.tolist() == pytest.approx(expected)

    def test_repair_is_idempotent(self, knapsack):
        genomes = RandomSource(11).integers(0, 2, size=(200, 50)).astype(np.uint8)
        once = knapsack.repair_many(genomes)
        assert np.array_equal(knapsack.repair_many(once), once)


class TestNK:
    def test_generate_is_deterministic(self):
        a = NKInstance.generate(20, 3, 2, RandomSource(5))
        b = NKInstance.generate(20, 3, 2, RandomSource(5))
        assert save_instance(a) == save_instance(b)

    def test_no_epistasis(self):
        instance = NKInstance.generate(5, 0, 2, RandomSource(6))
        assert instance.tables.shape == (2, 5, 2)
        assert instance.neighbors.shape == (2, 5, 0)

    def test_neighbors_distinct_and_exclude_self(self):
        instance = NKInstance.generate(50, 10, 2, RandomSource(7))
        for i in range(2):
            for j in range(50):
                neighbors = instance.neighbors[i, j].tolist()
                assert len(set(neighbors)) == 10
                assert j not in neighbors

    def test_constant_tables(self):
        instance = NKInstance(np.zeros((2, 4, 0), dtype=int), np.full((2, 4, 2), 0.25))
        for genome in RandomSource(8).integers(0, 2, size=(10, 4)):
            assert instance.evaluate(genome).objectives.tolist() == [0.25, 0.25]

    def test_hand_evaluation(self):
        instance = NKInstance(
            neighbors=np.array([[[1], [0]]]),
            tables=np.array([[[0.0, 0.2, 0.4, 0.6], [0.1, 0.3, 0.5, 0.7]]]),
        )
        assert instance.evaluate(np.array([1, 0])).objectives[0] == pytest.approx(0.35)

    def test_values_in_unit_interval(self, landscape):
        genomes = RandomSource(9).integers(0, 2, size=(100, 30))
        objectives, scored = landscape.evaluate_many(genomes)
        assert np.all((objectives >= 0) & (objectives <= 1))
        assert np.array_equal(scored, genomes)

    def test_invalid_degree(self):
        with pytest.raises(ConfigError):
            NKInstance.generate(10, 10, 2, RandomSource(1))

    def test_exhaustive_evaluation(self):
        instance = NKInstance.generate(10, 3, 2, RandomSource(12))
        genomes = (np.arange(2**10)[:, None] >> np.arange(10)) & 1
        objectives, _ = instance.evaluate_many(genomes)
        for genome, values in zip(genomes, objectives):
            expected = []
            for i in range(2):
                total = 0.0
                for j in range(10):
                    index = int(genome[j])
                    for neighbor in instance.neighbors[i, j]:
                        index = 2 * index + int(genome[neighbor])
                    total += instance.tables[i, j, index]
                expected.append(total / 10)
            assert values.tolist() == pytest.approx(expected)


class TestInstanceFiles:
    @pytest.mark.parametrize("name", ["knapsack", "landscape"])
    def test_reload_evaluates_identically(self, name, request):
        instance = request.getfixturevalue(name)
        loaded = load_instance(save_instance(instance))
        genomes = RandomSource(10).integers(0, 2, size=(100, instance.n))
        assert np.array_equal(loaded.evaluate_many(genomes)[0], instance.evaluate_many(genomes)[0])

    def test_header(self, landscape):
        header = save_instance(landscape).decode().splitlines()[0]
        assert header == "problem=nk n=30 m=2 k=4"

    def test_truncated_file(self, knapsack):
        data = save_instance(knapsack)
        truncated = data[: len(data) // 2]
        with pytest.raises(InstanceParseError) as error:
            load_instance(truncated)
        assert error.value.line >= 2

    def test_bad_value_names_line(self, knapsack):
        lines = save_instance(knapsack).decode().splitlines()
        lines[2] = lines[2].replace(lines[2].split()[0], "ten", 1)
        with pytest.raises(InstanceParseError) as error:
            load_instance("\n".join(lines).encode())
        assert error.value.line == 3

    @pytest.mark.parametrize(
        "data", [b"", b"problem=tsp n=3 m=2\n", b"problem=kp n=x m=2\n", b"\xff\xfe"]
    )
    def test_bad_header(self, data):
        with pytest.raises(InstanceParseError):
            load_instance(data)

    def test_loose_capacity_rejected(self, knapsack):
        lines = save_instance(knapsack).decode().splitlines()
        lines[-1] = " ".join(str(int(total)) for total in knapsack.weights.sum(axis=1))
        with pytest.raises(InstanceParseError):
            load_instance(("\n".join(lines) + "\n").encode())

    def test_trailing_content(self, knapsack):
        with pytest.raises(InstanceParseError):
            load_instance(save_instance(knapsack) + b"42\n")

    def test_file_round_trip(self, tmp_path, landscape):
        path = str(tmp_path / "nk.txt")
        write_instance(landscape, path)
        assert save_instance(read_instance(path)) == save_instance(landscape)
