import os
import pytest
import yaml

from ne_moea import AlgorithmId, ConfigError, KnapsackInstance, NKInstance, write_instance, RandomSource
from ne_moea.experiment import ProblemSpec, load_config, load_preset, parse_config, problem_name

CONFIG = os.path.join(os.path.dirname(__file__), "config.yaml")


@pytest.fixture
def raw() -> dict:
    with open(CONFIG) as file:
        return yaml.safe_load(file)


def test_load_config():
    config = load_config(CONFIG)
    assert config.runs == 2
    assert config.master_seed == 99
    assert [a.algorithm for a in config.algorithms] == list(AlgorithmId)
    assert config.algorithms[0].crossover_rate == 0.8
    assert config.algorithms[2].crossover_rate == 0.9
    assert config.evaluations_per_run == 10 * 4
    assert [problem_name(p) for p in config.problems] == ["kp_n12", "nk_n12_k2"]


def test_desk_preset():
    config = load_preset("desk")
    assert (config.runs, config.evaluations_per_run) == (10, 200 * 501)
    assert len(config.problems) == 8
    assert len(config.algorithms) == 4
    assert {p.family for p in config.problems} == {"kp", "nk"}


def test_paper_preset_budget():
    config = load_preset("paper")
    assert config.runs == 30
    assert config.offspring_evaluations_per_run == 5 * 10**7
    assert config.evaluations_per_run == 10_000 * 5_001


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_preset("huge")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.yaml"))


@pytest.mark.parametrize(
    "section, key, value",
    [
        ("experiment", "runz", 3),
        ("variation", "mutation", 0.1),
        (None, "extras", {}),
    ],
)
def test_unknown_keys(raw, section, key, value):
    (raw[section] if section else raw)[key] = value
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_budget_override_rejected(raw):
    raw["overrides"]["NE-MOEA"] = {"generations": 10}
    with pytest.raises(ConfigError, match="budget"):
        parse_config(raw)


def test_override_of_unlisted_algorithm(raw):
    raw["algorithms"] = ["NE-MOEA"]
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_unknown_algorithm(raw):
    raw["algorithms"].append("MOEA/D")
    with pytest.raises(ConfigError):
        parse_config(raw)


@pytest.mark.parametrize(
    "problem",
    [
        {"family": "tsp", "n": 10},
        {"family": "nk", "n": 10, "k": 10},
        {"family": "kp", "n": 10, "k": 2},
        {"family": "kp", "n": 10, "size": 3},
        {"family": "kp", "n": "ten"},
        {"family": "nk", "n": 10, "k": [2]},
    ],
)
def test_invalid_problems(raw, problem):
    raw["problems"] = [problem]
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_zero_runs(raw):
    raw["experiment"]["runs"] = 0
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_overrides():
    config = load_config(CONFIG).with_overrides(output="elsewhere", workers=3, seed=5)
    assert (config.output, config.workers, config.master_seed) == ("elsewhere", 3, 5)


class TestProblemSpec:
    def test_generated_instances_are_seeded(self):
        spec = ProblemSpec("kp", n=20, seed=4)
        assert isinstance(spec.build(), KnapsackInstance)
        assert spec.build().profits.tolist() == spec.build().profits.tolist()
        assert ProblemSpec("nk", n=20, k=3).build().k == 3

    def test_instance_file(self, tmp_path):
        path = str(tmp_path / "bench.txt")
        write_instance(NKInstance.generate(10, 2, 2, RandomSource(1)), path)
        spec = ProblemSpec("nk", file=path)
        assert isinstance(spec.build(), NKInstance)
        assert problem_name(spec) == "bench"
        with pytest.raises(ConfigError):
            ProblemSpec("kp", file=path).build()

    def test_unresolvable_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ProblemSpec("kp", file=str(tmp_path / "missing.txt")).build()


@pytest.mark.parametrize("point", [5, ["a", 0.0]])
def test_invalid_reference_point(raw, point):
    raw["experiment"]["reference_point"] = point
    with pytest.raises(ConfigError, match="reference_point"):
        parse_config(raw)
