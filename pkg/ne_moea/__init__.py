from ne_moea.core import ( # noqa: F401
    Archive,
    ConfigError,
    DimensionError,
    Dominance,
    FrontPartition,
    Population,
    RandomSource,
    Solution,
    UnsupportedDimensionError,
    dominance_matrix,
    dominates,
    nondominated_sort,
)
from ne_moea.problems import ( # noqa: F401
    InstanceParseError,
    KnapsackInstance,
    NKInstance,
    Problem,
    load_instance,
    read_instance,
    save_instance,
    write_instance,
)
from ne_moea.indicators import ( # noqa: F401
    NormalizationSpec,
    hypervolume_2d,
    hypervolume_mc,
    normalize,
)
from ne_moea.algorithms import AlgorithmConfig, AlgorithmId, RunResult, run # noqa: F401
from ne_moea.stats import wilcoxon_rank_sum, summarize # noqa: F401
from ne_moea.experiment import ExperimentConfig, ProblemSpec, load_config, load_preset # noqa: F401
from ne_moea.harness import ( # noqa: F401
    ResultsParseError,
    RunRecord,
    read_front,
    read_results,
    report,
    run_experiment,
    write_front,
)
from ne_moea.plotting import plot_fronts # noqa: F401
