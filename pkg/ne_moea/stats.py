from __future__ import annotations
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence
import numpy as np
from scipy.stats import norm, rankdata, tiecorrect

EXACT_LIMIT = 20
ALPHA = 0.05


@dataclass(frozen=True)
class SampleSet:
    """Per-run hypervolume values of one algorithm.

    Attributes:
        values: Finite sample values.
        label: Algorithm the samples belong to.
    """

    values: tuple[float, ...]
    label: str = field(default="")

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError(f"Sample set '{self.label}' is empty")
        if not all(np.isfinite(self.values)):
            raise ValueError(f"Sample set '{self.label}' contains non-finite values")


@dataclass(frozen=True)
class RankSumResult:
    """Outcome of a two-sided rank-sum test.

    Attributes:
        statistic: Mann-Whitney U of the first sample.
        pvalue: Two-sided p-value in (0, 1].
        significant: pvalue < alpha.
        exact: Whether the permutation distribution was used.
    """

    statistic: float
    pvalue: float
    significant: bool
    exact: bool


def _values(sample: SampleSet | Sequence[float]) -> np.ndarray:
    if isinstance(sample, SampleSet):
        return np.asarray(sample.values, dtype=float)
    return np.asarray(SampleSet(tuple(sample)).values, dtype=float)


def exact_rank_sum_pvalue(ranks: np.ndarray, size_a: int) -> float:
    """Two-sided permutation p-value of the rank sum of the first sample.

    Counts, over all ways of assigning `size_a` of the pooled mid-ranks to
    the first sample, those whose rank sum is at least as far from its mean
    as the observed one. Mid-ranks are multiples of 1/2, so sums are counted
    on a doubled integer scale.

    Args:
        ranks: Pooled mid-ranks, first sample first.
        size_a: Size of the first sample.

    Returns:
        The exact p-value.
    """
    doubled = np.rint(2 * np.asarray(ranks, dtype=float)).astype(np.int64)
    total = int(doubled.sum())
    # ways[j, s]: subsets of size j with doubled rank sum s
    ways = np.zeros((size_a + 1, total + 1))
    ways[0, 0] = 1.0
    for r in doubled:
        ways[1:, r:] = ways[1:, r:] + ways[:-1, : total + 1 - r]
    counts = ways[size_a]
    sums = np.arange(total + 1)
    center = total * size_a / doubled.size
    observed = abs(int(doubled[:size_a].sum()) - center)
    extreme = np.abs(sums - center) >= observed - 1e-9
    return float(min(1.0, counts[extreme].sum() / counts.sum()))


def _normal_pvalue(u: float, ranks: np.ndarray, size_a: int, size_b: int) -> float:
    tie_factor = tiecorrect(ranks)
    if tie_factor == 0:
        return 1.0
    sd = np.sqrt(tie_factor * size_a * size_b * (size_a + size_b + 1) / 12.0)
    z = (abs(u - size_a * size_b / 2.0) - 0.5) / sd
    return float(min(1.0, 2.0 * norm.sf(max(z, 0.0))))


def wilcoxon_rank_sum(
    a: SampleSet | Sequence[float],
    b: SampleSet | Sequence[float],
    alpha: float = ALPHA,
    exact: bool | None = None,
) -> RankSumResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney U) test.

    Ties receive mid-ranks. Combined sizes up to 20 use the exact
    permutation distribution, larger ones the tie-corrected normal
    approximation with continuity correction.

    Args:
        a: First sample, at least 2 values.
        b: Second sample, at least 2 values.
        alpha: Significance level.
        exact: Force (True) or forbid (False) the exact path.

    Returns:
        The RankSumResult; identical pooled values give p = 1.
    """
    x = _values(a)
    y = _values(b)
    if x.size < 2 or y.size < 2:
        raise ValueError("The rank-sum test needs at least 2 values per sample")
    ranks = rankdata(np.concatenate([x, y]))
    u = float(ranks[: x.size].sum() - x.size * (x.size + 1) / 2.0)
    use_exact = (x.size + y.size <= EXACT_LIMIT) if exact is None else exact
    if np.all(ranks == ranks[0]):
        pvalue = 1.0
    elif use_exact:
        pvalue = exact_rank_sum_pvalue(ranks, x.size)
    else:
        pvalue = _normal_pvalue(u, ranks, x.size, y.size)
    return RankSumResult(statistic=u, pvalue=pvalue, significant=pvalue < alpha, exact=use_exact)


class _Scored(Protocol):
    problem: str
    algorithm: str
    hypervolume: float


@dataclass(frozen=True)
class SummaryRow:
    """Aggregate of the runs of one algorithm on one problem.

    Attributes:
        problem: Problem identifier.
        algorithm: Algorithm identifier.
        runs: Number of runs.
        mean: Mean hypervolume.
        sd: Sample standard deviation (n-1 denominator).
        pvalue: Rank-sum p-value against the baseline, None for the
            baseline itself or when it is absent.
        significant: Whether pvalue < alpha.
        best: Whether this is the best mean on the problem.
    """

    problem: str
    algorithm: str
    runs: int
    mean: float
    sd: float
    pvalue: float | None
    significant: bool
    best: bool


def summarize(
    records: Iterable[_Scored], baseline: str = "NE-MOEA", alpha: float = ALPHA
) -> list[SummaryRow]:
    """Mean, sd and significance per (problem, algorithm).

    Args:
        records: Per-run results with problem, algorithm and hypervolume.
        baseline: Algorithm every other algorithm is tested against.
        alpha: Significance level.

    Returns:
        Rows ordered by problem (first appearance) then algorithm (first
        appearance); cells without records are absent.
    """
    cells: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for record in records:
        cells[record.problem][record.algorithm].append(float(record.hypervolume))
    rows: list[SummaryRow] = []
    for problem, by_algorithm in cells.items():
        for label, values in by_algorithm.items():
            if len(values) < 2:
                raise ValueError(
                    f"Need at least 2 runs per cell, '{label}' on '{problem}' has {len(values)}"
                )
        best_mean = max(float(np.mean(v)) for v in by_algorithm.values())
        reference = by_algorithm.get(baseline)
        for label, values in by_algorithm.items():
            pvalue = None
            significant = False
            if reference is not None and label != baseline:
                result = wilcoxon_rank_sum(
                    SampleSet(tuple(reference), baseline), SampleSet(tuple(values), label), alpha
                )
                pvalue, significant = result.pvalue, result.significant
            mean = float(np.mean(values))
            rows.append(
                SummaryRow(
                    problem=problem,
                    algorithm=label,
                    runs=len(values),
                    mean=mean,
                    sd=float(np.std(values, ddof=1)),
                    pvalue=pvalue,
                    significant=significant,
                    best=mean == best_mean,
                )
            )
    return rows
