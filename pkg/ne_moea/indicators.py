from __future__ import annotations
from dataclasses import dataclass
from typing import Sequence
import numpy as np

from ne_moea.core import ConfigError, RandomSource, UnsupportedDimensionError

REFERENCE_POINT = (0.0, 0.0)
_MC_CHUNK = 100_000


def _as_points(points, ref) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=float)
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        points = points.reshape(0, ref.shape[0])
    return points, ref


def hypervolume_2d(points, ref: Sequence[float] = REFERENCE_POINT) -> float:
    """Exact area dominated by a bi-objective point set (maximization).

    Points are swept in decreasing order of the first objective; each point
    adds the strip between its second objective and the best second
    objective seen so far. Points not above the reference point in both
    objectives are dropped.

    Args:
        points: (count, 2) objective vectors.
        ref: Reference point, dominated by every scored point.

    Returns:
        The hypervolume.

    Raises:
        UnsupportedDimensionError if the points are not bi-objective.
    """
    points, ref = _as_points(points, ref)
    if ref.shape != (2,) or points.shape[1] != 2:
        raise UnsupportedDimensionError(
            f"Exact hypervolume is implemented for m=2, got m={points.shape[1]}"
        )
    points = points[np.all(points >= ref, axis=1)]
    if points.shape[0] == 0:
        return 0.0
    order = np.lexsort((-points[:, 1], -points[:, 0]))
    x = points[order, 0] - ref[0]
    y = points[order, 1] - ref[1]
    covered = np.concatenate([[0.0], np.maximum.accumulate(y)[:-1]])
    return float(np.sum(x * np.maximum(y - covered, 0.0)))


def hypervolume_contributions_2d(
    points, ref: Sequence[float] = REFERENCE_POINT
) -> np.ndarray:
    """Exclusive hypervolume contribution of each point of a 2-D front.

    The points must be mutually non-dominated. Sorted by the first objective,
    a point's contribution is the rectangle between its neighbors (or the
    reference point at the ends). Duplicated points contribute zero.

    Args:
        points: (count, 2) mutually non-dominated objective vectors.
        ref: Reference point.

    Returns:
        Contributions in input order.
    """
    points, ref = _as_points(points, ref)
    if ref.shape != (2,) or points.shape[1] != 2:
        raise UnsupportedDimensionError(
            f"Hypervolume contributions are implemented for m=2, got m={points.shape[1]}"
        )
    count = points.shape[0]
    if count == 0:
        return np.zeros(0)
    order = np.lexsort((-points[:, 1], points[:, 0]))
    x = points[order, 0]
    y = points[order, 1]
    left = np.concatenate([[ref[0]], x[:-1]])
    below = np.concatenate([y[1:], [ref[1]]])
    width = np.maximum(x - np.maximum(left, ref[0]), 0.0)
    height = np.maximum(y - np.maximum(below, ref[1]), 0.0)
    contributions = np.empty(count)
    contributions[order] = width * height
    return contributions


def hypervolume_mc(
    points, ref: Sequence[float], samples: int, rng: RandomSource
) -> tuple[float, float]:
    """Monte-Carlo estimate of the dominated volume, any m >= 2.

    Samples are drawn uniformly in the box spanned by the reference point and
    the per-objective maxima; the estimate is the dominated fraction times the
    box volume.

    Args:
        points: (count, m) objective vectors.
        ref: Reference point.
        samples: Number of uniform samples.
        rng: Source of randomness.

    Returns:
        (estimate, standard error).
    """
    if samples < 1:
        raise ConfigError(f"Monte-Carlo estimation needs at least one sample, got {samples}")
    points, ref = _as_points(points, ref)
    points = points[np.all(points >= ref, axis=1)]
    if points.shape[0] == 0:
        return 0.0, 0.0
    upper = points.max(axis=0)
    volume = float(np.prod(upper - ref))
    if volume == 0.0:
        return 0.0, 0.0
    if points.shape[1] == 2:
        # Staircase: best second objective among points at or right of u
        order = np.argsort(points[:, 0], kind="stable")
        xs = points[order, 0]
        reach = np.maximum.accumulate(points[order, 1][::-1])[::-1]
    hits = 0
    remaining = samples
    while remaining > 0:
        chunk = min(remaining, _MC_CHUNK)
        draws = ref + rng.random((chunk, ref.shape[0])) * (upper - ref)
        if points.shape[1] == 2:
            first = np.searchsorted(xs, draws[:, 0], side="left")
            inside = first < xs.shape[0]
            dominated = np.zeros(chunk, dtype=bool)
            dominated[inside] = draws[inside, 1] <= reach[first[inside]]
        else:
            dominated = np.zeros(chunk, dtype=bool)
            for point in points:
                dominated |= np.all(draws <= point, axis=1)
        hits += int(dominated.sum())
        remaining -= chunk
    fraction = hits / samples
    error = volume * np.sqrt(fraction * (1.0 - fraction) / samples)
    return volume * fraction, float(error)


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-objective positive divisors used before scoring.

    Attributes:
        scales: One strictly positive divisor per objective.
    """

    scales: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(not np.isfinite(s) or s <= 0 for s in self.scales):
            raise ConfigError(f"Normalization scales must be positive, got {self.scales}")

    @classmethod
    def identity(cls, m: int) -> NormalizationSpec:
        return cls(tuple([1.0] * m))

    @classmethod
    def from_maxima(cls, point_sets: Sequence[np.ndarray]) -> NormalizationSpec:
        """Scales by the per-objective maximum over the union of point sets.

        Objectives whose maximum is not positive keep a scale of 1.
        """
        stacked = np.concatenate([np.asarray(p, dtype=float) for p in point_sets if len(p)])
        maxima = stacked.max(axis=0)
        return cls(tuple(float(v) if v > 0 else 1.0 for v in maxima))


def normalize(points, spec: NormalizationSpec) -> np.ndarray:
    """Divides each objective by its scale."""
    points = np.asarray(points, dtype=float)
    scales = np.asarray(spec.scales, dtype=float)
    if points.size == 0:
        return points.reshape(0, scales.shape[0])
    return points / scales
