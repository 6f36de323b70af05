"""Scaled query neighborhoods and the two ambiguity metrics.

A query's k nearest corpus neighbors (by cosine) are re-expressed as
relative scales: the i-th neighbor sits at Euclidean distance
d_i = d_0 * (1 + eps_i) from the query, so eps_i = d_i / d_0 - 1 and
eps_0 = 0. Selecting a scale keeps every neighbor with eps_i at or below
it; the persistence metrics are computed on the unit-normalized difference
vectors of the selected neighbors (the query itself is not a cloud point).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError
from .geometry import pairwise_distances
from .index import VectorIndex
from .persistence import lt_max_h1, rips_persistence, w1_h0

#: Scales spanning the sweep figures: 0.2, 0.4, ..., 3.0.
DEFAULT_EPSILON_GRID: tuple[float, ...] = tuple(round(0.2 * i, 10) for i in range(1, 16))

#: Retrieval depth used throughout the experiments.
DEFAULT_K = 50


@dataclass(frozen=True)
class QueryNeighborhood:
    query: np.ndarray
    vectors: np.ndarray  # (k, d), ranked by descending cosine similarity
    distances: np.ndarray  # (k,), non-decreasing Euclidean ||v_i - q||
    epsilons: np.ndarray  # (k,), d_i / d_0 - 1
    neighbor_ids: tuple[str, ...]

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class AmbiguityScore:
    epsilon: float
    w1_h0: float
    lt_max_h1: float
    points_used: int
    degenerate: bool = False


def build_neighborhood(query, index: VectorIndex, k: int) -> QueryNeighborhood:
    """Rank the top-k corpus neighbors of a query and attach relative scales.

    Ranking is by cosine similarity; recorded distances are Euclidean norms
    of the difference vectors. With unit-normalized corpus vectors the two
    orderings agree, so distances come out non-decreasing in rank.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(index) < k:
        warnings.warn(
            f"k={k} exceeds corpus size {len(index)}; truncating to {len(index)}",
            stacklevel=2,
        )
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    ranked, sims = index.search(q, k)
    vectors = index.vectors[ranked]
    distances = np.linalg.norm(vectors - q, axis=1)
    # Exact cosine ties (possible with non-unit corpus vectors) are reordered
    # by distance so the rank/distance invariant holds; the sort is stable.
    order = np.lexsort((np.arange(len(ranked)), distances, -sims))
    ranked, vectors, distances = ranked[order], vectors[order], distances[order]
    d0 = float(distances[0])
    if d0 <= 1e-15:
        raise DegenerateInputError(
            "nearest neighbor coincides with the query (zero distance), so the "
            "relative scale is undefined; deduplicate the corpus or drop the "
            "query from it"
        )
    epsilons = distances / d0 - 1.0
    ids = tuple(index.ids[i] for i in ranked)
    return QueryNeighborhood(
        query=q, vectors=vectors, distances=distances, epsilons=epsilons, neighbor_ids=ids
    )


def select_by_scale(nbhd: QueryNeighborhood, epsilon: float) -> np.ndarray:
    """Indices (rank order) of neighbors with eps_i <= epsilon.

    The rank-0 neighbor has eps_0 = 0 and is always included.
    """
    if epsilon < 0.0:
        raise ValueError("epsilon must be non-negative")
    count = int(np.searchsorted(nbhd.epsilons, epsilon, side="right"))
    return np.arange(max(count, 1))


def difference_cloud(nbhd: QueryNeighborhood, subset: Sequence[int]) -> np.ndarray:
    """Unit-normalized difference vectors (v_i - q) / ||v_i - q|| for the
    selected neighbors. The query is not part of the cloud."""
    idx = np.asarray(subset, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("subset must be non-empty")
    diffs = nbhd.vectors[idx] - nbhd.query
    norms = np.linalg.norm(diffs, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError("zero difference vector in neighborhood")
    return diffs / norms[:, None]


def score_neighborhood(nbhd: QueryNeighborhood, epsilon: float) -> AmbiguityScore:
    """Persistence metrics of the selected difference cloud at one scale.

    Fewer than two selected points cannot carry any topology; that case is
    reported as a degenerate (0, 0) score instead of an error so batch
    experiments keep running.
    """
    subset = select_by_scale(nbhd, epsilon)
    if subset.size < 2:
        return AmbiguityScore(epsilon, 0.0, 0.0, int(subset.size), degenerate=True)
    cloud = difference_cloud(nbhd, subset)
    diagram = rips_persistence(pairwise_distances(cloud))
    return AmbiguityScore(
        epsilon=epsilon,
        w1_h0=w1_h0(diagram),
        lt_max_h1=lt_max_h1(diagram),
        points_used=int(subset.size),
        degenerate=False,
    )


def ambiguity_score(query, index: VectorIndex, k: int, epsilon: float) -> AmbiguityScore:
    """build_neighborhood -> select_by_scale -> difference_cloud -> persistence."""
    return score_neighborhood(build_neighborhood(query, index, k), epsilon)


def ambiguity_profile(
    query, index: VectorIndex, k: int, epsilon_grid: Sequence[float]
) -> list[AmbiguityScore]:
    """One score per grid scale, over a single shared neighborhood.

    The grid must be ascending. Consecutive scales that select the same
    points necessarily yield the same metrics, so those are computed once.
    """
    grid = list(epsilon_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("epsilon grid must be sorted ascending")
    nbhd = build_neighborhood(query, index, k)
    return profile_neighborhood(nbhd, grid)


def profile_neighborhood(
    nbhd: QueryNeighborhood, epsilon_grid: Sequence[float]
) -> list[AmbiguityScore]:
    """Score an existing neighborhood along a grid, caching by point count."""
    cache: dict[int, AmbiguityScore] = {}
    scores: list[AmbiguityScore] = []
    for eps in epsilon_grid:
        count = int(select_by_scale(nbhd, eps).size)
        hit = cache.get(count)
        if hit is None:
            hit = cache[count] = score_neighborhood(nbhd, eps)
        scores.append(
            AmbiguityScore(
                epsilon=float(eps),
                w1_h0=hit.w1_h0,
                lt_max_h1=hit.lt_max_h1,
                points_used=hit.points_used,
                degenerate=hit.degenerate,
            )
        )
    return scores


SCORE_CSV_FIELDS = ("query_id", "epsilon", "w1_h0", "lt_max_h1", "points_used", "degenerate_flag")


def write_scores_csv(path, rows: Iterable[tuple[str, AmbiguityScore]]) -> None:
    """Batch result export: one line per (query, scale) score."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORE_CSV_FIELDS)
        for query_id, score in rows:
            writer.writerow(
                [
                    query_id,
                    repr(float(score.epsilon)),
                    repr(float(score.w1_h0)),
                    repr(float(score.lt_max_h1)),
                    score.points_used,
                    int(score.degenerate),
                ]
            )
