"""Topic-based query/corpus generators and metric sweeps.

Datapoints follow the linear-representation picture: a vocabulary of topic
directions lives in an embedding space, and every point is the normalized
sum of a sampled topic subset plus per-coordinate Gaussian noise. Three
scenarios probe the ambiguity regimes:

1. a query carrying a full parent topic set retrieves children whose topic
   sets are subsets of the query's (tight, local neighborhood);
2. a query carrying a child topic set retrieves parents, some sharing the
   query's lineage and the rest unrelated (unbounded neighborhood);
3. a scenario-1 query retrieves a mix of same-lineage children and children
   of other lineages (intermediate regime).

Trials are independent; per-trial seeds are spawned from a master
SeedSequence so runs are reproducible regardless of execution order or
parallelism.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed

from .geometry import normalize, orthonormal_columns, random_projection
from .index import VectorIndex
from .neighborhood import (
    DEFAULT_EPSILON_GRID,
    AmbiguityScore,
    build_neighborhood,
    profile_neighborhood,
    score_neighborhood,
)

#: (dim, topics, parent topics) grid used for the robustness table.
DIMENSION_GRID: tuple[tuple[int, int, int], ...] = ((64, 16, 12), (128, 32, 16), (256, 64, 32))


@dataclass(frozen=True)
class TopicVocabulary:
    """Topic direction vectors, one per row, all unit norm."""

    topics: np.ndarray  # (count, dim)
    binarized: bool

    @property
    def dimension(self) -> int:
        return self.topics.shape[1]

    @property
    def count(self) -> int:
        return self.topics.shape[0]

    def gram_stats(self) -> dict[str, float]:
        """Empirical off-diagonal Gram statistics.

        Binarized topics are far from orthogonal (pairwise cosine near 0.5);
        this reports how far, instead of asserting orthogonality.
        """
        gram = self.topics @ self.topics.T
        off = gram[~np.eye(self.count, dtype=bool)]
        return {
            "mean_abs_cosine": float(np.mean(np.abs(off))),
            "max_abs_cosine": float(np.max(np.abs(off))),
        }


def generate_vocabulary(n_topics: int, dim: int, seed, binarize: bool = True) -> TopicVocabulary:
    """Vocabulary of n_topics directions in R^dim, deterministic per seed.

    Starts from orthonormal columns (Gaussian matrix + QR). With
    binarize=True each column is thresholded at its median into a 0/1 mask
    and re-normalized; with binarize=False the raw orthonormal columns are
    kept.
    """
    q = orthonormal_columns(dim, n_topics, seed)
    if not binarize:
        return TopicVocabulary(topics=q.T.copy(), binarized=False)
    topics = np.empty((n_topics, dim), dtype=np.float64)
    for i in range(n_topics):
        col = q[:, i]
        mask = (col >= np.median(col)).astype(np.float64)
        topics[i] = mask / np.linalg.norm(mask)
    return TopicVocabulary(topics=topics, binarized=True)


@dataclass(frozen=True)
class ScenarioConfig:
    dim: int = 256
    n_topics: int = 64
    n_parent: int = 32
    n_child: int | None = None  # defaults to n_parent - 3 (see note below)
    sigma_noise: float = 0.1
    corpus_size: int = 50
    epsilon: float = 0.4
    seed: int = 0
    binarize_topics: bool = False
    lineage_ratio: float = 0.5  # scenario 2: fraction of corpus parents sharing the lineage
    mix_ratio: float = 0.5  # scenario 3: fraction of corpus children from the query lineage

    # n_child default: children omit three of the parent's topics. Near-complete
    # subsets are what give scenario 2 its extended distance spectrum (the
    # lineage parents sit close to the child query while unrelated parents sit
    # several times farther, so the neighborhood keeps acquiring points up to
    # scale ~2); small subsets collapse that spectrum and the scale structure
    # with it. Non-binarized topics are the default for the same reason: median
    # masks push every pairwise topic cosine toward 0.5, which compresses all
    # relative distances.
    def __post_init__(self):
        if self.n_child is None:
            object.__setattr__(self, "n_child", max(self.n_parent - 3, 1))
        if not (0 < self.n_child < self.n_parent <= self.n_topics <= self.dim):
            raise ValueError(
                "need 0 < n_child < n_parent <= n_topics <= dim, got "
                f"({self.n_child}, {self.n_parent}, {self.n_topics}, {self.dim})"
            )
        if self.corpus_size < 2:
            raise ValueError("corpus_size must be at least 2")
        if self.sigma_noise < 0:
            raise ValueError("sigma_noise must be non-negative")
        for name in ("lineage_ratio", "mix_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def to_json(self, **kwargs) -> str:
        return json.dumps(asdict(self), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class SimulatedPair:
    query: np.ndarray
    corpus: np.ndarray  # (corpus_size, dim)
    scenario: int
    query_topics: tuple[int, ...]
    corpus_topics: tuple[tuple[int, ...], ...]


def _sample_point(
    vocab: TopicVocabulary, pool: np.ndarray, k: int, sigma: float, rng: np.random.Generator
) -> tuple[np.ndarray, tuple[int, ...]]:
    chosen = rng.choice(pool, size=k, replace=False)
    x = vocab.topics[chosen].sum(axis=0)
    if sigma > 0:
        x = x + rng.normal(0.0, sigma, size=vocab.dimension)
    return normalize(x), tuple(int(t) for t in np.sort(chosen))


def generate_datapoints(
    k_topics: int,
    parent_topic_set: Sequence[int] | None,
    vocab: TopicVocabulary,
    n_points: int,
    sigma_noise: float,
    seed,
) -> np.ndarray:
    """(n_points, dim) points, each a normalized noisy sum of k_topics topics
    sampled without replacement from parent_topic_set (or the whole
    vocabulary when the set is empty/None)."""
    if parent_topic_set is not None and len(parent_topic_set) > 0:
        pool = np.asarray(sorted(parent_topic_set), dtype=np.intp)
    else:
        pool = np.arange(vocab.count, dtype=np.intp)
    if k_topics > pool.size:
        raise ValueError(f"k_topics={k_topics} exceeds the topic pool size {pool.size}")
    rng = np.random.default_rng(seed)
    points = np.empty((n_points, vocab.dimension), dtype=np.float64)
    for j in range(n_points):
        points[j], _ = _sample_point(vocab, pool, k_topics, sigma_noise, rng)
    return points


def sample_scenario(
    config: ScenarioConfig,
    scenario: int,
    vocab: TopicVocabulary | None = None,
    rng: np.random.Generator | None = None,
) -> SimulatedPair:
    """One (query, corpus) pair for a scenario.

    Without an explicit vocabulary/rng, both derive from config.seed.
    """
    if scenario not in (1, 2, 3):
        raise ValueError(f"scenario must be 1, 2 or 3, got {scenario}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if vocab is None:
        vocab = generate_vocabulary(config.n_topics, config.dim, rng, binarize=config.binarize_topics)
    sigma = config.sigma_noise
    all_topics = np.arange(config.n_topics, dtype=np.intp)
    corpus = np.empty((config.corpus_size, config.dim), dtype=np.float64)
    corpus_topics: list[tuple[int, ...]] = []

    if scenario in (1, 3):
        parent_set = rng.choice(all_topics, size=config.n_parent, replace=False)
        query, query_topics = _sample_point(vocab, parent_set, config.n_parent, sigma, rng)
        n_same = (
            config.corpus_size
            if scenario == 1
            else int(round(config.mix_ratio * config.corpus_size))
        )
        for j in range(config.corpus_size):
            pool = parent_set if j < n_same else all_topics
            corpus[j], topics = _sample_point(vocab, pool, config.n_child, sigma, rng)
            corpus_topics.append(topics)
    else:  # scenario 2
        lineage = rng.choice(all_topics, size=config.n_parent, replace=False)
        query, query_topics = _sample_point(vocab, lineage, config.n_child, sigma, rng)
        n_lineage = int(round(config.lineage_ratio * config.corpus_size))
        for j in range(config.corpus_size):
            pool = lineage if j < n_lineage else all_topics
            corpus[j], topics = _sample_point(vocab, pool, config.n_parent, sigma, rng)
            corpus_topics.append(topics)

    return SimulatedPair(
        query=query,
        corpus=corpus,
        scenario=scenario,
        query_topics=query_topics,
        corpus_topics=tuple(corpus_topics),
    )


@dataclass(frozen=True)
class TrialScore:
    trial: int
    scenario: int
    score: AmbiguityScore


@dataclass
class SimulationResult:
    config: ScenarioConfig
    scenario: int
    trials: list[TrialScore] = field(default_factory=list)

    def metric(self, name: str) -> np.ndarray:
        return np.array([getattr(t.score, name) for t in self.trials], dtype=np.float64)

    def summary(self) -> dict:
        out: dict = {"scenario": self.scenario, "n_trials": len(self.trials)}
        for name in ("w1_h0", "lt_max_h1"):
            out[name] = summarize(self.metric(name))
        return out


def summarize(values: np.ndarray) -> dict[str, float]:
    """Mean and quartiles of a metric sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return {"mean": 0.0, "q25": 0.0, "median": 0.0, "q75": 0.0}
    q25, q50, q75 = np.percentile(values, [25, 50, 75])
    return {
        "mean": float(np.mean(values)),
        "q25": float(q25),
        "median": float(q50),
        "q75": float(q75),
    }


def _trial_seeds(master_seed: int, n_trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(n_trials)


def _trial_pair(config: ScenarioConfig, scenario: int, seed) -> SimulatedPair:
    rng = np.random.default_rng(seed)
    vocab = generate_vocabulary(config.n_topics, config.dim, rng, binarize=config.binarize_topics)
    return sample_scenario(config, scenario, vocab=vocab, rng=rng)


def _score_trial(config: ScenarioConfig, scenario: int, seed) -> AmbiguityScore:
    pair = _trial_pair(config, scenario, seed)
    index = VectorIndex(pair.corpus)
    nbhd = build_neighborhood(pair.query, index, k=config.corpus_size)
    return score_neighborhood(nbhd, config.epsilon)


def _profile_trial(
    config: ScenarioConfig, scenario: int, grid: tuple[float, ...], seed
) -> list[AmbiguityScore]:
    pair = _trial_pair(config, scenario, seed)
    nbhd = build_neighborhood(pair.query, VectorIndex(pair.corpus), k=config.corpus_size)
    return profile_neighborhood(nbhd, grid)


def _projection_trial(
    config: ScenarioConfig, scenario: int, dims: tuple[int, ...], seed
) -> dict[int, AmbiguityScore]:
    rng = np.random.default_rng(seed)
    pair = _trial_pair(config, scenario, rng)
    out: dict[int, AmbiguityScore] = {}
    nbhd = build_neighborhood(pair.query, VectorIndex(pair.corpus), k=config.corpus_size)
    out[config.dim] = score_neighborhood(nbhd, config.epsilon)
    for dim in dims:
        stacked = np.vstack([pair.query[None, :], pair.corpus])
        projected = random_projection(stacked, dim, rng)
        nbhd_p = build_neighborhood(projected[0], VectorIndex(projected[1:]), k=config.corpus_size)
        out[dim] = score_neighborhood(nbhd_p, config.epsilon)
    return out


def _parallel_map(fn, argtuples: list[tuple], jobs: int) -> list:
    if jobs == 1:
        return [fn(*args) for args in argtuples]
    return Parallel(n_jobs=jobs)(delayed(fn)(*args) for args in argtuples)


def run_simulation(
    config: ScenarioConfig, scenario: int, n_trials: int, jobs: int = 1
) -> SimulationResult:
    """Scores of n_trials independent trials at the configured scale.

    Each trial draws a fresh vocabulary and pair, indexes the corpus and
    scores the query with k = corpus_size.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    args = [(config, scenario, seed) for seed in _trial_seeds(config.seed, n_trials)]
    scores = _parallel_map(_score_trial, args, jobs)
    result = SimulationResult(config=config, scenario=scenario)
    result.trials = [TrialScore(i, scenario, s) for i, s in enumerate(scores)]
    return result


@dataclass
class SweepResult:
    config: ScenarioConfig
    scenario: int
    epsilon_grid: tuple[float, ...]
    profiles: list[list[AmbiguityScore]]  # [trial][grid position]

    def curve(self, name: str) -> dict[str, np.ndarray]:
        """Per-scale mean and 25-75% band of one metric across trials."""
        values = np.array(
            [[getattr(s, name) for s in profile] for profile in self.profiles], dtype=np.float64
        )
        q25, q75 = np.percentile(values, [25, 75], axis=0)
        return {
            "epsilon": np.asarray(self.epsilon_grid),
            "mean": values.mean(axis=0),
            "q25": q25,
            "q75": q75,
        }


def epsilon_sweep(
    config: ScenarioConfig,
    scenario: int,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILON_GRID,
    n_trials: int = 200,
    jobs: int = 1,
) -> SweepResult:
    """Metric profiles along an ascending scale grid, one per trial."""
    grid = tuple(float(e) for e in epsilon_grid)
    if not grid:
        raise ValueError("epsilon grid must be non-empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("epsilon grid must be sorted ascending")
    args = [(config, scenario, grid, seed) for seed in _trial_seeds(config.seed, n_trials)]
    profiles = _parallel_map(_profile_trial, args, jobs)
    return SweepResult(config=config, scenario=scenario, epsilon_grid=grid, profiles=profiles)


@dataclass
class ProjectionResult:
    config: ScenarioConfig
    scenario: int
    by_dim: dict[int, list[AmbiguityScore]]  # native dim included as baseline

    def summary(self) -> dict[int, dict]:
        out = {}
        for dim in sorted(self.by_dim, reverse=True):
            scores = self.by_dim[dim]
            out[dim] = {
                "w1_h0": summarize(np.array([s.w1_h0 for s in scores])),
                "lt_max_h1": summarize(np.array([s.lt_max_h1 for s in scores])),
            }
        return out


def projection_robustness(
    config: ScenarioConfig,
    scenario: int,
    target_dims: Sequence[int],
    n_trials: int = 200,
    jobs: int = 1,
) -> ProjectionResult:
    """Score stability under joint random projection of query and corpus.

    Per trial the same pair is scored at the native dimension and after
    projection to each target dimension (one fresh projection matrix per
    trial and dimension), giving paired comparisons per dim.
    """
    dims = tuple(int(d) for d in target_dims)
    for dim in dims:
        if dim >= config.dim:
            raise ValueError(f"target dim {dim} must be below the native dim {config.dim}")
    args = [(config, scenario, dims, seed) for seed in _trial_seeds(config.seed, n_trials)]
    per_trial = _parallel_map(_projection_trial, args, jobs)
    by_dim: dict[int, list[AmbiguityScore]] = {d: [] for d in (config.dim, *dims)}
    for trial in per_trial:
        for dim, score in trial.items():
            by_dim[dim].append(score)
    return ProjectionResult(config=config, scenario=scenario, by_dim=by_dim)


def dimension_sweep(
    configs: Sequence[ScenarioConfig] | None = None, n_trials: int = 200, jobs: int = 1
) -> list[dict]:
    """Both scenarios across a grid of (dim, topics, parents) configurations.

    Defaults to the standard robustness grid with sigma 0.1 and scale 0.4.
    Returns one summary row per (config, scenario).
    """
    if configs is None:
        configs = [
            ScenarioConfig(dim=d, n_topics=n, n_parent=p, sigma_noise=0.1, epsilon=0.4, seed=7 * i)
            for i, (d, n, p) in enumerate(DIMENSION_GRID)
        ]
    rows: list[dict] = []
    for config in configs:
        for scenario in (1, 2):
            result = run_simulation(config, scenario, n_trials, jobs=jobs)
            rows.append(
                {
                    "dim": config.dim,
                    "n_topics": config.n_topics,
                    "n_parent": config.n_parent,
                    "scenario": scenario,
                    "w1_h0": summarize(result.metric("w1_h0")),
                    "lt_max_h1": summarize(result.metric("lt_max_h1")),
                }
            )
    return rows


SIM_CSV_FIELDS = ("trial_id", "scenario", "epsilon", "w1_h0", "lt_max_h1")


def write_trials_csv(path, rows: Iterable[tuple[int, int, AmbiguityScore]]) -> None:
    """Per-trial CSV: rows of (trial_id, scenario, score)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SIM_CSV_FIELDS)
        for trial_id, scenario, score in rows:
            writer.writerow(
                [
                    trial_id,
                    scenario,
                    repr(float(score.epsilon)),
                    repr(float(score.w1_h0)),
                    repr(float(score.lt_max_h1)),
                ]
            )
