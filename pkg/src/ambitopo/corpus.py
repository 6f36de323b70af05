"""Real-corpus pipeline: chunking, embedding, retrieval experiment, calibration.

Documents are split into contiguous, non-overlapping token windows at a
chosen granularity; chunks are embedded (by a deterministic offline mock or
an external HTTP service), unit-normalized and indexed for exact cosine
search. The bidirectional experiment scores every chunk of one granularity
as a query against the corpus at the other granularity, keeping only
queries whose top hit nests with them (same document, one token span
containing the other).
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError, DimensionMismatchError, EmbedderError
from .index import VectorIndex
from .neighborhood import (
    DEFAULT_EPSILON_GRID,
    DEFAULT_K,
    AmbiguityScore,
    ambiguity_score,
    build_neighborhood,
    profile_neighborhood,
)
from .simulation import summarize

Tokenizer = Callable[[str], list[str]]


def whitespace_tokenizer(text: str) -> list[str]:
    return text.split()


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    chunk_id: str
    token_span: tuple[int, int]  # [start, end) in token indices
    text: str

    @property
    def n_tokens(self) -> int:
        return self.token_span[1] - self.token_span[0]


@dataclass(frozen=True)
class ChunkSet:
    granularity: int  # tokens per chunk (last chunk of a document may be shorter)
    chunks: tuple[Chunk, ...]

    def __len__(self) -> int:
        return len(self.chunks)


def chunk_text(text: str, granularity: int, tokenizer: Tokenizer | None = None, doc_id: str = "doc") -> ChunkSet:
    """Split one document into contiguous non-overlapping token windows.

    Every chunk except possibly the last holds exactly `granularity` tokens;
    the union of spans covers the token sequence, so re-joining chunk texts
    reproduces the tokenized document.
    """
    if granularity < 1:
        raise ValueError("granularity must be at least one token")
    tokens = (tokenizer or whitespace_tokenizer)(text)
    if not tokens:
        raise DegenerateInputError(f"document {doc_id!r} has no tokens")
    chunks = []
    for start in range(0, len(tokens), granularity):
        end = min(start + granularity, len(tokens))
        chunks.append(
            Chunk(
                doc_id=doc_id,
                chunk_id=f"{doc_id}:{start}-{end}",
                token_span=(start, end),
                text=" ".join(tokens[start:end]),
            )
        )
    return ChunkSet(granularity=granularity, chunks=tuple(chunks))


def chunk_documents(
    documents: Mapping[str, str], granularity: int, tokenizer: Tokenizer | None = None
) -> ChunkSet:
    """Chunk a whole corpus; documents are processed in sorted doc_id order."""
    chunks: list[Chunk] = []
    for doc_id in sorted(documents):
        chunks.extend(chunk_text(documents[doc_id], granularity, tokenizer, doc_id=doc_id).chunks)
    return ChunkSet(granularity=granularity, chunks=tuple(chunks))


def load_corpus_dir(path) -> dict[str, str]:
    """Plain-text corpus: one document per file, doc_id = file stem."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    docs: dict[str, str] = {}
    for file in sorted(p for p in root.iterdir() if p.is_file()):
        docs[file.stem] = file.read_text(encoding="utf-8")
    if not docs:
        raise DegenerateInputError(f"corpus directory {root} contains no files")
    return docs


class MockEmbedder:
    """Deterministic offline embedder: hashed bag of tokens.

    Each distinct token deterministically seeds a Gaussian direction in R^dim
    (keyed by a salted blake2b digest of the token), and a text embeds as the
    count-weighted sum of its token directions, unit-normalized. Identical
    texts embed identically across runs and machines; texts with disjoint
    vocabularies come out near-orthogonal.
    """

    def __init__(self, dim: int = 256, seed: int = 0, tokenizer: Tokenizer | None = None):
        if dim < 2:
            raise ValueError("dim must be at least 2")
        self.dim = dim
        self.seed = seed
        self.model_tag = f"mock-{dim}d-s{seed}"
        self._tokenizer = tokenizer or whitespace_tokenizer
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, salt=str(self.seed).encode()[:16]
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            vec = rng.standard_normal(self.dim)
            self._token_cache[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            tokens = self._tokenizer(text)
            if not tokens:
                raise DegenerateInputError("cannot embed empty text")
            acc = np.zeros(self.dim)
            for token in tokens:
                acc += self._token_vector(token)
            norm = np.linalg.norm(acc)
            if norm == 0.0:
                raise DegenerateInputError("token vectors cancelled to zero")
            out[i] = acc / norm
        return out


class ServiceEmbedder:
    """Thin client for an external embedding service.

    POSTs {"model": ..., "input": [texts]} and expects
    {"data": [{"embedding": [...]}, ...]} in input order. Batches requests,
    retries transient failures with exponential backoff, and caches every
    response line-by-line in a JSONL file so experiments re-run offline.
    """

    RETRY_STATUSES = (429, 500, 502, 503, 504)

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        model: str = "default",
        batch_size: int = 32,
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        cache_path=None,
        session=None,
    ):
        if not endpoint:
            raise ValueError("endpoint must be a non-empty URL")
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.model_tag = f"service-{model}"
        self.batch_size = batch_size
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.cache_path = Path(cache_path) if cache_path else None
        if session is None:
            import requests

            session = requests.Session()
        self._session = session
        self._cache: dict[str, list[float]] = {}
        if self.cache_path and self.cache_path.exists():
            with open(self.cache_path) as fh:
                for line in fh:
                    record = json.loads(line)
                    self._cache[record["key"]] = record["vector"]

    @classmethod
    def from_env(cls, **overrides) -> "ServiceEmbedder":
        """Configuration from AMBITOPO_EMBED_* environment variables."""
        endpoint = os.environ.get("AMBITOPO_EMBED_ENDPOINT")
        if not endpoint:
            raise EmbedderError(
                "AMBITOPO_EMBED_ENDPOINT is not set; the service embedder needs an endpoint URL"
            )
        kwargs = dict(
            endpoint=endpoint,
            api_key=os.environ.get("AMBITOPO_EMBED_API_KEY"),
            model=os.environ.get("AMBITOPO_EMBED_MODEL", "default"),
            batch_size=int(os.environ.get("AMBITOPO_EMBED_BATCH_SIZE", "32")),
            cache_path=os.environ.get("AMBITOPO_EMBED_CACHE") or None,
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def _key(self, text: str) -> str:
        return hashlib.sha256(f"{self.model}\n{text}".encode("utf-8")).hexdigest()

    def _post_batch(self, batch: list[str]) -> list[list[float]]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"model": self.model, "input": batch}
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                response = self._session.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except Exception as exc:  # connection-level failure, retryable
                last_error = exc
                continue
            if response.status_code in self.RETRY_STATUSES:
                last_error = EmbedderError(f"service returned HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise EmbedderError(f"embedding service failed with HTTP {response.status_code}")
            body = response.json()
            vectors = [item["embedding"] for item in body["data"]]
            if len(vectors) != len(batch):
                raise EmbedderError(
                    f"service returned {len(vectors)} embeddings for {len(batch)} inputs"
                )
            return vectors
        raise EmbedderError(f"embedding service unreachable after {self.max_retries + 1} attempts: {last_error}")

    def _append_cache(self, items: Iterable[tuple[str, list[float]]]) -> None:
        if not self.cache_path:
            return
        self.cache_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.cache_path, "a") as fh:
            for key, vector in items:
                fh.write(json.dumps({"key": key, "vector": vector}) + "\n")

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        keys = [self._key(t) for t in texts]
        missing = [i for i, k in enumerate(keys) if k not in self._cache]
        for batch_start in range(0, len(missing), self.batch_size):
            idx = missing[batch_start : batch_start + self.batch_size]
            vectors = self._post_batch([texts[i] for i in idx])
            fresh = [(keys[i], vec) for i, vec in zip(idx, vectors)]
            for key, vec in fresh:
                self._cache[key] = vec
            self._append_cache(fresh)
        rows = [self._cache[k] for k in keys]
        dims = {len(r) for r in rows}
        if len(dims) > 1:
            raise EmbedderError(f"dimension drift across batches: {sorted(dims)}")
        return np.asarray(rows, dtype=np.float64)


def get_embedder(spec: str, dim: int = 256, seed: int = 0, cache_path=None):
    """Embedder factory for the CLI: 'mock' or 'service'."""
    if spec == "mock":
        return MockEmbedder(dim=dim, seed=seed)
    if spec == "service":
        return ServiceEmbedder.from_env(**({"cache_path": cache_path} if cache_path else {}))
    raise ValueError(f"unknown embedder {spec!r} (expected 'mock' or 'service')")


@dataclass(frozen=True)
class EmbeddingRecord:
    chunk: Chunk
    vector: np.ndarray  # unit norm
    model_tag: str

    def __post_init__(self):
        norm = float(np.linalg.norm(self.vector))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"embedding record vector has norm {norm}, expected 1")


def embed_chunks(chunks, embedder, batch_size: int = 64) -> list[EmbeddingRecord]:
    """One unit-norm record per chunk; batched through the embedder."""
    chunk_list = list(chunks.chunks if isinstance(chunks, ChunkSet) else chunks)
    if not chunk_list:
        raise DegenerateInputError("no chunks to embed")
    for chunk in chunk_list:
        if not chunk.text.strip():
            raise DegenerateInputError(f"chunk {chunk.chunk_id} has empty text")
    records: list[EmbeddingRecord] = []
    dim: int | None = None
    for start in range(0, len(chunk_list), batch_size):
        batch = chunk_list[start : start + batch_size]
        vectors = np.asarray(embedder.embed([c.text for c in batch]), dtype=np.float64)
        if dim is None:
            dim = vectors.shape[1]
        elif vectors.shape[1] != dim:
            raise EmbedderError(
                f"dimension drift across batches: got {vectors.shape[1]}, expected {dim}"
            )
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            raise DegenerateInputError("embedder returned a zero vector")
        vectors = vectors / norms[:, None]
        for chunk, vec in zip(batch, vectors):
            records.append(EmbeddingRecord(chunk=chunk, vector=vec, model_tag=embedder.model_tag))
    return records


def build_index(records: Sequence[EmbeddingRecord]) -> VectorIndex:
    """Exact cosine index over embedding records (ids = chunk ids)."""
    if not records:
        raise DegenerateInputError("cannot index zero records")
    dims = {r.vector.shape[0] for r in records}
    if len(dims) > 1:
        raise DimensionMismatchError(f"records have mixed dimensions: {sorted(dims)}")
    matrix = np.stack([r.vector for r in records])
    return VectorIndex(matrix, ids=[r.chunk.chunk_id for r in records], payloads=records)


JSONL_FIELDS = ("doc_id", "chunk_id", "token_start", "token_end", "model_tag", "vector")


def write_embeddings_jsonl(path, records: Sequence[EmbeddingRecord]) -> None:
    """One record per line: {doc_id, chunk_id, token_start, token_end, model_tag, vector}."""
    with open(path, "w") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "doc_id": r.chunk.doc_id,
                        "chunk_id": r.chunk.chunk_id,
                        "token_start": r.chunk.token_span[0],
                        "token_end": r.chunk.token_span[1],
                        "model_tag": r.model_tag,
                        "vector": [float(x) for x in r.vector],
                    }
                )
                + "\n"
            )


def read_embeddings_jsonl(path) -> list[EmbeddingRecord]:
    """Load records written by write_embeddings_jsonl.

    Chunk texts are not part of the wire format; loaded chunks carry empty
    text but full spans, which is all the experiment needs.
    """
    records: list[EmbeddingRecord] = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            chunk = Chunk(
                doc_id=obj["doc_id"],
                chunk_id=obj["chunk_id"],
                token_span=(int(obj["token_start"]), int(obj["token_end"])),
                text="",
            )
            vector = np.asarray(obj["vector"], dtype=np.float64)
            norm = np.linalg.norm(vector)
            if norm == 0.0:
                raise DegenerateInputError(f"zero vector for chunk {chunk.chunk_id}")
            records.append(
                EmbeddingRecord(chunk=chunk, vector=vector / norm, model_tag=obj["model_tag"])
            )
    if not records:
        raise DegenerateInputError(f"no records in {path}")
    return records


def containment_check(query: Chunk, top: Chunk) -> bool:
    """True iff both chunks are from the same document and one token span
    contains the other."""
    if query.doc_id != top.doc_id:
        return False
    (qs, qe), (ts, te) = query.token_span, top.token_span
    return (qs <= ts and te <= qe) or (ts <= qs and qe <= te)


@dataclass
class QueryProfile:
    query_id: str
    scores: list[AmbiguityScore]


@dataclass
class ExperimentResult:
    direction: str
    epsilon_grid: tuple[float, ...]
    profiles: list[QueryProfile] = field(default_factory=list)
    skipped: dict[str, int] = field(default_factory=dict)

    @property
    def n_queries(self) -> int:
        return len(self.profiles)

    def metric_at(self, epsilon: float, name: str) -> np.ndarray:
        pos = self.epsilon_grid.index(epsilon)
        return np.array([getattr(p.scores[pos], name) for p in self.profiles])

    def summary(self) -> list[dict]:
        rows = []
        for i, eps in enumerate(self.epsilon_grid):
            rows.append(
                {
                    "direction": self.direction,
                    "epsilon": eps,
                    "n_queries": self.n_queries,
                    "w1_h0": summarize(np.array([p.scores[i].w1_h0 for p in self.profiles])),
                    "lt_max_h1": summarize(
                        np.array([p.scores[i].lt_max_h1 for p in self.profiles])
                    ),
                }
            )
        return rows


def _as_records(source, embedder, batch_size: int) -> list[EmbeddingRecord]:
    if isinstance(source, ChunkSet):
        return embed_chunks(source, embedder, batch_size=batch_size)
    return list(source)


def _experiment_query(
    record: EmbeddingRecord, index: VectorIndex, k: int, grid: tuple[float, ...]
):
    """One query against a read-only index: (profile | None, skip reason | None)."""
    try:
        nbhd = build_neighborhood(record.vector, index, k=k)
    except DegenerateInputError:
        return None, "zero_distance"
    top = index.payloads[index.ids.index(nbhd.neighbor_ids[0])]
    if not containment_check(record.chunk, top.chunk):
        return None, "containment"
    profile = QueryProfile(
        query_id=record.chunk.chunk_id, scores=profile_neighborhood(nbhd, grid)
    )
    return profile, None


def retrieval_experiment(
    queries,
    corpus,
    embedder=None,
    k: int = DEFAULT_K,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILON_GRID,
    direction: str | None = None,
    batch_size: int = 64,
    jobs: int = 1,
) -> ExperimentResult:
    """Score every query chunk against the corpus at each neighborhood scale.

    `queries` and `corpus` are ChunkSets (embedded here) or pre-embedded
    record lists. A query enters the result only if its top retrieved chunk
    nests with it (containment filter); queries that duplicate a corpus
    chunk exactly (zero nearest distance) are skipped rather than aborting
    the batch. Queries are independent; jobs > 1 maps them in parallel over
    the read-only index.
    """
    grid = tuple(float(e) for e in epsilon_grid)
    query_records = _as_records(queries, embedder, batch_size)
    corpus_records = _as_records(corpus, embedder, batch_size)
    if query_records[0].vector.shape[0] != corpus_records[0].vector.shape[0]:
        raise DimensionMismatchError(
            f"query dimension {query_records[0].vector.shape[0]} != "
            f"corpus dimension {corpus_records[0].vector.shape[0]}"
        )
    index = build_index(corpus_records)
    if len(index) < 2:
        raise DegenerateInputError("corpus must hold at least two chunks")
    k_eff = min(k, len(index))
    if direction is None:
        qg = int(np.median([r.chunk.n_tokens for r in query_records]))
        cg = int(np.median([r.chunk.n_tokens for r in corpus_records]))
        direction = f"Q{qg}_C{cg}"
    result = ExperimentResult(direction=direction, epsilon_grid=grid)
    if jobs == 1:
        outcomes = [_experiment_query(r, index, k_eff, grid) for r in query_records]
    else:
        from joblib import Parallel, delayed

        outcomes = Parallel(n_jobs=jobs)(
            delayed(_experiment_query)(r, index, k_eff, grid) for r in query_records
        )
    skipped: dict[str, int] = {}
    for profile, reason in outcomes:
        if profile is not None:
            result.profiles.append(profile)
        else:
            skipped[reason] = skipped.get(reason, 0) + 1
    result.skipped = skipped
    return result


def bidirectional_experiment(
    fine: ChunkSet,
    coarse: ChunkSet,
    embedder,
    k: int = DEFAULT_K,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILON_GRID,
    batch_size: int = 64,
    jobs: int = 1,
) -> dict[str, ExperimentResult]:
    """Both (query; corpus) pairings of a two-granularity chunking.

    Returns {"coarse_to_fine": ..., "fine_to_coarse": ...}: coarse queries
    over the fine corpus and vice versa. Embeddings are computed once per
    granularity and reused.
    """
    fine_records = embed_chunks(fine, embedder, batch_size=batch_size)
    coarse_records = embed_chunks(coarse, embedder, batch_size=batch_size)
    return {
        "coarse_to_fine": retrieval_experiment(
            coarse_records,
            fine_records,
            k=k,
            epsilon_grid=epsilon_grid,
            direction=f"Q{coarse.granularity}_C{fine.granularity}",
            jobs=jobs,
        ),
        "fine_to_coarse": retrieval_experiment(
            fine_records,
            coarse_records,
            k=k,
            epsilon_grid=epsilon_grid,
            direction=f"Q{fine.granularity}_C{coarse.granularity}",
            jobs=jobs,
        ),
    }


@dataclass
class CalibrationBaseline:
    cluster_count: int
    epsilon: float
    cluster_sizes: tuple[int, ...]
    multi_factual: list[AmbiguityScore]
    single_cluster: list[AmbiguityScore]

    def summary(self) -> dict:
        return {
            "cluster_count": self.cluster_count,
            "epsilon": self.epsilon,
            "cluster_sizes": list(self.cluster_sizes),
            "multi_factual": {
                "w1_h0": summarize(np.array([s.w1_h0 for s in self.multi_factual])),
                "lt_max_h1": summarize(np.array([s.lt_max_h1 for s in self.multi_factual])),
            },
            "single_cluster": {
                "w1_h0": summarize(np.array([s.w1_h0 for s in self.single_cluster])),
                "lt_max_h1": summarize(np.array([s.lt_max_h1 for s in self.single_cluster])),
            },
        }


def calibrate(
    corpus,
    embedder,
    cluster_count: int,
    queries_per_kind: int = 20,
    chunks_per_query: int | None = None,
    epsilon: float = 0.4,
    k: int = DEFAULT_K,
    seed: int = 0,
    batch_size: int = 64,
) -> CalibrationBaseline:
    """Corpus-specific ambiguity baselines from synthetic queries.

    Clusters the corpus embeddings (k-means on unit vectors, fixed seed),
    builds multi-factual queries by concatenating sampled chunks from
    distinct clusters and single-cluster queries by concatenating the same
    number of chunks from one cluster, then scores both kinds against the
    corpus at the given scale.
    """
    from sklearn.cluster import KMeans

    records = _as_records(corpus, embedder, batch_size)
    if cluster_count < 1:
        raise ValueError("cluster_count must be positive")
    if cluster_count > len(records):
        raise ValueError(
            f"cluster_count {cluster_count} exceeds corpus size {len(records)}"
        )
    matrix = np.stack([r.vector for r in records])
    labels = KMeans(n_clusters=cluster_count, n_init=10, random_state=seed).fit_predict(matrix)
    members: list[np.ndarray] = [np.flatnonzero(labels == c) for c in range(cluster_count)]
    if any(m.size == 0 for m in members):  # k-means can in principle strand a centroid
        members = [m for m in members if m.size > 0]
    index = build_index(records)
    k_eff = min(k, len(index))
    per_query = chunks_per_query or max(2, min(3, len(members)))
    rng = np.random.default_rng(seed)

    def sample_query(cluster_ids: np.ndarray) -> str:
        parts = []
        for c in cluster_ids:
            pick = int(rng.choice(members[c]))
            parts.append(records[pick].chunk.text)
        return " ".join(parts)

    def score_texts(texts: list[str]) -> list[AmbiguityScore]:
        vectors = np.asarray(embedder.embed(texts), dtype=np.float64)
        scores = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            for vec in vectors:
                try:
                    scores.append(ambiguity_score(vec, index, k=k_eff, epsilon=epsilon))
                except DegenerateInputError:
                    continue
        return scores

    multi_texts = []
    single_texts = []
    n_clusters = len(members)
    for _ in range(queries_per_kind):
        across = rng.choice(n_clusters, size=per_query, replace=per_query > n_clusters)
        multi_texts.append(sample_query(across))
        home = int(rng.integers(n_clusters))
        single_texts.append(sample_query(np.full(per_query, home)))

    return CalibrationBaseline(
        cluster_count=cluster_count,
        epsilon=epsilon,
        cluster_sizes=tuple(int(m.size) for m in members),
        multi_factual=score_texts(multi_texts),
        single_cluster=score_texts(single_texts),
    )


EXPERIMENT_CSV_FIELDS = (
    "direction",
    "query_id",
    "epsilon",
    "w1_h0",
    "lt_max_h1",
    "points_used",
    "degenerate_flag",
)


def write_experiment_csv(path, results: Sequence[ExperimentResult]) -> None:
    """Per-direction per-query per-scale rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EXPERIMENT_CSV_FIELDS)
        for result in results:
            for profile in result.profiles:
                for score in profile.scores:
                    writer.writerow(
                        [
                            result.direction,
                            profile.query_id,
                            repr(float(score.epsilon)),
                            repr(float(score.w1_h0)),
                            repr(float(score.lt_max_h1)),
                            score.points_used,
                            int(score.degenerate),
                        ]
                    )
