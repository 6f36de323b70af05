"""Topological ambiguity metrics for semantic-search queries.

Quantifies how ambiguous a query is relative to a corpus by the persistent
homology of its embedding neighborhood: the degree-0 diagram norm (mean
diagonal gap of component deaths) and the longest-lived degree-1 loop.
"""

from .corpus import (
    CalibrationBaseline,
    Chunk,
    ChunkSet,
    EmbeddingRecord,
    ExperimentResult,
    MockEmbedder,
    ServiceEmbedder,
    bidirectional_experiment,
    build_index,
    calibrate,
    chunk_documents,
    chunk_text,
    containment_check,
    embed_chunks,
    load_corpus_dir,
    read_embeddings_jsonl,
    retrieval_experiment,
    write_embeddings_jsonl,
)
from .errors import DegenerateInputError, DimensionMismatchError, EmbedderError
from .geometry import (
    normalize,
    orthonormal_columns,
    pairwise_distances,
    random_projection,
    validate_distance_matrix,
)
from .index import VectorIndex
from .neighborhood import (
    DEFAULT_EPSILON_GRID,
    DEFAULT_K,
    AmbiguityScore,
    QueryNeighborhood,
    ambiguity_profile,
    ambiguity_score,
    build_neighborhood,
    difference_cloud,
    select_by_scale,
)
from .persistence import (
    Bar,
    PersistenceDiagram,
    betti_oracle,
    h0_deaths_via_mst,
    lt_max_h1,
    rips_persistence,
    w1_h0,
)
from .simulation import (
    ScenarioConfig,
    SimulatedPair,
    TopicVocabulary,
    dimension_sweep,
    epsilon_sweep,
    generate_datapoints,
    generate_vocabulary,
    projection_robustness,
    run_simulation,
    sample_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguityScore",
    "Bar",
    "CalibrationBaseline",
    "Chunk",
    "ChunkSet",
    "DEFAULT_EPSILON_GRID",
    "DEFAULT_K",
    "DegenerateInputError",
    "DimensionMismatchError",
    "EmbedderError",
    "EmbeddingRecord",
    "ExperimentResult",
    "MockEmbedder",
    "PersistenceDiagram",
    "QueryNeighborhood",
    "ScenarioConfig",
    "ServiceEmbedder",
    "SimulatedPair",
    "TopicVocabulary",
    "VectorIndex",
    "ambiguity_profile",
    "ambiguity_score",
    "betti_oracle",
    "bidirectional_experiment",
    "build_index",
    "build_neighborhood",
    "calibrate",
    "chunk_documents",
    "chunk_text",
    "containment_check",
    "difference_cloud",
    "dimension_sweep",
    "embed_chunks",
    "epsilon_sweep",
    "generate_datapoints",
    "generate_vocabulary",
    "h0_deaths_via_mst",
    "load_corpus_dir",
    "lt_max_h1",
    "normalize",
    "orthonormal_columns",
    "pairwise_distances",
    "projection_robustness",
    "random_projection",
    "read_embeddings_jsonl",
    "retrieval_experiment",
    "rips_persistence",
    "run_simulation",
    "sample_scenario",
    "select_by_scale",
    "validate_distance_matrix",
    "w1_h0",
    "write_embeddings_jsonl",
]
