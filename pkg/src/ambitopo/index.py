"""Exact brute-force cosine kNN index.

Immutable after construction; scores every stored vector against the query
(no approximation) and breaks similarity ties by insertion order so search
results are fully deterministic.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, DimensionMismatchError
from .geometry import as_points


class VectorIndex:
    def __init__(self, vectors, ids: Sequence[str] | None = None, payloads: Sequence | None = None):
        matrix = as_points(vectors)
        if matrix.shape[0] < 1:
            raise ValueError("index needs at least one vector")
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0.0):
            raise DegenerateInputError("index contains zero vectors")
        if ids is None:
            ids = tuple(str(i) for i in range(matrix.shape[0]))
        else:
            ids = tuple(ids)
            if len(ids) != matrix.shape[0]:
                raise ValueError("ids length does not match vector count")
        if payloads is not None and len(payloads) != matrix.shape[0]:
            raise ValueError("payloads length does not match vector count")
        self._matrix = matrix
        self._matrix.setflags(write=False)
        self._norms = norms
        self.ids = ids
        self.payloads = tuple(payloads) if payloads is not None else None

    def __len__(self) -> int:
        return self._matrix.shape[0]

    @property
    def dimension(self) -> int:
        return self._matrix.shape[1]

    @property
    def vectors(self) -> np.ndarray:
        """Read-only (n, d) view of the stored vectors."""
        return self._matrix

    def search(self, query, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Top-k by descending cosine similarity.

        Returns (indices, similarities); k is clipped to the index size.
        """
        q = np.asarray(query, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"query has dimension {q.shape[0]}, index has {self.dimension}"
            )
        qnorm = float(np.linalg.norm(q))
        if qnorm == 0.0:
            raise DegenerateInputError("cannot search with a zero query vector")
        sims = (self._matrix @ q) / (self._norms * qnorm)
        k = min(k, len(self))
        ranked = np.argsort(-sims, kind="stable")[:k]
        return ranked, sims[ranked]
