"""Shared test fixtures: planted-topic synthetic corpora and a fake HTTP session."""

from __future__ import annotations

import hashlib

import numpy as np


def synthetic_corpus(
    n_topics: int = 12,
    n_docs: int = 24,
    sections_per_doc: int = 3,
    tokens_per_section: int = 50,
    vocab_per_topic: int = 140,
    stop_fraction: float = 0.35,
    n_stopwords: int = 60,
    seed: int = 0,
) -> dict[str, str]:
    """Documents built from planted topic clusters.

    Each topic owns a disjoint token vocabulary; each document concatenates
    `sections_per_doc` sections of distinct topics, one section per
    `tokens_per_section` tokens, with a shared stopword pool mixed in at
    `stop_fraction`. Chunking at the section length yields topic-pure fine
    chunks; chunking at the document length yields multi-topic coarse
    chunks. A large per-topic vocabulary keeps same-topic chunks diverse
    (real corpora do not contain near-duplicate chunks), and the stopword
    carrier correlates parent chunks with each other, both of which the
    direction property of the bidirectional experiment relies on.
    """
    rng = np.random.default_rng(seed)
    vocab = {
        t: [f"t{t}w{j}" for j in range(vocab_per_topic)] for t in range(n_topics)
    }
    stopwords = [f"s{j}" for j in range(n_stopwords)]
    docs: dict[str, str] = {}
    for d in range(n_docs):
        topics = rng.choice(n_topics, size=sections_per_doc, replace=False)
        words: list[str] = []
        for t in topics:
            for _ in range(tokens_per_section):
                if rng.random() < stop_fraction:
                    words.append(stopwords[int(rng.integers(n_stopwords))])
                else:
                    words.append(vocab[int(t)][int(rng.integers(vocab_per_topic))])
        docs[f"doc{d:03d}"] = " ".join(words)
    return docs


class FakeResponse:
    def __init__(self, status_code: int, payload=None):
        self.status_code = status_code
        self._payload = payload

    def json(self):
        return self._payload


class FakeSession:
    """Stands in for requests.Session: deterministic embeddings, scripted failures."""

    def __init__(self, dim: int = 8, fail_first: int = 0, fail_status: int = 500):
        self.dim = dim
        self.fail_first = fail_first
        self.fail_status = fail_status
        self.calls = 0
        self.posted_payloads = []

    def _vector(self, text: str) -> list[float]:
        digest = hashlib.sha256(text.encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        return [float(x) for x in rng.standard_normal(self.dim)]

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls += 1
        self.posted_payloads.append(json)
        if self.calls <= self.fail_first:
            return FakeResponse(self.fail_status)
        data = [{"embedding": self._vector(t)} for t in json["input"]]
        return FakeResponse(200, {"data": data})
