"""Vietoris-Rips persistent homology for degrees 0 and 1.

The filtration is built from vertices, all edges and all triangles of a
distance matrix; a simplex enters at the maximum pairwise distance of its
vertices. Pairing uses the standard boundary-matrix column reduction over
Z/2 with a pivot cache. Columns are packed into Python integers so the
inner XOR loop runs at C speed; for the cloud sizes this package handles
(n up to ~60) that keeps a full reduction in the tens of milliseconds.

Degree-0 deaths are independently recoverable as minimum-spanning-tree edge
weights (`h0_deaths_via_mst`), and `betti_oracle` recomputes Betti numbers
at a fixed radius from boundary-matrix ranks; both serve as cross-checks of
the reduction and are kept free of any shared code path with it beyond the
distance-matrix validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import validate_distance_matrix


@dataclass(frozen=True, order=True)
class Bar:
    """One persistence pair. death=None marks the essential class that
    never dies (exactly one, in degree 0, for a connected input)."""

    degree: int
    birth: float
    death: float | None

    def __post_init__(self):
        if self.death is not None and self.death < self.birth:
            raise ValueError(f"death {self.death} precedes birth {self.birth}")

    @property
    def finite(self) -> bool:
        return self.death is not None

    def gap_to_diagonal(self) -> float:
        """|y - proj(y)| for the diagram point (birth, death): the vertical
        distance from the death coordinate to the orthogonal projection on
        the diagonal, i.e. (death - birth) / 2. Infinite for essential bars."""
        if self.death is None:
            return float("inf")
        return (self.death - self.birth) / 2.0


@dataclass(frozen=True)
class PersistenceDiagram:
    bars: tuple[Bar, ...]

    def degree(self, degree: int) -> tuple[Bar, ...]:
        return tuple(b for b in self.bars if b.degree == degree)

    def betti_at(self, radius: float) -> tuple[int, int]:
        """Count bars alive at a given radius: born at or before it and not
        yet dead (a feature dying exactly at the radius is already gone,
        since its killing simplex is part of the complex)."""
        b0 = b1 = 0
        for bar in self.bars:
            if bar.birth <= radius and (bar.death is None or bar.death > radius):
                if bar.degree == 0:
                    b0 += 1
                else:
                    b1 += 1
        return b0, b1

    def to_json_obj(self) -> list[dict]:
        return [
            {"degree": b.degree, "birth": b.birth, "death": b.death}
            for b in self.bars
        ]

    def to_json(self, **dumps_kwargs) -> str:
        return json.dumps(self.to_json_obj(), **dumps_kwargs)

    @classmethod
    def from_json(cls, text: str) -> "PersistenceDiagram":
        bars = tuple(
            Bar(degree=item["degree"], birth=item["birth"], death=item["death"])
            for item in json.loads(text)
        )
        return cls(bars=bars)


def _sorted_simplices(d: np.ndarray, max_degree: int) -> list[tuple[float, int, tuple[int, ...]]]:
    """All simplices up to dimension max_degree+1 as (filtration, dim, verts),
    sorted by that tuple. Ties in filtration value break by dimension then
    lexicographic vertex order, which fixes the reduction deterministically."""
    n = d.shape[0]
    simplices: list[tuple[float, int, tuple[int, ...]]] = [(0.0, 0, (i,)) for i in range(n)]
    for i, j in combinations(range(n), 2):
        simplices.append((d[i, j], 1, (i, j)))
    if max_degree >= 1:
        for i, j, k in combinations(range(n), 3):
            filt = max(d[i, j], d[i, k], d[j, k])
            simplices.append((filt, 2, (i, j, k)))
    simplices.sort()
    return simplices


def rips_persistence(d, max_degree: int = 1) -> PersistenceDiagram:
    """Persistence diagram of the Rips filtration of a distance matrix.

    Degrees 0 and 1 (max_degree=1) or degree 0 alone (max_degree=0).
    Zero-persistence pairs are dropped. Because every triangle is present,
    the complex is a full clique complex at the largest distance, so all
    degree-1 bars are finite and exactly one essential degree-0 bar remains.
    """
    if max_degree not in (0, 1):
        raise ValueError("only degrees 0 and 1 are supported")
    dist = validate_distance_matrix(d)
    n = dist.shape[0]
    if n == 1:
        return PersistenceDiagram(bars=(Bar(0, 0.0, None),))

    order = _sorted_simplices(dist, max_degree)
    index_of = {s[2]: i for i, s in enumerate(order)}

    # Column reduction over Z/2. A column is an int whose set bits are the
    # global indices of the simplex's facets; the pivot is the highest bit.
    low_to_col: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []  # (birth simplex index, death simplex index)
    cycle_edges: set[int] = set()  # edges whose column reduced to zero (H1 creators)
    for j, (_, dim, verts) in enumerate(order):
        if dim == 0:
            continue
        if dim == 1:
            col = (1 << index_of[(verts[0],)]) | (1 << index_of[(verts[1],)])
        else:
            a, b, c = verts
            col = (
                (1 << index_of[(a, b)])
                | (1 << index_of[(a, c)])
                | (1 << index_of[(b, c)])
            )
        while col:
            low = col.bit_length() - 1
            reducer = low_to_col.get(low)
            if reducer is None:
                low_to_col[low] = col
                pairs.append((low, j))
                break
            col ^= reducer
        else:
            if dim == 1:
                cycle_edges.add(j)
            # dim == 2 creators would start degree-2 classes; out of range here.

    bars: list[Bar] = []
    paired_rows = set()
    for row, col in pairs:
        paired_rows.add(row)
        birth_filt, birth_dim, _ = order[row]
        death_filt = order[col][0]
        if death_filt == birth_filt:
            continue  # zero-persistence pair
        bars.append(Bar(degree=birth_dim, birth=float(birth_filt), death=float(death_filt)))

    for idx, (_, dim, _) in enumerate(order):
        if dim == 0 and idx not in paired_rows:
            bars.append(Bar(degree=0, birth=0.0, death=None))

    if max_degree >= 1:
        unkilled = cycle_edges - paired_rows
        if unkilled:  # impossible on a full clique filtration
            raise AssertionError(f"unpaired degree-1 creators: {sorted(unkilled)}")

    bars.sort(key=lambda b: (b.degree, b.birth, b.death is None, b.death or 0.0))
    return PersistenceDiagram(bars=tuple(bars))


class _DisjointSet:
    """Union-find with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def h0_deaths_via_mst(d) -> np.ndarray:
    """Finite degree-0 death radii as the n-1 MST edge weights, ascending.

    Kruskal over the complete graph. Merging two components at radius r is
    exactly the death of the younger one, so this is an independent oracle
    for the degree-0 half of `rips_persistence`.
    """
    dist = validate_distance_matrix(d)
    n = dist.shape[0]
    if n == 1:
        return np.empty(0, dtype=np.float64)
    iu, ju = np.triu_indices(n, k=1)
    weights = dist[iu, ju]
    order = np.argsort(weights, kind="stable")
    dsu = _DisjointSet(n)
    deaths: list[float] = []
    for e in order:
        if dsu.union(int(iu[e]), int(ju[e])):
            deaths.append(float(weights[e]))
            if len(deaths) == n - 1:
                break
    return np.asarray(deaths, dtype=np.float64)


def w1_h0(diagram: PersistenceDiagram) -> float:
    """Degree-0 diagram norm: mean distance of finite death points to the
    diagram diagonal.

    Death points sit at (0, y); their diagonal projection is y/2, so each
    finite bar contributes y/2 and the sum is divided by N-1 where N counts
    every degree-0 bar including the essential one. Fewer than two bars is
    degenerate and scores 0.
    """
    h0 = diagram.degree(0)
    if len(h0) < 2:
        return 0.0
    total = sum(b.death / 2.0 for b in h0 if b.death is not None)
    return total / (len(h0) - 1)


def lt_max_h1(diagram: PersistenceDiagram) -> float:
    """Longest-lived loop: max over degree-1 bars of (death - birth) / 2,
    the diagonal gap of the bar. Zero when degree 1 is empty."""
    gaps = [b.gap_to_diagonal() for b in diagram.degree(1) if b.finite]
    return max(gaps, default=0.0)


def _z2_rank(columns: list[int]) -> int:
    """Rank over Z/2 of a matrix given as bitmask columns."""
    pivots: dict[int, int] = {}
    rank = 0
    for col in columns:
        while col:
            low = col.bit_length() - 1
            if low in pivots:
                col ^= pivots[low]
            else:
                pivots[low] = col
                rank += 1
                break
    return rank


def betti_oracle(d, radius: float) -> tuple[int, int]:
    """(b0, b1) of the Rips complex at a fixed radius, from boundary ranks.

    b0 = #V - rank d1 and b1 = (#E - rank d1) - rank d2, computed by plain
    Gaussian elimination over Z/2. Deliberately independent of the
    filtration/reduction machinery. Guarded to n <= 10: the simplex counts
    blow up combinatorially.
    """
    dist = validate_distance_matrix(d)
    n = dist.shape[0]
    if n > 10:
        raise ValueError(f"betti_oracle is limited to n <= 10 points, got {n}")
    edges = [(i, j) for i, j in combinations(range(n), 2) if dist[i, j] <= radius]
    edge_index = {e: idx for idx, e in enumerate(edges)}
    triangles = [
        (i, j, k)
        for i, j, k in combinations(range(n), 3)
        if max(dist[i, j], dist[i, k], dist[j, k]) <= radius
    ]
    d1 = [(1 << i) | (1 << j) for i, j in edges]
    d2 = [
        (1 << edge_index[(i, j)]) | (1 << edge_index[(i, k)]) | (1 << edge_index[(j, k)])
        for i, j, k in triangles
    ]
    rank_d1 = _z2_rank(d1)
    rank_d2 = _z2_rank(d2)
    b0 = n - rank_d1
    b1 = len(edges) - rank_d1 - rank_d2
    return b0, b1
