import numpy as np
import pytest

from ambitopo.geometry import pairwise_distances
from ambitopo.persistence import (
    Bar,
    PersistenceDiagram,
    betti_oracle,
    h0_deaths_via_mst,
    lt_max_h1,
    rips_persistence,
    w1_h0,
)

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def random_cloud(seed, n_max, dim=3):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, n_max + 1))
    return rng.standard_normal((n, dim))


class TestRipsPersistence:
    def test_two_points(self):
        diag = rips_persistence(pairwise_distances([(0.0, 0.0), (1.0, 0.0)]))
        h0 = diag.degree(0)
        finite = [b for b in h0 if b.death is not None]
        essential = [b for b in h0 if b.death is None]
        assert len(finite) == 1 and finite[0].birth == 0.0 and finite[0].death == 1.0
        assert len(essential) == 1
        assert diag.degree(1) == ()

    def test_square_h1_bar(self):
        diag = rips_persistence(pairwise_distances(SQUARE))
        h1 = diag.degree(1)
        assert len(h1) == 1
        assert h1[0].birth == pytest.approx(1.0, abs=1e-12)
        assert h1[0].death == pytest.approx(np.sqrt(2.0), abs=1e-12)

    def test_equilateral_triangle_no_h1(self):
        pts = [(0.0, 0.0), (1.0, 0.0), (0.5, np.sqrt(3.0) / 2.0)]
        diag = rips_persistence(pairwise_distances(pts))
        assert diag.degree(1) == ()

    def test_single_point(self):
        diag = rips_persistence([[0.0]])
        assert diag.bars == (Bar(0, 0.0, None),)

    def test_h0_count_equals_point_count(self):
        pts = random_cloud(0, 12)
        diag = rips_persistence(pairwise_distances(pts))
        assert len(diag.degree(0)) == pts.shape[0]
        assert sum(1 for b in diag.degree(0) if b.death is None) == 1

    def test_max_degree_zero_skips_h1(self):
        d = pairwise_distances(SQUARE)
        diag = rips_persistence(d, max_degree=0)
        assert diag.degree(1) == ()
        assert len(diag.degree(0)) == 4

    def test_unsupported_degree(self):
        with pytest.raises(ValueError):
            rips_persistence([[0.0]], max_degree=2)

    def test_invalid_matrix(self):
        with pytest.raises(ValueError):
            rips_persistence([[0.0, 1.0], [2.0, 0.0]])

    def test_permutation_invariance(self):
        def bar_multiset(bars):
            return sorted(
                (b.degree, round(b.birth, 10), round(b.death, 10) if b.death is not None else -1.0)
                for b in bars
            )

        for seed in range(10):
            pts = random_cloud(seed + 50, 10)
            d = pairwise_distances(pts)
            perm = np.random.default_rng(seed).permutation(pts.shape[0])
            assert bar_multiset(rips_persistence(d).bars) == bar_multiset(
                rips_persistence(pairwise_distances(pts[perm])).bars
            )

    def test_scaling_covariance(self):
        pts = random_cloud(6, 9)
        d = pairwise_distances(pts)
        s = 3.7
        diag = rips_persistence(d)
        diag_s = rips_persistence(d * s)
        assert w1_h0(diag_s) == pytest.approx(s * w1_h0(diag), rel=1e-9)
        assert lt_max_h1(diag_s) == pytest.approx(s * lt_max_h1(diag), rel=1e-9, abs=1e-12)
        for b, bs in zip(diag.bars, diag_s.bars):
            assert bs.birth == pytest.approx(s * b.birth, rel=1e-9, abs=1e-12)
            if b.death is None:
                assert bs.death is None
            else:
                assert bs.death == pytest.approx(s * b.death, rel=1e-9)

    def test_h1_bars_within_edge_bounds(self):
        for seed in range(10):
            pts = random_cloud(seed + 20, 12)
            d = pairwise_distances(pts)
            smallest_edge = np.min(d[~np.eye(d.shape[0], dtype=bool)]) if d.shape[0] > 1 else 0.0
            diag = rips_persistence(d)
            for b in diag.degree(1):
                assert b.birth >= smallest_edge - 1e-12
                assert b.death <= np.max(d) + 1e-12


class TestMstOracle:
    def test_collinear(self):
        d = pairwise_distances([(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)])
        np.testing.assert_allclose(h0_deaths_via_mst(d), [1.0, 2.0])

    def test_single_point(self):
        assert h0_deaths_via_mst([[0.0]]).size == 0

    def test_two_points(self):
        d = pairwise_distances([(0.0, 0.0), (0.0, 2.5)])
        np.testing.assert_allclose(h0_deaths_via_mst(d), [2.5])

    def test_matches_rips_h0_deaths(self):
        # dual-route invariant: reduction vs Kruskal, 40 seeds here
        # (the full 100-seed n<=50 version runs in the acceptance suite)
        for seed in range(40):
            pts = random_cloud(seed, 16)
            d = pairwise_distances(pts)
            diag = rips_persistence(d, max_degree=0)
            deaths = sorted(b.death for b in diag.degree(0) if b.death is not None)
            np.testing.assert_allclose(deaths, h0_deaths_via_mst(d), atol=1e-9)


class TestMetrics:
    def test_w1_from_deaths_one_two(self):
        diag = PersistenceDiagram(
            bars=(Bar(0, 0.0, 1.0), Bar(0, 0.0, 2.0), Bar(0, 0.0, None))
        )
        assert w1_h0(diag) == pytest.approx(0.75)

    def test_w1_single_finite_bar(self):
        diag = PersistenceDiagram(bars=(Bar(0, 0.0, 1.8), Bar(0, 0.0, None)))
        assert w1_h0(diag) == pytest.approx(0.9)

    def test_w1_degenerate_single_point(self):
        diag = PersistenceDiagram(bars=(Bar(0, 0.0, None),))
        assert w1_h0(diag) == 0.0

    def test_w1_equals_half_mean_mst_edge(self):
        for seed in range(25):
            pts = random_cloud(seed + 100, 14)
            d = pairwise_distances(pts)
            diag = rips_persistence(d, max_degree=0)
            mst = h0_deaths_via_mst(d)
            assert w1_h0(diag) == pytest.approx(np.mean(mst) / 2.0, abs=1e-9)

    def test_lt_max_square(self):
        diag = rips_persistence(pairwise_distances(SQUARE))
        assert lt_max_h1(diag) == pytest.approx((np.sqrt(2.0) - 1.0) / 2.0, abs=1e-9)

    def test_lt_max_empty(self):
        diag = PersistenceDiagram(bars=(Bar(0, 0.0, None),))
        assert lt_max_h1(diag) == 0.0

    def test_lt_max_formula(self):
        diag = PersistenceDiagram(bars=(Bar(1, 1.0, 2.0), Bar(1, 1.0, 1.5)))
        assert lt_max_h1(diag) == pytest.approx(0.5)


class TestBettiOracle:
    def test_square_radii(self):
        d = pairwise_distances(SQUARE)
        assert betti_oracle(d, 1.2) == (1, 1)
        assert betti_oracle(d, 1.5) == (1, 0)

    def test_radius_zero(self):
        pts = random_cloud(3, 8)
        d = pairwise_distances(pts)
        assert betti_oracle(d, 0.0) == (pts.shape[0], 0)

    def test_size_guard(self):
        d = pairwise_distances(np.random.default_rng(0).standard_normal((11, 2)))
        with pytest.raises(ValueError):
            betti_oracle(d, 1.0)

    def test_bar_counting_matches_oracle(self):
        # 30 seeds here; the 100-seed version is acceptance criterion 5
        for seed in range(30):
            pts = random_cloud(seed + 300, 7)
            d = pairwise_distances(pts)
            diag = rips_persistence(d)
            radii = sorted(set(np.round(d[np.triu_indices(d.shape[0], k=1)], 12)) | {0.0})
            for r in radii:
                assert diag.betti_at(r) == betti_oracle(d, r), f"seed={seed} r={r}"


class TestDiagramJson:
    def test_round_trip(self):
        diag = rips_persistence(pairwise_distances(SQUARE))
        again = PersistenceDiagram.from_json(diag.to_json())
        assert again == diag

    def test_infinite_death_is_null(self):
        diag = rips_persistence([[0.0]])
        obj = diag.to_json_obj()
        assert obj == [{"degree": 0, "birth": 0.0, "death": None}]

    def test_bar_validation(self):
        with pytest.raises(ValueError):
            Bar(0, 1.0, 0.5)
