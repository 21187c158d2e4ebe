import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from laygen.errors import SchemaError
from laygen.layout import FURNITURE_TYPES, Edge, EdgeKind, Element, Layout, Mode, door_graph
from laygen.stats import (ASPECT, COUNT, Histogram, Stat, aggregate, align_stats, compute_stats, distance, emd,
                          gap, histogram, load_stats, ratio, rnn_graph, save_stats, shape_stats, topo_stats)
from oracles import brute_emd

EXT, BED, BATH, KITCHEN, LIVING = 0, 1, 2, 3, 4


def lay(elements, edges=()):
    return Layout(Mode.FLOORPLAN, elements=[Element(*e) for e in elements],
                  edges=[Edge(i, j, EdgeKind(k)) for i, j, k in edges])


def furn(elements):
    return Layout(Mode.FURNITURE, FURNITURE_TYPES, [Element(*e) for e in elements])


def by_name(stats):
    return {s.name: s for s in stats}


def h(counts, lo=0.0, hi=None):
    counts = np.asarray(counts, dtype=float)
    return Histogram(lo, float(len(counts)) if hi is None else hi, counts)


class TestEmd:
    def test_identical(self):
        assert emd(h([1, 2, 3]), h([1, 2, 3])) == 0.0

    def test_unit_shift(self):
        assert emd(h([1, 0]), h([0, 1])) == pytest.approx(1.0)

    def test_half(self):
        assert emd(h([0.5, 0.5]), h([0, 1])) == pytest.approx(0.5)

    def test_normalises_mass(self):
        assert emd(h([2, 0]), h([0, 5])) == pytest.approx(1.0)

    def test_width_scales(self):
        assert emd(h([1, 0], 0, 8), h([0, 1], 0, 8)) == pytest.approx(4.0)

    def test_mismatched_edges(self):
        with pytest.raises(SchemaError):
            emd(h([1, 0]), h([1, 0, 0]))
        with pytest.raises(SchemaError):
            emd(h([1, 0], 0, 2), h([1, 0], 0, 4))

    @given(hs.lists(hs.integers(0, 3), min_size=4, max_size=4),
           hs.lists(hs.integers(0, 3), min_size=4, max_size=4))
    def test_matches_brute_force(self, p, q):
        if sum(p) == 0 or sum(p) != sum(q) or sum(p) > 8:
            return
        assert abs(emd(h(p), h(q)) - brute_emd(p, q)) < 1e-12

    @given(*[hs.lists(hs.floats(0, 5), min_size=6, max_size=6) for _ in range(3)])
    def test_metric(self, p, q, r):
        if min(sum(p), sum(q), sum(r)) < 1e-3:
            return
        a, b, c = h(p), h(q), h(r)
        assert emd(a, b) >= 0
        assert emd(a, b) == pytest.approx(emd(b, a))
        assert emd(a, c) <= emd(a, b) + emd(b, c) + 1e-12
        assert emd(a, a) == 0.0


class TestHistogram:
    def test_binning_and_mean(self):
        x = histogram([0.0, 1.0, 31.0, 99.0], COUNT)
        assert x.counts[0] == 1 and x.counts[1] == 1 and x.counts[31] == 2
        assert x.mean() == pytest.approx(131 / 4)

    def test_empty(self):
        assert histogram([], COUNT).mass == 0
        assert math.isnan(histogram([], COUNT).mean())


class TestTopo:
    def test_exterior_distance_one(self):
        L = lay([(EXT, 0, 0, 2, 2), (BED, 2, 0, 2, 2)], [(0, 1, "hadj"), (0, 1, "door")])
        e = by_name(topo_stats([L]))["s_t^e"].value[BED - 1]
        assert e.mass == pytest.approx(1.0)
        assert e.counts[1] == pytest.approx(1.0)

    def test_four_rooms_distance_table(self):
        L = lay([(EXT, 0, 0, 2, 4), (BED, 2, 0, 2, 2), (BATH, 4, 0, 2, 2), (KITCHEN, 2, 2, 2, 2),
                 (LIVING, 4, 2, 2, 2)], [(0, 1, "door"), (1, 2, "door"), (2, 4, "door")])
        # bed-bath 1, bath-living 1, bed-living 2; the kitchen is unreachable
        table = np.zeros((6, 6))
        table[BED - 1, BATH - 1] = 1
        table[BATH - 1, LIVING - 1] = 1
        table[BED - 1, LIVING - 1] = 2
        got = by_name(topo_stats([L]))["s_t^d"].value
        assert np.array_equal(got, table[np.triu_indices(6)])

    def test_doorless_room_inaccessible(self):
        L = lay([(EXT, 0, 0, 2, 2), (BED, 2, 0, 2, 2), (BATH, 4, 0, 2, 2)], [(0, 1, "door")])
        u = by_name(topo_stats([L]))["s_t^u"].value
        assert u[BATH - 1] == 1 and u[BED - 1] == 0

    def test_counts_exclude_exterior(self):
        L = lay([(EXT, 0, 0, 2, 2), (BED, 2, 0, 2, 2), (BED, 4, 0, 2, 2)])
        r = by_name(topo_stats([L, L]))["s_t^r"].value
        assert len(r) == 6 and r[BED - 1] == 2

    def test_reachable_plus_inaccessible(self, corpus):
        for L in corpus[:40]:
            s = by_name(topo_stats([L]))
            g = door_graph(L)
            d = g.distances_from(g.exterior)
            reach = np.zeros(6)
            for k in g.interior_rooms():
                if d[k] >= 0:
                    reach[g.room_types[k] - 1] += 1
            assert np.allclose(s["s_t^r"].value, s["s_t^u"].value + reach)

    def test_furniture_has_no_exterior_stats(self, furniture_corpus):
        names = by_name(topo_stats(furniture_corpus[:5]))
        assert "s_t^e" not in names and "s_t^u" not in names


class TestShape:
    def test_unit_squares_aspect(self):
        L = lay([(EXT, 0, 0, 1, 1), (BED, 1, 0, 1, 1), (BED, 2, 0, 1, 1)])
        s = by_name(shape_stats([L]))["s_r^s"].value[BED - 1]
        k = int((1.0 - ASPECT[0]) / s.width)
        assert s.counts[k] == pytest.approx(1.0) and s.mass == pytest.approx(1.0)

    def test_area_mean(self):
        L = lay([(EXT, 0, 0, 1, 1), (BED, 1, 0, 1, 2), (BED, 2, 0, 2, 3)])
        assert by_name(shape_stats([L]))["s_r^a"].value[BED - 1].mean() == pytest.approx(4.0)

    def test_orientation_degenerate(self):
        L = furn([(0, 1, 1, 2, 2, 0.0), (1, 5, 5, 2, 1, 0.0), (0, 9, 9, 1, 1, 0.0)])
        o = by_name(shape_stats([L]))["s_r^o"].value
        for hist in o:
            if hist.mass:
                assert hist.counts[0] == pytest.approx(hist.mass)

    def test_location_split_per_axis(self):
        L = lay([(EXT, 0, 0, 1, 1), (BED, 10, 20, 2, 2)])
        loc = by_name(shape_stats([L]))["s_r^c"].value
        assert len(loc) == 12
        assert loc[BED - 1].mean() == pytest.approx(11.0)
        assert loc[6 + BED - 1].mean() == pytest.approx(21.0)


class TestAlign:
    def test_touching_squares(self):
        a, b = Element(BED, 0, 0, 1, 1), Element(BATH, 1, 0, 1, 1)
        s = by_name(align_stats([lay([(BED, 0, 0, 1, 1), (BATH, 1, 0, 1, 1)])]))
        assert gap(a, b) == 0
        assert s["s_a^g"].value[0].mean() == pytest.approx(0.0)
        assert s["s_a^s"].value[0].mean() == pytest.approx(0.0)

    def test_overlap_gap(self):
        a, b = Element(BED, 0, 0, 1, 1), Element(BATH, 0.5, 0, 1, 1)
        assert gap(a, b) == pytest.approx(-0.5)
        s = by_name(align_stats([lay([(BED, 0, 0, 1, 1), (BATH, 0.5, 0, 1, 1)])]))
        assert s["s_a^g"].value[0].mean() == pytest.approx(-0.5)

    def test_single_element_empty(self):
        for st in align_stats([lay([(BED, 0, 0, 1, 1)])]):
            assert all(x.mass == 0 for x in st.value)

    def test_descriptive_subset(self):
        L = lay([(BED, 0, 0, 1, 1), (BATH, 1, 0, 1, 1), (KITCHEN, 10, 10, 1, 1)], [(0, 1, "wall")])
        s = by_name(align_stats([L]))
        # centre offsets over all pairs: x 1, 10, 9 and y 0, 10, 10
        assert s["s_a^c"].value[0].mean() == pytest.approx(20.0 / 3)
        assert s["s_a^c"].value[1].mean() == pytest.approx(20.0 / 3)
        assert s["s_a^c|desc"].value[0].mean() == pytest.approx(1.0)
        assert s["s_a^c|desc"].value[1].mean() == pytest.approx(0.0)

    def test_exterior_pairs_skipped(self):
        L = lay([(EXT, 0, 0, 1, 1), (BED, 30, 30, 1, 1)])
        assert all(x.mass == 0 for st in align_stats([L]) for x in st.value)


class TestRnnGraph:
    def test_far_apart(self):
        L = furn([(0, 0, 0, 1, 1, 0.0), (0, 30, 30, 1, 1, 0.0)])
        assert rnn_graph(L) == [set(), set()]

    def test_coincident(self):
        L = furn([(0, 5, 5, 2, 2, 0.0), (1, 5.5, 5.5, 1, 1, 0.0), (0, 40, 40, 1, 1, 0.0)])
        assert 1 in rnn_graph(L)[0]

    def test_five_piece_table(self):
        centres = [(1, 1), (3, 1), (3, 3.5), (11, 11), (11, 9)]
        L = furn([(0, cx - 1, cy - 1, 2, 2, 0.0) for cx, cy in centres])
        # bbox diagonal 12*sqrt(2), radius about 2.55
        expect = {(0, 1), (1, 2), (3, 4)}
        adj = rnn_graph(L)
        got = {(i, j) for i in range(5) for j in adj[i] if i < j}
        assert got == expect
        r = 0.15 * 12 * math.sqrt(2)
        c = np.array(centres, dtype=float)
        d = np.linalg.norm(c[:, None] - c[None], axis=-1)
        assert got == {(i, j) for i in range(5) for j in range(i + 1, 5) if d[i, j] <= r}


def hstat(name, family, counts):
    return Stat(name, family, "hist", [h(counts)])


def sstat(name, family, v):
    return Stat(name, family, "scalar", np.array(v, dtype=float))


class TestAggregate:
    def test_ratio_rules(self):
        assert ratio(0.0, 0.0) == (1.0, False)
        assert ratio(3.0, 0.0) == (100.0, True)
        assert ratio(1.0, 4.0) == (0.25, False)

    def test_theirs_equals_ours(self, corpus):
        ours = compute_stats(corpus[:30])
        gt = compute_stats(corpus[30:60])
        rep = aggregate(ours, ours, gt)
        assert all(r == 1.0 for r in rep.ratios.values())
        assert rep.s_avg == 1.0

    def test_theirs_equals_gt(self, corpus):
        ours = compute_stats(corpus[:30])
        gt = compute_stats(corpus[30:60])
        rep = aggregate(ours, gt, gt)
        for name, r in rep.ratios.items():
            # a statistic that ours also matches exactly is 0/0, defined as 1
            assert r == (0.0 if rep.distances[name]["ours"] > 0 else 1.0)
        assert rep.s_r == 0.0

    def test_theirs_equals_gt_hand(self):
        gt = [sstat("a", "t", [0, 0]), hstat("b", "r", [1, 0]), sstat("c", "a", [1])]
        ours = [sstat("a", "t", [1, 0]), hstat("b", "r", [0, 1]), sstat("c", "a", [2])]
        rep = aggregate(ours, gt, gt)
        assert rep.s_t == rep.s_r == rep.s_a == rep.s_avg == 0.0

    def test_hand_three_stats(self):
        gt = [sstat("a", "t", [0, 0]), hstat("b", "r", [1, 0, 0, 0]), sstat("c", "a", [1])]
        ours = [sstat("a", "t", [3, 4]), hstat("b", "r", [0, 1, 0, 0]), sstat("c", "a", [2])]
        theirs = [sstat("a", "t", [6, 8]), hstat("b", "r", [0, 0, 0, 1]), sstat("c", "a", [1.5])]
        rep = aggregate(ours, theirs, gt)
        assert rep.ratios == pytest.approx({"a": 2.0, "b": 3.0, "c": 0.5})
        assert (rep.s_t, rep.s_r, rep.s_a) == pytest.approx((2.0, 3.0, 0.5))
        assert rep.s_avg == pytest.approx(5.5 / 3)

    def test_capped_reported(self):
        gt = [sstat("a", "t", [0])]
        rep = aggregate(gt, [sstat("a", "t", [1])], gt)
        assert rep.ratios["a"] == 100.0 and rep.capped == ["a"]

    def test_mismatched_sets(self):
        with pytest.raises(SchemaError):
            aggregate([sstat("a", "t", [0])], [sstat("b", "t", [0])], [sstat("a", "t", [0])])
        with pytest.raises(SchemaError):
            distance(sstat("a", "t", [0, 1]), sstat("a", "t", [0]))

    def test_save_load(self, tmp_path, corpus):
        stats = compute_stats(corpus[:10])
        save_stats(tmp_path / "s.json", stats)
        back = load_stats(tmp_path / "s.json")
        assert all(distance(a, b) == 0.0 for a, b in zip(stats, back))


class TestInvariance:
    @given(hs.integers(0, 39), hs.randoms(use_true_random=False))
    def test_permutation(self, corpus, k, rnd):
        L = corpus[k]
        perm = list(range(len(L.elements)))
        rnd.shuffle(perm)
        inv = {old: new for new, old in enumerate(perm)}
        P = Layout(L.mode, L.types, [L.elements[o] for o in perm],
                   [Edge(inv[r.i], inv[r.j], r.kind) for r in L.edges])
        for a, b in zip(compute_stats([L]), compute_stats([P])):
            assert distance(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_translation_keeps_topology_and_alignment(self):
        base = [(EXT, 0, 0, 2, 4), (BED, 2, 0, 2, 2), (BATH, 4, 0, 2, 2), (KITCHEN, 2, 2, 4, 2)]
        edges = [(0, 1, "door"), (1, 2, "door"), (2, 3, "door"), (1, 3, "wall")]
        A = lay(base, edges)
        B = lay([(t, x + 7, y + 11, w, hh) for t, x, y, w, hh in base], edges)
        sa, sb = by_name(compute_stats([A])), by_name(compute_stats([B]))
        for name in sa:
            if sa[name].family in "ta" or name in ("s_r^a", "s_r^s"):
                assert distance(sa[name], sb[name]) == pytest.approx(0.0, abs=1e-12)
        assert distance(sa["s_r^c"], sb["s_r^c"]) > 0
