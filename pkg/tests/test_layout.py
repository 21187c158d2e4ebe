import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as hs

from laygen.errors import RangeError, SchemaError
from laygen.layout import (ANGLE_Q, COORD_Q, Edge, EdgeGroup, EdgeKind, Element, Layout, Mode, Quantizer,
                           boundary_layout, coverage_holes, dequantize, door_graph, interior_layout, merge_rooms,
                           quantize, subset_layout, validate_layout)

BED, BATH, EXT = 1, 2, 0


def lay(elements, edges=()):
    return Layout(Mode.FLOORPLAN, elements=[Element(*e) for e in elements],
                  edges=[Edge(i, j, EdgeKind(k)) for i, j, k in edges])


class TestQuantizer:
    @pytest.mark.parametrize("v,b", [(0, 0), (64, 63), (32.5, 32), (0.999, 0), (1.0, 1)])
    def test_quantize(self, v, b):
        assert quantize(v) == b

    @pytest.mark.parametrize("b,v", [(0, 0.5), (63, 63.5), (17, 17.5)])
    def test_dequantize(self, b, v):
        assert dequantize(b) == v

    def test_round_trip_bin(self):
        assert quantize(dequantize(17)) == 17

    @pytest.mark.parametrize("v", [-0.01, 64.01, math.inf])
    def test_out_of_range(self, v):
        with pytest.raises(RangeError):
            quantize(v)

    def test_bad_bin(self):
        with pytest.raises(RangeError):
            dequantize(64)

    def test_angle_levels(self):
        assert ANGLE_Q.levels == 32
        assert ANGLE_Q.quantize(0.0) == 0
        assert ANGLE_Q.quantize(2 * math.pi - 1e-9) == 31

    @given(hs.integers(0, 63))
    def test_bin_centre_round_trip(self, b):
        assert quantize(dequantize(b)) == b

    @given(hs.floats(0, 64), hs.floats(0, 64))
    def test_monotone(self, a, b):
        if a <= b:
            assert quantize(a) <= quantize(b)

    @given(hs.floats(0, 64))
    def test_dequantize_lands_on_centre(self, v):
        c = dequantize(quantize(v))
        assert c - math.floor(c) == 0.5
        assert abs(c - v) <= COORD_Q.bin_width

    @given(hs.integers(1, 8), hs.floats(-10, 10), hs.floats(0.5, 50))
    def test_generic_quantizer(self, bits, lo, span):
        q = Quantizer(bits, lo, lo + span)
        for b in range(q.levels):
            assert q.quantize(q.dequantize(b)) == b


class TestLayoutInvariants:
    def test_edge_groups(self):
        assert EdgeKind.HADJ.group is EdgeKind.VADJ.group is EdgeGroup.CONSTRAINING
        assert EdgeKind.WALL.group is EdgeKind.DOOR.group is EdgeGroup.DESCRIPTIVE

    @pytest.mark.parametrize("e", [(1, 0, 0, 0, 1), (1, 0, 0, 1, -1), (1, 63, 0, 2, 1), (1, -1, 0, 1, 1)])
    def test_bad_element(self, e):
        with pytest.raises(SchemaError):
            lay([e])

    def test_self_edge(self):
        with pytest.raises(SchemaError):
            lay([(1, 0, 0, 1, 1)], [(0, 0, "hadj")])

    def test_edge_index_range(self):
        with pytest.raises(SchemaError):
            lay([(1, 0, 0, 1, 1)], [(0, 1, "door")])

    def test_alpha_only_in_furniture(self):
        with pytest.raises(SchemaError):
            Layout(Mode.FLOORPLAN, elements=[Element(1, 0, 0, 1, 1, 0.5)])
        with pytest.raises(SchemaError):
            Layout(Mode.FURNITURE, types=("a",), elements=[Element(0, 0, 0, 1, 1)])

    def test_furniture_has_no_constraining_edges(self):
        with pytest.raises(SchemaError):
            Layout(Mode.FURNITURE, types=("a",), elements=[Element(0, 0, 0, 1, 1, 0.0), Element(0, 1, 0, 1, 1, 0.0)],
                   edges=[Edge(0, 1, EdgeKind.HADJ)])

    def test_json_round_trip(self, corpus):
        for layout in corpus[:50]:
            assert Layout.from_json(layout.to_json()) == layout

    def test_malformed_json(self):
        with pytest.raises(SchemaError):
            Layout.from_dict({"mode": "floorplan", "elements": [{"x": 1}]})


class TestMergeRooms:
    def test_adjacent_same_type_merge(self):
        rooms = merge_rooms(lay([(BED, 0, 0, 2, 2), (BED, 2, 0, 2, 2)], [(0, 1, "hadj")]))
        assert rooms == [{0, 1}]

    def test_wall_separates(self):
        rooms = merge_rooms(lay([(BED, 0, 0, 2, 2), (BED, 2, 0, 2, 2)], [(0, 1, "hadj"), (0, 1, "wall")]))
        assert sorted(map(sorted, rooms)) == [[0], [1]]

    def test_bed_bed_bath(self):
        L = lay([(BED, 0, 0, 2, 2), (BED, 2, 0, 2, 2), (BATH, 4, 0, 2, 2)], [(0, 1, "hadj"), (1, 2, "hadj")])
        assert sorted(map(sorted, merge_rooms(L))) == [[0, 1], [2]]

    def test_partition(self, corpus):
        for layout in corpus:
            rooms = merge_rooms(layout)
            flat = [k for r in rooms for k in r]
            assert sorted(flat) == list(range(len(layout.elements)))


class TestValidate:
    def test_empty(self):
        assert validate_layout(Layout()) == []

    def test_overlap(self):
        out = validate_layout(lay([(BED, 0, 0, 3, 3), (BATH, 2, 0, 3, 3)]))
        assert [(v.kind, v.elements) for v in out] == [("overlap", (0, 1))]

    def test_door_between_distant_elements(self):
        out = validate_layout(lay([(BED, 0, 0, 2, 2), (BATH, 5, 0, 2, 2)], [(0, 1, "door")]))
        assert [v.kind for v in out] == ["descriptive"]

    def test_bad_adjacency(self):
        out = validate_layout(lay([(BED, 0, 0, 2, 2), (BATH, 3, 0, 2, 2)], [(0, 1, "hadj")]))
        assert [v.kind for v in out] == ["adjacency"]

    def test_corner_touch_is_not_adjacent(self):
        out = validate_layout(lay([(BED, 0, 0, 2, 2), (BATH, 2, 2, 2, 2)], [(0, 1, "hadj")]))
        assert [v.kind for v in out] == ["adjacency"]

    def test_hole(self):
        ring = [(BED, 0, 0, 6, 2), (BED, 0, 4, 6, 2), (BATH, 0, 2, 2, 2), (BATH, 4, 2, 2, 2)]
        assert coverage_holes(lay(ring)) == [(2, 2), (2, 3), (3, 2), (3, 3)]
        assert [v.kind for v in validate_layout(lay(ring))] == ["hole"]

    def test_notch_is_not_a_hole(self):
        assert coverage_holes(lay([(BED, 0, 0, 4, 2), (BATH, 0, 2, 2, 2)])) == []

    def test_synthetic_layouts_are_valid(self, corpus):
        for layout in corpus:
            assert validate_layout(layout) == []


class TestDoorGraph:
    def test_single_room(self):
        g = door_graph(lay([(EXT, 0, 0, 2, 2), (BED, 2, 0, 2, 2)], [(0, 1, "hadj"), (0, 1, "door")]))
        assert g.distances_from(g.exterior)[1] == 1

    def test_no_doors(self):
        g = door_graph(lay([(BED, 0, 0, 2, 2), (BATH, 2, 0, 2, 2)], [(0, 1, "hadj")]))
        d = g.distances_from(g.exterior)
        assert d[0] == d[1] == -1

    def test_four_rooms_hand_bfs(self):
        # exterior | A | B   with C above A and D above B
        L = lay([(EXT, 0, 0, 2, 4), (BED, 2, 0, 2, 2), (BATH, 4, 0, 2, 2), (3, 2, 2, 2, 2), (4, 4, 2, 2, 2)],
                [(0, 1, "door"), (1, 2, "door"), (2, 4, "door")])
        g = door_graph(L)
        d = g.distances_from(g.exterior)
        owner = {min(r): k for k, r in enumerate(g.rooms)}
        assert [d[owner[k]] for k in (1, 2, 3, 4)] == [1, 2, -1, 3]

    def test_node_count(self, corpus):
        for layout in corpus:
            assert door_graph(layout).n_nodes == len(merge_rooms(layout)) + 1

    def test_all_rooms_reachable(self, corpus):
        for layout in corpus:
            g = door_graph(layout)
            d = g.distances_from(g.exterior)
            assert all(d[k] >= 1 for k in g.interior_rooms())


class TestSubsets:
    def test_interior_and_boundary_partition(self, corpus):
        for layout in corpus[:50]:
            inner, outer = interior_layout(layout), boundary_layout(layout)
            assert len(inner.elements) + len(outer.elements) == len(layout.elements)
            assert all(e.t != layout.exterior_type for e in inner.elements)
            assert all(e.t == layout.exterior_type for e in outer.elements)

    def test_subset_reindexes(self):
        L = lay([(BED, 0, 0, 2, 2), (BATH, 2, 0, 2, 2), (BED, 4, 0, 2, 2)], [(0, 1, "hadj"), (1, 2, "hadj")])
        sub = subset_layout(L, [1, 2])
        assert [(r.i, r.j) for r in sub.edges] == [(0, 1)]

    @given(hs.lists(hs.tuples(hs.integers(0, 6), hs.integers(0, 60), hs.integers(0, 60),
                              hs.integers(1, 4), hs.integers(1, 4)), max_size=6))
    def test_overlap_symmetric(self, rects):
        L = lay(rects)
        pairs = {v.elements for v in validate_layout(L) if v.kind == "overlap"}
        for i, j in itertools.combinations(range(len(rects)), 2):
            a, b = L.elements[i], L.elements[j]
            brute = min(a.x2, b.x2) - max(a.x, b.x) > 0 and min(a.y2, b.y2) - max(a.y, b.y) > 0
            assert ((i, j) in pairs) == brute
