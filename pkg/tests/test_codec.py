import pytest
from hypothesis import given
from hypothesis import strategies as hs

from laygen.codec import (EDGE_END, EDGE_STOP, SPECIAL, SRC, TGT, TokenSequence, Vocab, canonicalize,
                          decode_edge_pairs, decode_edges, decode_elements, decode_tuples, element_constraints,
                          encode_edge_pairs, encode_edges, encode_elements, encode_tuples, load_token_cache,
                          order_elements, save_token_cache, slot_levels)
from laygen.errors import CapacityError, DecodeError, LoadError
from laygen.layout import Edge, EdgeKind, Element, Layout, Mode

V = Vocab(7)
S, E = EDGE_STOP, EDGE_END


def elements_at(xs, ys=None):
    ys = ys or [0] * len(xs)
    return Layout(Mode.FLOORPLAN, elements=[Element(1, x, y, 1, 1) for x, y in zip(xs, ys)])


class TestOrder:
    def test_by_x(self):
        assert order_elements(elements_at([5, 0, 3])) == [1, 2, 0]

    def test_ties_by_y(self):
        assert order_elements(elements_at([2, 2], [4, 1])) == [1, 0]

    def test_single(self):
        assert order_elements(elements_at([7])) == [0]


class TestElements:
    def test_empty(self):
        seq = encode_elements(Layout())
        assert seq.values == (V.stop,)

    def test_single_element(self):
        L = Layout(Mode.FLOORPLAN, elements=[Element(2, 0, 0, 10.2, 20.9)])
        seq = encode_elements(L)
        assert seq.values == (V.type_token(2), 10, 20, V.stop)
        assert seq.types == (0, 1, 2, 0)

    def test_two_elements_positions(self):
        seq = encode_elements(elements_at([0, 3]))
        assert len(seq) == 7
        assert seq.positions == tuple(range(1, 8))

    def test_decode_stop_only(self):
        assert decode_elements([V.stop]) == []

    def test_truncated_tuple_offset(self):
        with pytest.raises(DecodeError) as err:
            decode_elements([V.type_token(2), 10, V.stop])
        assert err.value.offset == 2

    @pytest.mark.parametrize("values,offset", [
        ([10, 10, 10, V.stop], 0),                       # bin where a type belongs
        ([V.type_token(1), V.type_token(1), 3, V.stop], 1),
        ([V.type_token(1), 3, 4], 3),                    # no stop
        ([V.type_token(1), 3, 4, V.stop, 5], 4),         # tokens after stop
    ])
    def test_decode_errors(self, values, offset):
        with pytest.raises(DecodeError) as err:
            decode_elements(values)
        assert err.value.offset == offset

    def test_pad_ignored(self):
        assert decode_tuples([V.type_token(0), 1, 2, V.stop, V.pad, V.pad], V, slot_levels("floorplan")) == [(0, 1, 2)]

    def test_capacity(self):
        with pytest.raises(CapacityError):
            encode_tuples([(0, 1, 1)] * 100, V, max_len=256)

    def test_round_trip_corpus(self, corpus):
        for layout in corpus:
            cons = element_constraints(layout)
            assert decode_elements(encode_elements(layout)) == cons

    def test_round_trip_furniture(self, furniture_corpus):
        for layout in furniture_corpus:
            seq = encode_elements(layout)
            assert decode_elements(seq, Mode.FURNITURE) == element_constraints(layout)

    @given(hs.lists(hs.tuples(hs.integers(0, 6), hs.integers(0, 63), hs.integers(0, 63)), max_size=40))
    def test_round_trip_property(self, tuples):
        seq = encode_tuples(tuples, V)
        assert decode_tuples(seq.values, V, slot_levels("floorplan")) == tuples
        assert seq.values.count(V.stop) == 1 and seq.values[-1] == V.stop


class TestEdges:
    def test_no_edges(self):
        assert encode_edge_pairs([], True).values == (S,)
        assert encode_edge_pairs([], False).values == (S,)

    def test_shortened(self):
        seq = encode_edge_pairs([(0, 1), (0, 2), (1, 2)], True)
        assert seq.values == (0, 1, 2, E, 1, 2, E, S)
        assert seq.types == (SRC, TGT, TGT, SPECIAL, SRC, TGT, SPECIAL, SPECIAL)

    def test_plain(self):
        seq = encode_edge_pairs([(0, 1), (1, 2)], False)
        assert seq.values == (0, 1, 1, 2, S)
        assert seq.types[:4] == (SRC, TGT, SRC, TGT)

    def test_decode_stop(self):
        assert decode_edges([S], "hadj") == []

    @pytest.mark.parametrize("tokens,shortened,offset", [
        ([0, 0, E, S], True, 1),        # self-edge
        ([0, E, S], True, 1),           # group with no targets
        ([E, S], True, 0),
        ([0, 1, E], True, 3),           # missing stop
        ([0, S], False, 1),             # dangling source
        ([0, 5, S], False, 1),          # index out of range
        ([0, 1, E, S], False, 2),       # group end in plain style
    ])
    def test_decode_errors(self, tokens, shortened, offset):
        with pytest.raises(DecodeError) as err:
            decode_edge_pairs(tokens, shortened, 3)
        assert err.value.offset == offset

    @pytest.mark.parametrize("kind", list(EdgeKind))
    @pytest.mark.parametrize("shortened", [True, False])
    def test_round_trip_corpus(self, corpus, kind, shortened):
        for layout in corpus:
            seq = encode_edges(layout, kind, shortened)
            got = decode_edges(seq, kind, shortened, len(layout.elements))
            assert sorted(got, key=lambda r: (r.i, r.j)) == sorted(layout.edges_of(kind), key=lambda r: (r.i, r.j))

    @given(hs.sets(hs.tuples(hs.integers(0, 9), hs.integers(0, 9)).filter(lambda p: p[0] != p[1]), max_size=30),
           hs.booleans())
    def test_round_trip_property(self, pairs, shortened):
        seq = encode_edge_pairs(pairs, shortened)
        assert decode_edge_pairs(seq, shortened, 10) == sorted(pairs)

    def test_sequence_lengths(self, corpus):
        for layout in corpus:
            for kind in ("hadj", "vadj"):
                pairs = {(r.i, r.j) for r in layout.edges_of(kind)}
                groups = len({i for i, _ in pairs})
                assert len(encode_edges(layout, kind, True)) == len(pairs) + 2 * groups + 1
                assert len(encode_edges(layout, kind, False)) == 2 * len(pairs) + 1


class TestCanonical:
    def test_idempotent(self, corpus):
        for layout in corpus[:50]:
            c = canonicalize(layout)
            assert canonicalize(c) == c

    def test_descriptive_edges_ordered(self):
        L = Layout(Mode.FLOORPLAN, elements=[Element(1, 2, 0, 2, 2), Element(2, 0, 0, 2, 2)],
                   edges=[Edge(0, 1, EdgeKind.DOOR), Edge(1, 0, EdgeKind.HADJ)])
        c = canonicalize(L)
        assert {(r.i, r.j, r.kind.value) for r in c.edges} == {(0, 1, "door"), (0, 1, "hadj")}


class TestTokenCache:
    def test_round_trip(self, tmp_path, corpus):
        seqs = [list(encode_edges(l, "hadj").values) for l in corpus[:30]] + [[V.type_token(1), 3, 4, V.stop]]
        p = tmp_path / "tok.bin"
        save_token_cache(p, seqs)
        assert load_token_cache(p) == seqs

    def test_truncated(self, tmp_path):
        p = tmp_path / "tok.bin"
        save_token_cache(p, [[1, 2, 3, S]])
        p.write_bytes(p.read_bytes()[:-3])
        with pytest.raises(LoadError):
            load_token_cache(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "tok.bin"
        p.write_bytes(b"nope")
        with pytest.raises(LoadError):
            load_token_cache(p)


def test_token_sequence_lengths_must_match():
    with pytest.raises(ValueError):
        TokenSequence((1, 2), (0,))
