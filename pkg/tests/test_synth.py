import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from laygen.errors import GenError, LoadError
from laygen.layout import EdgeKind, Mode, door_graph, interiors_overlap, validate_layout
from laygen.stats import topo_stats
from laygen.synth import (GenConfig, adjacency_edges, generate_corpus, generate_floorplan, generate_furniture,
                          load_corpus, save_corpus, split_corpus)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestFloorplan:
    def test_single_element(self):
        L = generate_floorplan(GenConfig(min_elements=1, max_elements=1), rng())
        assert len(L.elements) == 1
        assert validate_layout(L) == []

    def test_thousand_valid(self):
        for L in generate_corpus(GenConfig(seed=3, n_layouts=1000)):
            assert validate_layout(L) == []

    def test_deterministic(self):
        cfg = GenConfig(seed=42, n_layouts=30)
        assert generate_corpus(cfg) == generate_corpus(cfg)
        assert generate_corpus(cfg) != generate_corpus(GenConfig(seed=43, n_layouts=30))

    @given(hs.integers(0, 10_000), hs.integers(1, 12), hs.integers(2, 8))
    def test_tiling_and_grid(self, seed, n, s):
        cfg = GenConfig(min_elements=n, max_elements=n, min_size=s)
        try:
            L = generate_floorplan(cfg, rng(seed))
        except GenError:
            return
        assert len(L.elements) == n
        x0, y0, x1, y1 = L.bbox()
        assert sum(e.area for e in L.elements) == (x1 - x0) * (y1 - y0)
        for e in L.elements:
            assert all(float(v).is_integer() for v in (e.x, e.y, e.w, e.h))
            assert min(e.w, e.h) >= s
        assert not any(interiors_overlap(a, b) for k, a in enumerate(L.elements) for b in L.elements[k + 1:])

    def test_adjacency_exactly_geometric(self, corpus):
        for L in corpus[:100]:
            got = {(r.i, r.j, r.kind) for r in L.edges if r.kind in (EdgeKind.HADJ, EdgeKind.VADJ)}
            want = {(r.i, r.j, r.kind) for r in adjacency_edges(L.elements)}
            assert got == want

    def test_walls_between_same_type(self):
        for L in generate_corpus(GenConfig(seed=1, n_layouts=100, wall_prob=1.0)):
            for r in L.edges_of(EdgeKind.WALL):
                assert L.elements[r.i].t == L.elements[r.j].t

    def test_doors_connect_everything(self, corpus):
        for L in corpus[:100]:
            g = door_graph(L)
            d = g.distances_from(g.exterior)
            assert all(d[k] >= 0 for k in g.interior_rooms())
        assert not topo_stats(corpus)[-1].value.any()

    def test_inaccessible_injection(self):
        corpus = generate_corpus(GenConfig(seed=2, n_layouts=50, inaccessible_prob=0.5))
        assert topo_stats(corpus)[-1].value.sum() > 0

    def test_unsatisfiable(self):
        with pytest.raises(GenError):
            generate_floorplan(GenConfig(min_elements=200, max_elements=200, min_size=5), rng())


class TestFurniture:
    cfg = GenConfig(mode="furniture", min_pieces=0, max_pieces=8)

    def test_zero_pieces(self):
        L = generate_furniture(GenConfig(mode="furniture", min_pieces=0, max_pieces=0), rng())
        assert L.mode is Mode.FURNITURE and L.elements == () and L.edges == ()

    def test_angles_and_containment(self):
        room = (4, 6, 30, 20)
        for seed in range(100):
            L = generate_furniture(self.cfg, rng(seed), room)
            for e in L.elements:
                assert 0 <= e.a < 2 * math.pi
                assert e.x >= 4 and e.y >= 6 and e.x2 <= 34 and e.y2 <= 26
            assert not any(interiors_overlap(a, b) for k, a in enumerate(L.elements) for b in L.elements[k + 1:])

    def test_deterministic(self):
        cfg = GenConfig(seed=9, n_layouts=20, mode="furniture")
        assert generate_corpus(cfg) == generate_corpus(cfg)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"min_size": 1}, {"min_elements": 0}, {"min_elements": 4, "max_elements": 3},
                                    {"min_pieces": 3, "max_pieces": 1}, {"type_weights": {"garage": 1.0}}])
    def test_rejects(self, kw):
        with pytest.raises(GenError):
            GenConfig(**kw)

    def test_from_file(self, tmp_path):
        p = tmp_path / "gen.ini"
        p.write_text("[gen]\nseed = 7\nn_layouts = 12\nwall_prob = 0.5\ntype_weights = bedroom:2, kitchen:1\n")
        cfg = GenConfig.from_file(p)
        assert (cfg.seed, cfg.n_layouts, cfg.wall_prob) == (7, 12, 0.5)
        assert cfg.type_weights == {"bedroom": 2.0, "kitchen": 1.0}

    @pytest.mark.parametrize("text", ["seed = 1\n", "[gen]\nseed = x\n", "[gen]\ncolour = red\n"])
    def test_from_file_errors(self, tmp_path, text):
        p = tmp_path / "gen.ini"
        p.write_text(text)
        with pytest.raises(LoadError):
            GenConfig.from_file(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(LoadError):
            GenConfig.from_file(tmp_path / "nope.ini")


class TestCorpusIO:
    def test_round_trip(self, tmp_path):
        corpus = generate_corpus(GenConfig(seed=4, n_layouts=1000))
        save_corpus(tmp_path / "c.jsonl", corpus)
        assert load_corpus(tmp_path / "c.jsonl") == corpus

    def test_furniture_round_trip(self, tmp_path, furniture_corpus):
        save_corpus(tmp_path / "f.jsonl", furniture_corpus)
        assert load_corpus(tmp_path / "f.jsonl") == furniture_corpus

    def test_truncated(self, tmp_path, corpus):
        p = tmp_path / "c.jsonl"
        save_corpus(p, corpus[:5])
        text = p.read_text()
        p.write_text(text[:len(text) - 40])
        with pytest.raises(LoadError) as err:
            load_corpus(p)
        assert err.value.line == 5

    def test_empty(self, tmp_path):
        p = tmp_path / "e.jsonl"
        p.write_text("")
        assert load_corpus(p) == []

    def test_split(self):
        tr, va, te = split_corpus(list(range(100)))
        assert (len(tr), len(va), len(te)) == (90, 5, 5)
        assert tr + va + te == list(range(100))
