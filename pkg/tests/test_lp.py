import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from laygen.errors import FormulationError, LoadError, SolverStalled
from laygen.lp import EQ, GE, LE, LinearProgram, Status, dump_lp, load_lp, solve

from oracles import build, infeasible_cases, lp_grid_min, lp_vertices_min, random_feasible_lp


class TestExamples:
    def test_bound_active(self):
        s = solve(build([1.0], [], lo=[3.0], hi=[10.0]))
        assert s.status is Status.OPTIMAL and s.values[0] == 3.0 and s.objective == 3.0

    def test_two_vars(self):
        c, rows = [1.0, 1.0], [([1.0, 1.0], GE, 4.0), ([1.0, -1.0], EQ, 0.0)]
        s = solve(build(c, rows))
        np.testing.assert_allclose(s.values, [2.0, 2.0], atol=1e-9)
        assert s.objective == pytest.approx(4.0)
        assert lp_grid_min(c, [rows[0], ([1.0, -1.0], LE, 0.0), ([1.0, -1.0], GE, 0.0)]) == pytest.approx(4.0)

    def test_contradiction(self):
        assert solve(build([1.0], [([1.0], LE, 1.0), ([1.0], GE, 2.0)])).status is Status.INFEASIBLE

    @pytest.mark.parametrize("k", range(20))
    def test_infeasible_cases(self, k):
        assert solve(infeasible_cases()[k]).status is Status.INFEASIBLE


class TestOracle:
    def test_random_against_vertex_enumeration(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            c, rows = random_feasible_lp(rng)
            n = len(c)
            s = solve(build(c, rows))
            assert s.status is Status.OPTIMAL
            want = lp_vertices_min(c, rows, [0.0] * n, [64.0] * n)
            assert s.objective == pytest.approx(want, abs=1e-6)
            assert build(c, rows).residuals(s.values) <= 1e-7

    def test_small_against_grid(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            c, rows = random_feasible_lp(rng, n=int(rng.integers(1, 3)))
            s = solve(build(c, rows))
            g = lp_grid_min(c, rows)
            # grid points are feasible, so the grid minimum is never better
            assert g >= s.objective - 1e-7
            assert g - s.objective <= 0.01 * np.abs(c).sum() + 1e-7

    @given(hs.integers(0, 100_000))
    def test_row_permutation(self, seed):
        rng = np.random.default_rng(seed)
        c, rows = random_feasible_lp(rng, max_rows=5)
        perm = rng.permutation(len(rows))
        a, b = solve(build(c, rows)), solve(build(c, [rows[k] for k in perm]))
        assert a.status is b.status
        assert abs(a.objective - b.objective) < 1e-9

    @given(hs.integers(0, 100_000))
    def test_complementary_slackness(self, seed):
        rng = np.random.default_rng(seed)
        c, rows = random_feasible_lp(rng, max_rows=4)
        lp = build(c, rows)
        s = solve(lp)
        A, rels, b = lp.dense()
        slack = A @ s.values - b
        for y, sl, rel in zip(s.duals, slack, rels):
            assert abs(y * sl) < 1e-6
            if rel == LE:
                assert y <= 1e-9
            elif rel == GE:
                assert y >= -1e-9
        assert np.all(np.abs(s.bound_duals * (s.values - lp.hi)) < 1e-6)
        assert np.all(np.abs(s.reduced_costs * (s.values - lp.lo)) < 1e-6)
        # strong duality on the shifted problem
        dual_obj = s.duals @ b + s.bound_duals @ lp.hi + s.reduced_costs @ lp.lo
        assert dual_obj == pytest.approx(s.objective, abs=1e-6)


class TestBehaviour:
    def test_unbounded_rejected_at_construction(self):
        with pytest.raises(FormulationError):
            LinearProgram(1, [1.0], lo=[-np.inf], hi=[0.0])

    def test_bad_relation(self):
        lp = LinearProgram(1)
        with pytest.raises(FormulationError):
            lp.add_row({0: 1.0}, "<", 3.0)

    def test_stall_cap(self):
        rng = np.random.default_rng(3)
        c, rows = random_feasible_lp(rng, n=6, max_rows=3)
        with pytest.raises(SolverStalled):
            solve(build(c, rows), max_iter=0)

    def test_degenerate(self):
        # many constraints through the optimum vertex
        rows = [([1.0, 1.0], GE, 2.0), ([2.0, 1.0], GE, 3.0), ([1.0, 2.0], GE, 3.0), ([3.0, 1.0], GE, 4.0)]
        s = solve(build([1.0, 1.0], rows))
        assert s.objective == pytest.approx(2.0)

    def test_thread_safety(self):
        from concurrent.futures import ThreadPoolExecutor
        rng = np.random.default_rng(5)
        lps = [build(*random_feasible_lp(rng)) for _ in range(20)]
        serial = [solve(lp).objective for lp in lps]
        with ThreadPoolExecutor(4) as pool:
            assert list(pool.map(lambda lp: solve(lp).objective, lps)) == serial


class TestDump:
    def test_round_trip(self):
        rng = np.random.default_rng(1)
        c, rows = random_feasible_lp(rng, n=4)
        lp = build(c, rows, lo=[0.0, 1.0, 0.0, 2.5], hi=[64.0, 30.0, 64.0, 64.0])
        back = load_lp(dump_lp(lp))
        assert dump_lp(back) == dump_lp(lp)
        assert solve(back).objective == solve(lp).objective

    def test_comments_and_errors(self):
        lp = load_lp("# tiny\nvars 1\nmin 0:1.0\nrow >= 2 0:1\nbound 0 0 64\n")
        assert solve(lp).objective == 2.0
        with pytest.raises(LoadError) as err:
            load_lp("vars 1\nrow >= x 0:1\n")
        assert err.value.line == 2
        with pytest.raises(LoadError):
            load_lp("min 0:1\n")
        with pytest.raises(LoadError):
            load_lp("")
