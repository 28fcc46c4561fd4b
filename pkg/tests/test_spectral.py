import numpy as np
import pytest
import scipy.linalg as sla

from cutonce import ContractError, ParameterError, solve_fiedler
from cutonce.affinity import AffinityGraph

from conftest import random_graph


def full_eigh_oracle(graph):
    """Complete eigendecomposition of the symmetrized problem."""
    d = graph.degrees
    dmh = 1.0 / np.sqrt(d)
    lap = np.diag(np.full(graph.n_nodes, 1.0)) - dmh[:, None] * graph.weights * dmh[None, :]
    vals, vecs = sla.eigh((lap + lap.T) / 2)
    return vals, dmh[:, None] * vecs


def block_graph(sizes, strong=1.0, weak=1e-5):
    n = sum(sizes)
    w = np.full((n, n), weak)
    start = 0
    for s in sizes:
        w[start:start + s, start:start + s] = strong
        start += s
    d = w.sum(axis=1)
    return AffinityGraph(weights=w, degrees=d, n_nodes=n)


class TestSolveFiedler:
    def test_two_pair_blocks(self):
        g = block_graph([2, 2])
        r = solve_fiedler(g, "dense")
        vals, vecs = full_eigh_oracle(g)
        assert abs(r.lambda1 - vals[1]) < 1e-10
        s = np.sign(r.fiedler)
        assert s[0] == s[1] and s[2] == s[3] and s[0] != s[2]

    def test_complete_graph_contracts_only(self):
        n = 8
        w = np.ones((n, n))
        g = AffinityGraph(weights=w, degrees=w.sum(axis=1), n_nodes=n)
        r = solve_fiedler(g, "dense")
        assert r.residual <= 1e-6
        assert 0.0 <= r.lambda1 <= 2.0
        # D-orthogonal to the trivial eigenvector
        assert abs(r.fiedler @ g.degrees) <= 1e-6 * np.linalg.norm(g.degrees)

    def test_dense_iterative_agree(self):
        g = random_graph(50, seed=7, nblocks=2)
        rd = solve_fiedler(g, "dense")
        ri = solve_fiedler(g, "iterative")
        cos = abs(rd.fiedler @ ri.fiedler) / (
            np.linalg.norm(rd.fiedler) * np.linalg.norm(ri.fiedler)
        )
        assert cos >= 0.999

    def test_rejects_bad_solver(self):
        g = block_graph([2, 2])
        with pytest.raises(ParameterError):
            solve_fiedler(g, "magic")

    def test_rejects_nonpositive_degree(self):
        g = block_graph([2, 2])
        bad = AffinityGraph(weights=g.weights, degrees=g.degrees * 0.0, n_nodes=4)
        with pytest.raises(ContractError):
            solve_fiedler(bad, "dense")

    def test_unit_d_norm_and_sign(self):
        g = random_graph(40, seed=3, nblocks=3)
        r = solve_fiedler(g, "dense")
        assert abs((r.fiedler**2 * g.degrees).sum() - 1.0) < 1e-9
        assert r.fiedler[np.argmax(np.abs(r.fiedler))] > 0

    def test_matches_full_oracle(self):
        for seed in range(5):
            g = random_graph(60, seed=seed, nblocks=2)
            r = solve_fiedler(g, "dense")
            vals, vecs = full_eigh_oracle(g)
            assert abs(r.lambda1 - vals[1]) < 1e-8
            x = vecs[:, 1]
            cos = abs(r.fiedler @ x) / (np.linalg.norm(r.fiedler) * np.linalg.norm(x))
            assert cos > 0.999999

    def test_shift_invert_path_used_and_correct(self):
        g = random_graph(700, seed=11, nblocks=3, flip_frac=0.002)
        r = solve_fiedler(g, "dense")
        assert r.residual <= 1e-6
        vals, _ = full_eigh_oracle(g)
        assert abs(r.lambda1 - vals[1]) < 1e-8

    def test_dense_bit_reproducible(self):
        g = random_graph(64, seed=5, nblocks=2)
        r1 = solve_fiedler(g, "dense")
        r2 = solve_fiedler(g, "dense")
        assert np.array_equal(r1.fiedler, r2.fiedler)
        assert r1.lambda1 == r2.lambda1


class TestResidualBounds:
    @pytest.mark.parametrize("solver,tol", [("dense", 1e-6), ("iterative", 1e-5)])
    def test_residual_bound(self, solver, tol):
        for seed in (0, 1, 2):
            g = random_graph(48, seed=seed, nblocks=2)
            r = solve_fiedler(g, solver)
            # recompute independently
            d, w, x = g.degrees, g.weights, r.fiedler
            res = np.linalg.norm(d * x - w @ x - r.lambda1 * d * x) / np.linalg.norm(x)
            assert res <= tol
            assert abs(res - r.residual) < 1e-12


class TestPlantedBipartition:
    def test_sign_pattern_recovers_planted_split(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            n = int(rng.integers(8, 200))
            cut = int(rng.integers(2, n - 2))
            g = block_graph([cut, n - cut])
            r = solve_fiedler(g, "dense")
            s = np.sign(r.fiedler)
            assert len(set(s[:cut])) == 1
            assert len(set(s[cut:])) == 1
            assert s[0] != s[-1]
