import math
from itertools import product

import numpy as np
import pytest

from antiferro._random import stream
from antiferro.broadcast import (
    BroadcastTree,
    reconstruction_error,
    root_posterior,
    sample_broadcast,
    tree_node_count,
)


def tree_from_boundary(d, depth, boundary):
    sizes = [1] + [d * (d - 1) ** (lv - 1) for lv in range(1, depth + 1)]
    levels = [np.ones(s, dtype=np.int8) for s in sizes[:-1]] + [np.asarray(boundary, dtype=np.int8)]
    return BroadcastTree(d, depth, tuple(levels))


def brute_posterior(d, depth, boundary, beta):
    """Sum over every assignment of the hidden nodes."""
    sizes = [1] + [d * (d - 1) ** (lv - 1) for lv in range(1, depth + 1)]
    hidden = sum(sizes[:-1])
    weight = {1: 0.0, -1: 0.0}
    for spins in product([1, -1], repeat=hidden):
        levels, pos = [], 0
        for s in sizes[:-1]:
            levels.append(np.array(spins[pos:pos + s]))
            pos += s
        levels.append(np.asarray(boundary))
        log_w = 0.0
        for lv in range(1, depth + 1):
            branching = d if lv == 1 else d - 1
            parent = np.repeat(levels[lv - 1], branching)
            log_w -= beta * np.sum(parent == levels[lv])
        weight[int(levels[0][0])] += math.exp(log_w)
    return weight[1] / (weight[1] + weight[-1])


class TestTree:
    @pytest.mark.parametrize("d,depth", [(3, 1), (3, 4), (4, 3), (5, 2)])
    def test_node_count(self, d, depth):
        tree = sample_broadcast(d, depth, 1.0, seed=0)
        assert tree.spins.size == tree_node_count(d, depth)
        assert tree.levels[1].size == d

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            sample_broadcast(2, 3, 1.0)
        with pytest.raises(ValueError):
            sample_broadcast(3, 0, 1.0)
        with pytest.raises(ValueError):
            sample_broadcast(3, 30, 1.0)

    def test_beta_zero_iid(self):
        spins = np.concatenate([sample_broadcast(3, 6, 0.0, seed=s).spins for s in range(50)])
        assert abs(spins.mean()) < 4 / math.sqrt(spins.size)

    def test_same_spin_fraction(self):
        beta = 1.2
        same, total = 0, 0
        for s in range(200):
            tree = sample_broadcast(3, 6, beta, seed=s)
            for lv in range(1, tree.depth + 1):
                branching = 3 if lv == 1 else 2
                parent = np.repeat(tree.levels[lv - 1], branching)
                same += int(np.sum(parent == tree.levels[lv]))
                total += parent.size
        p = math.exp(-beta) / (1 + math.exp(-beta))
        assert abs(same / total - p) <= 3 * math.sqrt(p * (1 - p) / total)

    def test_zero_temperature_alternates(self):
        tree = sample_broadcast(3, 5, 50.0, seed=1)
        root = tree.levels[0][0]
        for lv, spins in enumerate(tree.levels):
            np.testing.assert_array_equal(spins, root * (-1) ** lv)


class TestPosterior:
    def test_depth_one(self):
        tree = tree_from_boundary(3, 1, [-1, -1, -1])
        assert root_posterior(tree, 1.0) == pytest.approx(1 / (1 + math.exp(-3)), abs=1e-14)

    def test_beta_zero(self):
        tree = sample_broadcast(3, 5, 1.0, seed=2)
        assert root_posterior(tree, 0.0) == 0.5

    def test_global_flip(self):
        tree = sample_broadcast(4, 4, 1.0, seed=3)
        flipped = BroadcastTree(tree.d, tree.depth, tuple(-lv for lv in tree.levels))
        assert root_posterior(flipped, 1.0) == pytest.approx(1 - root_posterior(tree, 1.0), abs=1e-14)

    def test_interior_spins_ignored(self):
        tree = sample_broadcast(3, 4, 1.0, seed=4)
        scrambled = tree_from_boundary(3, 4, tree.boundary)
        assert root_posterior(scrambled, 1.0) == root_posterior(tree, 1.0)

    def test_sibling_permutation(self):
        rng = stream(5)
        tree = sample_broadcast(3, 5, 1.3, seed=5)
        boundary = tree.boundary.reshape(-1, 2)
        # swap the two children of randomly chosen depth-4 nodes
        swap = rng.random(boundary.shape[0]) < 0.5
        boundary = np.where(swap[:, None], boundary[:, ::-1], boundary)
        permuted = tree_from_boundary(3, 5, boundary.ravel())
        assert root_posterior(permuted, 1.3) == pytest.approx(root_posterior(tree, 1.3), abs=1e-14)

    @pytest.mark.parametrize("d,depth", [(3, 2), (4, 2), (3, 3)])
    def test_brute_force(self, d, depth):
        rng = stream(6)
        size = d * (d - 1) ** (depth - 1)
        for _ in range(3):
            boundary = rng.choice([1, -1], size=size)
            tree = tree_from_boundary(d, depth, boundary)
            assert root_posterior(tree, 0.9) == pytest.approx(brute_posterior(d, depth, boundary, 0.9), abs=1e-12)

    def test_deep_tree_finite(self):
        tree = sample_broadcast(3, 22, 3.0, seed=7)
        p = root_posterior(tree, 3.0)
        assert 0.0 <= p <= 1.0 and math.isfinite(p)

    def test_mean_posterior_half(self):
        vals = np.array([root_posterior(sample_broadcast(3, 4, 1.5, seed=s), 1.5) for s in range(2000)])
        assert abs(vals.mean() - 0.5) <= 3 * vals.std(ddof=1) / math.sqrt(vals.size)


class TestReconstruction:
    def test_beta_zero(self):
        assert reconstruction_error(3, 0.0, 4, 100, seed=0) == (0.0, 0.0)

    def test_rejects_few_trials(self):
        with pytest.raises(ValueError):
            reconstruction_error(3, 1.0, 4, 99)

    def test_worker_count_irrelevant(self):
        a = reconstruction_error(3, 1.5, 4, 200, seed=1, workers=1)
        b = reconstruction_error(3, 1.5, 4, 200, seed=1, workers=2)
        assert a == pytest.approx(b, abs=1e-15)

    @pytest.mark.parametrize("d,beta", [(3, 1.4), (4, 1.0)])
    def test_monotone_trend_below_threshold(self, d, beta):
        est = [reconstruction_error(d, beta, depth, 1000, seed=2) for depth in (2, 4, 6, 8)]
        for (m1, s1), (m2, s2) in zip(est, est[1:]):
            assert m2 <= m1 + 3 * math.hypot(s1, s2)
