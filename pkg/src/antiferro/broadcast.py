"""Antiferromagnetic broadcast process on the regular tree and exact root
posteriors given the spins at the deepest level.

Nodes are stored level by level.  The root has ``d`` children and every
other internal node ``d - 1``; the children of node ``j`` on level ``l`` are
a contiguous block of level ``l + 1``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._random import stream

MAX_NODES = 10 ** 8


def tree_node_count(d: int, depth: int) -> int:
    return 1 + d * ((d - 1) ** depth - 1) // (d - 2)


def _level_sizes(d: int, depth: int):
    return [1] + [d * (d - 1) ** (lv - 1) for lv in range(1, depth + 1)]


@dataclass(frozen=True)
class BroadcastTree:
    d: int
    depth: int
    levels: tuple

    @property
    def spins(self) -> np.ndarray:
        return np.concatenate(self.levels)

    @property
    def boundary(self) -> np.ndarray:
        return self.levels[-1]


def _check_tree_shape(d: int, depth: int) -> None:
    if d < 3:
        raise ValueError("d must be >= 3")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if tree_node_count(d, depth) > MAX_NODES:
        raise ValueError(f"tree with d={d}, depth={depth} exceeds {MAX_NODES} nodes")


def keep_probability(beta: float) -> float:
    """Probability that a child copies its parent's spin."""
    return float(np.exp(-beta) / (1 + np.exp(-beta)))


def sample_broadcast(d: int, depth: int, beta: float, seed=0, rng=None) -> BroadcastTree:
    """Uniform root spin; each child copies its parent with probability
    ``e^{-beta} / (1 + e^{-beta})`` and takes the opposite spin otherwise."""
    _check_tree_shape(d, depth)
    if beta < 0:
        raise ValueError("beta must be >= 0")
    rng = stream(seed) if rng is None else rng
    keep = keep_probability(beta)
    levels = [rng.choice(np.array([1, -1], dtype=np.int8), size=1)]
    for lv in range(1, depth + 1):
        branching = d if lv == 1 else d - 1
        parent = np.repeat(levels[-1], branching)
        flip = rng.random(parent.size) >= keep
        levels.append(np.where(flip, -parent, parent).astype(np.int8))
    return BroadcastTree(d, depth, tuple(levels))


def _message(h, beta: float):
    """Log-likelihood ratio passed to a parent by a child with LLR ``h``."""
    return np.logaddexp(h - beta, 0.0) - np.logaddexp(h, -beta)


def root_llr(tree: BroadcastTree, beta: float) -> float:
    """``log Pr[boundary | root=+1] - log Pr[boundary | root=-1]``."""
    boundary = tree.boundary.astype(float)
    # a leaf with spin s favours the opposite parent spin: LLR -beta*s
    msg = -beta * boundary
    for lv in range(tree.depth - 1, -1, -1):
        branching = tree.d if lv == 0 else tree.d - 1
        h = msg.reshape(-1, branching).sum(axis=1)
        if lv == 0:
            return float(h[0])
        msg = _message(h, beta)
    raise AssertionError("unreachable")


def root_posterior(tree: BroadcastTree, beta: float) -> float:
    """``Pr[root = +1 | spins on the deepest level]`` under a uniform prior."""
    return float(1.0 / (1.0 + np.exp(-root_llr(tree, beta))))


def _trial_bias(d: int, beta: float, depth: int, seed: int, idx: int) -> float:
    tree = sample_broadcast(d, depth, beta, rng=stream(seed, idx))
    return abs(root_posterior(tree, beta) - 0.5)


def _trial_block(d, beta, depth, seed, indices):
    return [_trial_bias(d, beta, depth, seed, i) for i in indices]


def reconstruction_error(d: int, beta: float, depth: int = 8, trials: int = 2000,
                         seed: int = 0, workers: int = 1):
    """Monte-Carlo ``E|Pr[root=+1 | boundary] - 1/2|`` with its standard error."""
    _check_tree_shape(d, depth)
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if workers > 1:
        blocks = np.array_split(np.arange(trials), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_trial_block, *zip(*[(d, beta, depth, seed, b) for b in blocks]))
            values = np.concatenate([np.asarray(p) for p in parts])
    else:
        values = np.array(_trial_block(d, beta, depth, seed, range(trials)))
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(trials))
