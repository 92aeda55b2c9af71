"""Glauber heat-bath sampling, replica overlaps and greedy local search."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._random import stream
from .analytic import beta_star
from .graphs import HalfEdgeGraph, _check_sigma, cut_size

_CHUNK_SWEEPS = 1024


@dataclass
class ChainState:
    """Spins, sweeps done so far and the chain's private generator."""

    sigma: np.ndarray
    sweep_count: int
    rng: np.random.Generator

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "ChainState":
        return cls(rng.choice(np.array([1, -1], dtype=np.int8), size=n), 0, rng)


@dataclass(frozen=True)
class OverlapEstimate:
    mean: float
    stderr: float
    pairs: int
    sweeps: int
    # chains above the reconstruction threshold may not have mixed
    qualitative: bool


def run_glauber(g: HalfEdgeGraph, sigma, beta: float, sweeps: int,
                rng: np.random.Generator, record: bool = False, csr=None):
    """Run ``sweeps`` heat-bath sweeps from ``sigma``.

    Each sweep visits all vertices in a fresh uniform order.  Returns the
    final spins and, if ``record``, a ``(sweeps, n)`` int8 array of the spins
    after each sweep.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    s = _check_sigma(g, sigma).copy()
    indptr, indices = csr if csr is not None else g.neighbor_csr()
    n = g.n
    snaps = np.empty((sweeps if record else 0, n), dtype=np.int8)
    done = 0
    while done < sweeps:
        c = min(_CHUNK_SWEEPS, sweeps - done)
        orders = np.argsort(rng.random((c, n)), axis=1)
        uniforms = rng.random((c, n))
        buf = snaps[done:done + c] if record else np.empty((0, n), dtype=np.int8)
        _kernels.heat_bath_sweeps(indptr, indices, s, float(beta), orders, uniforms, buf)
        done += c
    return s, (snaps if record else None)


def glauber_sweep(g: HalfEdgeGraph, state: ChainState, beta: float) -> ChainState:
    """One sweep of ``n`` heat-bath updates; the generator is advanced in place."""
    sigma, _ = run_glauber(g, state.sigma, beta, 1, state.rng)
    return ChainState(sigma, state.sweep_count + 1, state.rng)


def _pair_overlap(g: HalfEdgeGraph, beta: float, sweeps: int, seed: int, pair: int) -> float:
    csr = g.neighbor_csr()
    burn = sweeps // 2
    trajectories = []
    for side in (0, 1):
        rng = stream(seed, pair, side)
        state = ChainState.random(g.n, rng)
        sigma, _ = run_glauber(g, state.sigma, beta, burn, rng, csr=csr) if burn else (state.sigma, None)
        _, snaps = run_glauber(g, sigma, beta, sweeps - burn, rng, record=True, csr=csr)
        trajectories.append(snaps.astype(np.int32))
    q = np.abs(np.sum(trajectories[0] * trajectories[1], axis=1)) / g.n
    return float(q.mean())


def estimate_overlap(g: HalfEdgeGraph, beta: float, replicas: int = 80, sweeps: int = 1000,
                     seed: int = 0, workers: int = 1) -> OverlapEstimate:
    """Mean of ``|sigma . sigma'| / n`` over independent chain pairs.

    Each pair is time-averaged over the second half of its ``sweeps``; the
    first half is discarded as burn-in.
    """
    if replicas < 2 or replicas % 2:
        raise ValueError("replicas must be an even integer >= 2")
    if sweeps < 2:
        raise ValueError("sweeps must be >= 2")
    pairs = replicas // 2
    args = [(g, beta, sweeps, seed, p) for p in range(pairs)]
    if workers > 1 and pairs > 1:
        with ProcessPoolExecutor(max_workers=min(workers, pairs)) as pool:
            values = list(pool.map(_pair_overlap, *zip(*args)))
    else:
        values = [_pair_overlap(*a) for a in args]
    values = np.array(values)
    stderr = float(values.std(ddof=1) / np.sqrt(pairs)) if pairs > 1 else float("nan")
    qualitative = 3 <= g.d <= 64 and beta > beta_star(g.d)
    return OverlapEstimate(float(values.mean()), stderr, pairs, sweeps, qualitative)


def local_search_maxcut(g: HalfEdgeGraph, restarts: int = 10, seed: int = 0):
    """Best of ``restarts`` greedy single-flip ascents from random spins.

    Returns ``(cut, sigma)``.  At the result no single flip increases the cut.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    indptr, indices = g.neighbor_csr()
    best_cut, best_sigma = -1, None
    for r in range(restarts):
        sigma = ChainState.random(g.n, stream(seed, r)).sigma
        _kernels.greedy_flip(indptr, indices, sigma)
        cut = cut_size(g, sigma)
        if cut > best_cut:
            best_cut, best_sigma = cut, sigma
    return best_cut, best_sigma
