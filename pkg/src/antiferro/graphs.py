"""Pairing-model multigraphs, planted sampling and exact small-graph oracles.

A graph on ``n`` vertices of degree ``d`` is a perfect matching of the
``n * d`` clones; clone ``c`` belongs to vertex ``c // d``.  Loops and
multi-edges are allowed.  A loop is monochromatic by definition, so it adds
1 to the Hamiltonian and is never cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln, logsumexp

from . import _kernels
from ._random import stream
from .analytic import EdgeTypeDistribution

MAX_EXACT_N = 24
_CHUNK_BITS = 16


@dataclass(frozen=True)
class HalfEdgeGraph:
    n: int
    d: int
    pairing: np.ndarray

    def __post_init__(self):
        p = np.array(self.pairing, dtype=np.int64)
        k = self.n * self.d
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if p.shape != (k,):
            raise ValueError(f"pairing must have length n*d = {k}")
        idx = np.arange(k)
        if np.any(p < 0) or np.any(p >= k) or np.any(p == idx) or np.any(p[p] != idx):
            raise ValueError("pairing must be a fixed-point-free involution")
        p.setflags(write=False)
        object.__setattr__(self, "pairing", p)

    @property
    def m(self) -> int:
        return self.n * self.d // 2

    def edges(self) -> np.ndarray:
        """``(m, 2)`` vertex pairs, one row per matched clone pair."""
        c = np.flatnonzero(np.arange(self.pairing.size) < self.pairing)
        return np.column_stack([c // self.d, self.pairing[c] // self.d])

    def neighbor_csr(self):
        """``(indptr, indices)`` of neighbours with multiplicity, loops dropped."""
        src = np.arange(self.pairing.size) // self.d
        dst = self.pairing // self.d
        keep = src != dst
        indices = dst[keep]
        counts = np.bincount(src[keep], minlength=self.n)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return indptr.astype(np.int64), indices.astype(np.int64)


def _check_sigma(g: HalfEdgeGraph, sigma) -> np.ndarray:
    s = np.asarray(sigma)
    if s.shape != (g.n,):
        raise ValueError(f"spin configuration must have length {g.n}, got shape {s.shape}")
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spins must be +1 or -1")
    return s.astype(np.int8)


def from_edges(n: int, d: int, edges) -> HalfEdgeGraph:
    """Build a graph from vertex pairs, assigning clones in order of appearance."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.shape[0] * 2 != n * d:
        raise ValueError(f"expected {n * d // 2} edges, got {edges.shape[0]}")
    if np.any(edges < 0) or np.any(edges >= n):
        raise ValueError("vertex index out of range")
    used = np.zeros(n, dtype=np.int64)
    pairing = np.empty(n * d, dtype=np.int64)
    for u, v in edges:
        cu = u * d + used[u]
        used[u] += 1
        cv = v * d + used[v]
        used[v] += 1
        if used[u] > d or used[v] > d:
            raise ValueError("a vertex exceeds degree d")
        pairing[cu], pairing[cv] = cv, cu
    return HalfEdgeGraph(n, d, pairing)


def sample_configuration_model(n: int, d: int, seed: int) -> HalfEdgeGraph:
    """Uniform random perfect matching on the ``n * d`` clones."""
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    if (n * d) % 2:
        raise ValueError("n * d must be even")
    return HalfEdgeGraph(n, d, _uniform_pairing(n * d, stream(seed)))


def _uniform_pairing(k: int, rng: np.random.Generator) -> np.ndarray:
    perm = rng.permutation(k)
    pairing = np.empty(k, dtype=np.int64)
    pairing[perm[0::2]] = perm[1::2]
    pairing[perm[1::2]] = perm[0::2]
    return pairing


def is_simple(g: HalfEdgeGraph):
    """``(simple, loops, multi_edges)``; ``multi_edges`` counts vertex pairs
    joined by two or more edges."""
    e = g.edges()
    loop = e[:, 0] == e[:, 1]
    loops = int(loop.sum())
    pairs = np.sort(e[~loop], axis=1)
    if pairs.size:
        _, mult = np.unique(pairs, axis=0, return_counts=True)
        multi = int(np.sum(mult >= 2))
    else:
        multi = 0
    return loops == 0 and multi == 0, loops, multi


def hamiltonian(g: HalfEdgeGraph, sigma) -> int:
    """Number of monochromatic edges, with multiplicity; loops count 1."""
    s = _check_sigma(g, sigma)
    e = g.edges()
    return int(np.sum(s[e[:, 0]] == s[e[:, 1]]))


def cut_size(g: HalfEdgeGraph, sigma) -> int:
    return g.m - hamiltonian(g, sigma)


def energy_counts(g: HalfEdgeGraph) -> np.ndarray:
    """``counts[h]`` = number of the ``2^n`` configurations with ``H = h``."""
    if g.n > MAX_EXACT_N:
        raise ValueError(f"exact enumeration limited to n <= {MAX_EXACT_N}")
    e = g.edges()
    counts = np.zeros(g.m + 1, dtype=np.int64)
    # H(sigma) = H(-sigma): fix the last spin and double
    half = 1 << (g.n - 1)
    chunk = 1 << min(_CHUNK_BITS, g.n - 1)
    for start in range(0, half, chunk):
        codes = np.arange(start, start + chunk, dtype=np.int64)
        h = np.zeros(chunk, dtype=np.int64)
        for u, v in e:
            h += 1 - (((codes >> u) ^ (codes >> v)) & 1)
        counts += np.bincount(h, minlength=g.m + 1)
    return 2 * counts


def exact_partition_function(g: HalfEdgeGraph, beta: float) -> float:
    """``log sum_sigma exp(-beta H(sigma))`` by full enumeration."""
    counts = energy_counts(g)
    h = np.flatnonzero(counts)
    return float(logsumexp(np.log(counts[h]) - beta * h))


def exact_maxcut(g: HalfEdgeGraph) -> int:
    counts = energy_counts(g)
    return g.m - int(np.flatnonzero(counts)[0])


def _spin_configuration(n: int, rng: np.random.Generator, balanced: bool) -> np.ndarray:
    if not balanced:
        return rng.choice(np.array([1, -1], dtype=np.int8), size=n)
    sigma = np.full(n, -1, dtype=np.int8)
    # |sum sigma| <= 1, uniformly among such configurations
    n_plus = n // 2 if n % 2 == 0 else n // 2 + rng.integers(2)
    sigma[rng.choice(n, size=n_plus, replace=False)] = 1
    return sigma


def edge_switch_mcmc(g: HalfEdgeGraph, sigma, beta: float, sweeps: int,
                     rng: np.random.Generator, trace_stride: int = 0,
                     chunk_sweeps: int = 256):
    """Metropolis chain on matchings with stationary law ``exp(-beta H(sigma))``.

    One sweep is ``n * d / 2`` proposals.  Returns ``(graph, acceptance_rate,
    trace)``; ``trace`` holds the matching after every ``trace_stride`` moves
    (``None`` when ``trace_stride`` is 0).
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    s = _check_sigma(g, sigma)
    k = g.n * g.d
    partner = np.array(g.pairing, dtype=np.int64)
    clone_spin = np.repeat(s, g.d)
    per_sweep = k // 2
    total_moves = sweeps * per_sweep
    if trace_stride:
        trace = np.empty((total_moves // trace_stride, k), dtype=np.int32)
    else:
        trace = np.empty((0, k), dtype=np.int32)
    chunk = chunk_sweeps * per_sweep
    if trace_stride:
        if total_moves % trace_stride:
            raise ValueError("trace_stride must divide the total number of moves")
        # batches stay aligned with the trace stride
        chunk = max(trace_stride, chunk - chunk % trace_stride)
    accepted = 0
    done = 0
    while done < total_moves:
        batch = min(chunk, total_moves - done)
        if trace_stride:
            rows = trace[done // trace_stride:(done + batch) // trace_stride]
            stride = trace_stride
        else:
            rows, stride = trace, 1
        first = rng.integers(k, size=batch)
        second = rng.integers(k, size=batch)
        flip = rng.integers(2, size=batch).astype(np.bool_)
        accept_u = rng.random(batch)
        accepted += _kernels.edge_switch_moves(partner, clone_spin, float(beta), first,
                                               second, flip, accept_u, stride, rows)
        done += batch
    out = HalfEdgeGraph(g.n, g.d, partner)
    return out, accepted / total_moves, (trace if trace_stride else None)


def sample_planted(n: int, d: int, beta: float, seed: int, sweeps: int = 200,
                   balanced: bool = False, simple: bool = False,
                   max_attempts: int = 1000, replica: int = 0):
    """Planted pairing model: ``sigma*`` uniform, matching weighted by
    ``exp(-beta H(sigma*))``, sampled by edge switches from a uniform start.

    ``balanced`` draws ``sigma*`` uniformly subject to ``|sum sigma*| <= 1``.
    ``simple`` rejects non-simple outputs, rerunning on a fresh stream.
    Randomness comes from the stream ``(seed, replica, attempt)``.
    """
    if (n * d) % 2 or n < 2:
        raise ValueError("need n >= 2 and n * d even")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    for attempt in range(max_attempts):
        rng = stream(seed, replica, attempt)
        sigma = _spin_configuration(n, rng, balanced)
        g0 = HalfEdgeGraph(n, d, _uniform_pairing(n * d, rng))
        g, _, _ = edge_switch_mcmc(g0, sigma, beta, sweeps, rng)
        if not simple or is_simple(g)[0]:
            return g, sigma
    raise RuntimeError(f"no simple graph after {max_attempts} attempts")


def planted_loop_mean(d: int, beta: float) -> float:
    """Limiting mean number of self-loops in the planted model."""
    return (d - 1) / (math.exp(beta) + 1)


def planted_double_edge_mean(d: int, beta: float) -> float:
    """Limiting mean number of double edges in the planted model."""
    return (d - 1) ** 2 * (1 + math.exp(2 * beta)) / (2 * (1 + math.exp(beta)) ** 2)


def _log_double_factorial_odd(k: int) -> float:
    """``log (k - 1)!!`` for even ``k >= 0``: matchings of ``k`` points."""
    half = k // 2
    return float(gammaln(k + 1) - gammaln(half + 1) - half * math.log(2))


def _as_count(x: float, what: str) -> int:
    r = round(x)
    if abs(x - r) > 1e-9 * max(1.0, abs(x)):
        raise ValueError(f"{what} = {x} is not an integer")
    return int(r)


def pairing_event_logprob(n: int, d: int, rho1: float, mu: EdgeTypeDistribution) -> float:
    """``log Pr`` that a uniform matching has the clone-pair counts given by
    ``mu``, for a fixed configuration with ``n * rho1`` plus spins."""
    k = n * d
    if k % 2:
        raise ValueError("n * d must be even")
    _as_count(n * rho1, "n * rho1")
    n_plus = _as_count(k * rho1, "dn * rho1")
    k_pp = _as_count(k * mu.mu_pp, "dn * mu_pp")
    k_pm = _as_count(k * mu.mu_pm, "dn * mu_pm")
    k_mm = _as_count(k * mu.mu_mm, "dn * mu_mm")
    if k_pp % 2 or k_mm % 2:
        raise ValueError("same-spin clone counts must be even")
    if k_pp + k_pm != n_plus:
        raise ValueError("mu is inconsistent with rho1")
    n_minus = k - n_plus
    log_binom = (gammaln(n_plus + 1) - gammaln(k_pm + 1) - gammaln(k_pp + 1)
                 + gammaln(n_minus + 1) - gammaln(k_pm + 1) - gammaln(k_mm + 1))
    return float(log_binom + gammaln(k_pm + 1) + _log_double_factorial_odd(k_pp)
                 + _log_double_factorial_odd(k_mm) - _log_double_factorial_odd(k))


def enumerate_matchings(k: int) -> np.ndarray:
    """All ``(k - 1)!!`` perfect matchings of ``k`` points as partner arrays."""
    if k % 2 or k < 2 or k > 14:
        raise ValueError("k must be even and at most 14")
    out = []
    partner = np.empty(k, dtype=np.int64)

    def rec(free):
        if not free:
            out.append(partner.copy())
            return
        a = free[0]
        for j in range(1, len(free)):
            b = free[j]
            partner[a], partner[b] = b, a
            rec(free[1:j] + free[j + 1:])

    rec(list(range(k)))
    return np.array(out)


def write_edge_list(g: HalfEdgeGraph, path) -> None:
    """Header ``n d`` then one 0-based ``u v`` line per edge."""
    lines = [f"{g.n} {g.d}"] + [f"{u} {v}" for u, v in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> HalfEdgeGraph:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise ValueError("missing 'n d' header")
    n, d = int(rows[0][0]), int(rows[0][1])
    if any(len(r) != 2 for r in rows[1:]):
        raise ValueError("edge lines must have exactly two fields")
    edges = [(int(u), int(v)) for u, v in rows[1:]]
    return from_edges(n, d, edges)
