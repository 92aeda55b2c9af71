"""Compiled inner loops.  Random numbers are drawn by the caller so every
chain stays reproducible from its own ``numpy.random.Generator``."""

import numba
import numpy as np


@numba.njit(cache=True)
def edge_switch_moves(partner, clone_spin, beta, first, second, flip, accept_u,
                      stride, trace):
    """Metropolis edge switches on a perfect matching, in place.

    ``first``/``second`` pick one endpoint of each of two edges; a proposal
    naming the same edge twice is a rejected (lazy) step.  ``flip`` selects
    which of the two rewirings is proposed.  After every ``stride`` moves the
    matching is copied into the next row of ``trace`` (skipped when ``trace``
    has no rows).  Returns the number of accepted moves.
    """
    accepted = 0
    record = trace.shape[0] > 0
    for t in range(first.shape[0]):
        a = first[t]
        c = second[t]
        b = partner[a]
        e = partner[c]
        if a != c and a != e:
            if flip[t]:
                c, e = e, c
            # {a,b},{c,e} -> {a,c},{b,e}
            old = (clone_spin[a] == clone_spin[b]) + (clone_spin[c] == clone_spin[e])
            new = (clone_spin[a] == clone_spin[c]) + (clone_spin[b] == clone_spin[e])
            delta = new - old
            if delta <= 0 or accept_u[t] < np.exp(-beta * delta):
                partner[a] = c
                partner[c] = a
                partner[b] = e
                partner[e] = b
                accepted += 1
        if record and (t + 1) % stride == 0:
            row = (t + 1) // stride - 1
            for k in range(partner.shape[0]):
                trace[row, k] = partner[k]
    return accepted


@numba.njit(cache=True)
def heat_bath_sweeps(indptr, indices, sigma, beta, orders, uniforms, snapshots):
    """Run ``orders.shape[0]`` heat-bath sweeps on ``sigma`` in place.

    Row ``s`` of ``snapshots`` receives ``sigma`` after sweep ``s``; pass an
    empty ``(0, n)`` buffer to skip recording.
    """
    n = sigma.shape[0]
    record = snapshots.shape[0] == orders.shape[0]
    for s in range(orders.shape[0]):
        for j in range(n):
            v = orders[s, j]
            field = 0
            for k in range(indptr[v], indptr[v + 1]):
                field += sigma[indices[k]]
            # a_+ - a_- equals the neighbour spin sum
            if uniforms[s, j] * (1.0 + np.exp(beta * field)) < 1.0:
                sigma[v] = 1
            else:
                sigma[v] = -1
        if record:
            for v in range(n):
                snapshots[s, v] = sigma[v]


@numba.njit(cache=True)
def greedy_flip(indptr, indices, sigma):
    """Single-vertex flips that strictly increase the cut until none exists."""
    n = sigma.shape[0]
    changed = True
    while changed:
        changed = False
        for v in range(n):
            same = 0
            diff = 0
            for k in range(indptr[v], indptr[v + 1]):
                if sigma[indices[k]] == sigma[v]:
                    same += 1
                else:
                    diff += 1
            if same > diff:
                sigma[v] = -sigma[v]
                changed = True
