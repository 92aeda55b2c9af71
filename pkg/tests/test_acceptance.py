"""End-to-end acceptance checks; a PASS/FAIL line per criterion is printed in the summary."""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from antiferro._random import stream
from antiferro.analytic import (
    EdgeTypeDistribution,
    ModelParams,
    beta_dagger,
    beta_star,
    bethe_functional,
    bethe_quartic_coefficient,
    cut_fraction_at,
    fd_derivatives,
    first_moment_free_energy_bound,
    first_moment_maxcut_bound,
    quartic_sign_root,
    second_moment_rate,
)
from antiferro.broadcast import reconstruction_error
from antiferro.dynamics import estimate_overlap, run_glauber
from antiferro.graphs import (
    cut_size,
    enumerate_matchings,
    exact_maxcut,
    exact_partition_function,
    from_edges,
    is_simple,
    pairing_event_logprob,
    planted_double_edge_mean,
    planted_loop_mean,
    sample_configuration_model,
    sample_planted,
)
from antiferro.interpolation import (
    InterpPoint,
    f_interp,
    finite_beta_energy,
    maxcut_upper_bound,
    walk_min_moment,
    walk_min_moment_matrix,
)

INTERP_BOUNDS = [0.9241, 0.8683, 0.8350, 0.8049, 0.7851, 0.7659, 0.7523, 0.7388]
FIRST_MOMENT_BOUNDS = [0.8900, 0.8539, 0.8260, 0.8038, 0.7855, 0.7701, 0.7570]
CUT_AT_BETA_STAR = [0.8536, 0.7887, 0.7500, 0.7236, 0.7041, 0.6890, 0.6768, 0.6667]
K4 = from_edges(4, 3, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
C5 = from_edges(5, 2, [(i, (i + 1) % 5) for i in range(5)])
P2 = from_edges(2, 1, [(0, 1)])
STAT_BUDGET = 120.0


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


@pytest.mark.acceptance(1, "interpolation MaxCut bounds d=3..10 within 5e-4, <= 60 s")
def test_interpolation_bounds():
    bounds, seconds = timed(lambda: [maxcut_upper_bound(d) for d in range(3, 11)])
    np.testing.assert_allclose(bounds, INTERP_BOUNDS, atol=5e-4, rtol=0)
    assert seconds <= 60


@pytest.mark.acceptance(2, "first-moment MaxCut bounds d=4..10 within 5e-4, <= 1 s")
def test_first_moment_bounds():
    bounds, seconds = timed(lambda: [first_moment_maxcut_bound(d) for d in range(4, 11)])
    np.testing.assert_allclose(bounds, FIRST_MOMENT_BOUNDS, atol=5e-4, rtol=0)
    assert seconds <= 1


@pytest.mark.acceptance(3, "cut fraction at the RSB threshold d=3..10 within 5e-4")
def test_cut_at_beta_star():
    cuts = [cut_fraction_at(beta_star(d)) for d in range(3, 11)]
    np.testing.assert_allclose(cuts, CUT_AT_BETA_STAR, atol=5e-4, rtol=0)


@pytest.mark.acceptance(4, "threshold values at d=3 and the degree-shift identity d=4..64")
def test_thresholds():
    assert 1.7625 <= beta_star(3) <= 1.7630
    assert 1.3165 <= beta_dagger(3) <= 1.3172
    for d in range(4, 65):
        assert beta_star(d) == beta_dagger(d - 1)


def _curvature_at_zero(beta, step=1e-4):
    f = second_moment_rate(ModelParams(3, beta), np.array([-step, 0.0, step]))
    return (f[0] - 2 * f[1] + f[2]) / step ** 2


@pytest.mark.acceptance(5, "second-moment rate shape for d=3")
def test_second_moment_shape():
    alphas = np.linspace(-1, 1, 2001)[1:-1]
    low = second_moment_rate(ModelParams(3, 1.25), alphas)
    assert alphas[np.argmax(low)] == pytest.approx(0.0, abs=1e-12)
    high = second_moment_rate(ModelParams(3, 1.40), alphas)
    assert high.max() > second_moment_rate(ModelParams(3, 1.40), 0.0) + 1e-4
    flip = brentq(_curvature_at_zero, 1.0, 1.6, xtol=1e-10)
    assert abs(flip - beta_dagger(3)) <= 1e-3


@pytest.mark.acceptance(6, "walk DP against the matrix product, d=2 degeneracy, finite-beta limit")
def test_oracle_equivalence():
    worst = 0.0
    for d in range(2, 31):
        for a in np.linspace(0.05, 0.5, 10):
            for z in np.linspace(0.1, 0.9, 9):
                worst = max(worst, abs(walk_min_moment(d, a, z) - walk_min_moment_matrix(d, a, z)))
    assert worst <= 1e-10
    for a in np.linspace(0.01, 0.5, 15):
        for z in np.linspace(0.02, 0.98, 15):
            assert abs(f_interp(2, InterpPoint(a, z))) <= 1e-10
    target = f_interp(3, InterpPoint(0.3, 0.5))
    errs = [abs(finite_beta_energy(3, b, 0.3, 0.5) - target) for b in (12.5, 50, 200)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 5e-3


@pytest.mark.acceptance(7, "Bethe expansion: vanishing low derivatives, quartic term, sign root")
def test_bethe_expansion():
    for d in range(3, 11):
        for b in (0.5, 1.0, 1.5, 2.0, 3.0):
            p = ModelParams(d, b)
            der = fd_derivatives(lambda e: bethe_functional(p, e), h=1e-3)
            assert max(abs(der[1]), abs(der[2]), abs(der[3])) <= 1e-5
            exact = 24 * bethe_quartic_coefficient(p)
            assert abs(der[4] - exact) <= 1e-4 * abs(exact)
        assert quartic_sign_root(d) == pytest.approx(math.exp(beta_star(d)), abs=1e-9)
    p = ModelParams(3, 1.8)
    gains = [bethe_functional(p, e) - first_moment_free_energy_bound(p) for e in (0.02, 0.05, 0.1)]
    assert max(gains) > 0


@pytest.mark.acceptance(8, "exact enumeration identities on tiny graphs")
def test_tiny_graph_identities():
    for b in (0.5, 1.0, 2.0):
        expected = math.log(2 * math.exp(-6 * b) + 8 * math.exp(-3 * b) + 6 * math.exp(-2 * b))
        assert exact_partition_function(K4, b) == pytest.approx(expected, abs=1e-12)
    beta, h = 30.0, 0.01
    for g in (K4, C5):
        slope = (exact_partition_function(g, beta + h) - exact_partition_function(g, beta)) / h
        assert g.m + slope == pytest.approx(exact_maxcut(g), abs=1e-3)
    matchings = enumerate_matchings(12)
    assert len(matchings) == 10395
    for n_plus in range(5):
        clone_spin = np.repeat(np.array([1] * n_plus + [-1] * (4 - n_plus)), 3)
        k_pp = ((clone_spin == 1) & (clone_spin[matchings] == 1)).sum(axis=1)
        k_plus, total = 3 * n_plus, 0.0
        for k_pm in range(min(k_plus, 12 - k_plus) + 1):
            kpp, kmm = k_plus - k_pm, 12 - k_plus - k_pm
            if kpp % 2 or kmm % 2:
                continue
            mu = EdgeTypeDistribution(kpp / 12, k_pm / 12, k_pm / 12, kmm / 12)
            prob = math.exp(pairing_event_logprob(4, 3, n_plus / 4, mu))
            assert prob == pytest.approx(np.mean(k_pp == kpp), abs=1e-12)
            total += prob
        assert total == pytest.approx(1.0, abs=1e-10)


def _mean_stderr(x):
    x = np.asarray(x, dtype=float)
    return x.mean(), x.std(ddof=1) / math.sqrt(x.size)


@pytest.mark.acceptance(9, "statistical suite")
def test_planted_statistics():
    n, d, beta, reps = 2000, 3, 1.0, 200

    def run():
        cuts, loops, doubles = [], [], []
        for r in range(reps):
            g, sigma = sample_planted(n, d, beta, seed=11, replica=r)
            _, lp, mu = is_simple(g)
            cuts.append(cut_size(g, sigma) / g.m)
            loops.append(lp)
            doubles.append(mu)
        return cuts, loops, doubles

    (cuts, loops, doubles), seconds = timed(run)
    for vals, target in ((cuts, cut_fraction_at(beta)), (loops, planted_loop_mean(d, beta)),
                         (doubles, planted_double_edge_mean(d, beta))):
        mean, se = _mean_stderr(vals)
        assert abs(mean - target) <= 3 * se
    assert seconds <= STAT_BUDGET


def _state_law(g, beta):
    codes = np.arange(1 << g.n)
    h = np.zeros(codes.size)
    for u, v in g.edges():
        h += 1 - (((codes >> u) ^ (codes >> v)) & 1)
    w = np.exp(-beta * h)
    return w / w.sum()


@pytest.mark.acceptance(9, "statistical suite")
@pytest.mark.parametrize("g", [P2, K4], ids=["P2", "K4"])
def test_glauber_state_law(g):
    beta, sweeps = 1.0, 10 ** 6

    def run():
        rng = stream(12, g.n)
        sigma, _ = run_glauber(g, np.ones(g.n), beta, 1000, rng)
        return run_glauber(g, sigma, beta, sweeps, rng, record=True)[1]

    snaps, seconds = timed(run)
    codes = ((snaps == 1).astype(np.int64) << np.arange(g.n)).sum(axis=1)
    emp = np.bincount(codes, minlength=1 << g.n) / sweeps
    assert 0.5 * np.abs(emp - _state_law(g, beta)).sum() <= 0.01
    assert seconds <= STAT_BUDGET


@pytest.mark.acceptance(9, "statistical suite")
def test_broadcast_reconstruction():
    def run():
        decay = [reconstruction_error(3, 1.4, depth, 2000, seed=13) for depth in (2, 4, 6, 8)]
        persist = reconstruction_error(3, 2.2, 8, 2000, seed=13)
        return decay, persist

    (decay, persist), seconds = timed(run)
    for (m1, s1), (m2, s2) in zip(decay, decay[1:]):
        assert m2 <= m1 + 3 * math.hypot(s1, s2)
    (first, s_first), (last, s_last) = decay[0], decay[-1]
    assert first - last >= 3 * math.hypot(s_first, s_last)
    assert persist[0] >= 0.05
    assert seconds <= STAT_BUDGET


@pytest.mark.acceptance(9, "statistical suite")
def test_overlap_contrast():
    def run():
        g = sample_configuration_model(500, 3, 14)
        return (estimate_overlap(g, 1.0, replicas=80, sweeps=1000, seed=15),
                estimate_overlap(g, 2.5, replicas=80, sweeps=1000, seed=15))

    (lo, hi), seconds = timed(run)
    assert hi.mean - lo.mean >= 3 * math.hypot(lo.stderr, hi.stderr)
    assert seconds <= STAT_BUDGET
