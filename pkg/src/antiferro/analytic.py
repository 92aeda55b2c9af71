"""Closed-form thresholds, moment exponents and the Bethe functional.

All entropies and Kullback-Leibler divergences are in nats.  Conventions for
degenerate entries: ``0 log 0 = 0``; a positive entry over a zero reference
makes the divergence infinite, and exponents built from it return ``-inf``
so that optimizers can reject the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import bisect
from scipy.special import entr, gammaln, rel_entr

MAX_DEGREE = 64

# index 0 <-> spin +1, index 1 <-> spin -1
SPINS = (1, -1)


@dataclass(frozen=True)
class ModelParams:
    """Degree ``d`` and inverse temperature ``beta`` of the antiferromagnet."""

    d: int
    beta: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"degree must be an integer >= 2, got {self.d}")
        if self.d > MAX_DEGREE:
            raise ValueError(f"degree capped at {MAX_DEGREE}, got {self.d}")
        if math.isnan(self.beta) or self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class EdgeTypeDistribution:
    """Distribution of ordered spin pairs at the two ends of an edge."""

    mu_pp: float
    mu_pm: float
    mu_mp: float
    mu_mm: float

    def __post_init__(self):
        v = self.as_array()
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a probability vector: {v}")
        if abs(self.mu_pm - self.mu_mp) > 1e-12:
            raise ValueError("edge statistics must satisfy mu_pm == mu_mp")

    def as_array(self) -> np.ndarray:
        return np.array([self.mu_pp, self.mu_pm, self.mu_mp, self.mu_mm], dtype=float)

    @property
    def rho1(self) -> float:
        return self.mu_pp + self.mu_pm

    @property
    def cut_fraction(self) -> float:
        return self.mu_pm + self.mu_mp


class PairOverlapDistribution:
    """Distribution on ``{+1,-1}^4`` stored as a ``(2, 2, 2, 2)`` array.

    Axis order is ``(r, s, t, u)`` = (sigma_v, sigma'_v, sigma_w, sigma'_w);
    index 0 stands for spin +1.
    """

    def __init__(self, entries):
        arr = np.asarray(entries, dtype=float).reshape(2, 2, 2, 2)
        if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-12:
            raise ValueError("entries must be a probability vector on {+-1}^4")
        self.entries = arr

    def __getitem__(self, spins):
        return self.entries[tuple(0 if s == 1 else 1 for s in spins)]

    def vertex_marginal(self) -> np.ndarray:
        """``rho_{ij} = sum_{k,l} mu_{ijkl}`` as a ``(2, 2)`` array."""
        return self.entries.sum(axis=(2, 3))

    def same_spin_weight(self) -> float:
        """Expected number of monochromatic edges over the two replicas."""
        total = 0.0
        for idx in product(range(2), repeat=4):
            r, s, t, u = idx
            total += self.entries[idx] * ((r == t) + (s == u))
        return total


def _check_degree(d: int) -> None:
    if int(d) != d or d < 3:
        raise ValueError(f"degree must be an integer >= 3, got {d}")
    if d > MAX_DEGREE:
        raise ValueError(f"degree capped at {MAX_DEGREE}, got {d}")


def beta_star(d: int) -> float:
    """Kesten-Stigum bound, the replica symmetry breaking threshold on G(n, d)."""
    _check_degree(d)
    r = math.sqrt(d - 1)
    return math.log((r + 1) / (r - 1))


def beta_dagger(d: int) -> float:
    """Second-moment threshold of the Erdos-Renyi graph with mean degree ``d``."""
    _check_degree(d)
    r = math.sqrt(d)
    return math.log((r + 1) / (r - 1))


def binary_entropy(p):
    """Binary entropy in nats."""
    p = np.asarray(p, dtype=float)
    out = entr(p) + entr(1.0 - p)
    return float(out) if out.ndim == 0 else out


def second_moment_rate(params: ModelParams, alpha):
    """Exponent ``f_d(alpha, beta)`` of the second moment at overlap ``alpha``.

    Vectorised over ``alpha``.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(np.abs(a) >= 1):
        raise ValueError("overlap alpha must lie in (-1, 1)")
    d, b = params.d, params.beta
    q = math.exp(-b)
    out = ((1 - d) * math.log(2) + binary_entropy((1 + a) / 2)
           + 0.5 * d * np.log((1 + q) ** 2 + a ** 2 * (1 - q) ** 2))
    return float(out) if out.ndim == 0 else out


def first_moment_free_energy_bound(params: ModelParams) -> float:
    """Annealed free energy ``log 2 + (d/2) log((1 + e^-beta)/2)``."""
    return math.log(2) + 0.5 * params.d * math.log((1 + math.exp(-params.beta)) / 2)


def first_moment_maxcut_bound(d: int) -> float:
    """Cut fraction at which the expected number of cuts stops growing.

    Root of ``H_b(c) = log(2) (d - 2) / d`` on ``(1/2, 1)``.
    """
    _check_degree(d)
    target = math.log(2) * (d - 2) / d
    return bisect(lambda c: binary_entropy(c) - target, 0.5, 1 - 1e-12, xtol=1e-12)


def planted_edge_stats(params: ModelParams) -> EdgeTypeDistribution:
    """Edge-type distribution ``mu*`` maximising the annealed exponent."""
    b = params.beta
    # 1/(1+e^b) written to stay finite as beta grows
    mono = 0.5 / (1 + math.exp(b)) if b < 700 else 0.0
    cross = 0.5 - mono
    return EdgeTypeDistribution(mono, cross, cross, mono)


def cut_fraction_at(beta: float) -> float:
    """Planted cut fraction ``e^beta / (1 + e^beta)``."""
    return 1.0 / (1.0 + math.exp(-beta))


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(rel_entr(p, q)))


def annealed_exponent(params: ModelParams, mu: EdgeTypeDistribution) -> float:
    """First-moment growth rate ``phi_{d,beta}(mu)`` for edge statistics ``mu``."""
    rho1 = mu.rho1
    if not 0 < rho1 < 1:
        raise ValueError("vertex marginal rho_1 must lie in (0, 1)")
    rho = np.array([rho1, 1 - rho1])
    prod_ref = np.outer(rho, rho).ravel()
    kl = _kl(mu.as_array(), prod_ref)
    if not math.isfinite(kl):
        return -math.inf
    mono = mu.mu_pp + mu.mu_mm
    d, b = params.d, params.beta
    return float(np.sum(entr(rho))) - 0.5 * d * kl - 0.5 * d * b * mono


def pair_overlap_exponent(params: ModelParams, mu: PairOverlapDistribution,
                          rho=None) -> float:
    """Second-moment exponent of a pair-overlap edge distribution ``mu``.

    ``rho`` is the ``(2, 2)`` vertex distribution used both in the entropy and
    as the product reference of the divergence.  It defaults to the marginal
    induced by ``mu``.  Passing the nominal marginal ``rho_alpha`` of an
    overlap class reproduces ``f_d(alpha, beta)`` at :func:`overlap_maximizer`;
    note that ``mu_alpha`` does not itself have marginal ``rho_alpha`` unless
    ``alpha == 0``.
    """
    rho = mu.vertex_marginal() if rho is None else np.asarray(rho, dtype=float).reshape(2, 2)
    ref = np.einsum("ij,kl->ijkl", rho, rho)
    kl = _kl(mu.entries, ref)
    if not math.isfinite(kl):
        return -math.inf
    d, b = params.d, params.beta
    return (float(np.sum(entr(rho))) - 0.5 * d * kl
            - 0.5 * d * b * mu.same_spin_weight())


def overlap_maximizer(params: ModelParams, alpha: float):
    """Maximiser ``mu_alpha`` over pair distributions with overlap ``alpha``.

    Returns ``(mu_alpha, z_alpha)``.
    """
    if abs(alpha) >= 1:
        raise ValueError("overlap alpha must lie in (-1, 1)")
    q = math.exp(-params.beta)
    a2 = alpha * alpha
    z = (1 + q * q) * (1 + a2) / 4 + q * (1 - a2) / 2
    arr = np.empty((2, 2, 2, 2))
    for idx in product(range(2), repeat=4):
        r, s, t, u = idx
        same = (r == t) + (s == u)
        # replicas agree at v iff r == s; likewise at w
        agree_v, agree_w = r == s, t == u
        if agree_v and agree_w:
            base = (1 + alpha) ** 2
        elif not agree_v and not agree_w:
            base = (1 - alpha) ** 2
        else:
            base = 1 - a2
        arr[idx] = base * q ** same / (16 * z)
    return PairOverlapDistribution(arr), z


def overlap_marginal(alpha: float) -> np.ndarray:
    """Vertex distribution ``rho_alpha`` of two balanced configurations with overlap ``alpha``."""
    return np.array([[1 + alpha, 1 - alpha], [1 - alpha, 1 + alpha]]) / 4


def constrained_overlap_maximizer(params: ModelParams, alpha: float,
                                  tol: float = 1e-14, max_iter: int = 10_000):
    """Maximiser of the pair exponent among ``mu`` whose induced marginal is ``rho_alpha``.

    The optimum has the form ``rho_rs rho_tu x_rs x_tu q^same``; the scalings
    ``x`` are found by symmetric iterative proportional fitting.
    """
    if abs(alpha) >= 1:
        raise ValueError("overlap alpha must lie in (-1, 1)")
    q = math.exp(-params.beta)
    rho = overlap_marginal(alpha)
    k = np.array([[q, 1.0], [1.0, q]])
    kernel = np.einsum("rt,su->rstu", k, k)
    x = np.ones((2, 2))
    for _ in range(max_iter):
        m = np.einsum("rs,tu,rstu->rstu", rho * x, rho * x, kernel)
        marg = m.sum(axis=(2, 3))
        if np.max(np.abs(marg - rho)) < tol:
            break
        x *= np.sqrt(rho / marg)
    return PairOverlapDistribution(m / m.sum())


def _xlogx(x):
    return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


_EXT = np.longdouble


def bethe_functional(params: ModelParams, eps: float) -> float:
    """Bethe free energy of the two-atom field law ``(delta_{2eps} + delta_{-2eps})/2``."""
    if not 0 <= abs(eps) < 0.25:
        raise ValueError("polarisation eps must satisfy |eps| < 1/4")
    d, b = params.d, params.beta
    # extended precision keeps finite-difference derivatives in eps accurate
    q = 1 - np.exp(-_EXT(b))
    e = _EXT(eps)
    c = 1 - q / 2
    i = np.arange(d + 1)
    log_w = gammaln(d + 1) - gammaln(i + 1) - gammaln(d - i + 1) - d * math.log(2)
    # normalise the factor products by c to keep them O(1) for large d
    up = (1 - q * (0.5 + e)) / c
    down = (1 - q * (0.5 - e)) / c
    inner = up ** i * down ** (d - i) + down ** i * up ** (d - i)
    # Lambda(c^d x) / (2 c^d) = (x log x + x d log c) / 2
    vertex = np.sum(np.exp(log_w).astype(_EXT) * (_xlogx(inner) + inner * d * np.log(c))) / 2
    edge = d * (_xlogx(1 - q * (0.5 + 2 * e * e))
                + _xlogx(1 - q * (0.5 - 2 * e * e))) / (2 * (2 - q))
    return float(vertex - edge)


def bethe_quartic_coefficient(params: ModelParams) -> float:
    """Coefficient of ``eps^4`` in the expansion of :func:`bethe_functional` at 0."""
    d, b = params.d, params.beta
    if b <= 0:
        raise ValueError("beta must be > 0")
    e = math.exp(b)
    num = 4 * d * math.exp(-2 * b) * (e - 1) ** 2 * (e * e * (d - 2) - 2 * d * e + (d - 2))
    return num / ((1 + e) ** 2 * (1 + 1 / e) ** 2)


def quartic_sign_root(d: int) -> float:
    """Larger root of ``(d-2) x^2 - 2 d x + (d-2)``, where the quartic changes sign."""
    _check_degree(d)
    a, bq = d - 2, -2 * d
    return (-bq + math.sqrt(bq * bq - 4 * a * a)) / (2 * a)


def fd_derivatives(f, x0: float = 0.0, h: float = 1e-3, orders=(1, 2, 3, 4)):
    """Central finite-difference derivatives with one Richardson step.

    Each stencil is evaluated at steps ``2h`` and ``h`` and combined to cancel
    the leading ``h^2`` error term.
    """
    stencils = {
        1: ([-1, 1], [-0.5, 0.5]),
        2: ([-1, 0, 1], [1, -2, 1]),
        3: ([-2, -1, 1, 2], [-0.5, 1, -1, 0.5]),
        4: ([-2, -1, 0, 1, 2], [1, -4, 6, -4, 1]),
    }
    out = {}
    for k in orders:
        offs, wts = stencils[k]

        def est(step):
            return sum(w * f(x0 + o * step) for o, w in zip(offs, wts)) / step ** k

        coarse, fine = est(2 * h), est(h)
        out[k] = (4 * fine - coarse) / 3
    return out
