"""Linearly edge reinforced random walk on the b-ary tree.

The walk crosses an edge with probability proportional to its weight and
then adds ``delta`` to that weight.  With ``delta = 1`` it is a mixture of
walks in a random environment where, at every non-root vertex, the vector
``(omega_parent, omega_child_1..b)`` is Dirichlet(1, 1/2, ..., 1/2); the
root draws its children from Dirichlet(1/2, ..., 1/2).  For general
``delta`` the parameters become ``(1 + delta) / (2 delta)`` and
``1 / (2 delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from . import _kernels as K
from .errors import InsufficientSamples
from .rng import derive, generator, mix64, replicate_seed, walk_key
from .stats import EstimateWithCI, hill_tail_index, map_replicates

ROOT = ()


# ---------------------------------------------------------------------------
# urn bookkeeping
# ---------------------------------------------------------------------------

class UrnState:
    """Edge weights of a reinforced walk on the b-ary tree.

    An edge is named by its lower endpoint; untouched edges have weight 1
    and are not stored.
    """

    def __init__(self, b: int, delta: float = 1.0, position: tuple = ROOT):
        if b < 2:
            raise ValueError("b must be >= 2")
        if delta < 0:
            raise ValueError("delta must be >= 0")
        self.b = int(b)
        self.delta = float(delta)
        self.position = tuple(position)
        self.weights: dict = {}
        self.steps = 0

    def weight(self, edge: tuple) -> float:
        return self.weights.get(edge, 1.0)

    def incident(self, v: tuple) -> list:
        """Incident edges of ``v``: parent edge first (absent at the root), then children."""
        kids = [v + (i,) for i in range(1, self.b + 1)]
        return ([v] if v else []) + kids

    def total_weight(self, v: tuple) -> float:
        return sum(self.weight(e) for e in self.incident(v))

    def probabilities(self, v: Optional[tuple] = None) -> list:
        """``(neighbour, probability)`` for every move out of ``v``."""
        v = self.position if v is None else v
        tot = self.total_weight(v)
        out = []
        for e in self.incident(v):
            nb = e[:-1] if e == v else e
            out.append((nb, self.weight(e) / tot))
        return out

    def excess(self) -> float:
        """Sum over stored edges of ``weight - 1``."""
        return sum(w - 1.0 for w in self.weights.values())


def urn_step(state: UrnState, u: float) -> tuple:
    """Move along an incident edge chosen with probability proportional to weight.

    ``u`` is a uniform in [0, 1).  Returns the edge crossed (named by its
    lower endpoint).
    """
    v = state.position
    edges = state.incident(v)
    w = np.array([state.weight(e) for e in edges])
    r = u * w.sum()
    k = int(np.searchsorted(np.cumsum(w), r, side="right"))
    e = edges[min(k, len(edges) - 1)]
    state.weights[e] = state.weight(e) + state.delta
    state.position = e[:-1] if e == v else e
    state.steps += 1
    return e


def run_urn(b: int, delta: float, steps: int, seed: int) -> UrnState:
    st = UrnState(b, delta)
    for u in generator(seed).random(steps):
        urn_step(st, u)
    return st


# ---------------------------------------------------------------------------
# Dirichlet environment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaEnvNode:
    omega_parent: float
    omega_children: tuple


def dirichlet_params(b: int, delta: float = 1.0) -> tuple[float, float, float]:
    """``(parent, child, root_child)`` Dirichlet parameters for reinforcement ``delta``."""
    return (1.0 + delta) / (2.0 * delta), 1.0 / (2.0 * delta), 1.0 / (2.0 * delta)


def sample_beta_env(b: int, rng: np.random.Generator, size: Optional[int] = None, root: bool = False,
                    delta: float = 1.0, child_param: Optional[float] = None):
    """Transition probabilities at one vertex (or ``size`` vertices).

    ``child_param`` overrides the child slots' parameter; it exists for
    negative controls.
    """
    if b < 2:
        raise ValueError("b must be >= 2")
    pp, cp, rp = dirichlet_params(b, delta)
    if child_param is not None:
        cp = rp = child_param
    if root:
        alpha = [rp] * b
    else:
        alpha = [pp] + [cp] * b
    x = rng.dirichlet(alpha, size=size)
    if root:
        x = np.concatenate([np.zeros(x.shape[:-1] + (1,)), x], axis=-1)
    if size is None:
        return BetaEnvNode(float(x[0]), tuple(float(c) for c in x[1:]))
    return x


def f0_cdf(x, b: int):
    """CDF of the parent slot, ``1 - (1 - x)^{b/2}``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return 1.0 - (1.0 - x) ** (b / 2.0)


def f1_pdf(x, b: int):
    c = _f1_const(b)
    x = np.asarray(x, dtype=float)
    return c * x ** -0.5 * (1.0 - x) ** ((b - 1) / 2.0)


def _f1_const(b: int) -> float:
    return math.exp(math.lgamma(b / 2.0 + 1.0) - math.lgamma(0.5) - math.lgamma((b + 1) / 2.0))


@lru_cache(maxsize=4)
def _gauss_nodes(m: int = 64):
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1.0) / 2.0, w / 2.0


def f1_cdf(x, b: int):
    """CDF of a child slot by numerical integration of its density.

    Below 1/2 the integral is taken in ``u = sqrt(t)``, above 1/2 the upper
    tail in ``w = sqrt(1 - t)``; both integrands are analytic on their
    ranges, so fixed Gauss-Legendre rules reach double precision.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    c = _f1_const(b)
    nodes, weights = _gauss_nodes()
    lo = x <= 0.5
    ub = np.sqrt(np.where(lo, x, 0.0))[..., None]
    u = ub * nodes
    low = (2.0 * c * (1.0 - u * u) ** ((b - 1) / 2.0) * weights).sum(-1) * ub[..., 0]
    wb = np.sqrt(np.where(lo, 0.0, 1.0 - x))[..., None]
    w = wb * nodes
    tail = (2.0 * c * w**b / np.sqrt(1.0 - w * w) * weights).sum(-1) * wb[..., 0]
    return np.clip(np.where(lo, low, 1.0 - tail), 0.0, 1.0)


def marginal_ks(b: int, samples: int, seed: int, delta: float = 1.0) -> tuple[float, float]:
    """KS p-values of the parent and first-child slots against f0 and f1."""
    x = sample_beta_env(b, generator(seed), size=samples, delta=delta)
    p0 = stats.kstest(x[:, 0], lambda t: f0_cdf(t, b)).pvalue
    p1 = stats.kstest(x[:, 1], lambda t: f1_cdf(t, b)).pvalue
    return float(p0), float(p1)


# ---------------------------------------------------------------------------
# representation check
# ---------------------------------------------------------------------------

def decode_prefix(code: int, b: int, s: int) -> str:
    """Readable form of a move code: ``p`` for a parent step, digits for children."""
    out = []
    for _ in range(s):
        code, m = divmod(code, b + 1)
        out.append("p" if m == 0 else str(m))
    return "".join(out)


def urn_prefix_codes(b: int, delta: float, s: int, replicates: int, seed: int) -> np.ndarray:
    return K.urn_prefixes(b, float(delta), s, replicates, np.uint64(mix64(seed)))


def env_prefix_codes(b: int, delta: float, s: int, replicates: int, seed: int,
                     child_param: Optional[float] = None) -> np.ndarray:
    pp, cp, rp = dirichlet_params(b, delta)
    if child_param is not None:
        cp = rp = child_param
    return K.env_prefixes(b, s, replicates, np.uint64(mix64(seed)), pp, cp, rp)


@dataclass(frozen=True)
class EquivalenceResult:
    pvalue: float
    statistic: float
    dof: int
    cells: list = field(compare=False)  # (prefix, urn count, env count) after pooling


def _pooled_table(c1: dict, c2: dict, n1: int, n2: int):
    keys = sorted(set(c1) | set(c2), key=lambda k: (-(c1.get(k, 0) + c2.get(k, 0)), k))
    f1, f2 = n1 / (n1 + n2), n2 / (n1 + n2)
    cells, pool = [], [None, 0, 0]
    for k in keys:
        a, b = c1.get(k, 0), c2.get(k, 0)
        if min(f1, f2) * (a + b) >= 5:
            cells.append([k, a, b])
        else:
            pool[1] += a
            pool[2] += b
    if pool[1] + pool[2] > 0:
        if min(f1, f2) * (pool[1] + pool[2]) >= 5:
            cells.append(pool)
        elif cells:
            # fold the leftover into the smallest regular cell
            cells[-1] = [None, cells[-1][1] + pool[1], cells[-1][2] + pool[2]]
    return cells


def equivalence_test(b: int, delta: float = 1.0, s: int = 6, replicates: int = 100_000, seed: int = 0,
                     child_param: Optional[float] = None) -> EquivalenceResult:
    """Chi-square comparison of ``s``-step prefixes: urn walk versus Dirichlet environment.

    Cells with expected count below 5 are pooled; the pooled cell is named
    ``None`` in the returned table.
    """
    if s > 10:
        raise ValueError("prefix length must be <= 10")
    if s < 1:
        raise ValueError("prefix length must be >= 1")
    urn = urn_prefix_codes(b, delta, s, replicates, derive(seed, 1))
    env = env_prefix_codes(b, delta, s, replicates, derive(seed, 2), child_param)
    k1, n1 = np.unique(urn, return_counts=True)
    k2, n2 = np.unique(env, return_counts=True)
    c1 = dict(zip(k1.tolist(), n1.tolist()))
    c2 = dict(zip(k2.tolist(), n2.tolist()))
    cells = _pooled_table(c1, c2, replicates, replicates)
    if len(cells) < 2:
        raise InsufficientSamples("fewer than two cells with expected count >= 5")
    table = np.array([[c[1] for c in cells], [c[2] for c in cells]], dtype=float)
    res = stats.chi2_contingency(table, correction=False)
    if np.any(res.expected_freq < 5):
        raise InsufficientSamples("expected cell count below 5 after pooling")
    named = [(None if c[0] is None else decode_prefix(c[0], b, s), int(c[1]), int(c[2])) for c in cells]
    return EquivalenceResult(pvalue=float(res.pvalue), statistic=float(res.statistic), dof=int(res.dof),
                             cells=named)


# ---------------------------------------------------------------------------
# speed
# ---------------------------------------------------------------------------

def _urn_depth(args) -> int:
    b, delta, steps, seed = args
    cap = 1 + b * (steps + 1)
    rec = K.urn_walk(b, float(delta), steps, np.uint64(walk_key(seed)), steps, cap)
    return int(rec[-1])


def lerrw_speed(b: int, delta: float, steps: int, replicates: int, seed: int, workers: int = 1) -> EstimateWithCI:
    """Mean of ``|X_steps| / steps`` over independent reinforced walks."""
    if b < 2 or delta <= 0:
        raise ValueError("need b >= 2 and delta > 0")
    args = [(b, delta, steps, replicate_seed(seed, r)) for r in range(replicates)]
    d = np.array(map_replicates(_urn_depth, args, workers), dtype=float)
    return EstimateWithCI.from_samples(d / steps, seed=seed, b=b, delta=delta, steps=steps)


def speed_upper_bound(b: int) -> float:
    """Known upper bound ``b / (b + 2)`` on the speed for ``delta = 1``."""
    return b / (b + 2.0)


# ---------------------------------------------------------------------------
# moment hypothesis for the positive-speed criterion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    b: int
    holds: bool
    tail_index: float
    tail_stderr: float
    lower_bound: float
    mean_estimate: float
    samples: int

    def __bool__(self):
        return self.holds


def errw_hypothesis_report(b: int, samples: int = 1_000_000, seed: int = 0, k: Optional[int] = None,
                           z: float = 2.326) -> HypothesisCheck:
    """Monte Carlo check that ``E[1 / sum_i A_i]`` is finite, ``A_i = omega_child_i / omega_parent``.

    ``1 / sum_i A_i = omega_parent / (1 - omega_parent)``.  The alarm fires
    unless the Hill tail index of that variable is above 1 with the lower
    one-sided bound ``index - z * stderr`` (99% by default).
    """
    x = sample_beta_env(b, generator(seed), size=samples)
    wp = x[:, 0]
    y = wp / (1.0 - wp)
    k = k if k is not None else max(100, samples // 100)
    alpha, se = hill_tail_index(y, k)
    lb = alpha - z * se
    return HypothesisCheck(b=b, holds=bool(lb > 1.0), tail_index=alpha, tail_stderr=se, lower_bound=lb,
                           mean_estimate=float(y.mean()), samples=samples)


def check_theorem_errw_hypothesis(b: int, samples: int = 1_000_000, seed: int = 0) -> bool:
    """True when the moment condition passes the tail-index alarm."""
    if b < 2:
        raise ValueError("b must be >= 2")
    return errw_hypothesis_report(b, samples, seed).holds
