"""One-dimensional walks in random environment on {-1, 0, 1, ...}.

The mark ``A(i)`` is the ratio of the forward to the backward transition
probability at site ``i``.  Exact hitting probabilities and exit times come
from the potential ``V`` through the electrical-network formulas; a
tridiagonal solver provides an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from . import _kernels as K
from .errors import NotAncestor
from .gw_tree import MarkedTree, VertexId
from .law import ALaw
from .rng import derive, generator, replicate_seed, walk_key
from .stats import EstimateWithCI


@dataclass(frozen=True)
class LineEnvironment:
    """Marks ``A(0..n-1)`` and the derived potential."""

    marks: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.marks, dtype=float)
        if a.ndim != 1 or np.any(a <= 0):
            raise ValueError("marks must be a 1-d array of positive numbers")
        object.__setattr__(self, "marks", a)

    @property
    def n(self) -> int:
        return self.marks.size

    @property
    def V(self) -> np.ndarray:
        """``V(0..n)`` with ``V(0) = 0`` and ``V(i+1) - V(i) = -ln A(i)``."""
        v = np.empty(self.n + 1)
        v[0] = 0.0
        # compensated running sum of the log-increments
        s = c = 0.0
        for i, x in enumerate(-np.log(self.marks)):
            y = x - c
            t = s + y
            c = (t - s) - y
            s = t
            v[i + 1] = s
        return v

    @property
    def M(self) -> np.ndarray:
        return np.maximum.accumulate(self.V)

    @property
    def H1(self) -> np.ndarray:
        v = self.V
        return np.maximum.accumulate(v) - v

    def H2(self, p: Optional[int] = None) -> np.ndarray:
        """``H2(i, p) = max_{i<=k<=p} V(k) - V(i)`` for ``i = 0..p``."""
        v = self.V
        p = self.n if p is None else p
        seg = v[: p + 1]
        return np.maximum.accumulate(seg[::-1])[::-1] - seg

    @property
    def p_forward(self) -> np.ndarray:
        return self.marks / (1.0 + self.marks)


def random_environment(a_law: ALaw, n: int, rng: np.random.Generator) -> LineEnvironment:
    return LineEnvironment(a_law.sample(rng.random(n)))


# ---------------------------------------------------------------------------
# circuit formulas
# ---------------------------------------------------------------------------

def hit_prob_before_minus1(env: LineEnvironment, i: int) -> float:
    """``P^0(T_i < T_{-1}) = 1 / (e^{V(0)} + ... + e^{V(i)})``."""
    if not 0 <= i <= env.n:
        raise ValueError("target must satisfy 0 <= i <= n")
    return math.exp(-logsumexp(env.V[: i + 1]))


def hit_prob_from(env: LineEnvironment, start: int, n: Optional[int] = None) -> float:
    """``P^start(T_n < T_{-1})`` for ``-1 <= start <= n``."""
    v = env.V
    n = env.n if n is None else n
    if start < 0:
        return 0.0
    return math.exp(logsumexp(v[: start + 1]) - logsumexp(v[: n + 1]))


def _log_green(v: np.ndarray, a: np.ndarray, n: int) -> np.ndarray:
    """``ln G(i, -1 ^ n)`` for ``i = 0..n-1``.

    ``G`` is the expected number of visits to ``i`` (the start included)
    before leaving ``(-1, n)``.
    """
    # cumulative log-sums of e^V from both ends
    left = np.logaddexp.accumulate(v[: n + 1])  # ln sum_{k<=i} e^{V(k)}
    right = np.logaddexp.accumulate(v[: n + 1][::-1])[::-1]  # ln sum_{k>=i} e^{V(k)}
    i = np.arange(n)
    ln_back = -np.log1p(a[:n])  # omega(i, i-1)
    ln_fwd = np.log(a[:n]) + ln_back  # omega(i, i+1)
    ln_esc_left = v[i] - left[i]  # P^{i-1}(T_{-1} < T_i)
    ln_esc_right = v[i + 1] - right[i + 1]  # P^{i+1}(T_n < T_i)
    return -np.logaddexp(ln_back + ln_esc_left, ln_fwd + ln_esc_right)


def expected_exit_time(env: LineEnvironment, n: Optional[int] = None) -> float:
    """``E^0[T_{-1} ^ T_n] = sum_{i<n} P^0(T_i < T_{-1}) G(i, -1 ^ n)``."""
    n = env.n if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    v = env.V[: n + 1]
    c = float(v.max())
    if c - float(v.min()) > 600.0:
        try:
            return math.exp(log_expected_exit_time(env, n))
        except OverflowError:
            return math.inf
    w = np.exp(v - c)
    left = np.cumsum(w)
    right = np.cumsum(w[::-1])[::-1]
    a = env.marks[:n]
    q = 1.0 / (1.0 + a)
    p = a * q
    # P^0(T_i < T_-1) G(i) with the common factor e^{-c} pulled out
    denom = q * w[:n] + p * w[1:] * left[:n] / right[1:]
    return math.exp(-c) * math.fsum(1.0 / denom)


def log_expected_exit_time(env: LineEnvironment, n: Optional[int] = None) -> float:
    n = env.n if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    v = env.V
    ln_hit = -np.logaddexp.accumulate(v[:n])
    return float(logsumexp(ln_hit + _log_green(v, env.marks, n)))


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def birth_death_solve(p: np.ndarray, rhs: np.ndarray, right_value: float = 0.0) -> np.ndarray:
    """Solve ``u(i) - q(i) u(i-1) - p(i) u(i+1) = rhs(i)`` on ``0..n-1``.

    Boundary values are ``u(-1) = 0`` and ``u(n) = right_value``.  This is
    tridiagonal elimination in which the pivot ``1 - q(i) c(i-1)`` is
    carried through its slack ``1 - c(i)``, so no step subtracts and the
    result is accurate componentwise even for strongly biased walks.
    """
    n = p.size
    q = 1.0 - p
    c = np.empty(n)
    d = np.empty(n)
    slack = 1.0  # 1 - c(i-1); the absorbing left end gives 1
    dprev = 0.0
    for i in range(n):
        m = p[i] + q[i] * slack
        c[i] = p[i] / m
        slack = q[i] * slack / m
        d[i] = (rhs[i] + q[i] * dprev) / m
        dprev = d[i]
    x = np.empty(n)
    nxt = right_value
    for i in range(n - 1, -1, -1):
        x[i] = d[i] + c[i] * nxt
        nxt = x[i]
    return x


def oracle_solve(env: LineEnvironment, n: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force ``(h, u)`` on sites ``0..n-1``.

    ``h(i) = P^i(T_n < T_{-1})`` solves ``(I - P) h = 0`` with ``h(-1) = 0``,
    ``h(n) = 1``; ``u(i) = E^i[T_{-1} ^ T_n]`` solves ``(I - P) u = 1`` with
    zero boundary values.
    """
    n = env.n if n is None else n
    if n > 10_000:
        raise ValueError("oracle limited to n <= 10^4")
    p = env.p_forward[:n]
    h = birth_death_solve(p, np.zeros(n), right_value=1.0)
    u = birth_death_solve(p, np.ones(n))
    return h, u


# ---------------------------------------------------------------------------
# Monte Carlo over environments
# ---------------------------------------------------------------------------

def m_estimate(a_law: ALaw, n: int, lam: float, replicates: int, seed: int) -> EstimateWithCI:
    """``m(n, lam) = E[(E_omega^0[T_{-1} ^ T_n])^lam]`` over independent environments."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if lam == 0.0 or n == 1:
        return EstimateWithCI.exact(1.0, replicates, seed, n=n, lam=lam)
    rng = generator(seed)
    logs = np.array([log_expected_exit_time(random_environment(a_law, n, rng)) for _ in range(replicates)])
    vals = np.exp(lam * logs)
    return EstimateWithCI.from_samples(vals, seed=seed, n=n, lam=lam)


def m_growth_rates(a_law: ALaw, ns: Sequence[int], lam: float, replicates: int, seed: int) -> list:
    """``(n, m_hat, stderr, ln m_hat / n)`` rows."""
    rows = []
    for j, n in enumerate(ns):
        est = m_estimate(a_law, n, lam, replicates, derive(seed, j))
        rows.append((n, est.point, est.stderr, math.log(est.point) / n))
    return rows


def p_estimate(a_law: ALaw, n: int, a: float, replicates: int, seed: int) -> EstimateWithCI:
    """Annealed ``P^0(T_{-1} ^ T_n > a)``: fresh environment and walk per replicate."""
    if a < 1:
        return EstimateWithCI.exact(1.0, replicates, seed, n=n, a=a)
    if n == 1:
        return EstimateWithCI.exact(0.0, replicates, seed, n=n, a=a)
    amax = int(math.floor(a))
    hits = np.empty(replicates)
    for r in range(replicates):
        s = replicate_seed(seed, r)
        env = random_environment(a_law, n, generator(s))
        t = K.line_exit(env.p_forward, amax, np.uint64(walk_key(s)))
        hits[r] = 1.0 if t > amax else 0.0
    return EstimateWithCI.from_samples(hits, seed=seed, n=n, a=a)


# ---------------------------------------------------------------------------
# projection of a tree path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectedEnvironment:
    """Walk on the path ``parent(x) = x_{-1}, x_0 = x, ..., x_p = y``.

    ``forward[i]`` is the renormalised probability of stepping from
    ``x_i`` to ``x_{i+1}`` (``i = 0..p-1``); both path ends reflect.
    """

    source: tuple
    path: tuple
    forward: np.ndarray

    @property
    def backward(self) -> np.ndarray:
        return 1.0 - self.forward

    def line(self) -> LineEnvironment:
        """The same walk as a line environment on ``{-1, ..., p}``."""
        return LineEnvironment(self.forward / (1.0 - self.forward))

    def hit_target_first(self, i: int) -> float:
        """``P~^{x_i}(T_y < T_{parent(x)})``."""
        return hit_prob_from(self.line(), i)


def _is_ancestor(tree: MarkedTree, x: int, y: int) -> bool:
    while tree.depth[y] > tree.depth[x]:
        y = int(tree.parent[y])
    return x == y


def project_to_path(tree: MarkedTree, x: VertexId, y: VertexId) -> ProjectedEnvironment:
    """Renormalise the forward/backward transitions along the path from ``x`` to ``y``."""
    xi, yi = tree.node_id(x), tree.node_id(y)
    if xi == 0 or not _is_ancestor(tree, xi, yi):
        raise NotAncestor(f"{x} is not an ancestor of {y}")
    path = [yi]
    while path[-1] != xi:
        path.append(int(tree.parent[path[-1]]))
    path.append(int(tree.parent[xi]))
    path.reverse()  # x_{-1}, x_0, ..., x_p
    fwd = []
    for i in range(1, len(path) - 1):
        node, nxt = path[i], path[i + 1]
        tree.expand_id(node)
        total = 1.0 + tree.msum[node]
        w_fwd = tree.mark[nxt] / total
        w_back = 1.0 / total
        fwd.append(w_fwd / (w_fwd + w_back))
    return ProjectedEnvironment(source=(x, y), path=tuple(path), forward=np.array(fwd))


# ---------------------------------------------------------------------------
# exact comparison between the tree walk and its projection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DominationResult:
    """Exit probabilities from each ``x_i`` (``i = 0..p-1``) on the tree and on the path."""

    tree_target: np.ndarray
    tree_parent: np.ndarray
    path_target: np.ndarray
    path_parent: np.ndarray

    @property
    def max_violation(self) -> float:
        """Largest excess of a tree probability over its projected counterpart."""
        return float(max(np.max(self.tree_target - self.path_target),
                         np.max(self.tree_parent - self.path_parent)))


def truncated_exit_probs(tree: MarkedTree, x: VertexId, y: VertexId, off_depth: int = 3):
    """``P^{x_i}(T_y < T_{parent(x)})`` and ``P^{x_i}(T_{parent(x)} < T_y)`` on a truncated tree.

    Subtrees hanging off the path are kept ``off_depth`` generations deep;
    vertices at that depth kill the walk, which then counts towards neither
    event.  Solved exactly as an absorbing chain.
    """
    proj = project_to_path(tree, x, y)
    path = proj.path  # x_{-1}, x_0, ..., x_p
    p = len(path) - 2
    states = list(path[1:-1])
    rel = {s: 0 for s in states}
    on_path = set(path)
    k = 0
    while k < len(states):
        s = states[k]
        k += 1
        if rel[s] >= off_depth - 1 and s not in path:
            continue
        for c in tree.children_ids(s):
            if c in on_path:
                continue
            d = rel[s] + 1
            if d < off_depth:
                rel[c] = d
                states.append(c)
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    Q = np.zeros((n, n))
    r_target = np.zeros(n)
    r_parent = np.zeros(n)
    target, top = path[-1], path[0]
    for s in states:
        i = index[s]
        par, kids, probs = tree.transition_row(s)
        for nb, w in zip([par, *kids], probs):
            if nb == target:
                r_target[i] += w
            elif nb == top:
                r_parent[i] += w
            elif nb in index:
                Q[i, index[nb]] += w
            # otherwise the walk is killed
    A = np.eye(n) - Q
    sol = np.linalg.solve(A, np.column_stack([r_target, r_parent]))
    return sol[:p, 0], sol[:p, 1], proj


def domination_check(tree: MarkedTree, x: VertexId, y: VertexId, off_depth: int = 3) -> DominationResult:
    ht, hp, proj = truncated_exit_probs(tree, x, y, off_depth)
    env = proj.line()
    pt = np.array([hit_prob_from(env, i) for i in range(env.n)])
    return DominationResult(tree_target=ht, tree_parent=hp, path_target=pt, path_parent=1.0 - pt)
