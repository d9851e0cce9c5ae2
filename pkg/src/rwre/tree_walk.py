"""Quenched walks on marked trees and the estimators built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import InsufficientRegenerations, NotTransient
from .gw_tree import ROOT_PARENT, MarkedTree, VertexId
from .law import ALaw, OffspringLaw, is_transient
from .rng import derive, replicate_seed, walk_key
from .stats import EstimateWithCI, map_replicates

NO_STOP_LOW = -(2**62)
NO_STOP_HIGH = 2**62
_EMPTY_I64 = np.empty(0, dtype=np.int64)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class WalkTrajectory:
    """A recorded walk.  ``generations[k] = |X_k|``; ``positions`` holds node ids."""

    seed: int
    steps: int
    generations: np.ndarray
    positions: Optional[np.ndarray] = None
    tree: Optional[MarkedTree] = field(default=None, repr=False)

    @property
    def tau(self) -> np.ndarray:
        """``tau[n]``: first step at generation ``n`` for ``n = 0..max |X_k|`` (root start)."""
        running = np.maximum.accumulate(self.generations)
        top = int(running[-1])
        return np.searchsorted(running, np.arange(0, top + 1)).astype(np.int64)

    def occupation(self, max_vertices: Optional[int] = None) -> dict:
        """``N(x)`` per visited vertex (address keys), optionally the most visited ones only."""
        if self.positions is None:
            raise ValueError("trajectory was recorded without positions")
        ids, counts = np.unique(self.positions, return_counts=True)
        if max_vertices is not None and ids.size > max_vertices:
            keep = np.argsort(-counts, kind="stable")[:max_vertices]
            ids, counts = ids[keep], counts[keep]
        return {self.tree.address(int(i)): int(c) for i, c in zip(ids, counts)}

    def level_occupation(self, lo: int = -1, hi: Optional[int] = None) -> dict:
        """``N_n``, the number of visits to generation ``n``, for ``lo <= n <= hi``."""
        g = self.generations
        hi = int(g.max()) if hi is None else hi
        counts = np.bincount(g - lo, minlength=hi - lo + 1) if g.min() >= lo else None
        if counts is None:
            sel = g[g >= lo]
            counts = np.bincount(sel - lo, minlength=hi - lo + 1)
        return {lo + i: int(counts[i]) for i in range(hi - lo + 1)}


def _advance(tree: MarkedTree, pos: int, step0: int, nsteps: int, wkey: int,
             stop_low: int = NO_STOP_LOW, stop_high: int = NO_STOP_HIGH,
             rec_depth=_EMPTY_I64, rec_pos=_EMPTY_I64, rec_offset: int = 0):
    """Run the compiled walk, growing tree storage as needed.

    Returns ``(steps_taken, pos, stopped)``.
    """
    done = 0
    wk = np.uint64(wkey)
    kmax = tree.law_tables()[0].size
    while done < nsteps:
        status, k, pos, tree.n_nodes = K.tree_walk(
            pos, step0 + done, nsteps - done, wk, tree.n_nodes, tree.capacity,
            *tree.arrays(), *tree.law_tables(), stop_low, stop_high, rec_depth, rec_pos, rec_offset + done)
        done += k
        if status == K.STOPPED:
            return done, pos, True
        if status == K.NEED_GROW:
            tree.grow(kmax)
    return done, pos, False


def run_walk(tree: MarkedTree, steps: int, positions: bool = True, seed: Optional[int] = None,
             start: VertexId = ()) -> WalkTrajectory:
    """Sample ``steps`` steps of the quenched walk from ``start`` (default the root)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    seed = tree.seed if seed is None else seed
    x0 = tree.node_id(start)
    gens = np.empty(steps + 1, dtype=np.int64)
    gens[0] = tree.depth[x0]
    pos = None
    if positions:
        pos = np.empty(steps + 1, dtype=np.int64)
        pos[0] = x0
    _advance(tree, x0, 0, steps, walk_key(seed), rec_depth=gens,
             rec_pos=pos if positions else _EMPTY_I64)
    return WalkTrajectory(seed=seed, steps=steps, generations=gens, positions=pos, tree=tree)


# ---------------------------------------------------------------------------
# regenerations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegenerationRecord:
    time: int
    level: int
    censored: bool


def detect_regenerations(traj: WalkTrajectory, tree: MarkedTree, horizon: int = 1000) -> list:
    """Regeneration times of a recorded walk.

    Step ``k > 0`` qualifies when it is the first visit to generation
    ``|X_k|``, ``X_k`` has at least two children, and the walk does not
    step back to the parent of ``X_k`` during the next ``horizon`` steps.
    Records whose horizon runs past the end of the trajectory are flagged
    censored.
    """
    if traj.positions is None:
        raise ValueError("regeneration detection needs recorded positions")
    g = traj.generations
    n = traj.steps
    running = np.maximum.accumulate(g)
    first = np.flatnonzero(np.diff(running, prepend=running[0]) > 0)
    first = first[first > 0]
    if first.size == 0:
        return []
    nxt = K.next_lower(g)
    out = []
    for k in first:
        x = int(traj.positions[k])
        j = int(nxt[k])
        if j != -1 and j - k <= horizon:
            continue
        if tree.nu(x) < 2:
            continue
        out.append(RegenerationRecord(time=int(k), level=int(g[k]), censored=bool(k + horizon > n)))
    return out


@dataclass(frozen=True)
class RegenerationStats:
    mean_level_gap: float
    mean_time_gap: float
    power_sum: float
    n_gaps: int
    level_gaps: np.ndarray = field(repr=False)
    time_gaps: np.ndarray = field(repr=False)


def regeneration_statistics(records: Sequence[RegenerationRecord], lam: float = 1.0) -> RegenerationStats:
    """Gap statistics over consecutive pairs of uncensored records.

    ``power_sum`` is ``sum (Gamma_k - Gamma_{k-1})^lam`` over those pairs.
    """
    ok = [r for r in records if not r.censored]
    if len(ok) < 2:
        raise InsufficientRegenerations(f"{len(ok)} uncensored regeneration record(s); need at least 2")
    t = np.array([r.time for r in ok], dtype=np.int64)
    lv = np.array([r.level for r in ok], dtype=np.int64)
    dt, dl = np.diff(t), np.diff(lv)
    return RegenerationStats(
        mean_level_gap=float(dl.mean()),
        mean_time_gap=float(dt.mean()),
        power_sum=float(np.sum(dt.astype(float) ** lam)),
        n_gaps=int(dt.size),
        level_gaps=dl,
        time_gaps=dt,
    )


def censoring_rate(records: Sequence[RegenerationRecord]) -> float:
    return sum(r.censored for r in records) / len(records) if records else 0.0


# ---------------------------------------------------------------------------
# annealed escape experiments
# ---------------------------------------------------------------------------

def _require_transient(a_law: ALaw, off: OffspringLaw):
    if not is_transient(a_law, off):
        raise NotTransient("the walk is recurrent for this environment law")


def _escape_one(args) -> np.ndarray:
    a_law, off, seed, schedule = args
    tree = MarkedTree(a_law, off, seed)
    wkey = walk_key(seed)
    out = np.empty(len(schedule), dtype=np.int64)
    pos, t = 1, 0
    for i, n in enumerate(schedule):
        k, pos, _ = _advance(tree, pos, t, n - t, wkey)
        t += k
        out[i] = tree.depth[pos]
    return out


def escape_depths(a_law: ALaw, off: OffspringLaw, schedule: Sequence[int], replicates: int, seed: int,
                  workers: int = 1) -> np.ndarray:
    """``|X_n|`` for ``n`` in ``schedule`` (increasing), one row per replicate."""
    schedule = [int(n) for n in schedule]
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] < 1:
        raise ValueError("schedule must be increasing and start at >= 1")
    args = [(a_law, off, replicate_seed(seed, r), schedule) for r in range(replicates)]
    return np.vstack(map_replicates(_escape_one, args, workers))


def estimate_speed(a_law: ALaw, off: OffspringLaw, steps: int, replicates: int, seed: int,
                   workers: int = 1) -> EstimateWithCI:
    """Mean of ``|X_steps| / steps`` over independent trees and walks."""
    _require_transient(a_law, off)
    d = escape_depths(a_law, off, [steps], replicates, seed, workers)[:, 0]
    return EstimateWithCI.from_samples(d / steps, seed=seed, steps=steps)


@dataclass(frozen=True)
class ExponentRow:
    n: int
    median: float
    iqr: float
    q25: float
    q75: float


def exponent_table(depths: np.ndarray, schedule: Sequence[int]) -> list:
    """Per-``n`` summary of ``ln|X_n| / ln n``; ``|X_n| <= 1`` counts as exponent 0."""
    rows = []
    for j, n in enumerate(schedule):
        if n < 2:
            continue
        e = np.log(np.maximum(depths[:, j], 1)) / math.log(n)
        q25, med, q75 = np.percentile(e, [25, 50, 75])
        rows.append(ExponentRow(n=int(n), median=float(med), iqr=float(q75 - q25), q25=float(q25), q75=float(q75)))
    return rows


def estimate_exponent(a_law: ALaw, off: OffspringLaw, schedule: Sequence[int], replicates: int, seed: int,
                      workers: int = 1) -> list:
    """Table of ``(n, median, IQR)`` of ``ln|X_n| / ln n``; rows start at ``n >= 2``."""
    _require_transient(a_law, off)
    schedule = [n for n in schedule if n >= 2]
    if not schedule:
        raise ValueError("schedule needs at least one n >= 2")
    d = escape_depths(a_law, off, schedule, replicates, seed, workers)
    return exponent_table(d, schedule)


# ---------------------------------------------------------------------------
# escape probabilities
# ---------------------------------------------------------------------------

def estimate_beta_mc(tree: MarkedTree, vertex: VertexId, horizon: int, replicates: int,
                     seed: int = 0) -> EstimateWithCI:
    """Fraction of walks from ``vertex`` that avoid its parent for ``horizon`` steps.

    Biased upwards for finite horizons; the horizon is kept in ``extra``.
    """
    if vertex is ROOT_PARENT:
        raise ValueError("beta is undefined at the root's parent")
    x = tree.node_id(vertex)
    d = int(tree.depth[x])
    hits = np.empty(replicates)
    for r in range(replicates):
        _, _, stopped = _advance(tree, x, 0, horizon, walk_key(derive(seed, r)), stop_low=d - 1)
        hits[r] = 0.0 if stopped else 1.0
    return EstimateWithCI.from_samples(hits, seed=seed, horizon=horizon)


def beta_lower_bound(a_law: ALaw, off: OffspringLaw) -> float:
    """Escape probability of the worst deterministic subtree.

    Every vertex having the fewest possible children, all with the
    smallest possible mark, gives ``1 - 1/(nu_min a_min)`` (0 when that
    tree walk is recurrent).  The recursion is monotone, so this bounds
    ``beta`` from below at every vertex.
    """
    g = off.min_children * a_law.lo
    return 1.0 - 1.0 / g if g > 1 else 0.0


def estimate_beta_recursion(tree: MarkedTree, vertex: VertexId, depth: int) -> tuple[float, float]:
    """Certified bracket for ``beta(vertex)`` from the fixed-point recursion.

    The recursion ``1/beta(x) = 1 + 1/sum_i A(x_i) beta(x_i)`` is run up from
    ``depth`` generations below ``vertex`` with boundary values 1 (upper
    bound) and :func:`beta_lower_bound` (lower bound).
    """
    x = tree.node_id(vertex)
    lo_b = beta_lower_bound(tree.a_law, tree.off)
    if depth == 0:
        return lo_b, 1.0
    levels = [np.array([x], dtype=np.int64)]
    for _ in range(depth):
        levels.append(tree.level_ids_from(levels[-1]))
    out = []
    for boundary in (lo_b, 1.0):
        beta = np.full(levels[-1].size, boundary)
        for k in range(depth - 1, -1, -1):
            ids = levels[k]
            kids = levels[k + 1]
            s = np.add.reduceat(tree.mark[kids] * beta, np.concatenate([[0], np.cumsum(tree.nchild[ids])[:-1]]))
            beta = s / (1.0 + s)
        out.append(float(beta[0]))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# visited vertices per generation
# ---------------------------------------------------------------------------

def _visited_one(args) -> int:
    a_law, off, seed, n, extra_levels, step_cap = args
    tree = MarkedTree(a_law, off, seed)
    gens = np.empty(step_cap + 1, dtype=np.int64)
    pos = np.empty(step_cap + 1, dtype=np.int64)
    gens[0], pos[0] = 0, 1
    k, _, _ = _advance(tree, 1, 0, step_cap, walk_key(seed), stop_high=n + extra_levels,
                       rec_depth=gens, rec_pos=pos)
    g, p = gens[: k + 1], pos[: k + 1]
    return int(np.unique(p[g == n]).size)


def visited_per_generation(a_law: ALaw, off: OffspringLaw, n: int, replicates: int, seed: int,
                           extra_levels: int = 10, step_cap: Optional[int] = None,
                           workers: int = 1) -> EstimateWithCI:
    """Mean number of distinct generation-``n`` vertices ever visited.

    Each walk runs until it first reaches generation ``n + extra_levels``
    or ``step_cap`` steps, after which returns to generation ``n`` are
    ignored.
    """
    _require_transient(a_law, off)
    if n == 0:
        return EstimateWithCI.exact(1.0, replicates, seed)
    cap = step_cap if step_cap is not None else 200 * (n + extra_levels) + 10_000
    args = [(a_law, off, replicate_seed(seed, r), n, extra_levels, cap) for r in range(replicates)]
    counts = map_replicates(_visited_one, args, workers)
    return EstimateWithCI.from_samples(counts, seed=seed, n=n, extra_levels=extra_levels, step_cap=cap)


def biased_tree_speed(b: int, a: float) -> float:
    """Exact speed of the walk on the b-ary tree with constant mark ``a``.

    The generation process is a birth-death chain with up-probability
    ``b a / (1 + b a)``.
    """
    p = b * a / (1.0 + b * a)
    return max(0.0, 2.0 * p - 1.0)
