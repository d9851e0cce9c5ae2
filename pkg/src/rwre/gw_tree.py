"""Lazily grown marked Galton-Watson trees.

Vertices are addressed by tuples of 1-based child indices from the root
(the root is ``()``); :data:`ROOT_PARENT` is the artificial parent of the
root.  Each vertex's offspring vector is drawn from a random stream keyed
by a hash of its address, so a tree is fully determined by
``(a_law, off, seed)`` whatever order it is explored in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO, Union

import numpy as np

from . import _kernels as K
from .errors import BudgetExceeded
from .law import ALaw, OffspringLaw
from .rng import mix64

DEFAULT_BUDGET = 10_000_000


class _RootParent:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ROOT_PARENT"

    def __reduce__(self):
        return (_RootParent, ())


ROOT_PARENT = _RootParent()
VertexId = Union[tuple, _RootParent]


def generation(v: VertexId) -> int:
    return -1 if v is ROOT_PARENT else len(v)


@dataclass(frozen=True)
class NodeRecord:
    nu: int
    marks: tuple
    p_parent: float
    p_children: tuple


class MarkedTree:
    """A Galton-Watson tree with marks, expanded on demand.

    Parameters
    ----------
    a_law, off : ALaw, OffspringLaw
        Law of the marks and of the offspring count.
    seed : int
        64-bit seed; equal seeds give identical trees.
    budget : int
        Maximum number of stored nodes.
    """

    def __init__(self, a_law: ALaw, off: OffspringLaw, seed: int, budget: int = DEFAULT_BUDGET,
                 capacity: int = 1024):
        self.a_law = a_law
        self.off = off
        self.seed = int(seed)
        self.budget = int(budget)
        self._off_cdf = off.cdf()
        self._a_mode, self._a_xs, self._a_cdf = a_law.sampling_table()
        cap = max(16, min(capacity, self.budget))
        self.parent = np.zeros(cap, dtype=np.int64)
        self.depth = np.zeros(cap, dtype=np.int64)
        self.first_child = np.full(cap, K.UNEXPANDED, dtype=np.int64)
        self.nchild = np.zeros(cap, dtype=np.int64)
        self.mark = np.full(cap, np.nan)
        self.msum = np.zeros(cap)
        self.key = np.zeros(cap, dtype=np.uint64)
        # node 0: artificial parent, its single child is the root
        self.parent[0] = -1
        self.depth[0] = -1
        self.first_child[0] = 1
        self.nchild[0] = 1
        self.parent[1] = 0
        self.depth[1] = 0
        self.key[1] = np.uint64(mix64(self.seed))
        self.n_nodes = 2

    # -- storage -------------------------------------------------------------
    @property
    def capacity(self) -> int:
        return self.parent.size

    def arrays(self):
        return (self.parent, self.depth, self.first_child, self.nchild, self.mark, self.msum, self.key)

    def law_tables(self):
        return (self._off_cdf, self._a_mode, self._a_xs, self._a_cdf)

    def grow(self, need: int = 0):
        """Enlarge storage; raises :class:`BudgetExceeded` past the budget."""
        want = max(self.capacity * 2, self.n_nodes + need)
        if self.n_nodes + need > self.budget:
            raise BudgetExceeded(f"tree would exceed the budget of {self.budget} nodes")
        new = min(want, self.budget)
        old = self.capacity
        pad = new - old

        def ext(a, fill):
            return np.concatenate([a, np.full(pad, fill, dtype=a.dtype)])

        self.parent = ext(self.parent, 0)
        self.depth = ext(self.depth, 0)
        self.first_child = ext(self.first_child, K.UNEXPANDED)
        self.nchild = ext(self.nchild, 0)
        self.mark = ext(self.mark, np.nan)
        self.msum = ext(self.msum, 0.0)
        self.key = ext(self.key, 0)

    def expand_ids(self, ids: np.ndarray):
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        kmax = self._off_cdf.size
        while True:
            done, self.n_nodes = K.expand_many(ids, self.n_nodes, self.capacity, *self.arrays(), *self.law_tables())
            if done == ids.size:
                return
            ids = ids[done:]
            self.grow(kmax)

    def expand_id(self, x: int):
        if x != 0 and self.first_child[x] == K.UNEXPANDED:
            self.expand_ids(np.array([x], dtype=np.int64))

    # -- addresses -------------------------------------------------------------
    def node_id(self, v: VertexId) -> int:
        """Internal id of the vertex at address ``v``, expanding along the path."""
        if v is ROOT_PARENT:
            return 0
        x = 1
        for i in v:
            self.expand_id(x)
            if not 1 <= i <= self.nchild[x]:
                raise KeyError(f"vertex {v} does not exist: child index {i} of {self.nchild[x]}")
            x = int(self.first_child[x]) + i - 1
        return x

    def address(self, x: int) -> VertexId:
        if x == 0:
            return ROOT_PARENT
        path = []
        while x != 1:
            p = int(self.parent[x])
            path.append(x - int(self.first_child[p]) + 1)
            x = p
        return tuple(reversed(path))

    def children_ids(self, x: int) -> range:
        self.expand_id(x)
        f = int(self.first_child[x])
        return range(f, f + int(self.nchild[x]))

    def parent_id(self, x: int) -> int:
        return int(self.parent[x])

    def nu(self, x: int) -> int:
        self.expand_id(x)
        return int(self.nchild[x])

    def record(self, x: int) -> NodeRecord:
        if x == 0:
            return NodeRecord(nu=1, marks=(), p_parent=0.0, p_children=(1.0,))
        self.expand_id(x)
        f, nu = int(self.first_child[x]), int(self.nchild[x])
        marks = tuple(float(a) for a in self.mark[f:f + nu])
        total = 1.0 + sum(marks)
        return NodeRecord(nu=nu, marks=marks, p_parent=1.0 / total, p_children=tuple(a / total for a in marks))

    def expand(self, v: VertexId) -> NodeRecord:
        """Offspring count, child marks and transition probabilities at ``v``."""
        return self.record(self.node_id(v))

    def transition_row(self, x: int) -> tuple[int, list, list]:
        """``(parent_id, child_ids, probabilities)``; probabilities list the parent first."""
        rec = self.record(x)
        kids = list(self.children_ids(x)) if x != 0 else [1]
        return self.parent_id(x), kids, [rec.p_parent, *rec.p_children]

    # -- counts ------------------------------------------------------------------
    def level_sizes(self, x: int, n: int) -> np.ndarray:
        """Sizes ``nu(x, k)`` for ``k = 0..n``."""
        out = np.empty(n + 1, dtype=np.int64)
        frontier = np.array([x], dtype=np.int64)
        out[0] = 1
        for k in range(1, n + 1):
            frontier = self.level_ids_from(frontier)
            out[k] = frontier.size
        return out

    def level_ids_from(self, frontier: np.ndarray) -> np.ndarray:
        nexp = int(np.count_nonzero(self.first_child[frontier] == K.UNEXPANDED))
        if self.n_nodes + nexp * self._off_cdf.size > self.budget:
            raise BudgetExceeded(f"expanding {nexp} vertices would exceed the budget of {self.budget}")
        self.expand_ids(frontier)
        return K.children_of(frontier, self.first_child, self.nchild)

    def dump(self, fh: TextIO):
        """One line per expanded vertex: ``address TAB nu TAB marks``."""
        for x in range(1, self.n_nodes):
            if self.first_child[x] == K.UNEXPANDED:
                continue
            f, nu = int(self.first_child[x]), int(self.nchild[x])
            addr = ".".join(str(i) for i in self.address(x)) or "e"
            marks = "\t".join(repr(float(a)) for a in self.mark[f:f + nu])
            fh.write(f"{addr}\t{nu}\t{marks}\n")


def count_descendants(tree: MarkedTree, u: VertexId, n: int) -> int:
    """``nu(u, n)``: number of descendants of ``u`` exactly ``n`` generations below."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 1
    x = tree.node_id(u)
    frontier = np.array([x], dtype=np.int64)
    for _ in range(n):
        frontier = tree.level_ids_from(frontier)
    return int(frontier.size)


def generation_size(tree: MarkedTree, n: int) -> int:
    """``Z_n``, the size of generation ``n``."""
    return count_descendants(tree, (), n)
