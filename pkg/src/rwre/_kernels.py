"""Compiled inner loops: lazy tree expansion and the walk samplers.

Tree storage is a set of parallel arrays indexed by node id.  Node 0 is
the artificial parent of the root, node 1 the root.  Children of a node
get consecutive ids when the node is expanded.
"""

import numpy as np
from numba import njit

from .rng import nb_derive, nb_uniform

OK = 0
NEED_GROW = 1
STOPPED = 2

UNEXPANDED = -1


@njit(cache=True, inline="always")
def _sample_mark(u, a_mode, a_xs, a_cdf):
    if a_mode == 0:
        k = 0
        while k < a_xs.size - 1 and u >= a_cdf[k]:
            k += 1
        return a_xs[k]
    pos = u * (a_xs.size - 1)
    i = int(pos)
    if i >= a_xs.size - 1:
        return a_xs[a_xs.size - 1]
    f = pos - i
    return a_xs[i] * (1.0 - f) + a_xs[i + 1] * f


@njit(cache=True)
def expand_node(x, n_nodes, parent, depth, first_child, nchild, mark, msum, key,
                off_cdf, a_mode, a_xs, a_cdf):
    """Draw the offspring vector of ``x``; returns the new node count."""
    k = key[x]
    u = nb_uniform(k, 0)
    nu = 1
    while nu < off_cdf.size and u >= off_cdf[nu - 1]:
        nu += 1
    first_child[x] = n_nodes
    nchild[x] = nu
    s = 0.0
    for i in range(nu):
        c = n_nodes + i
        a = _sample_mark(nb_uniform(k, i + 1), a_mode, a_xs, a_cdf)
        parent[c] = x
        depth[c] = depth[x] + 1
        first_child[c] = UNEXPANDED
        nchild[c] = 0
        mark[c] = a
        msum[c] = 0.0
        key[c] = nb_derive(k, i + 1)
        s += a
    msum[x] = s
    return n_nodes + nu


@njit(cache=True)
def expand_many(ids, n_nodes, cap, parent, depth, first_child, nchild, mark, msum, key,
                off_cdf, a_mode, a_xs, a_cdf):
    """Expand every unexpanded node of ``ids``.

    Returns ``(done, n_nodes)`` where ``done`` is the number of ids
    processed before capacity ran out.
    """
    kmax = off_cdf.size
    for j in range(ids.size):
        x = ids[j]
        if first_child[x] == UNEXPANDED:
            if n_nodes + kmax > cap:
                return j, n_nodes
            n_nodes = expand_node(x, n_nodes, parent, depth, first_child, nchild, mark, msum, key,
                                  off_cdf, a_mode, a_xs, a_cdf)
    return ids.size, n_nodes


@njit(cache=True)
def children_of(ids, first_child, nchild):
    total = 0
    for j in range(ids.size):
        total += nchild[ids[j]]
    out = np.empty(total, dtype=np.int64)
    t = 0
    for j in range(ids.size):
        f = first_child[ids[j]]
        for i in range(nchild[ids[j]]):
            out[t] = f + i
            t += 1
    return out


@njit(cache=True)
def tree_walk(pos, step0, nsteps, wkey, n_nodes, cap,
              parent, depth, first_child, nchild, mark, msum, key,
              off_cdf, a_mode, a_xs, a_cdf,
              stop_low, stop_high, rec_depth, rec_pos, rec_offset):
    """Advance the quenched walk by up to ``nsteps`` steps.

    Step ``step0 + k`` consumes uniform ``step0 + k`` of the walk stream.
    The walk halts early (status STOPPED) on reaching a depth
    ``<= stop_low`` or ``>= stop_high``, or with NEED_GROW when an
    expansion could overflow ``cap``.  Depths/positions after each step
    are written at ``rec_offset + k + 1`` when the record arrays are
    non-empty.

    Returns ``(status, steps_taken, pos, n_nodes)``.
    """
    kmax = off_cdf.size
    rd = rec_depth.size > 0
    rp = rec_pos.size > 0
    for k in range(nsteps):
        x = pos
        if x == 0:
            y = 1
        else:
            if first_child[x] == UNEXPANDED:
                if n_nodes + kmax > cap:
                    return NEED_GROW, k, pos, n_nodes
                n_nodes = expand_node(x, n_nodes, parent, depth, first_child, nchild, mark, msum, key,
                                      off_cdf, a_mode, a_xs, a_cdf)
            r = nb_uniform(wkey, step0 + k) * (1.0 + msum[x])
            if r < 1.0:
                y = parent[x]
            else:
                r -= 1.0
                f = first_child[x]
                nc = nchild[x]
                y = f + nc - 1
                for i in range(nc - 1):
                    r -= mark[f + i]
                    if r < 0.0:
                        y = f + i
                        break
        pos = y
        if rd:
            rec_depth[rec_offset + k + 1] = depth[y]
        if rp:
            rec_pos[rec_offset + k + 1] = y
        d = depth[y]
        if d <= stop_low or d >= stop_high:
            return STOPPED, k + 1, pos, n_nodes
    return OK, nsteps, pos, n_nodes


@njit(cache=True)
def next_lower(gen):
    """Index of the next strictly smaller entry after each position (-1 if none)."""
    n = gen.size
    out = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        g = gen[i]
        while top > 0 and gen[stack[top - 1]] > g:
            top -= 1
            out[stack[top]] = i
        stack[top] = i
        top += 1
    return out


# -- linearly edge reinforced walk on the b-ary tree ----------------------------

@njit(cache=True)
def urn_walk(b, delta, nsteps, wkey, rec_every, cap):
    """Reinforced walk from the root of the b-ary tree.

    Node 0 is the root (no parent edge).  ``w[x]`` is the weight of the
    edge from ``x`` to its parent and ``csum[x]`` the total weight of the
    child edges of ``x``.  Returns the depth recorded every ``rec_every``
    steps (index 0 is time 0), or an empty array if ``cap`` nodes would
    not suffice.
    """
    parent = np.empty(cap, dtype=np.int64)
    depth = np.empty(cap, dtype=np.int64)
    first = np.full(cap, -1, dtype=np.int64)
    w = np.ones(cap)
    csum = np.zeros(cap)
    parent[0] = -1
    depth[0] = 0
    n_nodes = 1
    nrec = nsteps // rec_every + 1
    rec = np.zeros(nrec, dtype=np.int64)
    x = 0
    for k in range(nsteps):
        if first[x] < 0:
            if n_nodes + b > cap:
                return np.empty(0, dtype=np.int64)
            first[x] = n_nodes
            for i in range(b):
                c = n_nodes + i
                parent[c] = x
                depth[c] = depth[x] + 1
                first[c] = -1
                w[c] = 1.0
                csum[c] = 0.0
            csum[x] = float(b)
            n_nodes += b
        up = w[x] if x != 0 else 0.0
        r = nb_uniform(wkey, k) * (up + csum[x])
        if r < up:
            p = parent[x]
            w[x] += delta
            csum[p] += delta
            x = p
        else:
            r -= up
            f = first[x]
            y = f + b - 1
            for i in range(b - 1):
                r -= w[f + i]
                if r < 0.0:
                    y = f + i
                    break
            w[y] += delta
            csum[x] += delta
            x = y
        if (k + 1) % rec_every == 0:
            rec[(k + 1) // rec_every] = depth[x]
    return rec


# -- one-dimensional walk -------------------------------------------------------

@njit(cache=True)
def line_exit(p_fwd, max_steps, wkey):
    """Walk from 0 on {-1, ..., n} with forward probabilities ``p_fwd``.

    Returns the exit time of ``(-1, n)`` or ``max_steps + 1`` if the walk
    is still inside after ``max_steps`` steps.
    """
    n = p_fwd.size
    x = 0
    for k in range(max_steps):
        if nb_uniform(wkey, k) < p_fwd[x]:
            x += 1
        else:
            x -= 1
        if x < 0 or x >= n:
            return k + 1
    return max_steps + 1


# -- short trajectory prefixes for the urn / environment comparison ------------

@njit(cache=True, inline="always")
def _normal(key, j):
    # Box-Muller from two stream uniforms
    u1 = 1.0 - nb_uniform(key, j)
    u2 = nb_uniform(key, j + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True)
def _gamma(shape, key, j):
    """Gamma(shape, 1) variate; returns ``(value, next counter)``.

    Marsaglia-Tsang, with the ``U^{1/shape}`` boost for shape < 1.
    """
    boost = 1.0
    if shape < 1.0:
        boost = (1.0 - nb_uniform(key, j)) ** (1.0 / shape)
        j += 1
        shape += 1.0
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        z = _normal(key, j)
        j += 2
        v = 1.0 + c * z
        if v <= 0.0:
            continue
        v = v * v * v
        u = 1.0 - nb_uniform(key, j)
        j += 1
        if np.log(u) < 0.5 * z * z + d - d * v + d * np.log(v):
            return d * v * boost, j


@njit(cache=True)
def dirichlet_rows(params, nrows, key):
    """``nrows`` independent Dirichlet(params) vectors, row ``r`` keyed by ``derive(key, r)``."""
    k = params.size
    out = np.empty((nrows, k))
    for r in range(nrows):
        rk = nb_derive(key, r)
        j = 0
        s = 0.0
        for i in range(k):
            g, j = _gamma(params[i], rk, j)
            out[r, i] = g
            s += g
        for i in range(k):
            out[r, i] /= s
    return out


@njit(cache=True)
def urn_prefixes(b, delta, s, reps, key):
    """Move codes of ``s``-step reinforced-walk prefixes from the root.

    Move ``m`` is 0 for a parent step and ``i`` for child ``i`` (1-based);
    the code is ``sum_k m_k (b+1)^k``.
    """
    cap = 1 + b * s
    parent = np.empty(cap, dtype=np.int64)
    first = np.empty(cap, dtype=np.int64)
    w = np.empty(cap)
    csum = np.empty(cap)
    codes = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        rk = nb_derive(key, r)
        parent[0] = -1
        first[0] = -1
        n_nodes = 1
        x = 0
        code = 0
        base = 1
        for k in range(s):
            if first[x] < 0:
                first[x] = n_nodes
                for i in range(b):
                    c = n_nodes + i
                    parent[c] = x
                    first[c] = -1
                    w[c] = 1.0
                    csum[c] = 0.0
                csum[x] = float(b)
                n_nodes += b
            up = w[x] if x != 0 else 0.0
            u = nb_uniform(rk, k) * (up + csum[x])
            if u < up:
                p = parent[x]
                w[x] += delta
                csum[p] += delta
                x = p
                m = 0
            else:
                u -= up
                f = first[x]
                m = b
                for i in range(b - 1):
                    u -= w[f + i]
                    if u < 0.0:
                        m = i + 1
                        break
                y = f + m - 1
                w[y] += delta
                csum[x] += delta
                x = y
            code += m * base
            base *= b + 1
        codes[r] = code
    return codes


@njit(cache=True)
def env_prefixes(b, s, reps, key, parent_param, child_param, root_param):
    """Move codes of ``s``-step prefixes of the walk in a fresh Dirichlet environment.

    Non-root vertices draw ``(omega_parent, omega_children)`` from
    Dirichlet(parent_param, child_param, ...); the root draws its children
    from Dirichlet(root_param, ...).  Encoding as in :func:`urn_prefixes`.
    """
    cap = 1 + b * s
    parent = np.empty(cap, dtype=np.int64)
    first = np.empty(cap, dtype=np.int64)
    row = np.empty((cap, b + 1))
    drawn = np.zeros(cap, dtype=np.bool_)
    codes = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        rk = nb_derive(key, r)
        # walk uniforms use counters 0..s-1, gamma draws count up from s
        j = s
        parent[0] = -1
        first[0] = -1
        drawn[0] = False
        n_nodes = 1
        x = 0
        code = 0
        base = 1
        for k in range(s):
            if not drawn[x]:
                tot = 0.0
                if x == 0:
                    row[x, 0] = 0.0
                else:
                    g, j = _gamma(parent_param, rk, j)
                    row[x, 0] = g
                    tot += g
                for i in range(b):
                    g, j = _gamma(root_param if x == 0 else child_param, rk, j)
                    row[x, i + 1] = g
                    tot += g
                for i in range(b + 1):
                    row[x, i] /= tot
                drawn[x] = True
            if first[x] < 0:
                first[x] = n_nodes
                for i in range(b):
                    c = n_nodes + i
                    parent[c] = x
                    first[c] = -1
                    drawn[c] = False
                n_nodes += b
            u = nb_uniform(rk, k)
            m = b
            acc = 0.0
            for i in range(b):
                acc += row[x, i]
                if u < acc:
                    m = i
                    break
            if m == 0:
                x = parent[x]
            else:
                x = first[x] + m - 1
            code += m * base
            base *= b + 1
        codes[r] = code
    return codes
