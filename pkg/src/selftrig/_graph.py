"""Low-level directed-graph helpers shared by the game solvers and oracles.

Everything here is exact: cycle means are Fractions, SCCs come from an
iterative Tarjan so deep graphs cannot hit the recursion limit.
"""

from fractions import Fraction

import numpy as np


def sort_edges(esrc, edst, *payloads):
    """Canonical edge order: lexicographic by (src, dst, payloads)."""
    esrc = np.asarray(esrc)
    edst = np.asarray(edst)
    keys = tuple(np.asarray(p) for p in reversed(payloads)) + (edst, esrc)
    order = np.lexsort(keys)
    out = [esrc[order], edst[order]] + [np.asarray(p)[order] for p in payloads]
    return tuple(out)


def out_slices(esrc, n):
    """Per-vertex [lo, hi) ranges into edge arrays sorted by source."""
    lo = np.searchsorted(esrc, np.arange(n))
    hi = np.searchsorted(esrc, np.arange(n) + 1)
    return lo, hi


def adjacency(n, edges):
    adj = [[] for _ in range(n)]
    for i, (u, v) in enumerate(edges):
        adj[u].append((v, i))
    return adj


def tarjan_scc(n, edges, active=None):
    """Strongly connected components (iterative).

    Returns an array mapping vertex -> component id; inactive vertices get -1.
    Component ids are in reverse topological order of discovery.
    """
    if active is None:
        active = [True] * n
    adj = [[] for _ in range(n)]
    for u, v in edges:
        if active[u] and active[v]:
            adj[u].append(v)
    index = [-1] * n
    low = [0] * n
    comp = [-1] * n
    on_stack = [False] * n
    stack = []
    counter = [0]
    ncomp = [0]

    for root in range(n):
        if not active[root] or index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter[0]
                counter[0] += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(adj[v]):
                w = adj[v][pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp[0]
                    if w == v:
                        break
                ncomp[0] += 1
            else:
                low[v] = min(low[v], low[v])
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comp, ncomp[0]


def nontrivial_components(n, edges, comp, active=None):
    """Component ids that contain a cycle (size > 1 or a self-loop)."""
    if active is None:
        active = [True] * n
    size = {}
    for v in range(n):
        if active[v] and comp[v] >= 0:
            size[comp[v]] = size.get(comp[v], 0) + 1
    cyclic = {c for c, s in size.items() if s > 1}
    for u, v in edges:
        if u == v and active[u] and comp[u] >= 0:
            cyclic.add(comp[u])
    return cyclic


def min_mean_cycle(n, edges, active=None):
    """Exact minimum cycle mean (Karp), or None when the graph is acyclic.

    edges: iterable of (u, v, weight) with integer or Fraction weights.
    """
    if active is None:
        active = [True] * n
    plain = [(u, v) for u, v, _ in edges]
    comp, ncomp = tarjan_scc(n, plain, active)
    cyclic = nontrivial_components(n, plain, comp, active)
    best = None
    for c in cyclic:
        verts = [v for v in range(n) if comp[v] == c and active[v]]
        remap = {v: i for i, v in enumerate(verts)}
        m = len(verts)
        ces = [(remap[u], remap[v], w) for u, v, w in edges
               if active[u] and active[v] and comp[u] == c and comp[v] == c]
        # Karp: D[k][v] = min weight of a k-edge walk from the root
        NONE = None
        D = [[NONE] * m for _ in range(m + 1)]
        D[0][0] = 0
        for k in range(1, m + 1):
            row = D[k]
            prev = D[k - 1]
            for u, v, w in ces:
                if prev[u] is not None:
                    cand = prev[u] + w
                    if row[v] is None or cand < row[v]:
                        row[v] = cand
        for v in range(m):
            if D[m][v] is None:
                continue
            worst = None
            for k in range(m):
                if D[k][v] is None:
                    continue
                val = Fraction(D[m][v] - D[k][v], m - k)
                if worst is None or val > worst:
                    worst = val
            if worst is not None and (best is None or worst < best):
                best = worst
    return best


def odd_max_cycle_vertices(n, edges, colors, active=None):
    """Vertices inside an SCC that carries a cycle whose max color is odd."""
    if active is None:
        active = [True] * n
    bad = [False] * n
    odd_colors = sorted({colors[v] for v in range(n) if active[v]
                         and colors[v] % 2 == 1})
    for o in odd_colors:
        sub = [active[v] and colors[v] <= o for v in range(n)]
        plain = [(u, v) for u, v in edges]
        comp, _ = tarjan_scc(n, plain, sub)
        cyclic = nontrivial_components(n, plain, comp, sub)
        hit = set()
        for v in range(n):
            if sub[v] and comp[v] in cyclic and colors[v] == o:
                hit.add(comp[v])
        for v in range(n):
            if sub[v] and comp[v] in hit:
                bad[v] = True
    return bad


def reachable_from(n, adj_plain, start):
    seen = [False] * n
    seen[start] = True
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj_plain[v]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return seen


def backward_closure(n, edges, seeds):
    """All vertices that can reach a seed."""
    radj = [[] for _ in range(n)]
    for u, v in edges:
        radj[v].append(u)
    seen = list(seeds)
    stack = [v for v in range(n) if seen[v]]
    while stack:
        v = stack.pop()
        for u in radj[v]:
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return seen
