"""Independent reference implementations used only to check the library.

Everything here recomputes a result by a different route than the code
under test: d-separation by exhaustive path enumeration, partial
correlation through the precision matrix, and triple enumeration by a
direct pattern scan over all index combinations.
"""

import math

import numpy as np

from tscausal.graphs import Mark


def unrolled_edges(model, depth):
    """Directed edges of the model graph unrolled over lags 0..depth."""
    edges = set()
    for j in range(model.n_vars):
        for (u, lam) in model.parents(j):
            for ell in range(depth + 1):
                if ell + lam <= depth:
                    edges.add(((u, ell + lam), (j, ell)))
    return edges


def _structure(model, depth):
    edges = unrolled_edges(model, depth)
    nodes = {(v, ell) for v in range(model.n_vars) for ell in range(depth + 1)}
    parents = {n: set() for n in nodes}
    children = {n: set() for n in nodes}
    for (a, b) in edges:
        parents[b].add(a)
        children[a].add(b)
    return nodes, parents, children


def moral_graph_dsep(model, x, y, z, depth):
    """Separation in the moralized ancestral graph (Lauritzen's route)."""
    x, y = tuple(x), tuple(y)
    z = {tuple(c) for c in z}
    nodes, parents, _ = _structure(model, depth)

    ancestral = set()
    stack = [x, y, *z]
    while stack:
        n = stack.pop()
        if n not in ancestral:
            ancestral.add(n)
            stack.extend(parents[n])

    undirected = {n: set() for n in ancestral}
    for n in ancestral:
        ps = [p for p in parents[n] if p in ancestral]
        for p in ps:
            undirected[n].add(p)
            undirected[p].add(n)
        for a in ps:          # marry co-parents
            for b in ps:
                if a != b:
                    undirected[a].add(b)

    seen = {x} | z            # conditioned nodes block traversal
    stack = [x]
    while stack:
        n = stack.pop()
        for m in undirected[n]:
            if m == y:
                return False
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return True


def brute_force_dsep(model, x, y, z, depth, budget=None):
    """Path-enumeration d-separation on the unrolled graph.

    With a ``budget`` the search gives up after that many expansions and
    returns None (used to skip rare dense worst cases in bulk tests).
    """
    x, y = tuple(x), tuple(y)
    z = {tuple(c) for c in z}
    nodes, parents, children = _structure(model, depth)

    # nodes with a descendant in z (including z itself)
    anc_of_z = set()
    stack = list(z)
    while stack:
        n = stack.pop()
        if n not in anc_of_z:
            anc_of_z.add(n)
            stack.extend(parents[n])

    neighbors = {n: parents[n] | children[n] for n in nodes}

    def interior_open(prev, mid, nxt):
        if prev in parents[mid] and nxt in parents[mid]:
            return mid in anc_of_z
        return mid not in z

    # depth-first enumeration of simple paths from x to y; a branch is cut
    # as soon as its newest interior node is blocked, so every completed
    # path is open by construction
    stack = [(x, [x])]
    expansions = 0
    while stack:
        node, path = stack.pop()
        expansions += 1
        if budget is not None and expansions > budget:
            return None
        for nxt in neighbors[node]:
            if nxt in path:
                continue
            if len(path) >= 2 and not interior_open(path[-2], node, nxt):
                continue
            if nxt == y:
                return False
            stack.append((nxt, path + [nxt]))
    return True


def precision_matrix_parcorr(samples):
    """Partial correlation of the first two columns given the rest."""
    cov = np.cov(samples, rowvar=False, ddof=1)
    omega = np.linalg.inv(cov)
    return float(-omega[0, 1] / math.sqrt(omega[0, 0] * omega[1, 1]))


def scan_collider_triples(graph):
    """Direct pattern scan for unshielded collider-candidate triples."""
    n, _, width = graph.marks.shape
    found = []
    for k in range(n):
        for j in range(n):
            if j == k or graph.marks[k, j, 0] != Mark.UNDIRECTED:
                continue
            for i in range(n):
                for tau in range(1, width):
                    if (graph.marks[i, k, tau] == Mark.DIRECTED
                            and graph.marks[i, j, tau] == Mark.ABSENT):
                        found.append(((i, tau), (k, 0), (j, 0)))
                if (i not in (k, j) and i < j
                        and graph.marks[i, k, 0] == Mark.UNDIRECTED
                        and graph.marks[i, j, 0] == Mark.ABSENT):
                    found.append(((i, 0), (k, 0), (j, 0)))
    found.sort(key=lambda t: (t[0][0], t[0][1], t[1][0], t[2][0]))
    return found
