"""Reference CPDAG of a ground-truth time series graph.

Given the true graph (every link directed), this computes the maximally
informative partially directed graph identifiable from conditional
independence alone: lagged links keep their time orientation, and a
contemporaneous link is directed exactly when exhaustive v-structure
detection or closure under the three orientation rules forces it, with
lagged links acting as background knowledge. Everything here works off
plain parent sets of the true graph, deliberately independent of the
discovery pipeline, so the two can serve as cross-checking routes.
"""

from __future__ import annotations

import itertools

from .graphs import Mark, TimeSeriesGraph


def _true_parents(truth, k):
    """Parents of ``X^k_t`` in the true graph as (var, lag) pairs."""
    out = []
    for i in range(truth.n_vars):
        for tau in range(truth.tau_max + 1):
            if truth.marks[i, k, tau] == Mark.DIRECTED:
                out.append((i, tau))
    return out


def _adjacent(truth, i, tau, j):
    """Whether nodes ``X^i_{t-tau}`` and ``X^j_t`` are linked in truth."""
    return truth.marks[i, j, tau] != Mark.ABSENT


def reference_cpdag(truth):
    """Markov equivalence class representative of a true graph.

    Parameters
    ----------
    truth : TimeSeriesGraph
        Fully oriented ground-truth graph (no ``o-o`` or ``x-x`` marks).

    Returns
    -------
    TimeSeriesGraph with identical adjacencies, lagged links directed,
    and contemporaneous links directed where identifiable, ``o-o`` else.
    """
    n = truth.n_vars
    parents = {k: _true_parents(truth, k) for k in range(n)}
    contemp_pairs = {
        (min(i, j), max(i, j))
        for i in range(n) for j in range(n)
        if i != j and truth.marks[i, j, 0] != Mark.ABSENT
    }

    directed = set()      # ordered contemporaneous pairs (i, j) meaning i -> j

    def is_undirected(a, b):
        key = (min(a, b), max(a, b))
        return (key in contemp_pairs
                and (a, b) not in directed and (b, a) not in directed)

    # exhaustive v-structure detection: a contemporaneous true edge p -> k
    # is forced whenever k has another parent non-adjacent to p
    for k in range(n):
        for (p, plag) in parents[k]:
            if plag != 0:
                continue
            for (i, tau) in parents[k]:
                if (i, tau) == (p, 0):
                    continue
                if not _adjacent(truth, i, tau, p):
                    directed.add((p, k))
                    break

    def rule_forces(x, y):
        """Whether closure rules force the orientation x -> y."""
        # R1: u --> x o-o y with u, y non-adjacent
        for (i, tau) in parents[x]:
            if tau > 0 and not _adjacent(truth, i, tau, y):
                return True
        for (c, x2) in directed:
            if x2 == x and c != y and not _adjacent(truth, c, 0, y):
                return True
        # R2: x --> k --> y with x o-o y (avoids a cycle)
        for k in range(n):
            if (x, k) in directed and (k, y) in directed:
                return True
        # R3: x o-o k --> y and x o-o l --> y with k, l non-adjacent
        heads = [k for k in range(n)
                 if (k, y) in directed and is_undirected(x, k)]
        for k, l in itertools.combinations(heads, 2):
            if not _adjacent(truth, k, 0, l):
                return True
        return False

    changed = True
    while changed:
        changed = False
        for (a, b) in sorted(contemp_pairs):
            if not is_undirected(a, b):
                continue
            for (x, y) in ((a, b), (b, a)):
                if rule_forces(x, y):
                    if (y, x) in directed:
                        raise RuntimeError(
                            "contradictory orientations from a true DAG")
                    directed.add((x, y))
                    changed = True
                    break

    out = TimeSeriesGraph(n, truth.tau_max, truth.var_names)
    out.marks[:, :, 1:] = truth.marks[:, :, 1:]
    for (i, j) in sorted(contemp_pairs):
        if (i, j) in directed:
            out.set_mark(i, j, 0, Mark.DIRECTED)
        elif (j, i) in directed:
            out.set_mark(j, i, 0, Mark.DIRECTED)
        else:
            out.set_mark(i, j, 0, Mark.UNDIRECTED)
    return out
