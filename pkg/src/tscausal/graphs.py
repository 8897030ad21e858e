"""Time series graphs over variable-lag nodes with link marks.

A graph holds one mark per link slot ``(i, j, tau)``, read as the link
between the node ``X^i_{t-tau}`` and the node ``X^j_t`` at reference time
``t``. Lagged slots (``tau > 0``) are either absent or directed forward in
time; contemporaneous slots (``tau = 0``) carry partially directed marks
and are stored mirrored, so ``mark(i, j, 0)`` and ``mark(j, i, 0)`` always
agree.
"""

from __future__ import annotations

import itertools
from typing import Iterable, NamedTuple

import numpy as np


class VarLag(NamedTuple):
    """Node ``X^var_{t-lag}`` of a time series graph (lag >= 0)."""

    var: int
    lag: int


class Mark:
    """Link mark strings used throughout, also in serialized graphs."""

    ABSENT = ""
    DIRECTED = "-->"      # tail at (i, tau), head at (j, 0)
    REVERSED = "<--"      # mirror image of DIRECTED, contemporaneous only
    UNDIRECTED = "o-o"
    CONFLICT = "x-x"

    ALL = (ABSENT, DIRECTED, REVERSED, UNDIRECTED, CONFLICT)
    LAGGED = (ABSENT, DIRECTED)

    MIRROR = {
        ABSENT: ABSENT,
        DIRECTED: REVERSED,
        REVERSED: DIRECTED,
        UNDIRECTED: UNDIRECTED,
        CONFLICT: CONFLICT,
    }


def _canonical_triple(x: VarLag, k: int, y: VarLag):
    """Canonical form of an unshielded triple (endpoints sorted for tau=0)."""
    if x.lag == 0 and y.lag == 0 and x.var > y.var:
        x, y = y, x
    return (VarLag(*x), VarLag(k, 0), VarLag(*y))


class SepSetStore:
    """Separating sets recorded when skeleton links are deleted.

    Keys are normalized link identifiers ``((i, tau), j)``; contemporaneous
    keys are unordered, so ``((i, 0), j)`` and ``((j, 0), i)`` address the
    same entry. A key exists only for deleted links.
    """

    def __init__(self):
        self._sets = {}

    @staticmethod
    def _key(x, j):
        i, tau = x
        if tau == 0 and i > j:
            i, j = j, i
        return ((i, tau), j)

    def store(self, x, j, conditions):
        conds = frozenset(VarLag(*c) for c in conditions)
        i, tau = x
        if VarLag(i, tau) in conds or VarLag(j, 0) in conds:
            raise ValueError("separating set must not contain an endpoint")
        self._sets[self._key(x, j)] = conds

    def get(self, x, j):
        """Separating set for the deleted link, empty if none recorded."""
        return self._sets.get(self._key(x, j), frozenset())

    def __contains__(self, key):
        x, j = key
        return self._key(x, j) in self._sets

    def __len__(self):
        return len(self._sets)

    def items(self):
        return self._sets.items()


class TimeSeriesGraph:
    """Dense mark table over ``(i, j, tau)`` link slots.

    Parameters
    ----------
    n_vars : int
        Number of variables N.
    tau_max : int
        Maximum time lag of a link slot.
    var_names : list of str, optional
        Names used in serialization; defaults to ``X1 .. XN``.
    """

    def __init__(self, n_vars, tau_max, var_names=None):
        if n_vars < 1 or tau_max < 0:
            raise ValueError("need n_vars >= 1 and tau_max >= 0")
        self.n_vars = int(n_vars)
        self.tau_max = int(tau_max)
        if var_names is None:
            var_names = ["X%d" % (i + 1) for i in range(n_vars)]
        if len(var_names) != n_vars:
            raise ValueError("var_names length must equal n_vars")
        self.var_names = list(var_names)
        self.marks = np.full((n_vars, n_vars, tau_max + 1), "", dtype="<U3")
        self.ambiguous_triples = set()

    # -- mark access -------------------------------------------------

    def mark(self, i, j, tau):
        return str(self.marks[i, j, tau])

    def set_mark(self, i, j, tau, mark):
        """Set the mark of slot (i, j, tau), mirroring contemporaneous slots."""
        if mark not in Mark.ALL:
            raise ValueError("unknown mark %r" % mark)
        if tau < 0 or tau > self.tau_max:
            raise ValueError("lag %d outside [0, %d]" % (tau, self.tau_max))
        if tau == 0:
            if i == j:
                raise ValueError("no contemporaneous self links")
            self.marks[i, j, 0] = mark
            self.marks[j, i, 0] = Mark.MIRROR[mark]
        else:
            if mark not in Mark.LAGGED:
                raise ValueError(
                    "lagged slots only take %r or %r" % Mark.LAGGED)
            self.marks[i, j, tau] = mark

    def has_link(self, i, j, tau):
        return self.marks[i, j, tau] != Mark.ABSENT

    @property
    def conflicts(self):
        """Unordered contemporaneous pairs currently marked as conflicts."""
        out = set()
        for i, j in zip(*np.nonzero(self.marks[:, :, 0] == Mark.CONFLICT)):
            out.add((min(int(i), int(j)), max(int(i), int(j))))
        return out

    # -- adjacency queries -------------------------------------------

    def contemporaneous_adjacencies(self, j):
        """All nodes ``(i, 0)`` sharing a contemporaneous link with ``X^j_t``."""
        return {
            VarLag(int(i), 0)
            for i in np.nonzero(self.marks[:, j, 0] != Mark.ABSENT)[0]
        }

    def adjacencies(self, j, all_lags=False):
        """Adjacent nodes of ``X^j_t``; lagged ones included when asked.

        Lagged adjacency means a link slot ``(i, j, tau)`` with ``tau > 0``,
        i.e. only in-window nodes earlier than the reference time count.
        """
        out = self.contemporaneous_adjacencies(j)
        if all_lags:
            for i, tau in zip(*np.nonzero(self.marks[:, j, 1:] != Mark.ABSENT)):
                out.add(VarLag(int(i), int(tau) + 1))
        return out

    def n_links(self):
        """Number of link slots present, contemporaneous pairs counted once."""
        lagged = int(np.count_nonzero(self.marks[:, :, 1:] != Mark.ABSENT))
        contemp = int(np.count_nonzero(self.marks[:, :, 0] != Mark.ABSENT)) // 2
        return lagged + contemp

    # -- triple enumeration (restricted per time order) ----------------

    def enumerate_triples(self, kind):
        """Enumerate candidate triples for orientation, in canonical order.

        kind = 'collider'
            ``X^i_{t-tau} --> X^k_t o-o X^j_t`` (tau > 0) and
            ``X^i_t o-o X^k_t o-o X^j_t`` (tau = 0, endpoints sorted),
            with the endpoints non-adjacent.
        kind = 'r1'
            ``X^i_{t-tau} --> X^k_t o-o X^j_t`` with endpoints non-adjacent.
        kind = 'r2'
            ``X^i_t --> X^k_t --> X^j_t`` with ``X^i_t o-o X^j_t``.
        kind = 'r3'
            pairs ``X^i_t o-o X^k_t --> X^j_t`` and
            ``X^i_t o-o X^l_t --> X^j_t`` with ``(k, l)`` non-adjacent and
            ``X^i_t o-o X^j_t``; returned as ``(i, k, l, j)`` with k < l.

        Output is sorted ascending by the participating indices so results
        never depend on internal storage order.
        """
        marks = self.marks
        n = self.n_vars
        triples = []
        if kind == "collider":
            for k, j in itertools.permutations(range(n), 2):
                if marks[k, j, 0] != Mark.UNDIRECTED:
                    continue
                for i in range(n):
                    for tau in range(1, self.tau_max + 1):
                        if (marks[i, k, tau] == Mark.DIRECTED
                                and marks[i, j, tau] == Mark.ABSENT):
                            triples.append(
                                (VarLag(i, tau), VarLag(k, 0), VarLag(j, 0)))
                    if (i < j and i != k
                            and marks[i, k, 0] == Mark.UNDIRECTED
                            and marks[i, j, 0] == Mark.ABSENT):
                        triples.append(
                            (VarLag(i, 0), VarLag(k, 0), VarLag(j, 0)))
            triples.sort(key=lambda t: (t[0].var, t[0].lag, t[1].var, t[2].var))
            return triples
        if kind == "r1":
            for k, j in itertools.permutations(range(n), 2):
                if marks[k, j, 0] != Mark.UNDIRECTED:
                    continue
                for i in range(n):
                    for tau in range(self.tau_max + 1):
                        if tau == 0 and (i == k or i == j):
                            continue
                        if (marks[i, k, tau] == Mark.DIRECTED
                                and marks[i, j, tau] == Mark.ABSENT):
                            triples.append(
                                (VarLag(i, tau), VarLag(k, 0), VarLag(j, 0)))
            triples.sort(key=lambda t: (t[0].var, t[0].lag, t[1].var, t[2].var))
            return triples
        if kind == "r2":
            for i, j in itertools.permutations(range(n), 2):
                if marks[i, j, 0] != Mark.UNDIRECTED:
                    continue
                for k in range(n):
                    if (k not in (i, j)
                            and marks[i, k, 0] == Mark.DIRECTED
                            and marks[k, j, 0] == Mark.DIRECTED):
                        triples.append(
                            (VarLag(i, 0), VarLag(k, 0), VarLag(j, 0)))
            triples.sort(key=lambda t: (t[0].var, t[1].var, t[2].var))
            return triples
        if kind == "r3":
            quads = []
            for i, j in itertools.permutations(range(n), 2):
                if marks[i, j, 0] != Mark.UNDIRECTED:
                    continue
                heads = [
                    k for k in range(n)
                    if k not in (i, j)
                    and marks[i, k, 0] == Mark.UNDIRECTED
                    and marks[k, j, 0] == Mark.DIRECTED
                ]
                for k, l in itertools.combinations(heads, 2):
                    if marks[k, l, 0] == Mark.ABSENT:
                        quads.append((VarLag(i, 0), VarLag(k, 0),
                                      VarLag(l, 0), VarLag(j, 0)))
            quads.sort(key=lambda q: (q[0].var, q[1].var, q[2].var, q[3].var))
            return quads
        raise ValueError("unknown triple kind %r" % kind)

    # -- structural checks --------------------------------------------

    def has_contemporaneous_cycle(self):
        """True if the directed contemporaneous subgraph contains a cycle."""
        children = {
            i: [j for j in range(self.n_vars)
                if self.marks[i, j, 0] == Mark.DIRECTED]
            for i in range(self.n_vars)
        }
        color = {}

        def visit(u):
            color[u] = 1
            for v in children[u]:
                c = color.get(v, 0)
                if c == 1 or (c == 0 and visit(v)):
                    return True
            color[u] = 2
            return False

        return any(color.get(u, 0) == 0 and visit(u)
                   for u in range(self.n_vars))

    # -- copies, comparison, permutation -------------------------------

    def copy(self):
        g = TimeSeriesGraph(self.n_vars, self.tau_max, self.var_names)
        g.marks = self.marks.copy()
        g.ambiguous_triples = set(self.ambiguous_triples)
        return g

    def expanded(self, tau_max):
        """Copy with a larger maximum lag; new slots are absent."""
        if tau_max < self.tau_max:
            raise ValueError("cannot shrink tau_max")
        g = TimeSeriesGraph(self.n_vars, tau_max, self.var_names)
        g.marks[:, :, :self.tau_max + 1] = self.marks
        g.ambiguous_triples = set(self.ambiguous_triples)
        return g

    def permute_variables(self, perm):
        """Relabeled copy where old variable ``i`` becomes ``perm[i]``."""
        perm = list(perm)
        g = TimeSeriesGraph(self.n_vars, self.tau_max,
                            [self.var_names[perm.index(v)]
                             for v in range(self.n_vars)])
        for i in range(self.n_vars):
            for j in range(self.n_vars):
                g.marks[perm[i], perm[j], :] = self.marks[i, j, :]
        g.ambiguous_triples = {
            _canonical_triple(VarLag(perm[x.var], x.lag), perm[k.var],
                              VarLag(perm[y.var], y.lag))
            for (x, k, y) in self.ambiguous_triples
        }
        return g

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesGraph):
            return NotImplemented
        return (self.n_vars == other.n_vars
                and self.tau_max == other.tau_max
                and bool(np.array_equal(self.marks, other.marks))
                and self.ambiguous_triples == other.ambiguous_triples)

    def __repr__(self):
        return "TimeSeriesGraph(n_vars=%d, tau_max=%d, links=%d)" % (
            self.n_vars, self.tau_max, self.n_links())

    # -- serialization --------------------------------------------------

    def to_dict(self):
        return {
            "n_vars": self.n_vars,
            "tau_max": self.tau_max,
            "var_names": list(self.var_names),
            "graph": self.marks.tolist(),
            "ambiguous_triples": [
                [[x.var, x.lag], [k.var, k.lag], [y.var, y.lag]]
                for (x, k, y) in sorted(self.ambiguous_triples)
            ],
        }

    @classmethod
    def from_dict(cls, payload):
        g = cls(payload["n_vars"], payload["tau_max"],
                payload.get("var_names"))
        marks = np.asarray(payload["graph"], dtype="<U3")
        if marks.shape != g.marks.shape:
            raise ValueError("graph array has wrong shape")
        bad = set(marks.ravel().tolist()) - set(Mark.ALL)
        if bad:
            raise ValueError("unknown marks in payload: %r" % sorted(bad))
        g.marks = marks
        for x, k, y in payload.get("ambiguous_triples", []):
            g.ambiguous_triples.add(
                _canonical_triple(VarLag(*x), k[0], VarLag(*y)))
        return g


def new_full_graph(n_vars, tau_max, lagged_adjacencies=None, var_names=None):
    """Initial skeleton graph for the contemporaneous discovery phase.

    With ``lagged_adjacencies`` (a mapping ``j -> iterable of (var, lag)``)
    only the listed lagged links are present and all contemporaneous pairs
    start undirected. Without it every lagged and contemporaneous slot is
    connected, which is the starting point of the full PC variant.
    """
    g = TimeSeriesGraph(n_vars, tau_max, var_names)
    if lagged_adjacencies is None:
        g.marks[:, :, 1:] = Mark.DIRECTED
    else:
        for j, nodes in lagged_adjacencies.items():
            for var, lag in nodes:
                if lag < 1 or lag > tau_max:
                    raise ValueError(
                        "lagged adjacency (%d, %d) outside [1, %d]"
                        % (var, lag, tau_max))
                g.marks[var, j, lag] = Mark.DIRECTED
    for i in range(n_vars):
        for j in range(i + 1, n_vars):
            g.set_mark(i, j, 0, Mark.UNDIRECTED)
    return g


def contemporaneous_adjacencies(graph, j):
    """Contemporaneous neighbors of ``X^j_t`` (module-level convenience)."""
    return graph.contemporaneous_adjacencies(j)


def enumerate_triples(graph, kind):
    """Candidate orientation triples of ``graph`` (module-level convenience)."""
    return graph.enumerate_triples(kind)
