"""Collider orientation and rule-based orientation of contemporaneous links.

Only contemporaneous links ever change marks here; lagged links are
already oriented by time order. Collider decisions follow one of three
policies: the stored separating set ('none'), or a re-test of all
conditioning subsets from the endpoint neighborhoods with the variant's
full conditioning sets, requiring unanimity ('conservative') or a
majority ('majority') among separating subsets. Inconsistent triples are
marked ambiguous and excluded from the rules; links pushed into opposite
directions become terminal conflict marks.
"""

from __future__ import annotations

import itertools

from .citests import ParCorrCI
from .graphs import Mark, VarLag, _canonical_triple
from .skeleton import PC, PCMCI0, PCMCI_PLUS, build_conditions

RULES = ("none", "conservative", "majority")


def _orient(graph, src, dst):
    """Push orientation src -> dst on a contemporaneous link.

    Returns True when the mark changed. An opposite existing orientation
    becomes a conflict mark, which is terminal.
    """
    cur = graph.mark(src, dst, 0)
    if cur == Mark.UNDIRECTED:
        graph.set_mark(src, dst, 0, Mark.DIRECTED)
        return True
    if cur == Mark.REVERSED:
        graph.set_mark(src, dst, 0, Mark.CONFLICT)
        return True
    if cur == Mark.ABSENT:
        raise ValueError("cannot orient a missing link (%d, %d)" % (src, dst))
    return False


def _neighborhood(skel, owner, exclude):
    if skel.variant == PC:
        pool = skel.graph.adjacencies(owner, all_lags=True)
    else:
        pool = skel.graph.contemporaneous_adjacencies(owner)
    pool.discard(exclude)
    return sorted(pool)


def separating_subsets(skel, x, y, ci, alpha):
    """All neighborhood subsets that separate a non-adjacent pair.

    Subsets are drawn from the contemporaneous neighborhood of the later
    endpoint and, for contemporaneous pairs, of both endpoints (full
    neighborhoods for the PC variant). Every subset is tested with the
    variant's full conditioning set; distinct subsets passing from either
    side count once.
    """
    pools = [(y.var, x)]
    if x.lag == 0:
        pools.append((x.var, y))
    seps = set()
    seen = set()
    for owner, other in pools:
        pool = _neighborhood(skel, owner, other)
        for size in range(len(pool) + 1):
            for subset in itertools.combinations(pool, size):
                key = frozenset(subset)
                if key in seps or (skel.variant != PCMCI0 and key in seen):
                    continue
                seen.add(key)
                if skel.variant == PCMCI0:
                    conds = build_conditions(PCMCI0, other, owner, subset,
                                             skel.lagged)
                else:
                    conds = build_conditions(skel.variant, x, y.var, subset,
                                             skel.lagged)
                out = ci.test(x, y, conds, skel.anchor_lag)
                if out.p_value > alpha:
                    seps.add(key)
    return seps


def collider_phase(skel, rule="none", ci=None, alpha=None):
    """Orient unshielded triples as colliders per the chosen rule.

    Returns the oriented graph, the set of ambiguous triples (canonical
    form), and the set of conflicting contemporaneous pairs.
    """
    if rule not in RULES:
        raise ValueError("unknown collider rule %r" % rule)
    graph = skel.graph.copy()
    if alpha is None:
        alpha = skel.alpha
    triples = graph.enumerate_triples("collider")

    colliders = []
    ambiguous = set()
    if rule == "none":
        for (x, k, y) in triples:
            if VarLag(k.var, 0) not in skel.sepsets.get(x, y.var):
                colliders.append((x, k, y))
    else:
        if ci is None:
            raise ValueError("rule %r needs a CI test handle" % rule)
        for (x, k, y) in triples:
            seps = separating_subsets(skel, x, y, ci, alpha)
            if not seps:
                ambiguous.add(_canonical_triple(x, k.var, y))
                continue
            n_k = sum(VarLag(k.var, 0) in s for s in seps) / len(seps)
            if rule == "conservative":
                if n_k == 0.0:
                    colliders.append((x, k, y))
                elif n_k != 1.0:
                    ambiguous.add(_canonical_triple(x, k.var, y))
            else:
                if n_k < 0.5:
                    colliders.append((x, k, y))
                elif n_k == 0.5:
                    ambiguous.add(_canonical_triple(x, k.var, y))

    for (x, k, y) in colliders:
        _orient(graph, y.var, k.var)
        if x.lag == 0:
            _orient(graph, x.var, k.var)

    graph.ambiguous_triples = ambiguous
    return graph, ambiguous, graph.conflicts


def rule_phase(graph, ambiguous=None):
    """Close the graph under the three orientation rules.

    Within each sweep the rules run in a fixed order, each applied to all
    matches found on the graph entering the rule; sweeps repeat until a
    full pass changes nothing. Triples flagged ambiguous never match, and
    conflict marks are skipped by the patterns, so the pass count is
    bounded by the number of undirected marks.
    """
    g = graph.copy()
    if ambiguous is None:
        ambiguous = g.ambiguous_triples

    def skip(x, k, y):
        return _canonical_triple(x, k.var, y) in ambiguous

    while True:
        changed = False
        for (x, k, y) in g.enumerate_triples("r1"):
            if not skip(x, k, y):
                changed |= _orient(g, k.var, y.var)
        for (x, k, y) in g.enumerate_triples("r2"):
            if not skip(x, k, y):
                changed |= _orient(g, x.var, y.var)
        for (i, k, l, y) in g.enumerate_triples("r3"):
            if not skip(i, k, y) and not skip(i, l, y):
                changed |= _orient(g, i.var, y.var)
        if not changed:
            break
    return g
