"""Two-phase skeleton discovery.

The lagged phase tests every lagged candidate parent against only the
currently strongest conditions of the target, shrinking a per-variable
candidate set until no cardinality is left. The contemporaneous phase
starts from those sets (or from a fully connected graph for the plain PC
variant) and iterates over contemporaneous conditioning subsets, using
the variant-specific full conditioning set for every test. Removals are
applied between cardinality sweeps (the order-independent PC-stable
policy), except that a deleted pair is never tested again within the
running sweep.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .citests import ParCorrCI
from .graphs import Mark, SepSetStore, TimeSeriesGraph, VarLag, new_full_graph

PC = "pc"
PCMCI0 = "pcmci0"
PCMCI_PLUS = "pcmci+"
VARIANTS = (PC, PCMCI0, PCMCI_PLUS)


def _sorted_pool(nodes, imin):
    """Strongest-first order: descending minimum statistic, then index."""
    return sorted(nodes, key=lambda v: (-imin.get(v, np.inf), v.var, v.lag))


@dataclass
class LaggedParentSets:
    """Per-target lagged conditioning sets with their bookkeeping.

    ``parents[j]`` is the surviving candidate list sorted strongest first;
    ``imin`` and ``pmax`` hold, for every candidate ever tested, the
    minimum absolute statistic and maximum p-value seen.
    """

    parents: dict
    imin: dict
    pmax: dict

    def shifted(self, i, tau):
        """Conditions of a lagged source node, moved back by its lag."""
        return [VarLag(m, lam + tau) for (m, lam) in self.parents[i]]


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


def lagged_phase(data, tau_max, alpha, ci=None):
    """Estimate lagged conditioning sets for every variable.

    Implements the iterative strongest-conditions scheme: at cardinality
    ``p`` every remaining candidate is tested against the first ``p``
    entries of the target's candidate list (excluding itself); candidates
    whose p-value exceeds ``alpha`` are removed after the sweep and the
    list is re-sorted by the minimum absolute statistic, descending.
    """
    _check_alpha(alpha)
    if tau_max < 1:
        raise ValueError("lagged phase requires tau_max >= 1")
    if ci is None:
        ci = ParCorrCI(data)
    n_vars = ci.n_vars

    parents = {}
    imin_all = {}
    pmax_all = {}
    for j in range(n_vars):
        target = VarLag(j, 0)
        pool = [VarLag(i, tau)
                for i in range(n_vars) for tau in range(1, tau_max + 1)]
        pool.sort(key=lambda v: (v.var, v.lag))
        imin = {}
        pmax = {}
        p = 0
        while pool:
            # clamping keeps sweeping at the top cardinality until no
            # removal happens there, so every survivor has been tested
            # against the final set (repeat sweeps hit the CI cache)
            cardinality = min(p, len(pool) - 1)
            removal = set()
            for node in pool:
                conds = [c for c in pool if c != node][:cardinality]
                out = ci.test(node, target, conds, tau_max)
                imin[node] = min(abs(out.statistic), imin.get(node, np.inf))
                pmax[node] = max(out.p_value, pmax.get(node, 0.0))
                if out.p_value > alpha:
                    removal.add(node)
            saturated = cardinality == len(pool) - 1 and not removal
            pool = _sorted_pool([v for v in pool if v not in removal], imin)
            p += 1
            if saturated:
                break
        parents[j] = pool
        imin_all[j] = imin
        pmax_all[j] = pmax
    return LaggedParentSets(parents, imin_all, pmax_all)


@dataclass
class SkeletonResult:
    """Skeleton graph with separating sets and per-slot test summaries."""

    graph: TimeSeriesGraph
    sepsets: SepSetStore
    p_max: np.ndarray
    val_at_pmax: np.ndarray
    variant: str
    lagged: Optional[LaggedParentSets] = None
    anchor_lag: int = 0
    alpha: float = 0.0


def build_conditions(variant, x, j, subset, lagged):
    """Full conditioning set of one test, per variant.

    ``subset`` is the iterated set S. The momentary-conditioning variant
    adds the target's lagged set (source excluded) and the source's
    lagged set shifted by the source lag; the intermediate variant adds
    only the target's set; plain PC conditions on S alone.
    """
    if variant == PC:
        return sorted(set(subset))
    conds = set(subset)
    conds.update(c for c in lagged.parents[j] if c != x)
    if variant == PCMCI_PLUS:
        conds.update(lagged.shifted(x.var, x.lag))
    return sorted(conds)


def contemp_phase(data, tau_max, alpha, ci=None, variant=PCMCI_PLUS,
                  lagged=None):
    """Contemporaneous-conditions skeleton phase (full phase for PC).

    Pairs are ordered for lag zero and unordered for positive lags; the
    subsets S of size p are drawn from the target's current adjacency
    pool in lexicographic order over the strongest-first sorted list. A
    link is deleted the moment a test exceeds ``alpha`` and its
    separating set is stored; adjacency pools are recomputed only between
    cardinality sweeps.
    """
    _check_alpha(alpha)
    if variant not in VARIANTS:
        raise ValueError("unknown variant %r" % variant)
    if variant == PC:
        if lagged is not None:
            raise ValueError("the PC variant takes no lagged sets")
    elif lagged is None:
        raise ValueError("variant %r requires lagged parent sets" % variant)
    if ci is None:
        ci = ParCorrCI(data)
    n_vars = ci.n_vars
    anchor = 2 * tau_max if variant == PCMCI_PLUS else tau_max
    var_names = data.var_names if data is not None else None

    if variant == PC:
        graph = new_full_graph(n_vars, tau_max, var_names=var_names)
    else:
        graph = new_full_graph(
            n_vars, tau_max,
            lagged_adjacencies={j: lagged.parents[j] for j in range(n_vars)},
            var_names=var_names)

    imin = {j: {} for j in range(n_vars)}
    p_max = np.full(graph.marks.shape, np.nan)
    val_at_pmax = np.full(graph.marks.shape, np.nan)
    sepsets = SepSetStore()

    def pool_of(j):
        nodes = graph.adjacencies(j, all_lags=(variant == PC))
        return _sorted_pool(nodes, imin[j])

    def record(x, j, out):
        slots = [(x.var, j, x.lag)]
        if x.lag == 0:
            slots.append((j, x.var, 0))
        for (a, b, tau) in slots:
            if not out.p_value <= p_max[a, b, tau]:   # NaN-safe maximum
                p_max[a, b, tau] = out.p_value
                val_at_pmax[a, b, tau] = out.statistic

    pools = {j: pool_of(j) for j in range(n_vars)}
    p = 0
    while True:
        pairs = []
        for j in range(n_vars):
            sources = _sorted_pool(graph.adjacencies(j, all_lags=True),
                                   imin[j])
            for x in sources:
                eligible = [c for c in pools[j] if c != x]
                if len(eligible) >= p:
                    pairs.append((x, j))
        if not pairs:
            break
        for x, j in pairs:
            if not graph.has_link(x.var, j, x.lag):
                continue
            target = VarLag(j, 0)
            candidates = [c for c in pools[j] if c != x]
            for subset in itertools.combinations(candidates, p):
                conds = build_conditions(variant, x, j, subset, lagged)
                out = ci.test(x, target, conds, anchor)
                imin[j][x] = min(abs(out.statistic),
                                 imin[j].get(x, np.inf))
                record(x, j, out)
                if out.p_value > alpha:
                    graph.set_mark(x.var, j, x.lag, Mark.ABSENT)
                    sepsets.store(x, j, subset)
                    break
        p += 1
        pools = {j: pool_of(j) for j in range(n_vars)}

    return SkeletonResult(graph=graph, sepsets=sepsets, p_max=p_max,
                          val_at_pmax=val_at_pmax, variant=variant,
                          lagged=lagged, anchor_lag=anchor, alpha=alpha)
