"""End-to-end discovery runs chaining the phases of one method."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .citests import ParCorrCI
from .graphs import SepSetStore, TimeSeriesGraph
from .orientation import RULES, collider_phase, rule_phase
from .skeleton import (PC, PCMCI0, PCMCI_PLUS, VARIANTS, LaggedParentSets,
                       contemp_phase, lagged_phase)

METHODS = VARIANTS


@dataclass
class DiscoveryResult:
    """Final graph of a run plus the skeleton-phase diagnostics."""

    graph: TimeSeriesGraph
    sepsets: SepSetStore
    p_max: np.ndarray
    val_at_pmax: np.ndarray
    lagged: Optional[LaggedParentSets]
    method: str
    rule: str
    alpha: float
    tau_max: int

    def to_dict(self):
        def table(arr):
            return [[[None if np.isnan(v) else float(v) for v in row]
                     for row in mat] for mat in arr]

        payload = self.graph.to_dict()
        payload["p_max"] = table(self.p_max)
        payload["val_at_pmax"] = table(self.val_at_pmax)
        payload["method"] = self.method
        payload["rule"] = self.rule
        payload["alpha"] = self.alpha
        return payload


def run_discovery(data=None, tau_max=1, alpha=0.01, method=PCMCI_PLUS,
                  rule="majority", ci=None):
    """Run skeleton, collider, and rule phases of the chosen method.

    ``ci`` may be any CI-test handle (for instance an exact oracle); when
    omitted a partial correlation test bound to ``data`` is used.
    """
    if method not in METHODS:
        raise ValueError("unknown method %r" % method)
    if rule not in RULES:
        raise ValueError("unknown collider rule %r" % rule)
    if ci is None:
        if data is None:
            raise ValueError("need data or a CI test handle")
        ci = ParCorrCI(data)

    lagged = None
    if method != PC:
        lagged = lagged_phase(data, tau_max, alpha, ci)
    skel = contemp_phase(data, tau_max, alpha, ci, variant=method,
                         lagged=lagged)
    graph, ambiguous, _ = collider_phase(skel, rule, ci, alpha)
    final = rule_phase(graph, ambiguous)
    return DiscoveryResult(graph=final, sepsets=skel.sepsets,
                           p_max=skel.p_max, val_at_pmax=skel.val_at_pmax,
                           lagged=lagged, method=method, rule=rule,
                           alpha=alpha, tau_max=tau_max)
