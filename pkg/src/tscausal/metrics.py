"""Scoring of estimated graphs against ground truth.

Adjacency rates are reported per link category (lagged cross, contemporaneous,
autodependency), any non-absent estimated mark counting as a detected
adjacency. Contemporaneous orientation is scored either strictly (only a
directed mark matching the true direction is correct) or CPDAG-aware,
where an undirected mark also counts as correct when the reference
equivalence class of the truth leaves that link unoriented. Rates with an
empty denominator are reported as absent rather than zero.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .cpdag import reference_cpdag
from .graphs import Mark

STRICT = "strict"
CPDAG_AWARE = "cpdag"
SCORING_MODES = (STRICT, CPDAG_AWARE)


@dataclass
class MetricsReport:
    """Per-run evaluation metrics; absent rates are None."""

    tpr_lagged_cross: Optional[float] = None
    fpr_lagged_cross: Optional[float] = None
    tpr_contemp: Optional[float] = None
    fpr_contemp: Optional[float] = None
    tpr_auto: Optional[float] = None
    fpr_auto: Optional[float] = None
    orient_recall_contemp: Optional[float] = None
    orient_precision_contemp: Optional[float] = None
    conflict_fraction: Optional[float] = None
    runtime_seconds: float = 0.0

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @staticmethod
    def field_names():
        return [f.name for f in fields(MetricsReport)]


def _rate(num, den):
    return None if den == 0 else num / den


def evaluate(estimated, truth, mode=CPDAG_AWARE, reference=None):
    """Score an estimated graph against the true graph.

    ``reference`` may pass a precomputed reference CPDAG of the truth;
    otherwise it is derived when CPDAG-aware scoring asks for it.
    """
    if mode not in SCORING_MODES:
        raise ValueError("unknown scoring mode %r" % mode)
    if (estimated.n_vars != truth.n_vars
            or estimated.tau_max != truth.tau_max):
        raise ValueError("estimated and truth graphs differ in shape")
    n = truth.n_vars
    est = estimated.marks
    tru = truth.marks

    est_adj = est != Mark.ABSENT
    tru_adj = tru != Mark.ABSENT

    # lagged categories over ordered (i, j, tau >= 1) slots
    off = ~np.eye(n, dtype=bool)
    lag_cross_true = tru_adj[:, :, 1:] & off[:, :, None]
    lag_cross_est = est_adj[:, :, 1:] & off[:, :, None]
    auto_true = tru_adj[:, :, 1:] & ~off[:, :, None]
    auto_est = est_adj[:, :, 1:] & ~off[:, :, None]

    tau_slots = tru.shape[2] - 1
    report = MetricsReport(
        tpr_lagged_cross=_rate(int((lag_cross_est & lag_cross_true).sum()),
                               int(lag_cross_true.sum())),
        fpr_lagged_cross=_rate(int((lag_cross_est & ~lag_cross_true).sum()),
                               n * (n - 1) * tau_slots
                               - int(lag_cross_true.sum())),
        tpr_auto=_rate(int((auto_est & auto_true).sum()),
                       int(auto_true.sum())),
        fpr_auto=_rate(int((auto_est & ~auto_true).sum()),
                       n * tau_slots - int(auto_true.sum())),
    )

    # contemporaneous category over unordered pairs
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    true_pairs = {p for p in pairs if tru_adj[p[0], p[1], 0]}
    est_pairs = {p for p in pairs if est_adj[p[0], p[1], 0]}
    report.tpr_contemp = _rate(len(true_pairs & est_pairs), len(true_pairs))
    report.fpr_contemp = _rate(len(est_pairs - true_pairs),
                               len(pairs) - len(true_pairs))

    ref = reference
    if mode == CPDAG_AWARE and ref is None:
        ref = reference_cpdag(truth)

    n_correct = 0
    for (i, j) in sorted(true_pairs):
        src, dst = (i, j) if tru[i, j, 0] == Mark.DIRECTED else (j, i)
        mark = est[src, dst, 0]
        if mark == Mark.DIRECTED:
            n_correct += 1
        elif (mark == Mark.UNDIRECTED and mode == CPDAG_AWARE
              and ref.marks[src, dst, 0] == Mark.UNDIRECTED):
            n_correct += 1
    n_conflicts = sum(1 for (i, j) in est_pairs
                      if est[i, j, 0] == Mark.CONFLICT)
    report.orient_recall_contemp = _rate(n_correct, len(true_pairs))
    report.orient_precision_contemp = _rate(n_correct, len(est_pairs))
    report.conflict_fraction = _rate(n_conflicts, len(est_pairs))
    return report


def aggregate(reports):
    """Mean and standard error per metric over a list of reports.

    Absent values are skipped with their own count bookkeeping; the
    standard error is the population standard deviation over the present
    values divided by the square root of their count.
    """
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    summary = {}
    for name in MetricsReport.field_names():
        values = [getattr(r, name) for r in reports
                  if getattr(r, name) is not None]
        if values:
            arr = np.asarray(values, dtype=float)
            summary[name] = {
                "mean": float(arr.mean()),
                "stderr": float(arr.std(ddof=0) / np.sqrt(len(arr))),
                "count": len(arr),
            }
        else:
            summary[name] = {"mean": None, "stderr": None, "count": 0}
    return summary
