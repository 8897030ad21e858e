"""Random structural causal models over time series, and their truths.

Models follow an additive form: each variable is a linear autoregression
on its own previous value plus coupled terms ``c * f(X^i_{t-tau})`` from
its parents plus independent noise. The contemporaneous part of every
model is a DAG. Besides drawing and simulating models, this module
computes exact ground-truth objects used as oracles elsewhere: the true
time series graph, the lagged conditioning sets implied by the model, and
the stationary autocovariance sequence of linear models.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .citests import Dataset
from .graphs import Mark, TimeSeriesGraph, VarLag

_WEIBULL_MEAN = math.sqrt(math.pi)          # shape 2, scale 2
_WEIBULL_STD = math.sqrt(4.0 - math.pi)

LINEAR = "linear"
F2 = "f2"


def f2(x):
    """Saturating nonlinear coupling ``(1 + 5 x exp(-x^2 / 20)) x``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        out = (1.0 + 5.0 * x * np.exp(-(x * x) / 20.0)) * x
    return out if out.ndim else float(out)


class Link(NamedTuple):
    """Coupling ``source`` at time lag ``lag`` into ``target`` (lag 0 = contemporaneous)."""

    target: int
    source: int
    lag: int
    coeff: float
    func: str = LINEAR


@dataclass
class ScmModel:
    """Structural model: per-variable parents, autocoefficients, noise."""

    n_vars: int
    links: list
    autocoeffs: list
    noise_dists: list = None
    noise_stds: list = None

    def __post_init__(self):
        self.links = [Link(*l) for l in self.links]
        self.autocoeffs = [float(a) for a in self.autocoeffs]
        if self.noise_dists is None:
            self.noise_dists = ["gaussian"] * self.n_vars
        if self.noise_stds is None:
            self.noise_stds = [1.0] * self.n_vars
        if not (len(self.autocoeffs) == len(self.noise_dists)
                == len(self.noise_stds) == self.n_vars):
            raise ValueError("per-variable lists must have length n_vars")
        seen = set()
        for l in self.links:
            if not (0 <= l.target < self.n_vars and 0 <= l.source < self.n_vars):
                raise ValueError("link variable index out of range")
            if l.lag < 0:
                raise ValueError("link lag must be >= 0")
            if l.source == l.target and l.lag <= 1:
                raise ValueError(
                    "self links below lag 2 belong in autocoeffs")
            if not 0.1 <= abs(l.coeff) <= 0.5:
                raise ValueError("coupling magnitude must lie in [0.1, 0.5]")
            if l.func not in (LINEAR, F2):
                raise ValueError("unknown link function %r" % l.func)
            key = (l.target, l.source, l.lag)
            if key in seen:
                raise ValueError("duplicate link %r" % (key,))
            seen.add(key)
        for a in self.autocoeffs:
            if not 0.0 <= a < 1.0:
                raise ValueError("autocoefficients must lie in [0, 1)")
        for d in self.noise_dists:
            if d not in ("gaussian", "weibull"):
                raise ValueError("unknown noise distribution %r" % d)
        # raises on a contemporaneous cycle
        self.contemporaneous_order()

    # -- structure queries ---------------------------------------------

    @property
    def max_lag(self):
        lags = [l.lag for l in self.links]
        if any(a != 0.0 for a in self.autocoeffs):
            lags.append(1)
        return max(lags, default=0)

    def is_linear(self):
        return all(l.func == LINEAR for l in self.links)

    def parents(self, j):
        """All parent nodes of ``X^j_t`` as (var, lag) with lag >= 0."""
        out = [VarLag(l.source, l.lag) for l in self.links if l.target == j]
        if self.autocoeffs[j] != 0.0:
            out.append(VarLag(j, 1))
        return sorted(set(out))

    def lagged_parents(self, j):
        return [p for p in self.parents(j) if p.lag >= 1]

    def contemporaneous_parents(self, j):
        return [p.var for p in self.parents(j) if p.lag == 0]

    def contemporaneous_order(self):
        """Topological order of the contemporaneous DAG (raises on a cycle)."""
        indeg = [0] * self.n_vars
        children = {v: [] for v in range(self.n_vars)}
        for l in self.links:
            if l.lag == 0:
                indeg[l.target] += 1
                children[l.source].append(l.target)
        order = [v for v in range(self.n_vars) if indeg[v] == 0]
        pos = 0
        while pos < len(order):
            for w in children[order[pos]]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    order.append(w)
            pos += 1
        if len(order) != self.n_vars:
            raise ValueError("contemporaneous links must form a DAG")
        return order

    def contemporaneous_ancestors(self, j):
        """Variables with a directed contemporaneous path into ``j``."""
        parents = {v: self.contemporaneous_parents(v)
                   for v in range(self.n_vars)}
        anc = set()
        stack = list(parents[j])
        while stack:
            v = stack.pop()
            if v not in anc:
                anc.add(v)
                stack.extend(parents[v])
        return anc

    # -- serialization ---------------------------------------------------

    def to_dict(self):
        return {
            "n_vars": self.n_vars,
            "links": [[l.target, l.source, l.lag, l.coeff, l.func]
                      for l in self.links],
            "autocoeffs": list(self.autocoeffs),
            "noise_dists": list(self.noise_dists),
            "noise_stds": list(self.noise_stds),
        }

    @classmethod
    def from_dict(cls, payload):
        return cls(
            n_vars=payload["n_vars"],
            links=[Link(*l) for l in payload["links"]],
            autocoeffs=payload["autocoeffs"],
            noise_dists=payload.get("noise_dists"),
            noise_stds=payload.get("noise_stds"),
        )

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class GenConfig:
    """Knobs of the random model generator."""

    n_vars: int
    autocorr: float = 0.95
    n_cross_links: Optional[int] = None     # default floor(1.5 N), 1 for N=2
    frac_contemporaneous: float = 0.3
    lag_range: tuple = (1, 5)
    coeff_range: tuple = (0.1, 0.5)
    weibull_frac: float = 0.0
    nonlinear_frac: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.frac_contemporaneous <= 1.0:
            raise ValueError("frac_contemporaneous must lie in [0, 1]")
        if not 0.0 <= self.weibull_frac <= 1.0:
            raise ValueError("weibull_frac must lie in [0, 1]")
        if not 0.0 <= self.nonlinear_frac <= 1.0:
            raise ValueError("nonlinear_frac must lie in [0, 1]")
        if self.lag_range[0] < 1 or self.lag_range[1] < self.lag_range[0]:
            raise ValueError("lag_range must be a non-empty range of lags >= 1")

    @property
    def cross_links(self):
        if self.n_cross_links is not None:
            return self.n_cross_links
        return 1 if self.n_vars == 2 else int(math.floor(1.5 * self.n_vars))


def draw_model(cfg, rng=None):
    """Draw a random model: autocoefficients from
    ``U[max(0, a - 0.3), a]``, noise scales from ``U[0.5, 2]``, and
    ``cross_links`` distinct couplings with signs split evenly and
    magnitudes from the coefficient range. A fixed share of the couplings
    is contemporaneous with directions taken from a random topological
    order (the DAG guarantee); remaining lags are uniform over the lag
    range. Duplicate draws are resampled.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    N = cfg.n_vars
    a = cfg.autocorr
    autocoeffs = rng.uniform(max(0.0, a - 0.3), a, size=N)
    stds = rng.uniform(0.5, 2.0, size=N)
    n_weibull = int(round(cfg.weibull_frac * N))
    weibull_vars = set(rng.permutation(N)[:n_weibull].tolist())
    dists = ["weibull" if v in weibull_vars else "gaussian" for v in range(N)]
    rank = {v: r for r, v in enumerate(rng.permutation(N).tolist())}

    L = cfg.cross_links
    n_contemp = int(round(cfg.frac_contemporaneous * L))
    lag_lo, lag_hi = cfg.lag_range
    n_lags = lag_hi - lag_lo + 1
    if n_contemp > N * (N - 1) // 2 or (L - n_contemp) > N * (N - 1) * n_lags:
        raise ValueError("link count infeasible for n_vars and lag range")

    chosen = set()
    structure = []
    budget = 10000
    while len(structure) < L:
        budget -= 1
        if budget < 0:
            raise ValueError("could not draw distinct links")
        i, j = (int(v) for v in rng.integers(0, N, size=2))
        if i == j:
            continue
        if len(structure) < n_contemp:
            tau = 0
            source, target = (i, j) if rank[i] < rank[j] else (j, i)
        else:
            tau = int(rng.integers(lag_lo, lag_hi + 1))
            source, target = i, j
        key = (target, source, tau)
        if key in chosen:
            continue
        chosen.add(key)
        structure.append(key)

    n_f2 = int(round(cfg.nonlinear_frac * L))
    f2_idx = set(rng.permutation(L)[:n_f2].tolist())
    lo, hi = cfg.coeff_range
    links = []
    for idx, (target, source, tau) in enumerate(structure):
        sign = -1.0 if rng.random() < 0.5 else 1.0
        coeff = sign * rng.uniform(lo, hi)
        links.append(Link(target, source, tau, float(coeff),
                          F2 if idx in f2_idx else LINEAR))

    return ScmModel(n_vars=N, links=links,
                    autocoeffs=autocoeffs.tolist(),
                    noise_dists=dists, noise_stds=stds.tolist())


def permute_model(model, perm):
    """Relabeled copy of a model where old variable ``v`` becomes ``perm[v]``."""
    n = model.n_vars
    links = [Link(perm[l.target], perm[l.source], l.lag, l.coeff, l.func)
             for l in model.links]
    auto = [0.0] * n
    dists = [""] * n
    stds = [0.0] * n
    for v in range(n):
        auto[perm[v]] = model.autocoeffs[v]
        dists[perm[v]] = model.noise_dists[v]
        stds[perm[v]] = model.noise_stds[v]
    return ScmModel(n, links, auto, dists, stds)


def _draw_noise(model, total, rng):
    N = model.n_vars
    noise = np.empty((total, N))
    for j in range(N):
        std = model.noise_stds[j]
        if model.noise_dists[j] == "gaussian":
            noise[:, j] = rng.standard_normal(total) * std
        else:
            w = 2.0 * rng.weibull(2.0, size=total)
            noise[:, j] = (w - _WEIBULL_MEAN) / _WEIBULL_STD * std
    return noise


def simulate(model, T, burn_in=500, rng=None, blowup=1e4):
    """Iterate the model for ``burn_in + T`` steps and return a Dataset.

    Noise is centered and variance-normalized to the drawn scale for both
    families (Weibull uses shape 2, scale 2 before normalization). Returns
    None when any value is non-finite or exceeds the blow-up screen, which
    is the stationarity rejection signal for the harness.
    """
    if T < 1:
        raise ValueError("need T >= 1")
    if burn_in < model.max_lag:
        raise ValueError("burn_in must cover the maximum lag")
    if rng is None:
        rng = np.random.default_rng()
    N = model.n_vars
    total = burn_in + T
    noise = _draw_noise(model, total, rng)
    order = model.contemporaneous_order()
    terms = {j: [(l.source, l.lag, l.coeff, l.func)
                 for l in model.links if l.target == j]
             for j in range(N)}
    auto = model.autocoeffs
    x = np.zeros((total, N))
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for t in range(total):
            row = x[t]
            prev = x[t - 1] if t >= 1 else None
            for j in order:
                val = noise[t, j]
                if prev is not None and auto[j] != 0.0:
                    val += auto[j] * prev[j]
                for (i, tau, c, func) in terms[j]:
                    if tau == 0:
                        xv = row[i]
                    elif t - tau >= 0:
                        xv = x[t - tau, i]
                    else:
                        continue
                    if func == F2:
                        xv = (1.0 + 5.0 * xv * math.exp(-min(xv * xv, 700.0) / 20.0)) * xv
                    val += c * xv
                row[j] = val
            if not (-blowup <= row[order[-1]] <= blowup):
                # cheap per-step probe; the full screen runs afterwards
                if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > blowup:
                    return None
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > blowup:
        return None
    return Dataset(x[burn_in:], ["X%d" % (v + 1) for v in range(N)])


def true_graph(model, tau_max):
    """Ground-truth time series graph of the model, all links directed."""
    if tau_max < model.max_lag:
        raise ValueError("tau_max smaller than the maximum model lag")
    g = TimeSeriesGraph(model.n_vars, tau_max)
    for j, a in enumerate(model.autocoeffs):
        if a != 0.0:
            g.set_mark(j, j, 1, Mark.DIRECTED)
    for l in model.links:
        g.set_mark(l.source, l.target, l.lag, Mark.DIRECTED)
    return g


def oracle_lagged_sets(model):
    """Lagged conditioning sets the lagged discovery phase converges to.

    For each variable this is the union of the lagged parents of the
    variable itself and of all its contemporaneous ancestors.
    """
    out = {}
    for j in range(model.n_vars):
        nodes = set(model.lagged_parents(j))
        for c in model.contemporaneous_ancestors(j):
            nodes.update(model.lagged_parents(c))
        out[j] = frozenset(nodes)
    return out


# -- exact second-order statistics of linear models ---------------------


def _reduced_form(model):
    N = model.n_vars
    p = max(1, model.max_lag)
    A0 = np.zeros((N, N))
    A = np.zeros((p + 1, N, N))
    for j, a in enumerate(model.autocoeffs):
        A[1, j, j] += a
    for l in model.links:
        if l.lag == 0:
            A0[l.target, l.source] += l.coeff
        else:
            A[l.lag, l.target, l.source] += l.coeff
    M = np.linalg.inv(np.eye(N) - A0)
    B = np.array([M @ A[ell] for ell in range(p + 1)])
    sigma = M @ np.diag(np.square(model.noise_stds)) @ M.T
    return B, sigma, p


def companion_matrix(model):
    """Companion form of the reduced linear dynamics."""
    if not model.is_linear():
        raise ValueError("companion form requires a linear model")
    B, _, p = _reduced_form(model)
    N = model.n_vars
    F = np.zeros((N * p, N * p))
    for ell in range(1, p + 1):
        F[:N, (ell - 1) * N:ell * N] = B[ell]
    if p > 1:
        F[N:, :N * (p - 1)] = np.eye(N * (p - 1))
    return F


def spectral_radius(model):
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(model)))))


def analytic_covariance(model, max_lag):
    """Stationary autocovariances ``gamma[l][a, b] = Cov(X^a_t, X^b_{t-l})``.

    Solves the discrete Lyapunov equation of the companion form and
    extends by the autoregressive recursion. Works for any linear model
    (noise enters only through its variance); raises for non-stationary
    or nonlinear models.
    """
    if not model.is_linear():
        raise ValueError("analytic covariance requires a linear model")
    B, sigma, p = _reduced_form(model)
    N = model.n_vars
    F = companion_matrix(model)
    if np.max(np.abs(np.linalg.eigvals(F))) >= 1.0 - 1e-10:
        raise ValueError("model is not stationary")
    Q = np.zeros_like(F)
    Q[:N, :N] = sigma
    big = solve_discrete_lyapunov(F, Q)
    gammas = [big[:N, ell * N:(ell + 1) * N].copy() for ell in range(p)]
    gammas[0] = 0.5 * (gammas[0] + gammas[0].T)
    for ell in range(p, max_lag + 1):
        gam = np.zeros((N, N))
        for k in range(1, p + 1):
            gam += B[k] @ gammas[ell - k]
        gammas.append(gam)
    return np.array(gammas[:max_lag + 1])


def node_covariance(gammas, x, y):
    """Covariance of two variable-lag nodes from an autocovariance table."""
    (u, l1), (v, l2) = x, y
    if l2 >= l1:
        if l2 - l1 >= len(gammas):
            raise ValueError("autocovariance table too short")
        return gammas[l2 - l1][u, v]
    return node_covariance(gammas, y, x)


def population_parcorr(gammas, x, y, z=()):
    """Population partial correlation of two nodes given a set of nodes."""
    nodes = [tuple(x), tuple(y)] + sorted(tuple(c) for c in z)
    m = len(nodes)
    cov = np.empty((m, m))
    for r in range(m):
        for c in range(r, m):
            cov[r, c] = cov[c, r] = node_covariance(gammas, nodes[r], nodes[c])
    omega = np.linalg.inv(cov)
    return float(-omega[0, 1] / math.sqrt(omega[0, 0] * omega[1, 1]))
