"""Property suites: the oracle-case guarantees run as executable checks.

Each suite draws seeded random model instances and checks one guarantee:
exact skeleton and equivalence-class recovery under the d-separation
oracle, invariance of the output under variable relabeling, the strict
effect-size advantage of conditioning on both endpoints' lagged sets,
and the calibration of the partial correlation test under the null.
Failures carry the offending model as a serializable counterexample.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .bench import job_seed
from .citests import Dataset, OracleCI, ParCorrCI
from .cpdag import reference_cpdag
from .discovery import METHODS, run_discovery
from .graphs import Mark
from .metrics import CPDAG_AWARE, evaluate
from .orientation import RULES
from .scm import (GenConfig, analytic_covariance, draw_model,
                  oracle_lagged_sets, permute_model, population_parcorr,
                  spectral_radius, true_graph)
from .skeleton import lagged_phase

SUITE_NAMES = ("oracle-consistency", "order-independence", "effect-size",
               "calibration")


class InstanceSpec(NamedTuple):
    index: int
    n_vars: int
    tau_max: int
    autocorr: float
    seed: int


@dataclass
class SuiteResult:
    suite: str
    n_instances: int
    failures: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.failures


def structure_instances(n_instances, seed, autocorrs=(0.0, 0.5, 0.95),
                        n_vars=(3, 4, 5), tau_maxes=(1, 2)):
    """Deterministic stream of random-structure instance specs."""
    specs = []
    for idx in range(n_instances):
        specs.append(InstanceSpec(
            index=idx,
            n_vars=n_vars[idx % len(n_vars)],
            tau_max=tau_maxes[(idx // len(n_vars)) % len(tau_maxes)],
            autocorr=autocorrs[idx % len(autocorrs)],
            seed=job_seed(seed, ("instance", idx), 0),
        ))
    return specs


def draw_instance(spec):
    cfg = GenConfig(n_vars=spec.n_vars, autocorr=spec.autocorr,
                    lag_range=(1, spec.tau_max))
    return draw_model(cfg, np.random.default_rng(spec.seed))


def _failure(spec, model, detail):
    return {"instance": spec.index, "detail": detail,
            "model": model.to_dict(), "tau_max": spec.tau_max}


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- suite: oracle consistency (sound skeleton, complete orientation) ----


def _check_oracle_instance(spec):
    model = draw_instance(spec)
    truth = true_graph(model, spec.tau_max)
    oracle = OracleCI(model)
    failures = []

    lagged = lagged_phase(None, spec.tau_max, 0.01, oracle)
    expected = oracle_lagged_sets(model)
    got = {j: frozenset(lagged.parents[j]) for j in range(model.n_vars)}
    if got != expected:
        failures.append(_failure(spec, model, "lagged set mismatch"))

    result = run_discovery(None, spec.tau_max, 0.01, "pcmci+",
                           "conservative", oracle)
    if not np.array_equal(result.graph.marks != Mark.ABSENT,
                          truth.marks != Mark.ABSENT):
        failures.append(_failure(spec, model, "skeleton differs from truth"))
    reference = reference_cpdag(truth)
    if not np.array_equal(result.graph.marks, reference.marks):
        failures.append(_failure(spec, model,
                                 "graph differs from reference CPDAG"))
    return failures


def oracle_consistency(n_instances=200, seed=0, jobs=1):
    """Oracle-case skeleton, equivalence class, and lagged-set equality."""
    specs = structure_instances(n_instances, seed)
    result = SuiteResult("oracle-consistency", n_instances)
    for failures in _map(_check_oracle_instance, specs, jobs):
        result.failures.extend(failures)
    return result


# -- suite: order independence under variable relabeling ------------------


def _check_order_instance(args):
    spec, n_permutations = args
    model = draw_instance(spec)
    rng = np.random.default_rng(job_seed(spec.seed, ("perm",), 0))
    perms = [rng.permutation(spec.n_vars).tolist()
             for _ in range(n_permutations)]
    oracle = OracleCI(model)
    perm_oracles = [OracleCI(permute_model(model, perm)) for perm in perms]
    failures = []
    for method in METHODS:
        for rule in RULES:
            base = run_discovery(None, spec.tau_max, 0.01, method, rule,
                                 oracle)
            for perm, pora in zip(perms, perm_oracles):
                res = run_discovery(None, spec.tau_max, 0.01, method, rule,
                                    pora)
                inverse = [perm.index(v) for v in range(spec.n_vars)]
                back = res.graph.permute_variables(inverse)
                if not np.array_equal(base.graph.marks, back.marks):
                    failures.append(_failure(
                        spec, model,
                        "order dependence: method=%s rule=%s perm=%r"
                        % (method, rule, perm)))
    return failures


def order_independence(n_instances=200, seed=0, n_permutations=5, jobs=1):
    """Identical output graphs after relabeling, all methods and rules."""
    specs = structure_instances(n_instances, seed)
    result = SuiteResult("order-independence", n_instances)
    for failures in _map(_check_order_instance,
                         [(s, n_permutations) for s in specs], jobs):
        result.failures.extend(failures)
    return result


# -- suite: strict effect-size advantage of two-sided conditioning --------


def _stationary_linear_instance(spec):
    cfg = GenConfig(n_vars=spec.n_vars, autocorr=spec.autocorr,
                    lag_range=(1, spec.tau_max))
    for k in range(100):
        model = draw_model(cfg, np.random.default_rng(spec.seed ^ k))
        if spectral_radius(model) < 1.0 - 1e-6:
            return model
    raise RuntimeError("no stationary draw for instance %d" % spec.index)


def _check_effect_size_instance(args):
    spec, margin = args
    model = _stationary_linear_instance(spec)
    lagged_sets = oracle_lagged_sets(model)
    gammas = analytic_covariance(model, max(1, model.max_lag))
    failures = []
    n_checked = 0
    for link in model.links:
        if link.lag != 0:
            continue
        i, j = link.source, link.target
        pi = set(model.parents(i))
        pj = set(model.parents(j))
        if not (pi - pj) or not (pj - pi):
            continue
        bi, bj = lagged_sets[i], lagged_sets[j]
        if bi == bj:
            # identical conditioning sets make both sides coincide exactly
            continue
        n_checked += 1
        x, y = (i, 0), (j, 0)
        both = abs(population_parcorr(gammas, x, y, bi | bj))
        one_j = abs(population_parcorr(gammas, x, y, bj))
        one_i = abs(population_parcorr(gammas, x, y, bi))
        if not both > min(one_i, one_j) + margin:
            failures.append(_failure(
                spec, model,
                "effect size %.3e not above min(%.3e, %.3e) for link %r"
                % (both, one_i, one_j, (i, j))))
    return failures, n_checked


def effect_size(n_instances=100, seed=0, jobs=1, margin=1e-12):
    """Population effect-size advantage on stationary linear models."""
    specs = structure_instances(n_instances, seed,
                                autocorrs=(0.5, 0.9, 0.95),
                                tau_maxes=(1, 2, 3))
    result = SuiteResult("effect-size", n_instances)
    checked = 0
    for failures, n_checked in _map(_check_effect_size_instance,
                                    [(s, margin) for s in specs], jobs):
        result.failures.extend(failures)
        checked += n_checked
    result.extras["n_links_checked"] = checked
    return result


# -- suite: partial correlation null calibration ---------------------------


def calibration(n_datasets=500, seed=0, T=200, jobs=1):
    """Uniformity of null p-values and the rejection rate at 5 percent."""
    pvals = np.empty(n_datasets)
    for d in range(n_datasets):
        rng = np.random.default_rng(job_seed(seed, ("calibration", d), 0))
        data = Dataset(rng.standard_normal((T, 3)))
        pvals[d] = ParCorrCI(data).test((0, 0), (1, 0), [(2, 0)], 0).p_value
    ks = stats.kstest(pvals, "uniform")
    rejection = float(np.mean(pvals <= 0.05))
    result = SuiteResult("calibration", n_datasets)
    result.extras = {
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "rejection_rate_at_5pct": rejection,
    }
    if ks.pvalue < 0.01:
        result.failures.append(
            {"detail": "KS uniformity rejected: p=%.4g" % ks.pvalue})
    if not 0.03 <= rejection <= 0.07:
        result.failures.append(
            {"detail": "rejection rate %.4f outside [0.03, 0.07]" % rejection})
    return result


SUITES = {
    "oracle-consistency": oracle_consistency,
    "order-independence": order_independence,
    "effect-size": effect_size,
    "calibration": calibration,
}


def run_suite(name, n_instances=None, seed=0, jobs=1):
    """Run one named suite with its default instance count unless given."""
    if name not in SUITES:
        raise ValueError("unknown suite %r" % name)
    fn = SUITES[name]
    kwargs = {"seed": seed, "jobs": jobs}
    if n_instances is not None:
        key = "n_datasets" if name == "calibration" else "n_instances"
        kwargs[key] = n_instances
    return fn(**kwargs)
