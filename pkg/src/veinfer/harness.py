"""Experiment orchestration: replication suites and real-data runs.

A suite draws replicated cohorts from a prior, computes the closed-form
TNCC and crude estimates, runs the posterior chain on each cohort's
observations, and aggregates accuracy statistics.  Replications run in a
process pool (size from ``VE_INFER_THREADS``, default all cores); each
replication owns the generator seeded ``base_seed + replication_index``,
so results are identical whatever the pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .chain import ChainConfig, run_chain, summarize_trace
from .estimators import (
    crude_estimate,
    e1_e2_estimates,
    effectiveness_from_t0,
    log_odds_ratio,
    plus_one_counts,
    tncc_estimate,
)
from .generate import (
    ObservationRegime,
    draw_cohort,
    draw_params,
    load_real_data,
    make_rng,
    observe,
)
from .model import PriorSpec, named_prior

__all__ = [
    "RunRecord",
    "SuiteSummary",
    "run_suite",
    "run_real_data",
    "suite_summary",
    "default_sample_count",
    "oracle_check",
    "convergence_protocol",
    "REAL_DATA_SAMPLES",
]

REAL_DATA_SAMPLES = 200_000
MAX_PLOT_SAMPLES = 200


@dataclass(frozen=True)
class RunRecord:
    """One replication's estimates and posterior summaries.

    ``t0_true``, ``pLv_true`` and ``e_true`` are ``None`` for real-data
    runs, where the truth is unknown.  ``t0_samples`` is a thinned slice of
    the posterior kept for plotting only; it is not part of the CSV schema.
    """

    run_index: int
    seed: int
    t0_true: float | None
    pLv_true: float | None
    t1: float
    t2: float
    c2_5: float
    c97_5: float
    e_true: float | None
    e1: float
    e2: float
    e_c2_5: float
    e_c97_5: float
    n_hosp: int
    t0_samples: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SuiteSummary:
    """Accuracy statistics over a suite's replications.

    Error statistics are over the signed errors ``t - t0_true``;
    ``n_t1_better`` counts runs where the TNCC estimate was strictly closer
    to the truth than the crude one.
    """

    n_runs: int
    n_t1_better: int
    sd_t1_error: float
    sd_t2_error: float
    mean_ci_width: float
    mean_n_hosp: float


def default_sample_count(n_patients: int) -> int:
    """Chain length matched to cohort size (1000 up to N=1000, N beyond)."""
    return max(1000, int(n_patients))


def worker_count() -> int:
    env = os.environ.get("VE_INFER_THREADS", "").strip()
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("VE_INFER_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


def _thin_for_plot(t0_samples: np.ndarray) -> tuple[float, ...]:
    if len(t0_samples) <= MAX_PLOT_SAMPLES:
        return tuple(float(x) for x in t0_samples)
    idx = np.linspace(0, len(t0_samples) - 1, MAX_PLOT_SAMPLES).astype(np.int64)
    return tuple(float(x) for x in t0_samples[idx])


def _run_one(args) -> RunRecord:
    prior, n_patients, n_samples, seed = args
    rng = make_rng(seed)
    params = draw_params(prior, rng)
    cohort = draw_cohort(params, n_patients, rng)
    obs = observe(cohort, ObservationRegime.spontaneous(), rng)
    t0_true = log_odds_ratio(params.j[0], params.j[1])
    e_true = effectiveness_from_t0(t0_true, params.j[0])
    t1 = tncc_estimate(obs)
    t2 = crude_estimate(obs)
    e1, e2 = e1_e2_estimates(obs)
    cfg = ChainConfig(n_samples=n_samples, burn_in_fraction=0.10, start_mode="from_prior")
    trace = run_chain(prior, obs, cfg, rng)
    summary = summarize_trace(trace, cfg.burn_in_fraction)
    start = int(np.floor(trace.n_samples * cfg.burn_in_fraction))
    return RunRecord(
        run_index=-1,
        seed=seed,
        t0_true=t0_true,
        pLv_true=params.j[0],
        t1=t1,
        t2=t2,
        c2_5=summary["c2_5"],
        c97_5=summary["c97_5"],
        e_true=e_true,
        e1=e1,
        e2=e2,
        e_c2_5=summary["e_c2_5"],
        e_c97_5=summary["e_c97_5"],
        n_hosp=cohort.n_hospitalised,
        t0_samples=_thin_for_plot(trace.t0[start:]),
    )


def suite_summary(records) -> SuiteSummary:
    """Recompute the suite statistics from its run records."""
    t1_err = np.array([r.t1 - r.t0_true for r in records])
    t2_err = np.array([r.t2 - r.t0_true for r in records])
    widths = np.array([r.c97_5 - r.c2_5 for r in records])
    return SuiteSummary(
        n_runs=len(records),
        n_t1_better=int(np.sum(np.abs(t1_err) < np.abs(t2_err))),
        sd_t1_error=float(t1_err.std()),
        sd_t2_error=float(t2_err.std()),
        mean_ci_width=float(widths.mean()),
        mean_n_hosp=float(np.mean([r.n_hosp for r in records])),
    )


def run_suite(
    prior: str | PriorSpec,
    n_patients: int,
    reps: int = 20,
    n_samples: int | None = None,
    base_seed: int = 0,
    workers: int | None = None,
) -> tuple[list[RunRecord], SuiteSummary]:
    """Replicated simulation experiment under one prior.

    Returns the records sorted by true t0 (ties by seed) with
    ``run_index`` assigned after sorting, plus the aggregated summary.
    """
    if n_patients < 10:
        raise ValueError("suite cohort size must be at least 10")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    prior_spec = named_prior(prior) if isinstance(prior, str) else prior
    if n_samples is None:
        n_samples = default_sample_count(n_patients)
    jobs = [(prior_spec, n_patients, n_samples, base_seed + i) for i in range(reps)]
    n_workers = worker_count() if workers is None else workers
    if n_workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=min(n_workers, reps)) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(job) for job in jobs]
    records.sort(key=lambda r: (r.t0_true, r.seed))
    records = [replace(r, run_index=i) for i, r in enumerate(records)]
    return records, suite_summary(records)


def oracle_check(
    seed: int = 0,
    n_instances: int = 10,
    priors: tuple[str, ...] = ("wide_open", "prior1"),
    max_individuals: int = 6,
    chain_samples: int = 56_000,
    oracle_draws: int = 200_000,
) -> list[dict]:
    """Gibbs centiles against exact-enumeration centiles on tiny instances.

    Instances alternate over ``priors``; each draws its own parameters and
    a cohort of 1..max_individuals patients, observed spontaneously.
    Returns one dict per instance with both sets of centiles and their
    absolute differences.
    """
    from .oracle import exact_posterior_t0

    results = []
    for i in range(n_instances):
        prior_name = priors[i % len(priors)]
        prior = named_prior(prior_name)
        rng = make_rng(seed + i)
        n = int(rng.integers(1, max_individuals + 1))
        params = draw_params(prior, rng)
        cohort = draw_cohort(params, n, rng)
        obs = observe(cohort, ObservationRegime.spontaneous(), rng)
        cfg = ChainConfig(n_samples=chain_samples, burn_in_fraction=0.10)
        trace = run_chain(prior, obs, cfg, make_rng(seed + 1000 + i))
        gibbs = summarize_trace(trace, cfg.burn_in_fraction)
        exact = exact_posterior_t0(obs, prior, oracle_draws, make_rng(seed + 2000 + i))
        results.append({
            "instance": i,
            "prior": prior_name,
            "n_individuals": n,
            "gibbs_c2_5": gibbs["c2_5"],
            "gibbs_c97_5": gibbs["c97_5"],
            "oracle_c2_5": exact["c2_5"],
            "oracle_c97_5": exact["c97_5"],
            "diff_c2_5": abs(gibbs["c2_5"] - exact["c2_5"]),
            "diff_c97_5": abs(gibbs["c97_5"] - exact["c97_5"]),
        })
    return results


def convergence_protocol(
    prior: str | PriorSpec = "wide_open",
    n_patients: int = 1000,
    seed: int = 0,
    n_samples: int = 20_000,
):
    """Run the two-start-mode comparison on one simulated dataset.

    One chain starts from the prior, the other from the generating truth;
    each owns an independent generator (seed + 1 and seed + 2).  Returns
    (report, trace_from_prior, trace_from_truth).
    """
    from .chain import convergence_check

    prior_spec = named_prior(prior) if isinstance(prior, str) else prior
    rng = make_rng(seed)
    params = draw_params(prior_spec, rng)
    cohort = draw_cohort(params, n_patients, rng)
    obs = observe(cohort, ObservationRegime.spontaneous(), rng)
    cfg_prior = ChainConfig(n_samples=n_samples, start_mode="from_prior")
    cfg_truth = ChainConfig(n_samples=n_samples, start_mode="from_truth")
    trace_a = run_chain(prior_spec, obs, cfg_prior, make_rng(seed + 1))
    trace_b = run_chain(prior_spec, obs, cfg_truth, make_rng(seed + 2), truth=(params, cohort))
    report = convergence_check(trace_a, trace_b)
    return report, trace_a, trace_b


def run_real_data(
    assumption: int,
    n_samples: int = REAL_DATA_SAMPLES,
    seed: int = 0,
    prior: str | PriorSpec = "wide_open",
    unseen_multiple: float = 2.0,
) -> RunRecord:
    """Posterior inference on the real hospital table under one assumption.

    The crude estimate uses the posterior-mean counts of unvaccinated and
    vaccinated individuals, which matters only under assumption 3 where one
    block's vaccination status is unknown (the plus-one convention still
    adds exactly 1 to the non-integral totals).
    """
    prior_spec = named_prior(prior) if isinstance(prior, str) else prior
    obs = load_real_data(assumption, unseen_multiple)
    rng = make_rng(seed)
    t1 = tncc_estimate(obs)
    cfg = ChainConfig(n_samples=n_samples, burn_in_fraction=0.10, start_mode="from_prior")
    trace = run_chain(prior_spec, obs, cfg, rng)
    summary = summarize_trace(trace, cfg.burn_in_fraction)
    mean_unvacc = summary["mean_unvaccinated_count"]
    mean_vacc = obs.total - mean_unvacc
    t2 = crude_estimate(obs, 1.0 + mean_unvacc, 1.0 + mean_vacc)
    e1, e2 = e1_e2_estimates(obs, 1.0 + mean_unvacc, 1.0 + mean_vacc)
    start = int(np.floor(trace.n_samples * cfg.burn_in_fraction))
    return RunRecord(
        run_index=0,
        seed=seed,
        t0_true=None,
        pLv_true=None,
        t1=t1,
        t2=t2,
        c2_5=summary["c2_5"],
        c97_5=summary["c97_5"],
        e_true=None,
        e1=e1,
        e2=e2,
        e_c2_5=summary["e_c2_5"],
        e_c97_5=summary["e_c97_5"],
        n_hosp=obs.n_hospitalised,
        t0_samples=_thin_for_plot(trace.t0[start:]),
    )
