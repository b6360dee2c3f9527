"""veinfer: simulation and Bayesian inference for vaccine-effectiveness estimators.

Compares the test-negative case-control estimate and the crude per-capita
estimate of vaccine effectiveness (as log odds ratios) against exact
posterior credible intervals under a two-subset latent healthcare-seeking
model, on simulated cohorts and on a real partially observed dataset.
"""

from .model import (
    BetaParams,
    CohortCounts,
    ModelParams,
    ObservationClass,
    ObservedData,
    PriorSpec,
    make_beta,
    named_prior,
    NAMED_PRIORS,
    PARAM_NAMES,
)
from .config import parse_prior_text, prior_to_text
from .errors import DegenerateWeightsError
from .estimators import (
    EstimateSet,
    PlusOneCounts,
    crude_estimate,
    e1_e2_estimates,
    effectiveness_from_t0,
    log_odds_ratio,
    observable_probs,
    plus_one_counts,
    population_identities,
    tncc_estimate,
)
from .generate import (
    HOSPITAL_TABLE,
    ObservationRegime,
    draw_cohort,
    draw_params,
    load_hospital_csv,
    load_real_data,
    make_rng,
    observe,
)
from .chain import (
    ChainConfig,
    ChainTrace,
    ConvergenceReport,
    convergence_check,
    init_chain,
    palindromic_sweep,
    run_chain,
    summarize_trace,
    trace_to_csv,
    update_conjugate,
    update_latent,
)
from .kernel import active_kernel, available_kernels
from .oracle import exact_posterior_t0
from .harness import RunRecord, SuiteSummary, run_real_data, run_suite, suite_summary
from .report import emit_report

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
