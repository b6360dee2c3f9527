"""Exact posterior computation for tiny instances.

Used as ground truth when validating the Gibbs sampler.  All latent
completions are enumerated as per-class count vectors (individuals within
a class are exchangeable, so a count vector stands for its whole orbit of
per-individual labellings).  With the parameters integrated out by
conjugacy, a completion's marginal weight is a product of Beta-function
ratios, computed in log space over the 13 parameters; exact posterior
draws then follow by sampling a completion and drawing the two infection
probabilities from their conditional Beta posteriors.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from . import _kernel_py
from .chain import build_class_table
from .generate import Rng
from .model import ObservedData, PriorSpec

__all__ = ["exact_posterior_t0", "enumerate_completions", "completion_log_weight"]

MAX_INDIVIDUALS = 12


def _compositions(total: int, parts: int):
    """All vectors of `parts` non-negative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_completions(table) -> np.ndarray:
    """Every consistent latent assignment, as rows of per-cell counts."""
    per_class = []
    for ci in range(len(table.class_count)):
        n_cells = int(table.cell_off[ci + 1] - table.cell_off[ci])
        per_class.append(list(_compositions(int(table.class_count[ci]), n_cells)))
    rows = [np.concatenate([np.array(part, dtype=np.int64) for part in combo])
            for combo in product(*per_class)]
    return np.array(rows, dtype=np.int64)


def _log_multiplicity(table, completion: np.ndarray) -> float:
    """log of the number of per-individual labellings giving this count vector."""
    total = 0.0
    for ci in range(len(table.class_count)):
        lo, hi = int(table.cell_off[ci]), int(table.cell_off[ci + 1])
        n = int(table.class_count[ci])
        total += gammaln(n + 1) - gammaln(completion[lo:hi] + 1).sum()
    return float(total)


def completion_log_weight(table, prior_a1, prior_a0, completion: np.ndarray) -> float:
    """Unnormalised log posterior weight of one latent completion."""
    m1, m0 = _kernel_py.aggregate_counts(
        table.cell_s, table.cell_l, table.cell_v, table.cell_h, completion
    )
    log_w = _log_multiplicity(table, completion)
    for idx in range(13):
        log_w += betaln(prior_a0[idx] + m0[idx], prior_a1[idx] + m1[idx])
        log_w -= betaln(prior_a0[idx], prior_a1[idx])
    return float(log_w)


def exact_posterior_t0(
    obs: ObservedData,
    prior: PriorSpec,
    n_draws: int,
    rng: Rng,
    max_individuals: int = MAX_INDIVIDUALS,
) -> dict[str, float]:
    """Exact posterior centiles of the log odds ratio, by enumeration.

    Only feasible for very small instances; refuses datasets with more
    than ``max_individuals`` individuals.
    """
    if obs.total > max_individuals:
        raise ValueError(
            f"exact enumeration limited to {max_individuals} individuals, got {obs.total}"
        )
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    table = build_class_table(obs)
    prior_a1, prior_a0 = prior.pseudocount_arrays()
    completions = enumerate_completions(table)
    log_w = np.array([
        completion_log_weight(table, prior_a1, prior_a0, comp) for comp in completions
    ])
    log_norm = logsumexp(log_w)
    probs = np.exp(log_w - log_norm)
    total = probs.sum()
    if abs(total - 1.0) > 1e-10:
        raise AssertionError(f"completion weights sum to {total}, expected 1")
    probs = probs / total

    # Conditional Beta posterior parameters for j0, j1 per completion.
    gamma_a1 = np.empty((len(completions), 2))
    gamma_a0 = np.empty((len(completions), 2))
    for i, comp in enumerate(completions):
        m1, m0 = _kernel_py.aggregate_counts(
            table.cell_s, table.cell_l, table.cell_v, table.cell_h, comp
        )
        for v in (0, 1):
            gamma_a1[i, v] = prior_a1[3 + v] + m1[3 + v]
            gamma_a0[i, v] = prior_a0[3 + v] + m0[3 + v]

    picks = rng.choice(len(completions), size=n_draws, p=probs)
    j0 = rng.beta(gamma_a1[picks, 0], gamma_a0[picks, 0])
    j1 = rng.beta(gamma_a1[picks, 1], gamma_a0[picks, 1])
    np.clip(j0, _kernel_py.CLAMP_LO, _kernel_py.CLAMP_HI, out=j0)
    np.clip(j1, _kernel_py.CLAMP_LO, _kernel_py.CLAMP_HI, out=j1)
    t0 = (np.log(j1) - np.log1p(-j1)) - (np.log(j0) - np.log1p(-j0))
    lo, hi = np.percentile(t0, [2.5, 97.5])
    return {
        "c2_5": float(lo),
        "c97_5": float(hi),
        "mean_t0": float(t0.mean()),
        "n_completions": float(len(completions)),
    }
