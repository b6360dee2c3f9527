"""Closed-form effectiveness measures and their estimators.

Vaccine effectiveness is measured on the log-odds-ratio scale::

    t0 = log( odds(P(L|V)) / odds(P(L|v)) )

where L is infection, V/v vaccinated/unvaccinated, and odds(x) = x/(1-x).
A negative value means the vaccine protects.  The classical percentage
effectiveness E = 1 - P(L|V)/P(L|v) is recoverable from t0 given the
baseline infection probability P(L|v).

Counting follows the plus-one convention: every subset count is
incremented by one before ratios are formed, which keeps all estimates
finite and equals posterior-mean smoothing under flat priors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelParams, ObservedData

__all__ = [
    "EstimateSet",
    "PlusOneCounts",
    "log_odds_ratio",
    "effectiveness_from_t0",
    "plus_one_counts",
    "tncc_estimate",
    "crude_estimate",
    "e1_e2_estimates",
    "population_identities",
    "observable_probs",
]


def _logit(x: float) -> float:
    return math.log(x) - math.log1p(-x)


def log_odds_ratio(j0: float, j1: float) -> float:
    """log of the ratio of infection odds vaccinated vs unvaccinated (nats)."""
    if not (0.0 < j0 < 1.0 and 0.0 < j1 < 1.0):
        raise ValueError(f"probabilities must lie strictly inside (0, 1), got {j0}, {j1}")
    return _logit(j1) - _logit(j0)


def effectiveness_from_t0(t0: float, p_l_given_v: float) -> float:
    """Percentage effectiveness corresponding to a log-odds-ratio ``t0``.

    ``p_l_given_v`` is the baseline probability of infection when
    unvaccinated.  Finite for every finite ``t0``.
    """
    if not 0.0 <= p_l_given_v < 1.0:
        raise ValueError(f"baseline probability must lie in [0, 1), got {p_l_given_v}")
    et = math.exp(t0)
    return 100.0 * (1.0 - et / (1.0 + (et - 1.0) * p_l_given_v))


@dataclass(frozen=True)
class PlusOneCounts:
    """Plus-one subset counts; field names follow the L/l H V/v notation.

    ``LHV`` = 1 + #(infected, hospitalised, vaccinated) and so on; ``V``
    and ``v`` count all individuals of known vaccination status, whether
    hospitalised or not.
    """

    LHV: float
    lHV: float
    LHv: float
    lHv: float
    V: float
    v: float


def plus_one_counts(obs: ObservedData) -> PlusOneCounts:
    hosp = {(l, v): 0 for l in (0, 1) for v in (0, 1)}
    for c in obs.classes:
        if c.h == 1:
            if c.v is None:
                raise ValueError("hospitalised classes must have known vaccination status")
            hosp[(c.l, c.v)] += c.count
    unvacc, vacc = obs.known_vaccination_totals()
    return PlusOneCounts(
        LHV=1.0 + hosp[(1, 1)],
        lHV=1.0 + hosp[(0, 1)],
        LHv=1.0 + hosp[(1, 0)],
        lHv=1.0 + hosp[(0, 0)],
        V=1.0 + vacc,
        v=1.0 + unvacc,
    )


def tncc_estimate(obs: ObservedData) -> float:
    """Test-negative case-control estimate of t0.

    Compares vaccination odds among test-positive and test-negative
    hospitalised individuals; finite by the plus-one convention.
    """
    c = plus_one_counts(obs)
    return math.log((c.LHV / c.lHV) / (c.LHv / c.lHv))


def crude_estimate(
    obs: ObservedData,
    unvaccinated_total: float | None = None,
    vaccinated_total: float | None = None,
) -> float:
    """Crude per-capita estimate of t0.

    The totals are plus-one denominators (1 + number vaccinated and 1 +
    number unvaccinated in the whole population) and may be non-integral,
    e.g. posterior means when some vaccination statuses are unobserved.
    They default to the plus-one counts of the known-v individuals in
    ``obs``.
    """
    c = plus_one_counts(obs)
    big_v = c.V if vaccinated_total is None else float(vaccinated_total)
    small_v = c.v if unvaccinated_total is None else float(unvaccinated_total)
    rate_vacc = c.LHV / big_v
    rate_unvacc = c.LHv / small_v
    if rate_vacc >= 1.0 or rate_unvacc >= 1.0:
        raise ValueError("per-capita infection rate at or above 1; totals too small")
    return _logit(rate_vacc) - _logit(rate_unvacc)


def e1_e2_estimates(
    obs: ObservedData,
    unvaccinated_total: float | None = None,
    vaccinated_total: float | None = None,
) -> tuple[float, float]:
    """Percentage-effectiveness estimates matching `tncc_estimate` and
    `crude_estimate`.

    The true baseline P(L|v) is not available to an estimator, so each
    uses its own plug-in: ``#LHv/(#LHv + #lHv)`` for the TNCC value and
    ``#LHv/(1 + #v)`` for the crude one.
    """
    c = plus_one_counts(obs)
    small_v = c.v if unvaccinated_total is None else float(unvaccinated_total)
    t1 = tncc_estimate(obs)
    t2 = crude_estimate(obs, unvaccinated_total, vaccinated_total)
    e1 = effectiveness_from_t0(t1, c.LHv / (c.LHv + c.lHv))
    e2 = effectiveness_from_t0(t2, c.LHv / (1.0 + small_v))
    return e1, e2


@dataclass(frozen=True)
class EstimateSet:
    """Exact estimator values for one dataset (E values in percent)."""

    t0_true: float
    t1: float
    t2: float
    e_true: float
    e1: float
    e2: float
    n_hosp: int


def _strictly_inside(values) -> bool:
    return all(0.0 < x < 1.0 for x in values)


def population_identities(params: ModelParams) -> dict[str, float]:
    """Infinite-population limits of t0, t1 and t2 and the TNCC bias factor.

    ``t1_pop = t0 + log(bias_factor)`` where the bias factor is
    P(H|LV)P(H|lv) / (P(H|Lv)P(H|lV)), each conditional marginalised over
    the latent subset; ``t2_pop`` is the exact log odds ratio of P(LH|V)
    against P(LH|v).
    """
    if not _strictly_inside(params.as_array()):
        raise ValueError("population identities need all probabilities strictly inside (0, 1)")
    p, r, j, q = params.p, params.r, params.j, params.q
    p_s = (1.0 - p, p)
    p_v = ((1.0 - r[0]) * p_s[0] + (1.0 - r[1]) * p_s[1], r[0] * p_s[0] + r[1] * p_s[1])
    # P(s | vaccination class); s is independent of l given v.
    s_given_v = [[p_s[s] * ((1.0 - r[s]) if v == 0 else r[s]) / p_v[v] for s in (0, 1)] for v in (0, 1)]
    # P(H | l, v), marginalised over s.
    h_given_lv = [[sum(s_given_v[v][s] * q[s][l][v] for s in (0, 1)) for v in (0, 1)] for l in (0, 1)]
    bias = (h_given_lv[1][1] * h_given_lv[0][0]) / (h_given_lv[1][0] * h_given_lv[0][1])
    t0 = log_odds_ratio(j[0], j[1])
    lh_given_v = [j[v] * h_given_lv[1][v] for v in (0, 1)]
    t2_pop = _logit(lh_given_v[1]) - _logit(lh_given_v[0])
    return {
        "t0": t0,
        "t1_pop": t0 + math.log(bias),
        "t2_pop": t2_pop,
        "bias_factor": bias,
    }


def observable_probs(params: ModelParams) -> dict[str, float]:
    """P(V), P(H) and P(L|H) implied by the parameters.

    These are the probabilities the data pins down well even when the
    underlying 13 parameters stay very uncertain.
    """
    p, r, j, q = params.p, params.r, params.j, params.q
    p_s = (1.0 - p, p)
    p_vacc = p_s[0] * r[0] + p_s[1] * r[1]
    p_h = 0.0
    p_lh = 0.0
    for s in (0, 1):
        for v in (0, 1):
            w_sv = p_s[s] * (r[s] if v == 1 else 1.0 - r[s])
            for l in (0, 1):
                mass = w_sv * (j[v] if l == 1 else 1.0 - j[v]) * q[s][l][v]
                p_h += mass
                if l == 1:
                    p_lh += mass
    if p_h <= 0.0:
        raise ValueError("P(H) = 0: conditional P(L|H) undefined")
    return {"p_V": p_vacc, "p_H": p_h, "p_L_given_H": p_lh / p_h}
