"""Cohort simulation and observation regimes.

All randomness flows through an explicit ``numpy.random.Generator`` backed
by the PCG64 bit generator with a 64-bit seed; the same seed reproduces the
same samples on any platform.  Replicated experiments use
``seed = base_seed + replication_index`` so each replication owns an
independent stream.

Cohorts are drawn by sequential binomial splitting of counts, which is
distributionally identical to simulating each patient separately: the
subset split of N is binomial, then each subset's vaccination split, then
infection, then hospitalisation, in a fixed cell order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import CohortCounts, ModelParams, ObservationClass, ObservedData, PriorSpec

__all__ = [
    "Rng",
    "make_rng",
    "ObservationRegime",
    "draw_params",
    "draw_cohort",
    "observe",
    "load_real_data",
    "load_hospital_csv",
    "HOSPITAL_TABLE",
]

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    """A PCG64-backed generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ObservationRegime:
    """How much of a cohort is visible.

    * ``spontaneous`` -- everyone's vaccination status is observed; infection
      status only for the hospitalised (who are the ones tested).
    * ``random_testing`` -- testing is re-assigned at random with probability
      ``test_probability``, independent of everything, before the same
      masking; "hospitalised" then just means "tested".
    * ``real_data_partial`` -- fixed hospital tables plus a partially observed
      unseen population; built by `load_real_data`, not from a cohort.
    """

    kind: str
    test_probability: float = 0.5
    unseen_multiple: float = 2.0
    assumption: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("spontaneous", "random_testing", "real_data_partial"):
            raise ValueError(f"unknown observation regime {self.kind!r}")
        if not 0.0 <= self.test_probability <= 1.0:
            raise ValueError("test_probability must lie in [0, 1]")
        if self.unseen_multiple < 0.0:
            raise ValueError("unseen_multiple must be non-negative")
        if self.assumption not in (1, 2, 3):
            raise ValueError("assumption must be 1, 2 or 3")

    @staticmethod
    def spontaneous() -> "ObservationRegime":
        return ObservationRegime(kind="spontaneous")

    @staticmethod
    def random_testing(test_probability: float) -> "ObservationRegime":
        return ObservationRegime(kind="random_testing", test_probability=test_probability)

    @staticmethod
    def real_data(assumption: int, unseen_multiple: float = 2.0) -> "ObservationRegime":
        return ObservationRegime(
            kind="real_data_partial", assumption=assumption, unseen_multiple=unseen_multiple
        )


def draw_params(prior: PriorSpec, rng: Rng) -> ModelParams:
    """Draw the 13 probabilities independently from their Beta priors.

    Draw order is the canonical parameter order (p, r0, r1, j0, j1, then q
    cells lexicographic in (s, l, v)).
    """
    values = [rng.beta(bp.a1, bp.a0) for bp in prior.flat()]
    return ModelParams.from_array(values)


def draw_cohort(params: ModelParams, n_patients: int, rng: Rng) -> CohortCounts:
    """Simulate a cohort of ``n_patients`` as counts over the 16 joint cells."""
    if n_patients < 1:
        raise ValueError(f"cohort size must be at least 1, got {n_patients}")
    cells = np.zeros((2, 2, 2, 2), dtype=np.int64)
    n_s1 = int(rng.binomial(n_patients, params.p))
    by_s = (n_patients - n_s1, n_s1)
    for s in (0, 1):
        n_v1 = int(rng.binomial(by_s[s], params.r[s]))
        by_v = (by_s[s] - n_v1, n_v1)
        for v in (0, 1):
            n_l1 = int(rng.binomial(by_v[v], params.j[v]))
            by_l = (by_v[v] - n_l1, n_l1)
            for l in (0, 1):
                n_h1 = int(rng.binomial(by_l[l], params.q[s][l][v]))
                cells[s, v, l, 0] = by_l[l] - n_h1
                cells[s, v, l, 1] = n_h1
    return CohortCounts(cells)


def _classes_from_masked(hosp_l, unhosp) -> ObservedData:
    # Fixed class order: for v in (0, 1): (v, h=1, l=0), (v, h=1, l=1), (v, h=0).
    classes = []
    for v in (0, 1):
        classes.append(ObservationClass(v=v, h=1, l=0, count=int(hosp_l[v][0])))
        classes.append(ObservationClass(v=v, h=1, l=1, count=int(hosp_l[v][1])))
        classes.append(ObservationClass(v=v, h=0, l=None, count=int(unhosp[v])))
    return ObservedData(classes=tuple(classes))


def observe(cohort: CohortCounts, regime: ObservationRegime, rng: Rng) -> ObservedData:
    """Mask a cohort down to what the chosen regime reveals."""
    n = cohort.n
    if regime.kind == "spontaneous":
        hosp_l = [[n[:, v, l, 1].sum() for l in (0, 1)] for v in (0, 1)]
        unhosp = [n[:, v, :, 0].sum() for v in (0, 1)]
        return _classes_from_masked(hosp_l, unhosp)
    if regime.kind == "random_testing":
        # Testing is re-drawn independently of (s, v, l); the original h is
        # discarded.  Cell order of the redraws is lexicographic in (s, v, l).
        hosp_l = [[0, 0], [0, 0]]
        unhosp = [0, 0]
        for s in (0, 1):
            for v in (0, 1):
                for l in (0, 1):
                    cell_total = int(n[s, v, l, 0] + n[s, v, l, 1])
                    tested = int(rng.binomial(cell_total, regime.test_probability))
                    hosp_l[v][l] += tested
                    unhosp[v] += cell_total - tested
        return _classes_from_masked(hosp_l, unhosp)
    raise ValueError(
        "real_data_partial observations come from fixed tables; use load_real_data()"
    )


# Hospital table from the real-data example: counts by (v, l) among the
# 127820 patients seen in hospital and tested (completely unvaccinated or
# two doses; tested negative or positive for the alpha variant).
HOSPITAL_TABLE: dict[tuple[int, int], int] = {
    (0, 0): 96371,
    (0, 1): 7313,
    (1, 0): 23993,
    (1, 1): 143,
}


def load_hospital_csv(path) -> dict[tuple[int, int], int]:
    """Read an alternative hospital table from CSV columns (v, l, count)."""
    table: dict[tuple[int, int], int] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            v, l, count = int(row["v"]), int(row["l"]), int(row["count"])
            if v not in (0, 1) or l not in (0, 1) or count < 0:
                raise ValueError(f"bad hospital-table row: {row}")
            table[(v, l)] = table.get((v, l), 0) + count
    missing = [k for k in HOSPITAL_TABLE if k not in table]
    if missing:
        raise ValueError(f"hospital table missing (v, l) cells: {missing}")
    return table


def load_real_data(
    assumption: int,
    unseen_multiple: float = 2.0,
    hospital_table: dict[tuple[int, int], int] | None = None,
) -> ObservedData:
    """The real-data observation set under one of three unseen-population assumptions.

    The hospitalised classes are fixed by the hospital table.  The unseen
    population (``unseen_multiple`` times the hospital count, never tested)
    has vaccination status assigned by assumption: 1 -- vaccinated in the
    same proportion as those seen in hospital; 2 -- entirely vaccinated;
    3 -- half assigned as in 1, the other half of unknown status.

    Fractional expected counts are rounded half-to-even, once, on the
    vaccinated side; the remainder is unvaccinated.
    """
    if assumption not in (1, 2, 3):
        raise ValueError(f"assumption must be 1, 2 or 3, got {assumption}")
    table = HOSPITAL_TABLE if hospital_table is None else hospital_table
    classes = [
        ObservationClass(v=v, h=1, l=l, count=int(table[(v, l)]))
        for v in (0, 1)
        for l in (0, 1)
    ]
    n_hosp = sum(table.values())
    hosp_vacc_fraction = (table[(1, 0)] + table[(1, 1)]) / n_hosp
    n_unseen = round(unseen_multiple * n_hosp)

    if assumption == 1:
        n_vacc = round(n_unseen * hosp_vacc_fraction)
        classes.append(ObservationClass(v=0, h=0, l=None, count=n_unseen - n_vacc))
        classes.append(ObservationClass(v=1, h=0, l=None, count=n_vacc))
    elif assumption == 2:
        classes.append(ObservationClass(v=1, h=0, l=None, count=n_unseen))
    else:
        n_known = n_unseen // 2
        n_vacc = round(n_known * hosp_vacc_fraction)
        classes.append(ObservationClass(v=0, h=0, l=None, count=n_known - n_vacc))
        classes.append(ObservationClass(v=1, h=0, l=None, count=n_vacc))
        classes.append(ObservationClass(v=None, h=0, l=None, count=n_unseen - n_known))
    return ObservedData(classes=tuple(classes))
