"""Domain types for the two-subset vaccine-effectiveness model.

The population model has 13 probabilities:

* ``p``        -- fraction of the population in the latent subset ``s=1``
* ``r[s]``     -- probability of vaccination given subset membership
* ``j[v]``     -- probability of infection given vaccination status
* ``q[s][l][v]`` -- probability of hospitalisation (equivalently, of being
  tested) given subset, infection status and vaccination status

Each probability carries an independent Beta prior.  ``BetaParams`` stores
the two pseudo-counts of one such prior, ``PriorSpec`` the full set of 13,
and ``ModelParams`` one concrete draw of the 13 probabilities.

Index conventions used throughout the package: ``q`` and its priors are
indexed ``[s][l][v]``; cohort cell counts are indexed ``[s][v][l][h]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BetaParams",
    "PriorSpec",
    "ModelParams",
    "CohortCounts",
    "ObservationClass",
    "ObservedData",
    "make_beta",
    "named_prior",
    "NAMED_PRIORS",
    "PARAM_NAMES",
]

# Canonical flat ordering of the 13 model probabilities.  Every routine that
# draws or stores them as a vector uses this order; q cells are lexicographic
# in (s, l, v), i.e. flat index 4*s + 2*l + v.
PARAM_NAMES = (
    "p",
    "r0", "r1",
    "j0", "j1",
    "q000", "q001", "q010", "q011", "q100", "q101", "q110", "q111",
)


@dataclass(frozen=True)
class BetaParams:
    """Pseudo-counts of one Beta prior: ``a0`` for outcome 0, ``a1`` for 1.

    The mean probability of outcome 1 is ``a1 / (a0 + a1)``.
    """

    a0: float
    a1: float

    def __post_init__(self) -> None:
        if not (self.a0 > 0 and self.a1 > 0):
            raise ValueError(f"Beta pseudo-counts must be positive, got ({self.a0}, {self.a1})")

    @property
    def mean(self) -> float:
        return self.a1 / (self.a0 + self.a1)

    @property
    def total(self) -> float:
        return self.a0 + self.a1


def make_beta(mean: float, total: float) -> BetaParams:
    """Beta pseudo-counts with the given mean and given pseudo-count sum.

    ``a0 + a1`` equals ``total`` exactly; the mean is recovered to float
    precision.
    """
    if not 0.0 < mean < 1.0:
        raise ValueError(f"mean must lie strictly inside (0, 1), got {mean}")
    if not total > 0.0:
        raise ValueError(f"total must be positive, got {total}")
    a1 = mean * total
    return BetaParams(a0=total - a1, a1=a1)


_UNIFORM = BetaParams(1.0, 1.0)


@dataclass(frozen=True)
class PriorSpec:
    """The 13 Beta priors: alpha on p, beta[s] on r, gamma[v] on j, delta[s][l][v] on q."""

    alpha: BetaParams
    beta: tuple[BetaParams, BetaParams]
    gamma: tuple[BetaParams, BetaParams]
    delta: tuple[
        tuple[tuple[BetaParams, BetaParams], tuple[BetaParams, BetaParams]],
        tuple[tuple[BetaParams, BetaParams], tuple[BetaParams, BetaParams]],
    ]

    def flat(self) -> tuple[BetaParams, ...]:
        """The 13 entries in canonical `PARAM_NAMES` order."""
        return (
            self.alpha,
            self.beta[0], self.beta[1],
            self.gamma[0], self.gamma[1],
        ) + tuple(self.delta[s][l][v] for s in (0, 1) for l in (0, 1) for v in (0, 1))

    def pseudocount_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(a1, a0) pseudo-count vectors in canonical order, for the sampler."""
        entries = self.flat()
        a1 = np.array([e.a1 for e in entries], dtype=np.float64)
        a0 = np.array([e.a0 for e in entries], dtype=np.float64)
        return a1, a0

    @staticmethod
    def from_flat(entries) -> "PriorSpec":
        e = tuple(entries)
        if len(e) != 13:
            raise ValueError(f"a PriorSpec has exactly 13 Beta entries, got {len(e)}")
        d = e[5:]
        delta = tuple(
            tuple(tuple(d[4 * s + 2 * l + v] for v in (0, 1)) for l in (0, 1))
            for s in (0, 1)
        )
        return PriorSpec(alpha=e[0], beta=(e[1], e[2]), gamma=(e[3], e[4]), delta=delta)


def _constant_delta(bp: BetaParams):
    return tuple(tuple(tuple(bp for _ in (0, 1)) for _ in (0, 1)) for _ in (0, 1))


def _wide_open() -> PriorSpec:
    return PriorSpec(
        alpha=_UNIFORM,
        beta=(_UNIFORM, _UNIFORM),
        gamma=(_UNIFORM, _UNIFORM),
        delta=_constant_delta(_UNIFORM),
    )


def _prior1() -> PriorSpec:
    # Two roughly equal subsets; subset 1 mostly vaccinated and almost always
    # hospitalised when ill, subset 0 mostly unvaccinated and hospitalised
    # with probability 0.4 regardless of infection status.
    q_by_s = (make_beta(0.4, 200.0), make_beta(0.995, 200.0))
    delta = tuple(
        tuple(tuple(q_by_s[s] for _ in (0, 1)) for _ in (0, 1)) for s in (0, 1)
    )
    return PriorSpec(
        alpha=make_beta(0.5, 200.0),
        beta=(make_beta(0.005, 200.0), make_beta(0.995, 200.0)),
        gamma=(_UNIFORM, _UNIFORM),
        delta=delta,
    )


def _prior2() -> PriorSpec:
    return PriorSpec(
        alpha=make_beta(0.995, 200.0),
        beta=(_UNIFORM, _UNIFORM),
        gamma=(_UNIFORM, _UNIFORM),
        delta=_constant_delta(_UNIFORM),
    )


def _prior3() -> PriorSpec:
    # Nearly everybody in subset 1; hospitalisation almost certain once
    # infected or vaccinated, rare otherwise.
    hi = make_beta(0.995, 200.0)
    lo = make_beta(0.1, 200.0)
    delta = tuple(
        tuple(tuple(hi if (l == 1 or v == 1) else lo for v in (0, 1)) for l in (0, 1))
        for _ in (0, 1)
    )
    return PriorSpec(
        alpha=make_beta(0.995, 200.0),
        beta=(make_beta(0.5, 200.0), make_beta(0.5, 200.0)),
        gamma=(_UNIFORM, _UNIFORM),
        delta=delta,
    )


NAMED_PRIORS = ("wide_open", "prior1", "prior2", "prior3")


def named_prior(name: str) -> PriorSpec:
    """One of the four built-in prior configurations."""
    builders = {
        "wide_open": _wide_open,
        "prior1": _prior1,
        "prior2": _prior2,
        "prior3": _prior3,
    }
    try:
        return builders[name]()
    except KeyError:
        raise ValueError(f"unknown prior {name!r}; expected one of {NAMED_PRIORS}") from None


@dataclass(frozen=True)
class ModelParams:
    """One concrete draw of the 13 model probabilities."""

    p: float
    r: tuple[float, float]
    j: tuple[float, float]
    q: tuple[
        tuple[tuple[float, float], tuple[float, float]],
        tuple[tuple[float, float], tuple[float, float]],
    ]

    def __post_init__(self) -> None:
        for name, value in zip(PARAM_NAMES, self.as_array()):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"probability {name}={value} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        """The 13 probabilities in canonical `PARAM_NAMES` order."""
        vals = [self.p, self.r[0], self.r[1], self.j[0], self.j[1]]
        vals += [self.q[s][l][v] for s in (0, 1) for l in (0, 1) for v in (0, 1)]
        return np.array(vals, dtype=np.float64)

    @staticmethod
    def from_array(values) -> "ModelParams":
        a = np.asarray(values, dtype=np.float64)
        if a.shape != (13,):
            raise ValueError(f"expected 13 values, got shape {a.shape}")
        q = tuple(
            tuple(tuple(float(a[5 + 4 * s + 2 * l + v]) for v in (0, 1)) for l in (0, 1))
            for s in (0, 1)
        )
        return ModelParams(
            p=float(a[0]), r=(float(a[1]), float(a[2])), j=(float(a[3]), float(a[4])), q=q
        )


class CohortCounts:
    """Population as counts over the 16 joint cells, indexed ``n[s, v, l, h]``.

    All individuals within a cell are exchangeable under the model, so counts
    (rather than per-patient arrays) are the canonical representation.
    """

    __slots__ = ("n",)

    def __init__(self, n) -> None:
        arr = np.asarray(n, dtype=np.int64)
        if arr.shape != (2, 2, 2, 2):
            raise ValueError(f"cell array must have shape (2,2,2,2), got {arr.shape}")
        if (arr < 0).any():
            raise ValueError("cell counts must be non-negative")
        arr = arr.copy()
        arr.setflags(write=False)
        self.n = arr

    @property
    def total(self) -> int:
        return int(self.n.sum())

    @property
    def n_hospitalised(self) -> int:
        return int(self.n[:, :, :, 1].sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, CohortCounts) and bool((self.n == other.n).all())

    def __repr__(self) -> str:
        return f"CohortCounts(total={self.total}, hospitalised={self.n_hospitalised})"


@dataclass(frozen=True)
class ObservationClass:
    """A group of individuals sharing the same observed values.

    ``v`` and ``l`` are ``None`` when unobserved for the class; ``h`` is
    always observed.  Latent dimensions (``s`` always; ``l`` and ``v`` when
    ``None``) are imputed by the sampler.
    """

    v: int | None
    h: int
    l: int | None
    count: int


@dataclass(frozen=True)
class ObservedData:
    """The dataset visible to the estimators and the sampler."""

    classes: tuple[ObservationClass, ...]

    def __post_init__(self) -> None:
        for c in self.classes:
            if c.h not in (0, 1):
                raise ValueError(f"h must be 0 or 1, got {c.h}")
            if c.v not in (0, 1, None) or c.l not in (0, 1, None):
                raise ValueError("v and l must be 0, 1 or None")
            if c.count < 0:
                raise ValueError("class counts must be non-negative")
            if c.h == 1 and c.l is None:
                raise ValueError("infection status must be known for hospitalised classes")
            if c.h == 0 and c.l is not None:
                raise ValueError("infection status cannot be observed outside hospital")

    @property
    def total(self) -> int:
        return sum(c.count for c in self.classes)

    @property
    def n_hospitalised(self) -> int:
        return sum(c.count for c in self.classes if c.h == 1)

    def known_vaccination_totals(self) -> tuple[int, int]:
        """(unvaccinated, vaccinated) raw counts over classes with known v."""
        unvacc = sum(c.count for c in self.classes if c.v == 0)
        vacc = sum(c.count for c in self.classes if c.v == 1)
        return unvacc, vacc

    def n_vaccination_unknown(self) -> int:
        return sum(c.count for c in self.classes if c.v is None)
