"""Collapsed Gibbs sampler over parameters and latent counts.

A chain state holds the 13 current probabilities plus, for every
observation class, the current counts of its individuals over the latent
cells consistent with what was observed (subset always latent; infection
status latent outside hospital; vaccination status latent where unknown).
Parameter updates are Beta-conjugate; latent updates are one multinomial
draw per class.  Each sweep applies the update blocks in palindromic
order, which keeps the composed kernel in detailed balance.

A chain is strictly sequential and owns its state; run replications or
start-mode comparisons as separate chains with independent generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py
from .kernel import active_kernel
from .model import CohortCounts, ModelParams, ObservedData, PriorSpec
from .generate import Rng, draw_params

__all__ = [
    "ChainConfig",
    "ChainState",
    "ChainTrace",
    "ClassTable",
    "build_class_table",
    "init_chain",
    "update_conjugate",
    "update_latent",
    "palindromic_sweep",
    "run_chain",
    "summarize_trace",
    "convergence_check",
    "ConvergenceReport",
    "trace_to_csv",
    "TRACE_CSV_COLUMNS",
]

START_MODES = ("from_prior", "from_truth")


@dataclass(frozen=True)
class ChainConfig:
    """Sampler run settings.

    ``n_samples`` counts recorded samples; with ``thinning`` above one, the
    chain performs ``n_samples * thinning`` sweeps.  The first
    ``burn_in_fraction`` of records is excluded by `summarize_trace`.
    """

    n_samples: int
    burn_in_fraction: float = 0.10
    start_mode: str = "from_prior"
    thinning: int = 1

    def __post_init__(self) -> None:
        if self.n_samples < 10:
            raise ValueError("n_samples must be at least 10")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.start_mode not in START_MODES:
            raise ValueError(f"start_mode must be one of {START_MODES}")
        if self.thinning < 1:
            raise ValueError("thinning must be at least 1")


class ClassTable:
    """Flattened per-class cell layout shared by both kernel lanes.

    Classes are ordered so that those with only the subset latent come
    first, then those with latent infection status, then those with latent
    vaccination status; the kernel's palindrome visits them in this order
    and then in reverse.  Cells within a class are lexicographic in
    (s, l, v) over the latent dimensions.
    """

    __slots__ = ("class_count", "class_h", "cell_off", "cell_s", "cell_l", "cell_v",
                 "cell_h", "class_order", "n_cells")

    def __init__(self, obs: ObservedData) -> None:
        def group(c):
            if c.v is None:
                return 2
            return 1 if c.l is None else 0

        order = sorted(range(len(obs.classes)), key=lambda i: (group(obs.classes[i]), i))
        counts, hs, offs = [], [], [0]
        s_list, l_list, v_list, h_list = [], [], [], []
        for i in order:
            c = obs.classes[i]
            counts.append(c.count)
            hs.append(c.h)
            for s in (0, 1):
                for l in (0, 1) if c.l is None else (c.l,):
                    for v in (0, 1) if c.v is None else (c.v,):
                        s_list.append(s)
                        l_list.append(l)
                        v_list.append(v)
                        h_list.append(c.h)
            offs.append(len(s_list))
        self.class_order = tuple(order)
        self.class_count = np.array(counts, dtype=np.int64)
        self.class_h = np.array(hs, dtype=np.int8)
        self.cell_off = np.array(offs, dtype=np.int64)
        self.cell_s = np.array(s_list, dtype=np.int64)
        self.cell_l = np.array(l_list, dtype=np.int64)
        self.cell_v = np.array(v_list, dtype=np.int64)
        self.cell_h = np.array(h_list, dtype=np.int64)
        self.n_cells = len(s_list)


def build_class_table(obs: ObservedData) -> ClassTable:
    return ClassTable(obs)


@dataclass
class ChainState:
    """Mutable sampler state: current parameters, latent cell counts, stream."""

    table: ClassTable
    params: np.ndarray          # float64[13], canonical order
    latent: np.ndarray          # int64[n_cells]
    rng: Rng
    prior_a1: np.ndarray        # float64[13] pseudo-counts, canonical order
    prior_a0: np.ndarray
    n_clamped: int = 0

    def model_params(self) -> ModelParams:
        return ModelParams.from_array(self.params)

    def latent_marginals_ok(self) -> bool:
        """Latent counts restricted to observed dimensions equal the data."""
        t = self.table
        for ci in range(len(t.class_count)):
            lo, hi = t.cell_off[ci], t.cell_off[ci + 1]
            if int(self.latent[lo:hi].sum()) != int(t.class_count[ci]):
                return False
        return bool((self.latent >= 0).all())


@dataclass
class ChainTrace:
    """Per-sample records of t0, e0, observable probabilities, parameters
    and latent vaccination totals, as produced by the kernel."""

    data: np.ndarray            # float64[n_samples, N_COLS]
    n_clamped: int
    kernel: str

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def t0(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_T0]

    @property
    def e0(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_E0]

    @property
    def p_V(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_PV]

    @property
    def p_H(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_PH]

    @property
    def p_L_given_H(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_PLH]

    @property
    def params(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_PARAMS:_kernel_py.COL_PARAMS + 13]

    @property
    def n_unvaccinated(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_N_UNVACC]

    @property
    def n_vaccinated(self) -> np.ndarray:
        return self.data[:, _kernel_py.COL_N_VACC]


def _truth_latent(table: ClassTable, obs: ObservedData, cohort: CohortCounts) -> np.ndarray:
    """Latent cell counts implied by a generating cohort, checked against obs."""
    latent = np.zeros(table.n_cells, dtype=np.int64)
    for ci in range(len(table.class_count)):
        lo, hi = int(table.cell_off[ci]), int(table.cell_off[ci + 1])
        for k in range(lo, hi):
            latent[k] = cohort.n[table.cell_s[k], table.cell_v[k], table.cell_l[k], table.cell_h[k]]
        if int(latent[lo:hi].sum()) != int(table.class_count[ci]):
            raise ValueError(
                "supplied truth cohort is inconsistent with the observed data "
                f"(class {ci}: cells give {int(latent[lo:hi].sum())}, observed {int(table.class_count[ci])})"
            )
    return latent


def init_chain(
    prior: PriorSpec,
    obs: ObservedData,
    cfg: ChainConfig,
    rng: Rng,
    truth: tuple[ModelParams, CohortCounts] | None = None,
) -> ChainState:
    """Initial state: from the prior (params drawn, latents from their full
    conditionals) or from the generating truth."""
    table = build_class_table(obs)
    a1, a0 = prior.pseudocount_arrays()
    if cfg.start_mode == "from_truth":
        if truth is None:
            raise ValueError("start_mode 'from_truth' requires the generating params and cohort")
        true_params, cohort = truth
        params = true_params.as_array().copy()
        np.clip(params, _kernel_py.CLAMP_LO, _kernel_py.CLAMP_HI, out=params)
        latent = _truth_latent(table, obs, cohort)
        return ChainState(table=table, params=params, latent=latent, rng=rng,
                          prior_a1=a1, prior_a0=a0)
    params = draw_params(prior, rng).as_array()
    n_clamped = int(np.count_nonzero(
        (params < _kernel_py.CLAMP_LO) | (params > _kernel_py.CLAMP_HI)
    ))
    np.clip(params, _kernel_py.CLAMP_LO, _kernel_py.CLAMP_HI, out=params)
    latent = np.zeros(table.n_cells, dtype=np.int64)
    state = ChainState(table=table, params=params, latent=latent, rng=rng,
                       prior_a1=a1, prior_a0=a0, n_clamped=n_clamped)
    update_latent(state)
    return state


def update_conjugate(state: ChainState, reverse: bool = False) -> ChainState:
    """Redraw all 13 parameters from their Beta full conditionals (in place)."""
    t = state.table
    m1, m0 = _kernel_py.aggregate_counts(t.cell_s, t.cell_l, t.cell_v, t.cell_h, state.latent)
    state.n_clamped += _kernel_py.conjugate_pass(
        state.rng, state.params, state.prior_a1, state.prior_a0, m1, m0, reverse
    )
    return state


def update_latent(state: ChainState, reverse: bool = False) -> ChainState:
    """Resample every class's latent completion given the current parameters."""
    t = state.table
    _kernel_py.latent_pass(state.rng, state.params, t.class_count, t.cell_off,
                           t.cell_s, t.cell_l, t.cell_v, t.cell_h, state.latent, reverse)
    return state


def palindromic_sweep(state: ChainState) -> ChainState:
    """One full palindrome: p,r,j,q, latent blocks, then everything reversed."""
    t = state.table
    state.n_clamped += _kernel_py.sweep(
        state.rng, state.params, state.prior_a1, state.prior_a0, t.class_count, t.cell_off,
        t.cell_s, t.cell_l, t.cell_v, t.cell_h, state.latent,
    )
    return state


def run_chain(
    prior: PriorSpec,
    obs: ObservedData,
    cfg: ChainConfig,
    rng: Rng,
    truth: tuple[ModelParams, CohortCounts] | None = None,
) -> ChainTrace:
    """Run the sampler and record t0 = log odds ratio of the two infection
    probabilities (and derived quantities) at every recorded sweep."""
    state = init_chain(prior, obs, cfg, rng, truth)
    a1, a0 = state.prior_a1, state.prior_a0
    t = state.table
    out = np.empty((cfg.n_samples, _kernel_py.N_COLS), dtype=np.float64)
    kernel = active_kernel()
    n_clamped = kernel.run_sweeps(
        rng, state.params, a1, a0, t.class_count, t.cell_off,
        t.cell_s, t.cell_l, t.cell_v, t.cell_h, state.latent,
        cfg.n_samples, cfg.thinning, out,
    )
    return ChainTrace(data=out, n_clamped=state.n_clamped + int(n_clamped),
                      kernel=kernel.KERNEL_NAME)


def _post_burn_in(trace: ChainTrace, burn_in_fraction: float) -> np.ndarray:
    if not 0.0 <= burn_in_fraction < 1.0:
        raise ValueError("burn_in_fraction must lie in [0, 1)")
    start = math.floor(trace.n_samples * burn_in_fraction)
    kept = trace.data[start:]
    if kept.shape[0] < 40:
        raise ValueError(
            f"trace too short: {kept.shape[0]} post-burn-in samples, need at least 40"
        )
    return kept


def summarize_trace(trace: ChainTrace, burn_in_fraction: float = 0.10) -> dict[str, float]:
    """Posterior centiles and means over the post-burn-in samples.

    Centiles interpolate linearly between order statistics (the 2.5th
    centile of n values sits at 0-based rank 0.025*(n-1), fractional ranks
    interpolated).
    """
    kept = _post_burn_in(trace, burn_in_fraction)
    t0 = kept[:, _kernel_py.COL_T0]
    e0 = kept[:, _kernel_py.COL_E0]
    c_lo, c_hi = np.percentile(t0, [2.5, 97.5])
    e_lo, e_hi = np.percentile(e0, [2.5, 97.5])
    return {
        "c2_5": float(c_lo),
        "c97_5": float(c_hi),
        "mean_t0": float(t0.mean()),
        "mean_e0": float(e0.mean()),
        "e_c2_5": float(e_lo),
        "e_c97_5": float(e_hi),
        "mean_unvaccinated_count": float(kept[:, _kernel_py.COL_N_UNVACC].mean()),
        "n_clamped": float(trace.n_clamped),
    }


@dataclass(frozen=True)
class ConvergenceReport:
    """Start-mode comparison: absolute differences of post-burn-in means and
    centiles for t0 and the observable probabilities."""

    quantities: dict[str, dict[str, float]]
    passed: bool

    def lines(self) -> list[str]:
        out = []
        for name, d in self.quantities.items():
            out.append(
                f"{name}: |mean diff| {d['mean_diff']:.4f}, |c2.5 diff| {d['c2_5_diff']:.4f}, "
                f"|c97.5 diff| {d['c97_5_diff']:.4f} (threshold {d['threshold']}) "
                f"{'PASS' if d['passed'] else 'FAIL'}"
            )
        out.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return out


_CONVERGENCE_QUANTITIES = (
    ("t0", _kernel_py.COL_T0, 0.25),
    ("p_V", _kernel_py.COL_PV, 0.02),
    ("p_H", _kernel_py.COL_PH, 0.02),
    ("p_L_given_H", _kernel_py.COL_PLH, 0.02),
)


def convergence_check(
    trace_a: ChainTrace, trace_b: ChainTrace, burn_in_fraction: float = 0.10
) -> ConvergenceReport:
    """Compare chains started from the prior and from the truth.

    Flags PASS when every mean and centile difference is at most 0.25 nats
    for t0 and 0.02 for each observable probability.
    """
    if trace_a.n_samples != trace_b.n_samples:
        raise ValueError("convergence check expects equal-length traces")
    kept_a = _post_burn_in(trace_a, burn_in_fraction)
    kept_b = _post_burn_in(trace_b, burn_in_fraction)
    quantities: dict[str, dict[str, float]] = {}
    all_ok = True
    for name, col, threshold in _CONVERGENCE_QUANTITIES:
        xa, xb = kept_a[:, col], kept_b[:, col]
        qa = np.percentile(xa, [2.5, 97.5])
        qb = np.percentile(xb, [2.5, 97.5])
        d = {
            "mean_diff": float(abs(xa.mean() - xb.mean())),
            "c2_5_diff": float(abs(qa[0] - qb[0])),
            "c97_5_diff": float(abs(qa[1] - qb[1])),
            "threshold": threshold,
        }
        d["passed"] = max(d["mean_diff"], d["c2_5_diff"], d["c97_5_diff"]) <= threshold
        all_ok = all_ok and d["passed"]
        quantities[name] = d
    return ConvergenceReport(quantities=quantities, passed=all_ok)


TRACE_CSV_COLUMNS = (
    "sample_index", "t0", "e0",
    "p", "r0", "r1", "j0", "j1",
    "q000", "q001", "q010", "q011", "q100", "q101", "q110", "q111",
    "p_V", "p_H", "p_L_given_H",
)


def trace_to_csv(trace: ChainTrace, path) -> None:
    """Export the trace for external plotting/diagnostics."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRACE_CSV_COLUMNS) + "\n")
        for i in range(trace.n_samples):
            row = trace.data[i]
            values = [str(i), repr(row[_kernel_py.COL_T0]), repr(row[_kernel_py.COL_E0])]
            values += [repr(x) for x in row[_kernel_py.COL_PARAMS:_kernel_py.COL_PARAMS + 13]]
            values += [repr(row[_kernel_py.COL_PV]), repr(row[_kernel_py.COL_PH]),
                       repr(row[_kernel_py.COL_PLH])]
            fh.write(",".join(values) + "\n")
