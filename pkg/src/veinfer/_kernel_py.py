"""Pure-Python sweep kernel for the collapsed Gibbs sampler.

This module is the reference implementation of the kernel contract; the
compiled twin in ``_kernel.pyx`` mirrors it operation for operation.  Both
lanes draw through numpy's PCG64 stream using the same C distribution
functions, so for a given seed they produce bit-identical chains.  Anything
that affects the stream is therefore pinned down here:

* draw order: the conjugate pass draws the 13 parameters in canonical
  order (reversed on the backward pass); the latent pass visits classes in
  table order (reversed on the backward pass), one multinomial per class;
* one sweep is the palindrome  conjugate-forward, latent-forward,
  latent-backward, conjugate-backward;
* floating-point expressions (weights, normalisation sums) are evaluated
  in the same operation order as the C code;
* degenerate Beta draws are clamped into [1e-12, 1 - 1e-12] (clamps are
  counted, and consume no extra randomness).

The latent state is a vector of per-cell counts, grouped by observation
class; one multinomial draw per class resamples the joint latent
completion of all its (exchangeable) individuals, which is distributionally
identical to per-individual draws.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateWeightsError

KERNEL_NAME = "python"

CLAMP_LO = 1e-12
CLAMP_HI = 1.0 - 1e-12

# Column layout of one trace record.
COL_T0 = 0
COL_E0 = 1
COL_PV = 2
COL_PH = 3
COL_PLH = 4
COL_PARAMS = 5          # 13 columns, canonical parameter order
COL_N_UNVACC = 18
COL_N_VACC = 19
N_COLS = 20


def _draw_beta_clamped(gen, a1: float, a0: float) -> tuple[float, int]:
    x = gen.beta(a1, a0)
    if x < CLAMP_LO:
        return CLAMP_LO, 1
    if x > CLAMP_HI:
        return CLAMP_HI, 1
    return x, 0


def aggregate_counts(cell_s, cell_l, cell_v, cell_h, latent):
    """Latent-completed counts feeding the 13 Beta full conditionals.

    Returns (m1, m0): for each parameter in canonical order, the raw count
    of outcome-1 and outcome-0 individuals (no plus-one; the prior supplies
    the pseudo-counts).
    """
    w = latent.astype(np.float64)
    m_s = np.bincount(cell_s, weights=w, minlength=2)
    m_r = np.bincount(cell_s * 2 + cell_v, weights=w, minlength=4)
    m_j = np.bincount(cell_v * 2 + cell_l, weights=w, minlength=4)
    m_q = np.bincount((cell_s * 4 + cell_l * 2 + cell_v) * 2 + cell_h, weights=w, minlength=16)
    m1 = np.empty(13, dtype=np.float64)
    m0 = np.empty(13, dtype=np.float64)
    m1[0], m0[0] = m_s[1], m_s[0]
    for s in (0, 1):
        m1[1 + s], m0[1 + s] = m_r[s * 2 + 1], m_r[s * 2 + 0]
    for v in (0, 1):
        m1[3 + v], m0[3 + v] = m_j[v * 2 + 1], m_j[v * 2 + 0]
    for k in range(8):
        m1[5 + k], m0[5 + k] = m_q[k * 2 + 1], m_q[k * 2 + 0]
    return m1, m0


def conjugate_pass(gen, params, prior_a1, prior_a0, m1, m0, reverse: bool) -> int:
    """Redraw all 13 parameters from their Beta full conditionals."""
    clamped = 0
    order = range(12, -1, -1) if reverse else range(13)
    for idx in order:
        params[idx], c = _draw_beta_clamped(gen, prior_a1[idx] + m1[idx], prior_a0[idx] + m0[idx])
        clamped += c
    return clamped


def cell_weights(params, cell_s, cell_l, cell_v, cell_h):
    """Unnormalised conditional weight of every latent cell given params.

    Multiplication order matches the compiled kernel: ((s-term * r-term)
    * j-term) * q-term.
    """
    p = params[0]
    base = np.where(cell_s == 1, p, 1.0 - p)
    r = params[1 + cell_s]
    rterm = np.where(cell_v == 1, r, 1.0 - r)
    j = params[3 + cell_v]
    jterm = np.where(cell_l == 1, j, 1.0 - j)
    q = params[5 + cell_s * 4 + cell_l * 2 + cell_v]
    qterm = np.where(cell_h == 1, q, 1.0 - q)
    return ((base * rterm) * jterm) * qterm


def latent_pass(gen, params, class_count, cell_off, cell_s, cell_l, cell_v, cell_h,
                latent, reverse: bool) -> None:
    """Resample each class's joint latent completion from its full conditional."""
    weights = cell_weights(params, cell_s, cell_l, cell_v, cell_h)
    n_classes = class_count.shape[0]
    order = range(n_classes - 1, -1, -1) if reverse else range(n_classes)
    for ci in order:
        lo, hi = int(cell_off[ci]), int(cell_off[ci + 1])
        total = 0.0
        for k in range(lo, hi):     # sequential sum, same order as the C lane
            total += weights[k]
        if total <= 0.0:
            if class_count[ci] > 0:
                raise DegenerateWeightsError(
                    f"all conditional weights vanish for class {ci}"
                )
            continue
        pvals = weights[lo:hi] / total
        latent[lo:hi] = gen.multinomial(int(class_count[ci]), pvals)


def record_row(params, cell_v, latent, out_row) -> None:
    """Derived per-sample quantities: t0, e0, observable probabilities, counts."""
    j0 = params[3]
    j1 = params[4]
    t0 = (math.log(j1) - math.log1p(-j1)) - (math.log(j0) - math.log1p(-j0))
    et = math.exp(t0)
    e0 = 100.0 * (1.0 - et / (1.0 + (et - 1.0) * j0))
    p = params[0]
    p_vacc = (1.0 - p) * params[1] + p * params[2]
    p_h = 0.0
    p_lh = 0.0
    for s in (0, 1):
        ps = p if s == 1 else 1.0 - p
        for v in (0, 1):
            rv = params[1 + s] if v == 1 else 1.0 - params[1 + s]
            jv = params[3 + v]
            for l in (0, 1):
                jl = jv if l == 1 else 1.0 - jv
                mass = ((ps * rv) * jl) * params[5 + s * 4 + l * 2 + v]
                p_h += mass
                if l == 1:
                    p_lh += mass
    out_row[COL_T0] = t0
    out_row[COL_E0] = e0
    out_row[COL_PV] = p_vacc
    out_row[COL_PH] = p_h
    out_row[COL_PLH] = p_lh / p_h if p_h > 0.0 else math.nan
    out_row[COL_PARAMS:COL_PARAMS + 13] = params
    n_vacc = int(latent[cell_v == 1].sum())
    out_row[COL_N_UNVACC] = float(int(latent.sum()) - n_vacc)
    out_row[COL_N_VACC] = float(n_vacc)


def sweep(gen, params, prior_a1, prior_a0, class_count, cell_off,
          cell_s, cell_l, cell_v, cell_h, latent) -> int:
    """One palindromic sweep; returns the number of clamped Beta draws."""
    m1, m0 = aggregate_counts(cell_s, cell_l, cell_v, cell_h, latent)
    clamped = conjugate_pass(gen, params, prior_a1, prior_a0, m1, m0, reverse=False)
    latent_pass(gen, params, class_count, cell_off, cell_s, cell_l, cell_v, cell_h,
                latent, reverse=False)
    latent_pass(gen, params, class_count, cell_off, cell_s, cell_l, cell_v, cell_h,
                latent, reverse=True)
    m1, m0 = aggregate_counts(cell_s, cell_l, cell_v, cell_h, latent)
    clamped += conjugate_pass(gen, params, prior_a1, prior_a0, m1, m0, reverse=True)
    return clamped


def run_sweeps(gen, params, prior_a1, prior_a0, class_count, cell_off,
               cell_s, cell_l, cell_v, cell_h, latent,
               n_records: int, thinning: int, out) -> int:
    """Run ``n_records * thinning`` sweeps, recording every ``thinning``-th."""
    clamped = 0
    for rec in range(n_records):
        for _ in range(thinning):
            clamped += sweep(gen, params, prior_a1, prior_a0, class_count, cell_off,
                             cell_s, cell_l, cell_v, cell_h, latent)
        record_row(params, cell_v, latent, out[rec])
    return clamped
