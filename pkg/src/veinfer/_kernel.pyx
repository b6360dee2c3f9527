# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep kernel.

Mirrors ``_kernel_py.run_sweeps`` operation for operation, drawing through
the same numpy C distribution functions (`random_beta`,
`random_multinomial`) on the caller's PCG64 bit generator, so both lanes
produce bit-identical chains from the same seed.  Any change to draw order
or floating-point evaluation order here must be applied to the Python lane
too, and vice versa.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport exp, log, log1p
from libc.string cimport memset
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (binomial_t, random_beta,
                                           random_multinomial)

from .errors import DegenerateWeightsError

cnp.import_array()

KERNEL_NAME = "cython"

cdef double CLAMP_LO = 1e-12
cdef double CLAMP_HI = 1.0 - 1e-12

# Trace column layout; keep in sync with _kernel_py.
cdef int COL_T0 = 0
cdef int COL_E0 = 1
cdef int COL_PV = 2
cdef int COL_PH = 3
cdef int COL_PLH = 4
cdef int COL_PARAMS = 5
cdef int COL_N_UNVACC = 18
cdef int COL_N_VACC = 19


cdef inline double _beta_clamped(bitgen_t *rng, double a1, double a0, long *clamped) noexcept nogil:
    cdef double x = random_beta(rng, a1, a0)
    if x < CLAMP_LO:
        clamped[0] += 1
        return CLAMP_LO
    if x > CLAMP_HI:
        clamped[0] += 1
        return CLAMP_HI
    return x


cdef void _aggregate(cnp.int64_t[::1] cell_s, cnp.int64_t[::1] cell_l,
                     cnp.int64_t[::1] cell_v, cnp.int64_t[::1] cell_h,
                     cnp.int64_t[::1] latent, cnp.int64_t *m1, cnp.int64_t *m0) noexcept nogil:
    cdef Py_ssize_t k
    cdef cnp.int64_t n
    cdef cnp.int64_t s, l, v, h
    cdef int idx
    for idx in range(13):
        m1[idx] = 0
        m0[idx] = 0
    for k in range(cell_s.shape[0]):
        n = latent[k]
        s = cell_s[k]
        l = cell_l[k]
        v = cell_v[k]
        h = cell_h[k]
        if s == 1:
            m1[0] += n
        else:
            m0[0] += n
        if v == 1:
            m1[1 + s] += n
        else:
            m0[1 + s] += n
        if l == 1:
            m1[3 + v] += n
        else:
            m0[3 + v] += n
        if h == 1:
            m1[5 + s * 4 + l * 2 + v] += n
        else:
            m0[5 + s * 4 + l * 2 + v] += n


cdef long _conjugate_pass(bitgen_t *rng, double[::1] params,
                          double[::1] prior_a1, double[::1] prior_a0,
                          cnp.int64_t *m1, cnp.int64_t *m0, bint reverse) noexcept nogil:
    cdef long clamped = 0
    cdef int idx
    if reverse:
        for idx in range(12, -1, -1):
            params[idx] = _beta_clamped(rng, prior_a1[idx] + <double> m1[idx],
                                        prior_a0[idx] + <double> m0[idx], &clamped)
    else:
        for idx in range(13):
            params[idx] = _beta_clamped(rng, prior_a1[idx] + <double> m1[idx],
                                        prior_a0[idx] + <double> m0[idx], &clamped)
    return clamped


cdef inline double _cell_weight(double[::1] params, cnp.int64_t s, cnp.int64_t l,
                                cnp.int64_t v, cnp.int64_t h) noexcept nogil:
    # Same multiplication order as the Python lane: ((s * r) * j) * q.
    cdef double w = params[0] if s == 1 else 1.0 - params[0]
    cdef double r = params[1 + s]
    w = w * (r if v == 1 else 1.0 - r)
    cdef double j = params[3 + v]
    w = w * (j if l == 1 else 1.0 - j)
    cdef double q = params[5 + s * 4 + l * 2 + v]
    w = w * (q if h == 1 else 1.0 - q)
    return w


cdef int _class_update(bitgen_t *rng, double[::1] params, cnp.int64_t count,
                       Py_ssize_t lo, Py_ssize_t hi,
                       cnp.int64_t[::1] cell_s, cnp.int64_t[::1] cell_l,
                       cnp.int64_t[::1] cell_v, cnp.int64_t[::1] cell_h,
                       cnp.int64_t[::1] latent, binomial_t *binom) noexcept nogil:
    cdef double w[8]
    cdef double pvals[8]
    cdef cnp.int64_t draw[8]
    cdef Py_ssize_t k
    cdef Py_ssize_t n_cells = hi - lo
    cdef double total = 0.0
    for k in range(n_cells):
        w[k] = _cell_weight(params, cell_s[lo + k], cell_l[lo + k],
                            cell_v[lo + k], cell_h[lo + k])
        total += w[k]
    if total <= 0.0:
        if count > 0:
            return -1
        return 0
    for k in range(n_cells):
        pvals[k] = w[k] / total
        # random_multinomial leaves trailing categories untouched when the
        # count is exhausted early; it expects a zeroed output buffer.
        draw[k] = 0
    random_multinomial(rng, count, &draw[0], &pvals[0], n_cells, binom)
    for k in range(n_cells):
        latent[lo + k] = draw[k]
    return 0


cdef int _latent_pass(bitgen_t *rng, double[::1] params,
                      cnp.int64_t[::1] class_count, cnp.int64_t[::1] cell_off,
                      cnp.int64_t[::1] cell_s, cnp.int64_t[::1] cell_l,
                      cnp.int64_t[::1] cell_v, cnp.int64_t[::1] cell_h,
                      cnp.int64_t[::1] latent, binomial_t *binom, bint reverse) noexcept nogil:
    cdef Py_ssize_t n_classes = class_count.shape[0]
    cdef Py_ssize_t ci
    cdef int rc
    if reverse:
        for ci in range(n_classes - 1, -1, -1):
            rc = _class_update(rng, params, class_count[ci], cell_off[ci], cell_off[ci + 1],
                               cell_s, cell_l, cell_v, cell_h, latent, binom)
            if rc != 0:
                return rc
    else:
        for ci in range(n_classes):
            rc = _class_update(rng, params, class_count[ci], cell_off[ci], cell_off[ci + 1],
                               cell_s, cell_l, cell_v, cell_h, latent, binom)
            if rc != 0:
                return rc
    return 0


cdef void _record(double[::1] params, cnp.int64_t[::1] cell_v, cnp.int64_t[::1] latent,
                  double[:, ::1] out, Py_ssize_t rec) noexcept nogil:
    cdef double j0 = params[3]
    cdef double j1 = params[4]
    cdef double t0 = (log(j1) - log1p(-j1)) - (log(j0) - log1p(-j0))
    cdef double et = exp(t0)
    cdef double e0 = 100.0 * (1.0 - et / (1.0 + (et - 1.0) * j0))
    cdef double p = params[0]
    cdef double p_vacc = (1.0 - p) * params[1] + p * params[2]
    cdef double p_h = 0.0
    cdef double p_lh = 0.0
    cdef double ps, rv, jv, jl, mass
    cdef int s, v, l
    for s in range(2):
        ps = p if s == 1 else 1.0 - p
        for v in range(2):
            rv = params[1 + s] if v == 1 else 1.0 - params[1 + s]
            jv = params[3 + v]
            for l in range(2):
                jl = jv if l == 1 else 1.0 - jv
                mass = ((ps * rv) * jl) * params[5 + s * 4 + l * 2 + v]
                p_h += mass
                if l == 1:
                    p_lh += mass
    cdef cnp.int64_t n_vacc = 0
    cdef cnp.int64_t n_total = 0
    cdef Py_ssize_t k
    for k in range(latent.shape[0]):
        n_total += latent[k]
        if cell_v[k] == 1:
            n_vacc += latent[k]
    out[rec, COL_T0] = t0
    out[rec, COL_E0] = e0
    out[rec, COL_PV] = p_vacc
    out[rec, COL_PH] = p_h
    out[rec, COL_PLH] = p_lh / p_h
    for k in range(13):
        out[rec, COL_PARAMS + k] = params[k]
    out[rec, COL_N_UNVACC] = <double> (n_total - n_vacc)
    out[rec, COL_N_VACC] = <double> n_vacc


def run_sweeps(gen, double[::1] params, double[::1] prior_a1, double[::1] prior_a0,
               cnp.int64_t[::1] class_count, cnp.int64_t[::1] cell_off,
               cnp.int64_t[::1] cell_s, cnp.int64_t[::1] cell_l,
               cnp.int64_t[::1] cell_v, cnp.int64_t[::1] cell_h,
               cnp.int64_t[::1] latent,
               Py_ssize_t n_records, Py_ssize_t thinning, double[:, ::1] out):
    """Run ``n_records * thinning`` palindromic sweeps, recording every
    ``thinning``-th; returns the number of clamped Beta draws."""
    cdef bitgen_t *rng
    cdef binomial_t binom
    cdef const char *capsule_name = "BitGenerator"
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, capsule_name):
        raise ValueError("invalid bit-generator capsule")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, capsule_name)
    memset(&binom, 0, sizeof(binom))

    cdef cnp.int64_t m1[13]
    cdef cnp.int64_t m0[13]
    cdef long clamped = 0
    cdef Py_ssize_t rec, t
    cdef int rc = 0
    with nogil:
        for rec in range(n_records):
            for t in range(thinning):
                _aggregate(cell_s, cell_l, cell_v, cell_h, latent, m1, m0)
                clamped += _conjugate_pass(rng, params, prior_a1, prior_a0, m1, m0, False)
                rc = _latent_pass(rng, params, class_count, cell_off,
                                  cell_s, cell_l, cell_v, cell_h, latent, &binom, False)
                if rc != 0:
                    break
                rc = _latent_pass(rng, params, class_count, cell_off,
                                  cell_s, cell_l, cell_v, cell_h, latent, &binom, True)
                if rc != 0:
                    break
                _aggregate(cell_s, cell_l, cell_v, cell_h, latent, m1, m0)
                clamped += _conjugate_pass(rng, params, prior_a1, prior_a0, m1, m0, True)
            if rc != 0:
                break
            _record(params, cell_v, latent, out, rec)
    if rc != 0:
        raise DegenerateWeightsError("all conditional weights vanish for a non-empty class")
    return int(clamped)
