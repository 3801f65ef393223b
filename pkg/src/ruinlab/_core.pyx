# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernels.

Each kernel simulates the replications listed in ``reps`` and writes one
row of ``out`` per replication. Column layouts are shared with
``_core_py`` (the pure-Python twin) and documented in ``kernels.py``.
The GIL is released for the whole replication loop.
"""

from libc.math cimport log1p, INFINITY, NAN
from libc.stdint cimport uint64_t, int64_t

cdef extern from *:
    """
    #include <stdint.h>
    typedef struct {
        uint64_t k0, k1, block;
        uint64_t buf[4];
        int pos;
    } rl_stream;

    static inline void rl_philox(uint64_t c[4], uint64_t k0, uint64_t k1) {
        int i;
        for (i = 0; i < 10; i++) {
            if (i) { k0 += 0x9E3779B97F4A7C15ULL; k1 += 0xBB67AE8584CAA73BULL; }
            unsigned __int128 p0 = (unsigned __int128)0xD2E7470EE14C6C93ULL * c[0];
            unsigned __int128 p1 = (unsigned __int128)0xCA5A826395121157ULL * c[2];
            uint64_t n0 = (uint64_t)(p1 >> 64) ^ c[1] ^ k0;
            uint64_t n1 = (uint64_t)p1;
            uint64_t n2 = (uint64_t)(p0 >> 64) ^ c[3] ^ k1;
            uint64_t n3 = (uint64_t)p0;
            c[0] = n0; c[1] = n1; c[2] = n2; c[3] = n3;
        }
    }

    static inline void rl_init(rl_stream *s, uint64_t seed, uint64_t rep) {
        s->k0 = seed; s->k1 = rep; s->block = 0; s->pos = 4;
    }

    static inline uint64_t rl_raw(rl_stream *s) {
        if (s->pos == 4) {
            s->block += 1;
            s->buf[0] = s->block; s->buf[1] = 0; s->buf[2] = 0; s->buf[3] = 0;
            rl_philox(s->buf, s->k0, s->k1);
            s->pos = 0;
        }
        return s->buf[s->pos++];
    }

    static inline double rl_uniform(rl_stream *s) {
        return (double)(rl_raw(s) >> 11) * 0x1.0p-53;
    }
    """
    ctypedef struct rl_stream:
        uint64_t k0
        uint64_t k1
    void rl_init(rl_stream *s, uint64_t seed, uint64_t rep) nogil
    uint64_t rl_raw(rl_stream *s) nogil
    double rl_uniform(rl_stream *s) nogil


cdef struct Model:
    int m
    int K
    const double *lam1
    const double *lam2
    const double *tot
    const double *c
    const double *cstar
    const double *sw
    const int64_t *kind
    const int64_t *shape
    const double *crate
    const double *hcw
    const double *hr

cdef enum:
    PREMIUM = 0
    CLAIM = 1
    SWITCH = 2


cdef inline double _exp1(rl_stream *s) noexcept nogil:
    return -log1p(-rl_uniform(s))


cdef inline int _step(const Model *md, rl_stream *s, int k, const double *cc,
                      double *dt, double *size, int *newk) noexcept nogil:
    """One event from state k; returns its kind."""
    cdef double v, acc
    cdef int j, last, i, n
    dt[0] = _exp1(s) / md.tot[k]
    v = rl_uniform(s) * md.tot[k]
    newk[0] = k
    if v < md.lam1[k]:
        size[0] = _exp1(s) / cc[k]
        return PREMIUM
    if v < md.lam1[k] + md.lam2[k]:
        if md.kind[k] == 0:
            acc = 0.0
            n = <int>md.shape[k]
            for i in range(n):
                acc += _exp1(s)
            size[0] = acc / md.crate[k]
        else:
            v = rl_uniform(s)
            j = 0
            while j < md.K - 1 and v >= md.hcw[k * md.K + j]:
                j += 1
            size[0] = _exp1(s) / md.hr[k * md.K + j]
        return CLAIM
    v -= md.lam1[k] + md.lam2[k]
    size[0] = 0.0
    last = k
    for j in range(md.m):
        if j == k or md.sw[k * md.m + j] <= 0.0:
            continue
        last = j
        if v < md.sw[k * md.m + j]:
            newk[0] = j
            return SWITCH
        v -= md.sw[k * md.m + j]
    newk[0] = last
    return SWITCH


cdef Model _model(tuple km):
    # pointers stay valid while the caller holds ``km``
    cdef const double[::1] lam1, lam2, tot, c, cstar, crate
    cdef const double[:, ::1] sw, hcw, hr
    cdef const int64_t[::1] kind, shape
    lam1, lam2, tot, c, cstar, sw, kind, shape, crate, hcw, hr = km
    cdef Model md
    md.m = lam1.shape[0]
    md.K = hcw.shape[1]
    md.lam1 = &lam1[0]
    md.lam2 = &lam2[0]
    md.tot = &tot[0]
    md.c = &c[0]
    md.cstar = &cstar[0]
    md.sw = &sw[0, 0]
    md.kind = &kind[0]
    md.shape = &shape[0]
    md.crate = &crate[0]
    md.hcw = &hcw[0, 0]
    md.hr = &hr[0, 0]
    return md


def run_up(tuple km, double u, double horizon, double barrier, bint after,
           uint64_t seed, const int64_t[::1] reps, int init_state, double[:, ::1] out):
    """Upward passage of level u; optionally continue to recovery / safe barrier."""
    cdef Model md = _model(km)
    cdef Py_ssize_t r, n = reps.shape[0]
    cdef rl_stream s
    cdef double x, t, dt, size, sup, red, pre
    cdef int k, nk, kind, status, pstatus, recovered
    cdef long nev
    with nogil:
        for r in range(n):
            rl_init(&s, seed, <uint64_t>reps[r])
            x = 0.0; t = 0.0; k = init_state; nev = 0
            status = 0
            out[r, 1] = NAN; out[r, 2] = NAN; out[r, 3] = NAN; out[r, 4] = -1
            out[r, 6] = NAN; out[r, 7] = NAN; out[r, 8] = NAN; out[r, 9] = -1
            while True:
                kind = _step(&md, &s, k, md.c, &dt, &size, &nk)
                if t + dt > horizon:
                    status = 2
                    break
                t += dt
                nev += 1
                if kind == PREMIUM:
                    x -= size
                    if x <= u - barrier:
                        status = 0
                        break
                elif kind == CLAIM:
                    pre = x
                    x += size
                    if x > u:
                        status = 1
                        out[r, 1] = t; out[r, 2] = pre; out[r, 3] = x; out[r, 4] = k
                        break
                else:
                    k = nk
            if status == 1 and after:
                sup = x; red = 0.0; recovered = 0; pstatus = 0
                while True:
                    kind = _step(&md, &s, k, md.c, &dt, &size, &nk)
                    if t + dt > horizon:
                        pstatus = 2
                        break
                    t += dt
                    nev += 1
                    if not recovered:
                        red += dt
                    if kind == PREMIUM:
                        x -= size
                        if not recovered and x < u:
                            recovered = 1
                            out[r, 6] = t
                            out[r, 7] = red
                        if recovered and x <= sup - barrier:
                            break
                    elif kind == CLAIM:
                        x += size
                        if x > sup:
                            sup = x
                    else:
                        k = nk
                out[r, 8] = sup - u
                out[r, 9] = pstatus
            out[r, 0] = status
            out[r, 5] = nev


def run_down(tuple km, const double[::1] levels, const int64_t[::1] states, double horizon, double barrier,
             uint64_t seed, const int64_t[::1] reps, double[:, ::1] out):
    """Downward passage below levels[r] starting from states[r]."""
    cdef Model md = _model(km)
    cdef Py_ssize_t r, n = reps.shape[0]
    cdef rl_stream s
    cdef double x, t, dt, size, pre, lev
    cdef int k, nk, kind, status
    cdef long nev
    with nogil:
        for r in range(n):
            lev = levels[r]
            k = <int>states[r]
            nev = 0
            if lev > 0.0:
                out[r, 0] = 1; out[r, 1] = 0.0; out[r, 2] = 0.0; out[r, 3] = 0.0
                out[r, 4] = k; out[r, 5] = 0
                continue
            rl_init(&s, seed, <uint64_t>reps[r])
            x = 0.0; t = 0.0
            out[r, 1] = NAN; out[r, 2] = NAN; out[r, 3] = NAN; out[r, 4] = -1
            while True:
                kind = _step(&md, &s, k, md.c, &dt, &size, &nk)
                if t + dt > horizon:
                    status = 2
                    break
                t += dt
                nev += 1
                if kind == PREMIUM:
                    pre = x
                    x -= size
                    if x < lev:
                        status = 1
                        out[r, 1] = t; out[r, 2] = pre; out[r, 3] = x; out[r, 4] = k
                        break
                elif kind == CLAIM:
                    x += size
                    if x - lev >= barrier:
                        status = 0
                        break
                else:
                    k = nk
            out[r, 0] = status
            out[r, 5] = nev


def run_sup(tuple km, double horizon, double barrier, uint64_t seed, const int64_t[::1] reps,
            const int64_t[::1] states, double[:, ::1] out):
    """All-time supremum, stopped once the path is barrier below it."""
    cdef Model md = _model(km)
    cdef Py_ssize_t r, n = reps.shape[0]
    cdef rl_stream s
    cdef double x, t, dt, size, sup
    cdef int k, nk, kind, status
    cdef long nev
    with nogil:
        for r in range(n):
            rl_init(&s, seed, <uint64_t>reps[r])
            x = 0.0; t = 0.0; sup = 0.0; k = <int>states[r]; nev = 0
            while True:
                kind = _step(&md, &s, k, md.c, &dt, &size, &nk)
                if t + dt > horizon:
                    status = 2
                    break
                t += dt
                nev += 1
                if kind == PREMIUM:
                    x -= size
                    if x <= sup - barrier:
                        status = 0
                        break
                elif kind == CLAIM:
                    x += size
                    if x > sup:
                        sup = x
                else:
                    k = nk
            out[r, 0] = status
            out[r, 1] = sup
            out[r, 2] = nev


def run_interval(tuple km, double u, double b, double horizon, uint64_t seed,
                 const int64_t[::1] reps, int init_state, double[:, ::1] out):
    """Exit from (u - b, u): side +1 upper, -1 lower, 0 censored."""
    cdef Model md = _model(km)
    cdef Py_ssize_t r, n = reps.shape[0]
    cdef rl_stream s
    cdef double x, t, dt, size, pre, lo = u - b
    cdef int k, nk, kind, side
    cdef long nev
    with nogil:
        for r in range(n):
            k = init_state
            nev = 0
            if lo >= 0.0:
                out[r, 0] = -1; out[r, 1] = 0.0; out[r, 2] = 0.0; out[r, 3] = 0.0
                out[r, 4] = k; out[r, 5] = 0
                continue
            rl_init(&s, seed, <uint64_t>reps[r])
            x = 0.0; t = 0.0
            out[r, 1] = NAN; out[r, 2] = NAN; out[r, 3] = NAN; out[r, 4] = -1
            while True:
                kind = _step(&md, &s, k, md.c, &dt, &size, &nk)
                if t + dt > horizon:
                    side = 0
                    break
                t += dt
                nev += 1
                if kind == PREMIUM:
                    pre = x
                    x -= size
                    if x <= lo:
                        side = -1
                        out[r, 1] = t; out[r, 2] = pre; out[r, 3] = x; out[r, 4] = k
                        break
                elif kind == CLAIM:
                    pre = x
                    x += size
                    if x >= u:
                        side = 1
                        out[r, 1] = t; out[r, 2] = pre; out[r, 3] = x; out[r, 4] = k
                        break
                else:
                    k = nk
            out[r, 0] = side
            out[r, 5] = nev


def run_modified(tuple km, const double[::1] levels, double a, double b, double horizon, double barrier,
                 uint64_t seed, const int64_t[::1] reps, int init_state, double[:, ::1] out):
    """Two-regime process: premium parameter c until below u-b, cstar until back at u-a."""
    cdef Model md = _model(km)
    cdef Py_ssize_t r, n = reps.shape[0]
    cdef rl_stream s
    cdef double x, t, dt, size, pre, u
    cdef int k, nk, kind, status, reduced
    cdef long nev, nsw
    with nogil:
        for r in range(n):
            u = levels[r]
            rl_init(&s, seed, <uint64_t>reps[r])
            x = 0.0; t = 0.0; k = init_state; nev = 0; nsw = 0
            reduced = 1 if u - b > 0.0 else 0
            out[r, 1] = NAN; out[r, 2] = NAN; out[r, 3] = NAN; out[r, 4] = -1
            while True:
                kind = _step(&md, &s, k, md.cstar if reduced else md.c, &dt, &size, &nk)
                if t + dt > horizon:
                    status = 2
                    break
                t += dt
                nev += 1
                if kind == PREMIUM:
                    x -= size
                    if not reduced and x < u - b:
                        reduced = 1
                        nsw += 1
                    if x <= u - b - barrier:
                        status = 0
                        break
                elif kind == CLAIM:
                    pre = x
                    x += size
                    if x > u:
                        status = 1
                        out[r, 1] = t; out[r, 2] = pre; out[r, 3] = x; out[r, 4] = k
                        break
                    if reduced and x >= u - a:
                        reduced = 0
                        nsw += 1
                else:
                    k = nk
            out[r, 0] = status
            out[r, 5] = nev
            out[r, 6] = nsw


def philox_words(uint64_t seed, uint64_t rep, Py_ssize_t count):
    """First ``count`` raw words of a stream (testing aid)."""
    cdef rl_stream s
    cdef Py_ssize_t i
    rl_init(&s, seed, rep)
    return [rl_raw(&s) for i in range(count)]
