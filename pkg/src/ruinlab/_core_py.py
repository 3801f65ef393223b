"""Pure-Python twin of ``_core``.

Consumes each replication's stream in exactly the same order as the
compiled kernels, so results agree bit for bit. Used when the extension
is not built or ``RUINLAB_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import math

from .rng import RngStream

NAN = math.nan
PREMIUM, CLAIM, SWITCH = 0, 1, 2


class _Model:
    __slots__ = ("m", "K", "lam1", "lam2", "tot", "c", "cstar", "sw", "kind", "shape", "crate", "hcw", "hr")

    def __init__(self, km):
        lam1, lam2, tot, c, cstar, sw, kind, shape, crate, hcw, hr = km
        self.m = len(lam1)
        self.K = hcw.shape[1]
        self.lam1 = lam1.tolist()
        self.lam2 = lam2.tolist()
        self.tot = tot.tolist()
        self.c = c.tolist()
        self.cstar = cstar.tolist()
        self.sw = sw.tolist()
        self.kind = kind.tolist()
        self.shape = shape.tolist()
        self.crate = crate.tolist()
        self.hcw = hcw.tolist()
        self.hr = hr.tolist()


def _exp1(s: RngStream) -> float:
    return -math.log1p(-s.uniform())


def step(md: _Model, s: RngStream, k: int, cc) -> tuple[int, float, float, int]:
    """One event from state k: (kind, holding time, size, next state)."""
    dt = _exp1(s) / md.tot[k]
    v = s.uniform() * md.tot[k]
    if v < md.lam1[k]:
        return PREMIUM, dt, _exp1(s) / cc[k], k
    if v < md.lam1[k] + md.lam2[k]:
        if md.kind[k] == 0:
            acc = 0.0
            for _ in range(md.shape[k]):
                acc += _exp1(s)
            return CLAIM, dt, acc / md.crate[k], k
        v = s.uniform()
        j = 0
        while j < md.K - 1 and v >= md.hcw[k][j]:
            j += 1
        return CLAIM, dt, _exp1(s) / md.hr[k][j], k
    v -= md.lam1[k] + md.lam2[k]
    last = k
    for j in range(md.m):
        rate = md.sw[k][j]
        if j == k or rate <= 0.0:
            continue
        last = j
        if v < rate:
            return SWITCH, dt, 0.0, j
        v -= rate
    return SWITCH, dt, 0.0, last


def run_up(km, u, horizon, barrier, after, seed, reps, init_state, out):
    md = _Model(km)
    for r, rep in enumerate(reps.tolist()):
        s = RngStream(seed, rep)
        x = t = 0.0
        k = init_state
        nev = 0
        status = 0
        row = [0.0, NAN, NAN, NAN, -1, 0, NAN, NAN, NAN, -1]
        while True:
            kind, dt, size, nk = step(md, s, k, md.c)
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
                    row[1:5] = [t, pre, x, k]
                    break
            else:
                k = nk
        if status == 1 and after:
            sup = x
            red = 0.0
            recovered = False
            pstatus = 0
            while True:
                kind, dt, size, nk = step(md, s, k, md.c)
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
                        recovered = True
                        row[6] = t
                        row[7] = red
                    if recovered and x <= sup - barrier:
                        break
                elif kind == CLAIM:
                    x += size
                    if x > sup:
                        sup = x
                else:
                    k = nk
            row[8] = sup - u
            row[9] = pstatus
        row[0] = status
        row[5] = nev
        out[r] = row


def run_down(km, levels, states, horizon, barrier, seed, reps, out):
    md = _Model(km)
    for r, (rep, lev, k) in enumerate(zip(reps.tolist(), levels.tolist(), states.tolist())):
        if lev > 0.0:
            out[r] = [1, 0.0, 0.0, 0.0, k, 0]
            continue
        s = RngStream(seed, rep)
        x = t = 0.0
        nev = 0
        row = [0.0, NAN, NAN, NAN, -1, 0]
        while True:
            kind, dt, size, nk = step(md, s, k, md.c)
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
                    row[1:5] = [t, pre, x, k]
                    break
            elif kind == CLAIM:
                x += size
                if x - lev >= barrier:
                    status = 0
                    break
            else:
                k = nk
        row[0] = status
        row[5] = nev
        out[r] = row


def run_sup(km, horizon, barrier, seed, reps, states, out):
    md = _Model(km)
    for r, (rep, k) in enumerate(zip(reps.tolist(), states.tolist())):
        s = RngStream(seed, rep)
        x = t = sup = 0.0
        nev = 0
        while True:
            kind, dt, size, nk = step(md, s, k, md.c)
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
        out[r] = [status, sup, nev]


def run_interval(km, u, b, horizon, seed, reps, init_state, out):
    md = _Model(km)
    lo = u - b
    for r, rep in enumerate(reps.tolist()):
        k = init_state
        if lo >= 0.0:
            out[r] = [-1, 0.0, 0.0, 0.0, k, 0]
            continue
        s = RngStream(seed, rep)
        x = t = 0.0
        nev = 0
        row = [0.0, NAN, NAN, NAN, -1, 0]
        while True:
            kind, dt, size, nk = step(md, s, k, md.c)
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
                    row[1:5] = [t, pre, x, k]
                    break
            elif kind == CLAIM:
                pre = x
                x += size
                if x >= u:
                    side = 1
                    row[1:5] = [t, pre, x, k]
                    break
            else:
                k = nk
        row[0] = side
        row[5] = nev
        out[r] = row


def run_modified(km, levels, a, b, horizon, barrier, seed, reps, init_state, out, log=None):
    """As the compiled kernel; ``log`` (a list) collects (t, 'down'|'up') switches."""
    md = _Model(km)
    for r, (rep, u) in enumerate(zip(reps.tolist(), levels.tolist())):
        s = RngStream(seed, rep)
        x = t = 0.0
        k = init_state
        nev = nsw = 0
        reduced = u - b > 0.0
        row = [0.0, NAN, NAN, NAN, -1, 0, 0]
        while True:
            kind, dt, size, nk = step(md, s, k, md.cstar if reduced else md.c)
            if t + dt > horizon:
                status = 2
                break
            t += dt
            nev += 1
            if kind == PREMIUM:
                x -= size
                if not reduced and x < u - b:
                    reduced = True
                    nsw += 1
                    if log is not None:
                        log.append((t, "down"))
                if x <= u - b - barrier:
                    status = 0
                    break
            elif kind == CLAIM:
                pre = x
                x += size
                if x > u:
                    status = 1
                    row[1:5] = [t, pre, x, k]
                    break
                if reduced and x >= u - a:
                    reduced = False
                    nsw += 1
                    if log is not None:
                        log.append((t, "up"))
            else:
                k = nk
        row[0] = status
        row[5] = nev
        row[6] = nsw
        out[r] = row


def philox_words(seed, rep, count):
    s = RngStream(seed, rep)
    return [s.raw() for _ in range(count)]
