"""Backend selection and parallel dispatch for the path kernels.

The compiled extension ``ruinlab._core`` is used when importable; otherwise
(or with ``RUINLAB_PURE_PYTHON=1``) the pure-Python twin ``_core_py`` runs
instead. Both produce identical rows.

Output columns per kernel
-------------------------
up        status, tau, pre, post, state, n_events, tau_rec, red, zplus, post_status
down      status, tau, pre, post, state, n_events
sup       status, sup, n_events
interval  side, tau, pre, post, state, n_events
modified  status, tau, pre, post, state, n_events, n_switches

``status``: 1 = event happened, 0 = stopped at the safe barrier,
2 = horizon reached. ``side`` for interval: +1 upper, -1 lower, 0 horizon.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _core_py
from .model import as_validated

try:
    if os.environ.get("RUINLAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _core as _compiled
except ImportError:
    _compiled = None

__all__ = ["BACKEND", "backends", "pack", "dispatch", "NCOLS", "CHUNK"]

BACKEND = "cython" if _compiled is not None else "python"
NCOLS = {"up": 10, "down": 6, "sup": 3, "interval": 6, "modified": 7}
CHUNK = 8192


def backends() -> dict:
    """Available backend modules by name."""
    out = {"python": _core_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def pack(model, c_star=None) -> tuple:
    """Flatten a model into the contiguous arrays the kernels read."""
    model = as_validated(model)
    m = model.m
    Q = np.asarray(model.Q)
    lam1 = np.ascontiguousarray(model.lam1, dtype=np.float64)
    lam2 = np.ascontiguousarray(model.lam2, dtype=np.float64)
    tot = lam1 + lam2 + np.abs(np.diag(Q))
    c = np.ascontiguousarray(model.c, dtype=np.float64)
    cstar = c.copy() if c_star is None else np.ascontiguousarray(np.broadcast_to(c_star, (m,)), dtype=np.float64)
    sw = Q.copy()
    np.fill_diagonal(sw, 0.0)
    sw = np.ascontiguousarray(sw)
    K = max(len(cl.rates) if cl.kind == "hyperexp" else 1 for cl in model.claims)
    kind = np.zeros(m, dtype=np.int64)
    shape = np.ones(m, dtype=np.int64)
    crate = np.ones(m)
    hcw = np.ones((m, K))
    hr = np.ones((m, K))
    for k, cl in enumerate(model.claims):
        if cl.kind == "hyperexp":
            kind[k] = 1
            n = len(cl.rates)
            hcw[k, :n] = np.cumsum(cl.weights)
            hcw[k, n:] = 1.0
            hr[k, :n] = cl.rates
            hr[k, n:] = cl.rates[-1]
        else:
            shape[k] = cl.shape
            crate[k] = cl.rate
    return (lam1, lam2, tot, c, cstar, sw, kind, shape, crate, hcw, hr)


def dispatch(name: str, km: tuple, reps, *, args=(), per_rep=(), workers: int = 1,
             backend: str | None = None) -> np.ndarray:
    """Run kernel ``name`` over replication indices ``reps``.

    ``args`` are the scalar kernel arguments and ``per_rep`` the arrays
    sliced along with the replications (see ``call_kernel``). Replications are cut into
    fixed chunks of ``CHUNK`` regardless of ``workers``, and every row is a
    function of its replication index only, so the output does not depend
    on the worker count.
    """
    mod = backends()[backend or BACKEND]
    fn = getattr(mod, f"run_{name}")
    reps = np.ascontiguousarray(reps, dtype=np.int64)
    per_rep = [np.ascontiguousarray(p) for p in per_rep]
    n = reps.shape[0]
    out = np.empty((n, NCOLS[name]), dtype=np.float64)
    if n == 0:
        return out
    slices = [slice(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]

    def call_kernel(sl):
        r = reps[sl]
        o = out[sl]
        if name == "up":
            u, horizon, barrier, after, seed, init_state = args
            fn(km, u, horizon, barrier, after, seed, r, init_state, o)
        elif name == "down":
            horizon, barrier, seed = args
            levels, states = per_rep
            fn(km, levels[sl], states[sl], horizon, barrier, seed, r, o)
        elif name == "sup":
            horizon, barrier, seed = args
            (states,) = per_rep
            fn(km, horizon, barrier, seed, r, states[sl], o)
        elif name == "interval":
            u, b, horizon, seed, init_state = args
            fn(km, u, b, horizon, seed, r, init_state, o)
        elif name == "modified":
            a, b, horizon, barrier, seed, init_state = args
            (levels,) = per_rep
            fn(km, levels[sl], a, b, horizon, barrier, seed, r, init_state, o)
        else:
            raise ValueError(f"unknown kernel {name!r}")

    workers = max(1, int(workers))
    if workers == 1 or len(slices) == 1:
        for sl in slices:
            call_kernel(sl)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(call_kernel, slices))
    return out
