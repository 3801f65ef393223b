"""Event-driven Monte Carlo for the Markov-modulated risk process.

Paths are piecewise constant between events, so every crossing happens at
a jump and is detected exactly. Replication ``i`` of a run with master seed
``seed`` draws from the Philox stream keyed by ``(seed, i)``; estimates are
therefore identical for any worker count.

Infinite-horizon quantities are made finite by a safe barrier: a path that
falls ``barrier`` below the level of interest is declared safe. The
resulting bias is bounded by the supremum tail at ``barrier``, which decays
like ``exp(-r1 * barrier)``; the default barrier is ``25 / r1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _core_py
from .analytic import UnsupportedModelError, adjustment_coefficient, sup_law
from .kernels import dispatch, pack
from .model import ValidatedModel, as_validated, drift
from .rng import RngStream, derive_seed, make_stream

__all__ = [
    "DEFAULT_SEED",
    "make_stream",
    "EventRecord",
    "PassageOutcome",
    "IntervalExitOutcome",
    "ModifiedOutcome",
    "MCEstimate",
    "OverjumpSample",
    "RecoveryRedResult",
    "step_event",
    "simulate_path",
    "events_to_csv",
    "path_extrema",
    "default_barrier",
    "first_passage_up",
    "first_passage_down",
    "interval_exit",
    "simulate_modified",
    "estimate_ruin",
    "estimate_sup_cdf",
    "estimate_overjump",
    "estimate_total_deficit",
    "total_deficit_composed",
    "estimate_recovery_red",
    "red_period_composed",
    "estimate_exit_low",
    "interval_exit_batch",
    "estimate_modified_ruin",
    "modified_batch",
    "modified_ruin_composed",
]

DEFAULT_SEED = 20240611
KINDS = ("premium", "claim", "switch")
_INF = math.inf


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean with standard error ``std / sqrt(n)``.

    ``censored_frac`` is the share of replications stopped by the time
    horizon before the event was resolved; ``bias_bound`` bounds the bias
    from the safe-barrier rule.
    """

    value: float
    stderr: float
    n: int
    censored_frac: float
    seed: int
    bias_bound: float = 0.0

    def z(self, reference: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.value == reference else math.copysign(math.inf, self.value - reference)
        return (self.value - reference) / self.stderr


def _summarize(values: np.ndarray, censored: np.ndarray | float, seed: int, bias: float = 0.0) -> MCEstimate:
    n = values.shape[0]
    mean = float(np.mean(values)) if n else math.nan
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    cf = float(np.mean(censored)) if isinstance(censored, np.ndarray) else float(censored)
    return MCEstimate(mean, sd / math.sqrt(n) if n else math.nan, n, cf, int(seed), float(bias))


# ---------------------------------------------------------------------------
# single events and paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventRecord:
    time: float
    kind: str
    size: float
    state_before: int
    state_after: int


def _checked_state(model: ValidatedModel, state: int) -> int:
    if not 0 <= state < model.m:
        raise ValueError(f"state index {state} outside 0..{model.m - 1}")
    return int(state)


def step_event(model, state: int, stream: RngStream, c=None) -> EventRecord:
    """Draw the next event from ``state``; ``time`` is the holding time.

    ``c`` overrides the premium parameters (used by the reduced regime).
    """
    model = as_validated(model)
    state = _checked_state(model, state)
    md = _core_py._Model(pack(model))
    if md.tot[state] <= 0:
        raise ValueError(f"state {state} is frozen (total event rate 0)")
    cc = md.c if c is None else list(np.broadcast_to(np.asarray(c, dtype=float), (model.m,)))
    kind, dt, size, nk = _core_py.step(md, stream, state, cc)
    return EventRecord(dt, KINDS[kind], size, state, nk)


def simulate_path(model, stream: RngStream, *, horizon: float | None = None,
                  max_events: int | None = None, state: int = 0) -> list[EventRecord]:
    """Event log (absolute times) up to ``horizon`` or ``max_events``."""
    if horizon is None and max_events is None:
        raise ValueError("give horizon or max_events")
    model = as_validated(model)
    state = _checked_state(model, state)
    md = _core_py._Model(pack(model))
    if md.tot[state] <= 0:
        raise ValueError(f"state {state} is frozen (total event rate 0)")
    horizon = _INF if horizon is None else horizon
    max_events = max_events if max_events is not None else 2**62
    t = 0.0
    log = []
    while len(log) < max_events:
        kind, dt, size, nk = _core_py.step(md, stream, state, md.c)
        if t + dt > horizon:
            break
        t += dt
        log.append(EventRecord(t, KINDS[kind], size, state, nk))
        state = nk
    return log


def events_to_csv(events) -> str:
    lines = ["t,kind,size,state_before,state_after"]
    lines += [f"{e.time!r},{e.kind},{e.size!r},{e.state_before},{e.state_after}" for e in events]
    return "\n".join(lines) + "\n"


def path_extrema(events, t: float) -> tuple[float, float, float]:
    """(sup, inf, xi - sup) of the path on [0, t]; xi(0) = 0."""
    x = sup = inf = 0.0
    for e in events:
        if e.time > t:
            break
        if e.kind == "claim":
            x += e.size
        elif e.kind == "premium":
            x -= e.size
        sup = max(sup, x)
        inf = min(inf, x)
    return sup, inf, x - sup


# ---------------------------------------------------------------------------
# outcomes of single replications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PassageOutcome:
    """First passage over ``level``. ``censor`` is None, 'barrier' or 'horizon'."""

    crossed: bool
    level: float
    direction: str
    tau: float = math.nan
    pre: float = math.nan
    post: float = math.nan
    state: int = -1
    censor: str | None = None

    @property
    def overshoot(self) -> float:
        """gamma^+ = post - level (up) or level - post (down)."""
        return self.post - self.level if self.direction == "up" else self.level - self.post

    @property
    def undershoot(self) -> float:
        """gamma_+ = level - pre (up) or pre - level (down)."""
        return self.level - self.pre if self.direction == "up" else self.pre - self.level


_CENSOR = {0: "barrier", 2: "horizon"}


def _passage(row, level, direction) -> PassageOutcome:
    status = int(row[0])
    if status == 1:
        return PassageOutcome(True, level, direction, row[1], row[2], row[3], int(row[4]))
    return PassageOutcome(False, level, direction, censor=_CENSOR[status])


def _horizon(h):
    return _INF if h is None else float(h)


def default_barrier(model) -> float:
    """25 / r1 with r1 the adjustment coefficient."""
    r1 = adjustment_coefficient(model)
    return 25.0 / r1 if math.isfinite(r1) else 0.0


def _barrier(model, barrier, horizon) -> float:
    if barrier is not None:
        if barrier <= 0:
            raise ValueError("barrier must be > 0")
        return float(barrier)
    if drift(model).stationary < 0:
        return default_barrier(model)
    if horizon is None or not math.isfinite(horizon):
        raise ValueError("non-negative drift: the safe barrier is biased; pass an explicit finite horizon")
    warnings.warn("non-negative drift: no safe barrier, paths run to the horizon")
    return _INF


def _bias_bound(model, barrier: float) -> float:
    """Bound on P{sup > barrier}, the worst error of one barrier decision."""
    if not math.isfinite(barrier):
        return 0.0
    if model.m == 1:
        try:
            law = sup_law(model)
        except UnsupportedModelError:
            return math.nan
        if law.rates.size == 0:
            return 0.0
        return float(np.sum(np.abs(law.weights)) * math.exp(-law.rates[0] * barrier))
    r1 = adjustment_coefficient(model)
    return math.exp(-r1 * barrier)


def first_passage_up(model, u: float, stream: RngStream, *, horizon=None, barrier=None,
                     state: int = 0) -> PassageOutcome:
    """tau^+(u) = inf{t : xi(t) > u} on one replication."""
    if u < 0:
        raise ValueError("u must be >= 0")
    model = as_validated(model)
    state = _checked_state(model, state)
    hz = _horizon(horizon)
    if barrier is None and drift(model).stationary >= 0:
        L = _INF  # crossing is certain
    else:
        L = _barrier(model, barrier, horizon)
    out = dispatch("up", pack(model), [stream.replication], args=(u, hz, L, False, stream.seed, state))
    return _passage(out[0], u, "up")


def first_passage_down(model, x: float, stream: RngStream, *, horizon=None, barrier=None,
                       state: int = 0) -> PassageOutcome:
    """tau^-(x) = inf{t : xi(t) < x}; immediate (tau = 0) for x > 0."""
    model = as_validated(model)
    state = _checked_state(model, state)
    L = _INF if barrier is None else float(barrier)
    out = dispatch("down", pack(model), [stream.replication], args=(_horizon(horizon), L, stream.seed),
                   per_rep=(np.array([x], float), np.array([state], np.int64)))
    return _passage(out[0], x, "down")


@dataclass(frozen=True)
class IntervalExitOutcome:
    """Exit from (u - b, u). ``side`` is 'A+', 'A-' or None (horizon)."""

    side: str | None
    tau: float
    overshoot: float
    undershoot: float
    state: int


def _check_interval(u, b):
    if u <= 0 or u > b:
        raise ValueError(f"need 0 < u <= b, got u={u}, b={b}")


def interval_exit(model, u: float, b: float, stream: RngStream, *, horizon=None,
                  state: int = 0) -> IntervalExitOutcome:
    """First exit of xi from (u - b, u); u == b is an immediate lower exit."""
    _check_interval(u, b)
    model = as_validated(model)
    state = _checked_state(model, state)
    row = dispatch("interval", pack(model), [stream.replication],
                   args=(u, b, _horizon(horizon), stream.seed, state))[0]
    side = int(row[0])
    lo = u - b
    if side == 1:
        return IntervalExitOutcome("A+", row[1], row[3] - u, u - row[2], int(row[4]))
    if side == -1:
        return IntervalExitOutcome("A-", row[1], lo - row[3], row[2] - lo, int(row[4]))
    return IntervalExitOutcome(None, math.nan, math.nan, math.nan, -1)


@dataclass(frozen=True)
class ModifiedOutcome:
    """Ruin of the two-regime process; ``switches`` holds (time, 'down'|'up')."""

    ruined: bool
    tau: float
    undershoot: float
    overshoot: float
    switches: tuple = field(default=())
    censor: str | None = None
    n_events: int = 0


def _check_pair(model, model_star):
    model, model_star = as_validated(model), as_validated(model_star)
    if model.m != model_star.m:
        raise ValueError("model and model_star must have the same number of states")
    if model.spec.chain != model_star.spec.chain:
        raise ValueError("model and model_star must share the generator Q")
    for k, (s, t) in enumerate(zip(model.states, model_star.states)):
        if (s.lambda1, s.lambda2, s.claim) != (t.lambda1, t.lambda2, t.claim):
            raise ValueError(f"state {k + 1}: model and model_star may differ only in the premium parameter c")
    return model, model_star


def _check_modified(u, a, b):
    if not 0 < a <= b:
        raise ValueError(f"need 0 < a <= b, got a={a}, b={b}")
    if u <= 0:
        raise ValueError("u must be > 0")


def _modified_barrier(model, model_star, barrier, horizon) -> float:
    if barrier is not None:
        return _barrier(model, barrier, horizon)
    if drift(model).stationary < 0 and drift(model_star).stationary < 0:
        return max(default_barrier(model), default_barrier(model_star))
    if horizon is None or not math.isfinite(horizon):
        raise ValueError("non-negative drift in a regime: pass an explicit finite horizon")
    return _INF


def simulate_modified(model, model_star, u: float, a: float, b: float, stream: RngStream, *,
                      horizon=None, barrier=None, state: int = 0) -> ModifiedOutcome:
    """One path of the two-regime process started at xi = 0 below the reserve u.

    The premium parameter is C until the path first goes below u - b, then
    C_* until it climbs back to u - a, and so on. For u > b the start
    already lies below u - b, so the path starts in the reduced regime.
    Ruin is the first time the path exceeds u.
    """
    _check_modified(u, a, b)
    model, model_star = _check_pair(model, model_star)
    state = _checked_state(model, state)
    L = _modified_barrier(model, model_star, barrier, horizon)
    km = pack(model, c_star=model_star.c)
    out = np.empty((1, 7))
    log: list = []
    _core_py.run_modified(km, np.array([u], float), a, b, _horizon(horizon), L, stream.seed,
                          np.array([stream.replication], np.int64), state, out, log=log)
    row = out[0]
    status = int(row[0])
    if status == 1:
        return ModifiedOutcome(True, row[1], u - row[2], row[3] - u, tuple(log), None, int(row[5]))
    return ModifiedOutcome(False, math.nan, math.nan, math.nan, tuple(log), _CENSOR[status], int(row[5]))


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def _reps(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.arange(n, dtype=np.int64)


def _run_up(model, u, n, seed, horizon, barrier, after, workers, backend, state):
    if u < 0:
        raise ValueError("u must be >= 0")
    model = as_validated(model)
    state = _checked_state(model, state)
    L = _barrier(model, barrier, horizon)
    out = dispatch("up", pack(model), _reps(n), args=(u, _horizon(horizon), L, after, seed, state),
                   workers=workers, backend=backend)
    return out, L


def estimate_ruin(model, u: float, n: int = 1_000_000, *, seed: int = DEFAULT_SEED, horizon=None,
                  barrier=None, workers: int = 1, backend=None, state: int = 0) -> MCEstimate:
    """P{tau^+(u) < inf}."""
    model = as_validated(model)
    if np.all(model.lam2 == 0):
        _reps(n)
        return MCEstimate(0.0, 0.0, n, 0.0, seed)
    out, L = _run_up(model, u, n, seed, horizon, barrier, False, workers, backend, state)
    return _summarize((out[:, 0] == 1).astype(float), out[:, 0] == 2, seed, _bias_bound(model, L))


def estimate_sup_cdf(model, u_grid, n: int = 1_000_000, *, seed: int = DEFAULT_SEED, horizon=None,
                     barrier=None, workers: int = 1, backend=None, state: int = 0) -> list[MCEstimate]:
    """P{xi^+ < u} over a grid, from one set of supremum samples."""
    model = as_validated(model)
    L = _barrier(model, barrier, horizon)
    sups = _sup_samples(model, n, seed, horizon, L, workers, backend, np.full(n, state, np.int64))
    cens = sups[:, 0] == 2
    bias = _bias_bound(model, L)
    return [_summarize((sups[:, 1] < u).astype(float), cens, seed, bias) for u in np.atleast_1d(u_grid)]


def _sup_samples(model, n, seed, horizon, L, workers, backend, states):
    return dispatch("sup", pack(model), _reps(n), args=(_horizon(horizon), L, seed), per_rep=(states,),
                    workers=workers, backend=backend)


@dataclass(frozen=True)
class OverjumpSample:
    """Weighted sample of (gamma_+(u), gamma^+(u)) with weights exp(-s tau^+) on ruin.

    Entries for non-ruined replications have weight 0 and NaN sizes.
    """

    u: float
    s: float
    undershoot: np.ndarray
    overshoot: np.ndarray
    weights: np.ndarray
    state: np.ndarray
    censored: np.ndarray
    seed: int
    bias_bound: float

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def mass(self) -> MCEstimate:
        return _summarize(self.weights, self.censored, self.seed, self.bias_bound)

    def _marginal(self, sizes, grid) -> np.ndarray:
        ruined = self.weights > 0
        y, w = sizes[ruined], self.weights[ruined]
        order = np.argsort(y, kind="stable")
        y, cw = y[order], np.concatenate([[0.0], np.cumsum(w[order])])
        return cw[np.searchsorted(y, np.asarray(grid, float), side="right")] / self.n

    def overshoot_cdf(self, grid) -> np.ndarray:
        """Weighted measure of {gamma^+ <= y} for y in grid."""
        return self._marginal(self.overshoot, grid)

    def undershoot_cdf(self, grid) -> np.ndarray:
        return self._marginal(self.undershoot, grid)

    def joint(self, x_edges, y_edges) -> np.ndarray:
        """Weighted 2-d histogram (mass per cell, normalized by n)."""
        ruined = self.weights > 0
        h, _, _ = np.histogram2d(self.undershoot[ruined], self.overshoot[ruined], bins=[x_edges, y_edges],
                                 weights=self.weights[ruined])
        return h / self.n


def estimate_overjump(model, u: float, s: float = 0.0, n: int = 1_000_000, *, seed: int = DEFAULT_SEED,
                      horizon=None, barrier=None, workers: int = 1, backend=None,
                      state: int = 0) -> OverjumpSample:
    """Weighted empirical law of (gamma_+(u), gamma^+(u)) on {tau^+(u) < inf}."""
    if s < 0:
        raise ValueError("s must be >= 0")
    model = as_validated(model)
    out, L = _run_up(model, u, n, seed, horizon, barrier, False, workers, backend, state)
    ruined = out[:, 0] == 1
    w = np.where(ruined, np.exp(-s * np.where(ruined, out[:, 1], 0.0)), 0.0)
    return OverjumpSample(u, s, u - out[:, 2], out[:, 3] - u, w, out[:, 4].astype(np.int64), out[:, 0] == 2,
                          seed, _bias_bound(model, L))


def _require_negative(model, what):
    if not drift(model).stationary < 0:
        raise ValueError(f"{what} needs negative stationary drift")


def estimate_total_deficit(model, u: float, x_grid, n: int = 1_000_000, *, seed: int = DEFAULT_SEED,
                           horizon=None, barrier=None, workers: int = 1, backend=None,
                           state: int = 0) -> list[MCEstimate]:
    """P{z^+(u) < x, tau^+(u) < inf} for x in ``x_grid``; z^+ is the post-ruin supremum minus u."""
    model = as_validated(model)
    _require_negative(model, "estimate_total_deficit")
    x_grid = np.atleast_1d(np.asarray(x_grid, float))
    if np.any(x_grid <= 0):
        raise ValueError("x-grid must be positive")
    out, L = _run_up(model, u, n, seed, horizon, barrier, True, workers, backend, state)
    ruined = out[:, 0] == 1
    z = np.where(ruined, out[:, 8], _INF)
    cens = (out[:, 0] == 2) | (ruined & (out[:, 9] == 2))
    bias = _bias_bound(model, L)
    return [_summarize((z < x).astype(float), cens, seed, bias) for x in x_grid]


def total_deficit_composed(model, u: float, x_grid, n: int = 1_000_000, *, seed: int = DEFAULT_SEED,
                           n_sup: int | None = None, horizon=None, barrier=None, workers: int = 1,
                           backend=None, state: int = 0) -> list[MCEstimate]:
    """int g(dy/u) P{xi^+ < x - y}, both factors estimated by simulation.

    Overshoots come from first-passage runs with ``seed``; the supremum law
    from independent runs (seed derived from ``seed``) started in each
    chain state, since the post-ruin path restarts from the crossing state.
    The standard error treats the supremum CDF as fixed.
    """
    model = as_validated(model)
    _require_negative(model, "total_deficit_composed")
    x_grid = np.atleast_1d(np.asarray(x_grid, float))
    out, L = _run_up(model, u, n, seed, horizon, barrier, False, workers, backend, state)
    ruined = out[:, 0] == 1
    y = out[ruined, 3] - u
    ks = out[ruined, 4].astype(np.int64)
    n_sup = n if n_sup is None else n_sup
    sup_seed = derive_seed(seed, 1)
    vals = np.zeros((len(x_grid), n))
    idx = np.flatnonzero(ruined)
    sup_cens = 0.0
    for k in np.unique(ks):
        sel = ks == k
        sups = _sup_samples(model, n_sup, derive_seed(sup_seed, int(k)), horizon, L, workers, backend,
                            np.full(n_sup, k, np.int64))
        sup_cens = max(sup_cens, float(np.mean(sups[:, 0] == 2)))
        srt = np.sort(sups[:, 1])
        for j, x in enumerate(x_grid):
            vals[j, idx[sel]] = np.searchsorted(srt, x - y[sel], side="left") / n_sup
    cens = (out[:, 0] == 2).astype(float)
    bias = 2 * _bias_bound(model, L)
    return [_summarize(v, np.maximum(cens, sup_cens), seed, bias) for v in vals]


@dataclass(frozen=True)
class RecoveryRedResult:
    """E[e^{-s tau'}; tau' < inf] and E[e^{-s T'}; T' < inf] with path data.

    ``pathwise_error`` is max |T' - (tau' - tau^+)| over recovered paths; the
    two sides come from separate accumulators, so it is a rounding-level
    quantity (see ``pathwise_tolerance``).
    """

    recovery: MCEstimate
    red: MCEstimate
    tau: np.ndarray
    tau_rec: np.ndarray
    red_time: np.ndarray
    n_events: np.ndarray
    pathwise_error: float
    pathwise_tolerance: float


def estimate_recovery_red(model, u: float, s: float, n: int = 1_000_000, *, seed: int = DEFAULT_SEED,
                          horizon=None, barrier=None, workers: int = 1, backend=None,
                          state: int = 0) -> RecoveryRedResult:
    """Recovery time tau'(u) and red period T'(u) = tau'(u) - tau^+(u) transforms."""
    if s <= 0:
        raise ValueError("s must be > 0")
    model = as_validated(model)
    _require_negative(model, "estimate_recovery_red")
    out, L = _run_up(model, u, n, seed, horizon, barrier, True, workers, backend, state)
    rec = (out[:, 0] == 1) & ~np.isnan(out[:, 6])
    tau_rec = np.where(rec, out[:, 6], 0.0)
    red = np.where(rec, out[:, 7], 0.0)
    cens = (out[:, 0] == 2) | ((out[:, 0] == 1) & ~rec)
    bias = _bias_bound(model, L)
    v_rec = np.where(rec, np.exp(-s * tau_rec), 0.0)
    v_red = np.where(rec, np.exp(-s * red), 0.0)
    tau = out[rec, 1]
    diff = np.abs(out[rec, 7] - (out[rec, 6] - tau))
    err = float(np.max(diff)) if diff.size else 0.0
    tol = float(np.max(out[rec, 5] * out[rec, 6])) * np.finfo(float).eps * 4 if diff.size else 0.0
    return RecoveryRedResult(_summarize(v_rec, cens, seed, bias), _summarize(v_red, cens, seed, bias),
                             tau, out[rec, 6], out[rec, 7], out[rec, 5], err, tol)


def red_period_composed(model, u: float, s: float, n: int = 1_000_000, *, seed: int = DEFAULT_SEED,
                        horizon=None, barrier=None, workers: int = 1, backend=None,
                        state: int = 0) -> MCEstimate:
    """int P{gamma^+(u) in dy, k} E_k[e^{-s tau^-(-y)}]: the red period decomposed.

    After ruin with overshoot y the time to get back below u is a fresh
    downward passage to level -y started in the crossing state. Overshoots
    use ``seed``; passages use an independent derived seed.
    """
    if s <= 0:
        raise ValueError("s must be > 0")
    model = as_validated(model)
    _require_negative(model, "red_period_composed")
    out, L = _run_up(model, u, n, seed, horizon, barrier, False, workers, backend, state)
    ruined = out[:, 0] == 1
    idx = np.flatnonzero(ruined)
    levels = -(out[idx, 3] - u)
    states = out[idx, 4].astype(np.int64)
    down = dispatch("down", pack(model), idx, args=(_horizon(horizon), _INF, derive_seed(seed, 2)),
                    per_rep=(levels, states), workers=workers, backend=backend)
    vals = np.zeros(n)
    ok = down[:, 0] == 1
    vals[idx[ok]] = np.exp(-s * down[ok, 1])
    cens = (out[:, 0] == 2).astype(float)
    cens[idx[down[:, 0] == 2]] = 1.0
    return _summarize(vals, cens, seed, _bias_bound(model, L))


def interval_exit_batch(model, u: float, b: float, n: int = 1_000_000, *, seed: int = DEFAULT_SEED,
                        horizon=None, workers: int = 1, backend=None, state: int = 0) -> np.ndarray:
    """Raw rows (side, tau, pre, post, state, n_events) of n interval exits."""
    _check_interval(u, b)
    model = as_validated(model)
    state = _checked_state(model, state)
    return dispatch("interval", pack(model), _reps(n), args=(u, b, _horizon(horizon), seed, state),
                    workers=workers, backend=backend)


def estimate_exit_low(model, u: float, b: float, n: int = 1_000_000, *, seed: int = DEFAULT_SEED,
                      horizon=None, workers: int = 1, backend=None, state: int = 0) -> MCEstimate:
    """P{exit of (u - b, u) through the lower boundary}."""
    out = interval_exit_batch(model, u, b, n, seed=seed, horizon=horizon, workers=workers, backend=backend,
                              state=state)
    return _summarize((out[:, 0] == -1).astype(float), out[:, 0] == 0, seed)


def modified_batch(model, model_star, u, a: float, b: float, n: int = 1_000_000, *,
                   seed: int = DEFAULT_SEED, horizon=None, barrier=None, workers: int = 1, backend=None,
                   state: int = 0, reps=None) -> tuple[np.ndarray, float]:
    """Raw rows of the two-regime kernel and the barrier used.

    ``u`` may be a scalar or one level per replication; ``reps`` overrides
    the replication indices 0..n-1.
    """
    _check_modified(float(np.min(u)) if np.ndim(u) else u, a, b)
    model, model_star = _check_pair(model, model_star)
    state = _checked_state(model, state)
    L = _modified_barrier(model, model_star, barrier, horizon)
    reps = _reps(n) if reps is None else np.asarray(reps, np.int64)
    levels = np.broadcast_to(np.asarray(u, float), reps.shape)
    out = dispatch("modified", pack(model, c_star=model_star.c), reps,
                   args=(a, b, _horizon(horizon), L, seed, state), per_rep=(levels,), workers=workers,
                   backend=backend)
    return out, L


def _modified_bias(model, model_star, L):
    return max(_bias_bound(model, L), _bias_bound(model_star, L))


def estimate_modified_ruin(model, model_star, u: float, a: float, b: float, n: int = 1_000_000, *,
                           seed: int = DEFAULT_SEED, horizon=None, barrier=None, workers: int = 1,
                           backend=None, state: int = 0) -> MCEstimate:
    """Ruin probability of the two-regime process (Gerber-Shiu with w = 1, s = 0)."""
    model, model_star = _check_pair(model, model_star)
    if np.all(model.lam2 == 0):
        _check_modified(u, a, b)
        _reps(n)
        return MCEstimate(0.0, 0.0, n, 0.0, seed)
    out, L = modified_batch(model, model_star, u, a, b, n, seed=seed, horizon=horizon, barrier=barrier,
                            workers=workers, backend=backend, state=state)
    return _summarize((out[:, 0] == 1).astype(float), out[:, 0] == 2, seed, _modified_bias(model, model_star, L))


def modified_ruin_composed(model, model_star, u: float, a: float, b: float, n: int = 1_000_000, *,
                           seed: int = DEFAULT_SEED, horizon=None, barrier=None, workers: int = 1,
                           backend=None, state: int = 0) -> MCEstimate:
    """Ruin of the two-regime process for u > b, by conditioning on the first rise to u - a.

    The path starts reduced, so until it first exceeds u - a it follows the
    star dynamics. With star overshoot v at that level, v > a is immediate
    ruin; otherwise the path sits a - v below the reserve in the normal
    regime and the 0 < u <= b estimator applies at level a - v.
    """
    _check_modified(u, a, b)
    if u <= b:
        raise ValueError("composition needs u > b (start in the reduced regime)")
    model, model_star = _check_pair(model, model_star)
    L = _modified_barrier(model, model_star, barrier, horizon)
    star = dispatch("up", pack(model_star), _reps(n), args=(u - a, _horizon(horizon), L, False, seed, state),
                    workers=workers, backend=backend)
    crossed = star[:, 0] == 1
    v = np.where(crossed, star[:, 3] - (u - a), 0.0)
    direct = crossed & (v > a)
    cont = np.flatnonzero(crossed & (v <= a))
    vals = direct.astype(float)
    cens = (star[:, 0] == 2).astype(float)
    if cont.size:
        lev = a - v[cont]
        states = star[cont, 4].astype(np.int64)
        # one state per call keeps the kernel signature scalar in the start state
        for k in np.unique(states):
            sel = states == k
            rows, _ = modified_batch(model, model_star, lev[sel], a, b, int(sel.sum()), seed=derive_seed(seed, 3),
                                     horizon=horizon, barrier=L, workers=workers, backend=backend, state=int(k),
                                     reps=cont[sel])
            vals[cont[sel]] = (rows[:, 0] == 1).astype(float)
            cens[cont[sel]] = (rows[:, 0] == 2).astype(float)
    return _summarize(vals, cens, seed, 2 * _modified_bias(model, model_star, L))
