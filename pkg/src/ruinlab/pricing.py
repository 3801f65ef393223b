"""Discounted penalties at ruin of the two-regime process, and put prices.

The Gerber-Shiu function is estimated as the sample mean of
``exp(-s tau) * w(undershoot, overshoot)`` over ruined replications of the
two-regime process. A perpetual American put with log exercise boundary
``beta`` is the Gerber-Shiu function at level ``u - beta`` with the penalty
``(K - exp(beta - y))_+``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .simulate import DEFAULT_SEED, MCEstimate, _modified_bias, _summarize, modified_batch

__all__ = [
    "PenaltyFn",
    "PutContract",
    "GSQuery",
    "ContractError",
    "BoundaryResult",
    "make_put_penalty",
    "unit_penalty",
    "gerber_shiu",
    "price_perpetual_put",
    "boundary_search",
    "curve_csv",
]


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class PenaltyFn:
    """Vectorized w(x, y) >= 0 of undershoot x and overshoot y."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    tag: str = "w"

    def __call__(self, x, y):
        return self.fn(np.asarray(x, float), np.asarray(y, float))

    def scaled(self, k: float) -> "PenaltyFn":
        return PenaltyFn(lambda x, y: k * self.fn(x, y), f"{k!r}*{self.tag}")


def unit_penalty() -> PenaltyFn:
    return PenaltyFn(lambda x, y: np.ones(np.broadcast(x, y).shape), "1")


def make_put_penalty(K: float, beta: float) -> PenaltyFn:
    """w(x, y) = (K - exp(beta - y))_+; independent of x."""
    if not K > 0:
        raise ValueError("strike K must be > 0")

    def put(x, y):
        return np.maximum(K - np.exp(beta - y), 0.0) + 0.0 * x

    return PenaltyFn(put, f"put(K={K!r},beta={beta!r})")


@dataclass(frozen=True)
class PutContract:
    K: float
    beta: float
    s: float
    u: float

    def __post_init__(self):
        if not self.K > 0:
            raise ContractError("strike K must be > 0")
        if not self.s > 0:
            raise ContractError("discount force s must be > 0")
        if math.exp(self.beta) > min(math.exp(self.u), self.K):
            raise ContractError(f"exercise boundary violates e^beta <= min(e^u, K): beta={self.beta}")
        if not self.u - self.beta > 0:
            raise ContractError("need u - beta > 0")


@dataclass(frozen=True)
class GSQuery:
    u: float
    a: float
    b: float
    s: float
    penalty: PenaltyFn
    n: int = 1_000_000

    def __post_init__(self):
        if not 0 < self.a <= self.b:
            raise ValueError(f"need 0 < a <= b, got a={self.a}, b={self.b}")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class GSEstimate(MCEstimate):
    """MCEstimate with a flag raised when the penalty looks unbounded."""

    heavy_penalty: bool = False


def _penalty_values(rows: np.ndarray, u: float, s: float, w: PenaltyFn) -> np.ndarray:
    ruined = rows[:, 0] == 1
    tau = np.where(ruined, rows[:, 1], 0.0)
    x = np.where(ruined, u - rows[:, 2], 1.0)
    y = np.where(ruined, rows[:, 3] - u, 1.0)
    wv = np.asarray(w(x, y), float)
    if np.any(wv[ruined] < 0):
        raise ValueError(f"penalty {w.tag} is negative on a sampled point")
    return np.where(ruined, np.exp(-s * tau) * wv, 0.0)


def _heavy(v: np.ndarray) -> bool:
    # running-variance guard: a few replications carrying most of the second moment
    sq = v * v
    tot = sq.sum()
    if tot == 0 or v.size < 100:
        return False
    return bool(np.sort(sq)[-max(1, v.size // 1000):].sum() > 0.5 * tot)


def gerber_shiu(model, model_star, query: GSQuery, *, seed: int = DEFAULT_SEED, horizon=None, barrier=None,
                workers: int = 1, backend=None, state: int = 0) -> GSEstimate:
    """Phi_s^{a,b}(u) = E[exp(-s tau) w(gamma_+, gamma^+); tau < inf] for the two-regime process."""
    rows, L = modified_batch(model, model_star, query.u, query.a, query.b, query.n, seed=seed, horizon=horizon,
                             barrier=barrier, workers=workers, backend=backend, state=state)
    v = _penalty_values(rows, query.u, query.s, query.penalty)
    est = _summarize(v, rows[:, 0] == 2, seed, _modified_bias(model, model_star, L))
    return GSEstimate(**est.__dict__, heavy_penalty=_heavy(v))


def price_perpetual_put(model, model_star, contract: PutContract, a: float, b: float, n: int = 1_000_000, *,
                        seed: int = DEFAULT_SEED, horizon=None, barrier=None, workers: int = 1, backend=None,
                        state: int = 0) -> GSEstimate:
    """E[exp(-s tau(u - beta)) (K - exp(beta - gamma^+(u - beta)))_+].

    The two-regime dynamics run relative to the level u - beta; a and b are
    kept as given.
    """
    q = GSQuery(contract.u - contract.beta, a, b, contract.s, make_put_penalty(contract.K, contract.beta), n)
    return gerber_shiu(model, model_star, q, seed=seed, horizon=horizon, barrier=barrier, workers=workers,
                       backend=backend, state=state)


@dataclass(frozen=True)
class BoundaryResult:
    beta_star: float
    betas: np.ndarray
    prices: np.ndarray
    stderrs: np.ndarray


def boundary_search(model, model_star, u: float, K: float, s: float, betas, a: float, b: float,
                    n: int = 1_000_000, *, seed: int = DEFAULT_SEED, horizon=None, barrier=None,
                    workers: int = 1, backend=None, state: int = 0) -> BoundaryResult:
    """Grid search for the exercise boundary maximizing the put price.

    Every grid point uses the same seed (common random numbers).
    """
    betas = np.atleast_1d(np.asarray(betas, float))
    if betas.size == 0:
        raise ValueError("empty beta grid")
    contracts = [PutContract(K, float(bt), s, u) for bt in betas]
    ests = [price_perpetual_put(model, model_star, c, a, b, n, seed=seed, horizon=horizon, barrier=barrier,
                                workers=workers, backend=backend, state=state) for c in contracts]
    prices = np.array([e.value for e in ests])
    i = int(np.argmax(prices))
    return BoundaryResult(float(betas[i]), betas, prices, np.array([e.stderr for e in ests]))


def curve_csv(result: BoundaryResult) -> str:
    lines = ["beta,price,stderr"]
    lines += [f"{bt!r},{p!r},{e!r}" for bt, p, e in zip(result.betas.tolist(), result.prices.tolist(),
                                                        result.stderrs.tolist())]
    return "\n".join(lines) + "\n"
