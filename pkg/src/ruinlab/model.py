"""Markov-modulated claim/premium process: definition, parsing, validation.

A model is a finite irreducible chain with generator ``Q``; while the chain
sits in state ``k`` the surplus-deficit process ``xi`` moves by

* premiums: Poisson rate ``lambda1[k]``, sizes ``Exp(c[k])``, downward;
* claims:   Poisson rate ``lambda2[k]``, sizes from a rational claim law, upward.

The matrix cumulant is

.. math::
   \\Psi(\\alpha) = \\Lambda F_0 (C (C + \\alpha I)^{-1} - I)
                 + \\Lambda \\bar F_0 (\\hat F(\\alpha) - I) + Q .
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "Erlang",
    "Exponential",
    "HyperExponential",
    "ClaimLaw",
    "ChainSpec",
    "StateParams",
    "ModelSpec",
    "ValidatedModel",
    "DriftReport",
    "Issue",
    "ConfigError",
    "ModelValidationError",
    "DomainError",
    "parse_model",
    "load_model",
    "serialize_model",
    "check_model",
    "validate_model",
    "as_validated",
    "scalar_model",
    "with_premium_rates",
    "cumulant",
    "stationary_distribution",
    "drift",
]


class ConfigError(ValueError):
    """Malformed configuration document."""


class DomainError(ValueError):
    """Argument outside the domain of an analytic function."""


@dataclass(frozen=True)
class Issue:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ModelValidationError(ValueError):
    def __init__(self, issues: Sequence[Issue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


# ---------------------------------------------------------------------------
# claim laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Erlang:
    """Erlang(shape, rate) claim sizes; density rate^n x^(n-1) e^(-rate x)/(n-1)!."""

    shape: int
    rate: float

    kind = "erlang"

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def mgf(self, alpha):
        return (self.rate / (self.rate - alpha)) ** self.shape

    def poles(self) -> list[float]:
        return [self.rate] * self.shape

    def mgf_polys(self) -> tuple[Polynomial, Polynomial]:
        """(numerator, denominator) of the MGF as polynomials in alpha."""
        den = Polynomial([self.rate, -1.0]) ** self.shape
        return Polynomial([self.rate**self.shape]), den

    def laplace_matrix(self, M: np.ndarray) -> np.ndarray:
        """E[exp(-M X)] for a square matrix argument."""
        I = np.eye(M.shape[0])
        inv = np.linalg.inv(self.rate * I + M)
        return self.rate**self.shape * np.linalg.matrix_power(inv, self.shape)

    def density_terms(self) -> list[tuple[float, int, float]]:
        n = self.shape
        return [(self.rate**n / math.factorial(n - 1), n - 1, self.rate)]

    def survival_terms(self) -> list[tuple[float, int, float]]:
        return [(self.rate**k / math.factorial(k), k, self.rate) for k in range(self.shape)]

    def problems(self) -> list[str]:
        out = []
        if int(self.shape) != self.shape or self.shape < 1:
            out.append(f"erlang shape must be an integer >= 1, got {self.shape}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            out.append(f"claim rate must be positive and finite, got {self.rate}")
        return out


@dataclass(frozen=True)
class Exponential(Erlang):
    shape: int = field(default=1, init=False)
    rate: float = 1.0

    kind = "exp"


@dataclass(frozen=True)
class HyperExponential:
    """Finite mixture of exponentials."""

    weights: tuple[float, ...]
    rates: tuple[float, ...]

    kind = "hyperexp"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    @property
    def mean(self) -> float:
        return sum(w / r for w, r in zip(self.weights, self.rates))

    def mgf(self, alpha):
        return sum(w * r / (r - alpha) for w, r in zip(self.weights, self.rates))

    def poles(self) -> list[float]:
        return list(self.rates)

    def mgf_polys(self) -> tuple[Polynomial, Polynomial]:
        den = Polynomial([1.0])
        for r in self.rates:
            den = den * Polynomial([r, -1.0])
        num = Polynomial([0.0])
        for j, (w, r) in enumerate(zip(self.weights, self.rates)):
            term = Polynomial([w * r])
            for i, r2 in enumerate(self.rates):
                if i != j:
                    term = term * Polynomial([r2, -1.0])
            num = num + term
        return num, den

    def laplace_matrix(self, M: np.ndarray) -> np.ndarray:
        I = np.eye(M.shape[0])
        return sum(w * r * np.linalg.inv(r * I + M) for w, r in zip(self.weights, self.rates))

    def density_terms(self) -> list[tuple[float, int, float]]:
        return [(w * r, 0, r) for w, r in zip(self.weights, self.rates)]

    def survival_terms(self) -> list[tuple[float, int, float]]:
        return [(w, 0, r) for w, r in zip(self.weights, self.rates)]

    def problems(self) -> list[str]:
        out = []
        if len(self.weights) == 0 or len(self.weights) != len(self.rates):
            out.append("hyperexp needs equally many (>= 1) weights and rates")
            return out
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            out.append(f"hyperexp weights must be nonnegative and sum to 1, got {self.weights}")
        if any(not (r > 0 and math.isfinite(r)) for r in self.rates):
            out.append(f"hyperexp rates must be positive and finite, got {self.rates}")
        return out


ClaimLaw = Union[Erlang, Exponential, HyperExponential]


# ---------------------------------------------------------------------------
# model containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSpec:
    m: int
    Q: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "Q", tuple(tuple(float(x) for x in row) for row in self.Q))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.Q, dtype=float).reshape(self.m, self.m)


@dataclass(frozen=True)
class StateParams:
    lambda1: float
    lambda2: float
    c: float
    claim: ClaimLaw


@dataclass(frozen=True)
class ModelSpec:
    chain: ChainSpec
    states: tuple[StateParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def m(self) -> int:
        return self.chain.m


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class ValidatedModel:
    """Read-only handle on a checked :class:`ModelSpec` with derived matrices.

    Attributes ``Lambda``, ``C``, ``F0`` are the diagonal matrices of the
    cumulant; ``lam1``, ``lam2``, ``c``, ``claim_mean`` their per-state
    vectors. Arrays are flagged non-writeable.
    """

    __slots__ = ("spec", "Q", "lam1", "lam2", "c", "claim_mean", "Lambda", "C", "F0")

    def __init__(self, spec: ModelSpec):
        issues = check_model(spec)
        if issues:
            raise ModelValidationError(issues)
        set_ = object.__setattr__
        set_(self, "spec", spec)
        set_(self, "Q", _readonly(spec.chain.matrix))
        lam1 = np.array([s.lambda1 for s in spec.states], dtype=float)
        lam2 = np.array([s.lambda2 for s in spec.states], dtype=float)
        tot = lam1 + lam2
        with np.errstate(invalid="ignore", divide="ignore"):
            f0 = np.where(tot > 0, lam1 / np.where(tot > 0, tot, 1.0), 0.0)
        set_(self, "lam1", _readonly(lam1))
        set_(self, "lam2", _readonly(lam2))
        set_(self, "c", _readonly([s.c for s in spec.states]))
        set_(self, "claim_mean", _readonly([s.claim.mean for s in spec.states]))
        set_(self, "Lambda", _readonly(np.diag(tot)))
        set_(self, "C", _readonly(np.diag(self.c)))
        set_(self, "F0", _readonly(np.diag(f0)))

    def __setattr__(self, name, value):
        raise AttributeError("ValidatedModel is read-only")

    def __eq__(self, other):
        return isinstance(other, ValidatedModel) and other.spec == self.spec

    def __hash__(self):
        return hash(self.spec)

    def __repr__(self):
        return f"ValidatedModel(m={self.m})"

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def states(self) -> tuple[StateParams, ...]:
        return self.spec.states

    @property
    def claims(self) -> tuple[ClaimLaw, ...]:
        return tuple(s.claim for s in self.spec.states)


def as_validated(model) -> ValidatedModel:
    if isinstance(model, ValidatedModel):
        return model
    if isinstance(model, ModelSpec):
        return ValidatedModel(model)
    raise TypeError(f"expected ModelSpec or ValidatedModel, got {type(model).__name__}")


def scalar_model(lambda1: float, lambda2: float, c: float, claim: ClaimLaw) -> ValidatedModel:
    """One-state model (Q = [[0]])."""
    spec = ModelSpec(ChainSpec(1, ((0.0,),)), (StateParams(float(lambda1), float(lambda2), float(c), claim),))
    return ValidatedModel(spec)


def with_premium_rates(model, c) -> ValidatedModel:
    """Copy of ``model`` with the premium-size parameters replaced by ``c``."""
    model = as_validated(model)
    c = np.broadcast_to(np.asarray(c, dtype=float), (model.m,))
    states = tuple(
        StateParams(s.lambda1, s.lambda2, float(ck), s.claim) for s, ck in zip(model.states, c)
    )
    return ValidatedModel(ModelSpec(model.spec.chain, states))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _reachable(adj: np.ndarray, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            j = int(j)
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


def check_model(spec: ModelSpec) -> list[Issue]:
    """Return every violated invariant of ``spec`` (empty list if valid)."""
    issues: list[Issue] = []
    m = spec.chain.m
    if int(m) != m or m < 1:
        return [Issue("state-count", f"m must be an integer >= 1, got {m}")]
    if len(spec.chain.Q) != m or any(len(row) != m for row in spec.chain.Q):
        issues.append(Issue("generator-shape", f"Q must be {m}x{m}"))
        return issues
    if len(spec.states) != m:
        issues.append(Issue("state-count", f"expected {m} state blocks, got {len(spec.states)}"))
        return issues
    Q = spec.chain.matrix
    if not np.all(np.isfinite(Q)):
        issues.append(Issue("generator-nonfinite", "Q has non-finite entries"))
        return issues
    for i in range(m):
        off = np.delete(Q[i], i)
        if np.any(off < 0):
            issues.append(Issue("generator-offdiag", f"row {i + 1} of Q has a negative off-diagonal rate"))
        s = Q[i].sum()
        if abs(s) > 1e-12:
            issues.append(Issue("generator-row-sum", f"row {i + 1} of Q sums to {s!r}, expected 0"))
    adj = (Q > 0) & ~np.eye(m, dtype=bool)
    if m > 1 and (len(_reachable(adj, 0)) < m or len(_reachable(adj.T, 0)) < m):
        issues.append(Issue("reducible", "chain is not irreducible (more than one communicating class)"))
    for k, st in enumerate(spec.states, start=1):
        for name in ("lambda1", "lambda2"):
            v = getattr(st, name)
            if not (v >= 0 and math.isfinite(v)):
                issues.append(Issue("negative-rate", f"state {k}: {name} must be >= 0, got {v}"))
        if not (st.c > 0 and math.isfinite(st.c)):
            issues.append(Issue("nonpositive-c", f"state {k}: c must be > 0, got {st.c}"))
        for msg in st.claim.problems():
            issues.append(Issue("claim-law", f"state {k}: {msg}"))
        if st.lambda1 + st.lambda2 + abs(Q[k - 1, k - 1]) <= 0:
            issues.append(Issue("frozen-state", f"state {k}: total event rate is zero"))
    return issues


def validate_model(spec: ModelSpec) -> ValidatedModel:
    """Check all invariants; raise :class:`ModelValidationError` listing each one."""
    return ValidatedModel(spec)


# ---------------------------------------------------------------------------
# configuration documents
# ---------------------------------------------------------------------------

_STATE_RE = re.compile(r"^state\.(\d+)$")
_STATE_KEYS = {
    "erlang": {"lambda1", "lambda2", "c", "claim", "claim_shape", "claim_rate"},
    "exp": {"lambda1", "lambda2", "c", "claim", "claim_rate"},
    "hyperexp": {"lambda1", "lambda2", "c", "claim", "claim_weights", "claim_rates"},
}


def _num(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: non-numeric value {raw!r}") from None


def _int(section: str, key: str, raw: str) -> int:
    v = _num(section, key, raw)
    if v != int(v):
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}")
    return int(v)


def _list(section: str, key: str, raw: str) -> list[float]:
    parts = [p for p in re.split(r"[,\s]+", raw.strip().strip("[]")) if p]
    return [_num(section, key, p) for p in parts]


def _require(sec, section: str, key: str) -> str:
    if key not in sec:
        raise ConfigError(f"[{section}] missing required key {key!r}")
    return sec[key]


def parse_model(text: str) -> ModelSpec:
    """Parse a configuration document into a :class:`ModelSpec`.

    The result is *not* validated; pass it to :func:`validate_model`.

    Raises
    ------
    ConfigError
        On syntax errors (with line number), unknown sections or keys,
        missing keys and non-numeric values.
    """
    cp = configparser.ConfigParser(interpolation=None, strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None

    if "chain" not in cp:
        raise ConfigError("missing required section [chain]")
    chain = cp["chain"]
    unknown = set(chain) - {"m", "q"}
    if unknown:
        raise ConfigError(f"[chain] unknown key(s): {', '.join(sorted(unknown))}")
    m = _int("chain", "m", _require(chain, "chain", "m"))
    if m < 1:
        raise ConfigError(f"[chain] m: must be >= 1, got {m}")
    q = _list("chain", "q", _require(chain, "chain", "q"))
    if len(q) != m * m:
        raise ConfigError(f"[chain] q: expected {m * m} entries (row-major {m}x{m}), got {len(q)}")
    Q = tuple(tuple(q[i * m:(i + 1) * m]) for i in range(m))

    blocks: dict[int, StateParams] = {}
    for name in cp.sections():
        if name == "chain":
            continue
        mt = _STATE_RE.match(name)
        if not mt:
            raise ConfigError(f"unknown section [{name}]")
        k = int(mt.group(1))
        if not 1 <= k <= m:
            raise ConfigError(f"[{name}] state index out of range 1..{m}")
        sec = cp[name]
        kind = _require(sec, name, "claim").strip().lower()
        if kind not in _STATE_KEYS:
            raise ConfigError(f"[{name}] claim: expected erlang|exp|hyperexp, got {kind!r}")
        unknown = set(sec) - _STATE_KEYS[kind]
        if unknown:
            raise ConfigError(f"[{name}] unknown key(s) for claim={kind}: {', '.join(sorted(unknown))}")
        if kind == "erlang":
            claim: ClaimLaw = Erlang(
                _int(name, "claim_shape", _require(sec, name, "claim_shape")),
                _num(name, "claim_rate", _require(sec, name, "claim_rate")),
            )
        elif kind == "exp":
            claim = Exponential(rate=_num(name, "claim_rate", _require(sec, name, "claim_rate")))
        else:
            claim = HyperExponential(
                tuple(_list(name, "claim_weights", _require(sec, name, "claim_weights"))),
                tuple(_list(name, "claim_rates", _require(sec, name, "claim_rates"))),
            )
        blocks[k] = StateParams(
            _num(name, "lambda1", _require(sec, name, "lambda1")),
            _num(name, "lambda2", _require(sec, name, "lambda2")),
            _num(name, "c", _require(sec, name, "c")),
            claim,
        )
    missing = [k for k in range(1, m + 1) if k not in blocks]
    if missing:
        raise ConfigError(f"missing section(s): {', '.join(f'[state.{k}]' for k in missing)}")
    return ModelSpec(ChainSpec(m, Q), tuple(blocks[k] for k in range(1, m + 1)))


def load_model(path) -> ValidatedModel:
    with open(path, encoding="utf-8") as fh:
        return validate_model(parse_model(fh.read()))


def serialize_model(model) -> str:
    spec = model.spec if isinstance(model, ValidatedModel) else model
    lines = ["[chain]", f"m = {spec.m}", "q = " + ", ".join(repr(x) for row in spec.chain.Q for x in row)]
    for k, st in enumerate(spec.states, start=1):
        lines += ["", f"[state.{k}]", f"lambda1 = {st.lambda1!r}", f"lambda2 = {st.lambda2!r}", f"c = {st.c!r}"]
        cl = st.claim
        lines.append(f"claim = {cl.kind}")
        if cl.kind == "erlang":
            lines += [f"claim_shape = {cl.shape}", f"claim_rate = {cl.rate!r}"]
        elif cl.kind == "exp":
            lines.append(f"claim_rate = {cl.rate!r}")
        else:
            lines += [
                "claim_weights = " + ", ".join(repr(w) for w in cl.weights),
                "claim_rates = " + ", ".join(repr(r) for r in cl.rates),
            ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# cumulant, stationary law, drift
# ---------------------------------------------------------------------------


def cumulant(model, alpha: float) -> np.ndarray:
    """Matrix cumulant Psi(alpha) (m x m).

    Beyond the claim-MGF abscissa the rational continuation is returned;
    only the poles ``alpha = -c_k`` and ``alpha = claim rate`` are rejected.
    """
    model = as_validated(model)
    alpha = float(alpha)
    diag = np.zeros(model.m)
    for k, st in enumerate(model.states):
        if st.lambda1 > 0:
            if alpha == -st.c:
                raise DomainError(f"alpha = {alpha} is a pole (-c) in state {k + 1}")
            diag[k] += st.lambda1 * (st.c / (st.c + alpha) - 1.0)
        if st.lambda2 > 0:
            if alpha in st.claim.poles():
                raise DomainError(f"alpha = {alpha} is a pole of the claim MGF in state {k + 1}")
            diag[k] += st.lambda2 * (st.claim.mgf(alpha) - 1.0)
    return np.diag(diag) + model.Q


def stationary_distribution(chain) -> np.ndarray:
    """Stationary law pi of the chain: pi Q = 0, sum(pi) = 1."""
    if isinstance(chain, (ValidatedModel, ModelSpec)):
        chain = chain.spec.chain if isinstance(chain, ValidatedModel) else chain.chain
    Q = chain.matrix if isinstance(chain, ChainSpec) else np.asarray(chain, dtype=float)
    m = Q.shape[0]
    if m == 1:
        return np.ones(1)
    A = np.vstack([Q.T, np.ones((1, m))])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = np.max(np.abs(pi @ Q)) / max(1.0, np.max(np.abs(Q)))
    if resid > 1e-12 or abs(pi.sum() - 1.0) > 1e-12 or np.any(pi <= 0):
        raise np.linalg.LinAlgError(f"stationary distribution ill-conditioned (residual {resid:.3g})")
    return pi


@dataclass(frozen=True)
class DriftReport:
    per_state: np.ndarray
    pi: np.ndarray
    stationary: float


def drift(model) -> DriftReport:
    """Per-state drifts lambda2*m - lambda1/c and their stationary average."""
    model = as_validated(model)
    d = model.lam2 * model.claim_mean - model.lam1 / model.c
    pi = stationary_distribution(model.spec.chain)
    return DriftReport(per_state=d, pi=pi, stationary=float(pi @ d))
