"""Closed-form analytics.

Scalar (one-state) models with rational claim laws: Lundberg roots, the
law of the all-time supremum, lower-exit probabilities of an interval,
the renewal measure of the ladder process, the overshoot law at a level
and the ruin probability of the two-regime (hysteresis) process.

Matrix models: the fixed-point atoms p_-(0), p^-(0), the resolvent of the
chain and downward passage probabilities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import expm
from scipy.integrate import quad
from scipy.optimize import brentq

from .expoly import ExpPoly
from .model import ChainSpec, ValidatedModel, as_validated, cumulant, drift

__all__ = [
    "UnsupportedModelError",
    "LundbergRoots",
    "ExpMixtureLaw",
    "ExitLowCurve",
    "RenewalMeasure",
    "OvershootLaw",
    "MatrixAtoms",
    "lundberg_roots",
    "sup_law",
    "exit_low",
    "exit_low_curve",
    "renewal_measure",
    "overshoot_law",
    "modified_ruin",
    "fixed_point_atoms",
    "resolvent",
    "passage_probability_down",
    "adjustment_coefficient",
    "passage_transform",
]


class UnsupportedModelError(ValueError):
    """Model outside the family the closed forms cover."""


def _scalar(model) -> ValidatedModel:
    model = as_validated(model)
    if model.m != 1:
        raise UnsupportedModelError(f"scalar analytics need m = 1, got m = {model.m}")
    return model


def _negative_drift(model, what: str) -> float:
    d = drift(model).stationary
    if not d < 0:
        raise UnsupportedModelError(f"{what} needs negative drift, got E xi(1) = {d}")
    return d


# ---------------------------------------------------------------------------
# Lundberg roots and the supremum law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LundbergRoots:
    roots: np.ndarray  # positive roots, ascending
    all_roots: np.ndarray  # every root of the cleared polynomial

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


def _cleared_numerator(model: ValidatedModel) -> tuple[Polynomial, Polynomial]:
    """psi(alpha) * (c + alpha) * den(alpha) and the claim-MGF denominator."""
    st = model.states[0]
    num, den = st.claim.mgf_polys()
    a = Polynomial([0.0, 1.0])
    cpoly = Polynomial([st.c, 1.0])
    return st.lambda1 * (-a) * den + st.lambda2 * cpoly * (num - den), den


def lundberg_roots(model, s: float = 0.0) -> LundbergRoots:
    """Positive roots of psi(alpha) = s for a scalar model (only s = 0).

    The rational equation is cleared to a polynomial whose roots come from
    the companion matrix; spurious roots at claim-MGF poles are dropped and
    the survivors polished by Newton steps on the polynomial.
    """
    if s != 0:
        raise UnsupportedModelError("only s = 0 is supported")
    model = _scalar(model)
    st = model.states[0]
    if st.lambda2 == 0:
        return LundbergRoots(np.array([]), np.array([0.0]))
    P, den = _cleared_numerator(model)
    P = P.trim(tol=0.0)
    # alpha = 0 is always a root (psi(0) = 0)
    P, rem = divmod(P, Polynomial([0.0, 1.0]))
    allr = P.roots()
    dP = P.deriv()
    poles = np.array(st.claim.poles() + [-st.c])
    keep = []
    scale = max(1.0, float(np.max(np.abs(poles))))
    for z in allr:
        if abs(z.imag) > 1e-9 * max(1.0, abs(z)):
            if z.real > 0:
                raise UnsupportedModelError(f"complex Lundberg root {z}; oscillatory mixtures are not supported")
            continue
        x = float(z.real)
        for _ in range(4):
            d = dP(x)
            if d == 0:
                break
            x -= P(x) / d
        if np.min(np.abs(poles - x)) < 1e-9 * scale:
            continue
        if x > 1e-12 * scale:
            keep.append(x)
    keep = np.sort(np.array(keep))
    if len(keep) > 1 and np.min(np.diff(keep)) < 1e-7 * scale:
        raise UnsupportedModelError(f"multiple Lundberg root near {keep[np.argmin(np.diff(keep))]}")
    return LundbergRoots(keep, np.concatenate([[0.0], allr]))


@dataclass(frozen=True)
class ExpMixtureLaw:
    """Law on [0, inf) with P{X > u} = sum_i weights[i] exp(-rates[i] u), u > 0."""

    atom: float
    weights: np.ndarray
    rates: np.ndarray

    def tail(self, u):
        u = np.asarray(u, dtype=float)
        out = np.sum(self.weights * np.exp(-np.multiply.outer(u, self.rates)), axis=-1)
        return np.where(u < 0, 1.0, out) if out.ndim else (1.0 if u < 0 else float(out))

    def cdf(self, u):
        """P{X < u} (equal to P{X <= u} for u > 0)."""
        t = self.tail(u)
        u = np.asarray(u, dtype=float)
        out = np.where(u <= 0, 0.0, 1.0 - t)
        return out if out.ndim else float(out)

    def density(self, u):
        u = np.asarray(u, dtype=float)
        out = np.sum(self.weights * self.rates * np.exp(-np.multiply.outer(u, self.rates)), axis=-1)
        return out if out.ndim else float(out)

    def density_poly(self) -> ExpPoly:
        return ExpPoly((w * r, 0, r) for w, r in zip(self.weights, self.rates))

    def exp_average(self, shift: float, c: float) -> float:
        """P{X < shift + E} with E ~ Exp(c) independent."""
        return float(1.0 - np.sum(self.weights * np.exp(-self.rates * shift) * c / (c + self.rates)))

    def rows(self) -> list[tuple[float, float, float]]:
        return [(self.atom, float(w), float(r)) for w, r in zip(self.weights, self.rates)]


def sup_law(model) -> ExpMixtureLaw:
    """Law of xi^+ = sup_t xi(t) for a scalar model with negative drift.

    Rational Wiener-Hopf factor at s -> 0:
    E exp(alpha xi^+) = prod_i r_i / (r_i - alpha) * prod_j (rho_j - alpha) / rho_j
    with r_i the positive Lundberg roots and rho_j the claim-MGF poles;
    partial fractions give the exponential-mixture tail.
    """
    model = _scalar(model)
    st = model.states[0]
    if st.lambda2 == 0:
        return ExpMixtureLaw(1.0, np.array([]), np.array([]))
    _negative_drift(model, "sup_law")
    r = lundberg_roots(model).roots
    rho = np.array(st.claim.poles(), dtype=float)
    if len(r) != len(rho):
        raise UnsupportedModelError(f"{len(r)} positive Lundberg roots for {len(rho)} claim poles")
    atom = float(np.prod(r / rho))
    w = np.empty(len(r))
    for i, ri in enumerate(r):
        others = np.delete(r, i)
        w[i] = np.prod(others / (others - ri)) * np.prod((rho - ri) / rho)
    return ExpMixtureLaw(atom, w, r)


# ---------------------------------------------------------------------------
# two-sided exit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExitLowCurve:
    """B_b(u) = (1 - sum n_i e^{-r_i u}) / (1 - sum d_i e^{-r_i b}) for 0 < u < b."""

    rates: np.ndarray
    num: np.ndarray
    den: np.ndarray
    fallback: bool = False

    def denominator(self, b: float) -> float:
        return float(1.0 - np.sum(self.den * np.exp(-self.rates * b)))

    def numerator(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = 1.0 - np.sum(self.num * np.exp(-np.multiply.outer(u, self.rates)), axis=-1)
        return out if out.ndim else float(out)

    def __call__(self, u, b: float):
        return self.numerator(u) / self.denominator(b)

    def poly_reversed(self, a: float, b: float) -> ExpPoly:
        """z -> B_b(a - z) as an exponential polynomial in z."""
        D = self.denominator(b)
        terms = [(1.0 / D, 0, 0.0)]
        terms += [(-n * np.exp(-r * a) / D, 0, -r) for n, r in zip(self.num, self.rates)]
        return ExpPoly(terms)


def _claim_residual_rows(claim, rates) -> list[np.ndarray]:
    """Rows killing the exp(-delta y) y^p terms of the truncated claim integral.

    Unknowns are (A0, A_1..A_n) of h(y) = A0 + sum A_i exp(-r_i y).
    """
    by_rate: dict = {}
    for kappa, k, delta in claim.density_terms():
        by_rate.setdefault(delta, []).append((kappa, k))
    rows = []
    from math import factorial

    for delta, terms in by_rate.items():
        kmax = max(k for _, k in terms)
        for p in range(kmax + 1):
            row = np.zeros(1 + len(rates))
            for kappa, k in terms:
                if k < p:
                    continue
                f = kappa * factorial(k) / factorial(p)
                row[0] += f / delta ** (k - p + 1)
                row[1:] += f / (delta - rates) ** (k - p + 1)
            rows.append(row)
    return rows


def exit_low_curve(model, b: float | None = None) -> ExitLowCurve:
    """Coefficients of the lower-exit probability curve (scalar model).

    Harmonic ansatz h(y) = A0 + sum_i A_i exp(-r_i y) in the distance y to
    the upper boundary. The truncated claim integral yields residual terms
    exp(-delta y) y^p that must vanish; the premium (exponential) overshoot
    past the lower boundary yields one more condition involving b. The
    numerator coefficients -A_i/A0 do not depend on b.
    """
    model = _scalar(model)
    _negative_drift(model, "exit_low")
    st = model.states[0]
    r = lundberg_roots(model).roots
    rows = _claim_residual_rows(st.claim, r)
    A = np.array(rows)
    # normalise A0 = 1: solve for A_i
    M = A[:, 1:]
    rhs = -A[:, 0]
    fallback = False
    cond = np.linalg.cond(M) if M.size else 1.0
    if M.shape[0] == M.shape[1] and cond < 1e12:
        Ai = np.linalg.solve(M, rhs)
    else:
        Ai = _collocation(model, r, b if b is not None else 1.0)
        fallback = True
        warnings.warn(f"exit_low: coefficient system singular (cond={cond:.3g}); using collocation")
    num = -Ai
    den = -Ai * st.c / (st.c + r)
    return ExitLowCurve(r, num, den, fallback)


def _collocation(model, r, b) -> np.ndarray:
    """Least-squares fit of the interval generator equation at interior points.

    With y the distance to the upper boundary, h(y) = P{lower exit} solves
    (l1 + l2) h(y) = l1 [int_0^{b-y} c e^{-cp} h(y+p) dp + e^{-c(b-y)}]
    + l2 int_0^y f(x) h(y-x) dx. Basis {1, e^{-r_i y}}; returns -A_i / A0.
    """
    st = model.states[0]
    l1, l2, c = st.lambda1, st.lambda2, st.c
    f = ExpPoly((l2 * k, p, d) for k, p, d in st.claim.density_terms())
    basis = [lambda y: np.ones_like(y)] + [lambda y, ri=ri: np.exp(-ri * y) for ri in r]
    pts = np.linspace(0.0, b, 2 * (len(r) + 1) + 2)[1:-1]
    rows, rhs = [], []
    for y in pts:
        row = []
        for h in basis:
            up = quad(lambda p: c * np.exp(-c * p) * h(y + p), 0.0, b - y)[0]
            down = quad(lambda x: f(x) * h(y - x), 0.0, y)[0]
            row.append((l1 + l2) * h(y) - l1 * up - down)
        rows.append(row)
        rhs.append(l1 * np.exp(-c * (b - y)))
    M = np.array(rows)
    sol, _, rank, sv = np.linalg.lstsq(M, np.array(rhs), rcond=None)
    if rank < M.shape[1] or sol[0] == 0:
        cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
        raise UnsupportedModelError(f"exit_low: collocation system singular too (cond={cond:.3g})")
    return sol[1:] / sol[0]


def exit_low(model, u: float, b: float) -> tuple[float, ExitLowCurve]:
    """P{xi leaves (u - b, u) through the lower boundary}, xi(0) = 0.

    ``u == b`` puts the start on the lower boundary: immediate lower exit,
    value 1 (the simulator uses the same convention).
    """
    if not 0 < u <= b:
        raise ValueError(f"need 0 < u <= b, got u={u}, b={b}")
    curve = exit_low_curve(model, b)
    if u == b:
        return 1.0, curve
    return float(curve(u, b)), curve


# ---------------------------------------------------------------------------
# renewal measure and overshoot law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RenewalMeasure:
    """dM(x) = scale * dP{xi^+ < x}; atom = M(0+)."""

    atom: float
    scale: float
    law: ExpMixtureLaw

    @property
    def continuous_mass(self) -> float:
        return self.scale * (1.0 - self.law.atom)

    def density_poly(self) -> ExpPoly:
        return self.law.density_poly().scale(self.scale)


def renewal_measure(model) -> RenewalMeasure:
    model = _scalar(model)
    st = model.states[0]
    d = drift(model).stationary
    if d == 0:
        raise UnsupportedModelError("renewal measure undefined at zero drift")
    law = sup_law(model)
    return RenewalMeasure(1.0 / (st.lambda1 + st.lambda2), 1.0 / (st.c * abs(d)), law)


def _jump_kernel(model) -> ExpPoly:
    """K(t) = pi(t) + c * Pi_bar(t): claim density plus exponential-undershoot term."""
    st = model.states[0]
    dens = ExpPoly((st.lambda2 * c, k, d) for c, k, d in st.claim.density_terms())
    surv = ExpPoly((st.lambda2 * c, k, d) for c, k, d in st.claim.survival_terms())
    return dens + surv.scale(st.c)


@dataclass(frozen=True)
class OvershootLaw:
    """Sub-probability law of the overshoot gamma^+(u) on {tau^+(u) < inf}."""

    u: float
    poly: ExpPoly

    def density(self, y):
        return self.poly(y)

    @property
    def mass(self) -> float:
        return self.poly.integral(0.0, np.inf)

    def cdf(self, y):
        """Measure of (0, y]."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        tail = self.poly.tail()
        out = self.mass - tail(np.maximum(y, 0.0))
        out = np.where(y <= 0, 0.0, out)
        return out if out.size > 1 else float(out[0])


def _overshoot_poly(model, u: float) -> ExpPoly:
    M = renewal_measure(model)
    K = _jump_kernel(model)
    out = K.shift(u).scale(M.atom)
    for w, r in zip(M.law.weights, M.law.rates):
        out = out + K.conv_exp(r, u).scale(M.scale * w * r)
    return out


def overshoot_law(model, u: float) -> OvershootLaw:
    """Overshoot law at level u >= 0 of a scalar negative-drift model.

    g(dy/u) = int_[0,u] dM(z) [pi(y + u - z) + c Pi_bar(u - z + y)] dy
    """
    model = _scalar(model)
    if u < 0:
        raise ValueError("u must be >= 0")
    st = model.states[0]
    if st.lambda2 == 0:
        return OvershootLaw(u, ExpPoly())
    _negative_drift(model, "overshoot_law")
    return OvershootLaw(u, _overshoot_poly(model, u))


# ---------------------------------------------------------------------------
# two-regime (hysteresis) process
# ---------------------------------------------------------------------------


def _check_pair(model, model_star):
    if model.m != 1 or model_star.m != 1:
        raise UnsupportedModelError("modified_ruin is scalar only")
    s, t = model.states[0], model_star.states[0]
    if (s.lambda1, s.lambda2, s.claim) != (t.lambda1, t.lambda2, t.claim):
        raise ValueError("model and model_star may differ only in the premium parameter c")


def modified_ruin(model, model_star, u: float, a: float, b: float) -> float:
    """Ruin probability of the two-regime process (penalty w = 1, s = 0).

    For u <= b:  1 - B_b(u) S;  for u > b:  1 - P*(u - a) - int_0^a g*(dz/u - a) B_b(a - z) S,
    where S = P*(b - a + theta) / (1 - int_0^a g*(dz/b - a + theta) B_b(a - z)) is the
    survival probability just after a down-crossing of u - b and theta ~ Exp(c).
    """
    model, model_star = as_validated(model), as_validated(model_star)
    _check_pair(model, model_star)
    if not 0 < a <= b:
        raise ValueError(f"need 0 < a <= b, got a={a}, b={b}")
    if u <= 0:
        raise ValueError("u must be > 0")
    c = model.states[0].c
    ell = b - a
    if model_star.states[0].lambda2 == 0:
        return 0.0
    _negative_drift(model, "modified_ruin")
    _negative_drift(model_star, "modified_ruin")
    curve = exit_low_curve(model, b)
    law_star = sup_law(model_star)
    Ms = renewal_measure(model_star)
    Ks = _jump_kernel(model_star)
    Bz = curve.poly_reversed(a, b)

    # theta-averaged star overshoot law at level b - a + theta, as a polynomial in z
    L = Ks.laplace_shift(c).shift(ell)
    G = L.scale(Ms.atom * c)
    for w, r in zip(Ms.law.weights, Ms.law.rates):
        G = G + (Ks.conv_exp(r, ell) + L).scale(Ms.scale * w * r * c / (c + r))
    J = (G * Bz).integral(0.0, a)
    S = law_star.exp_average(ell, c) / (1.0 - J)
    if u <= b:
        return float(1.0 - curve(u, b) * S)
    g = _overshoot_poly(model_star, u - a)
    back = (g * Bz).integral(0.0, a)
    return float(1.0 - law_star.cdf(u - a) - back * S)


# ---------------------------------------------------------------------------
# matrix fixed points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixAtoms:
    p_lower: np.ndarray  # p_-(0)
    p_upper: np.ndarray  # p^-(0)
    R_lower: np.ndarray  # C p_-(0)
    R_upper: np.ndarray  # p^-(0) C
    residuals: tuple[float, float]
    iterations: tuple[int, int]


def _fp_maps(model: ValidatedModel):
    Lam, Q, F0, C = model.Lambda, model.Q, model.F0, model.C
    m = model.m
    I = np.eye(m)
    inv = np.linalg.inv(Lam - Q)
    base = Lam @ F0

    def jump_lower(p):
        q = I - p
        M = C @ p
        out = np.zeros((m, m))
        for k, st in enumerate(model.states):
            if st.lambda2 > 0:
                out[k] = st.lambda2 * (q @ st.claim.laplace_matrix(M))[k]
        return out

    def jump_upper(p):
        q = I - p
        N = p @ C
        out = np.zeros((m, m))
        for k, st in enumerate(model.states):
            if st.lambda2 > 0:
                out[:, k] = st.lambda2 * (st.claim.laplace_matrix(N) @ q)[:, k]
        return out

    def T_lower(p):
        return I - inv @ (base + jump_lower(p))

    def T_upper(p):
        return I - (base + jump_upper(p)) @ inv

    def res_lower(p):
        return np.max(np.abs((Lam - Q) @ (I - p) - base - jump_lower(p)))

    def res_upper(p):
        return np.max(np.abs((I - p) @ (Lam - Q) - base - jump_upper(p)))

    return T_lower, T_upper, res_lower, res_upper


def _iterate(T, res, m, tol, damping, max_iter):
    # run past tol (to tol * 1e-3) while the residual still improves, so
    # converged atoms carry a margin; stop on stagnation
    p = np.eye(m)
    r = res(p)
    best, since = r, 0
    for it in range(1, max_iter + 1):
        if r <= tol * 1e-3 or (r <= tol and since > 50):
            return p, r, it - 1
        p = (1 - damping) * p + damping * T(p)
        r = res(p)
        if r < best:
            best, since = r, 0
        else:
            since += 1
    if r <= tol:
        return p, r, max_iter
    raise RuntimeError(f"fixed-point iteration did not converge; last residual {r:.3g}")


def fixed_point_atoms(model, *, tol: float = 1e-10, damping: float = 0.5, max_iter: int = 100_000) -> MatrixAtoms:
    """Solve the fixed-point equations for p_-(0) and p^-(0) by damped iteration.

    Iteration starts at the identity and decreases to the maximal solution
    (p = 0 is always a solution and is the right one only for negative drift).
    """
    model = as_validated(model)
    if np.all(np.diag(model.Lambda) == 0):
        raise UnsupportedModelError("no jumps in any state: Lambda - Q is singular")
    T_l, T_u, r_l, r_u = _fp_maps(model)
    pl, rl, il = _iterate(T_l, r_l, model.m, tol, damping, max_iter)
    pu, ru, iu = _iterate(T_u, r_u, model.m, tol, damping, max_iter)
    C = np.asarray(model.C)
    return MatrixAtoms(pl, pu, C @ pl, pu @ C, (rl, ru), (il, iu))


def resolvent(chain, s: float) -> np.ndarray:
    """P_s = s (sI - Q)^{-1}: state law at an independent Exp(s) time."""
    if s <= 0:
        raise ValueError("s must be > 0")
    if isinstance(chain, ValidatedModel):
        Q = np.asarray(chain.Q)
    elif isinstance(chain, ChainSpec):
        Q = chain.matrix
    else:
        Q = np.asarray(chain, dtype=float)
    m = Q.shape[0]
    return s * np.linalg.solve(s * np.eye(m) - Q, np.eye(m))


def passage_probability_down(model, x: float, atoms: MatrixAtoms | None = None) -> np.ndarray:
    """Matrix of P{tau^-(x) < inf, x(tau^-) = r | x(0) = k} = q_-(0) exp(R_-(0) x), x <= 0."""
    if x > 0:
        raise ValueError("x must be <= 0")
    model = as_validated(model)
    atoms = atoms or fixed_point_atoms(model)
    q = np.eye(model.m) - atoms.p_lower
    return q @ expm(atoms.R_lower * x)


def adjustment_coefficient(model) -> float:
    """Smallest r > 0 with spectral abscissa of Psi(r) equal to 0.

    For m = 1 this is the smallest positive Lundberg root. Used to size the
    safe barrier of ruin simulations (bias <= const * exp(-r L)).
    """
    model = as_validated(model)
    if drift(model).stationary >= 0:
        raise UnsupportedModelError("adjustment coefficient needs negative stationary drift")
    if model.m == 1:
        r = lundberg_roots(model).roots
        if len(r) == 0:
            return np.inf
        return float(r[0])
    if np.all(model.lam2 == 0):
        return np.inf
    poles = [p for st in model.states if st.lambda2 > 0 for p in st.claim.poles()]
    hi = min(poles) * (1 - 1e-9)
    kappa = lambda a: float(np.max(np.linalg.eigvals(cumulant(model, a)).real))
    lo = 1e-9 * hi
    if kappa(hi) <= 0:
        return hi
    return float(brentq(kappa, lo, hi, xtol=1e-14))


passage_transform = passage_probability_down
