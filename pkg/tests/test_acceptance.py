"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Monte Carlo criteria run at n = 10^6. The lines are also collected and
repeated in the pytest terminal summary.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

import conftest
from conftest import make_model
from ruinlab import analytic as A
from ruinlab.cli import main
from ruinlab.model import Erlang, Exponential, StateParams, drift
from ruinlab.pricing import GSQuery, PutContract, gerber_shiu, price_perpetual_put, unit_penalty
from ruinlab.simulate import (
    estimate_exit_low,
    estimate_modified_ruin,
    estimate_overjump,
    estimate_recovery_red,
    estimate_sup_cdf,
    estimate_total_deficit,
    modified_ruin_composed,
    red_period_composed,
    total_deficit_composed,
)

N = 1_000_000
SEED = 20240611


class Gate:
    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.failures = []
        self.notes = []

    def check(self, ok, what):
        (self.notes if ok else self.failures).append(what)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        if exc is not None:
            self.failures.append(f"error: {exc_type.__name__}: {exc}")
        if dt > self.budget:
            self.failures.append(f"runtime {dt:.1f}s over {self.budget}s")
        verdict = "FAIL" if self.failures else "PASS"
        detail = "; ".join(self.failures) if self.failures else "; ".join(self.notes[-3:])
        line = f"[{verdict}] criterion {self.number:2d} {self.title} ({dt:.1f}s): {detail}"
        print(line)
        conftest.ACCEPTANCE_LINES.append(line)
        if exc is None and self.failures:
            pytest.fail(line, pytrace=False)
        return False


def combined_z(x, y):
    return abs(x.value - y.value) / math.hypot(x.stderr, y.stderr)


def test_criterion_01_lundberg_roots(normal, star):
    with Gate(1, "Lundberg roots", 1.0) as g:
        for model, exact in ((normal, [8, 95 / 3]), (star, [20 / 3, 32])):
            err = np.max(np.abs(A.lundberg_roots(model).roots - exact))
            g.check(err <= 1e-9, f"max root error {err:.1e}")


def test_criterion_02_drifts(normal, star):
    with Gate(2, "drifts", 1.0) as g:
        for model, exact in ((normal, Fraction(-19, 10)), (star, Fraction(-2, 5))):
            d = drift(model).stationary
            # rational value of the defining expression lambda2 * m - lambda1 / c
            st = model.states[0]
            rational = (Fraction(st.lambda2) * Fraction(2) / Fraction(20) - Fraction(st.lambda1) / Fraction(st.c))
            g.check(rational == exact, f"rational drift {rational}")
            g.check(abs(d - float(exact)) <= 1e-12, f"drift {d!r}")


def test_criterion_03_sup_law(star):
    with Gate(3, "supremum law", 120.0) as g:
        law = A.sup_law(star)
        order = np.argsort(law.rates)
        g.check(np.allclose(law.rates[order], [20 / 3, 32], atol=1e-9, rtol=0), "rates 20/3, 32")
        werr = np.max(np.abs(law.weights[order] - [32 / 57, -9 / 95]))
        g.check(werr <= 1e-9, f"weight error {werr:.1e}")
        grid = [0.05, 0.1, 0.2, 0.5]
        for u, est in zip(grid, estimate_sup_cdf(star, grid, N, seed=SEED)):
            dev = abs(est.value - law.cdf(u))
            g.check(dev <= max(3 * est.stderr, 0.005), f"u={u}: |mc - exact| = {dev:.1e}")


def test_criterion_04_exit_low(normal):
    with Gate(4, "exit-low curve", 120.0) as g:
        curve = A.exit_low_curve(normal)
        order = np.argsort(curve.rates)
        nerr = np.max(np.abs(curve.num[order] - [171 / 355, -49 / 426]))
        derr = np.max(np.abs(curve.den[order] - [19 / 355, -1 / 284]))
        g.check(max(nerr, derr) <= 1e-9, f"coefficient error {max(nerr, derr):.1e}")
        ref, _ = A.exit_low(normal, 0.1, 0.5)
        # the quoted reference is rounded to five places
        g.check(abs(ref - 0.78917) <= 2e-5, f"B_0.5(0.1) = {ref:.7f}")
        for u, b in ((0.1, 0.5), (0.2, 0.5), (0.1, 0.3)):
            exact, _ = A.exit_low(normal, u, b)
            z = estimate_exit_low(normal, u, b, N, seed=SEED).z(exact)
            g.check(abs(z) <= 3, f"(u,b)=({u},{b}): z = {z:+.2f}")


def test_criterion_05_modified_ruin(normal, star):
    with Gate(5, "modified ruin, a = b", 180.0) as g:
        ref = A.modified_ruin(normal, star, 0.1, 0.3, 0.3)
        g.check(abs(ref - 0.21319) <= 2e-5, f"Phi(0.1; b=0.3) = {ref:.7f}")
        for u, b in ((0.1, 0.3), (0.2, 0.3), (0.1, 0.5)):
            exact = A.modified_ruin(normal, star, u, b, b)
            est = estimate_modified_ruin(normal, star, u, b, b, N, seed=SEED)
            z = est.z(exact)
            g.check(abs(z) <= 3, f"(u,b)=({u},{b}): z = {z:+.2f}, sigma = {est.stderr:.1e}")


def _random_two_state(rng):
    while True:
        q = rng.uniform(0.2, 3.0, 2)
        states = [StateParams(rng.uniform(0.5, 4.0), rng.uniform(0.1, 2.0), rng.uniform(0.5, 4.0),
                              Exponential(rate=rng.uniform(1.0, 20.0))) for _ in range(2)]
        m = make_model([[-q[0], q[0]], [q[1], -q[1]]], states)
        if drift(m).stationary < -0.05:
            return m


def test_criterion_06_fixed_point(normal):
    with Gate(6, "fixed-point atoms", 5.0) as g:
        at = A.fixed_point_atoms(normal)
        g.check(abs(at.p_upper[0, 0]) <= 1e-10 and abs(at.R_upper[0, 0]) <= 1e-10,
                f"scalar p^-(0) = {at.p_upper[0, 0]:.1e}")
        Q = [[-1.0, 1.0], [2.0, -2.0]]
        frozen = make_model(Q, [StateParams(0.0, 1.0, 1.0, Erlang(2, 20.0)), StateParams(0.0, 0.5, 2.0,
                                                                                        Exponential(rate=5.0))])
        g.check(np.array_equal(A.fixed_point_atoms(frozen).p_lower, np.eye(2)), "lambda1 = 0 gives p_-(0) = I")
        rng = np.random.default_rng(SEED)
        for _ in range(5):
            res = max(A.fixed_point_atoms(_random_two_state(rng)).residuals)
            g.check(res <= 1e-10, f"2-state residual {res:.1e}")


def test_criterion_07_overshoot_law(star):
    with Gate(7, "overshoot law and mass balance", 120.0) as g:
        law = A.sup_law(star)
        for u in (0.05, 0.1, 0.2):
            ov = A.overshoot_law(star, u)
            err = abs(ov.mass - law.tail(u))
            g.check(err <= 1e-9, f"u={u}: mass error {err:.1e}")
            # cumulative measure on a 50-point grid (a histogram density is bin-noise bound at this n)
            grid = np.linspace(0.01, 0.6, 50)
            mc = estimate_overjump(star, u, 0.0, N, seed=SEED).overshoot_cdf(grid)
            sup = np.max(np.abs(mc - ov.cdf(grid)))
            g.check(sup <= 0.01, f"u={u}: overshoot sup-norm {sup:.1e}")
        m0 = A.overshoot_law(star, 1e-12).mass
        g.check(abs(m0 - 7 / 15) <= 1e-9, f"u->0+ mass {m0:.10f}")


def test_criterion_08_ruin_time_identities(star):
    with Gate(8, "ruin-time identities", 180.0) as g:
        u = 0.1
        grid = [0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0]
        lhs = estimate_total_deficit(star, u, grid, N, seed=SEED)
        rhs = total_deficit_composed(star, u, grid, N, seed=SEED + 1)
        sup = max(abs(a.value - b.value) for a, b in zip(lhs, rhs))
        g.check(sup <= 0.015, f"(a) deficit sup-norm {sup:.1e}")
        for s in (0.5, 1.0):
            direct = estimate_recovery_red(star, u, s, N, seed=SEED)
            comp = red_period_composed(star, u, s, N, seed=SEED + 1)
            z = combined_z(direct.red, comp)
            g.check(z <= 3, f"(b) s={s}: combined z = {z:.2f}")
            g.check(direct.pathwise_error <= direct.pathwise_tolerance,
                    f"(c) pathwise error {direct.pathwise_error:.1e} <= {direct.pathwise_tolerance:.1e}")


def test_criterion_09_two_regime_composition(normal, star):
    with Gate(9, "two-regime composition", 180.0) as g:
        u, a, b = 0.5, 0.2, 0.3
        direct = estimate_modified_ruin(normal, star, u, a, b, N, seed=SEED)
        comp = modified_ruin_composed(normal, star, u, a, b, N, seed=SEED + 1)
        z = combined_z(direct, comp)
        g.check(z <= 3, f"combined z = {z:.2f} ({direct.value:.5f} vs {comp.value:.5f})")


def test_criterion_10_pricing(normal, star):
    with Gate(10, "pricing identities", 60.0) as g:
        u, a, b = 0.1, 0.2, 0.3
        gs = gerber_shiu(normal, star, GSQuery(u, a, b, 0.0, unit_penalty(), N), seed=SEED)
        mr = estimate_modified_ruin(normal, star, u, a, b, N, seed=SEED)
        g.check(gs.value == mr.value and gs.stderr == mr.stderr, "w = 1, s = 0 is bit-exact")
        K = 1.5
        prices = [price_perpetual_put(normal, star, PutContract(K, 0.1, s, 0.5), a, b, N, seed=SEED).value
                  for s in (0.5, 1.0, 2.0)]
        g.check(all(0.0 <= p <= K for p in prices), "put in [0, K]")
        g.check(prices[0] > prices[1] > prices[2], "prices " + ", ".join(f"{p:.5f}" for p in prices))


def test_criterion_11_determinism(tmp_path, capsys):
    with Gate(11, "determinism across workers", 300.0) as g:
        blobs = {}
        for tag, w in (("w1", 1), ("w1-again", 1), ("w4", 4), ("w8", 8)):
            p = tmp_path / f"{tag}.csv"
            code = main(["verify", "--seed", "12345", "--workers", str(w), "--out", str(p)])
            g.check(code == 0, f"{tag}: exit {code}")
            blobs[tag] = p.read_bytes()
        capsys.readouterr()
        same = len(set(blobs.values())) == 1
        g.check(same, f"byte-identical CSV over {sorted(blobs)}")
