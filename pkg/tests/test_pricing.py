import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruinlab.pricing import (
    ContractError,
    GSQuery,
    PenaltyFn,
    PutContract,
    boundary_search,
    curve_csv,
    gerber_shiu,
    make_put_penalty,
    price_perpetual_put,
    unit_penalty,
)
from ruinlab.simulate import estimate_modified_ruin

N = 40_000
SEED = 11


def test_put_penalty_values():
    w = make_put_penalty(2.0, 0.0)
    assert w(0.0, 0.0) == pytest.approx(1.0)
    assert w(0.0, math.log(2.0)) == pytest.approx(1.5)
    assert w(5.0, 1e6) == pytest.approx(2.0)
    # deep negative overshoot would mean exp(beta - y) > K
    assert w(0.0, -1.0) == 0.0
    assert np.array_equal(w(np.zeros(3), np.zeros(3)), np.ones(3))
    with pytest.raises(ValueError):
        make_put_penalty(0.0, 0.0)


@given(st.floats(0.1, 10.0), st.floats(-2.0, 2.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_put_penalty_bounded_by_strike(K, beta, x, y):
    v = float(make_put_penalty(K, beta)(x, y))
    assert 0.0 <= v <= K


def test_unit_and_scaled_penalties():
    one = unit_penalty()
    assert np.array_equal(one(np.zeros(4), np.ones(4)), np.ones(4))
    three = one.scaled(3.0)
    assert three(0.0, 0.0) == 3.0 and "3.0" in three.tag


def test_gerber_shiu_unit_penalty_is_modified_ruin(normal, star):
    for u, a, b in [(0.1, 0.3, 0.3), (0.5, 0.2, 0.3)]:
        gs = gerber_shiu(normal, star, GSQuery(u, a, b, 0.0, unit_penalty(), N), seed=SEED)
        mr = estimate_modified_ruin(normal, star, u, a, b, N, seed=SEED)
        assert gs.value == mr.value and gs.stderr == mr.stderr


def test_gerber_shiu_linear_in_penalty(normal, star):
    q = lambda w: GSQuery(0.1, 0.2, 0.3, 0.5, w, N)  # noqa: E731
    w1 = make_put_penalty(2.0, 0.0)
    w2 = PenaltyFn(lambda x, y: x + y, "x+y")
    comb = PenaltyFn(lambda x, y: 2.0 * w1(x, y) + 0.5 * w2(x, y), "comb")
    v1, v2, vc = (gerber_shiu(normal, star, q(w), seed=SEED).value for w in (w1, w2, comb))
    assert vc == pytest.approx(2.0 * v1 + 0.5 * v2, rel=1e-12)


def test_zero_penalty_gives_zero(normal, star):
    zero = PenaltyFn(lambda x, y: 0.0 * x, "0")
    est = gerber_shiu(normal, star, GSQuery(0.1, 0.2, 0.3, 0.0, zero, 2000), seed=SEED)
    assert est.value == 0.0 and est.stderr == 0.0


def test_negative_penalty_rejected(normal, star):
    neg = PenaltyFn(lambda x, y: -1.0 + 0.0 * x, "neg")
    with pytest.raises(ValueError, match="negative"):
        gerber_shiu(normal, star, GSQuery(0.1, 0.2, 0.3, 0.0, neg, 5000), seed=SEED)


def test_discount_monotone_on_shared_seeds(normal, star):
    vals = [gerber_shiu(normal, star, GSQuery(0.1, 0.2, 0.3, s, unit_penalty(), N), seed=SEED).value
            for s in (0.0, 0.5, 1.0, 2.0)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_heavy_penalty_flag(normal, star):
    light = gerber_shiu(normal, star, GSQuery(0.1, 0.2, 0.3, 0.0, unit_penalty(), N), seed=SEED)
    assert not light.heavy_penalty
    heavy = PenaltyFn(lambda x, y: np.exp(200.0 * y), "exp(200y)")
    est = gerber_shiu(normal, star, GSQuery(0.1, 0.2, 0.3, 0.0, heavy, N), seed=SEED)
    assert est.heavy_penalty


@pytest.mark.parametrize("kw", [dict(K=0.0), dict(s=0.0), dict(beta=0.6), dict(beta=0.8, K=5.0)])
def test_contract_errors(kw):
    args = dict(K=1.5, beta=0.1, s=0.5, u=0.5) | kw
    with pytest.raises(ContractError):
        PutContract(**args)


def test_query_errors():
    with pytest.raises(ValueError):
        GSQuery(0.1, 0.4, 0.3, 0.0, unit_penalty())
    with pytest.raises(ValueError):
        GSQuery(0.1, 0.2, 0.3, -1.0, unit_penalty())


def test_put_price_range_and_level(normal, star):
    K = 1.5
    c = PutContract(K, 0.1, 0.5, 0.5)
    price = price_perpetual_put(normal, star, c, 0.2, 0.3, N, seed=SEED)
    assert 0.0 <= price.value <= K
    # the put is the Gerber-Shiu function at level u - beta
    direct = gerber_shiu(normal, star, GSQuery(0.4, 0.2, 0.3, 0.5, make_put_penalty(K, 0.1), N), seed=SEED)
    assert price.value == direct.value


def test_boundary_search(normal, star):
    betas = [0.0, 0.1, 0.2, 0.3]
    res = boundary_search(normal, star, 0.5, 1.5, 0.5, betas, 0.2, 0.3, 20_000, seed=SEED)
    assert res.beta_star in betas
    assert res.prices[betas.index(res.beta_star)] == res.prices.max()
    assert np.all((res.prices >= 0) & (res.prices <= 1.5))
    text = curve_csv(res)
    lines = text.splitlines()
    assert lines[0] == "beta,price,stderr" and len(lines) == 5
    assert float(lines[2].split(",")[1]) == res.prices[1]
    with pytest.raises(ValueError):
        boundary_search(normal, star, 0.5, 1.5, 0.5, [], 0.2, 0.3, 100)


@settings(max_examples=10, deadline=None)
@given(st.floats(1.4, 3.0), st.floats(0.0, 0.3))
def test_put_price_property(normal, star, K, beta):
    c = PutContract(K, beta, 1.0, 0.6)
    est = price_perpetual_put(normal, star, c, 0.1, 0.2, 2000, seed=SEED)
    assert 0.0 <= est.value <= K
