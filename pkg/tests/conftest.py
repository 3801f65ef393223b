from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from ruinlab.model import ChainSpec, Erlang, Exponential, HyperExponential, ModelSpec, StateParams, validate_model
from ruinlab.verify import example_model, example_star_model


@pytest.fixture(scope="session")
def normal():
    return example_model()


@pytest.fixture(scope="session")
def star():
    return example_star_model()


def make_model(Q, states):
    Q = np.asarray(Q, dtype=float)
    return validate_model(ModelSpec(ChainSpec(Q.shape[0], tuple(map(tuple, Q))), tuple(states)))


def two_state(l1=(2.0, 1.0), l2=(1.0, 0.5), c=(1.0, 2.0), claims=None, q=(0.7, 1.3)):
    claims = claims or (Erlang(2, 20.0), Exponential(rate=5.0))
    Q = [[-q[0], q[0]], [q[1], -q[1]]]
    return make_model(Q, [StateParams(a, b, cc, cl) for a, b, cc, cl in zip(l1, l2, c, claims)])


claim_laws = st.one_of(
    st.builds(Erlang, st.integers(1, 3), st.floats(1.0, 30.0)),
    st.builds(Exponential, rate=st.floats(0.5, 30.0)),
    st.floats(0.05, 0.95).flatmap(
        lambda w: st.builds(lambda r1, r2: HyperExponential((w, 1.0 - w), (r1, r2)), st.floats(0.5, 10.0),
                            st.floats(10.5, 40.0))
    ),
)


@st.composite
def scalar_models(draw, negative=True):
    """Scalar models with rational claims; negative drift by construction."""
    claim = draw(claim_laws)
    l1 = draw(st.floats(0.5, 5.0))
    l2 = draw(st.floats(0.1, 3.0))
    if negative:
        # premium mean 1/c exceeds the claim flow by the factor 1 + f
        f = draw(st.floats(0.1, 3.0))
        c = l1 / (l2 * claim.mean * (1.0 + f))
    else:
        c = draw(st.floats(0.2, 5.0))
    return make_model([[0.0]], [StateParams(l1, l2, c, claim)])


@st.composite
def matrix_models(draw, m=None):
    m = m or draw(st.integers(2, 3))
    rates = draw(st.lists(st.floats(0.1, 3.0), min_size=m * m, max_size=m * m))
    Q = np.array(rates).reshape(m, m)
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    states = [
        StateParams(draw(st.floats(0.0, 4.0)), draw(st.floats(0.0, 3.0)), draw(st.floats(0.3, 5.0)),
                    draw(claim_laws))
        for _ in range(m)
    ]
    return make_model(Q, states)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
