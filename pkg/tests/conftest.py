import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from stratdisc import Design, make_weights
from stratdisc.construct import half_column_design, mult_table_design

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

KERNELS = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)]


def random_u_type(rng, n, m, s, p):
    base = np.repeat(np.arange(s**p), n // s**p)
    return Design(np.stack([rng.permutation(base) for _ in range(m)], axis=1), s, p)


@st.composite
def u_type_designs(draw, kernels=KERNELS, max_reps=3, m_range=(2, 5)):
    s, p = draw(st.sampled_from(kernels))
    reps = draw(st.integers(1, max_reps))
    m = draw(st.integers(*m_range))
    seed = draw(st.integers(0, 2**32 - 1))
    n = reps * s**p
    if n < 2:
        n = 2 * s**p
    return random_u_type(np.random.default_rng(seed), n, m, s, p)


@st.composite
def weight_schemes(draw, s, p):
    tag = draw(st.sampled_from(["constant", "exponential", "enumerator", "custom"]))
    if tag == "constant":
        return make_weights("constant", p)
    if tag == "exponential":
        return make_weights("exponential", p, y=draw(st.sampled_from([0.1, 0.25, 0.5, 0.9, 1.0])))
    if tag == "enumerator":
        return make_weights("enumerator", p, s=s, y=draw(st.sampled_from([0.1, 0.3, 0.5])))
    vals = draw(st.lists(st.integers(0, 5), min_size=p + 1, max_size=p + 1).filter(any))
    return make_weights("custom", p, values=vals)


@st.composite
def designs_with_weights(draw, **kw):
    D = draw(u_type_designs(**kw))
    return D, draw(weight_schemes(D.s, D.p))


@pytest.fixture(scope="session")
def gsoa_9_8():
    return mult_table_design(3, 2)


@pytest.fixture(scope="session")
def gsoa_9_4():
    return half_column_design(3, 2)


@pytest.fixture
def constant():
    return make_weights("constant", 2)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
