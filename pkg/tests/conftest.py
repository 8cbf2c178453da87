import numpy as np
import pytest
from hypothesis import strategies as st

from su3laser import params as pm

positive = st.floats(min_value=0.2, max_value=5.0, allow_nan=False, allow_infinity=False)


@st.composite
def collective_rates(draw, N=st.sampled_from([2, 3])):
    """Random collective-only rates with a nonzero drive."""
    return pm.EffectiveRates(Gamma_c=draw(positive), W=draw(positive), Omega=draw(positive),
                             N=draw(N))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, n=3):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
