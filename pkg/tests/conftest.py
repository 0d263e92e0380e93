import numpy as np
import pytest
from hypothesis import strategies as st

from qdouble.paulis import PauliOperator


@st.composite
def paulis(draw, n=None, d=None):
    d = d if d is not None else draw(st.sampled_from([2, 3, 5]))
    n = n if n is not None else draw(st.integers(1, 3))
    x = draw(st.lists(st.integers(0, d - 1), min_size=n, max_size=n))
    z = draw(st.lists(st.integers(0, d - 1), min_size=n, max_size=n))
    phase = draw(st.integers(0, 2 * d - 1))
    return PauliOperator(d, x, z, phase)


@st.composite
def pauli_pairs(draw):
    d = draw(st.sampled_from([2, 3, 5]))
    n = draw(st.integers(1, 3))
    return draw(paulis(n, d)), draw(paulis(n, d))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
