import numpy as np
import pytest
from hypothesis import strategies as st

from coordmd import ConditionalPmf, JointPmf, Pmf


def normalized(shape, values):
    """Build a normalized probability table from nonnegative raw values."""
    a = np.array(values, dtype=float).reshape(shape)
    total = a.sum()
    if total <= 0:
        a = np.ones(shape)
        total = a.sum()
    return a / total


@st.composite
def joint_pmfs(draw, max_axes=3, max_size=4, min_axes=1):
    ndim = draw(st.integers(min_axes, max_axes))
    shape = tuple(draw(st.integers(2, max_size)) for _ in range(ndim))
    cells = int(np.prod(shape))
    raw = draw(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=cells, max_size=cells)
    )
    return JointPmf(normalized(shape, raw))


@st.composite
def symbol_arrays(draw, size, min_n=1, max_n=24):
    n = draw(st.integers(min_n, max_n))
    return np.array(draw(st.lists(st.integers(0, size - 1), min_size=n, max_size=n)))


def random_joint(rng, shape):
    a = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    return JointPmf(a)


def random_conditional(rng, given_sizes, out_sizes):
    rows = int(np.prod(given_sizes))
    cols = int(np.prod(out_sizes))
    table = rng.dirichlet(np.ones(cols), size=rows).reshape(*given_sizes, *out_sizes)
    return ConditionalPmf(table=table, given_ndim=len(given_sizes))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
