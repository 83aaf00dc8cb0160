import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gundystein import _kernels as K

pytestmark = pytest.mark.skipif(K.numba_impl is None, reason="numba missing")


@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 200))
def test_segment_sum_agrees(seed, size, n):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, size, n)
    vals = rng.normal(size=n)
    np.testing.assert_allclose(K.numba_impl.segment_sum(idx, vals, size),
                               K.numpy_impl.segment_sum(idx, vals, size), rtol=1e-12, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 30))
def test_first_crossing_agrees(seed, M, L):
    rng = np.random.default_rng(seed)
    paths = rng.integers(-3, 4, size=(M + 1, L)).astype(float)
    paths[0] = 0
    level = float(rng.integers(-2, 3))
    assert np.array_equal(K.numba_impl.first_crossing(paths, level),
                          K.numpy_impl.first_crossing(paths, level))


def test_first_crossing_ignores_virtual_row():
    paths = np.array([[9.0, 9.0], [0.0, 2.0], [3.0, 0.0]])
    assert K.numpy_impl.first_crossing(paths, 1.0).tolist() == [2, 1]
    assert K.numpy_impl.first_crossing(paths, 5.0).tolist() == [K.NEVER] * 2


@given(st.lists(st.integers(-50, 50), min_size=6, max_size=6), st.integers(1, 60))
def test_lattice_argmin_agrees_with_row_major_ties(coef, n):
    a = K.numpy_impl.phi_lattice_argmin(*coef, n)
    b = K.numba_impl.phi_lattice_argmin(*coef, n)
    assert a == b


def test_lattice_tie_prefers_first_row():
    # |i - j| is zero along the diagonal; the first hit is (0, 0)
    assert K.numpy_impl.phi_lattice_argmin(0, 1, -1, 0, 0, 0, 5) == (0, 0, 0)


def test_object_arrays_bypass_jit():
    from gundystein.arith import Q
    vals = np.array([Q(1, 3), Q(1, 6)], dtype=object)
    out = K.numba_impl.segment_sum(np.array([0, 0]), vals, 1)
    assert out[0] == Q(1, 2)


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, GUNDYSTEIN_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "import gundystein; print(gundystein.backend_name())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
