"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``GUNDYSTEIN_NUMBA`` is not set to ``0``/``false``/``off``.  Both
paths are always importable as ``numpy_impl`` and ``numba_impl`` (the latter
is ``None`` without numba) so benchmarks and tests can compare them.

Only float64 / int64 arrays are routed to numba.  Object arrays (exact
``mpq`` arithmetic) always go through numpy.
"""

from __future__ import annotations

import os
import types

import numpy as np

NEVER = np.iinfo(np.int64).max

_FLAG = os.environ.get("GUNDYSTEIN_NUMBA", "1").strip().lower()
JIT_REQUESTED = _FLAG not in ("0", "false", "off", "no")

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False

USE_NUMBA = JIT_REQUESTED and _HAVE_NUMBA


# --------------------------------------------------------------------------
# pure numpy
# --------------------------------------------------------------------------

def _np_segment_sum(index, values, size):
    if values.dtype == object:
        out = np.empty(size, dtype=object)
        out[:] = 0
        np.add.at(out, index, values)
        return out
    return np.bincount(index, weights=values, minlength=size)


def _np_first_crossing(paths, level):
    # paths has shape (M+1, L); row 0 is the virtual level and never crosses
    above = paths[1:] > level
    hit = above.any(axis=0)
    first = np.argmax(above, axis=0).astype(np.int64) + 1
    return np.where(hit, first, NEVER)


def _np_phi_lattice_argmin(c0, ci, cj, d0, di, dj, n):
    idx = np.arange(n + 1, dtype=np.int64)
    best = None
    best_ij = (0, 0)
    # row blocks keep memory flat for large n
    block = max(1, 2_000_000 // (n + 1))
    for start in range(0, n + 1, block):
        i = idx[start:start + block, None]
        vals = np.abs(c0 + ci * i + cj * idx[None, :]) + np.abs(d0 + di * i + dj * idx[None, :])
        flat = int(np.argmin(vals))
        v = int(vals.flat[flat])
        if best is None or v < best:
            best = v
            best_ij = (start + flat // (n + 1), flat % (n + 1))
    return best, best_ij[0], best_ij[1]


numpy_impl = types.SimpleNamespace(
    segment_sum=_np_segment_sum,
    first_crossing=_np_first_crossing,
    phi_lattice_argmin=_np_phi_lattice_argmin,
)


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------

def _loop_segment_sum(index, values, size):
    out = np.zeros(size, dtype=np.float64)
    for k in range(index.shape[0]):
        out[index[k]] += values[k]
    return out


def _loop_first_crossing(paths, level):
    m1, n_leaves = paths.shape
    out = np.empty(n_leaves, dtype=np.int64)
    never = np.iinfo(np.int64).max
    for leaf in range(n_leaves):
        out[leaf] = never
        for n in range(1, m1):
            if paths[n, leaf] > level:
                out[leaf] = n
                break
    return out


def _loop_phi_lattice_argmin(c0, ci, cj, d0, di, dj, n):
    best = np.iinfo(np.int64).max
    bi = 0
    bj = 0
    for i in range(n + 1):
        for j in range(n + 1):
            v = abs(c0 + ci * i + cj * j) + abs(d0 + di * i + dj * j)
            if v < best:
                best = v
                bi = i
                bj = j
    return best, bi, bj


if _HAVE_NUMBA:
    _nb_segment_sum = numba.njit(cache=True)(_loop_segment_sum)
    _nb_first_crossing = numba.njit(cache=True)(_loop_first_crossing)
    _nb_phi = numba.njit(cache=True)(_loop_phi_lattice_argmin)

    def _nb_segment_sum_dispatch(index, values, size):
        if values.dtype == object:
            return _np_segment_sum(index, values, size)
        return _nb_segment_sum(
            np.ascontiguousarray(index, dtype=np.int64),
            np.ascontiguousarray(values, dtype=np.float64),
            size,
        )

    def _nb_first_crossing_dispatch(paths, level):
        if paths.dtype == object:
            return _np_first_crossing(paths, level)
        return _nb_first_crossing(np.ascontiguousarray(paths, dtype=np.float64), float(level))

    def _nb_phi_dispatch(c0, ci, cj, d0, di, dj, n):
        best, i, j = _nb_phi(c0, ci, cj, d0, di, dj, n)
        return int(best), int(i), int(j)

    numba_impl = types.SimpleNamespace(
        segment_sum=_nb_segment_sum_dispatch,
        first_crossing=_nb_first_crossing_dispatch,
        phi_lattice_argmin=_nb_phi_dispatch,
    )
else:  # pragma: no cover
    numba_impl = None


active = numba_impl if USE_NUMBA else numpy_impl

segment_sum = active.segment_sum
first_crossing = active.first_crossing
phi_lattice_argmin = active.phi_lattice_argmin


def backend_name() -> str:
    return "numba" if active is numba_impl else "numpy"
