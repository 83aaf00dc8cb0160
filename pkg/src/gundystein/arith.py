"""Scalar arithmetic modes.

Two modes are supported:

``rational``
    Exact rationals (``gmpy2.mpq``) stored in numpy object arrays.  Every
    identity and inequality is decided exactly.
``float``
    float64 arrays.  Identities are checked to an absolute/relative tolerance
    of ``TOL_IDENTITY`` and inequalities to ``TOL_INEQUALITY``.

The default mode comes from the ``GUNDYSTEIN_ARITH`` environment variable
(``rational`` unless set to ``float``).
"""

from __future__ import annotations

import os
import re
from fractions import Fraction
from numbers import Rational

import numpy as np
from gmpy2 import mpq

RATIONAL = "rational"
FLOAT = "float"

TOL_IDENTITY = 1e-12
TOL_INEQUALITY = 1e-9

Q = mpq

_SCALAR_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/[+]?\d+)?$")


def default_mode() -> str:
    mode = os.environ.get("GUNDYSTEIN_ARITH", RATIONAL).strip().lower()
    return FLOAT if mode == FLOAT else RATIONAL


def parse_scalar(text: str, exact: bool = True):
    """Parse ``"3/4"``, ``"0.25"``, ``"2"`` or ``"1e-3"``.

    Decimal text is read exactly in rational mode, so ``"0.1"`` is 1/10.
    """
    s = text.strip()
    if not _SCALAR_RE.match(s):
        raise ValueError(f"not a number: {text!r}")
    if "/" in s:
        num, den = s.split("/")
        if int(den) == 0:
            raise ValueError(f"zero denominator: {text!r}")
        value = Q(Fraction(num)) / Q(int(den))
    else:
        value = Q(Fraction(s))
    return value if exact else float(value)


def scalar(x, exact: bool):
    """Coerce ``x`` to the scalar type of the given mode."""
    if exact:
        if isinstance(x, str):
            return parse_scalar(x)
        if isinstance(x, float):
            return Q(Fraction(x))
        if isinstance(x, (int, Rational)) or type(x) is type(Q(0)):
            return Q(x)
        raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")
    if isinstance(x, str):
        return parse_scalar(x, exact=False)
    return float(x)


def array(values, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(len(values), dtype=object)
        out[:] = [scalar(v, True) for v in values]
        return out
    return np.asarray([scalar(v, False) for v in values], dtype=np.float64)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out[...] = Q(0)
        return out
    return np.zeros(shape, dtype=np.float64)


def is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def fmt(x) -> str:
    """Render a scalar for reports: exact rationals as ``p/q``."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if type(x) is type(Q(0)):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)
