"""Truncated martingale multipliers ``T_N(a; f) = sum_{n<=N} a_n df_n``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import arith
from .certify import Certificate
from .decomposition import decompose_signed
from .errors import DomainError
from .filtration import Filtration, expectation, l1, l2sq, martingale, martingale_differences, probability

REF_WEAK = "weak-type (1,1), constant 16"
REF_ITO = "discrete Ito isometry"
REF_TERM_G = "weak-type proof, g term"
REF_TERM_H = "weak-type proof, h term"
REF_TERM_K = "weak-type proof, k term"

WEAK_CONSTANT = 16


@dataclass(frozen=True)
class MultiplierSequence:
    coefficients: np.ndarray

    @classmethod
    def of(cls, values, exact: bool = True) -> "MultiplierSequence":
        return cls(arith.array(list(values), exact))

    @property
    def sup(self):
        if not len(self.coefficients):
            return 0
        return np.abs(self.coefficients).max()

    def __len__(self) -> int:
        return len(self.coefficients)


def _coeffs(filt: Filtration, a, N: int) -> np.ndarray:
    if isinstance(a, MultiplierSequence):
        a = a.coefficients
    a = arith.array(list(a), filt.exact)
    if not 1 <= N <= filt.horizon:
        raise DomainError(f"N = {N} outside 1..{filt.horizon}")
    if len(a) < N:
        raise DomainError(f"need at least {N} multiplier coefficients, got {len(a)}")
    return a


def transform(filt: Filtration, f, a, N: int | None = None) -> np.ndarray:
    """Leafwise ``sum_{n=1}^{N} a_n df_n``."""
    N = filt.horizon if N is None else N
    a = _coeffs(filt, a, N)
    df = martingale_differences(filt, f)
    out = filt.zeros()
    for n in range(1, N + 1):
        out = out + a[n - 1] * df[n]
    return out


def exact_tail(filt: Filtration, g, lam):
    """``P(|g| > lam)`` by summing leaf probabilities."""
    lam = arith.scalar(lam, filt.exact)
    if not lam > 0:
        raise DomainError("lambda must be positive")
    return probability(filt, np.abs(filt.values(g)) > lam)


def tail_profile(filt: Filtration, g):
    """Distinct positive jump points ``v`` of ``|g|`` with ``P(|g| > v)`` and ``P(|g| >= v)``."""
    absg = np.abs(filt.values(g))
    jumps = sorted(set(v for v in absg.tolist() if v > 0))
    out = []
    for v in jumps:
        out.append((v, probability(filt, absg > v), probability(filt, absg >= v)))
    return out


@dataclass
class WeakTypeReport:
    sup_ratio: object
    sweep: list = field(default_factory=list)
    certificate: Certificate | None = None


def certify_weak_type(filt: Filtration, f, a, N: int | None = None, diagnose: bool = False,
                      diag_points: int | None = None, cert: Certificate | None = None) -> WeakTypeReport:
    """Check ``lam P(|T_N| > lam) <= 16 ||a||_inf ||f||_1`` on an exhaustive sweep.

    ``|T_N|`` is a step function of finitely many values, so the tail jumps
    only at those values.  The sweep visits every jump, the midpoint of
    every gap (and half the smallest jump), and the left limit at every jump
    where ``lam P(|T| > lam)`` approaches its supremum on the gap.  The
    reported ratio is that supremum divided by ``||a||_inf ||f||_1``.
    """
    N = filt.horizon if N is None else N
    a = _coeffs(filt, a, N)
    cert = cert if cert is not None else Certificate(exact=filt.exact)
    zero = arith.scalar(0, filt.exact)
    T = transform(filt, f, a, N)
    a_sup = np.abs(a[:N]).max()
    scale = a_sup * l1(filt, f)
    prof = tail_profile(filt, T)

    sweep = []
    prev = zero
    for v, p_gt, p_ge in prof:
        mid = (prev + v) / 2
        sweep.append(("mid", mid, probability(filt, np.abs(T) > mid)))
        sweep.append(("left", v, p_ge))
        sweep.append(("jump", v, p_gt))
        prev = v
    worst = zero
    for kind, lam, p in sweep:
        value = lam * p
        cert.le(f"weak.{kind}", REF_WEAK, value, WEAK_CONSTANT * scale)
        if scale > 0 and value / scale > worst:
            worst = value / scale
    if not sweep:
        cert.flag("weak.trivial", REF_WEAK, True, "T_N(a;f) = 0")
    report = WeakTypeReport(worst, sweep, cert)

    if diagnose and a_sup > 0:
        a_hat = a[:N] / a_sup
        T_hat = T / a_sup
        lams = [lam for kind, lam, _ in sweep if kind in ("mid", "jump") and lam > 0]
        lams = [lam / a_sup for lam in lams]
        if diag_points is not None and len(lams) > diag_points:
            idx = np.linspace(0, len(lams) - 1, diag_points).round().astype(int)
            lams = [lams[i] for i in sorted(set(idx.tolist()))]
        for lam in lams:
            proof_terms(filt, f, a_hat, N, lam, cert, T=T_hat)
    return report


def proof_terms(filt: Filtration, f, a_hat, N: int, lam, cert: Certificate, T=None) -> None:
    """Certify the three sub-bounds of the weak-type argument at one ``lam``.

    ``a_hat`` must have sup-norm at most 1.  The signed decomposition is
    taken at level ``lam/2``.
    """
    norm_f = l1(filt, f)
    if T is None:
        T = transform(filt, f, a_hat, N)
    half = lam / 2
    dec = decompose_signed(filt, f, half, 0, certify=False)
    Tg = transform(filt, dec.g, a_hat, N)
    Th = transform(filt, dec.h, a_hat, N)
    Tk = transform(filt, dec.k, a_hat, N)
    cert.eq_array("weak.linearity", REF_WEAK, Tg + Th + Tk, T)

    p_total = probability(filt, np.abs(T) > lam)
    p_g = probability(filt, Tg != 0)
    p_h = probability(filt, np.abs(Th) > half)
    p_k = probability(filt, np.abs(Tk) > half)
    cert.le("weak.split", REF_WEAK, p_total, p_g + p_h + p_k)

    Eg = martingale(filt, dec.g)
    loc = probability(filt, (Eg[1:] != 0).any(axis=0))
    cert.le("term_g.support", REF_TERM_G, p_g, loc)
    cert.le("term_g.bound", REF_TERM_G, loc, 4 * norm_f / lam)

    var = expectation(filt, dec.variation())
    cert.le("term_h.markov", REF_TERM_H, p_h, 2 * var / lam)
    cert.le("term_h.bound", REF_TERM_H, 2 * var / lam, 8 * norm_f / lam)

    tk2 = l2sq(filt, Tk)
    k2 = l2sq(filt, dec.k)
    cert.le("term_k.markov", REF_TERM_K, p_k, 4 * tk2 / (lam * lam))
    cert.le("term_k.contraction", REF_TERM_K, tk2, k2)
    cert.le("term_k.bound", REF_TERM_K, 4 * k2 / (lam * lam), 4 * norm_f / lam)


def ito_isometry_check(filt: Filtration, f, a, N: int | None = None):
    """``(lhs, rhs, ok)`` for ``||T_N||_2^2 = sum a_n^2 E|df_n|^2``.

    The left side squares the transform leafwise; the right side sums the
    per-level energies of the differences.
    """
    N = filt.horizon if N is None else N
    a = _coeffs(filt, a, N)
    lhs = l2sq(filt, transform(filt, f, a, N))
    df = martingale_differences(filt, f)
    rhs = sum((a[n - 1] * a[n - 1] * l2sq(filt, df[n]) for n in range(1, N + 1)),
              arith.scalar(0, filt.exact))
    if filt.exact:
        ok = lhs == rhs
    else:
        ok = abs(lhs - rhs) <= arith.TOL_IDENTITY * max(1.0, abs(rhs))
    return lhs, rhs, bool(ok)


def orthogonality_defect(filt: Filtration, f):
    """``max_{m != n} |E[df_m df_n]|``; zero for every martingale."""
    df = martingale_differences(filt, f)
    M = filt.horizon
    worst = arith.scalar(0, filt.exact)
    for m in range(1, M + 1):
        for n in range(m + 1, M + 1):
            v = abs(expectation(filt, df[m] * df[n]))
            if v > worst:
                worst = v
    return worst
