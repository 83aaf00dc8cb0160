"""Martingale BMO, Calderon-Zygmund selection and John-Nirenberg certificates.

Thresholds such as ``s = e * B`` are irrational.  In exact mode they are
carried as :class:`~gundystein.reals.Real` values and every comparison with
a rational is certified by interval arithmetic; in float mode ``math.e``
is used with the float tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import arith, reals
from ._kernels import segment_sum
from .certify import Certificate
from .errors import DomainError
from .filtration import Filtration, atom_means, check_alpha_regular, regularity_constant

REF_BMO = "martingale BMO norm"
REF_OVERSHOOT = "overshoot on regular filtrations"
REF_CZ = "martingale Calderon-Zygmund selection"
REF_GEN = "generational selection"
REF_TAIL = "John-Nirenberg tail, c1 = e, c2 = alpha/e"
REF_PARAM = "John-Nirenberg parametric tail"
REF_EXP = "exponential integrability"


def _e(exact: bool):
    return reals.Real.e() if exact else math.e


def _exp(x, exact: bool):
    return reals.exp(x) if exact else math.exp(float(x))


def _log(x, exact: bool):
    return reals.log(x) if exact else math.log(float(x))


def _gt(x, y) -> bool:
    """Strict ``x > y`` that also works when either side is a Real."""
    if isinstance(x, reals.Real) or isinstance(y, reals.Real):
        return reals.compare(x, y) > 0
    return x > y


# --------------------------------------------------------------------------
# BMO
# --------------------------------------------------------------------------

@dataclass
class BmoProfile:
    means: list[np.ndarray]
    oscillation: list[np.ndarray]
    norm: object
    argmax: tuple[int, str] | None

    def osc(self, filt: Filtration, atom_id: str):
        n, i = filt.locate(atom_id)
        return self.oscillation[n][i]


def bmo_norm(filt: Filtration, f) -> BmoProfile:
    """Mean oscillation ``E[|f - f_A| 1_A] / P(A)`` on every atom and its supremum."""
    f = filt.values(f)
    means = atom_means(filt, f)
    osc: list[np.ndarray] = [filt.zeros(1)]
    best, where = arith.scalar(0, filt.exact), None
    for n in range(1, filt.horizon + 1):
        dev = np.abs(f - means[n][filt.anc[n]]) * filt.leaf_prob
        o = segment_sum(filt.anc[n], dev, filt.n_atoms(n)) / filt.probs[n]
        osc.append(o)
        i = int(np.argmax(o))
        if o[i] > best:
            best, where = o[i], (n, filt.ids[n][i])
    return BmoProfile(means, osc, best, where)


# --------------------------------------------------------------------------
# overshoot
# --------------------------------------------------------------------------

def overshoot_check(filt: Filtration, f, cert: Certificate | None = None):
    """Check ``f_n <= f_{n-1} / alpha`` for ``f >= 0`` with the exact regularity constant.

    Returns ``(ok, max_ratio, alpha)`` where ``max_ratio`` is the largest
    ``f_n / f_{n-1}`` over child atoms whose parent mean is positive.
    """
    f = filt.values(f)
    if (f < 0).any():
        raise DomainError("overshoot check needs f >= 0")
    alpha, _ = regularity_constant(filt)
    means = atom_means(filt, f)
    ok = True
    worst = None
    for n in range(2, filt.horizon + 1):
        parent = means[n - 1][filt.parents[n]]
        child = means[n]
        if (child * alpha > parent).any():
            ok = False
        pos = parent > 0
        if (~pos).any() and (child[~pos] != 0).any():
            ok = False
        if pos.any():
            r = (child[pos] / parent[pos]).max()
            worst = r if worst is None or r > worst else worst
    if worst is None:
        worst = arith.scalar(1, filt.exact)
    if cert is not None:
        cert.flag("overshoot", REF_OVERSHOOT, ok, f"max f_n/f_(n-1) = {arith.fmt(worst)}")
        cert.le("overshoot.ratio", REF_OVERSHOOT, worst, 1 / alpha)
    return ok, worst, alpha


# --------------------------------------------------------------------------
# Calderon-Zygmund selection
# --------------------------------------------------------------------------

@dataclass
class Selected:
    level: int
    index: int
    atom_id: str
    average: object
    parent: tuple[int, int] | None = None


@dataclass
class CzSelection:
    root: tuple[int, int]
    lam: object
    generations: list[list[Selected]] = field(default_factory=list)
    measures: list = field(default_factory=list)
    certificate: Certificate | None = None

    @property
    def atoms(self) -> list[Selected]:
        return [a for gen in self.generations for a in gen]


def _resolve_root(filt: Filtration, root) -> tuple[int, int]:
    if isinstance(root, str):
        return filt.locate(root)
    return tuple(root)


def cz_select(filt: Filtration, g, root, lam, cert: Certificate | None = None,
              alpha=None) -> list[Selected]:
    """One generation of the martingale CZ selection inside ``root`` at level ``lam``.

    Walks levels below the root in order and selects an atom the first time
    the average of ``|g|`` over it exceeds ``lam`` strictly; descendants of
    selected atoms are not visited.  Requires the root average to be at
    most ``lam``.  When ``cert`` is given, the three conclusions are
    certified leafwise.
    """
    N, ri = _resolve_root(filt, root)
    ag = np.abs(filt.values(g))
    means = atom_means(filt, ag)
    if _gt(means[N][ri], lam):
        raise DomainError("root average of |g| exceeds lambda")
    if alpha is None:
        alpha, _ = regularity_constant(filt)
    inside = filt.anc[N] == ri
    covered = np.zeros(filt.n_leaves, dtype=bool)
    chosen: list[Selected] = []
    for m in range(N + 1, filt.horizon + 1):
        cand = np.unique(filt.anc[m][inside & ~covered])
        for i in cand.tolist():
            if _gt(means[m][i], lam):
                chosen.append(Selected(m, i, filt.ids[m][i], means[m][i]))
                covered |= filt.anc[m] == i
    if cert is not None:
        exact = filt.exact
        upper = lam / alpha
        ok_i = all(_gt(s.average, lam) for s in chosen)
        cert.flag("cz.i.lower", REF_CZ, ok_i, "lambda < average on selected atoms")
        for s in chosen:
            cert.le("cz.i.upper", REF_CZ, s.average, upper)
        good = inside & ~covered
        if good.any():
            cert.le("cz.ii.good", REF_CZ, ag[good].max(), lam)
        else:
            cert.flag("cz.ii.good", REF_CZ, True, "no unselected leaves")
        total = _sum([filt.probs[s.level][s.index] for s in chosen], exact)
        mass = (ag[inside] * filt.leaf_prob[inside]).sum()
        # an empty selection is compared exactly; 0 * Real would be undecidable
        cert.le("cz.iii.measure", REF_CZ, total * lam if chosen else total, mass)
    return chosen


def _sum(values, exact):
    total = arith.scalar(0, exact)
    for v in values:
        total = total + v
    return total


def cz_generations(filt: Filtration, f, root, s=None, max_gen: int | None = None,
                   cert: Certificate | None = None) -> CzSelection:
    """Iterated selection: generation ``k+1`` selects inside each generation-``k`` atom ``P``
    for ``(f - f_P) 1_P`` at level ``s``.  ``s`` defaults to ``e * B``.
    """
    f = filt.values(f)
    exact = filt.exact
    N, ri = _resolve_root(filt, root)
    prof = bmo_norm(filt, f)
    B = prof.norm
    if s is None:
        if B == 0:
            raise DomainError("BMO norm is zero; nothing to select")
        s = _e(exact) * B
    elif not isinstance(s, reals.Real):
        s = arith.scalar(s, exact)
    if not _gt(s, B):
        raise DomainError("level s must exceed the BMO norm")
    alpha, _ = regularity_constant(filt)
    means = prof.means
    sel = CzSelection((N, ri), s)
    frontier = [Selected(N, ri, filt.ids[N][ri], means[N][ri])]
    P_root = filt.probs[N][ri]
    in_root = filt.anc[N] == ri
    gen = 0
    while frontier and (max_gen is None or gen < max_gen):
        nxt: list[Selected] = []
        for P in frontier:
            g = np.where(filt.anc[P.level] == P.index, f - means[P.level][P.index],
                         arith.scalar(0, exact))
            for child in cz_select(filt, g, (P.level, P.index), s, cert=cert, alpha=alpha):
                child.parent = (P.level, P.index)
                nxt.append(child)
        if not nxt:
            break
        gen += 1
        sel.generations.append(nxt)
        sel.measures.append(_sum([filt.probs[c.level][c.index] for c in nxt], exact))
        frontier = nxt

    if cert is not None:
        _certify_generations(filt, f, sel, B, s, alpha, P_root, in_root, means, cert)
    sel.certificate = cert
    return sel


def _certify_generations(filt, f, sel, B, s, alpha, P_root, in_root, means, cert):
    exact = filt.exact
    N, ri = sel.root
    ratio = B / s
    measures = sel.measures or [arith.scalar(0, exact)]
    for k, mass in enumerate(measures, start=1):
        cert.le(f"gen.measure.{k}", REF_GEN, mass, ratio ** k * P_root)
    # pointwise chain: off E_k the oscillation is at most k s / alpha
    dev = np.abs(f - means[N][ri])
    depth = len(sel.generations)
    for k in range(1, depth + 2):
        if k <= depth:
            covered = np.zeros(filt.n_leaves, dtype=bool)
            for a in sel.generations[k - 1]:
                covered |= filt.anc[a.level] == a.index
        else:
            covered = np.zeros(filt.n_leaves, dtype=bool)
        off = in_root & ~covered
        if off.any():
            cert.le(f"gen.pointwise.{k}", REF_GEN, dev[off].max(), k * s / alpha)
    # average increments between nested selected atoms
    for gen in sel.generations:
        for a in gen:
            pl, pi = a.parent
            inc = abs(means[a.level][a.index] - means[pl][pi])
            cert.le("gen.avg_increment", REF_GEN, inc, s / alpha)


# --------------------------------------------------------------------------
# tail and exponential integrability
# --------------------------------------------------------------------------

def default_t_grid(B) -> list:
    return [B * arith.Q(2) ** j if not isinstance(B, float) else B * 2.0 ** j for j in range(-2, 7)]


def root_tail(filt: Filtration, f, root, t):
    """``P({|f - f_A| > t} n A)`` for the root atom ``A``."""
    N, ri = _resolve_root(filt, root)
    f = filt.values(f)
    means = atom_means(filt, f)
    inside = filt.anc[N] == ri
    mask = inside & (np.abs(f - means[N][ri]) > t)
    if not mask.any():
        return arith.scalar(0, filt.exact)
    return filt.leaf_prob[mask].sum()


def certify_jn_tail(filt: Filtration, f, root, t_grid=None, u_values=(), alpha=None,
                    cert: Certificate | None = None) -> Certificate:
    """Certify the exponential tail bound on a grid of ``t`` values.

    ``alpha`` defaults to the filtration's exact regularity constant (any
    smaller value gives a weaker bound).  ``u_values`` adds the parametric
    bounds with ``s = u B``.
    """
    exact = filt.exact
    cert = cert if cert is not None else Certificate(exact=exact)
    N, ri = _resolve_root(filt, root)
    f = filt.values(f)
    B = bmo_norm(filt, f).norm
    const, _ = regularity_constant(filt)
    alpha = const if alpha is None else arith.scalar(alpha, exact)
    if alpha > const:
        raise DomainError("filtration is not alpha-regular for the requested alpha")
    P_A = filt.probs[N][ri]
    if B == 0:
        for t in (t_grid or [arith.scalar(1, exact)]):
            cert.eq("jn.tail.constant", REF_TAIL, root_tail(filt, f, (N, ri), t), arith.scalar(0, exact))
        return cert
    t_grid = default_t_grid(B) if t_grid is None else [arith.scalar(t, exact) for t in t_grid]
    e = _e(exact)
    for t in t_grid:
        if not t > 0:
            raise DomainError("t must be positive")
        lhs = root_tail(filt, f, (N, ri), t)
        rhs = e * _exp(-(alpha / e) * (t / B), exact) * P_A
        cert.le("jn.tail", REF_TAIL, lhs, rhs)
        for u in u_values:
            u = arith.scalar(u, exact)
            if not u > 1:
                raise DomainError("u must exceed 1")
            rate = alpha * _log(u, exact) / u
            cert.le("jn.tail.param", REF_PARAM, lhs, u * _exp(-rate * (t / B), exact) * P_A)
    return cert


def exponent_rate(u, exact: bool = True):
    """``log(u) / u``, the parametric decay rate per unit ``alpha``."""
    if isinstance(u, reals.Real):
        return reals.log(u) / u
    return _log(u, exact) / u


def u_grid_optimal(grid=None, exact: bool = True) -> tuple[bool, object]:
    """Whether ``u = e`` maximizes ``log(u)/u`` on the grid (default {1.5, 2, e, 3, 4})."""
    e = _e(exact)
    if grid is None:
        grid = [arith.scalar("3/2", exact), arith.scalar(2, exact), e,
                arith.scalar(3, exact), arith.scalar(4, exact)]
    at_e = reals.Real(lambda ctx: 1 / ctx.e, 1 / math.e) if exact else 1 / math.e
    ok = True
    for u in grid:
        if u is e:
            continue
        if not _gt(at_e, exponent_rate(u, exact)):
            ok = False
    return ok, at_e


def certify_exp_integrability(filt: Filtration, f, root, beta=None, alpha=None,
                              cert: Certificate | None = None):
    """Certify ``E[exp(beta |f - f_A| / B) 1_A] / P(A) <= 1 + e^2 beta / (alpha - e beta)``.

    ``beta`` defaults to ``alpha / (2e)``.  Returns ``(lhs, rhs, ok)``.
    """
    exact = filt.exact
    cert = cert if cert is not None else Certificate(exact=exact)
    N, ri = _resolve_root(filt, root)
    f = filt.values(f)
    B = bmo_norm(filt, f).norm
    const, _ = regularity_constant(filt)
    alpha = const if alpha is None else arith.scalar(alpha, exact)
    e = _e(exact)
    if beta is None:
        beta = alpha / (2 * e)
    elif not isinstance(beta, reals.Real):
        beta = arith.scalar(beta, exact)
    if not _gt(beta, 0) or not _gt(alpha / e, beta):
        raise DomainError("beta must lie in (0, alpha/e)")
    one = arith.scalar(1, exact)
    rhs = 1 + e * e * beta / (alpha - e * beta)
    if B == 0:
        cert.le("jn.exp", REF_EXP, one, rhs)
        return one, rhs, cert["jn.exp"].passed
    means = atom_means(filt, f)
    inside = np.flatnonzero(filt.anc[N] == ri)
    P_A = filt.probs[N][ri]
    dev = np.abs(f[inside] - means[N][ri])
    w = filt.leaf_prob[inside] / P_A
    if exact:
        lhs = _exp_moment(dev.tolist(), w.tolist(), beta, B)
    else:
        lhs = float((w * np.exp(float(beta) * dev / B)).sum())
    rec = cert.le("jn.exp", REF_EXP, lhs, rhs)
    return lhs, rhs, rec.passed


def _exp_moment(dev, w, beta, B) -> reals.Real:
    """Interval-evaluated ``sum_i w_i exp(beta dev_i / B)``."""
    dev = list(dev)
    w = list(w)

    def fn(ctx):
        total = ctx.mpf(0)
        b = reals._to_iv(beta, ctx)
        for d, wi in zip(dev, w):
            total += reals._to_iv(wi, ctx) * ctx.exp(b * reals._to_iv(d / B, ctx))
        return total

    approx = sum(float(wi) * math.exp(float(beta) * float(d) / float(B)) for d, wi in zip(dev, w))
    return reals.Real(fn, approx)


def regular_alpha(filt: Filtration, alpha) -> bool:
    return check_alpha_regular(filt, alpha)[0]
