"""Stopping-time construction of the Gundy-Stein decomposition.

For ``f >= 0`` and a level ``lam > 0``::

    r        = first n >= 1 with f_n > lam
    eps_n    = df_n 1{r = n},   gamma_n = df_n 1{r > n}
    Lam_m    = sum_{k<=m} E_k[eps_{k+1}]           (Lam_0 = 0)
    s_theta  = first m >= 1 with Lam_m > theta*lam
    t_theta  = min(r, s_theta)

and ``f = g + h + k_st + k_pr`` with ``g = f - f_t``,
``h = sum_j (eps_j - E_{j-1}[eps_j]) 1{s >= j}``, ``k_st = f_{min(s, r-1)}``
and ``k_pr = Lam_{s-1}`` (``Lam_M`` when ``s`` is NEVER).  ``theta = 0``
gives the three-term decomposition with ``k_pr = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import arith
from .certify import Certificate
from .errors import DomainError
from .filtration import (
    NEVER,
    Filtration,
    crossing_time,
    evaluate_stopped,
    expectation,
    l1,
    l2sq,
    martingale,
    probability,
    project,
)

REF_A = "three-term bound (a)"
REF_B = "three-term bound (b)"
REF_C = "three-term bound (c)"
REF_4C = "four-term part (c)"
REF_4D = "four-term part (d)"
REF_4E = "four-term part (e)"
REF_SIGNED = "signed corollary"


@dataclass(frozen=True)
class CrossingData:
    paths: np.ndarray
    df: np.ndarray
    r: np.ndarray
    epsilon: np.ndarray
    gamma: np.ndarray
    Lambda: np.ndarray
    s_theta: np.ndarray
    t_theta: np.ndarray
    r_minus: np.ndarray


@dataclass
class DecompositionResult:
    filtration: Filtration
    f: np.ndarray
    lam: object
    theta: object
    g: np.ndarray
    h: np.ndarray
    k_st: np.ndarray
    k_pr: np.ndarray
    crossing: CrossingData | None = None
    dh: np.ndarray | None = None
    parts: tuple["DecompositionResult", "DecompositionResult"] | None = None
    certificate: Certificate | None = field(default=None, repr=False)

    @property
    def k(self) -> np.ndarray:
        return self.k_st + self.k_pr

    @property
    def signed(self) -> bool:
        return self.parts is not None

    def variation(self) -> np.ndarray:
        """Leafwise ``sum_n |E_n h - E_{n-1} h|`` from projections of ``h``."""
        return h_variation(self.filtration, self.h)


def _check_params(filt: Filtration, lam, theta):
    lam = arith.scalar(lam, filt.exact)
    theta = arith.scalar(theta, filt.exact)
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    return lam, theta


def _nonnegative(filt: Filtration, f) -> np.ndarray:
    f = filt.values(f)
    if (f < 0).any():
        raise DomainError("positive-case decomposition needs f >= 0 on every leaf")
    return f


def h_variation(filt: Filtration, h) -> np.ndarray:
    proj = martingale(filt, h)
    return np.abs(proj[1:] - proj[:-1]).sum(axis=0)


def first_passage(filt: Filtration, f, lam, paths: np.ndarray | None = None) -> np.ndarray:
    """``r = inf{n >= 1 : f_n > lam}`` per leaf (NEVER when no crossing)."""
    f = _nonnegative(filt, f)
    lam = arith.scalar(lam, filt.exact)
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if paths is None:
        paths = martingale(filt, f)
    return crossing_time(paths, lam)


def crossing_data(filt: Filtration, f, lam, theta=0) -> CrossingData:
    f = _nonnegative(filt, f)
    lam, theta = _check_params(filt, lam, theta)
    M = filt.horizon
    paths = martingale(filt, f)
    df = np.empty_like(paths)
    df[0] = paths[0]
    df[1:] = paths[1:] - paths[:-1]
    r = crossing_time(paths, lam)
    zero = arith.scalar(0, filt.exact)
    level = np.arange(M + 1)[:, None]
    eps = np.where(r[None, :] == level, df, zero)
    gamma = np.where(r[None, :] > level, df, zero)
    Lam = filt.zeros((M + 1, filt.n_leaves))
    for m in range(1, M):
        Lam[m] = Lam[m - 1] + project(filt, eps[m + 1], m)
    if M >= 1:
        Lam[M] = Lam[M - 1]
    s = crossing_time(Lam, theta * lam)
    t = np.minimum(r, s)
    r_minus = np.where(r == NEVER, NEVER, r - 1)
    return CrossingData(paths, df, r, eps, gamma, Lam, s, t, r_minus)


def decompose_positive(filt: Filtration, f, lam, theta=0, certify: bool = True) -> DecompositionResult:
    """Four-term decomposition of ``f >= 0`` at level ``lam`` with allowance ``theta``."""
    f = _nonnegative(filt, f)
    lam, theta = _check_params(filt, lam, theta)
    cd = crossing_data(filt, f, lam, theta)
    M = filt.horizon
    leaves = np.arange(filt.n_leaves)

    g = f - evaluate_stopped(filt, f, cd.t_theta, paths=cd.paths)

    dh = filt.zeros((M + 1, filt.n_leaves))
    for j in range(1, M + 1):
        pred = project(filt, cd.epsilon[j], j - 1)
        dh[j] = np.where(cd.s_theta >= j, cd.epsilon[j] - pred, arith.scalar(0, filt.exact))
    h = dh.sum(axis=0)

    k_st = evaluate_stopped(filt, f, np.minimum(cd.s_theta, cd.r_minus), paths=cd.paths, validate=False)
    s_finite = cd.s_theta != NEVER
    k_pr = np.where(s_finite, cd.Lambda[np.where(s_finite, cd.s_theta - 1, M), leaves], cd.Lambda[M])

    res = DecompositionResult(filt, f, lam, theta, g, h, k_st, k_pr, crossing=cd, dh=dh)
    if certify:
        res.certificate = verify_bounds(res)
    return res


def verify_bounds(res: DecompositionResult, cert: Certificate | None = None) -> Certificate:
    """Certify every bound and identity of the positive four-term decomposition."""
    filt, f, lam, theta = res.filtration, res.f, res.lam, res.theta
    cd = res.crossing
    cert = cert if cert is not None else Certificate(exact=filt.exact)
    M = filt.horizon
    zero = arith.scalar(0, filt.exact)
    norm_f = l1(filt, f)

    # 1. localization of g
    Eg = martingale(filt, res.g)
    support = (Eg[1:] != 0).any(axis=0)
    cert.le("a.localization", REF_A, probability(filt, support), norm_f / lam)
    cert.le("a.g_l1", REF_A, l1(filt, res.g), 2 * norm_f)
    cert.le("r.passage", REF_A, probability(filt, cd.r != NEVER), norm_f / lam)
    cert.flag("t.finite_eq_r", REF_A,
              bool(((cd.t_theta != NEVER) == (cd.r != NEVER)).all()), "{t finite} == {r finite}")

    # 2. variation of h
    var = res.variation()
    cert.le("b.variation", REF_B, expectation(filt, var), 2 * norm_f)
    cert.le("b.h_l1", REF_B, l1(filt, res.h), 2 * norm_f)
    cert.le("b.eps_sum", REF_B, expectation(filt, cd.epsilon.sum(axis=0)), norm_f)

    # 3. pointwise bounds on the bounded parts
    k = res.k
    cert.ge("c.k_st_min", REF_4C, res.k_st.min(), zero)
    cert.le("c.k_st_max", REF_4C, res.k_st.max(), lam)
    cert.ge("d.k_pr_min", REF_4D, res.k_pr.min(), zero)
    cert.le("d.k_pr_max", REF_4D, res.k_pr.max(), theta * lam)
    cert.ge("c.k_min", REF_C, k.min(), zero)
    cert.le("c.k_max", REF_C, k.max(), (1 + theta) * lam)

    # closed forms against the defining sums
    s_ge = cd.s_theta[None, :] >= np.arange(M + 1)[:, None]
    cert.eq_array("c.k_st_closed_form", REF_4C, res.k_st,
                  np.where(s_ge, cd.gamma, zero).sum(axis=0))
    pred = filt.zeros((M + 1, filt.n_leaves))
    for j in range(2, M + 1):
        pred[j] = project(filt, cd.epsilon[j], j - 1)
    cert.eq_array("d.k_pr_closed_form", REF_4D, res.k_pr, np.where(s_ge, pred, zero).sum(axis=0))

    # 4. mean of h
    eps1 = expectation(filt, cd.epsilon[1]) if M >= 1 else zero
    cert.eq("e.h_mean", REF_4E, expectation(filt, res.h), eps1)

    # 5. L1 identity for the bounded parts
    cert.eq("e.k_l1_identity", REF_4E, l1(filt, res.k_st) + l1(filt, res.k_pr), norm_f - eps1)
    cert.le("c.k_l1", REF_C, l1(filt, k), norm_f)

    # 6. L2 bounds
    cert.le("e.k_st_l2", REF_4E, l2sq(filt, res.k_st), lam * l1(filt, res.k_st))
    cert.le("e.k_pr_l2", REF_4E, l2sq(filt, res.k_pr), theta * lam * l1(filt, res.k_pr))
    cert.le("e.k_l2", REF_4E, l2sq(filt, k), (1 + theta) * lam * norm_f)

    # 7. h is the martingale of its increments
    ok = True
    Eh = martingale(filt, res.h)
    partial = np.cumsum(res.dh, axis=0) if res.dh.dtype != object else _cumsum(res.dh)
    for n in range(1, M + 1):
        if not _all_zero(project(filt, res.dh[n], n - 1), filt.exact):
            ok = False
        if not _all_zero(Eh[n] - partial[n], filt.exact):
            ok = False
    cert.flag("b.h_martingale", REF_B, ok, "E_{n-1}[dh_n] = 0 and E_n[h] = h_n")

    # 8. reconstruction
    cert.eq_array("reconstruction", REF_4E, res.g + res.h + res.k_st + res.k_pr, f)

    # stopped-sum identity E_n[f_t] = f_{n ^ t}
    f_t = f - res.g
    Ef_t = martingale(filt, f_t)
    ok = True
    for n in range(1, M + 1):
        stopped = evaluate_stopped(filt, f, np.minimum(cd.t_theta, n), paths=cd.paths, validate=False)
        if not _all_zero(Ef_t[n] - stopped, filt.exact):
            ok = False
    cert.flag("a.stopped_sum", REF_A, ok, "E_n[f_t] = f_{n^t}")
    return cert


def _cumsum(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    for n in range(1, a.shape[0]):
        out[n] = out[n - 1] + a[n]
    return out


def _all_zero(x: np.ndarray, exact: bool, scale: float = 1.0) -> bool:
    if exact:
        return bool((x == 0).all())
    return float(np.abs(x.astype(np.float64)).max(initial=0.0)) <= arith.TOL_IDENTITY * max(1.0, scale)


# --------------------------------------------------------------------------
# signed functions
# --------------------------------------------------------------------------

def decompose_signed(filt: Filtration, f, lam, theta=0, certify: bool = True) -> DecompositionResult:
    """Decompose ``f_+`` and ``f_-`` separately at the same level and subtract."""
    f = filt.values(f)
    lam, theta = _check_params(filt, lam, theta)
    zero = arith.scalar(0, filt.exact)
    fp = np.where(f > 0, f, zero)
    fm = np.where(f < 0, -f, zero)
    pos = decompose_positive(filt, fp, lam, theta, certify=False)
    neg = decompose_positive(filt, fm, lam, theta, certify=False)
    res = DecompositionResult(
        filt, f, lam, theta,
        g=pos.g - neg.g, h=pos.h - neg.h,
        k_st=pos.k_st - neg.k_st, k_pr=pos.k_pr - neg.k_pr,
        dh=pos.dh - neg.dh, parts=(pos, neg),
    )
    if certify:
        res.certificate = verify_signed(res)
    return res


def verify_signed(res: DecompositionResult, cert: Certificate | None = None) -> Certificate:
    """Doubled-constant bounds for a signed decomposition.

    With allowance ``theta`` the sup bound on ``k`` becomes ``(1+theta) lam``
    and the L2 bound ``2 (1+theta) lam ||f||_1``; ``theta = 0`` is the
    literal statement.
    """
    filt, f, lam, theta = res.filtration, res.f, res.lam, res.theta
    cert = cert if cert is not None else Certificate(exact=filt.exact)
    norm_f = l1(filt, f)
    Eg = martingale(filt, res.g)
    support = (Eg[1:] != 0).any(axis=0)
    cert.le("a'.localization", REF_SIGNED, probability(filt, support), 2 * norm_f / lam)
    cert.le("a'.g_l1", REF_SIGNED, l1(filt, res.g), 4 * norm_f)
    cert.le("b'.variation", REF_SIGNED, expectation(filt, res.variation()), 4 * norm_f)
    cert.le("b'.h_l1", REF_SIGNED, l1(filt, res.h), 4 * norm_f)
    k = res.k
    cert.le("c'.k_sup", REF_SIGNED, np.abs(k).max(), (1 + theta) * lam)
    cert.le("c'.k_l1", REF_SIGNED, l1(filt, k), 2 * norm_f)
    cert.le("c'.k_l2", REF_SIGNED, l2sq(filt, k), 2 * (1 + theta) * lam * norm_f)
    cert.eq_array("reconstruction", REF_SIGNED, res.g + res.h + k, f)
    return cert


# --------------------------------------------------------------------------
# terminal functions finer than the leaf partition
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RawFunction:
    """A function on a refinement of the leaves.

    Leaf ``i`` is split into cells with conditional weights ``weights[i]``
    (summing to 1) carrying ``values[i]``.  Such a function is measurable
    with respect to the last level only if it is constant on every leaf.
    """

    weights: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]

    @classmethod
    def from_leaf_values(cls, filt: Filtration, f) -> "RawFunction":
        one = arith.scalar(1, filt.exact)
        f = filt.values(f)
        return cls(tuple(arith.array([one], filt.exact) for _ in f),
                   tuple(arith.array([v], filt.exact) for v in f))

    def cells(self, filt: Filtration):
        leaf = np.concatenate([np.full(len(w), i, dtype=np.int64) for i, w in enumerate(self.weights)])
        prob = np.concatenate([w * filt.leaf_prob[i] for i, w in enumerate(self.weights)])
        vals = np.concatenate(self.values)
        return leaf, prob, vals

    def leaf_means(self, filt: Filtration) -> np.ndarray:
        return arith.array([(w * v).sum() for w, v in zip(self.weights, self.values)], filt.exact)

    def non_measurable_leaves(self, filt: Filtration) -> list[str]:
        return [filt.leaf_ids[i] for i, v in enumerate(self.values) if len(set(v.tolist())) > 1]


@dataclass
class RawDecomposition:
    measurable: bool
    offending_leaves: list[str]
    g_cells: np.ndarray
    h_cells: np.ndarray
    k_cells: np.ndarray
    cell_prob: np.ndarray
    norm_f: object
    k_sup: object
    certificate: Certificate


def decompose_raw(filt: Filtration, raw: RawFunction, lam, theta=0) -> RawDecomposition:
    """Run the construction with terminal value ``raw`` in place of ``E_M[raw]``.

    The stopping times only see ``f_n = E_n[raw]``, so on ``{t = NEVER}``
    the bounded part passes ``raw`` through unchanged.  When ``raw`` is not
    constant on some leaf the pointwise bound on ``k`` has no reason to hold;
    the certificate reports it as an expected violation.
    """
    lam, theta = _check_params(filt, lam, theta)
    fM = raw.leaf_means(filt)
    res = decompose_positive(filt, fM, lam, theta, certify=False)
    leaf, prob, vals = raw.cells(filt)
    if (vals < 0).any():
        raise DomainError("positive-case decomposition needs f >= 0")
    cd = res.crossing
    t = cd.t_theta[leaf]
    stopped = np.where(t != NEVER, cd.paths[np.where(t != NEVER, t, 0), leaf], vals)
    g = vals - stopped
    h = res.h[leaf]
    k = stopped - h
    offending = raw.non_measurable_leaves(filt)
    measurable = not offending
    cert = Certificate(exact=filt.exact)
    norm_f = (np.abs(vals) * prob).sum()
    k_sup = np.abs(k).max()
    cert.flag("raw.measurable", "terminal measurability", measurable,
              "constant on every leaf" if measurable else f"non-measurable on {', '.join(offending)}",
              expected_violation=not measurable)
    cert.eq_array("raw.reconstruction", REF_C, g + h + k, vals)
    if measurable:
        cert.le("c.k_max", REF_C, k.max(), (1 + theta) * lam)
    else:
        # hypothesis void: record the violation without counting it as a failure
        ok = k_sup <= (1 + theta) * lam
        cert.flag("c.k_max_void", REF_C, ok,
                  f"sup|k| = {arith.fmt(k_sup)} {'<=' if ok else '>'} {arith.fmt((1 + theta) * lam)}",
                  expected_violation=not ok)
    return RawDecomposition(measurable, offending, g, h, k, prob, norm_f, k_sup, cert)
