"""Finite atomic filtrations and the martingale machinery on them.

Layout conventions used throughout the package:

* Levels are indexed ``0..M``.  Level 0 is a virtual root (the whole space
  with ``E_0 = 0``); levels ``1..M`` are the real partitions and level ``M``
  atoms are the leaves.
* A *terminal function* is a 1-d array with one value per leaf.
* An *adapted process* is a ``(M+1, L)`` array of leafwise path values; row
  ``n`` is constant on every level-``n`` atom and row 0 is zero.
* A *stopping time* is an int64 leaf array with values in ``1..M`` or
  :data:`NEVER`.  Times built from ``r - 1`` may also take the value 0,
  for which ``f_0 = 0``.

Exact mode stores values as ``gmpy2.mpq`` in object arrays, float mode as
float64.  A filtration is exact iff its probabilities are.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import arith
from ._kernels import NEVER, first_crossing, segment_sum
from .errors import DomainError, FiltrationError, MeasurabilityError

__all__ = [
    "NEVER",
    "Filtration",
    "conditional_expectation",
    "martingale",
    "martingale_differences",
    "project",
    "expectation",
    "evaluate_stopped",
    "validate_stopping_time",
    "check_alpha_regular",
    "regularity_constant",
]


@dataclass(frozen=True, eq=False)
class Filtration:
    """Immutable rooted tree of atoms.

    ``ids[n]``, ``probs[n]`` and ``parents[n]`` describe level ``n`` for
    ``n = 0..M``; ``parents[n][i]`` indexes the level ``n-1`` atom that
    contains atom ``i``.  Use :meth:`from_levels` to build and validate.
    """

    ids: tuple[tuple[str, ...], ...]
    probs: tuple[np.ndarray, ...]
    parents: tuple[np.ndarray, ...]
    anc: np.ndarray = field(init=False, repr=False)
    leaf_prob: np.ndarray = field(init=False, repr=False)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        M = len(self.ids) - 1
        L = len(self.ids[M])
        anc = np.zeros((M + 1, L), dtype=np.int64)
        anc[M] = np.arange(L)
        for n in range(M, 0, -1):
            anc[n - 1] = self.parents[n][anc[n]]
        object.__setattr__(self, "anc", anc)
        object.__setattr__(self, "leaf_prob", self.probs[M])
        index = {}
        for n in range(1, M + 1):
            for i, a in enumerate(self.ids[n]):
                index[a] = (n, i)
        object.__setattr__(self, "_index", index)

    # construction ---------------------------------------------------------
    @classmethod
    def from_levels(cls, levels: Sequence[Sequence[tuple]], exact: bool = True) -> "Filtration":
        """Build from ``levels[n-1] = [(atom_id, parent_id, prob), ...]``.

        Level-1 atoms take ``parent_id=None``.  Probabilities may be strings
        (``"1/3"``, ``"0.25"``), ints, floats or rationals.
        """
        if not levels:
            raise FiltrationError("empty", "filtration has no levels")
        ids: list[tuple[str, ...]] = [("<root>",)]
        probs: list[np.ndarray] = [arith.array([1], exact)]
        parents: list[np.ndarray] = [np.zeros(1, dtype=np.int64)]
        seen: set[str] = set()
        for n, level in enumerate(levels, start=1):
            prev = {a: i for i, a in enumerate(ids[n - 1])}
            lvl_ids, lvl_par, lvl_p = [], [], []
            for atom_id, parent_id, p in level:
                if atom_id in seen:
                    raise FiltrationError("duplicate-id", f"duplicate atom id {atom_id!r}")
                seen.add(atom_id)
                if n == 1:
                    if parent_id not in (None, "-", ""):
                        raise FiltrationError("missing-parent", f"level-1 atom {atom_id!r} cannot have a parent")
                    pidx = 0
                else:
                    if parent_id not in prev:
                        raise FiltrationError("missing-parent", f"atom {atom_id!r}: unknown parent {parent_id!r} at level {n - 1}")
                    pidx = prev[parent_id]
                lvl_ids.append(atom_id)
                lvl_par.append(pidx)
                lvl_p.append(p)
            if not lvl_ids:
                raise FiltrationError("empty-level", f"level {n} has no atoms")
            ids.append(tuple(lvl_ids))
            parents.append(np.asarray(lvl_par, dtype=np.int64))
            probs.append(arith.array(lvl_p, exact))
        filt = cls(tuple(ids), tuple(probs), tuple(parents))
        filt.validate()
        return filt

    def validate(self) -> None:
        exact = self.exact
        M = self.horizon
        for n in range(1, M + 1):
            p = self.probs[n]
            bad = [i for i, v in enumerate(p) if not v > 0]
            if bad:
                raise FiltrationError("nonpositive-probability",
                                      f"nonpositive atom probability for {self.ids[n][bad[0]]!r}")
            sums = segment_sum(self.parents[n], p, len(self.ids[n - 1]))
            for i, (got, want) in enumerate(zip(sums, self.probs[n - 1])):
                if exact:
                    ok = got == want
                else:
                    ok = abs(got - want) <= arith.TOL_IDENTITY * max(1.0, abs(want))
                if not ok:
                    if n == 1:
                        raise FiltrationError("probability-sum",
                                              f"level-1 probabilities sum to {arith.fmt(got)}, not 1")
                    if got == 0:
                        raise FiltrationError("childless-atom",
                                              f"atom {self.ids[n - 1][i]!r} at level {n - 1} has no children")
                    raise FiltrationError("children-sum",
                                          f"children do not partition parent {self.ids[n - 1][i]!r}: "
                                          f"{arith.fmt(got)} != {arith.fmt(want)}")

    # views ------------------------------------------------------------------
    @property
    def horizon(self) -> int:
        return len(self.ids) - 1

    @property
    def n_leaves(self) -> int:
        return len(self.ids[-1])

    @property
    def leaf_ids(self) -> tuple[str, ...]:
        return self.ids[-1]

    @property
    def exact(self) -> bool:
        return self.leaf_prob.dtype == object

    def n_atoms(self, n: int) -> int:
        return len(self.ids[n])

    def locate(self, atom_id: str) -> tuple[int, int]:
        """Return ``(level, index)`` of an atom id."""
        try:
            return self._index[atom_id]
        except KeyError:
            raise KeyError(f"unknown atom {atom_id!r}") from None

    def leaves_under(self, level: int, index: int) -> np.ndarray:
        return self.anc[level] == index

    def children(self, n: int) -> list[np.ndarray]:
        """Children (level ``n+1`` indices) of every level-``n`` atom."""
        par = self.parents[n + 1]
        order = np.argsort(par, kind="stable")
        counts = np.bincount(par, minlength=self.n_atoms(n))
        return np.split(order, np.cumsum(counts)[:-1])

    def zeros(self, shape=None) -> np.ndarray:
        return arith.zeros(self.n_leaves if shape is None else shape, self.exact)

    def values(self, f) -> np.ndarray:
        """Coerce a leaf function to this filtration's scalar type."""
        f = list(f) if not isinstance(f, np.ndarray) else f
        if len(f) != self.n_leaves:
            raise DomainError(f"expected {self.n_leaves} leaf values, got {len(f)}")
        if isinstance(f, np.ndarray) and f.dtype == (object if self.exact else np.float64):
            return f
        return arith.array(list(f), self.exact)

    def as_float(self) -> "Filtration":
        return Filtration(self.ids,
                          tuple(np.asarray(p, dtype=np.float64) for p in self.probs),
                          self.parents)


# --------------------------------------------------------------------------
# conditional expectations
# --------------------------------------------------------------------------

def atom_means(filt: Filtration, f) -> list[np.ndarray]:
    """Per-atom averages ``f_A`` at every level (level 0 holds ``E_0 = 0``)."""
    f = filt.values(f)
    M = filt.horizon
    mass = f * filt.leaf_prob
    means: list[np.ndarray] = [None] * (M + 1)
    means[M] = f
    for n in range(M, 1, -1):
        mass = segment_sum(filt.parents[n], mass, filt.n_atoms(n - 1))
        means[n - 1] = mass / filt.probs[n - 1]
    means[0] = filt.zeros(1)
    return means


def conditional_expectation(filt: Filtration, f, n: int) -> np.ndarray:
    """``E_n[f]`` as one value per level-``n`` atom; ``E_0 = 0``."""
    if not 0 <= n <= filt.horizon:
        raise DomainError(f"level {n} outside 0..{filt.horizon}")
    return atom_means(filt, f)[n]


def martingale(filt: Filtration, f) -> np.ndarray:
    """Leafwise paths ``f_n``, shape ``(M+1, L)``, row 0 zero."""
    means = atom_means(filt, f)
    out = np.empty((filt.horizon + 1, filt.n_leaves), dtype=means[-1].dtype)
    for n, m in enumerate(means):
        out[n] = m[filt.anc[n]]
    return out


def martingale_differences(filt: Filtration, f) -> np.ndarray:
    """``df_n = f_n - f_{n-1}`` for ``n = 1..M``; row 0 is zero."""
    paths = martingale(filt, f)
    out = np.empty_like(paths)
    out[0] = paths[0]
    out[1:] = paths[1:] - paths[:-1]
    return out


def project(filt: Filtration, x, n: int) -> np.ndarray:
    """``E_n[x]`` broadcast back to the leaves."""
    if n == 0:
        return filt.zeros()
    if n == filt.horizon:
        return filt.values(x)
    x = filt.values(x)
    sums = segment_sum(filt.anc[n], x * filt.leaf_prob, filt.n_atoms(n))
    return (sums / filt.probs[n])[filt.anc[n]]


def project_paths(filt: Filtration, x) -> np.ndarray:
    """All projections ``E_n[x]``, shape ``(M+1, L)``."""
    return martingale(filt, x)


def expectation(filt: Filtration, x):
    x = filt.values(x)
    return (x * filt.leaf_prob).sum()


def probability(filt: Filtration, mask: np.ndarray):
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return arith.scalar(0, filt.exact)
    return filt.leaf_prob[mask].sum()


def l1(filt: Filtration, x):
    return expectation(filt, np.abs(filt.values(x)))


def l2sq(filt: Filtration, x):
    x = filt.values(x)
    return expectation(filt, x * x)


def sup_abs(x):
    return np.abs(x).max() if len(x) else 0


# --------------------------------------------------------------------------
# stopping times
# --------------------------------------------------------------------------

def validate_stopping_time(filt: Filtration, tau: np.ndarray) -> None:
    """Raise :class:`MeasurabilityError` unless ``{tau = n}`` is a union of level-``n`` atoms."""
    tau = np.asarray(tau, dtype=np.int64)
    M = filt.horizon
    if tau.shape != (filt.n_leaves,):
        raise MeasurabilityError(f"stopping time needs {filt.n_leaves} leaf values")
    valid = (tau == NEVER) | ((tau >= 1) & (tau <= M))
    if not valid.all():
        bad = int(tau[~valid][0])
        raise MeasurabilityError(f"stopping time value {bad} outside 1..{M} and NEVER")
    for n in range(1, M + 1):
        hit = np.bincount(filt.anc[n], weights=(tau == n), minlength=filt.n_atoms(n))
        size = np.bincount(filt.anc[n], minlength=filt.n_atoms(n))
        split = (hit != 0) & (hit != size)
        if split.any():
            atom = filt.ids[n][int(np.flatnonzero(split)[0])]
            raise MeasurabilityError(f"{{tau = {n}}} splits atom {atom!r}")


def evaluate_stopped(filt: Filtration, f, tau, paths: np.ndarray | None = None,
                     validate: bool = True) -> np.ndarray:
    """Leafwise ``f_tau``; ``f`` itself where ``tau`` is NEVER, 0 where ``tau`` is 0.

    ``validate=False`` admits non-stopping times such as ``r - 1``.
    """
    tau = np.asarray(tau, dtype=np.int64)
    if validate:
        validate_stopping_time(filt, tau)
    f = filt.values(f)
    if paths is None:
        paths = martingale(filt, f)
    finite = tau != NEVER
    idx = np.where(finite, tau, 0)
    out = paths[idx, np.arange(filt.n_leaves)]
    return np.where(finite, out, f)


# --------------------------------------------------------------------------
# regularity
# --------------------------------------------------------------------------

def regularity_constant(filt: Filtration):
    """Exact ``min P(C)/P(P)`` over child/parent pairs at levels ``n >= 2``.

    Returns ``(ratio, (level, child_id, parent_id))``; a filtration with no
    pairs (``M = 1``) has constant 1 and no witness.
    """
    best, where = None, None
    for n in range(2, filt.horizon + 1):
        par = filt.parents[n]
        ratio = filt.probs[n] / filt.probs[n - 1][par]
        i = int(np.argmin(ratio))
        if best is None or ratio[i] < best:
            best = ratio[i]
            where = (n, filt.ids[n][i], filt.ids[n - 1][par[i]])
    if best is None:
        return arith.scalar(1, filt.exact), None
    return best, where


def check_alpha_regular(filt: Filtration, alpha):
    """``(is_regular, exact_constant, worst_pair)`` for ``P(C) >= alpha P(parent)``."""
    alpha = arith.scalar(alpha, filt.exact)
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    const, where = regularity_constant(filt)
    return bool(const >= alpha), const, where


def crossing_time(paths: np.ndarray, level) -> np.ndarray:
    """First ``n >= 1`` with ``paths[n] > level`` (strict), else NEVER."""
    return first_crossing(paths, level)
