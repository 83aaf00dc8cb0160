"""Seeded random instances.

The stream is numpy's ``default_rng(seed)`` (PCG64) and the draws are made
in a fixed documented order, so an instance is a pure function of
``(config, seed)``:

1. depth ``M`` uniform in ``depth``;
2. level by level, atom by atom: the number of children uniform in
   ``branching`` (forced to 1 once the leaf budget is spent), then integer
   weights ``w_i`` uniform in ``1..8`` for the split;
3. leaf values per ``values``.

Splits are exact rationals.  Under ``probs="uniform"`` the children of an
atom are equal; under ``probs="floor"`` child ``i`` receives the fraction
``r + (1 - b r) w_i / sum(w)`` of its parent, so every child keeps at least
``r`` of the parent and the tree is ``r``-regular.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import arith
from .errors import DomainError
from .filtration import Filtration

Q = arith.Q

PROB_SCHEMES = ("uniform", "random", "floor")
VALUE_SCHEMES = ("nonneg", "signed", "spike")


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    depth: tuple[int, int] = (1, 6)
    branching: tuple[int, int] = (1, 4)
    probs: str = "random"
    min_ratio: object = None
    values: str = "nonneg"
    max_leaves: int = 48
    value_range: int = 20

    def __post_init__(self):
        lo, hi = self.depth
        if not 1 <= lo <= hi:
            raise DomainError(f"bad depth range {self.depth}")
        blo, bhi = self.branching
        if not 1 <= blo <= bhi:
            raise DomainError(f"bad branching range {self.branching}")
        if self.probs not in PROB_SCHEMES:
            raise DomainError(f"unknown probability scheme {self.probs!r}")
        if self.values not in VALUE_SCHEMES:
            raise DomainError(f"unknown value scheme {self.values!r}")
        if self.max_leaves < 1:
            raise DomainError("max_leaves must be positive")
        if self.probs == "floor":
            r = self.floor
            if not 0 < r <= 1:
                raise DomainError("min_ratio must lie in (0, 1]")
            if bhi * r > 1:
                raise DomainError(f"infeasible: branching {bhi} with min ratio {arith.fmt(r)}")

    @property
    def floor(self):
        return arith.scalar(self.min_ratio if self.min_ratio is not None else 0, True)

    def with_seed(self, seed: int) -> "GeneratorConfig":
        return replace(self, seed=seed)


def _split(rng, b: int, cfg: GeneratorConfig) -> list:
    w = rng.integers(1, 9, size=b).tolist()
    if b == 1:
        return [Q(1)]
    if cfg.probs == "uniform":
        return [Q(1, b)] * b
    total = sum(w)
    if cfg.probs == "random":
        return [Q(x, total) for x in w]
    r = cfg.floor
    return [r + (1 - b * r) * Q(x, total) for x in w]


def generate_filtration(cfg: GeneratorConfig, rng=None) -> Filtration:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    M = int(rng.integers(cfg.depth[0], cfg.depth[1] + 1))
    lo, hi = cfg.branching
    levels = []
    # level 1 partitions the whole space like any other split
    prev = [("n0", None, Q(1))]
    for n in range(1, M + 1):
        cur = []
        budget = cfg.max_leaves
        for k, (pid, _, pp) in enumerate(prev):
            b = int(rng.integers(lo, hi + 1))
            remaining = len(prev) - k - 1
            if len(cur) + b + remaining > budget:
                b = max(1, budget - len(cur) - remaining)
            for i, frac in enumerate(_split(rng, b, cfg)):
                cur.append((f"{pid}.{i}", pid if n > 1 else None, pp * frac))
        levels.append(cur)
        prev = cur
    return Filtration.from_levels(levels, exact=True)


def generate_values(cfg: GeneratorConfig, n_leaves: int, rng) -> list:
    R = cfg.value_range
    den = int(rng.integers(1, 5))
    if cfg.values == "nonneg":
        nums = rng.integers(0, R + 1, size=n_leaves)
    elif cfg.values == "signed":
        nums = rng.integers(-R, R + 1, size=n_leaves)
    else:
        nums = np.zeros(n_leaves, dtype=np.int64)
        spikes = int(rng.integers(1, max(2, n_leaves // 4) + 1))
        where = rng.choice(n_leaves, size=min(spikes, n_leaves), replace=False)
        nums[where] = rng.integers(5 * R, 50 * R + 1, size=len(where))
    return [Q(int(x), den) for x in nums]


def generate(cfg: GeneratorConfig, exact: bool = True) -> tuple[Filtration, np.ndarray]:
    """Deterministic ``(filtration, f)`` for ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    filt = generate_filtration(cfg, rng)
    f = arith.array(generate_values(cfg, filt.n_leaves, rng), True)
    if not exact:
        filt = filt.as_float()
        f = f.astype(np.float64)
    return filt, f
