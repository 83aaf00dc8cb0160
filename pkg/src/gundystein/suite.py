"""Seeded verification batches and their reports.

Instance ``i`` of a batch with base seed ``S`` is generated from seed
``S + i``; a second stream ``default_rng([S + i, 1])`` draws the level
``lam``, multiplier coefficients and the John-Nirenberg root, so the
instance itself does not depend on which family is run.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import arith
from .certify import Certificate, CheckRecord
from .decomposition import decompose_positive, decompose_signed, verify_bounds, verify_signed
from .filtration import l2sq, martingale
from .generate import GeneratorConfig, generate
from . import john_nirenberg as jn
from . import multipliers as mu

Q = arith.Q

FAMILIES = ("decomposition", "signed", "multiplier", "jn")
JN_FLOORS = (Q(1, 4), Q(1, 3), Q(1, 2))


@dataclass(frozen=True)
class SuiteConfig:
    family: str = "decomposition"
    count: int = 100
    seed: int = 0
    thetas: tuple = (Q(0), Q(1, 2), Q(1))
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    diagnose: bool = True
    corrupt: frozenset = frozenset()
    workers: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.count < 0:
            raise ValueError("count must be nonnegative")


@dataclass
class InstanceResult:
    index: int
    seed: int
    description: str
    records: list[CheckRecord]
    stats: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(r.passed or r.expected_violation for r in self.records)


@dataclass
class VerificationReport:
    title: str
    instances: list[InstanceResult] = field(default_factory=list)

    @property
    def records(self) -> list[CheckRecord]:
        return [r for inst in self.instances for r in inst.records]

    @property
    def n_pass(self) -> int:
        return sum(r.passed and not r.expected_violation for r in self.records)

    @property
    def n_fail(self) -> int:
        bad = sum(not (r.passed or r.expected_violation) for r in self.records)
        return bad + sum(i.error is not None for i in self.instances)

    @property
    def n_expected(self) -> int:
        return sum(r.expected_violation for r in self.records)

    @property
    def passed(self) -> bool:
        return self.n_fail == 0

    def worst_margin(self):
        worst = None
        for r in self.records:
            m = r.margin
            if isinstance(m, str) or m is None:
                continue
            if worst is None or m < worst:
                worst = m
        return worst

    def stat_max(self, key):
        vals = [i.stats[key] for i in self.instances if key in i.stats]
        return max(vals) if vals else None

    def failures(self) -> list[tuple[int, CheckRecord]]:
        return [(i.index, r) for i in self.instances for r in i.records
                if not (r.passed or r.expected_violation)]

    def lines(self) -> list[str]:
        out = [f"# {self.title}"]
        for inst in self.instances:
            out.append(f"# instance {inst.index} seed={inst.seed} {inst.description}")
            if inst.error is not None:
                out.append(f"{inst.index}\terror\t{inst.error}\tFAIL")
            out.extend(f"{inst.index}\t{r.line()}" for r in inst.records)
        out.append(self.summary())
        return out

    def summary(self) -> str:
        worst = self.worst_margin()
        return (f"# summary: instances={len(self.instances)} pass={self.n_pass} fail={self.n_fail} "
                f"expected_violations={self.n_expected} "
                f"worst_margin={arith.fmt(worst) if worst is not None else '-'}")

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _level(rng, fmax):
    """``lam`` uniform on the grid ``fmax * k / 64``, ``k = 1..128``."""
    k = int(rng.integers(1, 129))
    base = fmax if fmax > 0 else Q(1)
    return base * Q(k, 64)


def _multiplier(rng, M):
    den = int(rng.integers(1, 4))
    return [Q(int(x), den) for x in rng.integers(-4, 5, size=M)]


def _run_one(cfg: SuiteConfig, index: int) -> InstanceResult:
    seed = cfg.seed + index
    gen = cfg.generator.with_seed(seed)
    if cfg.family == "signed":
        gen = replace(gen, values="signed")
    elif cfg.family == "jn":
        r = JN_FLOORS[index % len(JN_FLOORS)]
        gen = replace(gen, probs="floor", min_ratio=r, branching=(1, min(gen.branching[1], int(1 / r))))
    filt, f = generate(gen)
    aux = np.random.default_rng([seed, 1])
    desc = f"family={cfg.family} depth={filt.horizon} leaves={filt.n_leaves}"
    cert = Certificate(exact=True, corrupt=cfg.corrupt)
    stats: dict = {}
    try:
        if cfg.family == "decomposition":
            lam = _level(aux, martingale(filt, f).max())
            desc += f" lam={arith.fmt(lam)}"
            for theta in cfg.thetas:
                res = decompose_positive(filt, f, lam, theta, certify=False)
                sub = Certificate(exact=True, corrupt=cfg.corrupt)
                verify_bounds(res, sub)
                cert.extend(sub, prefix=f"theta={arith.fmt(theta)}:")
        elif cfg.family == "signed":
            lam = _level(aux, np.abs(martingale(filt, f)).max())
            desc += f" lam={arith.fmt(lam)}"
            res = decompose_signed(filt, f, lam, 0, certify=False)
            verify_signed(res, cert)
        elif cfg.family == "multiplier":
            M = filt.horizon
            a = _multiplier(aux, M)
            N = int(aux.integers(1, M + 1))
            desc += f" N={N} a=({','.join(arith.fmt(x) for x in a)})"
            rep = mu.certify_weak_type(filt, f, a, N, diagnose=cfg.diagnose, diag_points=8, cert=cert)
            stats["weak_ratio"] = rep.sup_ratio
            lhs, rhs, ok = mu.ito_isometry_check(filt, f, a, N)
            cert.eq("ito", mu.REF_ITO, lhs, rhs)
            cert.eq("ito.orthogonality", mu.REF_ITO, mu.orthogonality_defect(filt, f), Q(0))
            a_sup = max(abs(x) for x in a[:N])
            cert.le("ito.l2_contraction", mu.REF_ITO, lhs, a_sup * a_sup * l2sq(filt, f))
        else:
            _jn_checks(filt, f, aux, cert, stats)
            desc += f" alpha={arith.fmt(stats['alpha'])} root={stats['root']}"
    except Exception as exc:  # surfaced per instance, the batch continues
        return InstanceResult(index, seed, desc, cert.records, stats, f"{type(exc).__name__}: {exc}")
    return InstanceResult(index, seed, desc, cert.records, stats)


def _jn_checks(filt, f, aux, cert: Certificate, stats: dict) -> None:
    alpha, _ = jn.regularity_constant(filt)
    stats["alpha"] = alpha
    atoms = [(n, i) for n in range(1, filt.horizon + 1) for i in range(filt.n_atoms(n))]
    root = atoms[int(aux.integers(0, len(atoms)))]
    stats["root"] = filt.ids[root[0]][root[1]]
    jn.overshoot_check(filt, f, cert)
    prof = jn.bmo_norm(filt, f)
    B = prof.norm
    stats["B"] = B
    means = prof.means
    inside = filt.anc[root[0]] == root[1]
    g = np.where(inside, f - means[root[0]][root[1]], Q(0))
    osc = prof.oscillation[root[0]][root[1]]
    for lam in {osc, B}:
        if lam > 0:
            jn.cz_select(filt, g, root, lam, cert=cert, alpha=alpha)
    if B > 0:
        jn.cz_generations(filt, f, root, cert=cert)
        jn.certify_exp_integrability(filt, f, root, cert=cert)
    jn.certify_jn_tail(filt, f, root, cert=cert)


def _run_chunk(args):
    cfg, indices = args
    return [_run_one(cfg, i) for i in indices]


def run_suite(cfg: SuiteConfig) -> VerificationReport:
    title = f"suite family={cfg.family} count={cfg.count} seed={cfg.seed}"
    if cfg.family == "decomposition":
        title += " thetas=" + ",".join(arith.fmt(t) for t in cfg.thetas)
    report = VerificationReport(title)
    if cfg.workers > 1 and cfg.count > 1:
        chunks = [(cfg, list(range(w, cfg.count, cfg.workers))) for w in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = [r for part in pool.map(_run_chunk, chunks) for r in part]
        results.sort(key=lambda r: r.index)
    else:
        results = [_run_one(cfg, i) for i in range(cfg.count)]
    report.instances = results
    return report
