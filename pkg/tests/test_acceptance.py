"""End-to-end acceptance run.

Each test stores a one-line verdict in ``RESULTS`` before asserting, and
``conftest.pytest_terminal_summary`` prints the lines after the session.
"""

import time
from collections import Counter

import numpy as np
import pytest

from conftest import Q, binary_tree, fixture_path, two_point
from gundystein import john_nirenberg as jn
from gundystein import multipliers as mu
from gundystein import sharpness as sh
from gundystein.decomposition import decompose_positive, decompose_raw
from gundystein.filtration import Filtration, expectation, l1
from gundystein.generate import GeneratorConfig, generate
from gundystein.io import load_instance
from gundystein.suite import JN_FLOORS, SuiteConfig, run_suite

RESULTS: dict[int, str] = {}

# rational enclosure of e
E_LO, E_HI = Q(2718281828, 10**9), Q(2718281829, 10**9)


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def test_criterion_01_golden_two_point():
    start = time.perf_counter()
    ok = True
    for p in (Q(1, 10), Q(1, 4)):
        lam = Q(1)
        for theta in (1 - p, Q(1)):
            res = decompose_positive(two_point(p), [lam / p, 0], lam, theta)
            ok &= list(res.g) == [0, 0]
            ok &= expectation(res.filtration, res.variation()) == 2 * (1 - p) ** 2 * lam
            ok &= list(res.k) == [(2 - p) * lam, (1 - p) * lam]
            ok &= list(res.k_st) == [lam, 0]
            ok &= list(res.k_pr) == [(1 - p) * lam] * 2
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1
    assert record(1, ok, f"p in {{1/10, 1/4}}, exact, {elapsed:.3f}s")


def test_criterion_02_parametric_attainment():
    ok = True
    for theta in (Q(0), Q(1, 4), Q(1, 2), Q(3, 4)):
        p, lam = 1 - theta, Q(1)
        if p == 1:
            # E is all of Omega: a single-child split
            filt = Filtration.from_levels([[("Omega", None, 1)], [("E", "Omega", 1)]])
            f = [lam]
        else:
            filt, f = two_point(p), [lam / p, 0]
        res = decompose_positive(filt, f, lam, theta)
        ok &= np.abs(res.k).max() == (1 + theta) * lam and res.certificate.passed
    assert record(2, ok, "sup|k_theta| = (1+theta) lam for theta in {0, 1/4, 1/2, 3/4}")


def test_criterion_03_first_level_crossing():
    ok = True
    for p in (Q(1, 10), Q(1, 100)):
        filt, f = two_point(p), [1 / p, 0]
        res = decompose_positive(filt, f, Q(1, 2), 0)
        ok &= list(res.g) == [1 / p - 1, -1]
        ok &= l1(filt, res.g) == 2 * (1 - p) * l1(filt, f)
    assert record(3, ok, "||g||_1 = 2(1-p)||f||_1 for p in {1/10, 1/100}")


def test_criterion_04_decomposition_suite():
    start = time.perf_counter()
    cfg = SuiteConfig(family="decomposition", count=1000, seed=0,
                      generator=GeneratorConfig(depth=(1, 6), branching=(1, 4)))
    rep = run_suite(cfg)
    elapsed = time.perf_counter() - start
    fails = rep.failures()
    by_check = Counter(r.check_id for _, r in fails)
    bad = len({i for i, _ in fails})
    detail = (f"1000 instances x 3 thetas, {rep.n_pass} checks pass, {rep.n_fail} fail "
              f"on {bad} instances {dict(sorted(by_check.items()))}, {elapsed:.1f}s")
    # localization can fail when the compensator is positive on an atom that
    # never crosses; see the decisions ledger. The check stays strict.
    assert record(4, rep.passed and elapsed < 60, detail), detail


def test_criterion_05_signed_suite():
    rep = run_suite(SuiteConfig(family="signed", count=500, seed=10_000))
    # the negative part inherits the compensator leak of the positive case
    assert record(5, rep.passed, f"500 signed instances, {rep.n_pass} checks, {rep.n_fail} failures")


def _sharpness_grid():
    for p in (Q(1, 10), Q(1, 4), Q(1, 2)):
        for beta in sh.beta_grid(p):
            for lam in (Q(1), Q(3)):
                yield sh.TwoPointInstance(p, lam, beta)


def test_criterion_06_sharpness_oracle():
    ok, n = True, 0
    for inst in _sharpness_grid():
        n += 1
        a_min, arg = sh.minimize_phi_analytic(inst)
        b_min, _ = sh.minimize_phi_bruteforce(inst, 1000)
        ok &= b_min == a_min == sh.phi(inst, *arg)
    for p in (Q(1, 10), Q(1, 4), Q(1, 2)):
        ok &= (3 - 1 - 2 * p) == 2 * (1 - p * 1) == sh.piecewise_bound(p, 1)
    assert record(6, ok, f"{n} grid points, grid_n = 1000, brute force == analytic")


def test_criterion_07_dichotomy():
    rng = np.random.default_rng(7)
    ok, samples = True, 0
    for p in (Q(1, 10), Q(1, 4), Q(1, 3), Q(1, 2)):
        for lam in (Q(1), Q(3)):
            inst = sh.TwoPointInstance(p, lam, 1)
            v = sh.dichotomy_check(inst, *sh.witness(inst))
            ok &= v.attained and v.variation == 2 * (1 - p) * lam
            fE, fEc = inst.f()
            for _ in range(250):
                a, b = (Q(int(x), 997) * lam for x in rng.integers(0, 998, size=2))
                v = sh.dichotomy_check(inst, (0, 0), (fE - a, fEc - b), (a, b))
                ok &= v.holds and v.variation >= 2 * (1 - p) * lam
                samples += 1
    assert record(7, ok, f"witnesses attain 2(1-p)lam, {samples} random admissible k respect it")


def _adversarial():
    p = Q(1, 4)
    yield two_point(p), [1 / p, 0], [0, 1]
    yield two_point(Q(1, 100), 4), [100, 0], [1, -1, 1, -1]
    filt = binary_tree(6)
    rng = np.random.default_rng(1)
    yield filt, [Q(int(x)) for x in rng.choice([-1, 1], size=64)], [(-1) ** n for n in range(6)]
    spike = [Q(0)] * 64
    spike[0] = Q(64)
    yield filt, spike, [1, -1, 1, -1, 1, -1]


def test_criterion_08_weak_type():
    rep = run_suite(SuiteConfig(family="multiplier", count=500, seed=20_000))
    worst = rep.stat_max("weak_ratio")
    ok = rep.passed
    terms = Counter(r.check_id for r in rep.records if r.check_id.startswith("term_"))
    broken = Counter(r.check_id for _, r in rep.failures())
    for filt, f, a in _adversarial():
        w = mu.certify_weak_type(filt, f, a, diagnose=True)
        terms.update(r.check_id for r in w.certificate.records if r.check_id.startswith("term_"))
        broken.update(r.check_id for r in w.certificate.failures)
        worst = max(worst, w.sup_ratio)
    ok &= not broken and worst <= 16
    ok &= all(terms[f"{t}.bound"] > 0 for t in ("term_g", "term_h", "term_k"))
    # the g term reuses the localization bound, so it inherits the compensator leak
    detail = (f"max normalized weak ratio {float(worst):.4f} (bound 16), "
              f"{sum(terms.values())} proof sub-bounds, failing {dict(broken) or 'none'}")
    assert record(8, ok, detail), detail


def test_criterion_09_ito():
    rep = run_suite(SuiteConfig(family="multiplier", count=500, seed=30_000, diagnose=False))
    ito = [r for r in rep.records if r.check_id == "ito"]
    ok = len(ito) >= 500 and all(r.passed for r in ito) and rep.passed
    assert record(9, ok, f"{len(ito)} exact isometry identities")


def test_criterion_10_john_nirenberg():
    count = 300
    rep = run_suite(SuiteConfig(family="jn", count=count, seed=0))
    ok = rep.passed
    ids = Counter(r.check_id.split(".")[0] for r in rep.records)
    # generational measures against the rational enclosure of e
    gens = 0
    insts = [(inst.stats["root"], i) for i, inst in enumerate(rep.instances)]
    for root_id, i in insts:
        r = JN_FLOORS[i % len(JN_FLOORS)]
        cfg = GeneratorConfig(seed=i, probs="floor", min_ratio=r, branching=(1, min(4, int(1 / r))))
        filt, f = generate(cfg)
        if jn.bmo_norm(filt, f).norm == 0:
            continue
        root = filt.locate(root_id)
        P_A = filt.probs[root[0]][root[1]]
        sel = jn.cz_generations(filt, f, root)
        for k, m in enumerate(sel.measures, start=1):
            ok &= m <= (1 / E_HI) ** k * P_A
            gens += 1
    split = load_instance(fixture_path("jn_split.txt"))
    sel = jn.cz_generations(split.filtration, split.f, "Omega")
    ok &= sel.measures == [Q(1, 10)] and Q(1, 10) <= 1 / E_HI
    ok &= E_LO < float(jn._e(True)) + 1e-12 and E_LO < E_HI
    detail = (f"{count} regular instances, {rep.n_pass} checks "
              f"({', '.join(f'{k}={v}' for k, v in sorted(ids.items()))}), "
              f"{gens} nonempty generation measures (plus the alpha = 1/10 split) vs e <= {E_HI}")
    assert record(10, ok, detail)


def test_criterion_11_nonmeasurable_terminal():
    inst = load_instance(fixture_path("counterexample.txt"))
    raw = decompose_raw(inst.filtration, inst.raw, 1, 0)
    flagged = [r for r in raw.certificate.records if r.expected_violation]
    ok = (not raw.measurable and raw.k_sup == 100 and raw.norm_f == 1
          and raw.certificate.passed and {r.check_id for r in flagged} == {"raw.measurable", "c.k_max_void"})
    assert record(11, ok, f"sup|k| = {raw.k_sup} > lambda = 1 with ||f||_1 = {raw.norm_f}, "
                          f"{len(flagged)} expected violations")


def test_criterion_12_asymptotic():
    vals = [sh.remark_asymptotic_bound(Q(1, 2 ** k), 1) for k in range(1, 11)]
    ok = all(a < b for a, b in zip(vals, vals[1:])) and vals[-1] > Q(199, 100)
    # the same number is the analytic minimum at beta = 2
    ok &= all(v == sh.piecewise_bound(Q(1, 2 ** k), 2) for k, v in enumerate(vals, start=1))
    assert record(12, ok, f"2(1-2p) increasing, {float(vals[-1]):.6f} at p = 2^-10")
