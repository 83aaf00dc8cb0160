import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import Q, binary_tree, two_point
from gundystein import arith
from gundystein.decomposition import (
    RawFunction,
    crossing_data,
    decompose_positive,
    decompose_raw,
    decompose_signed,
    first_passage,
    verify_signed,
)
from gundystein.errors import DomainError
from gundystein.filtration import NEVER, Filtration, expectation, l1, martingale, probability
from gundystein.generate import GeneratorConfig, generate

import oracle

seeds = st.integers(0, 2**32 - 1)
thetas = st.sampled_from([Q(0), Q(1, 4), Q(1, 2), Q(1), Q(3)])
levels = st.integers(1, 128)


def _instance(seed, values="nonneg", depth=(1, 5)):
    filt, f = generate(GeneratorConfig(seed=seed, depth=depth, max_leaves=24, values=values))
    return filt, f


def _lam(filt, f, k):
    top = np.abs(martingale(filt, f)).max()
    return (top if top > 0 else Q(1)) * Q(k, 64)


# -- worked two-point instances ------------------------------------------------

@pytest.mark.parametrize("p", [Q(1, 10), Q(1, 4)])
def test_two_point_golden(p):
    lam = Q(1)
    theta = 1 - p
    res = decompose_positive(two_point(p), [lam / p, 0], lam, theta)
    assert list(res.g) == [0, 0]
    assert list(res.h) == [lam / p - (2 - p) * lam, -(1 - p) * lam]
    assert list(res.k) == [(2 - p) * lam, (1 - p) * lam]
    assert list(res.k_st) == [lam, 0]
    assert list(res.k_pr) == [(1 - p) * lam] * 2
    assert expectation(res.filtration, res.variation()) == 2 * (1 - p) ** 2 * lam
    cd = res.crossing
    assert list(cd.s_theta) == [NEVER, NEVER]
    assert list(cd.t_theta) == list(cd.r) == [2, NEVER]
    assert res.certificate.passed


def test_two_point_crossing_increment():
    p, lam = Q(1, 4), Q(1)
    cd = crossing_data(two_point(p), [lam / p, 0], lam, 0)
    assert list(cd.epsilon[2]) == [lam / p - lam, 0]
    assert list(cd.Lambda[1]) == [(1 - p) * lam] * 2
    # Lambda_1 > 0 = theta*lam, so s fires immediately
    assert list(cd.s_theta) == [1, 1]


def test_boundary_compensator_does_not_fire():
    # Lambda_1 = (1-p) lam exactly equals theta lam: strict inequality keeps s = NEVER
    p = Q(1, 4)
    cd = crossing_data(two_point(p), [4, 0], 1, 1 - p)
    assert (cd.s_theta == NEVER).all()


@pytest.mark.parametrize("theta", [Q(0), Q(1, 4), Q(1, 2), Q(3, 4)])
def test_parametric_attainment(theta):
    p = 1 - theta
    if p == 1:
        filt = Filtration.from_levels([[("Omega", None, 1)], [("E", "Omega", 1)]])
        f = [Q(1)]
    else:
        filt, f = two_point(p), [1 / p, 0]
    res = decompose_positive(filt, f, 1, theta)
    assert np.abs(res.k).max() == 1 + theta
    assert res.certificate.passed


def test_one_level_first_passage():
    p, delta = Q(1, 3), Q(1, 2)
    filt = Filtration.from_levels([[("E", None, p), ("Ec", None, 1 - p)]])
    r = first_passage(filt, [(1 + delta), 0], 1)
    assert list(r) == [1, NEVER]
    assert probability(filt, r != NEVER) == p


def test_below_level_is_all_bounded():
    filt = binary_tree(3)
    f = arith.array([Q(1, 2), 0, 1, Q(3, 4), 0, 0, 1, 1], True)
    res = decompose_positive(filt, f, 1, Q(1, 2))
    assert (res.crossing.r == NEVER).all()
    assert not res.g.any() and not res.h.any() and not res.k_pr.any()
    assert list(res.k_st) == list(f)


@pytest.mark.parametrize("p", [Q(1, 10), Q(1, 100)])
def test_g_mass_two_point(p):
    f = [1 / p, 0]
    res = decompose_positive(two_point(p), f, Q(1, 2), 0)
    assert list(res.g) == [1 / p - 1, -1]
    assert l1(res.filtration, res.g) == 2 * (1 - p) * l1(res.filtration, f)


def test_localization_fails_when_compensator_leaks():
    # Lambda_1 = E_1[eps_2] is positive on all of A although only A1 crosses,
    # so s = 1 on A2 where r is NEVER and g does not vanish there
    filt = Filtration.from_levels([
        [("A", None, Q(1, 2)), ("B", None, Q(1, 2))],
        [("A1", "A", Q(1, 200)), ("A2", "A", Q(99, 200)), ("B1", "B", Q(1, 2))],
    ])
    res = decompose_positive(filt, [2, 0, 0], 1, 0)
    cd = res.crossing
    assert list(cd.r) == [2, NEVER, NEVER]
    assert list(cd.t_theta) == [1, 1, NEVER]
    assert list(res.g) == [Q(99, 50), Q(-1, 50), 0]
    rec = res.certificate["a.localization"]
    assert rec.computed == Q(1, 2) and rec.claimed == Q(1, 100) and not rec.passed
    assert not res.certificate["t.finite_eq_r"].passed
    assert [r.check_id for r in res.certificate.failures] == ["a.localization", "t.finite_eq_r"]


def test_domain_errors(fig_two_point):
    with pytest.raises(DomainError):
        decompose_positive(fig_two_point, [-1, 1], 1)
    with pytest.raises(DomainError):
        decompose_positive(fig_two_point, [1, 1], 0)
    with pytest.raises(DomainError):
        decompose_positive(fig_two_point, [1, 1], 1, -1)


# -- oracle agreement and properties ------------------------------------------

@given(seeds, levels, thetas)
def test_matches_reference_construction(seed, k, theta):
    filt, f = _instance(seed)
    lam = _lam(filt, f, k)
    res = decompose_positive(filt, f, lam, theta, certify=False)
    ref = oracle.decompose(filt, f, lam, theta)
    never = lambda v: None if v == NEVER else int(v)
    assert [never(x) for x in res.crossing.r] == ref["r"]
    assert [never(x) for x in res.crossing.s_theta] == ref["s"]
    for name in ("g", "h", "k_st", "k_pr"):
        assert [oracle.fr(x) for x in getattr(res, name)] == ref[name], name
    assert [oracle.fr(x) for x in res.variation()] == oracle.h_variation(filt, ref["h"])


@given(seeds, levels, thetas)
def test_bounds_other_than_localization(seed, k, theta):
    filt, f = _instance(seed)
    res = decompose_positive(filt, f, _lam(filt, f, k), theta)
    failing = {r.check_id for r in res.certificate.failures}
    assert failing <= {"a.localization", "t.finite_eq_r"}


@given(seeds, levels)
def test_theta_zero_has_no_compensator(seed, k):
    filt, f = _instance(seed)
    res = decompose_positive(filt, f, _lam(filt, f, k), 0)
    assert not res.k_pr.any()


@given(seeds, levels, thetas)
def test_localization_with_theta_uses_r(seed, k, theta):
    # g lives on {t finite}; {r finite} carries at most ||f||_1 / lam
    filt, f = _instance(seed)
    lam = _lam(filt, f, k)
    res = decompose_positive(filt, f, lam, theta, certify=False)
    cd = res.crossing
    assert not res.g[cd.t_theta == NEVER].any()
    assert probability(filt, cd.r != NEVER) * lam <= l1(filt, f)
    assert ((cd.t_theta != NEVER) >= (cd.r != NEVER)).all()


@given(seeds, levels)
def test_float_mode_reconstruction(seed, k):
    filt, f = generate(GeneratorConfig(seed=seed, depth=(1, 5), max_leaves=24), exact=False)
    top = martingale(filt, f).max()
    lam = (top if top > 0 else 1.0) * k / 64
    res = decompose_positive(filt, f, lam, 0.5)
    err = np.abs(res.g + res.h + res.k_st + res.k_pr - f).max()
    assert err <= 1e-12 * max(1.0, np.abs(f).max())


# -- signed ------------------------------------------------------------------

@given(seeds, levels)
def test_signed_agrees_on_nonnegative(seed, k):
    filt, f = _instance(seed)
    lam = _lam(filt, f, k)
    pos = decompose_positive(filt, f, lam, 0, certify=False)
    sgn = decompose_signed(filt, f, lam, 0, certify=False)
    for name in ("g", "h", "k"):
        assert list(getattr(pos, name)) == list(getattr(sgn, name))


@given(seeds, levels)
def test_signed_negation_symmetry(seed, k):
    filt, f = _instance(seed, values="signed")
    lam = _lam(filt, f, k)
    a = decompose_signed(filt, f, lam, 0, certify=False)
    b = decompose_signed(filt, -f, lam, 0, certify=False)
    for name in ("g", "h", "k"):
        assert list(getattr(a, name)) == list(-getattr(b, name))


@given(seeds, levels)
def test_signed_bounds(seed, k):
    filt, f = _instance(seed, values="signed", depth=(4, 4))
    res = decompose_signed(filt, f, _lam(filt, f, k), 0, certify=False)
    assert verify_signed(res).passed


# -- terminal functions finer than the leaves ---------------------------------

def test_raw_counterexample():
    filt = Filtration.from_levels([[("Omega", None, 1)]])
    raw = RawFunction((arith.array([Q(1, 100), Q(99, 100)], True),), (arith.array([100, 0], True),))
    out = decompose_raw(filt, raw, 1)
    assert not out.measurable and out.offending_leaves == ["Omega"]
    assert out.norm_f == 1 and out.k_sup == 100
    assert out.certificate.passed
    assert out.certificate["c.k_max_void"].expected_violation


def test_raw_measurable_matches_leaf_decomposition(fig_two_point):
    raw = RawFunction.from_leaf_values(fig_two_point, [4, 0])
    out = decompose_raw(fig_two_point, raw, 1, Q(3, 4))
    assert out.measurable and out.certificate.passed
    assert list(out.k_cells) == [Q(7, 4), Q(3, 4)]
