import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clampedlab.errors import DomainError, InputError
from clampedlab.families import (FGCouple, catalog_couples, check_membership, check_necessary_diff,
                                 eval_couple, load_tabulated_couple, membership_grid)


def test_eval_examples():
    assert eval_couple(FGCouple("gap_pow_delta", 2.0), 10.0, 4.0) == (36.0, 36.0)
    for x in (0.1, 2.0, 9.9):
        assert eval_couple(FGCouple("one_gap_alpha", 0.0), 10.0, x) == (1.0, 1.0)
    assert eval_couple(FGCouple("gap_gap_beta", 0.5), 4.0, 3.0) == (1.0, 1.0)


@pytest.mark.parametrize("x", [0.0, 10.0, -1.0, 12.0])
def test_eval_outside_interval(x):
    with pytest.raises(DomainError):
        eval_couple(FGCouple("gap_pow_delta", 2.0), 10.0, x)


@pytest.mark.parametrize("family,param", [("one_gap_alpha", -0.1), ("gap_gap_beta", 0.4),
                                          ("gap_pow_delta", 0.0), ("gap_pow_delta", 2.5), ("nope", 1.0)])
def test_parameter_ranges(family, param):
    with pytest.raises(InputError):
        FGCouple(family, param)


def test_custom_needs_callables():
    with pytest.raises(InputError):
        FGCouple("custom")


def test_grid_includes_near_pairs():
    pts = np.sort(membership_grid(1000.0, 16))
    assert np.min(np.diff(pts)) == pytest.approx(1000.0 * 1e-5, rel=1e-6)
    assert pts[0] > 0 and pts[-1] < 1000.0


@pytest.mark.parametrize("lam", [1.0, 1e3])
@pytest.mark.parametrize("couple", catalog_couples(), ids=lambda c: c.label)
def test_catalog_passes(couple, lam):
    rep = check_membership(couple, lam, 200)
    assert rep.passed, rep.as_dict()
    assert rep.verdict == "no violation found"
    assert rep.nonincreasing_g


@pytest.mark.parametrize("couple", [FGCouple("one_gap_alpha", 0.0), FGCouple("one_gap_alpha", 3.7),
                                    FGCouple("gap_gap_beta", 2.0), FGCouple("gap_pow_delta", 0.3),
                                    FGCouple("gap_pow_delta", 1.0)], ids=lambda c: c.label)
def test_other_catalog_parameters_pass(couple):
    assert check_membership(couple, 50.0, 64).passed


def test_cubic_couple_refuted_at_near_pair():
    rep = check_membership(FGCouple("power_custom", 3.0), 1000.0, 200)
    assert not rep.passed
    x, y = rep.worst_pair
    assert abs(x - y) == pytest.approx(1000.0 * 1e-5, rel=1e-6)
    assert rep.max_value > rep.tol


def test_custom_callable_couple():
    couple = FGCouple("custom", f_func=lambda x, lam: (lam - x) ** 2, g_func=lambda x, lam: (lam - x) ** 2)
    assert check_membership(couple, 10.0, 40).passed


def test_grid_minimum():
    with pytest.raises(InputError):
        check_membership(FGCouple("gap_pow_delta", 2.0), 1.0, 8)


def test_necessary_condition():
    assert check_necessary_diff(FGCouple("gap_pow_delta", 2.0), 100.0)
    assert check_necessary_diff(FGCouple("one_gap_alpha", 0.7), 100.0)
    assert not check_necessary_diff(FGCouple("power_custom", 3.0), 100.0)


def test_necessary_condition_fails_everywhere_for_cubic():
    couple = FGCouple("power_custom", 3.0)
    lam = 10.0
    x = lam * (np.arange(50) + 0.5) / 50
    lf, lg = couple.log_derivatives(lam, x)
    assert np.all(lf ** 2 > -2.0 / (lam - x) * lg)


@settings(max_examples=30, deadline=None)
@given(c_f=st.floats(1e-3, 1e3), c_g=st.floats(1e-3, 1e3), idx=st.integers(0, 3),
       lam=st.floats(0.5, 2e3))
def test_membership_scale_invariant(c_f, c_g, idx, lam):
    couples = catalog_couples() + [FGCouple("power_custom", 3.0)]
    base = couples[idx]
    a = check_membership(base, lam, 32).passed
    b = check_membership(base.scaled(c_f, c_g), lam, 32).passed
    assert a == b


@settings(max_examples=30, deadline=None)
@given(p=st.floats(0.05, 4.0), q=st.floats(0.0, 4.0))
def test_necessary_failure_implies_membership_failure(p, q):
    couple = FGCouple("power_custom", p, param_g=q)
    if not check_necessary_diff(couple, 10.0, 64):
        assert not check_membership(couple, 10.0, 64).passed


def test_tabulated_couple(tmp_path):
    lam = 10.0
    x = np.linspace(0.2, 9.8, 60)
    path = tmp_path / "couple.txt"
    rows = "\n".join(f"{a} {(lam - a) ** 2} {(lam - a) ** 2}" for a in x)
    path.write_text(f"# a tabulated couple\n# lambda = {lam}\n{rows}\n")
    couple = load_tabulated_couple(str(path))
    assert couple.fixed_lambda == lam
    f, g = couple.values(lam, np.array([4.0]))
    assert f[0] == pytest.approx(36.0, rel=1e-3)
    with pytest.raises(InputError):
        check_membership(couple, 5.0, 32)


def test_tabulated_couple_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 2 3\n2 2 3\n3 2 3\n4 2 3\n")
    with pytest.raises(InputError, match="lambda"):
        load_tabulated_couple(str(path))
