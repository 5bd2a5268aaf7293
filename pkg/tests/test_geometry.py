import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clampedlab.errors import InputError, SingularityError
from clampedlab.geometry import (AmbientKind, Immersion, SampledMap, delta_prime, delta_sup,
                                 eigenmap_check, flat_torus_eigenmap, flat_torus_eigenmap_immersion,
                                 mean_curvature_sq, plane, product_of_circles, sphere,
                                 torus_of_revolution)


def torus_h_sq(R, r, v):
    # principal curvatures cos v / (R + r cos v) and 1 / r
    return (0.5 * (math.cos(v) / (R + r * math.cos(v)) + 1.0 / r)) ** 2


def test_sphere_is_umbilic():
    s = sphere()
    for u in [(0.3, 0.1), (1.5, 2.0), (2.9, 5.0)]:
        assert mean_curvature_sq(s, u) == pytest.approx(1.0, abs=1e-12)


def test_sphere_radius():
    assert mean_curvature_sq(sphere(2.0), (1.0, 1.0)) == pytest.approx(0.25, abs=1e-12)


def test_plane_is_flat():
    assert mean_curvature_sq(plane(), (0.4, 0.7)) == 0.0


@pytest.mark.parametrize("v", [0.0, 0.7, 2.0, math.pi])
def test_torus_against_principal_curvatures(v):
    assert mean_curvature_sq(torus_of_revolution(2, 1), (0.3, v)) == pytest.approx(
        torus_h_sq(2, 1, v), abs=1e-12)


def test_torus_outer_equator():
    assert mean_curvature_sq(torus_of_revolution(2, 1), (0.0, 0.0)) == pytest.approx(4 / 9, abs=1e-12)


def test_finite_difference_path():
    t = torus_of_revolution(2, 1)
    fd = Immersion("torus_fd", 2, 3, t.position, t.bounds)
    for v in (0.0, 1.1, 2.5):
        assert mean_curvature_sq(fd, (0.4, v)) == pytest.approx(torus_h_sq(2, 1, v), abs=1e-6)


def test_degenerate_metric():
    collapsed = Immersion("line", 2, 3, lambda u: np.array([u[0], 0.0, 0.0]), [(0, 1), (0, 1)],
                          jacobian=lambda u: np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]),
                          hessian=lambda u: np.zeros((3, 2, 2)))
    with pytest.raises(SingularityError):
        mean_curvature_sq(collapsed, (0.5, 0.5))


def test_delta_sup_examples():
    assert delta_sup(product_of_circles(1, 1), per_axis=9).value == pytest.approx(0.5, abs=1e-12)
    assert delta_sup(sphere(), per_axis=9).value == pytest.approx(1.0, abs=1e-12)
    est = delta_sup(torus_of_revolution(2, 1), per_axis=21)
    assert est.value == pytest.approx(4 / 9, abs=1e-10)
    assert est.samples > 21 * 21


def test_delta_sup_refines_off_grid_max():
    # a grid that misses v = 0 still finds the sup after refinement
    est = delta_sup(torus_of_revolution(2, 1), per_axis=8)
    assert est.value == pytest.approx(4 / 9, rel=1e-6)


def test_delta_sup_needs_samples():
    with pytest.raises(InputError):
        delta_sup(sphere(), samples=np.zeros((0, 2)))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), extra=st.integers(1, 20))
def test_delta_sup_monotone_in_samples(seed, extra):
    rng = np.random.default_rng(seed)
    imm = torus_of_revolution(2, 1)
    base = rng.uniform([0, -math.pi], [2 * math.pi, math.pi], (10, 2))
    more = np.vstack([base, rng.uniform([0, -math.pi], [2 * math.pi, math.pi], (extra, 2))])
    a = delta_sup(imm, samples=base, refine_rounds=0).value
    b = delta_sup(imm, samples=more, refine_rounds=0).value
    assert b >= a


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), u=st.floats(0.0, 6.0), v=st.floats(-3.0, 3.0))
def test_rigid_motion_invariance(seed, u, v):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    t = torus_of_revolution(2, 1)
    moved = t.transformed(q, rng.uniform(-5, 5, 3))
    assert abs(mean_curvature_sq(moved, (u, v)) - mean_curvature_sq(t, (u, v))) <= 1e-10


def test_delta_prime_examples():
    assert delta_prime(AmbientKind("sphere"), 4, 0.0) == 1.0
    assert delta_prime(AmbientKind("real_projective"), 2, 0.0) == pytest.approx(3.0)
    d3 = delta_prime(AmbientKind("complex_projective", odd_dimensional=True), 3, 0.0)
    assert d3 == pytest.approx(28 / 9)
    assert delta_prime(AmbientKind("complex_projective"), 2, 0.5) == pytest.approx(4.5)
    assert delta_prime(AmbientKind("quaternionic_projective"), 4, 0.0) == pytest.approx(4.0)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_totally_real_never_larger(n):
    plain = delta_prime(AmbientKind("complex_projective"), n, 0.2)
    real = delta_prime(AmbientKind("complex_projective", totally_real=True), n, 0.2)
    assert real <= plain


def test_contradictory_flags():
    with pytest.raises(InputError):
        delta_prime(AmbientKind("sphere", odd_dimensional=True), 3, 0.0)
    with pytest.raises(InputError):
        delta_prime(AmbientKind("complex_projective", odd_dimensional=True), 4, 0.0)
    with pytest.raises(InputError):
        AmbientKind("torus")


def test_flat_torus_eigenmap():
    rep = eigenmap_check(flat_torus_eigenmap(), 1.0)
    assert rep.passed
    assert max(rep.norm_residual, rep.energy_residual, rep.equation_residual) <= 1e-8


def test_eigenmap_norm_failure():
    base = flat_torus_eigenmap()
    doubled = SampledMap("doubled", 2, lambda u: math.sqrt(2) * base.value(u), base.bounds,
                         lambda u: math.sqrt(2) * base.gradient(u), lambda u: math.sqrt(2) * base.laplacian(u))
    rep = eigenmap_check(doubled, 1.0)
    assert not rep.passed
    assert rep.norm_residual == pytest.approx(1.0, abs=1e-12)


def test_eigenmap_wrong_lambda():
    rep = eigenmap_check(flat_torus_eigenmap(), 1.1)
    assert not rep.passed
    assert rep.energy_residual == pytest.approx(0.1, abs=1e-12)


def test_eigenmap_finite_differences():
    base = flat_torus_eigenmap()
    fd = SampledMap("fd", 2, base.value, base.bounds)
    rep = eigenmap_check(fd, 1.0, tol=1e-5, per_axis=9)
    assert rep.passed


def test_eigenmap_immersion_curvature():
    # components of radius 1/sqrt 2 circles: |H|^2 = (2 + 2) / 4
    assert delta_sup(flat_torus_eigenmap_immersion(), per_axis=7).value == pytest.approx(1.0, abs=1e-12)
