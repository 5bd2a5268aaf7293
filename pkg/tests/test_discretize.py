import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clampedlab.discretize import (DomainSpec, assemble_beam, assemble_clamped_biharmonic,
                                   assemble_masked_disk, assemble_radial_laplacian, observed_order,
                                   richardson_order, solve_spectrum, verify_proof_identities)
from clampedlab.errors import DiagnosticError, DomainError, InputError, TruncationError, UnsupportedError
from clampedlab.numlin import eigen_generalized_diag_mass

from oracles import beam_roots, disk_root

MU = beam_roots(6)
BEAM = [m ** 4 for m in MU]
DISK1 = disk_root() ** 4


def test_oracle_constants():
    assert MU[0] == pytest.approx(4.730041, abs=1e-6)
    assert MU[1] == pytest.approx(7.853205, abs=1e-6)
    assert disk_root() == pytest.approx(3.19622, abs=1e-5)


# -- radial operator -----------------------------------------------------------


@pytest.mark.parametrize("kappa", [0, 1, -1])
def test_radial_constant_annihilated(kappa):
    d, _, _, r = assemble_radial_laplacian(kappa, 1.0, 0, 50)
    assert np.max(np.abs((d @ np.ones(r.size - 1))[:-2])) < 1e-8


def test_radial_r_squared_gives_four():
    d, _, _, r = assemble_radial_laplacian(0, 1.0, 0, 50)
    assert np.allclose((d @ r[:-1] ** 2)[:-2], 4.0, atol=1e-8)


def test_hyperbolic_log_cosh_second_order():
    # Lap ln cosh r = sech^2 r + 1 in the hyperbolic plane
    errs = []
    for n in (40, 80, 160):
        d, _, _, r = assemble_radial_laplacian(-1, 1.0, 0, n)
        u = np.log(np.cosh(r[:-1]))
        exact = 1.0 / np.cosh(r[:-2]) ** 2 + 1.0
        errs.append(np.max(np.abs((d @ u)[:-2] - exact)))
    assert 1.7 < math.log2(errs[0] / errs[1]) < 2.3
    assert 1.7 < math.log2(errs[1] / errs[2]) < 2.3


def test_cap_radius_limit():
    with pytest.raises(DomainError):
        assemble_radial_laplacian(1, math.pi, 0, 20)
    with pytest.raises(DomainError):
        DomainSpec("geodesic_disk", curvature=1, radius=4.0)


# -- biharmonic assembly -------------------------------------------------------


def test_stiffness_is_dtwd():
    d, w, mass, _ = assemble_beam(1.0, 20)
    k, m = assemble_clamped_biharmonic(d, w, mass)
    assert np.array_equal(k, k.T)
    assert np.allclose(k, d.T @ np.diag(w) @ d, rtol=1e-15, atol=0)
    assert np.array_equal(m, mass)


def test_negative_weight_rejected():
    d, w, mass, _ = assemble_beam(1.0, 20)
    with pytest.raises(InputError):
        assemble_clamped_biharmonic(d, w, mass, rho=-np.ones_like(mass))


def test_constant_potential_shift_assembled():
    d, w, mass, _ = assemble_beam(1.0, 30)
    k0, m = assemble_clamped_biharmonic(d, w, mass)
    k1, _ = assemble_clamped_biharmonic(d, w, mass, q=3.0)
    v0 = [p.value for p in eigen_generalized_diag_mass(k0, m, 4)]
    v1 = [p.value for p in eigen_generalized_diag_mass(k1, m, 4)]
    assert np.allclose(np.array(v1) - v0, 3.0, atol=1e-7)


# -- spectra -------------------------------------------------------------------


def test_beam_against_oracle():
    vals = solve_spectrum(DomainSpec("beam", grid_n=200), 6).values
    assert vals[0] == pytest.approx(500.564, rel=5e-3)
    assert vals[1] == pytest.approx(3803.54, rel=5e-3)
    assert np.allclose(vals, BEAM, rtol=5e-3)


def test_beam_length_scaling():
    a = solve_spectrum(DomainSpec("beam", grid_n=80), 5).values
    b = solve_spectrum(DomainSpec("beam", grid_n=80, length=2.0), 5).values
    assert np.allclose(b, a / 16, rtol=1e-10, atol=0)


def test_disk_against_oracle():
    vals = solve_spectrum(DomainSpec("geodesic_disk", grid_n=200), 4).values
    assert vals[0] == pytest.approx(DISK1, rel=5e-3)
    assert vals[1] == vals[2]


def test_disk_modes_and_multiplicity():
    spec = solve_spectrum(DomainSpec("geodesic_disk", grid_n=40), 10)
    assert spec.entries[0].mode_label == "m=0,j=1" and spec.entries[0].multiplicity == 1
    assert spec.entries[1].mode_label == "m=1,j=1" and spec.entries[1].multiplicity == 2
    assert len(spec) >= 10 and np.all(np.diff(spec.values) >= 0)


def test_explicit_m_max_too_small():
    with pytest.raises(TruncationError, match="m_max"):
        solve_spectrum(DomainSpec("geodesic_disk", grid_n=30, m_max=0), 10)


def test_k_max_precondition():
    with pytest.raises(InputError):
        solve_spectrum(DomainSpec("beam"), 1)


def test_grid_precondition():
    with pytest.raises(InputError):
        DomainSpec("beam", grid_n=4)


def test_square_degenerate_pairs():
    spec = solve_spectrum(DomainSpec("rectangle", grid_n=12), 6)
    pairs = spec.near_degenerate_pairs()
    assert (2, 3) in pairs
    vals = spec.values
    assert vals[2] - vals[1] <= 1e-6 * vals[2]


@pytest.mark.parametrize("kappa", [1, -1])
def test_curved_disks_positive(kappa):
    vals = solve_spectrum(DomainSpec("geodesic_disk", curvature=kappa, grid_n=40), 6).values
    assert np.all(vals > 0) and np.all(np.diff(vals) >= 0)


def test_curvature_orders_first_eigenvalue():
    # same geodesic radius: sphere cap < flat disk < hyperbolic disk
    lam = [solve_spectrum(DomainSpec("geodesic_disk", curvature=c, grid_n=60), 2).values[0]
           for c in (1, 0, -1)]
    assert lam[0] < lam[1] < lam[2]


def test_potential_shift_exact():
    base = solve_spectrum(DomainSpec("beam", grid_n=100), 8).values
    shifted = solve_spectrum(DomainSpec("beam", grid_n=100, potential=5.0), 8).values
    assert np.allclose(shifted - base, 5.0, rtol=0, atol=1e-9)


def test_potential_shift_disk():
    base = solve_spectrum(DomainSpec("geodesic_disk", grid_n=40), 6).values
    shifted = solve_spectrum(DomainSpec("geodesic_disk", grid_n=40, potential=-2.5), 6).values
    assert np.allclose(shifted - base, -2.5, rtol=0, atol=1e-9)


def test_potential_lower_bound_enforced():
    spec = DomainSpec("beam", grid_n=20, potential=lambda x: x - 1.0, potential_lower_bound=0.0)
    with pytest.raises(DomainError):
        solve_spectrum(spec, 3)


def test_weight_scales_spectrum():
    base = solve_spectrum(DomainSpec("beam", grid_n=60), 4).values
    heavy = solve_spectrum(DomainSpec("beam", grid_n=60, weight=4.0), 4).values
    assert np.allclose(heavy, base / 4, rtol=1e-11)


def test_polar_matches_cartesian_cross_check():
    # zero extension on the staircase boundary biases the scale at O(h),
    # so compare the scale-free ratios lambda_i / lambda_1
    d, w, mass, _ = assemble_masked_disk(1.0, 16)
    k, m = assemble_clamped_biharmonic(d, w, mass)
    cart = np.array([p.value for p in eigen_generalized_diag_mass(k, m, 8)])
    polar = solve_spectrum(DomainSpec("geodesic_disk", grid_n=100), 8).values
    assert np.allclose(cart / cart[0], polar / polar[0], rtol=3e-2)


@settings(max_examples=8, deadline=None)
@given(t=st.floats(0.3, 3.0))
def test_dilation_law(t):
    a = solve_spectrum(DomainSpec("beam", grid_n=24), 4).values
    b = solve_spectrum(DomainSpec("beam", grid_n=24).scaled(t), 4).values
    assert np.allclose(b, a * t ** -4, rtol=1e-9, atol=0)


def test_dilation_law_rectangle():
    spec = DomainSpec("rectangle", grid_n=10, width=1.0, height=1.5)
    a = solve_spectrum(spec, 4).values
    b = solve_spectrum(spec.scaled(1.7), 4).values
    assert np.allclose(b, a * 1.7 ** -4, rtol=1e-9, atol=0)


# -- convergence ---------------------------------------------------------------


def test_richardson_beam():
    extrapolated, orders = richardson_order(DomainSpec("beam", grid_n=100), 3)
    assert np.all((orders > 1.7) & (orders < 2.3))
    assert np.allclose(extrapolated, BEAM[:3], rtol=1e-4)


def test_richardson_disk():
    extrapolated, orders = richardson_order(DomainSpec("geodesic_disk", grid_n=50), 1)
    assert 1.7 < orders[0] < 2.3
    assert extrapolated[0] == pytest.approx(DISK1, rel=1e-4)


def test_richardson_constant_shift():
    spec = DomainSpec("beam", grid_n=50)
    a, _ = richardson_order(spec, 2)
    b, _ = richardson_order(replace(spec, potential=7.0), 2)
    assert np.allclose(b - a, 7.0, atol=1e-6)


def test_observed_order_exact_power():
    hs = [0.1, 0.05, 0.025]
    p, v = observed_order(hs, [3 + 2 * h ** 2 for h in hs])
    assert p == pytest.approx(2.0, abs=1e-9)
    assert v == pytest.approx(3.0, abs=1e-12)


def test_observed_order_general_ratio():
    hs = [0.3, 0.13, 0.05]
    p, v = observed_order(hs, [1 + h ** 1.5 for h in hs])
    assert p == pytest.approx(1.5, abs=1e-9)
    assert v == pytest.approx(1.0, abs=1e-12)


def test_non_monotone_refinement():
    with pytest.raises(DiagnosticError):
        observed_order([0.1, 0.05, 0.025], [1.0, 0.9, 0.95])


# -- proof identities ----------------------------------------------------------


def test_identities_beam():
    rep = verify_proof_identities(DomainSpec("beam", grid_n=200), 5)
    assert rep.n == 1
    assert np.allclose(rep.commutator_trace, 2.0, atol=0.05)
    assert all(s >= 0 for s in rep.cauchy_schwarz_slack)


def test_identities_square():
    rep = verify_proof_identities(DomainSpec("rectangle", grid_n=16), 5)
    assert rep.n == 2
    assert np.allclose(rep.commutator_trace, 4.0, atol=0.5)
    assert all(s >= 0 for s in rep.cauchy_schwarz_slack)


def test_identities_first_order():
    coarse = verify_proof_identities(DomainSpec("beam", grid_n=100), 3)
    fine = verify_proof_identities(DomainSpec("beam", grid_n=200), 3)
    for rc, rf in zip(coarse.trace_residual, fine.trace_residual):
        assert rf / fine.h <= 1.1 * rc / coarse.h


def test_identities_curved_unsupported():
    with pytest.raises(UnsupportedError):
        verify_proof_identities(DomainSpec("geodesic_disk", curvature=1, grid_n=20), 2)
