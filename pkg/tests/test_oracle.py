import math

import numpy as np
import pytest

from cavityspec import oracle
from cavityspec.oracle import (
    DimensionLimitError,
    StepSizeError,
    ZeroDriveError,
    build_model,
    convergence_check,
    evolve,
    extract_weakfield_amplitudes,
    flux_balance,
    inversion_balance,
    steady_state,
    vacuum,
)
from cavityspec.params import DriveSpec, SystemRates
from cavityspec.weakfield import response, transmission


def drive(rates, y, w=0.0):
    return DriveSpec.from_y(rates, y, w)


def test_structure_single_atom(apparatus):
    m = build_model(apparatus, DriveSpec(), 2, 1)
    assert m.dim == 6
    # basis index = 2 n + atom; a only lowers n within the same atom state
    rows, cols = np.nonzero(m.a)
    assert np.all(cols - rows == 2)
    np.testing.assert_allclose(np.abs(m.a[rows, cols]), np.sqrt(cols // 2))


def test_commutator_below_cutoff(apparatus):
    for n_atoms in (0, 1, 2):
        m = build_model(apparatus.with_n(n_atoms), DriveSpec(), 4, n_atoms)
        comm = m.a @ m.adag - m.adag @ m.a
        block = 4 * 2**n_atoms
        np.testing.assert_allclose(comm[:block, :block], np.eye(block), atol=1e-14)


def test_two_atoms_hermitian_and_drive_coupling(apparatus):
    r = apparatus.with_n(2)
    m = build_model(r, DriveSpec(epsilon=1.7, omega=2.0), 3)
    assert m.dim == 16
    h = m.hamiltonian
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * np.max(np.abs(h))
    eps_term = h - build_model(r, DriveSpec(epsilon=0.0, omega=2.0), 3).hamiltonian
    rows, cols = np.nonzero(np.abs(eps_term) > 0)
    photons = lambda idx: idx // 4
    assert np.all(np.abs(photons(rows) - photons(cols)) == 1)
    assert np.all(rows % 4 == cols % 4)


def test_collapse_conventions(apparatus):
    m = build_model(apparatus.with_n(2), DriveSpec(), 2)
    rates = [rate for rate, _ in m.collapse_ops]
    assert rates == [2 * apparatus.kappa, apparatus.gamma, apparatus.gamma]


def test_dimension_limits(apparatus):
    with pytest.raises(DimensionLimitError):
        build_model(apparatus, DriveSpec(), 0, 1)
    with pytest.raises(DimensionLimitError):
        build_model(apparatus, DriveSpec(), 13, 1)
    with pytest.raises(DimensionLimitError):
        build_model(apparatus, DriveSpec(), 2, 5)
    with pytest.raises(ValueError):
        build_model(apparatus.with_c(0.3), DriveSpec(), 2)


def test_liouvillian_matches_operator_form(apparatus):
    m = build_model(apparatus.with_n(2), drive(apparatus, 0.3, 1.1), 3)
    rng = np.random.default_rng(7)
    x = rng.normal(size=(m.dim, m.dim)) + 1j * rng.normal(size=(m.dim, m.dim))
    vec = m.liouvillian @ x.reshape(-1, order="F")
    np.testing.assert_allclose(vec.reshape(m.dim, m.dim, order="F"), m.apply_liouvillian(x), atol=1e-10)


def test_empty_cavity_coherent_state(apparatus):
    r = apparatus.with_n(0)
    m = build_model(r, DriveSpec(epsilon=0.1 * r.kappa), 6)
    ss = steady_state(m)
    assert ss.observables.n_photons == pytest.approx(0.01, rel=1e-6)
    assert ss.observables.purity == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("w", [-30.0, -5.0, 12.0])
def test_empty_cavity_lorentzian(apparatus, w):
    r = apparatus.with_n(0)
    eps = 0.1 * r.kappa
    ss = steady_state(build_model(r, DriveSpec(epsilon=eps, omega=w), 6))
    expected = (eps / r.kappa) ** 2 / (1 + (w / r.kappa) ** 2)
    assert ss.observables.n_photons == pytest.approx(expected, rel=1e-6)


def test_single_atom_photon_number(apparatus):
    y = 0.05
    ss = steady_state(build_model(apparatus, drive(apparatus, y), 4))
    expected = apparatus.n_sat * y**2 * float(transmission(apparatus, 0.0))
    assert ss.observables.n_photons == pytest.approx(expected, rel=0.01)


@pytest.mark.parametrize("n_atoms", [0, 1, 2])
def test_steady_state_invariants(apparatus, n_atoms):
    r = apparatus.with_n(n_atoms)
    ss = steady_state(build_model(r, drive(r, 0.3, 4.0), 5))
    res = ss.residuals
    assert res.trace_deviation < 1e-12
    assert res.hermiticity_deviation < 1e-12
    assert res.min_eigenvalue > -1e-10
    assert res.liouvillian_residual < 1e-10


def test_solvers_agree(apparatus):
    r = apparatus.with_n(2)
    m = build_model(r, drive(r, 0.1, 3.0), 4)
    direct = steady_state(m, "direct")
    for method in ("iterative", "evolve"):
        other = steady_state(m, method)
        assert other.method == method
        np.testing.assert_allclose(other.rho, direct.rho, atol=1e-8)
    with pytest.raises(ValueError):
        steady_state(m, "bogus")


def test_auto_uses_iterative_for_large_models(apparatus):
    r = apparatus.with_n(3)
    m = build_model(r, drive(r, 0.05), 8)
    assert m.dim > oracle.DIRECT_MAX_DIM
    ss = steady_state(m)
    assert ss.method == "iterative"
    assert ss.residuals.liouvillian_residual < 1e-10


def test_evolve_dark_state(apparatus):
    m = build_model(apparatus, DriveSpec(), 3)
    rho = evolve(m, vacuum(m), 0.5, 0.5e-3)
    np.testing.assert_allclose(rho, vacuum(m), atol=1e-15)


def test_evolve_photon_decay(apparatus):
    r = apparatus.with_n(0)
    m = build_model(r, DriveSpec(), 3, 0)
    rho0 = np.zeros((m.dim, m.dim), dtype=complex)
    rho0[1, 1] = 1.0
    for t in (0.02, 0.05, 0.1):
        rho = evolve(m, rho0, t, 1e-4)
        n = np.trace(m.adag @ m.a @ rho).real
        assert n == pytest.approx(math.exp(-2 * r.kappa * t), rel=1e-9)
        assert abs(np.trace(rho) - 1) < 1e-9 * t


def test_evolve_relaxes_to_steady_state(apparatus):
    m = build_model(apparatus, drive(apparatus, 0.05, 3.0), 4)
    ss = steady_state(m)
    t_final = 20.0 / min(apparatus.kappa, apparatus.gamma / 2)
    rho = evolve(m, vacuum(m), t_final, 0.05 / oracle.max_rate(m))
    assert np.max(np.abs(rho - ss.rho)) < 1e-6


def test_evolve_step_checks(apparatus):
    m = build_model(apparatus, drive(apparatus, 0.05), 3)
    with pytest.raises(StepSizeError):
        evolve(m, vacuum(m), 1.0, 0.2 / oracle.max_rate(m))
    with pytest.raises(FloatingPointError):
        bad = vacuum(m)
        bad[0, 0] = np.nan
        evolve(m, bad, 0.1, 1e-4)


def test_inversion_balance_undriven(apparatus):
    m = build_model(apparatus, DriveSpec(), 3)
    bal = inversion_balance(m, steady_state(m))
    assert abs(bal.exchange) < 1e-12 * apparatus.gamma and abs(bal.decay) < 1e-12 * apparatus.gamma


@pytest.mark.parametrize("n_atoms", [1, 2])
def test_inversion_balance_residual(apparatus, n_atoms):
    r = apparatus.with_n(n_atoms)
    m = build_model(r, drive(r, 0.05, 2.0), 4)
    bal = inversion_balance(m, steady_state(m))
    assert bal.decay > 0
    assert abs(bal.residual) < 1e-10 * r.gamma


def test_decorrelation_gap_scales_as_y4(apparatus):
    gaps = []
    for y in (0.02, 0.04):
        m = build_model(apparatus, drive(apparatus, y), 5)
        gaps.append(abs(inversion_balance(m, steady_state(m)).decorrelation_gap))
    assert gaps[1] / gaps[0] == pytest.approx(16.0, rel=0.3)


@pytest.mark.parametrize("n_atoms", [0, 1, 2])
def test_flux_balance(apparatus, n_atoms):
    r = apparatus.with_n(n_atoms)
    m = build_model(r, drive(r, 0.2, -3.0), 5)
    fb = flux_balance(m, steady_state(m))
    assert fb.drive_input > 0
    assert abs(fb.residual) < 1e-9 * fb.scale


@pytest.mark.parametrize("w", [0.0, -7.0, 15.0])
def test_empty_cavity_amplitudes(apparatus, w):
    r = apparatus.with_n(0)
    m = build_model(r, drive(r, 0.02, w), 4)
    x, p = extract_weakfield_amplitudes(m, steady_state(m))
    assert p == 0
    assert x == pytest.approx(1.0 / (1.0 - 1j * w / r.kappa), rel=1e-6)


def test_single_atom_state_equation(apparatus):
    m = build_model(apparatus, drive(apparatus, 0.02), 4)
    x, p = extract_weakfield_amplitudes(m, steady_state(m))
    assert x.real == pytest.approx(1.0 / (1.0 + 2.0 * apparatus.c1), rel=0.005)
    assert abs(x.imag) < 1e-12


@pytest.mark.parametrize("n_atoms", [1, 2])
def test_amplitudes_follow_analytic_shape(apparatus, n_atoms):
    r = apparatus.with_n(n_atoms)
    for w in np.linspace(-2 * r.g * math.sqrt(n_atoms), 2 * r.g * math.sqrt(n_atoms), 7):
        m = build_model(r, drive(r, 0.02, w), 4)
        x, p = extract_weakfield_amplitudes(m, steady_state(m))
        ref = response(r, w)
        assert x == pytest.approx(complex(ref.x_over_y), rel=0.01, abs=1e-4)
        assert p == pytest.approx(complex(ref.p_over_y), rel=0.01, abs=1e-4)


def test_zero_drive_extraction(apparatus):
    m = build_model(apparatus, DriveSpec(), 3)
    with pytest.raises(ZeroDriveError):
        extract_weakfield_amplitudes(m, steady_state(m))


@pytest.mark.parametrize("y", [0.02, 0.05])
def test_purity_approaches_one(apparatus, y):
    ss = steady_state(build_model(apparatus, drive(apparatus, y), 5))
    assert 1.0 - ss.observables.purity < 10 * y**4


def test_convergence_weak_drive(apparatus):
    rep = convergence_check(apparatus, drive(apparatus, 0.05), 1, [2, 3, 4, 5, 6])
    assert rep.converged and rep.converged_n_max <= 4


def test_convergence_no_drive(apparatus):
    rep = convergence_check(apparatus, DriveSpec(), 1, [1, 2, 3])
    assert rep.converged_n_max == 1


def test_convergence_strong_drive_flagged(apparatus):
    rep = convergence_check(apparatus, DriveSpec(epsilon=5 * apparatus.kappa), 1, [2, 4, 6])
    assert not rep.converged
    assert rep.converged_n_max is None


def test_convergence_list_checks(apparatus):
    with pytest.raises(ValueError):
        convergence_check(apparatus, DriveSpec(), 1, [3])
    with pytest.raises(ValueError):
        convergence_check(apparatus, DriveSpec(), 1, [3, 2])
