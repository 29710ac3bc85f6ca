import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavsim import analytics as A
from cavsim import cqed_reduced as R
from cavsim import params as P
from cavsim.errors import DegenerateEigenvalues, NotResonant, ZeroFlux

from conftest import random_density

seeds = st.integers(0, 2**32 - 1)
PORTS = ["cc1", "cc2", "ac1"]


def random_resonant(rng, weak=True):
    p = P.random_params(rng, weak=weak, n_cc=2, n_ac=1)
    port = "cc1" if rng.random() < 0.75 else "ac1"
    return p, P.resonant_drive(p, 10 ** rng.uniform(-4, 0), port)


def sup_rel(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)).max() / np.abs(b).max()


def critical_power(p, port="cc1"):
    """Input power at which the two driven eigenvalues merge."""
    ec = P.effective_constants(p, P.resonant_drive(p, 1.0, port))
    return ec.Gamma**2 / (16 * abs(ec.Omega) ** 2 * (1 + ec.x).real)


# --------------------------------------------------------------------------
# eigenvalues and dynamics


@given(seeds)
def test_eigenvalues_match_bloch_matrix(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    ec = P.effective_constants(p, d)
    lam = A.bloch_eigenvalues(p, d, ec)
    assert lam.lambda_0 == -ec.Gamma / 2
    assert lam.lambda_plus + lam.lambda_minus == pytest.approx(-1.5 * ec.Gamma, rel=1e-13)
    m, _ = R.bloch_matrix(ec)
    ev = np.linalg.eigvals(m)
    for z in lam:
        assert np.abs(ev - z).min() < 1e-9 * ec.Gamma


def test_undriven_eigenvalues(set2):
    d = P.resonant_drive(set2, 0.0)
    ec = P.effective_constants(set2, d)
    lam = A.bloch_eigenvalues(set2, d)
    assert lam.lambda_plus == pytest.approx(-ec.Gamma / 2)
    assert lam.lambda_minus == pytest.approx(-ec.Gamma)


@given(seeds)
def test_dynamics_coefficients_at_zero_delay(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    ec = P.effective_constants(p, d)
    dyn = A.dynamics_coefficients(p, d, [0.0], ec)
    assert np.allclose(dyn.A[:, 0], [0, 0, 1], atol=1e-13)
    assert np.allclose(dyn.B[:, 0], [1, 0, 0], atol=1e-13)
    # sigma' moves with sigma_z = 2 P - 1
    assert dyn.C[0, 0] == pytest.approx(-ec.Omega / ec.kappa_prime, abs=1e-13)


def test_dynamics_coefficients_decay(set2):
    d = P.resonant_drive(set2, 1.0)
    ec = P.effective_constants(set2, d)
    dyn = A.dynamics_coefficients(set2, d, [80 / ec.Gamma], ec)
    for arr in (dyn.A, dyn.B, dyn.C, dyn.D):
        assert np.abs(arr).max() < 1e-12


@given(seeds)
def test_propagation_matches_master_equation(seed):
    rng = np.random.default_rng(seed)
    p, d = random_resonant(rng)
    ec = P.effective_constants(p, d)
    s0 = R.AtomState(random_density(rng, 2))
    tau = np.linspace(0, 8 / ec.Gamma, 25)
    dyn = A.dynamics_coefficients(p, d, tau, ec)
    steady = R.steady_state_closed_form(p, d, ec)
    sig, pop = A.propagate_moments(dyn, (s0.population, s0.sigma), steady)
    traj = R.evolve(s0, R.effective_generator(p, d, ec), tau, rtol=1e-11)
    assert np.abs(sig - [s.sigma for s in traj]).max() < 1e-8
    assert np.abs(pop - [s.population for s in traj]).max() < 1e-8


@given(seeds)
def test_primed_coefficients_follow_sigma_prime(seed):
    rng = np.random.default_rng(seed)
    p, d = random_resonant(rng)
    ec = P.effective_constants(p, d)
    s0 = R.AtomState(random_density(rng, 2))
    tau = np.linspace(0, 5 / ec.Gamma, 9)
    dyn = A.dynamics_coefficients(p, d, tau, ec)
    steady = R.steady_state(p, d, ec)
    dev = np.array([s0.population - steady.population, np.conj(s0.sigma - steady.sigma), s0.sigma - steady.sigma])
    traj = R.evolve(s0, R.effective_generator(p, d, ec), tau, rtol=1e-11)
    sp_ss, spsp_ss = R.sigma_prime_moments(steady, ec)
    got = [R.sigma_prime_moments(s, ec) for s in traj]
    assert np.abs(dev @ dyn.C + sp_ss - [g[0] for g in got]).max() < 1e-8
    assert np.abs((dev @ dyn.D).real + spsp_ss - [g[1] for g in got]).max() < 1e-8


# --------------------------------------------------------------------------
# first-order coherence


@given(seeds)
def test_g1_closed_form_matches_dynamics_route(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    ec = P.effective_constants(p, d)
    tau = np.linspace(0, 15 / ec.Gamma, 40)
    for q in PORTS:
        a = A.g1_incoherent(p, d, q, tau, ec)
        b = A.g1_from_dynamics(p, d, q, tau, ec)
        assert sup_rel(a, b) < 1e-8


@given(seeds)
def test_g1_matches_regression(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    ec = P.effective_constants(p, d)
    gen = R.effective_generator(p, d, ec)
    st_ = R.steady_state(p, d, ec)
    tau = np.linspace(0, 15 / ec.Gamma, 40)
    for q in PORTS:
        num = R.numeric_g1(gen, st_.rho, R.output_operator(p, d, q, ec), tau)
        assert sup_rel(A.g1_incoherent(p, d, q, tau, ec), num) < 1e-8


@given(seeds)
def test_g1_at_zero_delay_is_incoherent_flux(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    for q in PORTS:
        g0 = A.g1_incoherent(p, d, q, [0.0])[0]
        inc = A.flux_decomposition(p, d, q).incoherent
        assert abs(g0 - inc) <= 1e-9 * abs(inc) + 1e-300


@given(seeds)
def test_appendix_weights_rebuild_g1(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    ec = P.effective_constants(p, d)
    lam = A.bloch_eigenvalues(p, d, ec)
    if abs(lam.lambda_plus - lam.lambda_minus) < 1e-3 * ec.Gamma:
        return
    c = A.appendix_coefficients(p, d, ec)
    tau = np.linspace(0, 10 / ec.Gamma, 30)
    l0, lp, lm = lam
    e = {z: np.exp(z * tau) for z in lam}
    kc = ec.kappa_prime.conjugate()
    plain = c.N0 * e[l0] + (c.N1 / (lp - l0) + c.N2) * e[lp] - (c.N1 / (lm - l0) + c.N2) * e[lm]
    primed = c.N0p * e[l0] + sum(s * (c.N1p / (z - l0) + c.N2p) * (z - l0 - kc) * e[z]
                                 for s, z in ((1, lp), (-1, lm)))
    ac = A.g1_incoherent(p, d, "ac1", tau, ec) / p.gamma_list[0]
    cc = A.g1_incoherent(p, d, "cc1", tau, ec) / abs(ec.Gamma_j_list[0])
    assert sup_rel(plain, ac) < 1e-7
    assert sup_rel(primed, cc) < 1e-7


def test_appendix_weights_vanish_without_drive(set2):
    c = A.appendix_coefficients(set2, P.resonant_drive(set2, 0.0))
    assert all(v == 0 for v in c)


def test_confluent_point(set2):
    nc = critical_power(set2)
    d = P.resonant_drive(set2, nc)
    ec = P.effective_constants(set2, d)
    lam = A.bloch_eigenvalues(set2, d, ec)
    assert abs(lam.lambda_plus - lam.lambda_minus) < 1e-6 * ec.Gamma
    if abs(lam.lambda_plus - lam.lambda_minus) < A.CONFLUENT_TOL * ec.Gamma:
        with pytest.raises(DegenerateEigenvalues):
            A.appendix_coefficients(set2, d, ec)
    tau = np.linspace(0, 15 / ec.Gamma, 40)
    om = d.omega_las + np.linspace(-2, 2, 41)
    gen = R.effective_generator(set2, d, ec)
    st_ = R.steady_state(set2, d, ec)
    for q in PORTS:
        k = R.output_operator(set2, d, q, ec)
        assert sup_rel(A.g1_incoherent(set2, d, q, tau, ec), R.numeric_g1(gen, st_.rho, k, tau)) < 1e-8
        s = A.spectral_density(set2, d, q, om, ec).values
        assert sup_rel(s, R.numeric_spectrum(gen, st_.rho, k, om, d.omega_las)) < 1e-8
        assert np.all(np.isfinite(s))
    # continuous across the merge
    for eps in (1e-9, -1e-9):
        d2 = P.resonant_drive(set2, nc * (1 + eps))
        assert sup_rel(A.g1_incoherent(set2, d2, "cc1", tau), A.g1_incoherent(set2, d, "cc1", tau)) < 1e-6


def test_degenerate_eigenvalues_raised_exactly_at_merge():
    # make the radicand vanish exactly by constructing the constants
    p = P.table_set(1)
    d = P.resonant_drive(p, 1.0)
    ec = P.effective_constants(p, d)
    om = math.sqrt(ec.Gamma**2 / (16 * (1 + ec.x).real))
    from dataclasses import replace
    ec0 = replace(ec, Omega=complex(om))
    with pytest.raises(DegenerateEigenvalues):
        A.appendix_coefficients(p, d, ec0)


def test_off_resonance_raises(set2):
    d = P.DriveSpec.from_photon_number(set2, 1.0, "cc1", 0.3)
    with pytest.raises(NotResonant):
        A.spectral_density(set2, d, "cc1", [0.0])
    with pytest.raises(NotResonant):
        A.g1_incoherent(set2, d, "cc1", [0.0])
    with pytest.raises(NotResonant):
        A.g2_closed_form(set2, d, "cc1", [0.0])
    # fluxes exist at every laser frequency
    assert A.flux_decomposition(set2, d, "cc1").total > 0


# --------------------------------------------------------------------------
# fluxes


@given(seeds)
def test_flux_matches_operator_moments(seed):
    rng = np.random.default_rng(seed)
    p = P.random_params(rng, n_cc=2, n_ac=1)
    d = P.DriveSpec.from_photon_number(p, 10 ** rng.uniform(-4, 1), "cc1", p.omega_a + rng.uniform(-2, 2))
    ec = P.effective_constants(p, d)
    st_ = R.steady_state(p, d, ec)
    for q in PORTS:
        got = A.flux_decomposition(p, d, q, ec)
        ref = R.numeric_flux(st_.rho, R.output_operator(p, d, q, ec))
        assert got.total == pytest.approx(ref[2], rel=1e-10, abs=1e-300)
        assert got.coherent == pytest.approx(ref[0], rel=1e-10, abs=1e-300)
        assert got.coherent + got.incoherent == pytest.approx(got.total, rel=1e-14)


def test_grouped_fluxes_of_empty_cavity():
    p = P.SystemParams(0.0, (0.8, 0.2), (0.01,), 0.0, 0.0, 0.0)
    d = P.DriveSpec.from_photon_number(p, 1.0, "cc1", 0.0)
    g = A.grouped_fluxes(p, d)
    phi = d.flux
    # Lorentzian cavity: |1 - 2 k1 / k|^2 reflected, 4 k1 k2 / k^2 transmitted
    assert g["refl"].total == pytest.approx(0.36 * phi, rel=1e-12)
    assert g["tr"].total == pytest.approx(0.64 * phi, rel=1e-12)
    assert g["em"].total == 0
    assert g["refl"].incoherent == pytest.approx(0, abs=1e-15)


def test_low_power_fluxes_are_linear_scattering(set2):
    w = np.linspace(-1, 1, 21)
    for x in w:
        d = P.DriveSpec("cc", 0, 1e-4, x)
        sc = R.semiclassical_amplitudes(set2, d)
        g = A.grouped_fluxes(set2, d)
        phi = d.flux
        assert g["refl"].total / phi == pytest.approx(abs(sc.b_out[0]) ** 2 / phi, abs=1e-6)
        assert g["tr"].total / phi == pytest.approx(abs(sc.b_out[1]) ** 2 / phi, abs=1e-6)


# --------------------------------------------------------------------------
# spectra


def _integrate_spectrum(p, d, q, scale):
    # omega = w_las + scale * tan(t) turns the Lorentzian tails into a smooth integrand
    t = np.linspace(-math.pi / 2, math.pi / 2, 200001)[1:-1]
    om = d.omega_las + scale * np.tan(t)
    s = A.spectral_density(p, d, q, om).values
    return np.trapezoid(s * scale / np.cos(t) ** 2, t)


@pytest.mark.parametrize("which", [1, 2])
@pytest.mark.parametrize("n_in", [0.1, 5.0])
def test_spectrum_integrates_to_incoherent_flux(which, n_in):
    p = P.table_set(which)
    d = P.resonant_drive(p, n_in)
    ec = P.effective_constants(p, d)
    for q in PORTS:
        inc = A.flux_decomposition(p, d, q, ec).incoherent
        got = _integrate_spectrum(p, d, q, ec.Gamma)
        assert got == pytest.approx(inc, rel=1e-3)


@given(seeds)
def test_spectrum_matches_resolvent(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    ec = P.effective_constants(p, d)
    gen = R.effective_generator(p, d, ec)
    st_ = R.steady_state(p, d, ec)
    om = d.omega_las + np.linspace(-4, 4, 81) * ec.Gamma
    for q in PORTS:
        num = R.numeric_spectrum(gen, st_.rho, R.output_operator(p, d, q, ec), om, d.omega_las)
        assert sup_rel(A.spectral_density(p, d, q, om, ec).values, num) < 1e-8


@pytest.mark.parametrize("n_in", [0.1, 1.0, 5.0])
def test_resonant_set1_cavity_spectrum_is_symmetric(set1, n_in):
    d = P.resonant_drive(set1, n_in)
    nu = np.linspace(0, 3, 601)
    for q in ("cc1", "cc2"):
        up = A.spectral_density(set1, d, q, d.omega_las + nu).values
        down = A.spectral_density(set1, d, q, d.omega_las - nu).values
        assert np.abs(up - down).max() < 1e-6 * up.max()


@pytest.mark.parametrize("n_in", [0.01, 0.1])
def test_set2_total_spectrum_more_symmetric_than_cavity_part(set2, n_in):
    d = P.resonant_drive(set2, n_in)
    nu = np.linspace(0, 3, 601)

    def side(ports, sign):
        return sum(A.spectral_density(set2, d, q, d.omega_las + sign * nu).values for q in ports)

    cc = side(["cc1", "cc2"], 1) - side(["cc1", "cc2"], -1)
    tot = side(PORTS, 1) - side(PORTS, -1)
    assert np.abs(cc).max() > 0
    assert np.abs(tot).max() * 10 <= np.abs(cc).max()


def test_spectrum_metadata(set2):
    d = P.resonant_drive(set2, 5.0)
    s = A.spectral_density(set2, d, "cc1", [d.omega_las])
    assert s.model == "analytic" and s.port == "cc1"
    assert s.coherent_frequency == d.omega_las
    assert s.coherent_weight == pytest.approx(A.flux_decomposition(set2, d, "cc1").coherent)


# --------------------------------------------------------------------------
# second-order correlation


@given(seeds)
def test_g2_matches_regression(seed):
    p, d = random_resonant(np.random.default_rng(seed))
    ec = P.effective_constants(p, d)
    gen = R.effective_generator(p, d, ec)
    st_ = R.steady_state(p, d, ec)
    tau = np.linspace(0, 15 / ec.Gamma, 40)
    for q in PORTS:
        k = R.output_operator(p, d, q, ec)
        if R.numeric_flux(st_.rho, k)[2] < 1e-25:
            continue
        got = A.g2_closed_form(p, d, q, tau, ec).values
        assert sup_rel(got, R.numeric_g2(gen, st_.rho, k, tau)) < 1e-8


@given(seeds)
def test_g2_limits(seed):
    rng = np.random.default_rng(seed)
    p = P.random_params(rng, weak=True, n_cc=2, n_ac=1)
    d = P.resonant_drive(p, 10 ** rng.uniform(-4, 0), "cc1")
    ec = P.effective_constants(p, d)
    tau = np.array([0.0, 80 / ec.Gamma])
    ac = A.g2_closed_form(p, d, "ac1", tau, ec).values
    assert abs(ac[0]) < 1e-6
    for q in PORTS:
        assert abs(A.g2_closed_form(p, d, q, tau, ec).values[-1] - 1) < 1e-6


def test_set2_reflection_bunches_at_low_power(set2):
    g = A.g2_closed_form(set2, P.resonant_drive(set2, 1e-4), "cc1", [0.0])
    assert g.values[0] > 1
    assert g.model == "analytic" and g.kind == "g2"


def test_g2_without_photons_raises(set2):
    with pytest.raises(ZeroFlux):
        A.g2_closed_form(set2, P.resonant_drive(set2, 0.0), "cc1", [0.0])
