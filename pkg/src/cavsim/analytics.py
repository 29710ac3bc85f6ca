"""Closed-form results of the reduced model under a single CW drive.

Fluxes are available at any laser frequency. Time-dependent quantities
(dynamics coefficients, first-order coherence, spectra, g2) have closed forms
only when the laser sits on the effective atomic resonance; away from it they
raise :class:`NotResonant` and the numerical route in ``cqed_reduced`` should
be used instead.

Terms such as ``(f(l+) - f(l-)) / (l+ - l-)`` are evaluated as divided
differences with stable kernels, so nothing special happens when the two
driven eigenvalues merge at the critical drive strength.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import cqed_reduced as R
from . import params as P
from .errors import DegenerateEigenvalues, NotResonant, ZeroFlux
from .series import CorrelationSeries, SpectrumSeries

RESONANCE_TOL = 1e-6
CONFLUENT_TOL = 1e-10


def _ec(p, drive, ec=None):
    return ec if ec is not None else P.effective_constants(p, drive)


def require_resonant(p: P.SystemParams, drive: P.DriveSpec, ec=None) -> P.EffectiveConstants:
    """Return the constants, or raise if the laser is off the effective atomic line."""
    ec = _ec(p, drive, ec)
    if abs(drive.omega_las - ec.omega_a_eff) > RESONANCE_TOL * p.kappa:
        raise NotResonant(
            f"laser at {drive.omega_las:.6g} but effective atom at {ec.omega_a_eff:.6g}; "
            "use the numerical route off resonance")
    return ec


class BlochEigenvalues(NamedTuple):
    lambda_0: complex
    lambda_plus: complex
    lambda_minus: complex


def bloch_eigenvalues(p: P.SystemParams, drive: P.DriveSpec, ec=None) -> BlochEigenvalues:
    """Relaxation eigenvalues of the resonant Bloch equations."""
    ec = require_resonant(p, drive, ec)
    return _eigen(ec)


def _eigen(ec) -> BlochEigenvalues:
    G = ec.Gamma
    rad = cmath.sqrt(1 - 16 * abs(ec.Omega) ** 2 * (1 + ec.x).real / G**2)
    return BlochEigenvalues(complex(-G / 2), G / 4 * (-3 + rad), G / 4 * (-3 - rad))


# ---------------------------------------------------------------------------
# stable exponential combinations


def _exp_terms(lam: BlochEigenvalues, t):
    """``(e0, E1, E2, F)`` at times ``t``.

    With ``e+- = exp(l+- t)``: ``E1 = (e+ - e-)/(l+ - l-)``,
    ``E2 = (l+ e+ - l- e-)/(l+ - l-)`` and ``F = (l+ e- - l- e+)/(l+ - l-)``.
    """
    t = np.asarray(t, float)
    l0, lp, lm = lam
    lbar = (lp + lm) / 2
    d = (lp - lm) / 2
    z = d * t
    ebar = np.exp(lbar * t)
    small = np.abs(z) < 1e-3
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = (np.exp(lp * t) - np.exp(lm * t)) / (2 * d) if d != 0 else np.zeros_like(t, complex)
    z2 = z * z
    series = ebar * t * (1 + z2 / 6 + z2 * z2 / 120 + z2 * z2 * z2 / 5040)
    e1 = np.where(small, series, direct)
    ch = np.where(small, ebar * np.cosh(z), (np.exp(lp * t) + np.exp(lm * t)) / 2)
    return np.exp(l0 * t), e1, ch + lbar * e1, ch - lbar * e1


@dataclass
class DynamicsCoefficients:
    """Response of ``<sigma>``, ``<sigma^dag sigma>``, ``<sigma'>`` and ``<sigma'^dag sigma'>``.

    Each attribute has shape ``(3, len(tau))``; row ``i`` multiplies the
    initial deviation from the steady state of, in order, the population,
    ``<sigma^dag>`` and ``<sigma>``.
    """

    tau: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


def dynamics_coefficients(p: P.SystemParams, drive: P.DriveSpec, tau, ec=None) -> DynamicsCoefficients:
    """Coefficients ``A_i, B_i, C_i, D_i`` of the resonant solution of the Bloch equations."""
    ec = require_resonant(p, drive, ec)
    return _dynamics(ec, tau)


def _dynamics(ec, tau) -> DynamicsCoefficients:
    tau = np.atleast_1d(np.asarray(tau, float))
    lam = _eigen(ec)
    l0 = lam.lambda_0
    om, x, kp = ec.Omega, ec.x, ec.kappa_prime
    u = 1 + x
    e0, e1, e2, f = _exp_terms(lam, tau)
    phase = om * om / abs(om) ** 2 if om != 0 else 1.0
    a1 = om * e1
    a2 = u * phase / (2 * u.real) * (f + l0 * e1 - e0)
    a3 = (u.conjugate() * (f + l0 * e1) + u * e0) / (2 * u.real)
    b1 = e2 - l0 * e1
    b2 = -u * om / 2 * e1
    b3 = np.conj(b2)
    A = np.array([a1, a2, a3])
    B = np.array([b1, b2, b3])
    C = A - B * (om / kp)
    w = om * u / (2 * kp)
    pop_scale = 1 - abs(om / kp) ** 2 * x.real
    d1 = (om * u / kp * np.conj(a1)).real + b1 * pop_scale
    d2 = w * np.conj(a3) + w.conjugate() * a2 + b2 * pop_scale
    D = np.array([d1, d2, np.conj(d2)])
    return DynamicsCoefficients(tau, A, B, C, D)


def propagate_moments(dyn: DynamicsCoefficients, initial, steady) -> tuple[np.ndarray, np.ndarray]:
    """``(<sigma>(t), <sigma^dag sigma>(t))`` from an initial state, using the coefficients."""
    (n0, s0), (ns, ss) = initial, steady
    dev = np.array([n0 - ns, np.conj(s0) - np.conj(ss), s0 - ss])
    return dev @ dyn.A + ss, (dev @ dyn.B).real + ns


# ---------------------------------------------------------------------------
# coefficients of the first-order coherence


class AppendixCoefficients(NamedTuple):
    N0: complex
    N1: complex
    N2: complex
    N0p: complex
    N1p: complex
    N2p: complex


class _Weights(NamedTuple):
    # N1, N2 times (l- - l+); N1', N2' times (l+ - l-): finite when l+ = l-
    N0: complex
    n1: complex
    n2: complex
    N0p: complex
    n1p: complex
    n2p: complex


def _weights(ec, lam) -> _Weights:
    om, x, kp = ec.Omega, ec.x, ec.kappa_prime
    if om == 0:
        return _Weights(0j, 0j, 0j, 0j, 0j, 0j)
    l0, lp, lm = lam
    u = 1 + x
    uc = u.conjugate()
    xc = x.conjugate()
    o2 = abs(om) ** 2
    a = o2 * abs(u) ** 2
    pre = o2 * a  # |Omega|^4 |1+x|^2
    lpm = lp * lm
    kc = kp.conjugate()
    den0 = 4 * lpm * (lp - l0) * (lm - l0)
    n0 = pre * uc / den0 * (1 - (x - xc) / (2 * l0**2 * abs(u) ** 2) * (a - lpm * u))
    n1 = pre / (4 * lpm) * (u * (2 - (lp + lm) / l0) - a / (lpm * l0) * (l0 - lm - lp))
    n2 = -pre / (4 * lpm**2 * l0) * (a - lpm * u)
    n0p = pre * uc / den0 * (
        1 - 1 / (2 * l0**2 * kp) * ((o2 - lpm / uc) * (2 * l0 - kp * (xc - x)) - o2 * l0 * (xc - x)))
    n1p = pre * u / (4 * lpm * kc) * (
        1 + 1 / (l0 * kp * u) * (o2 * uc - lpm - (a / lpm * (kp + l0) - kp * u) * (l0 - lp - lm)))
    n2p = pre / (4 * l0 * lpm * abs(kp) ** 2) * (kp * u + 2 * l0 - a / lpm * (kp + l0))
    return _Weights(n0, n1, n2, n0p, n1p, n2p)


def appendix_coefficients(p: P.SystemParams, drive: P.DriveSpec, ec=None) -> AppendixCoefficients:
    """Weights of the three exponentials in the incoherent first-order coherence.

    Raises
    ------
    DegenerateEigenvalues
        When ``|l+ - l-| < 1e-10 Gamma``; several weights have a pole there
        (the correlation functions themselves stay finite and are evaluated
        through their limit).
    """
    ec = require_resonant(p, drive, ec)
    lam = _eigen(ec)
    l0, lp, lm = lam
    if abs(lp - lm) < CONFLUENT_TOL * ec.Gamma:
        raise DegenerateEigenvalues("l+ and l- coincide")
    w = _weights(ec, lam)
    return AppendixCoefficients(w.N0, w.n1 / (lm - lp), w.n2 / (lm - lp),
                                w.N0p, w.n1p / (lp - lm), w.n2p / (lp - lm))


class _Kernel(NamedTuple):
    at_plus: np.ndarray
    at_minus: np.ndarray
    divided: np.ndarray  # (k(l+) - k(l-)) / (l+ - l-)
    at_zero: np.ndarray


def _exp_kernel(lam, tau) -> _Kernel:
    tau = np.asarray(tau, float)
    e0, e1, _, _ = _exp_terms(lam, tau)
    return _Kernel(np.exp(lam.lambda_plus * tau), np.exp(lam.lambda_minus * tau), e1, e0)


def _lorentz_kernel(lam, nu) -> _Kernel:
    """``k(l) = -1 / (l + i nu)``, the one-sided transform of ``exp(l tau)``."""
    zp = lam.lambda_plus + 1j * nu
    zm = lam.lambda_minus + 1j * nu
    return _Kernel(-1 / zp, -1 / zm, 1 / (zp * zm), -1 / (lam.lambda_0 + 1j * nu))


def _pair_sum(w: _Weights, lam, k: _Kernel, ec, primed: bool):
    """Combine weights with a kernel: the two driven-eigenvalue terms of g1."""
    l0, lp, lm = lam
    inv_dd = -1 / ((lp - l0) * (lm - l0))  # divided difference of 1/(l - l0)
    # divided difference of k(l)/(l - l0), product rule
    k_over = inv_dd * k.at_minus + k.divided / (lp - l0)
    if not primed:
        # N1/(l-l0) + N2 with N = n/(l- - l+): minus the divided difference
        return w.N0 * k.at_zero - (w.n1 * k_over + w.n2 * k.divided)
    kc = ec.kappa_prime.conjugate()
    # (n1'/(l-l0) + n2')(l - l0 - kc) k(l) = n1' k + n2' (l - l0 - kc) k - n1' kc k/(l-l0)
    lam_k = k.at_minus + lp * k.divided  # divided difference of l*k(l)
    return (w.N0p * k.at_zero
            + w.n1p * k.divided
            + w.n2p * (lam_k - (l0 + kc) * k.divided)
            - w.n1p * kc * k_over)


def _port_rate(p, ec, port) -> float:
    if port.kind == "cc":
        return abs(ec.Gamma_j_list[port.index])
    return p.gamma_list[port.index]


def g1_incoherent(p: P.SystemParams, drive: P.DriveSpec, port, tau, ec=None) -> np.ndarray:
    """Incoherent first-order coherence of an output port (three-exponential form)."""
    port = P.check_port(p, port)
    ec = require_resonant(p, drive, ec)
    lam = _eigen(ec)
    w = _weights(ec, lam)
    k = _exp_kernel(lam, np.atleast_1d(np.asarray(tau, float)))
    return _port_rate(p, ec, port) * _pair_sum(w, lam, k, ec, port.kind == "cc")


def g1_from_dynamics(p: P.SystemParams, drive: P.DriveSpec, port, tau, ec=None) -> np.ndarray:
    """Same quantity as :func:`g1_incoherent`, assembled from the dynamics coefficients."""
    port = P.check_port(p, port)
    ec = require_resonant(p, drive, ec)
    dyn = _dynamics(ec, tau)
    n, s = R.steady_state_closed_form(p, drive, ec)
    if port.kind == "ac":
        a1, a2, a3 = np.conj(dyn.A)
        val = -a1 * n * s - a2 * s * s + a3 * (n - abs(s) ** 2)
        return p.gamma_list[port.index] * val
    sp, _ = R.sigma_prime_moments(R.AtomState.from_moments(n, s), ec)
    om, x, kp = ec.Omega, ec.x, ec.kappa_prime
    c1, c2, c3 = np.conj(dyn.C)
    val = (c3 * (n + s.conjugate() * ((1 + x) * om / (2 * kp) - sp))
           - (c2 * s + c1 * n) * ((1 - x) * om / (2 * kp) + sp))
    return abs(ec.Gamma_j_list[port.index]) * val


# ---------------------------------------------------------------------------
# fluxes


class FluxParts(NamedTuple):
    coherent: float
    incoherent: float
    total: float


def output_amplitude(p: P.SystemParams, drive: P.DriveSpec, port, state=None, ec=None) -> complex:
    """Mean output field of ``port`` in ``state`` (steady state by default)."""
    port = P.check_port(p, port)
    ec = _ec(p, drive, ec)
    if state is None:
        state = R.steady_state(p, drive, ec)
    if port.kind == "cc":
        j = port.index
        bc = P.cc_inputs(p, drive)[j] + math.sqrt(p.kappa_list[j]) * R.empty_cavity_field(p, drive, ec)
        sp, _ = R.sigma_prime_moments(state, ec)
        return bc - ec.sqrt_Gamma_j_list[j] * sp
    l = port.index
    return P.ac_inputs(p, drive)[l] + math.sqrt(p.gamma_list[l]) * state.sigma


def flux_decomposition(p: P.SystemParams, drive: P.DriveSpec, port, ec=None) -> FluxParts:
    """Coherent, incoherent and total steady output flux of one port (any laser frequency)."""
    port = P.check_port(p, port)
    ec = _ec(p, drive, ec)
    st = R.steady_state(p, drive, ec)
    coh = abs(output_amplitude(p, drive, port, st, ec)) ** 2
    if port.kind == "cc":
        sp, spsp = R.sigma_prime_moments(st, ec)
        inc = abs(ec.Gamma_j_list[port.index]) * (spsp - abs(sp) ** 2)
    else:
        inc = p.gamma_list[port.index] * (st.population - abs(st.sigma) ** 2)
    return FluxParts(coh, inc, coh + inc)


def port_groups(p: P.SystemParams) -> dict:
    """Ports grouped as reflected (first CC port), transmitted (other CC) and emitted (AC)."""
    return {
        "refl": [P.Port("cc", 0)],
        "tr": [P.Port("cc", j) for j in range(1, len(p.kappa_list))],
        "em": [P.Port("ac", l) for l in range(len(p.gamma_list))],
    }


def grouped_fluxes(p: P.SystemParams, drive: P.DriveSpec, ec=None) -> dict:
    """:class:`FluxParts` summed over each port group."""
    ec = _ec(p, drive, ec)
    out = {}
    for name, ports in port_groups(p).items():
        parts = [flux_decomposition(p, drive, q, ec) for q in ports]
        out[name] = FluxParts(*(math.fsum(v) for v in zip(*parts))) if parts else FluxParts(0.0, 0.0, 0.0)
    return out


# ---------------------------------------------------------------------------
# spectra


def spectral_density(p: P.SystemParams, drive: P.DriveSpec, port, omega_grid, ec=None) -> SpectrumSeries:
    """Incoherent spectral density of one port as a sum of complex Lorentzians.

    Normalized so that its integral over angular frequency equals the
    incoherent flux. The coherent flux is attached as a delta weight at the
    laser frequency.
    """
    port = P.check_port(p, port)
    ec = require_resonant(p, drive, ec)
    lam = _eigen(ec)
    w = _weights(ec, lam)
    om = np.atleast_1d(np.asarray(omega_grid, float))
    k = _lorentz_kernel(lam, drive.omega_las - om)
    vals = _port_rate(p, ec, port) * _pair_sum(w, lam, k, ec, port.kind == "cc").real / math.pi
    flux = flux_decomposition(p, drive, port, ec)
    return SpectrumSeries(om, vals, str(port), "analytic", flux.coherent, drive.omega_las,
                          {"peaks": [drive.omega_las + l.imag for l in lam]})


# ---------------------------------------------------------------------------
# second-order correlation


def g2_coefficients(p: P.SystemParams, drive: P.DriveSpec, port, tau, ec=None) -> np.ndarray:
    """``(c1, c2, c3)`` multiplying the conditional deviations of ``(P, <sigma^dag>, <sigma>)``.

    Exact zero-delay forms are used at ``tau == 0``.
    """
    port = P.check_port(p, port)
    ec = require_resonant(p, drive, ec)
    tau = np.atleast_1d(np.asarray(tau, float))
    dyn = _dynamics(ec, tau)
    om, x, kp = ec.Omega, ec.x, ec.kappa_prime
    zero = tau == 0
    if port.kind == "ac":
        l = port.index
        gl = p.gamma_list[l]
        sg = math.sqrt(gl)
        cin = P.ac_inputs(p, drive)[l]
        a1, a2, a3 = dyn.A
        b1, b2, _ = dyn.B
        c1 = 2 * sg * (cin.conjugate() * a1).real + gl * b1.real
        c2 = sg * (cin.conjugate() * a2 + cin * np.conj(a3)) + gl * b2
        c1 = np.where(zero, gl, c1)
        c2 = np.where(zero, sg * cin, c2)
    else:
        j = port.index
        sq = ec.sqrt_Gamma_j_list[j]
        gj = abs(ec.Gamma_j_list[j])
        bc = P.cc_inputs(p, drive)[j] + math.sqrt(p.kappa_list[j]) * R.empty_cavity_field(p, drive, ec)
        C1, C2, C3 = dyn.C
        D1, D2, _ = dyn.D
        c1 = -2 * (sq * bc.conjugate() * C1).real + gj * D1.real
        c2 = -sq * bc.conjugate() * C2 - sq.conjugate() * bc * np.conj(C3) + gj * D2
        c1_0 = 2 * (sq * bc.conjugate() * om / kp).real + gj * (1 - abs(om / kp) ** 2 * x.real)
        c2_0 = -sq.conjugate() * bc + gj * om * (1 + x) / (2 * kp)
        c1 = np.where(zero, c1_0, c1)
        c2 = np.where(zero, c2_0, c2)
    return np.array([c1.astype(complex), c2, np.conj(c2)])


def g2_closed_form(p: P.SystemParams, drive: P.DriveSpec, port, tau_grid, ec=None) -> CorrelationSeries:
    """Normalized second-order correlation of one port from the conditional state.

    Raises
    ------
    ZeroFlux
        If the steady flux of the port vanishes.
    """
    port = P.check_port(p, port)
    ec = require_resonant(p, drive, ec)
    tau = np.atleast_1d(np.asarray(tau_grid, float))
    st = R.steady_state(p, drive, ec)
    flux = flux_decomposition(p, drive, port, ec).total
    if not flux > 1e-30:
        raise ZeroFlux(f"no photons leave port {port}")
    n_c, s_c = R.conditional_moments(st, p, drive, port, ec)
    dev = np.array([n_c - st.population, np.conj(s_c) - np.conj(st.sigma), s_c - st.sigma])
    coef = g2_coefficients(p, drive, port, tau, ec)
    vals = 1 + (dev @ coef).real / flux
    return CorrelationSeries(tau, vals, str(port), "analytic", "g2")


__all__ = [
    "BlochEigenvalues", "DynamicsCoefficients", "AppendixCoefficients", "FluxParts",
    "require_resonant", "bloch_eigenvalues", "dynamics_coefficients", "propagate_moments",
    "appendix_coefficients", "g1_incoherent", "g1_from_dynamics", "output_amplitude",
    "flux_decomposition", "port_groups", "grouped_fluxes", "spectral_density",
    "g2_coefficients", "g2_closed_form",
]
