"""Two-level model of the atom with the cavity self-consistently eliminated.

Basis convention: index 0 is the ground state, index 1 the excited state, so
``sigma = [[0, 1], [0, 0]]``, ``<sigma> = rho[1, 0]`` and the excited
population is ``rho[1, 1]``. Every quantity is evaluated in the frame of the
laser, where a CW drive is time independent.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import params as P
from .errors import InvalidState, ZeroFlux
from .integrate import evolve_linear
from .superop import dense_lindbladian, expect_row, unvec, vec

SIGMA = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_DAG = SIGMA.conj().T
PROJ_E = np.array([[0, 0], [0, 1]], dtype=complex)
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
EYE2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class AtomState:
    """Density matrix of the effective two-level atom."""

    rho: np.ndarray

    @classmethod
    def from_moments(cls, population: float, coherence: complex) -> "AtomState":
        """Build the state with ``<sigma^dag sigma> = population`` and ``<sigma> = coherence``."""
        p = float(np.real(population))
        s = complex(coherence)
        return cls(np.array([[1 - p, s.conjugate()], [s, p]], dtype=complex))

    @classmethod
    def ground(cls) -> "AtomState":
        return cls.from_moments(0.0, 0.0)

    @classmethod
    def excited(cls) -> "AtomState":
        return cls.from_moments(1.0, 0.0)

    @property
    def sigma(self) -> complex:
        return complex(self.rho[1, 0])

    @property
    def population(self) -> float:
        return float(self.rho[1, 1].real)

    @property
    def sigma_z(self) -> float:
        return 2 * self.population - 1

    def expect(self, op) -> complex:
        return complex(np.trace(np.asarray(op) @ self.rho))


def project_to_state(rho: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Hermitize, renormalize and clip round-off negativity of a 2x2 matrix.

    Raises
    ------
    InvalidState
        If an eigenvalue is below ``-tol``.
    """
    r = 0.5 * (rho + rho.conj().T)
    r = r / np.trace(r).real
    w, v = np.linalg.eigh(r)
    if w[0] < -tol:
        raise InvalidState(f"state has eigenvalue {w[0]:.3e}")
    if w[0] < 0:
        w = np.clip(w, 0, None)
        w /= w.sum()
        r = (v * w) @ v.conj().T
    return r


# ---------------------------------------------------------------------------
# generator


@dataclass(frozen=True)
class EffectiveGenerator:
    """Hamiltonian and the two decoherence channels of the reduced model."""

    H_eff: np.ndarray
    L_M: np.ndarray
    L_NM: np.ndarray
    gamma_M: float
    gamma_NM: float
    constants: P.EffectiveConstants

    @property
    def liouvillian(self) -> np.ndarray:
        """Dense 4x4 generator acting on column-stacked density matrices."""
        return dense_lindbladian(self.H_eff, [(self.gamma_M, self.L_M), (self.gamma_NM, self.L_NM)])


def _constants(p, drive, ec=None) -> P.EffectiveConstants:
    return ec if ec is not None else P.effective_constants(p, drive)


def effective_generator(p: P.SystemParams, drive: P.DriveSpec, ec=None) -> EffectiveGenerator:
    """Effective Hamiltonian, decoherence operators and rates (laser frame)."""
    ec = _constants(p, drive, ec)
    om1 = ec.Omega * (1 + ec.x)
    det = ec.omega_a_eff - ec.omega_ref
    h = det * PROJ_E - 0.5j * (om1 * SIGMA_DAG - om1.conjugate() * SIGMA)
    c, s = math.cos(ec.theta), math.sin(ec.theta)
    ph = cmath.exp(1j * ec.phi)
    l_m = c * ph * SIGMA + s * PROJ_E
    l_nm = -s * ph * SIGMA + c * PROJ_E
    return EffectiveGenerator(h, l_m, l_nm, ec.gamma_M, ec.gamma_NM, ec)


def bloch_rhs(state: AtomState, p: P.SystemParams, drive: P.DriveSpec, ec=None) -> tuple[complex, float]:
    """Time derivatives ``(d<sigma>/dt, d<sigma_z>/dt)`` of the effective Bloch equations."""
    ec = _constants(p, drive, ec)
    s, z = state.sigma, state.sigma_z
    om, x = ec.Omega, ec.x
    ds = -ec.gamma_prime_minus * s + 0.5 * om * (z - x)
    dz = -ec.Gamma * (z + 1) - 2 * ((1 + x) * om * s.conjugate()).real
    return ds, dz


def bloch_matrix(ec: P.EffectiveConstants) -> tuple[np.ndarray, np.ndarray]:
    """Affine form ``d/dt (s, s*, z) = M @ (s, s*, z) + c`` of the Bloch equations."""
    gm, om, x, G = ec.gamma_prime_minus, ec.Omega, ec.x, ec.Gamma
    u = 1 + x
    m = np.array([
        [-gm, 0, om / 2],
        [0, -gm.conjugate(), om.conjugate() / 2],
        [-u.conjugate() * om.conjugate(), -u * om, -G],
    ], dtype=complex)
    c = np.array([-om * x / 2, -(om * x).conjugate() / 2, -G], dtype=complex)
    return m, c


class SteadyMoments(NamedTuple):
    population: float
    sigma: complex


def steady_state_closed_form(p: P.SystemParams, drive: P.DriveSpec, ec=None) -> SteadyMoments:
    """Stationary ``(<sigma^dag sigma>, <sigma>)`` under CW driving."""
    ec = _constants(p, drive, ec)
    gm, om, x, G = ec.gamma_prime_minus, ec.Omega, ec.x, ec.Gamma
    if om == 0:
        return SteadyMoments(0.0, 0j)
    num = abs(om * (1 + x) / (2 * gm)) ** 2
    den = 1 + abs(om) ** 2 / (G * abs(gm) ** 2) * (gm * (1 + x)).real
    n = num / den
    s = om / (2 * gm) * (2 * n - 1 - x)
    return SteadyMoments(n, s)


def steady_state(p: P.SystemParams, drive: P.DriveSpec, ec=None) -> AtomState:
    """Stationary state as a density matrix (closed form)."""
    n, s = steady_state_closed_form(p, drive, ec)
    return AtomState.from_moments(n, s)


def steady_state_numeric(gen: EffectiveGenerator) -> AtomState:
    """Null vector of the 4x4 generator with the trace fixed to one."""
    lv = gen.liouvillian.copy()
    rhs = np.zeros(4, complex)
    lv[0, :] = vec(EYE2)
    rhs[0] = 1
    r = unvec(np.linalg.solve(lv, rhs), 2)
    return AtomState(0.5 * (r + r.conj().T))


def sigma_prime_moments(state: AtomState, ec: P.EffectiveConstants) -> tuple[complex, float]:
    """``(<sigma'>, <sigma'^dag sigma'>)`` for an arbitrary atom state."""
    om, x, kp = ec.Omega, ec.x, ec.kappa_prime
    s, n = state.sigma, state.population
    sp = s - (state.sigma_z - x) * om / (2 * kp)
    spsp = (n * (1 - abs(om / kp) ** 2 * x.real)
            + abs(om * (1 + x) / (2 * kp)) ** 2
            + (s.conjugate() * om * (1 + x) / kp).real)
    return sp, spsp


def sigma_prime_expectations(p: P.SystemParams, drive: P.DriveSpec, steady=None, ec=None):
    """Stationary moments of ``sigma' = sigma - (sigma_z - x) Omega / (2 kappa')``."""
    ec = _constants(p, drive, ec)
    if steady is None:
        steady = steady_state(p, drive, ec)
    elif not isinstance(steady, AtomState):
        steady = AtomState.from_moments(*steady)
    return sigma_prime_moments(steady, ec)


def empty_cavity_field(p, drive, ec=None) -> complex:
    ec = _constants(p, drive, ec)
    beta = P.cc_inputs(p, drive)
    return -complex(np.dot(np.sqrt(p.kappa_list), beta)) / ec.kappa_prime


def effective_cavity_expectations(state: AtomState, p: P.SystemParams, drive: P.DriveSpec, ec=None) -> complex:
    """Intracavity amplitude ``<a>`` rebuilt from the atom state."""
    ec = _constants(p, drive, ec)
    sp, _ = sigma_prime_moments(state, ec)
    return empty_cavity_field(p, drive, ec) - p.g / (ec.kappa_prime - ec.gamma_prime_minus) * sp


class SemiclassicalAmplitudes(NamedTuple):
    sigma: complex
    a: complex
    b_out: np.ndarray
    c_out: np.ndarray


def semiclassical_amplitudes(p: P.SystemParams, drive: P.DriveSpec) -> SemiclassicalAmplitudes:
    """Low-power scattering amplitudes (atom never leaves the ground state).

    Only valid when the excited population is negligible; the caller is
    responsible for staying in that regime.
    """
    P.check_drive(p, drive)
    q = p.with_frame(drive.omega_las)
    kp, gp = P.complex_rates(q)
    sk = np.sqrt(p.kappa_list)
    sg = np.sqrt(p.gamma_list) if p.gamma_list else np.zeros(0)
    bin_ = P.cc_inputs(p, drive)
    cin = P.ac_inputs(p, drive)
    bsum = complex(np.dot(sk, bin_))
    csum = complex(np.dot(sg, cin)) if cin.size else 0j
    den = kp * gp + p.g**2
    s = (-p.g * bsum - kp * csum) / den
    a = (-gp * bsum + p.g * csum) / den
    return SemiclassicalAmplitudes(s, a, bin_ + sk * a, cin + sg * s)


# ---------------------------------------------------------------------------
# output channels


def output_operator(p: P.SystemParams, drive: P.DriveSpec, port, ec=None) -> np.ndarray:
    """2x2 operator whose moments give the output field of ``port``.

    CC port ``j``: ``b_out,c - sqrt(Gamma_j) sigma'``; AC port ``l``:
    ``c_in + sqrt(gamma_l) sigma``. Input amplitudes enter as c-numbers.
    """
    port = P.check_port(p, port)
    ec = _constants(p, drive, ec)
    if port.kind == "cc":
        j = port.index
        bc = P.cc_inputs(p, drive)[j] + math.sqrt(p.kappa_list[j]) * empty_cavity_field(p, drive, ec)
        sig_p = SIGMA - (SIGMA_Z - ec.x * EYE2) * ec.Omega / (2 * ec.kappa_prime)
        return bc * EYE2 - ec.sqrt_Gamma_j_list[j] * sig_p
    l = port.index
    return P.ac_inputs(p, drive)[l] * EYE2 + math.sqrt(p.gamma_list[l]) * SIGMA


def kraus_coefficients(p, drive, port, ec=None) -> tuple[complex, complex, complex]:
    """Write the output operator as ``u I + v sigma + w sigma^dag sigma``."""
    port = P.check_port(p, port)
    ec = _constants(p, drive, ec)
    if port.kind == "cc":
        j = port.index
        bc = P.cc_inputs(p, drive)[j] + math.sqrt(p.kappa_list[j]) * empty_cavity_field(p, drive, ec)
        sq = ec.sqrt_Gamma_j_list[j]
        c = ec.Omega / (2 * ec.kappa_prime)
        return bc - sq * c * (1 + ec.x), -sq, 2 * sq * c
    l = port.index
    return complex(P.ac_inputs(p, drive)[l]), complex(math.sqrt(p.gamma_list[l])), 0j


def port_flux_moments(state: AtomState, coeffs) -> float:
    """``<K^dag K>`` for ``K = u + v sigma + w P``."""
    u, v, w = coeffs
    n, s = state.population, state.sigma
    return float(abs(u) ** 2 + 2 * (u.conjugate() * v * s).real
                 + (2 * (u.conjugate() * w).real + abs(v) ** 2 + abs(w) ** 2) * n)


def kraus_back_action(state: AtomState, p: P.SystemParams, drive: P.DriveSpec, port, ec=None) -> AtomState:
    """Atom state right after a photon is detected in ``port``.

    The conditional moments follow from ``K rho K^dag / Tr`` with ``K`` the
    port output operator; the 2x2 matrix is rebuilt from them.

    Raises
    ------
    ZeroFlux
        If the port flux of ``state`` is below 1e-30.
    """
    n_c, s_c = conditional_moments(state, p, drive, port, ec)
    rho = AtomState.from_moments(n_c, s_c).rho
    return AtomState(project_to_state(rho))


def conditional_moments(state: AtomState, p: P.SystemParams, drive: P.DriveSpec, port, ec=None):
    """``(population, <sigma>)`` of ``K rho K^dag / Tr`` without any projection.

    The reduced generator is not completely positive, so far from its
    validity range the stationary matrix (and hence this one) can leave the
    state space. Correlation functions are still defined through these raw
    moments.
    """
    port = P.check_port(p, port)
    u, v, w = kraus_coefficients(p, drive, port, ec)
    flux = port_flux_moments(state, (u, v, w))
    if not flux > 1e-30:
        raise ZeroFlux(f"no photons leave port {port}")
    n, s = state.population, state.sigma
    uw = u + w
    return abs(uw) ** 2 * n / flux, uw * (u.conjugate() * s + v.conjugate() * n) / flux


# ---------------------------------------------------------------------------
# numerical route: evolution and regression in the 2-level space

RTOL = 1e-10


def evolve(state: AtomState, gen: EffectiveGenerator, t_grid, rtol=RTOL) -> list[AtomState]:
    """Integrate the effective master equation; returns one state per time."""
    t = np.asarray(t_grid, float)
    out = evolve_linear(gen.liouvillian, vec(state.rho), t, rtol=rtol, atol=rtol * 1e-3)
    return [AtomState(unvec(v, 2)) for v in out]


def _regress(gen, x0, t, rtol):
    if not np.any(x0):
        return np.zeros((len(t), 4), complex)
    return evolve_linear(gen.liouvillian, vec(x0), t, rtol=rtol, atol=rtol * 1e-6 * max(np.abs(x0).max(), 1e-300))


def numeric_flux(rho: np.ndarray, k: np.ndarray) -> tuple[float, float, float]:
    """``(coherent, incoherent, total)`` flux of output operator ``k`` in state ``rho``."""
    mean = np.trace(k @ rho)
    total = float(np.trace(k.conj().T @ k @ rho).real)
    coh = abs(mean) ** 2
    return coh, total - coh, total


def numeric_g1(gen: EffectiveGenerator, rho: np.ndarray, k: np.ndarray, tau, rtol=RTOL) -> np.ndarray:
    """Incoherent ``<K^dag(tau) K> - |<K>|^2`` by quantum regression."""
    tau = np.asarray(tau, float)
    mean = np.trace(k @ rho)
    fluct = k - mean * EYE2
    x0 = fluct @ rho
    order = np.argsort(tau)
    grid = np.concatenate(([0.0], tau[order])) if tau.size and tau[order][0] > 0 else tau[order]
    traj = _regress(gen, x0, grid, rtol)
    traj = traj[len(grid) - len(tau):]
    # the regressed matrix stays traceless, so projecting on the fluctuation
    # instead of K drops the c-number part and its cancellation error
    vals = traj @ expect_row(fluct.conj().T)
    out = np.empty(len(tau), complex)
    out[order] = vals
    return out


def numeric_spectrum(gen: EffectiveGenerator, rho: np.ndarray, k: np.ndarray, omega, omega_las: float) -> np.ndarray:
    """Incoherent spectral density from the resolvent of the generator.

    ``S(w) = (1/pi) Re Tr[dK^dag (i(w - w_las) - L)^-1 dK rho]`` with
    ``dK = K - <K>``; the
    rank-one term ``|rho><I|`` makes the inverse regular at ``w = w_las``
    without changing the result on traceless inputs.
    """
    lv = gen.liouvillian
    mean = np.trace(k @ rho)
    fluct = k - mean * EYE2
    x0 = vec(fluct @ rho)
    fix = np.outer(vec(rho), vec(EYE2).conj())
    row = expect_row(fluct.conj().T)
    om = np.atleast_1d(np.asarray(omega, float))
    out = np.empty(om.size)
    for i, w in enumerate(om):
        m = 1j * (w - omega_las) * np.eye(4) - lv + fix
        out[i] = (row @ np.linalg.solve(m, x0)).real / math.pi
    return out


def numeric_g2(gen: EffectiveGenerator, rho: np.ndarray, k: np.ndarray, tau, rtol=RTOL) -> np.ndarray:
    """``<K^dag K^dag(tau) K(tau) K> / <K^dag K>^2`` by regression from ``K rho K^dag``."""
    tau = np.asarray(tau, float)
    flux = float(np.trace(k.conj().T @ k @ rho).real)
    if not flux > 1e-30:
        raise ZeroFlux("no photons leave this port")
    x0 = k @ rho @ k.conj().T
    order = np.argsort(tau)
    grid = np.concatenate(([0.0], tau[order])) if tau.size and tau[order][0] > 0 else tau[order]
    traj = _regress(gen, x0, grid, rtol)
    traj = traj[len(grid) - len(tau):]
    vals = (traj @ expect_row(k.conj().T @ k)).real / flux**2
    out = np.empty(len(tau))
    out[order] = vals
    return out


__all__ = [
    "AtomState", "EffectiveGenerator", "InvalidState", "SemiclassicalAmplitudes", "SteadyMoments",
    "effective_generator", "bloch_rhs", "bloch_matrix", "steady_state_closed_form", "steady_state",
    "steady_state_numeric", "sigma_prime_moments", "sigma_prime_expectations",
    "effective_cavity_expectations", "semiclassical_amplitudes", "output_operator",
    "kraus_coefficients", "port_flux_moments", "kraus_back_action", "conditional_moments", "evolve", "numeric_flux",
    "numeric_g1", "numeric_spectrum", "numeric_g2", "project_to_state",
]
