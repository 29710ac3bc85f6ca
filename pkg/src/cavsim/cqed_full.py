"""Atom plus truncated cavity mode: the reference model with no elimination.

The state lives on atom (x) cavity with the atom first: index ``2 * ... ``
ordering follows ``np.kron(atom, cavity)``. Atom index 0 is the ground state.
All generators are written in the frame of the laser.

Two equivalent frames are available for the cavity:

``"displaced"`` (default)
    The cavity operator is split as ``a = a_d + alpha`` with ``alpha`` the
    field the drive builds in the empty cavity. The coherent cavity drive
    then disappears and reappears as a drive of the atom of strength
    ``g * alpha``, so only the atom-induced photons need Fock levels.
``"lab"``
    The textbook form with the drive Hamiltonian acting on the cavity. Needs
    enough levels to hold the whole coherent field.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import params as P
from .errors import AliasWarning, DimensionOverflow, NoConvergence, SingularLiouvillian, ZeroFlux
from .integrate import evolve_linear
from .series import CorrelationSeries, SpectrumSeries
from .superop import expect_row, lindbladian, spost, spre, unvec, vec

MAX_DIMENSION = 402
DEFAULT_NMAX_CAP = 60
FRAMES = ("displaced", "lab")


@dataclass(frozen=True)
class FockTruncation:
    """Cavity cut after ``n_max`` photons; joint dimension ``2 (n_max + 1)``."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) < 1:
            raise ValueError("n_max must be at least 1")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


@dataclass
class Operators:
    sigma: sp.csr_matrix
    a: sp.csr_matrix
    eye: sp.csr_matrix
    n_cav: sp.csr_matrix
    top: sp.csr_matrix  # projector on the highest Fock level


def operators(n_max: int) -> Operators:
    nc = n_max + 1
    a_c = sp.diags(np.sqrt(np.arange(1, nc)), 1, shape=(nc, nc), dtype=complex, format="csr")
    s2 = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    i2 = sp.identity(2, dtype=complex, format="csr")
    ic = sp.identity(nc, dtype=complex, format="csr")
    top_c = sp.csr_matrix(([1.0 + 0j], ([nc - 1], [nc - 1])), shape=(nc, nc))
    a = sp.kron(i2, a_c, format="csr")
    return Operators(
        sigma=sp.kron(s2, ic, format="csr"),
        a=a,
        eye=sp.identity(2 * nc, dtype=complex, format="csr"),
        n_cav=(a.conj().T @ a).tocsr(),
        top=sp.kron(i2, top_c, format="csr"),
    )


@dataclass
class Liouvillian:
    """Generator of the joint dynamics plus what is needed to read outputs.

    ``alpha`` is the displacement of the cavity operator (zero in the lab frame).
    """

    matrix: sp.csr_matrix
    params: P.SystemParams
    drive: P.DriveSpec
    trunc: FockTruncation
    frame: str
    alpha: complex
    ops: Operators = field(repr=False)

    @property
    def dim(self) -> int:
        return self.trunc.dim

    def field_mean(self, rho) -> complex:
        """``<a>`` including the displacement."""
        return self.alpha + expect(rho, self.ops.a)


@lru_cache(maxsize=32)
def _pieces(n_max: int) -> dict:
    """Superoperators the generator is linear in, cached per truncation.

    Commutator pieces ``[X, .]`` for every Hamiltonian term and the two
    dissipators. Treated as read-only by every caller.
    """
    ops = operators(n_max)
    s, a = ops.sigma, ops.a
    sd, ad = s.conj().T.tocsr(), a.conj().T.tocsr()

    def comm(x):
        return (spre(x) - spost(x)).tocsr()

    def diss(c):
        cdc = (c.conj().T @ c).tocsr()
        return (sp.kron(c.conj(), c, format="csr") - 0.5 * spre(cdc) - 0.5 * spost(cdc)).tocsr()

    return {
        "ops": ops,
        "n_atom": comm(sd @ s), "n_cav": comm(ad @ a), "jc": comm(sd @ a - ad @ s),
        "s": comm(s), "sd": comm(sd), "a": comm(a), "ad": comm(ad),
        "D_a": diss(a), "D_s": diss(s),
    }


def build_liouvillian(p: P.SystemParams, drive: P.DriveSpec, trunc, frame: str = "displaced",
                      max_dim: int = MAX_DIMENSION) -> Liouvillian:
    """Master-equation generator of the driven atom-cavity system.

    ``H = (w_a - w_las) n_atom + (w_c - w_las) a^dag a + i g (s^dag a - a^dag s) + H_drive``
    with ``H_drive = i sqrt(k_j) (b* a - b a^dag)`` for a CC drive and
    ``i sqrt(g_l) (b* s - b s^dag)`` for an AC drive. Collapse operators
    ``sqrt(k_j) a`` and ``sqrt(g_l) s``; dissipators sharing an operator
    are summed before assembly.

    Parameters
    ----------
    trunc : FockTruncation or int
    frame : {"displaced", "lab"}
    max_dim : largest accepted joint Hilbert dimension

    Raises
    ------
    DimensionOverflow
        If ``2 (n_max + 1) > max_dim``.
    """
    if not isinstance(trunc, FockTruncation):
        trunc = FockTruncation(trunc)
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    if trunc.dim > max_dim:
        raise DimensionOverflow(f"dimension {trunc.dim} exceeds cap {max_dim}")
    P.check_drive(p, drive)
    q = p.with_frame(drive.omega_las)
    pc = _pieces(trunc.n_max)
    sk = np.sqrt(p.kappa_list)
    sg = np.sqrt(p.gamma_list) if p.gamma_list else np.zeros(0)
    b_sum = complex(np.dot(sk, P.cc_inputs(p, drive)))
    beta_a = P.ac_inputs(p, drive)
    c_sum = complex(np.dot(sg, beta_a)) if beta_a.size else 0j
    # Hamiltonian as sum_k coeff_k * X_k
    terms = [(q.omega_a - q.omega_ref, "n_atom"), (q.omega_c - q.omega_ref, "n_cav"), (1j * p.g, "jc")]
    if frame == "lab":
        alpha = 0j
        terms += [(1j * b_sum.conjugate(), "a"), (-1j * b_sum, "ad")]
    else:
        kp, _ = P.complex_rates(q)
        alpha = -b_sum / kp
        terms += [(1j * p.g * alpha, "sd"), (-1j * p.g * alpha.conjugate(), "s")]
    terms += [(1j * c_sum.conjugate(), "s"), (-1j * c_sum, "sd")]
    gen = p.kappa * pc["D_a"]
    if p.gamma_a:
        gen = gen + p.gamma_a * pc["D_s"]
    for coeff, key in terms:
        if coeff != 0:
            gen = gen - 1j * coeff * pc[key]
    return Liouvillian(gen.tocsr(), p, drive, trunc, frame, alpha, pc["ops"])


def build_liouvillian_direct(p: P.SystemParams, drive: P.DriveSpec, trunc, frame: str = "displaced") -> sp.csr_matrix:
    """Same generator assembled term by term from the operators (slow, for cross-checks)."""
    if not isinstance(trunc, FockTruncation):
        trunc = FockTruncation(trunc)
    q = p.with_frame(drive.omega_las)
    ops = operators(trunc.n_max)
    s, a = ops.sigma, ops.a
    sd, ad = s.conj().T, a.conj().T
    b_sum = complex(np.dot(np.sqrt(p.kappa_list), P.cc_inputs(p, drive)))
    h = ((q.omega_a - q.omega_ref) * (sd @ s) + (q.omega_c - q.omega_ref) * (ad @ a)
         + 1j * p.g * (sd @ a - ad @ s))
    if frame == "lab":
        h = h + 1j * (b_sum.conjugate() * a - b_sum * ad)
    else:
        alpha = -b_sum / P.complex_rates(q)[0]
        h = h + 1j * p.g * (alpha * sd - alpha.conjugate() * s)
    for gl, beta in zip(p.gamma_list, P.ac_inputs(p, drive)):
        if beta:
            h = h + 1j * math.sqrt(gl) * (beta.conjugate() * s - beta * sd)
    jumps = [(k, a) for k in p.kappa_list] + [(gl, s) for gl in p.gamma_list]
    return lindbladian(h, jumps)


def expect(rho, op) -> complex:
    return complex((op.multiply(rho.T)).sum()) if sp.issparse(op) else complex(np.trace(op @ rho))


def basis_state(L: Liouvillian, excited: bool = False, photons: int = 0) -> np.ndarray:
    """Pure product state ``|atom, n>`` as a density matrix (in the frame of ``L``)."""
    nc = L.trunc.n_max + 1
    psi = np.zeros(2 * nc, complex)
    psi[(1 if excited else 0) * nc + photons] = 1
    return np.outer(psi, psi.conj())


def steady_state(L: Liouvillian, residual_tol: float = 1e-10) -> np.ndarray:
    """Stationary density matrix by a sparse direct solve.

    The equation for the first diagonal element is replaced by the trace
    condition. Raises :class:`SingularLiouvillian` when the stationary state is
    not unique (factorization fails or the residual is not small).
    """
    d = L.dim
    trace_row = sp.csr_matrix(vec(np.eye(d)).reshape(1, -1).astype(complex))
    m = sp.vstack([trace_row, L.matrix[1:]], format="csc")
    rhs = np.zeros(d * d, complex)
    rhs[0] = 1
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            v = spla.splu(m).solve(rhs)
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        raise SingularLiouvillian(f"no unique stationary state ({exc})") from None
    if not np.all(np.isfinite(v)):
        raise SingularLiouvillian("stationary solve produced non-finite values")
    rho = unvec(v, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    res = np.abs(L.matrix @ vec(rho)).max()
    scale = max(1.0, abs(L.matrix).max())
    if res > residual_tol * scale:
        raise SingularLiouvillian(f"stationary residual {res:.2e} too large")
    return rho


def evolve(rho0: np.ndarray, L: Liouvillian, t_grid, rtol: float = 1e-9, atol: float | None = None) -> np.ndarray:
    """Density matrices at the times of ``t_grid`` (shape ``(nt, d, d)``).

    Raises :class:`StepFailure` if the integrator stalls.
    """
    d = L.dim
    out = evolve_linear(L.matrix, vec(rho0), np.asarray(t_grid, float), rtol=rtol,
                        atol=atol if atol is not None else rtol * 1e-3)
    return out.reshape(len(out), d, d).transpose(0, 2, 1)


# ---------------------------------------------------------------------------
# outputs


def output_operator(L: Liouvillian, port) -> tuple[complex, sp.csr_matrix]:
    """Output field of ``port`` as ``(c-number, operator)`` in the frame of ``L``."""
    p, drive = L.params, L.drive
    port = P.check_port(p, port)
    if port.kind == "cc":
        j = port.index
        sk = math.sqrt(p.kappa_list[j])
        return complex(P.cc_inputs(p, drive)[j] + sk * L.alpha), sk * L.ops.a
    l = port.index
    return complex(P.ac_inputs(p, drive)[l]), math.sqrt(p.gamma_list[l]) * L.ops.sigma


class FluxParts(NamedTuple):
    coherent: float
    incoherent: float
    total: float


def output_flux(rho: np.ndarray, L: Liouvillian, port) -> FluxParts:
    """Coherent, incoherent and total photon flux leaving ``port``."""
    c0, op = output_operator(L, port)
    mean = c0 + expect(rho, op)
    n_op = (op.conj().T @ op).tocsr()
    total = abs(c0) ** 2 + 2 * (c0.conjugate() * expect(rho, op)).real + expect(rho, n_op).real
    coh = abs(mean) ** 2
    inc = (expect(rho, n_op) - abs(expect(rho, op)) ** 2).real
    return FluxParts(coh, inc, total if total > coh else coh + inc)


class SteadyAmplitudes(NamedTuple):
    sigma: complex
    a: complex
    b_out: np.ndarray
    c_out: np.ndarray


def steady_amplitudes(rho: np.ndarray, L: Liouvillian) -> SteadyAmplitudes:
    """Mean atomic dipole, cavity field and output fields."""
    p = L.params
    s = expect(rho, L.ops.sigma)
    a = L.field_mean(rho)
    b = P.cc_inputs(p, L.drive) + np.sqrt(p.kappa_list) * a
    c = P.ac_inputs(p, L.drive) + (np.sqrt(p.gamma_list) * s if p.gamma_list else np.zeros(0))
    return SteadyAmplitudes(s, a, b, c)


def top_population(rho: np.ndarray, L: Liouvillian) -> float:
    return expect(rho, L.ops.top).real


# ---------------------------------------------------------------------------
# correlations


def _regress(L, x0, tau, rtol):
    tau = np.asarray(tau, float)
    order = np.argsort(tau)
    ts = tau[order]
    lead = ts.size == 0 or ts[0] > 0
    grid = np.concatenate(([0.0], ts)) if lead else ts
    scale = np.abs(x0).max()
    if scale == 0:
        # nothing to propagate (dark port, vanishing fluctuation)
        return np.zeros((tau.size, x0.size), complex)
    traj = evolve_linear(L.matrix, vec(x0), grid, rtol=rtol, atol=rtol * 1e-6 * scale)
    traj = traj[1:] if lead else traj
    out = np.empty_like(traj)
    out[order] = traj
    return out


def two_time_correlation(rho: np.ndarray, L: Liouvillian, op_a, op_b, tau_grid, rtol: float = 1e-9) -> np.ndarray:
    """``<A(tau) B>`` in the stationary state by quantum regression."""
    b = op_b.toarray() if sp.issparse(op_b) else np.asarray(op_b)
    traj = _regress(L, b @ rho, tau_grid, rtol)
    return traj @ expect_row(op_a)


def g1_incoherent(rho: np.ndarray, L: Liouvillian, port, tau_grid, rtol: float = 1e-9) -> np.ndarray:
    """``<B^dag(tau) B> - |<B>|^2`` for the output field ``B`` of ``port``."""
    _, op = output_operator(L, port)
    op = op.toarray()
    fluct = op - expect(rho, op) * np.eye(L.dim)
    traj = _regress(L, fluct @ rho, tau_grid, rtol)
    return traj @ expect_row(fluct.conj().T)


def decay_rate(p: P.SystemParams) -> float:
    """Effective atomic decay rate, used to size correlation windows."""
    return 2 * P.gamma_prime_branches(p)[0].real


def default_tau_grid(p: P.SystemParams, points: int = 4096, span: float = 20.0) -> np.ndarray:
    """Delay grid covering ``span / Gamma`` (and at least ``span / kappa``)."""
    G = decay_rate(p)
    t_max = span / min(G, p.kappa) if G > 0 else span / p.kappa
    return np.linspace(0.0, t_max, points)


def spectrum(rho: np.ndarray, L: Liouvillian, port, omega_grid, tau_grid=None, method: str = "trapezoid",
             rtol: float = 1e-9) -> SpectrumSeries:
    """Incoherent spectral density of ``port``.

    ``method="trapezoid"`` regresses the incoherent first-order coherence on a
    delay grid and integrates ``(1/pi) Re int g1(tau) exp(i(w_las - w) tau)``
    by the trapezoid rule. ``method="resolvent"`` solves the same integral
    exactly with one sparse solve per frequency.

    Warns :class:`AliasWarning` if the delay grid spans less than ``10 / Gamma``.
    """
    p, drive = L.params, L.drive
    om = np.atleast_1d(np.asarray(omega_grid, float))
    flux = output_flux(rho, L, port)
    port_s = str(P.check_port(p, port))
    if method == "resolvent":
        vals = _spectrum_resolvent(rho, L, port, om)
        return SpectrumSeries(om, vals, port_s, "full", flux.coherent, drive.omega_las, {"method": method})
    if method != "trapezoid":
        raise ValueError("method must be 'trapezoid' or 'resolvent'")
    tau = default_tau_grid(p) if tau_grid is None else np.asarray(tau_grid, float)
    G = decay_rate(p)
    if G > 0 and tau[-1] - tau[0] < 10 / G:
        warnings.warn(f"delay window {tau[-1] - tau[0]:.3g} shorter than 10/Gamma", AliasWarning, stacklevel=2)
    g1 = g1_incoherent(rho, L, port, tau, rtol)
    w = np.empty(tau.size)
    dt = np.diff(tau)
    w[0] = dt[0] / 2
    w[-1] = dt[-1] / 2
    w[1:-1] = (dt[:-1] + dt[1:]) / 2
    phase = np.exp(1j * np.outer(drive.omega_las - om, tau))
    vals = (phase @ (w * g1)).real / math.pi
    return SpectrumSeries(om, vals, port_s, "full", flux.coherent, drive.omega_las,
                          {"method": method, "tau_max": float(tau[-1])})


def _spectrum_resolvent(rho, L, port, om):
    d = L.dim
    _, op = output_operator(L, port)
    op = op.toarray()
    fluct = op - expect(rho, op) * np.eye(d)
    x0 = vec(fluct @ rho)
    row = expect_row(fluct.conj().T)
    # |rho><I| regularizes the zero mode without touching traceless inputs
    fix = sp.csr_matrix(np.outer(vec(rho), vec(np.eye(d))))
    base = (fix - L.matrix).tocsc()
    ident = sp.identity(d * d, dtype=complex, format="csc")
    out = np.empty(om.size)
    for i, w in enumerate(om):
        y = spla.spsolve(base + 1j * (w - L.drive.omega_las) * ident, x0)
        out[i] = (row @ y).real / math.pi
    return out


def g2(rho: np.ndarray, L: Liouvillian, port, tau_grid, rtol: float = 1e-9) -> CorrelationSeries:
    """Normalized intensity correlation of ``port`` by regression of ``B rho B^dag``.

    Raises :class:`ZeroFlux` when the port is dark.
    """
    c0, op = output_operator(L, port)
    b = c0 * np.eye(L.dim) + op.toarray()
    flux = output_flux(rho, L, port).total
    if not flux > 1e-30:
        raise ZeroFlux(f"no photons leave port {port}")
    tau = np.atleast_1d(np.asarray(tau_grid, float))
    traj = _regress(L, b @ rho @ b.conj().T, tau, rtol)
    vals = (traj @ expect_row(b.conj().T @ b)).real / flux**2
    return CorrelationSeries(tau, vals, str(P.check_port(L.params, port)), "full", "g2")


# ---------------------------------------------------------------------------
# truncation


@dataclass
class ConvergenceReport:
    trunc: FockTruncation
    flux: float
    top_population: float
    history: list


def truncation_convergence(p: P.SystemParams, drive: P.DriveSpec, tol: float = 1e-6, frame: str = "displaced",
                           cap: int = DEFAULT_NMAX_CAP, start: int = 1, report: bool = False):
    """Smallest ``n_max`` whose reflected flux is stable against ``n_max + 2``.

    Converged when the relative change of the flux leaving the first CC port
    is below ``tol`` and the top Fock level holds less than 1e-8 of the
    population.

    Raises
    ------
    NoConvergence
        If ``n_max`` would exceed ``cap``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    port = P.Port("cc", 0)
    cache = {}

    def solve(n):
        if n not in cache:
            L = build_liouvillian(p, drive, FockTruncation(n), frame, max_dim=max(MAX_DIMENSION, 2 * (cap + 3)))
            rho = steady_state(L)
            cache[n] = (output_flux(rho, L, port).total, top_population(rho, L))
        return cache[n]

    history = []
    n = max(1, int(start))
    while n <= cap:
        f0, top0 = solve(n)
        f2, _ = solve(n + 2)
        history.append((n, f0, top0))
        if abs(f2 - f0) <= tol * abs(f2) and top0 < 1e-8:
            trunc = FockTruncation(n)
            return ConvergenceReport(trunc, f0, top0, history) if report else trunc
        n += 1
    raise NoConvergence(f"no converged truncation up to n_max={cap}")


def solve_converged(p: P.SystemParams, drive: P.DriveSpec, tol: float = 1e-6, frame: str = "displaced",
                    cap: int = DEFAULT_NMAX_CAP):
    """Converged truncation, its generator and stationary state."""
    trunc = truncation_convergence(p, drive, tol, frame, cap)
    L = build_liouvillian(p, drive, trunc, frame, max_dim=max(MAX_DIMENSION, 2 * (cap + 1)))
    return L, steady_state(L)


__all__ = [
    "FockTruncation", "Liouvillian", "FluxParts", "SteadyAmplitudes", "ConvergenceReport",
    "build_liouvillian", "build_liouvillian_direct", "operators", "expect", "basis_state", "steady_state", "evolve",
    "output_operator", "output_flux", "steady_amplitudes", "top_population", "two_time_correlation",
    "g1_incoherent", "spectrum", "g2", "default_tau_grid", "truncation_convergence", "solve_converged",
    "MAX_DIMENSION", "DEFAULT_NMAX_CAP",
]
