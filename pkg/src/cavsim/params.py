"""Device parameters and the derived constants of the self-consistent elimination.

Everything here is a pure function of value inputs. Frequencies are angular
frequencies; whatever unit system the caller uses is kept, but the library's
tolerances are relative to the total cavity loss ``kappa`` so working in units
of ``kappa`` (see :meth:`SystemParams.canonical`) is the natural choice.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateRoot, ParameterError, SingularX, ZeroGammaA


@dataclass(frozen=True)
class SystemParams:
    """Rates and frequencies of the atom-cavity device.

    Parameters
    ----------
    g : float
        Atom-cavity coupling rate.
    kappa_list : sequence of float
        Loss rate of each cavity-coupled (CC) port.
    gamma_list : sequence of float
        Loss rate of each atom-coupled (AC) port.
    omega_a, omega_c : float
        Atomic and cavity angular frequencies.
    omega_ref : float
        Frequency of the rotating frame.
    """

    g: float
    kappa_list: tuple
    gamma_list: tuple = ()
    omega_a: float = 0.0
    omega_c: float = 0.0
    omega_ref: float = 0.0
    good_emitter: bool = field(init=False, compare=False)

    def __post_init__(self):
        kl = tuple(float(k) for k in np.atleast_1d(self.kappa_list))
        gl = tuple(float(k) for k in np.atleast_1d(self.gamma_list)) if len(np.atleast_1d(self.gamma_list)) else ()
        object.__setattr__(self, "kappa_list", kl)
        object.__setattr__(self, "gamma_list", gl)
        for name in ("g", "omega_a", "omega_c", "omega_ref"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.g < 0:
            raise ParameterError("coupling g must be non-negative")
        if not kl or any(k < 0 or not math.isfinite(k) for k in kl):
            raise ParameterError("cavity port rates must be finite and non-negative")
        if sum(kl) <= 0:
            raise ParameterError("at least one cavity port needs a positive rate")
        if any(k < 0 or not math.isfinite(k) for k in gl):
            raise ParameterError("atom port rates must be finite and non-negative")
        # recorded, never enforced: the elimination assumes gamma_a << kappa
        object.__setattr__(self, "good_emitter", self.gamma_a < self.kappa / 10)

    @property
    def kappa(self) -> float:
        return math.fsum(self.kappa_list)

    @property
    def gamma_a(self) -> float:
        return math.fsum(self.gamma_list)

    def with_frame(self, omega_ref: float) -> "SystemParams":
        """Same device seen from a frame rotating at ``omega_ref``."""
        return replace(self, omega_ref=float(omega_ref))

    def canonical(self) -> tuple["SystemParams", float]:
        """Return the parameters in units of ``kappa`` and the scale used."""
        k = self.kappa
        return (
            SystemParams(
                g=self.g / k,
                kappa_list=[v / k for v in self.kappa_list],
                gamma_list=[v / k for v in self.gamma_list],
                omega_a=self.omega_a / k,
                omega_c=self.omega_c / k,
                omega_ref=self.omega_ref / k,
            ),
            k,
        )


class Port(NamedTuple):
    """An input/output channel: ``kind`` is ``"cc"`` or ``"ac"``, ``index`` is 0-based."""

    kind: str
    index: int

    def __str__(self):
        return f"{self.kind}{self.index + 1}"


def parse_port(port) -> Port:
    """Accept ``Port``, ``("cc", 0)`` or a label such as ``"cc1"`` / ``"ac2"`` (1-based)."""
    if isinstance(port, Port):
        return port
    if isinstance(port, tuple):
        kind, idx = port
        return Port(str(kind).lower(), int(idx))
    s = str(port).strip().lower()
    if len(s) > 2 and s[:2] in ("cc", "ac") and s[2:].isdigit() and int(s[2:]) >= 1:
        return Port(s[:2], int(s[2:]) - 1)
    raise ParameterError(f"cannot interpret port {port!r}")


def check_port(p: SystemParams, port: Port) -> Port:
    port = parse_port(port)
    n = len(p.kappa_list) if port.kind == "cc" else len(p.gamma_list)
    if port.kind not in ("cc", "ac") or not 0 <= port.index < n:
        raise ParameterError(f"port {port} does not exist on this device")
    return port


@dataclass(frozen=True)
class DriveSpec:
    """Single coherent CW drive.

    Parameters
    ----------
    port_kind : {"cc", "ac"}
        Which kind of port carries the laser.
    port_index : int
        0-based index into ``kappa_list`` or ``gamma_list``.
    amplitude : complex
        Input amplitude beta, with ``|beta|**2`` the photon flux.
    omega_las : float
        Laser angular frequency; all drive-dependent quantities are
        evaluated in the frame rotating at this frequency.
    """

    port_kind: str = "cc"
    port_index: int = 0
    amplitude: complex = 0.0
    omega_las: float = 0.0

    def __post_init__(self):
        kind = str(self.port_kind).lower()
        if kind not in ("cc", "ac"):
            raise ParameterError("port_kind must be 'cc' or 'ac'")
        object.__setattr__(self, "port_kind", kind)
        object.__setattr__(self, "port_index", int(self.port_index))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        object.__setattr__(self, "omega_las", float(self.omega_las))
        if not (cmath.isfinite(self.amplitude) and math.isfinite(self.omega_las)):
            raise ParameterError("drive amplitude and frequency must be finite")

    @property
    def port(self) -> Port:
        return Port(self.port_kind, self.port_index)

    @property
    def flux(self) -> float:
        return abs(self.amplitude) ** 2

    @classmethod
    def from_photon_number(cls, p: SystemParams, n_in: float, port="cc1", omega_las: float = 0.0):
        """Drive with ``N_in = |beta|**2 / kappa`` photons per cavity lifetime (real beta)."""
        port = parse_port(port)
        if n_in < 0:
            raise ParameterError("n_in must be non-negative")
        return cls(port.kind, port.index, math.sqrt(n_in * p.kappa), omega_las)

    def scaled(self, kappa: float) -> "DriveSpec":
        """Drive expressed in units where the cavity loss equals one."""
        return replace(self, amplitude=self.amplitude / math.sqrt(kappa), omega_las=self.omega_las / kappa)


def check_drive(p: SystemParams, drive: DriveSpec) -> DriveSpec:
    check_port(p, drive.port)
    return drive


def cc_inputs(p: SystemParams, drive: DriveSpec) -> np.ndarray:
    """Coherent input amplitude on every CC port."""
    beta = np.zeros(len(p.kappa_list), complex)
    if drive.port_kind == "cc":
        beta[drive.port_index] = drive.amplitude
    return beta


def ac_inputs(p: SystemParams, drive: DriveSpec) -> np.ndarray:
    """Coherent input amplitude on every AC port."""
    beta = np.zeros(len(p.gamma_list), complex)
    if drive.port_kind == "ac":
        beta[drive.port_index] = drive.amplitude
    return beta


# ---------------------------------------------------------------------------
# complex rates and the self-consistent roots


def complex_rates(p: SystemParams) -> tuple[complex, complex]:
    """Complex cavity and atom damping rates in the frame of ``p.omega_ref``."""
    kp = complex(p.kappa / 2, p.omega_c - p.omega_ref)
    gp = complex(p.gamma_a / 2, p.omega_a - p.omega_ref)
    return kp, gp


def gamma_prime_branches(p: SystemParams) -> tuple[complex, complex]:
    """Both solutions of the self-consistency quadratic, atom-like root first.

    Returns ``(minus, plus)`` sorted so ``minus.real <= plus.real``. When the
    real parts tie (resonant strong coupling) the root whose imaginary part is
    closer to ``omega_a - omega_ref`` is the atom-like one.
    """
    kp, gp = complex_rates(p)
    g2 = p.g * p.g
    ssum = kp + gp
    prod = kp * gp + g2
    s = cmath.sqrt((kp - gp) ** 2 - 4 * g2)
    # pick the sign that avoids cancellation, recover the other root from the product
    if (ssum.conjugate() * s).real < 0:
        s = -s
    r1 = (ssum + s) / 2
    r2 = prod / r1 if r1 != 0 else 0j
    scale = abs(kp) + abs(gp)
    if abs(r1.real - r2.real) > 1e-12 * scale:
        return (r1, r2) if r1.real < r2.real else (r2, r1)
    target = p.omega_a - p.omega_ref
    d1, d2 = abs(r1.imag - target), abs(r2.imag - target)
    if abs(d1 - d2) > 1e-12 * scale:
        return (r1, r2) if d1 < d2 else (r2, r1)
    # exact resonance: follow the continuation from omega_a >= omega_c
    hi, lo = (r1, r2) if r1.imag >= r2.imag else (r2, r1)
    return (hi, lo) if p.omega_a >= p.omega_c else (lo, hi)


def self_consistency_residual(p: SystemParams, gamma_prime: complex, cleared: bool = False) -> complex:
    """Residual of ``Gamma' = gamma' + g**2 / (kappa' - Gamma')``.

    By default ``Gamma' - gamma' - g**2 / (kappa' - Gamma')``. With
    ``cleared=True`` the denominator is multiplied out,
    ``(Gamma' - gamma') (kappa' - Gamma') - g**2``; that form stays well
    conditioned for the cavity-like root when ``g << |kappa' - gamma'|``,
    where the divided form amplifies the last-bit error of the root by
    ``|kappa' - gamma'|**2 / g**2``.
    """
    kp, gp = complex_rates(p)
    d = kp - gamma_prime
    if cleared:
        return (gamma_prime - gp) * d - p.g * p.g
    if d == 0:
        return complex("nan") if p.g else gamma_prime - gp
    return gamma_prime - gp - p.g * p.g / d


def adiabatic_gamma_prime(p: SystemParams) -> complex:
    """Second-order (bad-cavity) estimate of the atomic complex rate, frame-free.

    The imaginary part is the frequency shift with respect to ``omega_a``; the
    real part is half the Purcell-enhanced decay rate.
    """
    return p.gamma_a / 2 + 2 * p.g**2 / complex(p.kappa, 2 * (p.omega_c - p.omega_a))


def coupling_x(p: SystemParams, gamma_prime_sel: complex) -> complex:
    """Dimensionless coupling ``x = g**2 / (kappa' (kappa' - Gamma'))``."""
    kp, _ = complex_rates(p)
    d = kp - gamma_prime_sel
    if abs(d) < 1e-14 * abs(kp):
        raise DegenerateRoot("selected root coincides with kappa'")
    return p.g**2 / (kp * d)


def effective_port_rates(p: SystemParams, gamma_prime_sel: complex) -> tuple:
    """Complex effective rates ``Gamma_j = kappa_j (Gamma' - gamma') / (kappa' - Gamma')``."""
    kp, gp = complex_rates(p)
    d = kp - gamma_prime_sel
    if abs(d) < 1e-14 * abs(kp):
        raise DegenerateRoot("selected root coincides with kappa'")
    ratio = (gamma_prime_sel - gp) / d
    return tuple(k * ratio for k in p.kappa_list)


def sqrt_port_rates(p: SystemParams, gamma_prime_sel: complex) -> tuple:
    """Branch of ``sqrt(Gamma_j)`` used in the effective input-output relation."""
    kp, _ = complex_rates(p)
    d = kp - gamma_prime_sel
    if abs(d) < 1e-14 * abs(kp):
        raise DegenerateRoot("selected root coincides with kappa'")
    return tuple(p.g * math.sqrt(k) / d for k in p.kappa_list)


def empty_cavity_field(p: SystemParams, drive: DriveSpec) -> complex:
    """Intracavity amplitude the drive would build without the atom (laser frame)."""
    kp, _ = complex_rates(p.with_frame(drive.omega_las))
    beta = cc_inputs(p, drive)
    return -complex(np.dot(np.sqrt(p.kappa_list), beta)) / kp


def empty_cavity_outputs(p: SystemParams, drive: DriveSpec) -> np.ndarray:
    """Output amplitude of every CC port for a bare cavity."""
    ac = empty_cavity_field(p, drive)
    return cc_inputs(p, drive) + np.sqrt(p.kappa_list) * ac


def effective_rabi(p: SystemParams, drive: DriveSpec, x: complex) -> complex:
    """Effective Rabi frequency collecting the filtered cavity input and the atom input.

    ``p`` is taken in the laser frame (``omega_ref = omega_las``) whatever its
    stored frame, since for CW driving that is where the cavity filter is trivial.
    """
    check_drive(p, drive)
    den = 1 - x * x
    if abs(den) < 1e-12:
        raise SingularX("1 - x^2 vanishes")
    if drive.port_kind == "cc":
        kp, _ = complex_rates(p.with_frame(drive.omega_las))
        num = 2 * p.g * math.sqrt(p.kappa_list[drive.port_index]) / kp * drive.amplitude
    else:
        num = 2 * math.sqrt(p.gamma_list[drive.port_index]) * drive.amplitude
    return num / den


def cooperativity(p: SystemParams) -> float:
    if p.gamma_a == 0:
        raise ZeroGammaA("cooperativity needs gamma_a > 0")
    return 2 * p.g**2 / (p.kappa * p.gamma_a)


class DerivedFigures(NamedTuple):
    cooperativity: float
    n_in: float
    omega_a_eff: float
    omega_c_eff: float


def effective_frequencies(p: SystemParams) -> tuple[float, float]:
    """Absolute frequencies of the atom-like and cavity-like resonances."""
    gm, gpl = gamma_prime_branches(p)
    return p.omega_ref + gm.imag, p.omega_ref + gpl.imag


def derived_figures(p: SystemParams, drive: DriveSpec) -> DerivedFigures:
    """Cooperativity, photons per cavity lifetime and the two effective resonances."""
    wa, wc = effective_frequencies(p)
    return DerivedFigures(cooperativity(p), drive.flux / p.kappa, wa, wc)


def decoherence_angles(Gamma: float, x: complex, Omega: complex) -> tuple[float, float, float, float]:
    """Angles and rates of the two decoherence channels.

    Returns ``(theta, phi, gamma_M, gamma_NM)`` with ``theta`` in (-pi/4, 0].
    """
    xo = x * Omega
    t = abs(2 * xo / Gamma) if Gamma else (math.inf if xo else 0.0)
    theta = -0.5 * math.atan(t)
    phi = -cmath.phase(xo) if xo != 0 else 0.0
    sec = math.hypot(1.0, t)  # 1/cos(2 theta)
    gamma_m = Gamma / 2 * (1 + sec)
    # 1 - sec written without cancellation so the sign survives tiny drives
    gamma_nm = -Gamma / 2 * t * t / (1 + sec)
    return theta, phi, gamma_m, gamma_nm


@dataclass(frozen=True)
class EffectiveConstants:
    """All derived quantities of the reduced model, in the laser frame."""

    kappa_prime: complex
    gamma_prime: complex
    gamma_prime_minus: complex
    gamma_prime_plus: complex
    x: complex
    Gamma: float
    omega_a_eff: float
    omega_c_eff: float
    Gamma_j_list: tuple
    sqrt_Gamma_j_list: tuple
    Omega: complex
    gamma_M: float
    gamma_NM: float
    theta: float
    phi: float
    omega_ref: float


def effective_constants(p: SystemParams, drive: DriveSpec) -> EffectiveConstants:
    """Evaluate every derived constant for a CW drive, in the frame of the laser."""
    check_drive(p, drive)
    q = p.with_frame(drive.omega_las)
    kp, gp = complex_rates(q)
    gm, gpl = gamma_prime_branches(q)
    x = coupling_x(q, gm)
    Gamma = 2 * gm.real
    om = effective_rabi(q, drive, x)
    theta, phi, gmk, gnm = decoherence_angles(Gamma, x, om)
    return EffectiveConstants(
        kappa_prime=kp,
        gamma_prime=gp,
        gamma_prime_minus=gm,
        gamma_prime_plus=gpl,
        x=x,
        Gamma=Gamma,
        omega_a_eff=q.omega_ref + gm.imag,
        omega_c_eff=q.omega_ref + gpl.imag,
        Gamma_j_list=effective_port_rates(q, gm),
        sqrt_Gamma_j_list=sqrt_port_rates(q, gm),
        Omega=om,
        gamma_M=gmk,
        gamma_NM=gnm,
        theta=theta,
        phi=phi,
        omega_ref=q.omega_ref,
    )


def resonant_drive(p: SystemParams, n_in: float, port="cc1") -> DriveSpec:
    """Drive tuned to the atom-like effective resonance."""
    wa, _ = effective_frequencies(p)
    return DriveSpec.from_photon_number(p, n_in, port, wa)


# parameter sets used throughout the benchmarks, in units of kappa
def table_set(which: int, g: float | None = None) -> SystemParams:
    """The two weak-coupling benchmark devices (``which`` = 1 or 2).

    Both have ``g = 1/8``, a two-port cavity with ``kappa_1 = 0.8`` and a single
    atom port. Set 1 is resonant with ``gamma_a = 1/1280``; set 2 has
    ``gamma_a = 1/32`` and the atom half a linewidth above the cavity.
    Frequencies are referenced to the atom.
    """
    gg = 0.125 if g is None else g
    if which == 1:
        return SystemParams(gg, (0.8, 0.2), (1 / 1280,), 0.0, 0.0, 0.0)
    if which == 2:
        return SystemParams(gg, (0.8, 0.2), (1 / 32,), 0.0, -0.5, 0.0)
    raise ValueError("which must be 1 or 2")


def random_params(rng: np.random.Generator, weak: bool = False, n_cc: int | None = None,
                  n_ac: int | None = None) -> SystemParams:
    """Draw a random device in units of kappa (used by property tests and benchmarks)."""
    n_cc = n_cc or int(rng.integers(1, 4))
    n_ac = n_ac if n_ac is not None else int(rng.integers(1, 3))
    w = rng.dirichlet(np.ones(n_cc))
    gamma_a = 10 ** rng.uniform(-4, -1)
    gw = rng.dirichlet(np.ones(n_ac)) * gamma_a if n_ac else []
    g = rng.uniform(0.005, 0.24) if weak else 10 ** rng.uniform(-2.5, 0.5)
    det = rng.uniform(-1.5, 1.5)
    return SystemParams(g, tuple(w), tuple(gw), det, 0.0, rng.uniform(-1, 1))


__all__ = [
    "SystemParams", "DriveSpec", "Port", "parse_port", "check_port", "check_drive",
    "cc_inputs", "ac_inputs", "complex_rates", "gamma_prime_branches",
    "self_consistency_residual", "adiabatic_gamma_prime", "coupling_x",
    "effective_port_rates", "sqrt_port_rates", "empty_cavity_field", "empty_cavity_outputs",
    "effective_rabi", "cooperativity", "derived_figures", "DerivedFigures",
    "effective_frequencies", "decoherence_angles", "EffectiveConstants",
    "effective_constants", "resonant_drive", "table_set", "random_params",
]
