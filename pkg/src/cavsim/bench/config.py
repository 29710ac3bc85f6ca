"""Scenario configuration: a small line-oriented ``key = value`` grammar.

Grammar
-------
* one assignment per line, ``#`` starts a comment (outside values only)
* keys are identifiers, optionally dotted: ``drive.port``
* values are numbers, bare words, or bracketed comma lists ``[0.8, 0.2]``

Recognized keys (rates and frequencies in any common unit; they are
rescaled so that the total cavity loss rate is one):

=====================  ==================================================
``g``                  coupling rate
``kappa``              list of CC port rates
``gamma``              list of AC port rates (may be ``[]``)
``omega_a``            atomic frequency (default 0)
``omega_c``            cavity frequency (default 0)
``drive.port``         ``cc1``, ``ac2`` ...  (default ``cc1``)
``drive.n_in``         photons per cavity lifetime (default 1e-4)
``drive.omega_las``    number, or ``resonant`` for the effective atomic line
``sweep.axis``         ``laser_detuning`` | ``input_power`` | ``coupling_g``
``sweep.min/max``      sweep bounds
``sweep.points``       number of points (>= 2)
``sweep.scale``        ``linear`` | ``log``
``sweep.values``       explicit list, replaces min/max/points
``models``             list out of ``analytic, reduced, full``
``observable``         ``flux`` | ``spectrum`` | ``g2``
``spectrum.min/max``   frequency window relative to the laser
``spectrum.points``
``g2.tau_max``         largest delay
``g2.points``
``full.tol``           truncation tolerance (default 1e-6)
``full.nmax_cap``      largest Fock cutoff (default 60)
``output.csv``         CSV path
``output.plot``        plot script path
=====================  ==================================================

``laser_detuning`` sweeps ``omega_las - omega_a``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .. import params as P
from ..errors import ParameterError, ParseError, ValidationError
from ..series import MODELS

AXES = ("laser_detuning", "input_power", "coupling_g")
OBSERVABLES = ("flux", "spectrum", "g2")
SCALES = ("linear", "log")

_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")
_WORD = re.compile(r"[^\s\[\],=\d+.-][^\s\[\],=]*$|[./][^\s\[\],=]*$")

_SCHEMA = {
    "g": "num", "kappa": "numlist", "gamma": "numlist", "omega_a": "num", "omega_c": "num",
    "drive.port": "word", "drive.n_in": "num", "drive.omega_las": "num_or_word",
    "sweep.axis": "word", "sweep.min": "num", "sweep.max": "num", "sweep.points": "int",
    "sweep.scale": "word", "sweep.values": "numlist",
    "models": "wordlist", "observable": "word",
    "spectrum.min": "num", "spectrum.max": "num", "spectrum.points": "int",
    "g2.tau_max": "num", "g2.points": "int",
    "full.tol": "num", "full.nmax_cap": "int",
    "output.csv": "word", "output.plot": "word",
}


@dataclass
class Sweep:
    axis: str
    values: np.ndarray
    scale: str = "linear"


@dataclass
class ScenarioConfig:
    """Validated scenario; every rate is in units of the total cavity loss."""

    params: P.SystemParams
    port: str
    n_in: float
    omega_las: float | None  # None = follow the effective atomic resonance
    sweep: Sweep
    models: tuple
    observable: str
    spectrum_window: tuple = (-3.0, 3.0, 601)
    g2_window: tuple = (10.0, 201)
    full_tol: float = 1e-6
    nmax_cap: int = 60
    csv_path: str | None = None
    plot_path: str | None = None
    kappa_unit: float = 1.0
    raw: dict = field(default_factory=dict, repr=False)

    def with_overrides(self, *, models=None, points=None, observable=None, nmax_cap=None, csv_path=None):
        """Copy with command-line overrides applied and re-validated."""
        cfg = self
        if models is not None:
            cfg = replace(cfg, models=_check_models(models))
        if observable is not None:
            if observable not in OBSERVABLES:
                raise ValidationError(f"observable must be one of {OBSERVABLES}")
            cfg = replace(cfg, observable=observable)
        if points is not None:
            cfg = replace(cfg, sweep=_make_sweep(cfg.sweep.axis, cfg.sweep.values[0], cfg.sweep.values[-1],
                                                 points, cfg.sweep.scale))
        if nmax_cap is not None:
            if nmax_cap < 1:
                raise ValidationError("nmax cap must be at least 1")
            cfg = replace(cfg, nmax_cap=int(nmax_cap))
        if csv_path is not None:
            cfg = replace(cfg, csv_path=csv_path)
        return cfg

    def drive_at(self, value: float) -> tuple[P.SystemParams, P.DriveSpec]:
        """Device and drive for one sweep value."""
        p = self.params
        n_in, w = self.n_in, self.omega_las
        if self.sweep.axis == "coupling_g":
            p = replace(p, g=float(value))
        elif self.sweep.axis == "input_power":
            n_in = float(value)
        else:
            w = p.omega_a + float(value)
        if w is None:
            return p, P.resonant_drive(p, n_in, self.port)
        return p, P.DriveSpec.from_photon_number(p, n_in, self.port, w)


# ---------------------------------------------------------------------------
# lexing


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _scalar(tok: str, lineno: int, col: int):
    tok = tok.strip()
    if not tok:
        raise ParseError("empty value", lineno, col)
    try:
        v = float(tok)
    except ValueError:
        if _WORD.match(tok):
            return tok
        raise ParseError(f"cannot read value {tok!r}", lineno, col) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite number {tok!r}", lineno, col)
    return v


def _value(text: str, lineno: int, col: int):
    s = text.strip()
    lead = len(text) - len(text.lstrip())
    col += lead
    if s.startswith("["):
        if not s.endswith("]"):
            raise ParseError("unterminated list", lineno, col + len(s))
        body = s[1:-1]
        if not body.strip():
            return []
        out = []
        pos = col + 1
        for part in body.split(","):
            out.append(_scalar(part, lineno, pos + len(part) - len(part.lstrip())))
            pos += len(part) + 1
        return out
    if "]" in s:
        raise ParseError("unexpected ']'", lineno, col + s.index("]"))
    return _scalar(s, lineno, col)


def parse_text(text: str) -> dict:
    """Lex the grammar into ``{key: (value, line)}``; no semantic checks."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, len(line) - len(line.lstrip()) + 1)
        key_part, val_part = line.split("=", 1)
        key = key_part.strip()
        kcol = len(key_part) - len(key_part.lstrip()) + 1
        if not _KEY.match(key):
            raise ParseError(f"invalid key {key!r}", lineno, kcol)
        if key in entries:
            raise ParseError(f"duplicate key {key!r}", lineno, kcol)
        entries[key] = (_value(val_part, lineno, len(key_part) + 2), lineno)
    if not entries:
        raise ParseError("configuration is empty", 1, 1)
    return entries


# ---------------------------------------------------------------------------
# typed access


def _typed(entries: dict) -> dict:
    out = {}
    for key, (val, lineno) in entries.items():
        kind = _SCHEMA.get(key)
        if kind is None:
            raise ParseError(f"unknown key {key!r}", lineno, 1)
        is_list = isinstance(val, list)
        if kind in ("numlist", "wordlist") and not is_list:
            val = [val]
        if kind != "numlist" and kind != "wordlist" and is_list:
            raise ParseError(f"{key} takes a single value", lineno, 1)
        if kind == "numlist" and not all(isinstance(v, float) for v in val):
            raise ParseError(f"{key} must be a list of numbers", lineno, 1)
        if kind == "wordlist" and not all(isinstance(v, str) for v in val):
            raise ParseError(f"{key} must be a list of names", lineno, 1)
        if kind == "num" and not isinstance(val, float):
            raise ParseError(f"{key} must be a number", lineno, 1)
        if kind == "int":
            if not isinstance(val, float) or val != int(val):
                raise ParseError(f"{key} must be an integer", lineno, 1)
            val = int(val)
        if kind == "word" and not isinstance(val, str):
            raise ParseError(f"{key} must be a name", lineno, 1)
        out[key] = val
    return out


def _check_models(models) -> tuple:
    ms = []
    for m in models:
        m = str(m).lower()
        if m == "all":
            ms.extend(MODELS)
        elif m in MODELS:
            ms.append(m)
        else:
            raise ValidationError(f"unknown model {m!r}; expected one of {MODELS} or 'all'")
    if not ms:
        raise ValidationError("at least one model is required")
    return tuple(dict.fromkeys(ms))


def _make_sweep(axis, lo, hi, points, scale) -> Sweep:
    if axis not in AXES:
        raise ValidationError(f"sweep.axis must be one of {AXES}")
    if scale not in SCALES:
        raise ValidationError(f"sweep.scale must be one of {SCALES}")
    if points < 2:
        raise ValidationError("sweep.points must be at least 2")
    if not lo < hi:
        raise ValidationError("sweep.min must be smaller than sweep.max")
    if scale == "log":
        if lo <= 0:
            raise ValidationError("log sweep needs sweep.min > 0")
        vals = np.geomspace(lo, hi, points)
    else:
        vals = np.linspace(lo, hi, points)
    return Sweep(axis, vals, scale)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario description.

    Raises
    ------
    ParseError
        Malformed text, with line and column.
    ValidationError
        Well-formed text that violates a scenario invariant.
    """
    cfg = _typed(parse_text(text))
    for key in ("g", "kappa"):
        if key not in cfg:
            raise ValidationError(f"missing required key {key!r}")
    try:
        raw_p = P.SystemParams(cfg["g"], tuple(cfg["kappa"]), tuple(cfg.get("gamma", [])),
                               cfg.get("omega_a", 0.0), cfg.get("omega_c", 0.0))
    except ParameterError as exc:
        raise ValidationError(str(exc)) from None
    p, k = raw_p.canonical()
    try:
        port = str(P.check_port(p, cfg.get("drive.port", "cc1")))
    except ParameterError as exc:
        raise ValidationError(str(exc)) from None
    n_in = cfg.get("drive.n_in", 1e-4)
    if n_in < 0:
        raise ValidationError("drive.n_in must be non-negative")
    w = cfg.get("drive.omega_las", "resonant")
    if isinstance(w, str):
        if w != "resonant":
            raise ValidationError("drive.omega_las must be a number or 'resonant'")
        w = None
    else:
        w = w / k

    axis = cfg.get("sweep.axis", "laser_detuning")
    scale = cfg.get("sweep.scale", "linear")
    if "sweep.values" in cfg:
        if any(x in cfg for x in ("sweep.min", "sweep.max", "sweep.points")):
            raise ValidationError("sweep.values excludes sweep.min/max/points")
        vals = np.asarray(cfg["sweep.values"], float)
        if vals.size < 2:
            raise ValidationError("sweep needs at least 2 points")
        if axis not in AXES:
            raise ValidationError(f"sweep.axis must be one of {AXES}")
        sweep = Sweep(axis, vals, scale)
    else:
        lo, hi = cfg.get("sweep.min", -3.0), cfg.get("sweep.max", 3.0)
        sweep = _make_sweep(axis, lo, hi, cfg.get("sweep.points", 601), scale)
    # sweep values carry units unless they are photon numbers
    if axis != "input_power":
        sweep = Sweep(axis, sweep.values / k, sweep.scale)
    if axis == "input_power" and np.any(sweep.values < 0):
        raise ValidationError("input_power sweep values must be non-negative")
    if axis == "coupling_g" and np.any(sweep.values < 0):
        raise ValidationError("coupling_g sweep values must be non-negative")

    observable = cfg.get("observable", "flux")
    if observable not in OBSERVABLES:
        raise ValidationError(f"observable must be one of {OBSERVABLES}")
    models = _check_models(cfg.get("models", ["analytic", "full"]))

    s_lo, s_hi = cfg.get("spectrum.min", -3.0 * k) / k, cfg.get("spectrum.max", 3.0 * k) / k
    s_n = cfg.get("spectrum.points", 601)
    if not s_lo < s_hi or s_n < 2:
        raise ValidationError("spectrum window needs min < max and points >= 2")
    t_max, t_n = cfg.get("g2.tau_max", 10.0 / k) * k, cfg.get("g2.points", 201)
    if t_max <= 0 or t_n < 2:
        raise ValidationError("g2 window needs tau_max > 0 and points >= 2")
    tol = cfg.get("full.tol", 1e-6)
    if tol <= 0:
        raise ValidationError("full.tol must be positive")
    cap = cfg.get("full.nmax_cap", 60)
    if cap < 1:
        raise ValidationError("full.nmax_cap must be at least 1")

    return ScenarioConfig(
        params=p, port=port, n_in=n_in, omega_las=w, sweep=sweep, models=models,
        observable=observable, spectrum_window=(s_lo, s_hi, s_n), g2_window=(t_max, t_n),
        full_tol=tol, nmax_cap=cap, csv_path=cfg.get("output.csv"), plot_path=cfg.get("output.plot"),
        kappa_unit=k, raw=cfg,
    )


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


__all__ = ["ScenarioConfig", "Sweep", "parse_config", "parse_text", "load_config", "AXES", "OBSERVABLES"]
