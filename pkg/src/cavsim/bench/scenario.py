"""Evaluate every requested model at every sweep point and collect the rows."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import analytics as A
from .. import cqed_full as F
from .. import cqed_reduced as R
from .. import params as P
from ..errors import CavsimError
from .config import ScenarioConfig

COLUMNS = {
    "flux": ("sweep_value", "model", "port", "coherent", "incoherent", "total", "n_max", "error_code"),
    "spectrum": ("sweep_value", "model", "port", "omega", "value", "coherent_weight", "n_max", "error_code"),
    "g2": ("sweep_value", "model", "port", "tau", "value", "n_max", "error_code"),
}
# the column the models are compared on
VALUE_COLUMN = {"flux": "total", "spectrum": "value", "g2": "value"}
# columns that identify a sample independently of the model
KEY_COLUMNS = {"flux": ("sweep_value", "port"), "spectrum": ("sweep_value", "port", "omega"),
               "g2": ("sweep_value", "port", "tau")}
OK = "ok"


@dataclass
class ComparisonReport:
    """Rows in CSV order plus comparison metrics and bookkeeping.

    ``rows`` are dicts keyed by :data:`COLUMNS` of the observable. Failed
    evaluations appear as rows with NaN values and the exception name in
    ``error_code``.
    """

    observable: str
    models: tuple
    rows: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    n_max: dict = field(default_factory=dict)

    @property
    def columns(self):
        return COLUMNS[self.observable]

    @property
    def failures(self) -> int:
        return sum(r["error_code"] != OK for r in self.rows)


def worker_count() -> int:
    env = os.environ.get("CAVSIM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"CAVSIM_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# port groups


def flux_groups(p):
    return A.port_groups(p)


def spectrum_groups(p):
    return {"cc": [P.Port("cc", j) for j in range(len(p.kappa_list))],
            "ac": [P.Port("ac", l) for l in range(len(p.gamma_list))]}


def g2_ports(p):
    return [P.Port("cc", 0)] + [P.Port("ac", l) for l in range(len(p.gamma_list))]


# ---------------------------------------------------------------------------
# per-model evaluation; each returns (payload, n_max or None)


class _Reduced:
    def __init__(self, p, drive):
        self.ec = P.effective_constants(p, drive)
        self.gen = R.effective_generator(p, drive, self.ec)
        self.rho = R.steady_state_numeric(self.gen).rho
        self.p, self.drive = p, drive

    def k(self, port):
        return R.output_operator(self.p, self.drive, port, self.ec)


def _flux(model, p, drive, cfg):
    groups = flux_groups(p)
    if model == "analytic":
        ec = P.effective_constants(p, drive)
        per = {q: tuple(A.flux_decomposition(p, drive, q, ec)) for ports in groups.values() for q in ports}
        n_max = None
    elif model == "reduced":
        red = _Reduced(p, drive)
        per = {q: R.numeric_flux(red.rho, red.k(q)) for ports in groups.values() for q in ports}
        n_max = None
    else:
        L, rho = F.solve_converged(p, drive, cfg.full_tol, cap=cfg.nmax_cap)
        per = {q: tuple(F.output_flux(rho, L, q)) for ports in groups.values() for q in ports}
        n_max = L.trunc.n_max
    out = {}
    for name, ports in groups.items():
        parts = [per[q] for q in ports]
        out[name] = tuple(math.fsum(float(v[i]) for v in parts) for i in range(3))
    return out, n_max


def _spectrum(model, p, drive, cfg):
    lo, hi, n = cfg.spectrum_window
    om = drive.omega_las + np.linspace(lo, hi, n)
    groups = spectrum_groups(p)
    out = {}
    n_max = None
    if model == "full":
        L, rho = F.solve_converged(p, drive, cfg.full_tol, cap=cfg.nmax_cap)
        n_max = L.trunc.n_max
    elif model == "reduced":
        red = _Reduced(p, drive)
    else:
        ec = A.require_resonant(p, drive)
    for name, ports in groups.items():
        vals = np.zeros(n)
        coh = 0.0
        for q in ports:
            if model == "analytic":
                s = A.spectral_density(p, drive, q, om, ec)
                vals += s.values
                coh += s.coherent_weight
            elif model == "reduced":
                k = red.k(q)
                vals += R.numeric_spectrum(red.gen, red.rho, k, om, drive.omega_las)
                coh += R.numeric_flux(red.rho, k)[0]
            else:
                s = F.spectrum(rho, L, q, om)
                vals += s.values
                coh += s.coherent_weight
        out[name] = (om, vals, coh)
    return out, n_max


def _g2(model, p, drive, cfg):
    t_max, n = cfg.g2_window
    tau = np.linspace(0.0, t_max, n)
    out = {}
    n_max = None
    if model == "full":
        L, rho = F.solve_converged(p, drive, cfg.full_tol, cap=cfg.nmax_cap)
        n_max = L.trunc.n_max
    elif model == "reduced":
        red = _Reduced(p, drive)
    for q in g2_ports(p):
        if model == "analytic":
            vals = A.g2_closed_form(p, drive, q, tau).values
        elif model == "reduced":
            vals = R.numeric_g2(red.gen, red.rho, red.k(q), tau)
        else:
            vals = F.g2(rho, L, q, tau).values
        out[str(q)] = (tau, vals)
    return out, n_max


_EVAL = {"flux": _flux, "spectrum": _spectrum, "g2": _g2}


def _rows(observable, x, model, payload, n_max, err, p, cfg):
    nm = "" if n_max is None else n_max
    nan = float("nan")
    rows = []
    if observable == "flux":
        for name in flux_groups(p):
            c, i, t = payload[name] if payload else (nan, nan, nan)
            rows.append(dict(sweep_value=x, model=model, port=name, coherent=c, incoherent=i, total=t,
                             n_max=nm, error_code=err))
    elif observable == "spectrum":
        for name in spectrum_groups(p):
            if payload:
                om, vals, coh = payload[name]
                rows += [dict(sweep_value=x, model=model, port=name, omega=float(w), value=float(v),
                              coherent_weight=coh, n_max=nm, error_code=err) for w, v in zip(om, vals)]
            else:
                rows.append(dict(sweep_value=x, model=model, port=name, omega=nan, value=nan,
                                 coherent_weight=nan, n_max=nm, error_code=err))
    else:
        for q in g2_ports(p):
            name = str(q)
            if payload:
                tau, vals = payload[name]
                rows += [dict(sweep_value=x, model=model, port=name, tau=float(t), value=float(v),
                              n_max=nm, error_code=err) for t, v in zip(tau, vals)]
            else:
                rows.append(dict(sweep_value=x, model=model, port=name, tau=nan, value=nan,
                                 n_max=nm, error_code=err))
    return rows


def evaluate_point(cfg: ScenarioConfig, x: float):
    """All model rows for one sweep value; errors are caught per model."""
    x = float(x)
    rows, timing, n_max = [], {}, None
    try:
        p, drive = cfg.drive_at(x)
    except (CavsimError, ValueError, ArithmeticError) as exc:
        for m in cfg.models:
            rows += _rows(cfg.observable, x, m, None, None, type(exc).__name__, cfg.params, cfg)
        return rows, timing, n_max
    for m in cfg.models:
        t0 = time.perf_counter()
        try:
            payload, nm = _EVAL[cfg.observable](m, p, drive, cfg)
            err = OK
        except (CavsimError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            payload, nm, err = None, None, type(exc).__name__
        timing[m] = time.perf_counter() - t0
        if m == "full":
            n_max = nm
        rows += _rows(cfg.observable, x, m, payload, nm, err, p, cfg)
    return rows, timing, n_max


def run_scenario(cfg: ScenarioConfig, threads: int | None = None) -> ComparisonReport:
    """Evaluate the scenario, in parallel over sweep points.

    Row order is sweep order, then model order, independent of ``threads``.
    """
    n = worker_count() if threads is None else max(1, int(threads))
    xs = [float(v) for v in cfg.sweep.values]
    if n == 1:
        results = [evaluate_point(cfg, x) for x in xs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(lambda x: evaluate_point(cfg, x), xs))
    report = ComparisonReport(cfg.observable, cfg.models)
    for m in cfg.models:
        report.timings[m] = 0.0
    for x, (rows, timing, nm) in zip(xs, results):
        report.rows.extend(rows)
        for m, t in timing.items():
            report.timings[m] += t
        if "full" in cfg.models:
            report.n_max[x] = nm
    report.metrics = discrepancy(report.rows, cfg.observable, cfg.models)
    return report


def discrepancy(rows, observable: str, models) -> dict:
    """Max absolute, max relative and L2 difference of each model against the reference.

    The reference is the full model when present, else the first model.
    Only samples computed by both models enter. Relative differences skip
    samples where the reference is exactly zero.
    """
    models = tuple(models)
    if not models:
        return {}
    ref = "full" if "full" in models else models[0]
    col = VALUE_COLUMN[observable]
    keys = KEY_COLUMNS[observable]
    table = {}
    for r in rows:
        if r["error_code"] != OK:
            continue
        table[(r["model"],) + tuple(r[k] for k in keys)] = r[col]
    out = {}
    for m in models:
        if m == ref:
            continue
        diffs, rels = [], []
        for key, v in table.items():
            if key[0] != m:
                continue
            rv = table.get((ref,) + key[1:])
            if rv is None:
                continue
            d = abs(v - rv)
            diffs.append(d)
            if rv != 0:
                rels.append(d / abs(rv))
        out[f"{m}_vs_{ref}"] = {
            "samples": len(diffs),
            "max_abs": max(diffs) if diffs else float("nan"),
            "max_rel": max(rels) if rels else float("nan"),
            "l2": math.sqrt(math.fsum(d * d for d in diffs)) if diffs else float("nan"),
        }
    return out


__all__ = ["ComparisonReport", "run_scenario", "evaluate_point", "discrepancy", "worker_count",
           "COLUMNS", "VALUE_COLUMN", "KEY_COLUMNS", "OK"]
