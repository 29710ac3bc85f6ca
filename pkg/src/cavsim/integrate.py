"""Adaptive integration of linear generators, with backend selection at import.

The compiled kernel (``cavsim._dopri``) is used when it was built; otherwise
the NumPy twin in ``cavsim._dopri_py`` takes over. Setting the environment
variable ``CAVSIM_KERNEL=python`` forces the fallback.
"""
import os

import numpy as np
import scipy.sparse as sp

from . import _dopri_py
from .errors import StepFailure

try:
    from . import _dopri as _native
except ImportError:  # extension not compiled
    _native = None

AVAILABLE = ("cython", "python") if _native is not None else ("python",)
BACKEND = "python" if (_native is None or os.environ.get("CAVSIM_KERNEL", "").lower() == "python") else "cython"


def _as_csr(a):
    m = sp.csr_matrix(a, dtype=complex)
    m.sort_indices()
    return m


def evolve_linear(generator, y0, t_grid, rtol=1e-8, atol=None, h0=0.0, max_steps=5_000_000,
                  backend=None, return_info=False):
    """Sample the solution of ``y' = generator @ y`` on ``t_grid``.

    Parameters
    ----------
    generator : (n, n) array or sparse matrix
    y0 : (n,) complex array, value at ``t_grid[0]``
    t_grid : ascending times
    rtol, atol : tolerances of the embedded error estimate; ``atol`` defaults
        to ``rtol * max|y0|``
    backend : "cython" or "python"; defaults to the import-time choice

    Returns
    -------
    ndarray of shape ``(len(t_grid), n)``, plus a stats dict if ``return_info``.
    """
    t = np.ascontiguousarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d array")
    if np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be ascending")
    y = np.ascontiguousarray(y0, dtype=complex)
    if atol is None:
        atol = rtol * max(float(np.max(np.abs(y))) if y.size else 0.0, 1e-300)
    backend = backend or BACKEND
    m = _as_csr(generator)
    if backend == "cython":
        if _native is None:
            raise RuntimeError("compiled kernel not available")
        out, status, nacc, nrej = _native.dopri_csr(
            m.indptr.astype(np.int32), m.indices.astype(np.int32), np.ascontiguousarray(m.data),
            y, t, float(rtol), float(atol), float(h0), int(max_steps))
    else:
        dense = m.toarray() if m.shape[0] <= 48 else None
        mv = (lambda v: dense @ v) if dense is not None else m.dot
        out, status, nacc, nrej = _dopri_py.dopri(mv, y, t, float(rtol), float(atol), float(h0), int(max_steps))
    if status == 1:
        raise StepFailure("step size underflow")
    if status == 2:
        raise StepFailure("step budget exhausted")
    if return_info:
        return out, {"accepted": int(nacc), "rejected": int(nrej), "backend": backend}
    return out
