"""Column-stacking superoperator helpers shared by the full and reduced models.

With ``vec(rho)`` stacking columns, ``vec(A rho B) = (B.T kron A) vec(rho)``.
"""
import numpy as np
import scipy.sparse as sp


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim=None):
    v = np.asarray(v)
    d = dim or int(round(np.sqrt(v.size)))
    return v.reshape(d, d, order="F")


def expect_row(op):
    """Row vector ``r`` with ``r @ vec(rho) == Tr(op @ rho)``."""
    op = op.toarray() if sp.issparse(op) else np.asarray(op)
    return op.ravel(order="C").astype(complex)


def spre(a):
    d = a.shape[0]
    return sp.kron(sp.identity(d, dtype=complex, format="csr"), sp.csr_matrix(a), format="csr")


def spost(b):
    d = b.shape[0]
    return sp.kron(sp.csr_matrix(b).T, sp.identity(d, dtype=complex, format="csr"), format="csr")


def lindbladian(hamiltonian, jumps):
    """Sparse generator ``-i[H, .] + sum_k rate_k D[L_k]``.

    Parameters
    ----------
    hamiltonian : (d, d) array or sparse matrix
    jumps : iterable of (rate, operator)
        Rates may be negative; the dissipator is used as written.
    """
    h = sp.csr_matrix(hamiltonian, dtype=complex)
    gen = -1j * (spre(h) - spost(h))
    for rate, op in jumps:
        if rate == 0:
            continue
        c = sp.csr_matrix(op, dtype=complex)
        cd = c.conj().T.tocsr()
        cdc = (cd @ c).tocsr()
        gen = gen + rate * (sp.kron(c.conj(), c, format="csr") - 0.5 * spre(cdc) - 0.5 * spost(cdc))
    gen = gen.tocsr()
    gen.eliminate_zeros()
    return gen


def dense_lindbladian(hamiltonian, jumps):
    """Dense variant for tiny Hilbert spaces (dimension 2)."""
    h = np.asarray(hamiltonian, complex)
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for rate, op in jumps:
        c = np.asarray(op, complex)
        cdc = c.conj().T @ c
        gen += rate * (np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye))
    return gen
