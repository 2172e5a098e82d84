"""Dense complex linear algebra used by every other module.

The Hermitian eigensolver is a cyclic Jacobi iteration. A compiled kernel
(``coherence_kit._jacobi``) is used when available; otherwise the
pure-Python port in ``coherence_kit._jacobi_py`` is selected at import.
``BACKEND`` records which one is active.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionMismatch, NegativeEigenvalue, NoConvergence, NotAState, NotHermitian

try:
    from ._jacobi import jacobi_eigh as _jacobi_kernel

    BACKEND = "cython"
except ImportError:  # pragma: no cover - exercised only without a build
    from ._jacobi_py import jacobi_eigh as _jacobi_kernel

    BACKEND = "python"

HERMITIAN_TOL = 1e-9
CLAMP_TOL = 1e-10
SUPPORT_TOL = 1e-12
EQ_TOL = 1e-9
MAX_SWEEPS = 100


@dataclass(frozen=True)
class HermEig:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(x) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    m = np.asarray(x, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def fro(x) -> float:
    return float(np.linalg.norm(x))


def dagger(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def is_hermitian(x, tol: float = HERMITIAN_TOL) -> bool:
    x = np.asarray(x)
    return x.shape[0] == x.shape[1] and fro(x - dagger(x)) <= tol * max(1.0, fro(x))


def herm_eig(x, *, kernel=None) -> HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``kernel`` overrides the active Jacobi backend (used by the parity
    tests and the benchmark).
    """
    x = as_matrix(x)
    if x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"herm_eig needs a square matrix, got {x.shape}")
    if not is_hermitian(x):
        raise NotHermitian(f"||X - X^dag||_F = {fro(x - dagger(x)):.3e}")
    w, v, sweeps = (kernel or _jacobi_kernel)(x, 1e-15, MAX_SWEEPS)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    return HermEig(w, v)


def eigvalsh(x) -> np.ndarray:
    return herm_eig(x).eigenvalues


def singular_values(x) -> np.ndarray:
    """Singular values, descending, from the Hermitian dilation [[0, X], [X^dag, 0]].

    The dilation has eigenvalues +-s_i (plus |m - n| zeros), so no squaring
    of small singular values is involved.
    """
    x = as_matrix(x)
    m, n = x.shape
    big = np.zeros((m + n, m + n), dtype=np.complex128)
    big[:m, m:] = x
    big[m:, :m] = dagger(x)
    w = eigvalsh(big)
    return np.clip(w[::-1][: min(m, n)], 0.0, None)


def trace_norm(x) -> float:
    """Sum of singular values."""
    x = as_matrix(x)
    if not x.any():
        return 0.0
    if x.shape[0] == x.shape[1] and np.array_equal(x, dagger(x)):
        return float(np.sum(np.abs(eigvalsh(x))))
    return float(np.sum(singular_values(x)))


def _clamped_spectrum(x) -> HermEig:
    eig = herm_eig(x)
    if eig.eigenvalues.size and eig.eigenvalues[0] < -CLAMP_TOL:
        raise NegativeEigenvalue(f"smallest eigenvalue {eig.eigenvalues[0]:.3e}")
    return HermEig(np.clip(eig.eigenvalues, 0.0, None), eig.eigenvectors)


def _xlogx(w: np.ndarray) -> np.ndarray:
    out = np.zeros_like(w)
    nz = w > 0
    out[nz] = w[nz] * np.log(w[nz])
    return out


def von_neumann_entropy(rho) -> float:
    """-sum(l ln l) in nats; the trace is not renormalized."""
    w = _clamped_spectrum(rho).eigenvalues
    return float(-np.sum(_xlogx(w)))


def check_state(rho, tol: float = EQ_TOL) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise NotAState(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise NotAState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise NotAState(f"trace is {np.trace(rho).real:.12g}, expected 1")
    w = eigvalsh(rho)
    if w[0] < -CLAMP_TOL:
        raise NotAState(f"density matrix has eigenvalue {w[0]:.3e}")
    return rho


def relative_entropy(rho, sigma) -> float:
    """S(rho || sigma) in nats; +inf when supp(rho) is not inside supp(sigma)."""
    rho = check_state(rho)
    sigma = check_state(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"{rho.shape} vs {sigma.shape}")
    er = _clamped_spectrum(rho)
    es = _clamped_spectrum(sigma)
    supp = es.eigenvalues > SUPPORT_TOL
    # weight of rho outside supp(sigma)
    kernel_vecs = es.eigenvectors[:, ~supp]
    if kernel_vecs.size:
        leak = float(np.real(np.trace(dagger(kernel_vecs) @ rho @ kernel_vecs)))
        if leak > SUPPORT_TOL:
            return float("inf")
    log_sigma = (es.eigenvectors[:, supp] * np.log(es.eigenvalues[supp])) @ dagger(es.eigenvectors[:, supp])
    value = float(np.sum(_xlogx(er.eigenvalues))) - float(np.real(np.trace(rho @ log_sigma)))
    return max(value, 0.0) if value > -EQ_TOL else value


def matrix_power(x, s: float) -> np.ndarray:
    """X^s for PSD X; negative eigenvalues clamped to zero and 0^s = 0.

    Eigenvalues below the numerical-rank cutoff n * eps * max(w) count as
    zero: w**s would otherwise turn round-off of size 1e-16 into 1e-8.
    """
    eig = _clamped_spectrum(x)
    w = eig.eigenvalues
    ws = np.zeros_like(w)
    cutoff = w.size * np.finfo(float).eps * (w.max() if w.size else 0.0)
    nz = w > cutoff
    ws[nz] = w[nz] ** s
    return (eig.eigenvectors * ws) @ dagger(eig.eigenvectors)


def matrix_function(x, f) -> np.ndarray:
    """f(X) for Hermitian X via its spectrum."""
    eig = herm_eig(x)
    return (eig.eigenvectors * f(eig.eigenvalues)) @ dagger(eig.eigenvectors)


def tensor(x, y) -> np.ndarray:
    """Kronecker product; composite index is a * d_B + b."""
    return np.kron(as_matrix(x), as_matrix(y))


def partial_trace(x, dims: tuple[int, int], keep: Literal["A", "B", 0, 1] = "A") -> np.ndarray:
    """Trace out one factor of an operator on C^dA (x) C^dB."""
    x = as_matrix(x)
    da, db = dims
    if x.shape != (da * db, da * db):
        raise DimensionMismatch(f"operator of shape {x.shape} does not factor as {da}x{db}")
    t = x.reshape(da, db, da, db)
    if keep in ("A", 0):
        return np.einsum("ibjb->ij", t)
    if keep in ("B", 1):
        return np.einsum("aiaj->ij", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
