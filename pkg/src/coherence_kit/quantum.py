"""States, effects, POVMs and channels with Kraus / superoperator / Choi forms.

Conventions
-----------
* ``vec(|a><b|) = e_a (x) e_b`` (row-major flattening), so the
  superoperator of a channel with Kraus operators K is ``sum K (x) conj(K)``
  and column ``a * d_in + b`` is the image of the matrix unit ``E_ab``.
* Choi matrix ``J = sum_ab E(E_ab) (x) E_ab`` with the output factor first.
  Then ``J = sum_k vec(K_k) vec(K_k)^dag``, which is what
  ``kraus_from_choi`` inverts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import opspace
from .errors import (
    DimensionMismatch,
    NotAnEffect,
    NotAPovm,
    NotAState,
    NotCP,
    NotUnitary,
    SchemaError,
)
from .opspace import EQ_TOL, as_matrix, dagger, fro
from .structure import StructureSpec, dephase


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = opspace.check_state(self.matrix)
        m = 0.5 * (m + dagger(m))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @classmethod
    def pure(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


@dataclass(frozen=True, eq=False)
class Effect:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if not opspace.is_hermitian(m):
            raise NotAnEffect("effect is not Hermitian")
        w = opspace.eigvalsh(m)
        if w[0] < -opspace.CLAMP_TOL or w[-1] > 1 + opspace.CLAMP_TOL:
            raise NotAnEffect(f"effect spectrum [{w[0]:.3e}, {w[-1]:.3e}] is outside [0, 1]")
        m = 0.5 * (m + dagger(m))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple

    def __post_init__(self):
        effects = tuple(e if isinstance(e, Effect) else Effect(e) for e in self.effects)
        if not effects:
            raise NotAPovm("a POVM needs at least one effect")
        shapes = {e.matrix.shape for e in effects}
        if len(shapes) != 1:
            raise DimensionMismatch(f"POVM effects have shapes {sorted(shapes)}")
        total = sum(e.matrix for e in effects)
        d = total.shape[0]
        if np.abs(total - np.eye(d)).max() > EQ_TOL:
            raise NotAPovm(f"effects sum to identity only within {np.abs(total - np.eye(d)).max():.3e}")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].matrix.shape[0]

    def matrices(self) -> list[np.ndarray]:
        return [e.matrix for e in self.effects]


def superop_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    ks = np.asarray(kraus)
    n, o, i = ks.shape
    return np.einsum("kab,kcd->acbd", ks, ks.conj()).reshape(o * o, i * i)


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    vecs = np.array([k.reshape(-1) for k in kraus])
    return vecs.T @ vecs.conj()


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Completely positive map held as a Kraus list (trace-nonincreasing allowed)."""

    kraus: tuple
    superop: np.ndarray = field(init=False, repr=False)
    choi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ks = tuple(as_matrix(k) for k in self.kraus)
        if not ks:
            raise DimensionMismatch("a channel needs at least one Kraus operator")
        shapes = {k.shape for k in ks}
        if len(shapes) != 1:
            raise DimensionMismatch(f"Kraus operators have different shapes {sorted(shapes)}")
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "superop", superop_from_kraus(ks))
        object.__setattr__(self, "choi", choi_from_kraus(ks))

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    def kraus_gram(self) -> np.ndarray:
        """sum K^dag K on the input space."""
        return sum(dagger(k) @ k for k in self.kraus)

    def is_trace_preserving(self, tol: float = EQ_TOL) -> bool:
        return fro(self.kraus_gram() - np.eye(self.in_dim)) <= tol

    def is_trace_nonincreasing(self, tol: float = EQ_TOL) -> bool:
        return opspace.eigvalsh(self.kraus_gram())[-1] <= 1 + tol

    def __call__(self, x) -> np.ndarray:
        return apply(self, x)

    def to_json(self) -> dict:
        return {"in_dim": self.in_dim, "out_dim": self.out_dim, "kraus": [matrix_to_json(k) for k in self.kraus]}


def channel_from_kraus(kraus) -> QuantumChannel:
    if isinstance(kraus, np.ndarray) and kraus.ndim == 2:
        kraus = [kraus]
    return QuantumChannel(tuple(kraus))


def apply(channel: QuantumChannel, x) -> np.ndarray:
    """sum_k K X K^dag, evaluated through the cached superoperator."""
    x = as_matrix(x)
    if x.shape != (channel.in_dim, channel.in_dim):
        raise DimensionMismatch(f"input of shape {x.shape} for a channel with in_dim {channel.in_dim}")
    return (channel.superop @ x.reshape(-1)).reshape(channel.out_dim, channel.out_dim)


def apply_superop(superop: np.ndarray, x: np.ndarray, out_dim: int) -> np.ndarray:
    return (superop @ x.reshape(-1)).reshape(out_dim, out_dim)


def kraus_from_choi(choi, in_dim: int, out_dim: int, cutoff: float = 1e-10) -> list[np.ndarray]:
    """Canonical Kraus operators from the Choi eigenvectors (eigenvalues > cutoff)."""
    choi = as_matrix(choi)
    if choi.shape != (in_dim * out_dim, in_dim * out_dim):
        raise DimensionMismatch(f"Choi of shape {choi.shape} for dims in={in_dim}, out={out_dim}")
    eig = opspace.herm_eig(choi)
    if eig.eigenvalues[0] < -EQ_TOL:
        raise NotCP(f"Choi matrix has eigenvalue {eig.eigenvalues[0]:.3e}")
    kraus = []
    for w, v in zip(eig.eigenvalues[::-1], eig.eigenvectors.T[::-1]):
        if w > cutoff:
            kraus.append(np.sqrt(w) * v.reshape(out_dim, in_dim))
    if not kraus:
        kraus.append(np.zeros((out_dim, in_dim), dtype=np.complex128))
    return kraus


def channel_from_choi(choi, in_dim: int, out_dim: int) -> QuantumChannel:
    return QuantumChannel(tuple(kraus_from_choi(choi, in_dim, out_dim)))


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel((np.eye(d, dtype=np.complex128),))


def unitary_channel(v) -> QuantumChannel:
    v = as_matrix(v)
    check_unitary(v)
    return QuantumChannel((v,))


def dephasing_channel(s: StructureSpec) -> QuantumChannel:
    return QuantumChannel(tuple(s.projectors()))


def check_unitary(v, tol: float = EQ_TOL) -> np.ndarray:
    v = as_matrix(v)
    if v.shape[0] != v.shape[1] or fro(dagger(v) @ v - np.eye(v.shape[0])) > tol:
        raise NotUnitary("matrix is not unitary")
    return v


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    """second o first."""
    if first.out_dim != second.in_dim:
        raise DimensionMismatch(f"cannot feed out_dim {first.out_dim} into in_dim {second.in_dim}")
    return QuantumChannel(tuple(k2 @ k1 for k2 in second.kraus for k1 in first.kraus))


def tensor_channel(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    return QuantumChannel(tuple(np.kron(ka, kb) for ka in a.kraus for kb in b.kraus))


def mixture(channels: Sequence[QuantumChannel], weights: Sequence[float]) -> QuantumChannel:
    """Convex combination sum_i w_i E_i."""
    kraus = []
    for ch, w in zip(channels, weights):
        if w < 0:
            raise ValueError("mixture weights must be nonnegative")
        if w > 0:
            kraus.extend(np.sqrt(w) * k for k in ch.kraus)
    return QuantumChannel(tuple(kraus))


def is_incoherent_state(rho, s: StructureSpec, tol: float = EQ_TOL) -> tuple[bool, float]:
    """(D(rho) == rho within tol, ||rho - D(rho)||_F)."""
    rho = as_matrix(rho)
    violation = fro(rho - dephase(rho, s))
    return violation <= tol, violation


def build_dilated_channel(
    sigma,
    v,
    effect,
    dims_in: tuple[int, int],
    dims_out: tuple[int, int] | None = None,
) -> QuantumChannel:
    """rho -> tr_a'( E  V (rho (x) sigma) V^dag ) as a Kraus list.

    ``dims_in`` = (d_s, d_a) factors the input of V, ``dims_out`` =
    (d_s', d_a') factors its output; a' is traced after applying the
    effect ``effect`` (identity for a trace-preserving channel).
    """
    d_s, d_a = dims_in
    d_so, d_ao = dims_out if dims_out is not None else dims_in
    if d_s * d_a != d_so * d_ao:
        raise DimensionMismatch(f"{d_s}x{d_a} != {d_so}x{d_ao}")
    v = as_matrix(v)
    if v.shape != (d_s * d_a, d_s * d_a):
        raise DimensionMismatch(f"unitary of shape {v.shape} for composite dimension {d_s * d_a}")
    check_unitary(v)
    sigma = np.asarray(sigma if not isinstance(sigma, DensityOperator) else sigma.matrix)
    sigma = opspace.check_state(sigma)
    if sigma.shape != (d_a, d_a):
        raise DimensionMismatch(f"ancilla state of shape {sigma.shape}, expected ({d_a}, {d_a})")
    e = as_matrix(effect.matrix if isinstance(effect, Effect) else effect)
    if e.shape != (d_ao, d_ao):
        raise DimensionMismatch(f"effect of shape {e.shape}, expected ({d_ao}, {d_ao})")

    sig = opspace.herm_eig(sigma)
    e_half = opspace.matrix_power(e, 0.5)
    eye_s = np.eye(d_s)
    eye_so = np.eye(d_so)
    kraus = []
    for p, vec in zip(sig.eigenvalues, sig.eigenvectors.T):
        if p <= opspace.SUPPORT_TOL:
            continue
        embed = np.sqrt(p) * np.kron(eye_s, vec.reshape(-1, 1))  # rho -> rho (x) |s_j>
        w = v @ embed
        for m in range(d_ao):
            bra = e_half[m, :].reshape(1, -1)  # <m| E^{1/2}
            k = np.kron(eye_so, bra) @ w
            if np.abs(k).max() > 1e-14:
                kraus.append(k)
    if not kraus:
        kraus.append(np.zeros((d_so, d_s), dtype=np.complex128))
    return QuantumChannel(tuple(kraus))


# --- JSON -------------------------------------------------------------------


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(doc) -> np.ndarray:
    try:
        arr = np.asarray(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"matrix is not a nested numeric array: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise SchemaError(f"matrix must be rows of [re, im] pairs, got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_json(rho) -> dict:
    m = np.asarray(rho)
    return {"dim": int(m.shape[0]), "matrix": matrix_to_json(m)}


def state_from_json(doc: dict) -> DensityOperator:
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise SchemaError("state JSON needs a 'matrix' field")
    m = matrix_from_json(doc["matrix"])
    if "dim" in doc and m.shape != (int(doc["dim"]), int(doc["dim"])):
        raise SchemaError(f"'dim' is {doc['dim']} but matrix has shape {m.shape}")
    try:
        return DensityOperator(m)
    except NotAState as exc:
        raise SchemaError(f"not a density operator: {exc}") from None


def channel_from_json(doc: dict) -> QuantumChannel:
    if not isinstance(doc, dict) or "kraus" not in doc:
        raise SchemaError("channel JSON needs a 'kraus' field")
    kraus = [matrix_from_json(k) for k in doc["kraus"]]
    if not kraus:
        raise SchemaError("channel JSON has an empty Kraus list")
    ch = QuantumChannel(tuple(kraus))
    if "in_dim" in doc and int(doc["in_dim"]) != ch.in_dim:
        raise SchemaError(f"'in_dim' is {doc['in_dim']} but Kraus operators have {ch.in_dim} columns")
    if "out_dim" in doc and int(doc["out_dim"]) != ch.out_dim:
        raise SchemaError(f"'out_dim' is {doc['out_dim']} but Kraus operators have {ch.out_dim} rows")
    return ch


def povm_to_json(povm: Povm) -> dict:
    return {"effects": [matrix_to_json(e) for e in povm.matrices()]}


def povm_from_json(doc: dict) -> Povm:
    if not isinstance(doc, dict) or "effects" not in doc:
        raise SchemaError("POVM JSON needs an 'effects' field")
    try:
        return Povm(tuple(matrix_from_json(e) for e in doc["effects"]))
    except (NotAPovm, NotAnEffect) as exc:
        raise SchemaError(str(exc)) from None
