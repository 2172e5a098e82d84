"""Membership tests for the TC, DC, IP and incoherent classes.

Every check returns the verdict together with the worst residual so that
near-covariant channels can be studied; the verdict is just
``violation <= tol``.

Residuals are Frobenius norms evaluated on matrix units. Column ``a*d+b``
of the superoperator is the image of ``|a><b|``, so each classifier is a
masked column norm:

* TC: the part of E(|a><b|) outside the output mode lambda_b - lambda_a.
* DC: E(D(|a><b|)) - D(E(|a><b|)).
* IP: the off-block part of E(Y) for within-block units Y, which span
  the incoherent operators.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import opspace
from .errors import DimensionMismatch, InconsistentVerdicts, NotTC
from .opspace import EQ_TOL, as_matrix, fro
from .quantum import Povm, QuantumChannel, check_unitary, kraus_from_choi
from .structure import StructureSpec, _joint_labels, dephase

CLASSES = ("tc", "dc", "ip")


@dataclass
class ClassificationReport:
    verdicts: dict
    violations: dict
    tol: float
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.check_consistency()

    def __getitem__(self, cls: str) -> bool:
        return self.verdicts[cls]

    def check_consistency(self):
        v = self.verdicts
        if v.get("tc") and not v.get("dc", True):
            raise InconsistentVerdicts(f"TC but not DC: {self.violations}")
        if v.get("dc") and not v.get("ip", True):
            raise InconsistentVerdicts(f"DC but not IP: {self.violations}")

    def to_json(self) -> dict:
        doc = {k: bool(val) for k, val in self.verdicts.items()}
        doc["violations"] = {k: float(val) for k, val in self.violations.items()}
        doc["tol"] = self.tol
        if self.notes:
            doc["notes"] = list(self.notes)
        return doc


def _check_dims(channel: QuantumChannel, s_in: StructureSpec, s_out: StructureSpec):
    if channel.in_dim != s_in.dim or channel.out_dim != s_out.dim:
        raise DimensionMismatch(
            f"channel {channel.in_dim}->{channel.out_dim} vs structures {s_in.dim}->{s_out.dim}"
        )
    if s_in.n_generators != s_out.n_generators:
        raise DimensionMismatch("input and output structures declare different numbers of generators")


def mode_match(s_in: StructureSpec, s_out: StructureSpec) -> np.ndarray:
    """Boolean (d_out^2, d_in^2): output entry lies in the mode of the input unit."""
    gin = s_in.gaps.reshape(s_in.n_generators, -1)
    gout = s_out.gaps.reshape(s_out.n_generators, -1)
    tol = max(s_in.gap_tolerance, s_out.gap_tolerance)
    return np.all(np.abs(gout[:, :, None] - gin[:, None, :]) <= tol, axis=0)


def _column_norms(m: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(m.real**2 + m.imag**2, axis=0))


def tc_residuals(channel: QuantumChannel, s_in: StructureSpec, s_out: StructureSpec | None = None) -> np.ndarray:
    """Per-matrix-unit TC residuals, shape (d_in, d_in)."""
    s_out = s_out or s_in
    _check_dims(channel, s_in, s_out)
    outside = np.where(mode_match(s_in, s_out), 0, channel.superop)
    return _column_norms(outside).reshape(s_in.dim, s_in.dim)


def is_tc(channel: QuantumChannel, s_in: StructureSpec, s_out: StructureSpec | None = None, tol: float = EQ_TOL):
    """(covariant under translations, worst residual)."""
    violation = float(tc_residuals(channel, s_in, s_out).max())
    return violation <= tol, violation


def tc_superop_commutator(channel: QuantumChannel, s_in: StructureSpec, s_out: StructureSpec | None = None) -> float:
    """max over modes of ||E P_in^(w) - P_out^(w) E||_F on the superoperator."""
    s_out = s_out or s_in
    _check_dims(channel, s_in, s_out)
    tol = max(s_in.gap_tolerance, s_out.gap_tolerance)
    gin = s_in.gaps.reshape(s_in.n_generators, -1)
    gout = s_out.gaps.reshape(s_out.n_generators, -1)
    candidates = np.unique(np.round(np.concatenate([gin, gout], axis=1).T / tol) * tol, axis=0)
    worst = 0.0
    e = channel.superop
    for w in candidates:
        p_in = np.all(np.abs(gin - w[:, None]) <= tol, axis=0)
        p_out = np.all(np.abs(gout - w[:, None]) <= tol, axis=0)
        comm = e * p_in[None, :] - p_out[:, None] * e
        worst = max(worst, fro(comm))
    return worst


def dc_residuals(channel: QuantumChannel, s_in: StructureSpec, s_out: StructureSpec | None = None) -> np.ndarray:
    s_out = s_out or s_in
    _check_dims(channel, s_in, s_out)
    m_in = s_in.same_block.reshape(-1)
    m_out = s_out.same_block.reshape(-1)
    e = channel.superop
    diff = e * m_in[None, :] - m_out[:, None] * e
    return _column_norms(diff).reshape(s_in.dim, s_in.dim)


def is_dc(channel: QuantumChannel, s_in: StructureSpec, s_out: StructureSpec | None = None, tol: float = EQ_TOL):
    """(E o D == D o E, worst residual)."""
    violation = float(dc_residuals(channel, s_in, s_out).max())
    return violation <= tol, violation


def is_ip(channel: QuantumChannel, s_in: StructureSpec, s_out: StructureSpec | None = None, tol: float = EQ_TOL):
    """(incoherent inputs give incoherent outputs, worst residual)."""
    s_out = s_out or s_in
    _check_dims(channel, s_in, s_out)
    m_in = s_in.same_block.reshape(-1)
    m_out = s_out.same_block.reshape(-1)
    leak = channel.superop[~m_out][:, m_in]
    violation = float(_column_norms(leak).max()) if leak.size else 0.0
    return violation <= tol, violation


def is_incoherent_kraus(kraus, s_in: StructureSpec, s_out: StructureSpec | None = None, tol: float = EQ_TOL):
    """Every supplied Kraus operator sends each input block into at most one output block.

    The violation is the largest second-biggest block norm ||Pi_l' K Pi_l||_F
    over all (K, l); the verdict is relative to this decomposition only.
    """
    s_out = s_out or s_in
    kraus = [as_matrix(k) for k in kraus]
    violation = 0.0
    for k in kraus:
        if k.shape != (s_out.dim, s_in.dim):
            raise DimensionMismatch(f"Kraus operator of shape {k.shape} for {s_in.dim}->{s_out.dim}")
        for blk_in in s_in.blocks:
            norms = sorted((fro(k[np.ix_(blk_out, blk_in)]) for blk_out in s_out.blocks), reverse=True)
            if len(norms) > 1:
                violation = max(violation, norms[1])
    return violation <= tol, violation


def classify_channel(
    channel: QuantumChannel,
    s_in: StructureSpec,
    s_out: StructureSpec | None = None,
    tol: float = EQ_TOL,
) -> ClassificationReport:
    """All verdicts for a channel, plus incoherence of the given and canonical Kraus lists."""
    s_out = s_out or s_in
    tc, v_tc = is_tc(channel, s_in, s_out, tol)
    dc, v_dc = is_dc(channel, s_in, s_out, tol)
    ip, v_ip = is_ip(channel, s_in, s_out, tol)
    inc, v_inc = is_incoherent_kraus(channel.kraus, s_in, s_out, tol)
    canonical = kraus_from_choi(channel.choi, channel.in_dim, channel.out_dim)
    inc_c, v_inc_c = is_incoherent_kraus(canonical, s_in, s_out, tol)
    return ClassificationReport(
        verdicts={"tc": tc, "dc": dc, "ip": ip, "incoherent_given_kraus": inc, "incoherent_canonical_kraus": inc_c},
        violations={"tc": v_tc, "dc": v_dc, "ip": v_ip, "incoherent_given_kraus": v_inc, "incoherent_canonical_kraus": v_inc_c},
        tol=tol,
    )


def classify_unitary(v, s: StructureSpec, tol: float = EQ_TOL) -> ClassificationReport:
    """TC via [V, L] = 0; DC = IP = incoherent via block-permutation structure."""
    v = check_unitary(v)
    if v.shape != (s.dim, s.dim):
        raise DimensionMismatch(f"unitary of shape {v.shape} for structure dim {s.dim}")
    v_tc = 0.0
    for lam in s.generators:
        comm = v * lam[None, :] - lam[:, None] * v
        v_tc = max(v_tc, fro(comm))
    v_perm = 0.0
    for blk_in in s.blocks:
        norms = sorted((fro(v[np.ix_(blk_out, blk_in)]) for blk_out in s.blocks), reverse=True)
        if len(norms) > 1:
            v_perm = max(v_perm, norms[1])
    perm = v_perm <= tol
    return ClassificationReport(
        verdicts={"tc": v_tc <= tol, "dc": perm, "ip": perm, "incoherent_given_kraus": perm},
        violations={"tc": v_tc, "dc": v_perm, "ip": v_perm, "incoherent_given_kraus": v_perm},
        tol=tol,
        notes=["for unitaries the DC, IP and incoherent sets coincide"],
    )


def classify_povm(povm: Povm, s: StructureSpec, tol: float = EQ_TOL) -> ClassificationReport:
    """TC = DC iff every effect is incoherent; IP admits every POVM."""
    if povm.dim != s.dim:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs structure dim {s.dim}")
    worst = max(fro(e - dephase(e, s)) for e in povm.matrices())
    ok = worst <= tol
    return ClassificationReport(
        verdicts={"tc": ok, "dc": ok, "ip": True},
        violations={"tc": worst, "dc": worst, "ip": 0.0},
        tol=tol,
    )


def operator_mode_residual(k, omega, s_in: StructureSpec, s_out: StructureSpec | None = None) -> float:
    """||K - P^(omega)(K)||_F for K: in -> out, entry (c, a) having mode lambda_in(a) - lambda_out(c)."""
    s_out = s_out or s_in
    k = as_matrix(k)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    gap = s_in.generators[:, None, :] - s_out.generators[:, :, None]
    tol = max(s_in.gap_tolerance, s_out.gap_tolerance)
    inside = np.all(np.abs(gap - w[:, None, None]) <= tol, axis=0)
    return fro(np.where(inside, 0, k))


def extract_mode_kraus(
    channel: QuantumChannel,
    s_in: StructureSpec,
    s_out: StructureSpec | None = None,
    tol: float = 1e-8,
) -> list[tuple]:
    """Mode-homogeneous Kraus operators of a TC channel.

    The Choi matrix of a TC channel commutes with the gap operator
    lambda_out(c) - lambda_in(a) on the Choi index (c, a); each eigenvector
    of a gap-eigenspace block gives a Kraus operator of mode
    -(gap value).
    """
    s_out = s_out or s_in
    ok, violation = is_tc(channel, s_in, s_out, tol)
    if not ok:
        raise NotTC(f"channel is not TC (violation {violation:.3e} > {tol:.1e})")
    gap = (s_out.generators[:, :, None] - s_in.generators[:, None, :]).reshape(s_in.n_generators, -1)
    labels = _joint_labels(list(gap), max(s_in.gap_tolerance, s_out.gap_tolerance))
    choi = channel.choi
    out = []
    for lab in range(int(labels.max()) + 1):
        idx = np.flatnonzero(labels == lab)
        sub = choi[np.ix_(idx, idx)]
        if not np.any(np.abs(sub) > 0):
            continue
        eig = opspace.herm_eig(sub)
        omega = tuple(-float(np.mean(gap[k, idx])) + 0.0 for k in range(gap.shape[0]))
        mode = omega[0] if len(omega) == 1 else omega
        for w, vec in zip(eig.eigenvalues[::-1], eig.eigenvectors.T[::-1]):
            if w <= 1e-12:
                continue
            full = np.zeros(channel.in_dim * channel.out_dim, dtype=np.complex128)
            full[idx] = np.sqrt(w) * vec
            out.append((mode, full.reshape(channel.out_dim, channel.in_dim)))
    return out
