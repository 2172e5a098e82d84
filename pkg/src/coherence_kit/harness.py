"""Seeded samplers, monotonicity sweeps and the canonical counterexamples.

Randomness comes from numpy's PCG64. Trial ``i`` of a sweep seeded with
``seed`` draws from ``SeedSequence([seed, i])``, so trials are independent
of execution order.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import opspace
from .classify import classify_channel, classify_povm, is_dc, is_incoherent_kraus, is_ip, is_tc
from .errors import ClassCheckFailed, Degenerate, NoChannelSupplied
from .measures import MeasureSpec, commutator_norm, mode_norm, parse_measure, wyd_skew
from .opspace import dagger, fro
from .quantum import (
    DensityOperator,
    Povm,
    QuantumChannel,
    apply,
    compose,
    dephasing_channel,
    matrix_to_json,
    mixture,
    state_to_json,
)
from .structure import StructureSpec, build_structure, dephase, translate

CHANNEL_CLASSES = ("tc", "dc", "ip", "incoherent")
MONOTONE_TOL = 1e-8
MAX_RETRIES = 20


def rng_for(seed: int, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, index)])))


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return rng_for(seed_or_rng)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2)


def ladder(d: int) -> StructureSpec:
    """Nondegenerate integer spectrum 0, 1, ..., d-1."""
    return build_structure(np.arange(d, dtype=float))


def sample_state(d: int, seed=0, rank: int | None = None) -> DensityOperator:
    """G G^dag / tr(G G^dag) with G a d x rank complex Gaussian matrix."""
    rng = _as_rng(seed)
    g = _ginibre(rng, d, rank or d)
    m = g @ dagger(g)
    return DensityOperator(m / np.trace(m).real)


def sample_pure_state(d: int, seed=0) -> DensityOperator:
    return sample_state(d, seed, rank=1)


def sample_incoherent_state(s: StructureSpec, seed=0) -> DensityOperator:
    """Random block-diagonal state."""
    rng = _as_rng(seed)
    g = _ginibre(rng, s.dim, s.dim)
    m = dephase(g @ dagger(g), s)
    return DensityOperator(m / np.trace(m).real)


def sample_unitary(d: int, seed=0) -> np.ndarray:
    """Q factor of a complex Gaussian matrix with the phases of diag(R) removed."""
    rng = _as_rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def sample_block_unitary(s: StructureSpec, seed=0) -> np.ndarray:
    """Block-diagonal unitary (commutes with every generator): a TC unitary."""
    rng = _as_rng(seed)
    v = np.zeros((s.dim, s.dim), dtype=np.complex128)
    for blk in s.blocks:
        v[np.ix_(blk, blk)] = sample_unitary(len(blk), rng)
    return v


def sample_block_permutation(s: StructureSpec, seed=0, within_block: bool = True) -> np.ndarray:
    """Unitary permuting equal-size blocks, with random unitaries inside blocks (a DC unitary)."""
    rng = _as_rng(seed)
    by_size: dict[int, list[int]] = {}
    for i, blk in enumerate(s.blocks):
        by_size.setdefault(len(blk), []).append(i)
    target = list(range(len(s.blocks)))
    for members in by_size.values():
        perm = rng.permutation(len(members))
        for src, dst in zip(members, perm):
            target[src] = members[dst]
    v = np.zeros((s.dim, s.dim), dtype=np.complex128)
    for i, blk in enumerate(s.blocks):
        dst = s.blocks[target[i]]
        u = sample_unitary(len(blk), rng) if within_block else np.eye(len(blk))
        v[np.ix_(dst, blk)] = u
    return v


def swap_unitary(d: int, i: int, j: int) -> np.ndarray:
    p = np.eye(d, dtype=np.complex128)
    p[[i, j]] = p[[j, i]]
    return p


def _inv_sqrt(m: np.ndarray) -> np.ndarray:
    eig = opspace.herm_eig(m)
    if eig.eigenvalues[0] <= 1e-10 * max(1.0, eig.eigenvalues[-1]):
        raise Degenerate(f"Kraus Gram matrix is singular (smallest eigenvalue {eig.eigenvalues[0]:.3e})")
    return (eig.eigenvectors / np.sqrt(eig.eigenvalues)) @ dagger(eig.eigenvectors)


def _sample_tc(rng, s_in: StructureSpec, s_out: StructureSpec, n_kraus: int) -> QuantumChannel:
    gap = s_in.generators[:, None, :] - s_out.generators[:, :, None]  # mode of entry (c, a)
    tol = max(s_in.gap_tolerance, s_out.gap_tolerance)
    flat = gap.reshape(gap.shape[0], -1).T
    modes = np.unique(np.round(flat / tol) * tol, axis=0)
    zero = np.zeros(gap.shape[0])
    masks = [np.all(np.abs(gap - w[:, None, None]) <= tol, axis=0) for w in modes]
    zero_idx = [i for i, w in enumerate(modes) if np.all(np.abs(w - zero) <= tol)]
    kraus = []
    for n in range(n_kraus):
        if n == 0 and zero_idx:
            mask = masks[zero_idx[0]]
        else:
            mask = masks[int(rng.integers(len(masks)))]
        kraus.append(np.where(mask, _ginibre(rng, s_out.dim, s_in.dim), 0))
    gram = sum(dagger(k) @ k for k in kraus)
    # mode-homogeneous Kraus operators give a mode-0 (block-diagonal) Gram matrix
    if fro(gram - dephase(gram, s_in)) > 1e-12 * max(1.0, fro(gram)):
        raise ClassCheckFailed("Gram matrix of mode-homogeneous Kraus operators is not block-diagonal")
    norm = _inv_sqrt(gram)
    return QuantumChannel(tuple(k @ norm for k in kraus))


def _sample_incoherent(rng, s_in: StructureSpec, s_out: StructureSpec, n_kraus: int) -> QuantumChannel:
    kraus = []
    for blk in s_in.blocks:
        block_kraus = []
        for _ in range(n_kraus):
            dst = s_out.blocks[int(rng.integers(len(s_out.blocks)))]
            k = np.zeros((s_out.dim, s_in.dim), dtype=np.complex128)
            k[np.ix_(dst, blk)] = _ginibre(rng, len(dst), len(blk))
            block_kraus.append(k)
        gram = sum(dagger(k) @ k for k in block_kraus)
        sub = gram[np.ix_(blk, blk)]
        norm = np.zeros((s_in.dim, s_in.dim), dtype=np.complex128)
        norm[np.ix_(blk, blk)] = _inv_sqrt(sub)
        kraus.extend(k @ norm for k in block_kraus)
    return QuantumChannel(tuple(kraus))


def sample_povm(d: int, n_outcomes: int, seed=0) -> Povm:
    rng = _as_rng(seed)
    parts = []
    for _ in range(n_outcomes):
        g = _ginibre(rng, d, int(rng.integers(1, d + 1)))
        parts.append(g @ dagger(g))
    norm = _inv_sqrt(sum(parts))
    effects = [norm @ a @ norm for a in parts]
    effects = [0.5 * (e + dagger(e)) for e in effects]
    # absorb round-off so the effects sum to I to machine precision
    effects[-1] = effects[-1] + (np.eye(d) - sum(effects))
    return Povm(tuple(effects))


def measure_and_prepare(povm: Povm, outputs: Sequence[np.ndarray], s_out: StructureSpec) -> QuantumChannel:
    """rho -> sum_i tr(F_i rho) sigma_i with block-diagonal sigma_i."""
    kraus = []
    for f, sigma in zip(povm.matrices(), outputs):
        fe = opspace.herm_eig(f)
        for blk in s_out.blocks:
            se = opspace.herm_eig(sigma[np.ix_(blk, blk)])
            for sw, sv in zip(se.eigenvalues, se.eigenvectors.T):
                if sw <= 1e-14:
                    continue
                ket = np.zeros(s_out.dim, dtype=np.complex128)
                ket[blk] = sv
                for fw, fv in zip(fe.eigenvalues, fe.eigenvectors.T):
                    if fw <= 1e-14:
                        continue
                    kraus.append(math.sqrt(sw * fw) * np.outer(ket, fv.conj()))
    return QuantumChannel(tuple(kraus))


def _sample_ip(rng, s_in: StructureSpec, s_out: StructureSpec, n_kraus: int) -> QuantumChannel:
    inc = _sample_incoherent(rng, s_in, s_out, n_kraus)
    n_out = int(rng.integers(2, 4))
    povm = sample_povm(s_in.dim, n_out, rng)
    outputs = [sample_incoherent_state(s_out, rng).matrix for _ in range(n_out)]
    mp = measure_and_prepare(povm, outputs, s_out)
    t = float(rng.uniform())
    return mixture([inc, mp], [t, 1.0 - t])


def _sample_dc(rng, s_in: StructureSpec, s_out: StructureSpec, n_kraus: int) -> QuantumChannel:
    parts = []
    for _ in range(int(rng.integers(1, 3))):
        tc = _sample_tc(rng, s_in, s_out, n_kraus)
        pre = QuantumChannel((sample_block_permutation(s_in, rng),))
        post = QuantumChannel((sample_block_permutation(s_out, rng),))
        parts.append(compose(post, compose(tc, pre)))
    if len(parts) == 1:
        return parts[0]
    t = float(rng.uniform())
    return mixture(parts, [t, 1.0 - t])


_SAMPLERS = {"tc": _sample_tc, "dc": _sample_dc, "ip": _sample_ip, "incoherent": _sample_incoherent}


def channel_in_class(channel: QuantumChannel, cls: str, s_in: StructureSpec, s_out: StructureSpec, tol: float = 1e-9):
    """(verdict, violation) of the classifier for ``cls``."""
    if cls == "tc":
        return is_tc(channel, s_in, s_out, tol)
    if cls == "dc":
        return is_dc(channel, s_in, s_out, tol)
    if cls == "ip":
        return is_ip(channel, s_in, s_out, tol)
    if cls == "incoherent":
        ok_k, v_k = is_incoherent_kraus(channel.kraus, s_in, s_out, tol)
        ok_ip, v_ip = is_ip(channel, s_in, s_out, tol)
        return ok_k and ok_ip, max(v_k, v_ip)
    raise ValueError(f"unknown channel class {cls!r}; expected one of {CHANNEL_CLASSES}")


def sample_channel(
    cls: str,
    s_in: StructureSpec,
    s_out: StructureSpec | None = None,
    n_kraus: int = 2,
    seed=0,
) -> QuantumChannel:
    """Random trace-preserving channel of the given class, post-checked by its classifier."""
    cls = cls.lower()
    if cls not in _SAMPLERS:
        raise ValueError(f"unknown channel class {cls!r}; expected one of {CHANNEL_CLASSES}")
    s_out = s_out or s_in
    rng = _as_rng(seed)
    for _ in range(MAX_RETRIES):
        try:
            channel = _SAMPLERS[cls](rng, s_in, s_out, max(1, n_kraus))
        except Degenerate:
            continue
        ok, violation = channel_in_class(channel, cls, s_in, s_out)
        if not ok:
            raise ClassCheckFailed(f"sampled {cls} channel fails its own classifier (violation {violation:.3e})")
        if not channel.is_trace_preserving():
            raise ClassCheckFailed(f"sampled {cls} channel is not trace preserving")
        return channel
    raise Degenerate(f"could not sample a {cls} channel in {MAX_RETRIES} attempts")


# --- monotonicity sweeps -------------------------------------------------------


@dataclass
class SweepReport:
    measure: str
    channel_class: str
    trials: int
    seed: int
    max_violation: float
    tol: float
    witness: dict | None = None
    rows: list = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return self.witness is not None

    def to_json(self) -> dict:
        return {
            "measure": self.measure,
            "class": self.channel_class,
            "trials": self.trials,
            "seed": self.seed,
            "max_violation": self.max_violation,
            "tol": self.tol,
            "witness": self.witness,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trial", "f_before", "f_after", "violation"])
        for trial, before, after, violation in self.rows:
            writer.writerow([trial, f"{before:.12g}", f"{after:.12g}", f"{violation:.12g}"])
        return buf.getvalue()


def hand_witness(s: StructureSpec):
    """(rho, channel) for psi = (|0> + |1>)/sqrt2 and the basis swap 1 <-> 2.

    Needs indices 0, 1, 2 in distinct singleton blocks, which makes the swap
    a DC, IP and incoherent unitary. Returns None otherwise.
    """
    if s.dim < 3:
        return None
    b = s.block_of
    if len({int(b[0]), int(b[1]), int(b[2])}) != 3 or any(s.block_sizes[int(b[i])] != 1 for i in (1, 2)):
        return None
    psi = np.zeros(s.dim, dtype=np.complex128)
    psi[[0, 1]] = 1 / math.sqrt(2)
    return DensityOperator.pure(psi), QuantumChannel((swap_unitary(s.dim, 1, 2),))


def monotonicity_sweep(
    measure,
    cls: str,
    trials: int,
    d: int | Sequence[int] = 3,
    seed: int = 0,
    structure: StructureSpec | None = None,
    n_kraus: int = 2,
    tol: float = MONOTONE_TOL,
    inject_witness: bool = True,
) -> SweepReport:
    """Search for f(E(rho)) > f(rho) with E sampled from ``cls``.

    ``d`` may be a sequence; trial i then uses ``d[i % len(d)]`` with the
    ladder structure of that size (ignored if ``structure`` is given).
    For classes other than TC, trial 0 is the deterministic swap witness
    when the structure admits it.
    """
    return monotonicity_sweeps([measure], cls, trials, d, seed, structure, n_kraus, tol, inject_witness)[0]


def monotonicity_sweeps(
    measures: Sequence,
    cls: str,
    trials: int,
    d: int | Sequence[int] = 3,
    seed: int = 0,
    structure: StructureSpec | None = None,
    n_kraus: int = 2,
    tol: float = MONOTONE_TOL,
    inject_witness: bool = True,
) -> list[SweepReport]:
    """Several measures over one stream of (state, channel) trials.

    Each report is identical to what ``monotonicity_sweep`` gives for that
    measure alone with the same arguments.
    """
    cls = cls.lower()
    if cls not in CHANNEL_CLASSES:
        raise ValueError(f"unknown channel class {cls!r}; expected one of {CHANNEL_CLASSES}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dims = [int(d)] if isinstance(d, (int, np.integer)) else [int(x) for x in d]
    idents = [m.ident if isinstance(m, MeasureSpec) else str(m) for m in measures]
    setups: dict[int, tuple] = {}

    def setup(dim):
        if dim not in setups:
            st = structure or ladder(dim)
            specs = [m if isinstance(m, MeasureSpec) else parse_measure(m, st) for m in measures]
            setups[dim] = (st, specs)
        return setups[dim]

    rows = [[] for _ in measures]
    worst = [0.0] * len(measures)
    witness: list = [None] * len(measures)
    for i in range(trials):
        dim = structure.dim if structure is not None else dims[i % len(dims)]
        st, specs = setup(dim)
        injected = hand_witness(st) if (i == 0 and inject_witness and cls != "tc") else None
        if injected is not None:
            rho, channel = injected
        else:
            rng = rng_for(seed, i)
            rho = sample_state(st.dim, rng, rank=int(rng.integers(1, st.dim + 1)))
            channel = sample_channel(cls, st, st, n_kraus, rng)
        out = apply(channel, rho.matrix)
        out = 0.5 * (out + dagger(out))
        out = out / np.trace(out).real
        for j, spec in enumerate(specs):
            before = spec(rho.matrix, st)
            after = spec(out, st)
            violation = max(0.0, after - before)
            rows[j].append((i, before, after, violation))
            worst[j] = max(worst[j], violation)
            if violation > tol and witness[j] is None:
                witness[j] = {
                    "trial": i,
                    "injected": injected is not None,
                    "state": state_to_json(rho.matrix),
                    "channel": channel.to_json(),
                    "before": before,
                    "after": after,
                }
    return [
        SweepReport(idents[j], cls, trials, int(seed), worst[j], tol, witness[j], rows[j])
        for j in range(len(measures))
    ]


# --- canonical counterexamples -------------------------------------------------


def measure_pm_channel() -> QuantumChannel:
    """rho -> |0><0| <+|rho|+> + |1><1| <-|rho|->, Kraus {|0><+|, |1><-|}."""
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    k0 = np.outer([1, 0], plus.conj())
    k1 = np.outer([0, 1], minus.conj())
    return QuantumChannel((k0.astype(complex), k1.astype(complex)))


def block_swap_channel(d: int = 2, i: int = 0, j: int = 1) -> QuantumChannel:
    return QuantumChannel((swap_unitary(d, i, j),))


@dataclass
class Check:
    name: str
    expected: object
    observed: object
    passed: bool
    detail: str = ""


def canonical_counterexamples(tol: float = 1e-9) -> list[Check]:
    """Deterministic witnesses for the strict inclusions and non-monotonicity claims."""
    checks: list[Check] = []
    qubit = build_structure([0.0, 1.0])
    qutrit = build_structure([0.0, 1.0, 2.0])

    def verdicts(rep):
        return (rep["tc"], rep["dc"], rep["ip"], rep["incoherent_given_kraus"])

    e = measure_pm_channel()
    rep = classify_channel(e, qubit, tol=tol)
    checks.append(Check("(a) measure-|+>/|-> channel: (TC, DC, IP, incoherent)", (False, False, True, True), verdicts(rep), verdicts(rep) == (False, False, True, True), f"violations {rep.violations}"))

    d_ch = dephasing_channel(qubit)
    d_after = compose(d_ch, e)
    d_before = compose(e, d_ch)
    lhs = fro(d_after.superop - e.superop)
    rhs = fro(d_before.superop - e.superop)
    checks.append(Check("(d) D o E = E", True, lhs <= tol, lhs <= tol, f"||D o E - E|| = {lhs:.3e}"))
    checks.append(Check("(d) E o D != E", True, rhs > tol, rhs > tol, f"||E o D - E|| = {rhs:.3e}"))

    swap = block_swap_channel(2)
    rep = classify_channel(swap, qubit, tol=tol)
    checks.append(Check("(b) block-swap unitary: (TC, DC, IP, incoherent)", (False, True, True, True), verdicts(rep), verdicts(rep) == (False, True, True, True), f"violations {rep.violations}"))

    rho, perm = hand_witness(qutrit)
    out = apply(perm, rho.matrix)
    rep = classify_channel(perm, qutrit, tol=tol)
    checks.append(Check("(c) swap 1<->2 on lambda=(0,1,2): (TC, DC, IP, incoherent)", (False, True, True, True), verdicts(rep), verdicts(rep) == (False, True, True, True)))
    for label, f, before_exp, after_exp in (
        ("wyd:0.5", lambda r: wyd_skew(r, 0.5, qutrit).value, 0.25, 1.0),
        ("fl", lambda r: commutator_norm(r, qutrit).value, 1.0, 2.0),
        ("mode:2", lambda r: mode_norm(r, 2.0, qutrit).value, 0.0, 0.5),
    ):
        b, a = f(rho.matrix), f(out)
        ok = abs(b - before_exp) <= tol and abs(a - after_exp) <= tol
        checks.append(Check(f"(c) {label} rises under a DC unitary", (before_exp, after_exp), (round(b, 12), round(a, 12)), ok))

    plus = np.full((2, 2), 0.5, dtype=complex)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)
    rep = classify_povm(Povm((plus, minus)), qubit, tol=tol)
    obs = (rep["tc"], rep["dc"], rep["ip"])
    checks.append(Check("POVM {|+><+|, |-><-|}: (TC, DC, IP)", (False, False, True), obs, obs == (False, False, True)))
    rep = classify_povm(Povm(tuple(qubit.projectors())), qubit, tol=tol)
    obs = (rep["tc"], rep["dc"], rep["ip"])
    checks.append(Check("POVM {Pi_l}: (TC, DC, IP)", (True, True, True), obs, obs == (True, True, True)))
    return checks


# --- duality (easy direction) --------------------------------------------------


@dataclass
class DualityReport:
    passed: bool
    max_residual: float
    map_residual: float
    grid: list


def default_grid(n: int = 16, period: float = 2 * math.pi) -> np.ndarray:
    return period * np.arange(n) / n


def duality_check(
    rho,
    sigma,
    s: StructureSpec,
    channel: QuantumChannel | None = None,
    trials: int = 0,
    seed: int = 0,
    grid=None,
    tol: float = 1e-8,
) -> DualityReport:
    """Check E(U_x rho U_x^dag) = U_x sigma U_x^dag on a grid of x, given E(rho) = sigma.

    Without ``channel``, the best of ``trials`` sampled TC channels (plus
    the identity and the dephasing map) in least-squares distance
    ||E(rho) - sigma|| is used; none within ``tol`` raises NoChannelSupplied.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    sigma = np.asarray(sigma, dtype=np.complex128)
    if channel is None:
        candidates = [QuantumChannel((np.eye(s.dim, dtype=complex),)), dephasing_channel(s)]
        candidates += [sample_channel("tc", s, s, 2, rng_for(seed, i)) for i in range(trials)]
        dist = [fro(apply(c, rho) - sigma) for c in candidates]
        best = int(np.argmin(dist))
        if dist[best] > tol:
            raise NoChannelSupplied(f"no candidate TC channel maps rho to sigma (best residual {dist[best]:.3e})")
        channel = candidates[best]
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    map_residual = fro(apply(channel, rho) - sigma)
    worst = 0.0
    for x in grid:
        lhs = apply(channel, translate(rho, x, s))
        rhs = translate(sigma, x, s)
        worst = max(worst, fro(lhs - rhs))
    return DualityReport(worst <= tol and map_residual <= tol, worst, map_residual, [float(x) for x in grid])
