"""Preferred-subspace structure: blocks, dephasing, modes and translations.

Everything is expressed in the eigenbasis of the generator(s), so a
structure is just one eigenvalue per basis index (per generator).
Entry ``(a, b)`` of an operator belongs to mode ``lambda_b - lambda_a``,
which is the phase convention ``U_x X U_x^dag = exp(i omega x) X`` for
``U_x = exp(-i x L)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, EmptyInput, InvalidDistribution, UnknownMode
from .opspace import as_matrix

Mode = Union[float, tuple]


def cluster_values(values: np.ndarray, tol: float) -> np.ndarray:
    """Label 1-D values so that values within ``tol`` share a label (transitive closure).

    Labels are assigned in ascending order of value.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    labels = np.empty(values.size, dtype=np.int64)
    current = -1
    prev = None
    for idx in order:
        v = values[idx]
        if prev is None or v - prev > tol:
            current += 1
        labels[idx] = current
        prev = v
    return labels


def _joint_labels(columns: Sequence[np.ndarray], tol: float) -> np.ndarray:
    """Joint cluster label over several value arrays (lexicographic in cluster order)."""
    per = [cluster_values(c, tol) for c in columns]
    if len(per) == 1:
        return per[0]
    stacked = np.stack(per, axis=1)
    _, inverse = np.unique(stacked, axis=0, return_inverse=True)
    return inverse.reshape(-1)


@dataclass(frozen=True, eq=False)
class StructureSpec:
    """One or more commuting generators, given by their eigenvalues per basis index."""

    generators: np.ndarray
    gap_tolerance: float = 1e-9

    def __post_init__(self):
        gens = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if gens.size == 0:
            raise EmptyInput("structure needs at least one eigenvalue")
        if not np.all(np.isfinite(gens)):
            raise ValueError("generator eigenvalues must be finite")
        gens.setflags(write=False)
        object.__setattr__(self, "generators", gens)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def n_generators(self) -> int:
        return self.generators.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the first generator."""
        return self.generators[0]

    def generator_matrix(self, which: int = 0) -> np.ndarray:
        return np.diag(self.generators[which]).astype(np.complex128)

    @cached_property
    def block_of(self) -> np.ndarray:
        """Block label of each basis index, blocks ordered by ascending eigenvalue tuple."""
        return _joint_labels(list(self.generators), self.gap_tolerance)

    @cached_property
    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.block_of == k) for k in range(int(self.block_of.max()) + 1)]

    @cached_property
    def block_sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    @cached_property
    def same_block(self) -> np.ndarray:
        """Boolean dim x dim mask of entries surviving dephasing."""
        b = self.block_of
        return b[:, None] == b[None, :]

    @cached_property
    def gaps(self) -> np.ndarray:
        """Array (A, dim, dim) with gaps[k, a, b] = lambda^k_b - lambda^k_a."""
        g = self.generators
        return g[:, None, :] - g[:, :, None]

    @cached_property
    def _mode_table(self):
        d = self.dim
        columns = [self.gaps[k].reshape(-1) for k in range(self.n_generators)]
        labels = _joint_labels(columns, self.gap_tolerance).reshape(d, d)
        n_modes = int(labels.max()) + 1
        # representative value per mode; zero mode is exactly 0, mirrored
        # clusters are exact negations of each other
        reps: list = [None] * n_modes
        zero_label = labels[0, 0]
        reps[zero_label] = tuple(0.0 for _ in range(self.n_generators))
        for lab in range(n_modes):
            if reps[lab] is not None:
                continue
            a_idx, b_idx = np.nonzero(labels == lab)
            mirror = labels[b_idx[0], a_idx[0]]
            vals = tuple(float(np.mean(self.gaps[k][labels == lab])) + 0.0 for k in range(self.n_generators))
            reps[lab] = vals
            if mirror != lab:
                reps[mirror] = tuple(-v + 0.0 for v in vals)
        order = sorted(range(n_modes), key=lambda lab: reps[lab])
        relabel = np.empty(n_modes, dtype=np.int64)
        relabel[order] = np.arange(n_modes)
        values = [reps[lab] for lab in order]
        return relabel[labels], values

    @property
    def mode_labels(self) -> np.ndarray:
        """dim x dim array: index into ``modes`` of each entry (a, b)."""
        return self._mode_table[0]

    @cached_property
    def modes(self) -> list:
        """Sorted mode values; floats for one generator, tuples otherwise."""
        vals = self._mode_table[1]
        if self.n_generators == 1:
            return [v[0] for v in vals]
        return list(vals)

    def mode_index(self, omega: Mode) -> int:
        target = np.atleast_1d(np.asarray(omega, dtype=float))
        if target.size != self.n_generators:
            raise UnknownMode(f"mode {omega!r} has {target.size} components, expected {self.n_generators}")
        for i, v in enumerate(self._mode_table[1]):
            if np.all(np.abs(np.asarray(v) - target) <= self.gap_tolerance):
                return i
        raise UnknownMode(f"{omega!r} is not a mode of this structure (modes: {self.modes})")

    def mode_mask(self, omega: Mode) -> np.ndarray:
        return self.mode_labels == self.mode_index(omega)

    def gap_mask(self, omega) -> np.ndarray:
        """Entries whose raw gap matches ``omega`` within tolerance.

        Unlike ``mode_mask`` this accepts values that are not modes of this
        structure (the mask is then empty); used when input and output
        structures differ.
        """
        target = np.atleast_1d(np.asarray(omega, dtype=float))
        return np.all(np.abs(self.gaps - target[:, None, None]) <= self.gap_tolerance, axis=0)

    def projectors(self) -> list[np.ndarray]:
        out = []
        for blk in self.blocks:
            p = np.zeros((self.dim, self.dim), dtype=np.complex128)
            p[blk, blk] = 1.0
            out.append(p)
        return out

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "generators": [list(map(float, g)) for g in self.generators],
            "gap_tolerance": self.gap_tolerance,
        }


def build_structure(eigenvalue_vectors, gap_tolerance: float = 1e-9) -> StructureSpec:
    """Build a structure from one eigenvalue vector or a list of them."""
    vecs = eigenvalue_vectors
    if vecs is None or len(vecs) == 0:
        raise EmptyInput("no eigenvalues given")
    if all(np.ndim(v) == 0 for v in vecs):
        vecs = [vecs]
    lengths = {len(v) for v in vecs}
    if len(lengths) != 1:
        raise DimensionMismatch(f"generator vectors have different lengths {sorted(lengths)}")
    if 0 in lengths:
        raise EmptyInput("empty generator vector")
    return StructureSpec(np.array(vecs, dtype=float), gap_tolerance)


def _check_square(x: np.ndarray, s: StructureSpec) -> np.ndarray:
    x = as_matrix(x)
    if x.shape != (s.dim, s.dim):
        raise DimensionMismatch(f"operator shape {x.shape} does not match structure dim {s.dim}")
    return x


def dephase(x, s: StructureSpec) -> np.ndarray:
    """Pinching onto the blocks: sum_l Pi_l X Pi_l."""
    x = _check_square(x, s)
    return np.where(s.same_block, x, 0)


def is_block_diagonal(x, s: StructureSpec, tol: float = 1e-9) -> bool:
    x = _check_square(x, s)
    return float(np.linalg.norm(x[~s.same_block])) <= tol


def mode_project(x, omega: Mode, s: StructureSpec) -> np.ndarray:
    """Component of X in mode omega; mode 0 is the dephased part."""
    x = _check_square(x, s)
    return np.where(s.mode_mask(omega), x, 0)


def mode_decomposition(x, s: StructureSpec) -> dict:
    x = _check_square(x, s)
    return {w: np.where(s.mode_labels == i, x, 0) for i, w in enumerate(s.modes)}


def translation_phases(s: StructureSpec, x) -> np.ndarray:
    """Entrywise factor exp(-i sum_k x_k (lambda^k_a - lambda^k_b)) = exp(i omega . x)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if xs.size == 1 and s.n_generators > 1:
        xs = np.repeat(xs, s.n_generators)
    if xs.size != s.n_generators:
        raise DimensionMismatch(f"{xs.size} translation parameters for {s.n_generators} generators")
    phase = np.tensordot(xs, s.gaps, axes=1)
    return np.exp(1j * phase)


def translate(x, shift, s: StructureSpec) -> np.ndarray:
    """U_x X U_x^dag with U_x = exp(-i x L), as a diagonal conjugation.

    For several generators ``shift`` is one parameter per generator (a
    scalar is applied collectively).
    """
    x = _check_square(x, s)
    return x * translation_phases(s, shift)


@dataclass(frozen=True, eq=False)
class TranslationDistribution:
    """Finitely many translation atoms x_j with weights w_j."""

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pos.ndim == 0 or w.ndim != 1 or pos.shape[0] != w.shape[0] or w.size == 0:
            raise InvalidDistribution("positions and weights must be non-empty and aligned")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(pos)):
            raise InvalidDistribution("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidDistribution(f"weights sum to {w.sum():.15g}, expected 1")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple]) -> "TranslationDistribution":
        atoms = list(atoms)
        return cls(np.array([a[0] for a in atoms], dtype=float), np.array([a[1] for a in atoms], dtype=float))

    @classmethod
    def point_mass(cls, x: float = 0.0) -> "TranslationDistribution":
        return cls(np.array([x]), np.array([1.0]))

    @classmethod
    def uniform_period(cls, n_atoms: int, period: float = 2 * math.pi) -> "TranslationDistribution":
        """n equally spaced atoms over one period.

        For an integer spectrum with largest gap below ``n_atoms`` this
        twirl equals the dephasing map.
        """
        if n_atoms < 1:
            raise InvalidDistribution("need at least one atom")
        return cls(period * np.arange(n_atoms) / n_atoms, np.full(n_atoms, 1.0 / n_atoms))

    def characteristic(self, omega) -> complex:
        """phi_p(omega) = sum_j w_j exp(i omega x_j)."""
        return complex(np.sum(self.weights * np.exp(1j * np.multiply.outer(np.asarray(omega, float), self.positions)), axis=-1))

    def is_uniform_for(self, s: StructureSpec, tol: float = 1e-12) -> bool:
        """True when the twirl coincides with dephasing on this structure."""
        gaps = s.gaps.sum(axis=0)
        phi = np.exp(1j * np.multiply.outer(gaps, self.positions)) @ self.weights
        target = np.where(s.same_block, 1.0, 0.0)
        return bool(np.all(np.abs(phi - target) <= tol))

    def to_json(self) -> dict:
        return {"atoms": [[float(x), float(w)] for x, w in zip(self.positions, self.weights)]}


def weighted_twirl(x, p: TranslationDistribution, s: StructureSpec) -> np.ndarray:
    """sum_j w_j U_{x_j} X U_{x_j}^dag; mode omega is scaled by phi_p(omega)."""
    x = _check_square(x, s)
    if not isinstance(p, TranslationDistribution):
        raise InvalidDistribution("expected a TranslationDistribution")
    # several generators are translated collectively by the same x
    factor = np.exp(1j * np.multiply.outer(s.gaps.sum(axis=0), p.positions)) @ p.weights
    return x * factor


def collective_generator(s_sys: StructureSpec, s_anc: StructureSpec, independent: bool = False) -> StructureSpec:
    """Structure of a system-ancilla composite.

    Collective: L = L_s (x) I + I (x) L_a. Independent: two generators
    L_s (x) I and I (x) L_a, whose joint blocks are products of blocks.
    """
    if s_sys.n_generators != 1 or s_anc.n_generators != 1:
        raise DimensionMismatch("composite construction needs single-generator structures")
    tol = max(s_sys.gap_tolerance, s_anc.gap_tolerance)
    ls = s_sys.eigenvalues
    la = s_anc.eigenvalues
    if independent:
        gens = [np.repeat(ls, la.size), np.tile(la, ls.size)]
        return StructureSpec(np.array(gens), tol)
    return StructureSpec((ls[:, None] + la[None, :]).reshape(1, -1), tol)


def structure_from_json(doc: dict) -> StructureSpec:
    from .errors import SchemaError

    try:
        dim = int(doc["dim"])
        gens = doc["generators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"structure JSON needs 'dim' and 'generators': {exc}") from None
    tol = float(doc.get("gap_tolerance", 1e-9))
    spec = build_structure(gens, tol)
    if spec.dim != dim:
        raise SchemaError(f"'dim' is {dim} but generators have length {spec.dim}")
    return spec
