"""Coherence measures, each tagged with the classes it is claimed monotone under.

The tags are data, not guarantees: ``harness.monotonicity_sweep`` tests
them. All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import opspace
from .errors import CoherenceKitError, ParameterOutOfRange, UnknownMode
from .opspace import as_matrix, dagger, fro, trace_norm, von_neumann_entropy
from .structure import (
    StructureSpec,
    TranslationDistribution,
    dephase,
    mode_project,
    weighted_twirl,
)

TC = "TC"
DC = "DC"
IP = "IP"


@dataclass(frozen=True)
class MeasureValue:
    name: str
    value: float
    parameters: dict = field(default_factory=dict)
    monotone_classes: frozenset = frozenset()

    def __float__(self) -> float:
        return self.value

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "parameters": {k: _jsonable(v) for k, v in self.parameters.items()},
            "monotone_classes": sorted(self.monotone_classes),
        }


def _jsonable(v):
    if isinstance(v, TranslationDistribution):
        return v.to_json()
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _state(rho) -> np.ndarray:
    rho = opspace.check_state(rho)
    return 0.5 * (rho + dagger(rho))


def _open_unit(name: str, s: float):
    if not 0.0 < s < 1.0:
        raise ParameterOutOfRange(f"{name} must lie in (0, 1), got {s}")


def gamma(rho, s: StructureSpec) -> MeasureValue:
    """S(D(rho)) - S(rho); cross-checked against S(rho || D(rho))."""
    rho = _state(rho)
    d_rho = dephase(rho, s)
    value = von_neumann_entropy(d_rho) - von_neumann_entropy(rho)
    rel = opspace.relative_entropy(rho, d_rho)
    if abs(rel - value) > 1e-8:
        raise CoherenceKitError(f"Gamma forms disagree: {value!r} vs relative entropy {rel!r}")
    return MeasureValue("gamma", value, {}, frozenset({TC, DC, IP}))


def gamma_p(rho, p: TranslationDistribution, s: StructureSpec) -> MeasureValue:
    """S(D_p(rho)) - S(rho) for a weighted twirl D_p."""
    rho = _state(rho)
    value = von_neumann_entropy(weighted_twirl(rho, p, s)) - von_neumann_entropy(rho)
    classes = {TC, DC, IP} if p.is_uniform_for(s) else {TC}
    return MeasureValue("gamma_p", value, {"p": p}, frozenset(classes))


def gamma_q(rho, q: float, s: StructureSpec) -> MeasureValue:
    """Holevo quantity of the encoding {q: rho, 1-q: D(rho)}."""
    if not 0.0 <= q <= 1.0:
        raise ParameterOutOfRange(f"q must lie in [0, 1], got {q}")
    rho = _state(rho)
    d_rho = dephase(rho, s)
    value = (
        von_neumann_entropy(q * rho + (1 - q) * d_rho)
        - q * von_neumann_entropy(rho)
        - (1 - q) * von_neumann_entropy(d_rho)
    )
    return MeasureValue("gamma_q", value, {"q": q}, frozenset({TC, DC}))


def wyd_skew(rho, skew: float, s: StructureSpec, generator: int = 0) -> MeasureValue:
    """Wigner-Yanase-Dyson skew information tr(rho L^2) - tr(rho^s L rho^(1-s) L)."""
    _open_unit("s", skew)
    rho = _state(rho)
    lam = s.generators[generator]
    l2 = np.sum(np.real(np.diag(rho)) * lam**2)
    a = opspace.matrix_power(rho, skew)
    b = opspace.matrix_power(rho, 1.0 - skew)
    # tr(A L B L) = sum_ij A_ij lam_j B_ji lam_i
    cross = np.real(np.sum(a * lam[None, :] * b.T * lam[:, None]))
    return MeasureValue("wyd", float(l2 - cross), {"s": skew}, frozenset({TC}))


def renyi_dc(rho, skew: float, s: StructureSpec) -> MeasureValue:
    """(1/(s-1)) ln tr(rho^s D(rho)^(1-s))."""
    _open_unit("s", skew)
    rho = _state(rho)
    d_rho = dephase(rho, s)
    overlap = np.real(np.trace(opspace.matrix_power(rho, skew) @ opspace.matrix_power(d_rho, 1.0 - skew)))
    if overlap <= 0:
        raise CoherenceKitError("rho is not supported inside the support of D(rho)")
    value = math.log(overlap) / (skew - 1.0)
    return MeasureValue("renyi", value, {"s": skew}, frozenset({TC, DC}))


def commutator_norm(rho, s: StructureSpec, generator: int = 0) -> MeasureValue:
    """||[rho, L]||_1."""
    rho = _state(rho)
    lam = s.generators[generator]
    comm = rho * lam[None, :] - lam[:, None] * rho
    # i[rho, L] is Hermitian; same singular values
    value = trace_norm(1j * comm)
    eig = opspace.herm_eig(rho)
    if abs(eig.eigenvalues[-1] - 1.0) <= 1e-10:
        expected = 2.0 * math.sqrt(variance(eig.eigenvectors[:, -1], s, generator))
        if abs(expected - value) > 1e-8:
            raise CoherenceKitError(f"pure-state F_L {value!r} differs from 2 sqrt(Var L) = {expected!r}")
    return MeasureValue("fl", value, {}, frozenset({TC}))


def twirl_distance(rho, p: TranslationDistribution | None, s: StructureSpec) -> MeasureValue:
    """||rho - D_p(rho)||_1; ``p=None`` means the uniform twirl, i.e. D."""
    rho = _state(rho)
    if p is None:
        diff = rho - dephase(rho, s)
        return MeasureValue("r", trace_norm(diff), {}, frozenset({TC, DC}))
    diff = rho - weighted_twirl(rho, p, s)
    classes = {TC, DC} if p.is_uniform_for(s) else {TC}
    return MeasureValue("rp", trace_norm(diff), {"p": p}, frozenset(classes))


def mode_norm(rho, omega, s: StructureSpec) -> MeasureValue:
    """||P^(omega)(rho)||_1; constant (= 1) for omega = 0."""
    rho = _state(rho)
    comp = mode_project(rho, omega, s)
    return MeasureValue("mode", trace_norm(comp), {"omega": omega}, frozenset({TC}))


def linear_mode_measure(rho, coefficients: Mapping, s: StructureSpec) -> MeasureValue:
    """||sum_w c_w P^(w)(rho)||_1 for complex coefficients indexed by mode."""
    rho = _state(rho)
    total = np.zeros_like(rho)
    coeffs = {}
    for omega, c in coefficients.items():
        idx = s.mode_index(omega)
        total = total + complex(c) * np.where(s.mode_labels == idx, rho, 0)
        coeffs[s.modes[idx]] = complex(c)
    value = trace_norm(total)
    zero = s.modes[int(s.mode_labels[0, 0])]
    classes = {TC}
    # c = indicator(w != 0) reproduces ||rho - D(rho)||_1
    if all(coeffs.get(w, 0.0) == (0.0 if w == zero else 1.0) for w in s.modes):
        classes.add(DC)
    return MeasureValue("linmode", value, {"coefficients": coeffs}, frozenset(classes))


def nmr_bounds(rho, k, s: StructureSpec) -> tuple[float, float, float]:
    """(||P^(k) rho||_2, ||P^(k) rho||_1, sqrt(d) ||P^(k) rho||_2)."""
    rho = _state(rho)
    comp = mode_project(rho, k, s)
    two = fro(comp)
    one = trace_norm(comp)
    upper = math.sqrt(s.dim) * two
    if not (two - one <= 1e-10 and one - upper <= 1e-10):
        raise CoherenceKitError(f"NMR sandwich violated: {two} <= {one} <= {upper}")
    return two, one, upper


def variance(psi, s: StructureSpec, generator: int = 0) -> float:
    """<L^2> - <L>^2 for a state vector."""
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    prob = np.abs(psi) ** 2
    lam = s.generators[generator]
    return float(prob @ lam**2 - (prob @ lam) ** 2)


def quantum_fluctuations(rho, s: StructureSpec, n_nodes: int = 32) -> float:
    """Integral over s in (0, 1) of the WYD skew information, Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    xs = 0.5 * (nodes + 1.0)
    return float(0.5 * sum(w * wyd_skew(rho, x, s).value for x, w in zip(xs, weights)))


# --- measure identifiers -----------------------------------------------------


@dataclass(frozen=True)
class MeasureSpec:
    """A parsed measure identifier bound to its parameters."""

    ident: str
    func: Callable
    monotone_classes: frozenset

    def __call__(self, rho, s: StructureSpec) -> float:
        return self.func(rho, s).value


def _default_nonuniform(s: StructureSpec) -> TranslationDistribution:
    return TranslationDistribution.from_atoms([(0.0, 0.5), (0.7, 0.3), (1.9, 0.2)])


def parse_measure(ident: str, s: StructureSpec, p: TranslationDistribution | None = None) -> MeasureSpec:
    """Resolve a CLI identifier such as ``gamma_q:0.25`` or ``mode:2``.

    ``gamma_p`` and ``rp`` use ``p`` when given, otherwise a fixed
    three-atom nonuniform distribution.
    """
    name, _, arg = ident.partition(":")
    name = name.strip().lower()
    if name == "gamma":
        return MeasureSpec(ident, lambda r, st: gamma(r, st), frozenset({TC, DC, IP}))
    if name == "gamma_p":
        dist = p or _default_nonuniform(s)
        return MeasureSpec(ident, lambda r, st: gamma_p(r, dist, st), gamma_p(np.eye(s.dim) / s.dim, dist, s).monotone_classes)
    if name == "gamma_q":
        q = float(arg)
        if not 0.0 <= q <= 1.0:
            raise ParameterOutOfRange(f"q must lie in [0, 1], got {q}")
        return MeasureSpec(ident, lambda r, st: gamma_q(r, q, st), frozenset({TC, DC}))
    if name == "wyd":
        x = float(arg)
        _open_unit("s", x)
        return MeasureSpec(ident, lambda r, st: wyd_skew(r, x, st), frozenset({TC}))
    if name == "renyi":
        x = float(arg)
        _open_unit("s", x)
        return MeasureSpec(ident, lambda r, st: renyi_dc(r, x, st), frozenset({TC, DC}))
    if name == "fl":
        return MeasureSpec(ident, lambda r, st: commutator_norm(r, st), frozenset({TC}))
    if name == "r":
        return MeasureSpec(ident, lambda r, st: twirl_distance(r, None, st), frozenset({TC, DC}))
    if name == "rp":
        dist = p or _default_nonuniform(s)
        classes = frozenset({TC, DC}) if dist.is_uniform_for(s) else frozenset({TC})
        return MeasureSpec(ident, lambda r, st: twirl_distance(r, dist, st), classes)
    if name == "mode":
        w = _parse_mode(arg)
        s.mode_index(w)
        return MeasureSpec(ident, lambda r, st: mode_norm(r, w, st), frozenset({TC}))
    if name == "nmr":
        w = _parse_mode(arg)
        s.mode_index(w)
        return MeasureSpec(ident, lambda r, st: MeasureValue("nmr", nmr_bounds(r, w, st)[0]), frozenset({TC}))
    if name == "linmode":
        raise ValueError("linmode needs a coefficient file; use linmode_from_doc")
    raise ValueError(f"unknown measure identifier {ident!r}")


def _parse_mode(arg: str):
    if not arg:
        raise UnknownMode("mode identifier needs a value, e.g. mode:1")
    parts = [float(x) for x in arg.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def linmode_from_doc(doc, s: StructureSpec) -> MeasureSpec:
    """Coefficients JSON: {"coefficients": [[omega, c], ...]} with c a number or [re, im]."""
    coeffs = {}
    for omega, c in doc["coefficients"]:
        w = tuple(omega) if isinstance(omega, list) else float(omega)
        coeffs[w] = complex(c[0], c[1]) if isinstance(c, list) else complex(c)
    probe = linear_mode_measure(np.eye(s.dim) / s.dim, coeffs, s)
    return MeasureSpec("linmode", lambda r, st: linear_mode_measure(r, coeffs, st), probe.monotone_classes)
