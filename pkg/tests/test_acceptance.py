"""Acceptance criteria 1-12.

Each test records one PASS/FAIL line through the ``criterion`` fixture;
the lines are repeated in the pytest terminal summary. Oracles are built
from numpy/scipy primitives (``expm``, ``logm``, ``eigvalsh``, nuclear
norms) rather than from the package's own helpers.
"""
from __future__ import annotations

import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.linalg import expm, logm

from coherence_kit import classify, harness, measures, quantum, structure

GRID = 2 * math.pi * np.arange(16) / 16


def random_structure(rng, d):
    """Spectrum with random degeneracies, half integer and half irrational spacing."""
    levels = rng.integers(0, max(2, d - 1), size=d).astype(float)
    if rng.random() < 0.5:
        levels = levels * math.sqrt(2)
    return structure.build_structure(levels)


def ginibre(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_state(rng, d):
    g = ginibre(rng, d)
    m = g @ g.conj().T
    return m / np.trace(m).real


def oracle_dephase(x, lam):
    out = np.zeros_like(x)
    for v in np.unique(lam):
        p = np.diag((np.abs(lam - v) < 1e-9).astype(float))
        out += p @ x @ p
    return out


def entropy(rho):
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


# --- 1 ---------------------------------------------------------------------


def test_c01_mode_algebra(criterion):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(2, 7))
        s = random_structure(rng, d)
        lam = s.eigenvalues
        x = ginibre(rng, d)
        parts = {w: structure.mode_project(x, w, s) for w in s.modes}
        worst = max(worst, np.abs(sum(parts.values()) - x).max())
        for w in s.modes:
            pw = parts[w]
            for w2 in s.modes:
                twice = structure.mode_project(pw, w2, s)
                worst = max(worst, np.abs(twice - (pw if w2 == w else 0)).max())
        worst = max(worst, np.abs(parts[0.0] - oracle_dephase(x, lam)).max())
        for t in GRID:
            u = expm(-1j * t * np.diag(lam))
            for w, pw in parts.items():
                worst = max(worst, np.abs(u @ pw @ u.conj().T - np.exp(1j * w * t) * pw).max())
    criterion(1, "mode algebra on 200 operators", worst <= 1e-10, f"max residual {worst:.2e}")


# --- 2 ---------------------------------------------------------------------


def test_c02_gamma_forms(criterion):
    rng = np.random.default_rng(202)
    worst = 0.0
    for i in range(500):
        d = 2 + i % 5
        s = random_structure(rng, d)
        rho = random_state(rng, d)
        d_rho = oracle_dephase(rho, s.eigenvalues)
        entropic = entropy(d_rho) - entropy(rho)
        relative = float(np.real(np.trace(rho @ (logm(rho) - logm(d_rho)))))
        value = measures.gamma(rho, s).value
        worst = max(worst, abs(entropic - relative), abs(value - entropic))
    plus = np.full((2, 2), 0.5)
    g_plus = measures.gamma(plus, harness.ladder(2)).value
    ok = worst <= 1e-8 and abs(g_plus - math.log(2)) <= 1e-10
    criterion(2, "Gamma forms agree; Gamma(|+>) = ln 2", ok, f"max gap {worst:.2e}, Gamma(|+>) - ln2 = {g_plus - math.log(2):.1e}")


# --- 3 ---------------------------------------------------------------------


def test_c03_inclusion_chain(criterion):
    contradictions = 0
    membership_misses = 0
    for cls in harness.CHANNEL_CLASSES:
        for i in range(1000):
            s = harness.ladder(2 + i % 5) if i % 2 else structure.build_structure([0, 0, 1, 2][: 2 + i % 3])
            ch = harness.sample_channel(cls, s, s, 1 + i % 3, harness.rng_for(303, i))
            v = {c: getattr(classify, f"is_{c}")(ch, s, s, 1e-9)[0] for c in ("tc", "dc", "ip")}
            contradictions += (v["tc"] and not v["dc"]) + (v["dc"] and not v["ip"])
            if cls in v and not v[cls]:
                membership_misses += 1
    ok = contradictions == 0 and membership_misses == 0
    criterion(3, "TC => DC => IP over 4000 sampled channels", ok, f"{contradictions} contradictions, {membership_misses} misses")


# --- 4 ---------------------------------------------------------------------


def test_c04_strictness_witnesses(criterion):
    s2 = harness.ladder(2)
    rep = classify.classify_channel(harness.measure_pm_channel(), s2)
    pm = tuple(rep[c] for c in ("tc", "dc", "ip", "incoherent_given_kraus"))
    swap = np.array([[0, 1], [1, 0]], dtype=complex)
    urep = classify.classify_unitary(swap, s2)
    swapv = tuple(urep[c] for c in ("tc", "dc", "ip", "incoherent_given_kraus"))
    crep = classify.classify_channel(quantum.unitary_channel(swap), s2)
    swapc = tuple(crep[c] for c in ("tc", "dc", "ip", "incoherent_given_kraus"))
    ok = pm == (False, False, True, True) and swapv == swapc == (False, True, True, True)
    criterion(4, "measure-|+-> channel (F,F,T,T); block swap (F,T,T,T)", ok, f"pm channel={pm} swap={swapv}")


# --- 5 ---------------------------------------------------------------------


def test_c05_mode_kraus(criterion):
    worst_mode = worst_rec = 0.0
    for i in range(100):
        rng = harness.rng_for(505, i)
        s = random_structure(rng, int(rng.integers(2, 6)))
        ch = harness.sample_channel("tc", s, s, int(rng.integers(1, 4)), rng)
        pieces = classify.extract_mode_kraus(ch, s, s, 1e-8)
        for omega, k in pieces:
            worst_mode = max(worst_mode, classify.operator_mode_residual(k, omega, s, s))
            for t in GRID[:4]:
                u = expm(-1j * t * np.diag(s.eigenvalues))
                worst_mode = max(worst_mode, np.abs(u @ k @ u.conj().T - np.exp(1j * omega * t) * k).max())
        rebuilt = sum(np.kron(k, k.conj()) for _, k in pieces)
        worst_rec = max(worst_rec, np.linalg.norm(rebuilt - ch.superop))
    ok = worst_mode <= 1e-8 and worst_rec <= 1e-8
    criterion(5, "mode-homogeneous Kraus extraction on 100 TC channels", ok, f"mode {worst_mode:.1e}, rebuild {worst_rec:.1e}")


# --- 6 ---------------------------------------------------------------------


def _dilation(seed, independent):
    rng = harness.rng_for(606, seed, int(independent))
    ds, da = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    s = harness.ladder(ds)
    anc = structure.build_structure(rng.integers(0, 2, size=da).astype(float))
    comp = structure.collective_generator(s, anc, independent=independent)
    v = harness.sample_block_unitary(comp, rng)
    if independent:
        v = harness.sample_block_permutation(comp, rng) @ v
    sigma = harness.sample_incoherent_state(anc, rng).matrix
    e = structure.dephase(harness.sample_state(da, rng).matrix, anc)
    e = e / np.linalg.eigvalsh(e).max()
    return s, quantum.build_dilated_channel(sigma, v, e, (ds, da))


def test_c06_dilations(criterion):
    tc_fail = sum(not classify.is_tc(ch, s, s, 1e-8)[0] for s, ch in (_dilation(i, False) for i in range(50)))
    dc_fail = sum(not classify.is_dc(ch, s, s, 1e-8)[0] for s, ch in (_dilation(i, True) for i in range(50)))
    ok = tc_fail == 0 and dc_fail == 0
    criterion(6, "50 TC and 50 DC dilations land in their class", ok, f"TC failures {tc_fail}, DC failures {dc_fail}")


# --- 7 ---------------------------------------------------------------------

POSITIVE_IP = ["gamma", "gamma_q:0.25", "gamma_q:0.5", "gamma_q:0.75", "renyi:0.3", "renyi:0.5", "renyi:0.7", "r"]
POSITIVE_TC = ["wyd:0.3", "wyd:0.5", "wyd:0.7", "fl", "mode:1", "mode:2", "gamma_p", "rp"]


def test_c07_monotonicity_positive(criterion):
    ip = harness.monotonicity_sweeps(POSITIVE_IP, "ip", 1000, d=[2, 3, 4, 5, 6], seed=707)
    tc = harness.monotonicity_sweeps(POSITIVE_TC, "tc", 1000, d=[3, 4, 5, 6], seed=708)
    bad = [f"{r.measure}/{r.channel_class}={r.max_violation:.2e}" for r in ip + tc if r.max_violation > 1e-8]
    worst = max(r.max_violation for r in ip + tc)
    criterion(7, "no monotonicity violations (IP: 8 measures, TC: 8 measures, 1000 trials each)", not bad, ", ".join(bad) or f"max {worst:.1e}")


# --- 8 ---------------------------------------------------------------------


def test_c08_monotonicity_negative(criterion):
    s = structure.build_structure([0.0, 1.0, 2.0])
    psi = np.array([1, 1, 0]) / math.sqrt(2)
    rho = np.outer(psi, psi)
    perm = np.eye(3)[[0, 2, 1]]
    out = perm @ rho @ perm.T
    observed = {
        "wyd:0.5": (measures.wyd_skew(rho, 0.5, s).value, measures.wyd_skew(out, 0.5, s).value),
        "fl": (measures.commutator_norm(rho, s).value, measures.commutator_norm(out, s).value),
        "mode:2": (measures.mode_norm(rho, 2.0, s).value, measures.mode_norm(out, 2.0, s).value),
    }
    expected = {"wyd:0.5": (0.25, 1.0), "fl": (1.0, 2.0), "mode:2": (0.0, 0.5)}
    exact = all(abs(observed[k][i] - expected[k][i]) <= 1e-9 for k in expected for i in (0, 1))
    reports = harness.monotonicity_sweeps(list(expected), "dc", 5, structure=s, seed=808)
    flagged = all(r.violated and r.witness["trial"] == 0 for r in reports)
    criterion(8, "swap witness raises wyd, fl, mode:2 and the DC sweep flags it", exact and flagged, f"observed {observed}")


# --- 9 ---------------------------------------------------------------------


def test_c09_povms(criterion):
    s = harness.ladder(2)
    plus = np.full((2, 2), 0.5, dtype=complex)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)
    pm = classify.classify_povm(quantum.Povm((quantum.Effect(plus), quantum.Effect(minus))), s)
    proj = classify.classify_povm(quantum.Povm(tuple(quantum.Effect(p) for p in s.projectors())), s)
    got = ((pm["tc"], pm["dc"], pm["ip"]), (proj["tc"], proj["dc"], proj["ip"]))
    criterion(9, "{|+>,|->} fails TC/DC, passes IP; {Pi_l} passes all", got == ((False, False, True), (True, True, True)), str(got))


# --- 10 --------------------------------------------------------------------


def test_c10_nmr_sandwich(criterion):
    rng = np.random.default_rng(1010)
    slack = math.inf
    mismatch = 0.0
    for i in range(300):
        d = 2 + i % 7
        s = random_structure(rng, d)
        rho = random_state(rng, d)
        lam = s.eigenvalues
        gap = lam[None, :] - lam[:, None]
        for w in s.modes:
            comp = np.where(np.abs(gap - w) <= 1e-9, rho, 0)
            two = np.linalg.norm(comp, "fro")
            one = np.linalg.norm(comp, "nuc")
            slack = min(slack, one - two, math.sqrt(d) * two - one)
            mismatch = max(mismatch, np.abs(np.array(measures.nmr_bounds(rho, w, s)) - [two, one, math.sqrt(d) * two]).max())
    ok = slack >= -1e-10 and mismatch <= 1e-10
    criterion(10, "NMR sandwich on 300 states, all modes", ok, f"min slack {slack:.2e}, library vs oracle {mismatch:.1e}")


# --- 11 --------------------------------------------------------------------


def test_c11_duality(criterion):
    worst = 0.0
    for i in range(50):
        rng = harness.rng_for(1111, i)
        s = random_structure(rng, int(rng.integers(2, 6)))
        ch = harness.sample_channel("tc", s, s, 2, rng)
        rho = harness.sample_state(s.dim, rng).matrix
        sigma = quantum.apply(ch, rho)
        lam = s.eigenvalues
        for t in GRID:
            u = expm(-1j * t * np.diag(lam))
            worst = max(worst, np.abs(quantum.apply(ch, u @ rho @ u.conj().T) - u @ sigma @ u.conj().T).max())
        rep = harness.duality_check(rho, sigma, s, channel=ch, grid=GRID)
        worst = max(worst, rep.max_residual)
    s2 = harness.ladder(2)
    plus = np.full((2, 2), 0.5, dtype=complex)
    neg = harness.duality_check(plus, quantum.apply(harness.measure_pm_channel(), plus), s2, channel=harness.measure_pm_channel(), grid=GRID)
    ok = worst <= 1e-8 and not neg.passed
    criterion(11, "TC channels commute with U_x on 16 points; non-TC control fails", ok, f"max residual {worst:.1e}, control residual {neg.max_residual:.2f}")


# --- 12 --------------------------------------------------------------------


def test_c12_reproducible_csv(criterion, tmp_path):
    cmd = [sys.executable, "-m", "coherence_kit.cli", "sweep", "--measure", "gamma_q:0.5", "--class", "ip", "--trials", "40", "--dim", "4", "--seed", "12"]
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        subprocess.run(cmd + ["--output", str(path)], check=True)
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1] and outs[0].count(b"\n") == 41
    criterion(12, "sweep CSV byte-identical across two runs", ok, f"{len(outs[0])} bytes")
