import math

import numpy as np
import pytest
from scipy.linalg import expm

from coherence_kit import classify, harness, quantum, structure
from coherence_kit.errors import InconsistentVerdicts, NotTC
from coherence_kit.quantum import QuantumChannel

PLUS = np.array([1, 1]) / math.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def grid_tc_violation(ch, s, seed=0):
    """max_x ||E(U_x X U_x^dag) - U_x E(X) U_x^dag|| for a random probe X."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(s.dim, s.dim)) + 1j * rng.normal(size=(s.dim, s.dim))
    worst = 0.0
    for t in np.linspace(0, 2 * math.pi, 13)[:-1] * 1.37:
        u = expm(-1j * t * np.diag(s.eigenvalues))
        worst = max(worst, np.abs(ch(u @ x @ u.conj().T) - u @ ch(x) @ u.conj().T).max())
    return worst


def dc_violation_oracle(ch, s):
    d = quantum.dephasing_channel(s)
    return np.abs(quantum.compose(d, ch).superop - quantum.compose(ch, d).superop).max()


def ip_violation_oracle(ch, s, n=5):
    worst = 0.0
    for i in range(n):
        rho = harness.sample_incoherent_state(s, 100 + i).matrix
        out = ch(rho)
        worst = max(worst, np.abs(out - structure.dephase(out, s)).max())
    return worst


@pytest.mark.parametrize("cls", harness.CHANNEL_CLASSES)
def test_classifiers_agree_with_oracles(cls):
    for i in range(40):
        s = harness.ladder(2 + i % 4) if i % 3 else structure.build_structure([0, 0, 1, 1.5][: 2 + i % 3])
        ch = harness.sample_channel(cls, s, s, 2, harness.rng_for(17, i))
        assert classify.is_tc(ch, s)[0] == (grid_tc_violation(ch, s) < 1e-9)
        assert classify.is_dc(ch, s)[0] == (dc_violation_oracle(ch, s) < 1e-9)
        assert classify.is_ip(ch, s)[0] == (ip_violation_oracle(ch, s) < 1e-9)


def test_is_tc_examples():
    s = structure.build_structure([0, 0, 1])
    assert classify.is_tc(quantum.dephasing_channel(s), s)[0]
    v = harness.sample_block_unitary(s, 3)
    assert classify.is_tc(quantum.unitary_channel(v), s)[0]
    swap = harness.swap_unitary(3, 1, 2)
    assert not classify.is_tc(quantum.unitary_channel(swap), s)[0]


def test_dc_ip_examples():
    s = harness.ladder(2)
    pm = harness.measure_pm_channel()
    swap = quantum.unitary_channel(harness.swap_unitary(2, 0, 1))
    assert classify.is_dc(swap, s)[0] and not classify.is_dc(pm, s)[0]
    assert classify.is_ip(pm, s)[0]
    povm = harness.sample_povm(2, 3, 1)
    mp = harness.measure_and_prepare(povm, [np.diag([1.0, 0]), np.diag([0.2, 0.8]), np.eye(2) / 2], s)
    assert classify.is_ip(mp, s)[0]


def test_incoherent_kraus_examples():
    s = harness.ladder(2)
    assert classify.is_incoherent_kraus(s.projectors(), s)[0]
    assert classify.is_incoherent_kraus(harness.measure_pm_channel().kraus, s)[0]
    k = np.diag([1.0, 0.0]) + np.outer(PLUS, [0, 1])
    ok, v = classify.is_incoherent_kraus([k], s)
    assert not ok and v == pytest.approx(1 / math.sqrt(2))


def test_classify_unitary_examples():
    s = structure.build_structure([0, 0, 1])
    v = np.exp(0.4j) * harness.sample_block_unitary(s, 0)
    assert classify.classify_unitary(v, s)["tc"]
    perm = harness.swap_unitary(2, 0, 1)
    rep = classify.classify_unitary(perm, harness.ladder(2))
    assert (rep["tc"], rep["dc"], rep["ip"]) == (False, True, True)
    rep = classify.classify_unitary(HADAMARD, harness.ladder(2))
    assert not any(rep[c] for c in ("tc", "dc", "ip"))


def test_unitary_dc_equals_ip_against_channel_classifier():
    agree = 0
    for i in range(500):
        s = [harness.ladder(3), structure.build_structure([0, 0, 1, 1]), harness.ladder(2)][i % 3]
        rng = harness.rng_for(42, i)
        u = harness.sample_block_permutation(s, rng) if i % 2 else harness.sample_unitary(s.dim, rng)
        fast = classify.classify_unitary(u, s)
        full = classify.classify_channel(quantum.unitary_channel(u), s)
        assert fast["dc"] == fast["ip"] == full["dc"] == full["ip"]
        assert fast["tc"] == full["tc"]
        agree += fast["dc"]
    assert 0 < agree < 500


def test_tc_residual_sandwich_with_superop_commutator():
    for i in range(30):
        s = harness.ladder(2 + i % 3)
        cls = "tc" if i % 2 else "dc"
        ch = harness.sample_channel(cls, s, s, 2, harness.rng_for(5, i))
        r = classify.tc_residuals(ch, s)
        c = classify.tc_superop_commutator(ch, s)
        assert r.max() <= c + 1e-12
        assert c <= math.sqrt(np.sum(r**2)) + 1e-12
        assert (r.max() <= 1e-9) == (c <= 1e-9)


@pytest.mark.parametrize("cls", ["tc", "dc", "ip"])
def test_composition_closure(cls):
    for i in range(10):
        s = harness.ladder(2 + i % 2)
        a = harness.sample_channel(cls, s, s, 2, harness.rng_for(61, i))
        b = harness.sample_channel(cls, s, s, 2, harness.rng_for(62, i))
        assert getattr(classify, f"is_{cls}")(quantum.compose(a, b), s)[0]
        comp = structure.collective_generator(s, s, independent=cls != "tc")
        assert getattr(classify, f"is_{cls}")(quantum.tensor_channel(a, b), comp)[0]


def test_extract_mode_kraus_examples():
    s = harness.ladder(2)
    pieces = classify.extract_mode_kraus(quantum.dephasing_channel(s), s)
    assert sorted(w for w, _ in pieces) == [0.0, 0.0]
    projs = sorted((np.abs(k) ** 2 for _, k in pieces), key=lambda m: m[0, 0])
    np.testing.assert_allclose(projs, [np.diag([0.0, 1]), np.diag([1.0, 0])], atol=1e-14)
    su = structure.build_structure([0, 0, 1])
    v = harness.sample_block_unitary(su, 1)
    (w, k), = classify.extract_mode_kraus(quantum.unitary_channel(v), su)
    assert w == 0.0
    np.testing.assert_allclose(np.abs(np.vdot(k, v)), 3, atol=1e-12)
    with pytest.raises(NotTC):
        classify.extract_mode_kraus(harness.measure_pm_channel(), s)


def test_extract_mode_kraus_nonzero_modes():
    s = harness.ladder(3)
    lower = np.diag([1.0, 1.0], -1)  # |a+1><a|, gap lambda_in - lambda_out = -1
    k0 = lower * 0.6
    m = k0.conj().T @ k0
    k1 = np.diag(np.sqrt(1 - np.diag(m).real))
    ch = QuantumChannel((k0.astype(complex), k1.astype(complex)))
    modes = sorted(w for w, _ in classify.extract_mode_kraus(ch, s))
    assert modes == [-1.0, 0.0]


def test_report_consistency_guard():
    with pytest.raises(InconsistentVerdicts):
        classify.ClassificationReport({"tc": True, "dc": False, "ip": True}, {}, 1e-9)


def test_povm_classification():
    s = structure.build_structure([0, 0, 1])
    for i in range(20):
        assert classify.classify_povm(harness.sample_povm(3, 3, i), s)["ip"]
    incoherent = quantum.Povm(tuple(quantum.Effect(p) for p in s.projectors()))
    assert classify.classify_povm(incoherent, s)["dc"]
