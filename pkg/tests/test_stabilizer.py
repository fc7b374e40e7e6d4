"""Stabilizer tableau simulator against an independent dense oracle.

The dense reference below applies gate matrices to full statevectors and
measures entropy through singular values, sharing no code with the
tableau implementation.
"""

import numpy as np
import pytest

from tnkit import stabilizer as stab

H2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
S2 = np.diag([1.0, 1.0j])
CNOT4 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                 dtype=complex)
SWAP4 = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
                 dtype=complex)
XX4 = (np.eye(4) - 1j * np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]])) \
    / np.sqrt(2)


def apply_1q(psi, n, q, m):
    t = psi.reshape((2,) * n)
    t = np.moveaxis(np.tensordot(m, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def apply_2q(psi, n, i, j, m):
    t = np.moveaxis(psi.reshape((2,) * n), (i, j), (0, 1))
    t = (m @ t.reshape(4, -1)).reshape((2, 2) + (2,) * (n - 2))
    return np.moveaxis(t, (0, 1), (i, j)).reshape(-1)


def dense_entropy(psi, n, region):
    axes = sorted(region)
    rest = [ax for ax in range(n) if ax not in axes]
    mat = np.transpose(psi.reshape((2,) * n), axes + rest)
    sv = np.linalg.svd(mat.reshape(2 ** len(axes), -1), compute_uv=False)
    probs = sv[sv > 1e-12] ** 2
    return float(-np.sum(probs * np.log2(probs)))


GATES = [
    ("h", 1, H2, stab.apply_h),
    ("s", 1, S2, stab.apply_s),
    ("cnot", 2, CNOT4, stab.apply_cnot),
    ("swap", 2, SWAP4, stab.apply_swap),
    ("xx", 2, XX4, stab.apply_xx_rotation),
]


def random_circuit(rng, n, depth):
    ops = []
    for _ in range(depth):
        name, arity, mat, fn = GATES[rng.integers(0, len(GATES))]
        qs = rng.choice(n, size=arity, replace=False)
        ops.append((tuple(int(q) for q in qs), mat, fn))
    return ops


def run_both(rng, n, depth):
    t = stab.init_zero(n)
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    for qs, mat, fn in random_circuit(rng, n, depth):
        fn(t, *qs)
        psi = apply_1q(psi, n, qs[0], mat) if len(qs) == 1 \
            else apply_2q(psi, n, *qs, mat)
    return t, psi


def test_init_zero_entropy_and_validation():
    t = stab.init_zero(3)
    assert stab.entanglement_entropy(t, [0]) == 0
    assert stab.entanglement_entropy(t, []) == 0
    assert stab.entanglement_entropy(t, [0, 1, 2]) == 0
    with pytest.raises(ValueError):
        stab.init_zero(0)
    with pytest.raises(ValueError):
        stab.entanglement_entropy(t, [3])
    with pytest.raises(ValueError):
        stab.apply_cnot(t, 1, 1)


def test_pair_creation_state():
    t = stab.apply_xx_rotation(stab.init_zero(2), 0, 1)
    psi = np.array([1.0, 0.0, 0.0, -1.0j]) / np.sqrt(2)
    proj = stab.to_projector(t)
    np.testing.assert_allclose(proj, np.outer(psi, psi.conj()), atol=1e-12)
    assert stab.entanglement_entropy(t, [0]) == 1


def test_ghz_entropies():
    t = stab.init_zero(3)
    stab.apply_h(t, 0)
    stab.apply_cnot(t, 0, 1)
    stab.apply_cnot(t, 0, 2)
    for region in ([0], [1], [2], [0, 1], [1, 2]):
        assert stab.entanglement_entropy(t, region) == 1


def test_gate_identities():
    rng = np.random.default_rng(5)
    t, psi = run_both(rng, 3, 12)
    u = t.copy()
    stab.apply_h(u, 1)
    stab.apply_h(u, 1)
    np.testing.assert_allclose(stab.to_projector(u), stab.to_projector(t),
                               atol=1e-12)
    v = t.copy()
    for _ in range(4):
        stab.apply_s(v, 2)
    np.testing.assert_allclose(stab.to_projector(v), stab.to_projector(t),
                               atol=1e-12)


def test_swap_equals_three_cnots():
    rng = np.random.default_rng(11)
    t, _ = run_both(rng, 4, 10)
    a = t.copy()
    stab.apply_swap(a, 1, 3)
    b = t.copy()
    stab.apply_cnot(b, 1, 3)
    stab.apply_cnot(b, 3, 1)
    stab.apply_cnot(b, 1, 3)
    np.testing.assert_allclose(stab.to_projector(a), stab.to_projector(b),
                               atol=1e-12)


def test_projector_matches_dense_state():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 7))
        t, psi = run_both(rng, n, int(rng.integers(4, 4 * n)))
        proj = stab.to_projector(t)
        np.testing.assert_allclose(np.trace(proj), 1.0, atol=1e-9)
        np.testing.assert_allclose(proj, np.outer(psi, psi.conj()),
                                   atol=1e-9)


def test_projector_size_guard():
    with pytest.raises(ValueError):
        stab.to_projector(stab.init_zero(11))


def test_entropy_matches_dense_on_random_circuits():
    rng = np.random.default_rng(19)
    for _ in range(40):
        n = int(rng.integers(2, 8))
        t, psi = run_both(rng, n, int(rng.integers(3, 3 * n)))
        k = int(rng.integers(1, n))
        region = [int(q) for q in rng.choice(n, size=k, replace=False)]
        s_tab = stab.entanglement_entropy(t, region)
        s_ref = dense_entropy(psi, n, region)
        assert abs(s_tab - s_ref) < 1e-9


def test_word_boundary_pair():
    # a pair straddling the 64-qubit word boundary of the packed storage
    t = stab.init_zero(66)
    stab.apply_xx_rotation(t, 63, 64)
    assert stab.entanglement_entropy(t, range(64)) == 1
    stab.apply_swap(t, 64, 65)
    assert stab.entanglement_entropy(t, range(64)) == 1
    assert stab.entanglement_entropy(t, range(65)) == 1


def test_tree_run_small_values():
    for layers, expected in ((1, 1), (3, 2), (5, 3)):
        run = stab.run_ttn_example(layers)
        assert run.entropy == expected
        assert len(run.region) == stab._tree_cut_size(layers)
        assert len(run.schedule) == 2 ** layers - 1
    with pytest.raises(ValueError):
        stab.run_ttn_example(2)


def test_tree_schedule_agrees_with_builder_formula():
    from tnkit.tns import ttn_gate_schedule
    assert stab._tree_schedule(5) == ttn_gate_schedule(5)


def test_qca_run_matches_pair_tracker_small():
    from tnkit import qca
    for dim, length in ((1, 8), (2, 4)):
        ps = qca.initial_pairs(dim, length)
        state = stab.run_qca(dim, length, 0)
        region = qca.half_cut_region(dim, length)
        assert stab.entanglement_entropy(
            state, stab.region_qubits(region, length)) \
            == qca.entropy_across(ps, region)
        for layers in (1, 2):
            ps = qca.step(ps)
            state = stab.run_qca(dim, length, layers)
            assert stab.entanglement_entropy(
                state, stab.region_qubits(region, length)) \
                == qca.entropy_across(ps, region)


def test_region_qubits_row_major():
    assert stab.region_qubits([(0, 0), (1, 2), (3, 1)], 4) == [0, 6, 13]
