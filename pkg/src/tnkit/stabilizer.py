"""Bit-packed stabilizer simulator for the Clifford constructions.

A state on n qubits is tracked by n generator rows of the form
i**r * prod_q X**x_q Z**z_q (X left of Z on every qubit), with r mod 4.
Storage is qubit-major: x and z are (ceil(n/64), n) uint64 arrays whose
entry [w, g] holds bit (q - 64 w) of generator g for qubit q, so a gate on
a fixed qubit touches one contiguous row per array.

Entanglement entropy of a region A is rank_GF2(rows restricted to the X
and Z columns of A) - |A|, exact and integer.

The tree-state and automaton drivers below rebuild their gate schedules
from closed-form site formulas on purpose; the structural builders are not
imported, and the cross-checks live in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qca import initial_pairs, site_index, sublayer_swaps

_ONE = np.uint64(1)


@dataclass
class StabilizerState:
    num_qubits: int
    x: np.ndarray
    z: np.ndarray
    phase: np.ndarray

    def copy(self) -> "StabilizerState":
        return StabilizerState(self.num_qubits, self.x.copy(), self.z.copy(),
                               self.phase.copy())


def init_zero(num_qubits: int) -> StabilizerState:
    """All-zeros computational state, stabilized by Z on every qubit."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    words = (num_qubits + 63) // 64
    x = np.zeros((words, num_qubits), dtype=np.uint64)
    z = np.zeros((words, num_qubits), dtype=np.uint64)
    g = np.arange(num_qubits)
    z[g // 64, g] = _ONE << (g % 64).astype(np.uint64)
    return StabilizerState(num_qubits, x, z,
                           np.zeros(num_qubits, dtype=np.uint8))


def _col(arr: np.ndarray, q: int) -> np.ndarray:
    w, s = divmod(q, 64)
    return (arr[w] >> np.uint64(s)) & _ONE


def _flip(arr: np.ndarray, q: int, mask: np.ndarray) -> None:
    w, s = divmod(q, 64)
    arr[w] ^= mask << np.uint64(s)


def _check_qubits(t: StabilizerState, *qs: int) -> None:
    for q in qs:
        if not 0 <= q < t.num_qubits:
            raise ValueError(f"qubit {q} outside [0, {t.num_qubits})")
    if len(set(qs)) != len(qs):
        raise ValueError("qubits must be distinct")


def apply_xx_rotation(t: StabilizerState, i: int, j: int) -> StabilizerState:
    """exp(-i pi/4 X_i X_j): fixes X_i and X_j, maps Z_i to -Y_i X_j."""
    _check_qubits(t, i, j)
    anti = _col(t.z, i) ^ _col(t.z, j)
    t.phase = (t.phase + 3 * anti.astype(np.uint8)) & 3
    _flip(t.x, i, anti)
    _flip(t.x, j, anti)
    return t


def apply_swap(t: StabilizerState, i: int, j: int) -> StabilizerState:
    _check_qubits(t, i, j)
    for arr in (t.x, t.z):
        d = _col(arr, i) ^ _col(arr, j)
        _flip(arr, i, d)
        _flip(arr, j, d)
    return t


def apply_h(t: StabilizerState, q: int) -> StabilizerState:
    _check_qubits(t, q)
    xb, zb = _col(t.x, q), _col(t.z, q)
    t.phase = (t.phase + 2 * (xb & zb).astype(np.uint8)) & 3
    d = xb ^ zb
    _flip(t.x, q, d)
    _flip(t.z, q, d)
    return t


def apply_s(t: StabilizerState, q: int) -> StabilizerState:
    _check_qubits(t, q)
    xb = _col(t.x, q)
    t.phase = (t.phase + xb.astype(np.uint8)) & 3
    _flip(t.z, q, xb)
    return t


def apply_cnot(t: StabilizerState, control: int, target: int) -> StabilizerState:
    _check_qubits(t, control, target)
    _flip(t.x, target, _col(t.x, control))
    _flip(t.z, control, _col(t.z, target))
    return t


def entanglement_entropy(t: StabilizerState, region) -> int:
    """Entropy in bits of the reduced state on the given qubits; exact."""
    qubits = sorted(set(int(q) for q in region))
    _check_qubits(t, *qubits)
    k = len(qubits)
    if k == 0 or k == t.num_qubits:
        return 0
    n = t.num_qubits
    bits = np.empty((n, 2 * k), dtype=np.uint8)
    for c, q in enumerate(qubits):
        bits[:, c] = _col(t.x, q).astype(np.uint8)
        bits[:, k + c] = _col(t.z, q).astype(np.uint8)
    packed = np.packbits(bits, axis=1)
    rows = [int.from_bytes(packed[g].tobytes(), "big") for g in range(n)]
    return _gf2_rank(rows) - k


def _gf2_rank(rows) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for v in rows:
        while v:
            h = v.bit_length()
            p = pivots.get(h)
            if p is None:
                pivots[h] = v
                rank += 1
                break
            v ^= p
    return rank


_I2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_XZ = _X @ _Z


def generator_operator(t: StabilizerState, g: int) -> np.ndarray:
    """Dense matrix of generator g; qubit 0 is the most significant."""
    op = np.array([[1.0 + 0j]])
    for q in range(t.num_qubits):
        xb = int(_col(t.x, q)[g])
        zb = int(_col(t.z, q)[g])
        op = np.kron(op, (_I2, _X, _Z, _XZ)[xb + 2 * zb])
    return (1j ** int(t.phase[g])) * op


def to_projector(t: StabilizerState) -> np.ndarray:
    """Dense projector prod_g (I + g) / 2 onto the stabilized subspace."""
    if t.num_qubits > 10:
        raise ValueError("dense projector limited to 10 qubits")
    dim = 2 ** t.num_qubits
    proj = np.eye(dim, dtype=complex)
    for g in range(t.num_qubits):
        proj = proj @ (np.eye(dim, dtype=complex)
                       + generator_operator(t, g)) / 2.0
    return proj


def _tree_schedule(layers: int):
    """(layer, (site_a, site_b)) gate list, root gate first.

    Gate k of layer tau pairs the midpoint 2**(tau-1) (2k - 1) - 1 of its
    block with the block's last site 2**tau k - 1.
    """
    half = 1
    out = []
    for tau in range(layers, 0, -1):
        width = 2 ** tau
        half = width // 2
        for k in range(1, 2 ** (layers - tau) + 1):
            out.append((tau, (width * k - half - 1, width * k - 1)))
    return out


def _tree_cut_size(layers: int) -> int:
    p = 1
    for _ in range((layers - 1) // 2):
        p = 4 * p - 1
    return p


@dataclass
class TtnRun:
    entropy: int
    region: tuple[int, ...]
    schedule: tuple
    state: StabilizerState


def run_ttn_example(layers: int) -> TtnRun:
    """Build the binary-tree Clifford state and measure the trailing cut.

    Every gate is exp(-i pi/4 XX).  The distinguished region is the last
    p sites with p_1 = 1 and p_{T+2} = 4 p_T - 1; its entropy comes out as
    (layers + 1) / 2, growing with depth at fixed region fraction.
    """
    if layers < 1 or layers % 2 == 0:
        raise ValueError("layers must be odd and >= 1")
    n = 2 ** layers
    state = init_zero(n)
    schedule = tuple(_tree_schedule(layers))
    for _, (a, b) in schedule:
        apply_xx_rotation(state, a, b)
    p = _tree_cut_size(layers)
    region = tuple(range(n - p, n))
    return TtnRun(entanglement_entropy(state, region), region, schedule, state)


def run_qca(dimension: int, length: int, layers: int) -> StabilizerState:
    """State of the swap automaton after the given number of layers.

    Starts from rotation-created pairs on the odd-aligned plaquettes; each
    layer applies the odd-aligned sublayer of diagonal swaps first and the
    even-aligned sublayer second.  Qubits are indexed row-major.
    """
    if layers < 0:
        raise ValueError("layers must be >= 0")
    state = init_zero(length ** dimension)
    for a, b in initial_pairs(dimension, length).pairs:
        apply_xx_rotation(state, site_index(a, length), site_index(b, length))
    odd = [(site_index(a, length), site_index(b, length))
           for a, b in sublayer_swaps(dimension, length, 1)]
    even = [(site_index(a, length), site_index(b, length))
            for a, b in sublayer_swaps(dimension, length, 0)]
    for _ in range(layers):
        for i, j in odd:
            apply_swap(state, i, j)
        for i, j in even:
            apply_swap(state, i, j)
    return state


def region_qubits(region, length: int) -> list[int]:
    """Row-major qubit indices of a site region."""
    return [site_index(site, length) for site in region]
