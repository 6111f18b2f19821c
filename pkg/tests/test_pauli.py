import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holoqc.pauli import (
    GroupMembership,
    NotCorrectable,
    PauliString,
    Syndrome,
    bacon_shor_9,
    bs9_index,
    commutes,
    complete_in_group,
    conjugate_pauli,
    decode_single,
    iter_paulis,
    pauli_mul,
    syndrome,
    trivial_code,
)

LABELS = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]


def paulis(n):
    return st.tuples(
        st.lists(st.sampled_from("IXYZ"), min_size=n, max_size=n),
        st.integers(0, 3),
    ).map(lambda t: PauliString.from_label("".join(t[0])).with_phase(t[1]))


def test_x_times_z_is_minus_i_y():
    r = pauli_mul(PauliString.from_label("X"), PauliString.from_label("Z"))
    assert r.unsigned().label == "+Y"
    assert r.coefficient == -1j


def test_xx_times_zz_is_minus_yy():
    r = PauliString.from_label("XX") * PauliString.from_label("ZZ")
    assert r == -PauliString.from_label("YY")
    dense = PauliString.from_label("XX").to_matrix() @ PauliString.from_label("ZZ").to_matrix()
    assert np.allclose(r.to_matrix(), dense)


@pytest.mark.parametrize("label", ["X", "Y", "Z", "XYZ", "YYI"])
def test_hermitian_pauli_squares_to_identity(label):
    p = PauliString.from_label(label)
    sq = p * p
    assert sq.is_identity and sq.phase == 0


def test_two_qubit_products_match_dense_matrices():
    mismatches = 0
    for a, b in itertools.product(LABELS, repeat=2):
        p, q = PauliString.from_label(a), PauliString.from_label(b)
        if not np.allclose((p * q).to_matrix(), p.to_matrix() @ q.to_matrix()):
            mismatches += 1
    assert mismatches == 0


@given(paulis(3), paulis(3), paulis(3))
def test_multiplication_is_associative(p, q, r):
    assert (p * q) * r == p * (q * r)


@given(paulis(3), paulis(3))
def test_product_order_sign_follows_commutation(p, q):
    pq, qp = p * q, q * p
    if commutes(p, q):
        assert pq == qp
    else:
        assert pq == -qp


@given(paulis(4))
def test_weight_counts_nontrivial_sites(p):
    assert p.weight == sum(s != "I" for s in p.symbols)


def test_commutation_examples():
    assert commutes(PauliString.from_label("XX"), PauliString.from_label("ZZ"))
    assert not commutes(PauliString.from_label("XI"), PauliString.from_label("ZI"))
    z = PauliString.from_label("Z")
    assert not commutes(z, PauliString.from_label("X"))
    assert not commutes(z, PauliString.from_label("Y"))


def test_size_mismatch_is_rejected():
    with pytest.raises(ValueError):
        PauliString.from_label("X") * PauliString.from_label("XX")
    with pytest.raises(ValueError):
        commutes(PauliString.from_label("X"), PauliString.from_label("XX"))


def test_labels_round_trip():
    for text in ["+XYZ", "-IXI", "+iZZ", "-iYI"]:
        assert PauliString.from_label(text).label == text


def test_bacon_shor_generators():
    code = bacon_shor_9()
    code.validate()
    assert len(code.stabilizer_gens) == 4
    assert len(code.gauge_gens) == 12
    assert all(g.weight == 2 for g in code.gauge_gens)
    assert all(s.weight == 6 for s in code.stabilizer_gens)
    assert code.n_logical == 1
    lx, lz = code.logical_x[0], code.logical_z[0]
    assert not commutes(lx, lz)
    assert all(commutes(lx, s) and commutes(lz, s) for s in code.stabilizer_gens)
    assert all(commutes(lx, g) and commutes(lz, g) for g in code.gauge_gens)


def test_bacon_shor_stabilizers_commute_with_gauge():
    code = bacon_shor_9()
    for s in code.stabilizer_gens:
        assert all(commutes(s, g) for g in code.gauge_gens)
        assert code.in_gauge_group(s)


def test_syndrome_examples():
    code = bacon_shor_9()
    assert syndrome(code, PauliString.identity(9)).is_trivial
    z00 = PauliString.single(9, bs9_index(0, 0), "Z")
    s = syndrome(code, z00)
    x_stabs = [k for k, g in enumerate(code.stabilizer_gens) if "X" in g.symbols]
    flagged = [k for k, b in enumerate(s.bits) if b]
    assert len(flagged) == 1 and flagged[0] in x_stabs
    assert set(code.stabilizer_gens[flagged[0]].support) == {bs9_index(r, c) for r in range(3) for c in (0, 1)}
    x11 = PauliString.single(9, bs9_index(1, 1), "X")
    s = syndrome(code, x11)
    z_stabs = [k for k, g in enumerate(code.stabilizer_gens) if "Z" in g.symbols]
    assert [k for k, b in enumerate(s.bits) if b] == z_stabs


def test_decoder_identity_and_tie_break():
    code = bacon_shor_9()
    assert decode_single(code, syndrome(code, PauliString.identity(9))).is_identity
    corr = decode_single(code, syndrome(code, PauliString.single(9, 0, "Z")))
    assert corr == PauliString.single(9, 0, "Z")


def test_decoder_undoes_every_single_error():
    code = bacon_shor_9()
    for q in range(9):
        for p in "XYZ":
            e = PauliString.single(9, q, p)
            corr = decode_single(code, syndrome(code, e))
            assert corr.weight <= 1
            assert code.in_gauge_group(corr * e)


def test_bacon_shor_syndromes_all_have_weight_one_preimages():
    code = bacon_shor_9()
    singles = {syndrome(code, e).bits for e in iter_paulis(9, 1)}
    assert len(singles) == 2 ** len(code.stabilizer_gens)


def test_decoder_rejects_syndrome_without_weight_one_preimage():
    pair = trivial_code().tensor(trivial_code())
    s = syndrome(pair, PauliString.from_label("XX"))
    assert s.bits == (1, 1)
    with pytest.raises(NotCorrectable):
        decode_single(pair, s)


def test_syndrome_length_checked():
    with pytest.raises(ValueError):
        syndrome(bacon_shor_9(), PauliString.from_label("XX"))
    assert isinstance(syndrome(trivial_code(), PauliString.from_label("X")), Syndrome)


def test_group_membership_and_completion():
    code = bacon_shor_9()
    group = GroupMembership(code.group_matrix())
    assert group.contains(code.gauge_gens[0].symplectic())[0]
    assert not group.contains(code.logical_x[0].symplectic())[0]
    z0 = PauliString.single(9, 0, "Z")
    g = complete_in_group(group, z0, exclude=[0])
    assert g.weight == 1 and g.support[0] == bs9_index(1, 0)
    assert code.in_gauge_group(z0 * g)


def test_block_code_of_a_two_block_register():
    pair = bacon_shor_9().tensor(bacon_shor_9())
    assert len(pair.blocks) == 2
    blk = pair.block_code(1)
    assert blk.n_qubits == 9
    assert len(blk.stabilizer_gens) == 4
    assert blk.n_logical == 1


def test_conjugation_by_hadamard_swaps_x_and_z():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    p = PauliString.from_label("XZ")
    assert conjugate_pauli(p, h, [0]).label == "+ZZ"
    assert conjugate_pauli(PauliString.from_label("Y"), h, [0]).label == "-Y"
