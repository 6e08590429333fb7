import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdialogue import qstate
from qdialogue.ghz_codec import (
    ADMISSIBLE_QUADS,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    TWO_BIT_CODES,
    InvalidCodeError,
    QuadCode,
    TwoBitCode,
    allowed_outcomes,
    bell_family,
    bell_member,
    compose_codes,
    encode,
    encode_unitary,
    ghz_family,
    ghz_member,
    ghz_seed,
    parse_phase,
    pauli_from_code,
    pauli_phase,
    phase_label,
)
from qdialogue.qstate import StateVector

R = 1 / np.sqrt(2)
Q = QuadCode.of
codes = st.sampled_from(TWO_BIT_CODES)
quads = st.sampled_from(ADMISSIBLE_QUADS)


def ket(n, *terms):
    """Build a state from (coefficient, bitstring) pairs."""
    amps = np.zeros(2**n, dtype=complex)
    for coeff, bits in terms:
        amps[int(bits, 2)] += coeff
    return StateVector.from_amplitudes(amps, normalize=True)


def x_triples(text):
    return {tuple(0 if c == "+" else 1 for c in word) for word in text.split()}


class TestCodes:
    def test_quad_index_round_trip(self):
        for i, q in enumerate(ADMISSIBLE_QUADS):
            assert q.index == i and QuadCode.from_index(i) == q

    def test_eight_admissible(self):
        assert len(ADMISSIBLE_QUADS) == 8 and all(q.p_code.a == 0 for q in ADMISSIBLE_QUADS)

    def test_inadmissible_index(self):
        with pytest.raises(InvalidCodeError):
            Q(0, 0, 1, 0).index

    def test_encode_rejects_inadmissible(self):
        with pytest.raises(InvalidCodeError):
            encode(ghz_seed(), Q(0, 0, 1, 1))

    def test_bad_bits(self):
        with pytest.raises(InvalidCodeError):
            pauli_from_code((2, 0))

    def test_str(self):
        assert str(Q(1, 0, 0, 1)) == "(1,0;0,1)" and str(TwoBitCode(0, 1)) == "(0,1)"


class TestPauliTable:
    @pytest.mark.parametrize("code,matrix", [((0, 0), PAULI_I), ((0, 1), PAULI_X), ((1, 0), PAULI_Y), ((1, 1), PAULI_Z)])
    def test_table(self, code, matrix):
        np.testing.assert_array_equal(pauli_from_code(code), matrix)

    def test_sigma_y_entries(self):
        np.testing.assert_array_equal(pauli_from_code((1, 0)), [[0, -1j], [1j, 0]])


class TestPhase:
    def test_identity_left(self):
        assert pauli_phase((0, 0), (1, 1)) == 1

    def test_x_then_z(self):
        assert pauli_phase((0, 1), (1, 1)) == -1j

    def test_z_then_x(self):
        assert pauli_phase((1, 1), (0, 1)) == 1j

    @given(codes, codes)
    def test_matches_matrix_product(self, c1, c2):
        lhs = pauli_from_code(c1) @ pauli_from_code(c2)
        rhs = pauli_phase(c1, c2) * pauli_from_code(c1 ^ c2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    @given(codes, codes)
    def test_group_properties(self, c1, c2):
        phi = pauli_phase(c1, c2)
        assert abs(phi**4 - 1) < 1e-12
        assert phi in (1, 1j, -1j)
        if c1 == (0, 0) or c2 == (0, 0) or c1 == c2:
            assert phi == 1

    @pytest.mark.parametrize("phase", [1, -1, 1j, -1j])
    def test_label_round_trip(self, phase):
        assert parse_phase(phase_label(phase)) == phase


class TestCompose:
    def test_identity(self):
        for q in ADMISSIBLE_QUADS:
            assert compose_codes(Q(0, 0, 0, 0), q) == (q, 1)

    def test_x_with_z(self):
        assert compose_codes(Q(0, 1, 0, 0), Q(1, 1, 0, 0)) == (Q(1, 0, 0, 0), -1j)

    def test_involution(self):
        assert compose_codes(Q(1, 0, 0, 1), Q(1, 0, 0, 1)) == (Q(0, 0, 0, 0), 1)

    def test_all_pairs_against_matrices(self):
        for qa, qb in itertools.product(ADMISSIBLE_QUADS, repeat=2):
            q, phase = compose_codes(qa, qb)
            assert q == qa ^ qb
            np.testing.assert_allclose(encode_unitary(qa) @ encode_unitary(qb), phase * encode_unitary(q), atol=1e-12)
            assert phase in (1, -1, 1j, -1j)


class TestBellFamily:
    def test_seed_member(self):
        assert bell_member((0, 0)).isclose(ket(2, (1, "01"), (1, "10")))

    def test_z_member(self):
        assert bell_member((1, 1)).isclose(ket(2, (1, "01"), (-1, "10")))

    def test_orthonormal_and_complete(self):
        m = bell_family().matrix
        np.testing.assert_allclose(m.conj() @ m.T, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(sum(np.outer(v, v.conj()) for v in m), np.eye(4), atol=1e-12)


class TestGhzFamily:
    def test_seed_member_exact(self):
        amps = ghz_member(Q(0, 0, 0, 0)).amplitudes
        assert amps[0] == R and amps[7] == R and np.count_nonzero(amps) == 2

    def test_z_member(self):
        assert ghz_member(Q(1, 1, 0, 0)).isclose(ket(3, (1, "000"), (-1, "111")))

    def test_double_flip_member(self):
        # both travel and post flipped relative to home
        assert ghz_member(Q(0, 1, 0, 1)).isclose(ket(3, (1, "011"), (1, "100")))

    def test_orthonormal_and_complete(self):
        m = ghz_family().matrix
        np.testing.assert_allclose(m.conj() @ m.T, np.eye(8), atol=1e-12)
        np.testing.assert_allclose(sum(np.outer(v, v.conj()) for v in m), np.eye(8), atol=1e-12)

    def test_first_amplitude_real_positive(self):
        for member in ghz_family().members:
            lead = member.amplitudes[np.flatnonzero(np.abs(member.amplitudes) > 1e-12)[0]]
            assert lead.imag == 0 and lead.real > 0

    @given(quads, quads)
    def test_relabeling(self, u, q):
        moved = encode(ghz_member(u), q)
        assert moved.isclose(ghz_member(compose_codes(q, u)[0]), up_to_phase=True)


class TestEncode:
    def test_identity(self):
        assert encode(ghz_member(Q(0, 0, 0, 0)), Q(0, 0, 0, 0)).isclose(ghz_member(Q(0, 0, 0, 0)))

    def test_double_x(self):
        assert encode(ghz_member(Q(0, 0, 0, 0)), Q(0, 1, 0, 1)).isclose(ghz_member(Q(0, 1, 0, 1)))

    @given(quads, quads)
    def test_xor_rule(self, bob, alice):
        out = encode(ghz_member(bob), alice)
        target = ghz_member(Q(*(x ^ y for x, y in zip(bob.bits, alice.bits))))
        assert out.isclose(target, up_to_phase=True)


class TestAllowedOutcomes:
    def test_seed_z(self):
        assert allowed_outcomes(Q(0, 0, 0, 0), "Z") == {(0, 0, 0), (1, 1, 1)}

    def test_seed_x(self):
        assert allowed_outcomes(Q(0, 0, 0, 0), "X") == x_triples("+++ +-- -+- --+")

    def test_z_member_x(self):
        assert allowed_outcomes(Q(1, 1, 0, 0), "X") == x_triples("-++ ++- +-+ ---")

    @pytest.mark.parametrize("basis,size,prob", [("Z", 2, 0.5), ("X", 4, 0.25)])
    def test_sizes_and_probabilities(self, basis, size, prob):
        for q in ADMISSIBLE_QUADS:
            allowed = allowed_outcomes(q, basis)
            assert len(allowed) == size
            d = qstate.exact_distribution(ghz_member(q), basis * 3)
            assert all(abs(d[o] - prob) < 1e-12 for o in allowed)

    def test_unknown_basis(self):
        with pytest.raises(ValueError):
            allowed_outcomes(Q(0, 0, 0, 0), "Y")


# Printed GHZ table in the source text: label -> (Z-ket pair with sign, X-expansion).
# Kets are written with subscript order h,t,p; X-expansion terms are (h,t,p) triples
# with the overall sign of each term dropped since only the support matters.
PRINTED = {
    (0, 0, 0, 0): (("000", "111", +1), "+++ +-- -+- --+"),
    (1, 1, 0, 0): (("000", "111", -1), "+-+ ++- -++ ---"),
    (0, 1, 0, 0): (("100", "011", +1), "+++ +-- -+- --+"),
    (1, 0, 0, 0): (("100", "011", -1), "++- +-+ -++ ---"),
    (0, 0, 0, 1): (("010", "101", +1), "+++ +-- -+- --+"),
    (1, 1, 0, 1): (("010", "101", -1), "++- +-+ -++ ---"),
    (0, 1, 0, 1): (("110", "001", +1), "+++ +-- --+ -+-"),
    (1, 0, 0, 1): (("110", "001", -1), "++- +-+ --- -++"),
}


def printed_ket(entry, order):
    """Printed Z-ket read with its three characters assigned to qubits in ``order``."""
    (k1, k2, sign), _ = entry
    def place(word):
        bits = [0, 0, 0]
        for ch, q in zip(word, order):
            bits[q] = int(ch)
        return "".join(map(str, bits))
    return ket(3, (1, place(k1)), (sign, place(k2)))


class TestPrintedTable:
    def test_same_set_up_to_phase(self):
        printed = [printed_ket(e, (0, 1, 2)) for e in PRINTED.values()]
        for member in ghz_family().members:
            assert sum(member.isclose(p, up_to_phase=True) for p in printed) == 1

    def test_labels_agree_only_for_seed_pair_in_htp_order(self):
        agree = {lab for lab, e in PRINTED.items() if ghz_member(lab).isclose(printed_ket(e, (0, 1, 2)), up_to_phase=True)}
        assert agree == {(0, 0, 0, 0), (1, 1, 0, 0)}

    def test_all_labels_agree_in_tph_order(self):
        # the printed characters name (t, p, h): first char -> t, second -> p, third -> h
        for lab, e in PRINTED.items():
            assert ghz_member(lab).isclose(printed_ket(e, (1, 2, 0)), up_to_phase=True), lab

    def test_x_expansions_match_printed_kets(self):
        for lab, e in PRINTED.items():
            d = qstate.exact_distribution(printed_ket(e, (0, 1, 2)), "XXX")
            assert {k for k, p in d.items() if p > 1e-12} == x_triples(e[1]), lab
