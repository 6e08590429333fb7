import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdialogue import qstate
from qdialogue.ghz_codec import ghz_family, ghz_seed
from qdialogue.qstate import (
    IncompleteFamilyError,
    ProjectiveFamily,
    QStateError,
    StateVector,
    apply_1q,
    basis_state,
    exact_distribution,
    inner_product,
    measure_projective,
    measure_qubit,
    minus_state,
    plus_state,
    tensor,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
R = 1 / np.sqrt(2)


def random_state(seed: int, n: int) -> StateVector:
    g = np.random.default_rng(seed)
    v = g.normal(size=2**n) + 1j * g.normal(size=2**n)
    return StateVector.from_amplitudes(v, normalize=True)


def random_unitary(seed: int) -> np.ndarray:
    g = np.random.default_rng(seed)
    m = g.normal(size=(2, 2)) + 1j * g.normal(size=(2, 2))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(QStateError):
            StateVector(1, [1, 1])

    def test_rejects_wrong_length(self):
        with pytest.raises(QStateError):
            StateVector(2, [1, 0])

    @pytest.mark.parametrize("n", [0, 5])
    def test_rejects_qubit_count_out_of_range(self, n):
        amps = np.zeros(2**n)
        amps[0] = 1
        with pytest.raises(QStateError):
            StateVector(n, amps)

    def test_amplitudes_are_read_only(self):
        s = basis_state(1, [0])
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0


class TestBasisState:
    def test_single_zero(self):
        np.testing.assert_array_equal(basis_state(1, [0]).amplitudes, [1, 0])

    def test_all_ones_is_last_index(self):
        amps = basis_state(3, [1, 1, 1]).amplitudes
        assert amps[7] == 1 and np.count_nonzero(amps) == 1

    def test_first_qubit_is_most_significant(self):
        assert basis_state(2, [0, 1]).amplitudes[1] == 1
        assert basis_state(3, [1, 0, 0]).amplitudes[4] == 1

    def test_length_mismatch(self):
        with pytest.raises(QStateError):
            basis_state(2, [0])


class TestApply:
    def test_x_flips_zero(self):
        assert apply_1q(basis_state(1, [0]), 0, SX).isclose(basis_state(1, [1]))

    def test_x_on_travel_qubit_of_seed(self):
        out = apply_1q(ghz_seed(), 1, SX)
        expected = StateVector(3, np.array([0, 0, 1, 0, 0, 1, 0, 0]) * R)
        assert out.isclose(expected)

    def test_identity_is_noop(self):
        s = random_state(3, 3)
        assert apply_1q(s, 2, np.eye(2)).isclose(s)

    def test_non_unitary_rejected(self):
        with pytest.raises(QStateError):
            apply_1q(basis_state(1, [0]), 0, np.array([[1, 1], [0, 1]]))

    def test_qubit_out_of_range(self):
        with pytest.raises(QStateError):
            apply_1q(basis_state(2, [0, 0]), 2, SX)

    def test_cnot_matches_definition(self):
        s = qstate.apply_cnot(basis_state(2, [1, 0]), 0, 1)
        assert s.isclose(basis_state(2, [1, 1]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.data())
    def test_norm_preserved(self, seed, n, data):
        q = data.draw(st.integers(0, n - 1))
        out = apply_1q(random_state(seed, n), q, random_unitary(seed + 1))
        assert abs(np.vdot(out.amplitudes, out.amplitudes).real - 1) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.data())
    def test_matches_kronecker_operator(self, seed, n, data):
        q = data.draw(st.integers(0, n - 1))
        u = random_unitary(seed)
        s = random_state(seed + 7, n)
        full = np.eye(1)
        for k in range(n):
            full = np.kron(full, u if k == q else np.eye(2))
        np.testing.assert_allclose(apply_1q(s, q, u).amplitudes, full @ s.amplitudes, atol=1e-12)


class TestTensor:
    def test_zero_one(self):
        assert tensor(basis_state(1, [0]), basis_state(1, [1])).isclose(basis_state(2, [0, 1]))

    def test_epr_times_zero_support(self):
        epr = StateVector(2, np.array([0, 1, 1, 0]) * R)
        d = exact_distribution(tensor(epr, basis_state(1, [0])), "ZZZ")
        assert {k for k, p in d.items() if p > 0} == {(0, 1, 0), (1, 0, 0)}

    def test_plus_plus_uniform(self):
        np.testing.assert_allclose(tensor(plus_state(), plus_state()).amplitudes, [0.5] * 4, atol=1e-15)

    def test_overflow(self):
        with pytest.raises(QStateError):
            tensor(basis_state(3, [0, 0, 0]), basis_state(2, [0, 0]))


class TestInnerProduct:
    def test_values(self):
        zero, one = basis_state(1, [0]), basis_state(1, [1])
        assert inner_product(zero, zero) == 1
        assert inner_product(zero, one) == 0
        assert abs(inner_product(plus_state(), zero) - R) < 1e-15

    def test_conjugate_linear_in_first(self):
        a = StateVector(1, [1j, 0])
        assert inner_product(a, basis_state(1, [0])) == -1j

    def test_dimension_mismatch(self):
        with pytest.raises(QStateError):
            inner_product(basis_state(1, [0]), basis_state(2, [0, 0]))


class TestMeasureQubit:
    def test_zero_in_z(self, rng):
        out = measure_qubit(basis_state(1, [0]), 0, qstate.Z, rng)
        assert out.value == 0 and out.probability == pytest.approx(1)

    def test_plus_in_z_is_fair(self):
        d = exact_distribution(plus_state(), "Z")
        assert d == pytest.approx({(0,): 0.5, (1,): 0.5})

    def test_seed_home_qubit_collapses(self):
        for seed in range(20):
            out = measure_qubit(ghz_seed(), 0, qstate.Z, np.random.default_rng(seed))
            assert out.probability == pytest.approx(0.5)
            assert out.post_state.isclose(basis_state(3, [out.value] * 3))

    @pytest.mark.parametrize("basis", [qstate.Z, qstate.X])
    def test_repeat_reproduces(self, basis):
        g = np.random.default_rng(1)
        for seed in range(20):
            first = measure_qubit(random_state(seed, 3), 1, basis, g)
            again = measure_qubit(first.post_state, 1, basis, g)
            assert again.value == first.value and again.probability == pytest.approx(1, abs=1e-12)

    def test_minus_in_x(self, rng):
        assert measure_qubit(minus_state(), 0, qstate.X, rng).value == 1


class TestMeasureProjective:
    def test_member_is_certain(self, rng):
        fam = ghz_family()
        out = measure_projective(fam.members[3], fam, rng)
        assert out.value == 3 and out.probability == pytest.approx(1)
        assert out.post_state.isclose(fam.members[3])

    def test_superposition_of_two_members(self):
        fam = ghz_family()
        s = StateVector.from_amplitudes(fam.members[0].amplitudes + fam.members[1].amplitudes, normalize=True)
        d = exact_distribution(s, [((0, 1, 2), fam)])
        assert d[(0,)] == pytest.approx(0.5) and d[(1,)] == pytest.approx(0.5)
        assert sum(d.values()) == pytest.approx(1, abs=1e-12)

    def test_incomplete_family(self, rng):
        half = ProjectiveFamily((basis_state(1, [0]),))
        with pytest.raises(IncompleteFamilyError):
            measure_projective(plus_state(), half, rng)

    def test_non_orthogonal_family_rejected(self):
        with pytest.raises(QStateError):
            ProjectiveFamily((basis_state(1, [0]), plus_state()))

    def test_idempotent(self):
        fam = ghz_family()
        g = np.random.default_rng(5)
        for seed in range(10):
            first = measure_projective(random_state(seed, 3), fam, g)
            d = exact_distribution(first.post_state, [((0, 1, 2), fam)])
            assert d[(first.value,)] == pytest.approx(1, abs=1e-12)

    def test_born_frequencies(self):
        fam = ghz_family()
        s = random_state(99, 3)
        exact = exact_distribution(s, [((0, 1, 2), fam)])
        g = np.random.default_rng(2024)
        n = 100_000
        counts = np.zeros(8)
        for _ in range(n):
            counts[measure_projective(s, fam, g).value] += 1
        for i in range(8):
            p = exact[(i,)]
            assert abs(counts[i] / n - p) <= 4 * np.sqrt(p * (1 - p) / n) + 1e-12


class TestExactDistribution:
    def test_seed_all_z(self):
        d = exact_distribution(ghz_seed(), "ZZZ")
        assert d[(0, 0, 0)] == pytest.approx(0.5) and d[(1, 1, 1)] == pytest.approx(0.5)
        assert sum(v for k, v in d.items() if k not in {(0, 0, 0), (1, 1, 1)}) == pytest.approx(0, abs=1e-15)

    def test_seed_all_x_even_minus_parity(self):
        d = exact_distribution(ghz_seed(), "XXX")
        for k, p in d.items():
            assert p == pytest.approx(0.25 if sum(k) % 2 == 0 else 0.0, abs=1e-15)

    def test_classical_mixture_in_x(self):
        mix = [(0.5, basis_state(2, [0, 0])), (0.5, basis_state(2, [1, 1]))]
        d = exact_distribution(mix, "XX")
        assert all(p == pytest.approx(0.25) for p in d.values()) and len(d) == 4

    def test_overlapping_subsystems(self):
        with pytest.raises(QStateError):
            exact_distribution(ghz_seed(), [((0, 1), qstate.Z), ((1,), qstate.Z)])

    def test_partial_spec_traces_out(self):
        d = exact_distribution(ghz_seed(), [((2,), qstate.X)])
        assert d == pytest.approx({(0,): 0.5, (1,): 0.5})

    def test_bad_ensemble_weights(self):
        with pytest.raises(QStateError):
            exact_distribution([(0.7, plus_state()), (0.7, plus_state())], "Z")

    @pytest.mark.parametrize("spec", ["ZZZ", "XXX", "ZXZ", "XZX"])
    def test_matches_projection_norms_on_family(self, spec):
        for member in ghz_family().members:
            d = exact_distribution(member, spec)
            for outcome, p in d.items():
                proj = np.eye(1)
                for bit, b in zip(outcome, spec):
                    proj = np.kron(proj, qstate.BASIS_VECTORS[b][bit])
                ref = abs(np.vdot(proj.ravel(), member.amplitudes)) ** 2
                assert p == pytest.approx(ref, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.data())
    def test_sums_to_one_and_nonnegative(self, seed, n, data):
        spec = "".join(data.draw(st.sampled_from("ZX")) for _ in range(n))
        d = exact_distribution(random_state(seed, n), spec)
        assert min(d.values()) >= -1e-15
        assert sum(d.values()) == pytest.approx(1, abs=1e-12)
