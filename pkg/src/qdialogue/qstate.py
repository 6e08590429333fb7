"""
Dense state-vector engine for registers of at most four qubits.

Qubit 0 is the most significant bit of the amplitude index, so the ket
``|b0 b1 b2>`` lives at index ``b0*4 + b1*2 + b2``.  All values are immutable;
every operation returns a new :class:`StateVector`.

Sampling functions take an injected ``numpy.random.Generator``; nothing here
touches global randomness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

MAX_QUBITS = 4
NORM_TOL = 1e-12
PROB_CLAMP = -1e-15
COMPLETENESS_TOL = 1e-9

SQRT1_2 = 1.0 / np.sqrt(2.0)

Z = "Z"
X = "X"

#: single-qubit measurement bases; outcome ``k`` is the ``k``-th vector
BASIS_VECTORS = {
    Z: (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)),
    X: (np.array([SQRT1_2, SQRT1_2], dtype=complex), np.array([SQRT1_2, -SQRT1_2], dtype=complex)),
}

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class QStateError(ValueError):
    """Invalid argument to a state-vector operation."""


class IncompleteFamilyError(QStateError):
    """A projective family does not span the measured state."""


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    Normalized pure state of ``n_qubits`` qubits.

    Attributes
    ----------
    n_qubits : int
        Number of qubits, 1 to 4.
    amplitudes : np.ndarray
        Complex amplitudes of length ``2**n_qubits`` (read-only copy).
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise QStateError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**self.n_qubits:
            raise QStateError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, got {amps.shape[0]}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise QStateError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = False) -> "StateVector":
        """Build a state from raw amplitudes, optionally renormalizing them."""
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.shape[0]))) if amps.shape[0] else 0
        if amps.shape[0] != 2**n:
            raise QStateError(f"amplitude count {amps.shape[0]} is not a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise QStateError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def isclose(self, other: "StateVector", atol: float = NORM_TOL, up_to_phase: bool = False) -> bool:
        if self.n_qubits != other.n_qubits:
            return False
        if up_to_phase:
            return abs(abs(inner_product(self, other)) - 1.0) <= atol
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        terms = []
        for idx, amp in enumerate(self.amplitudes):
            if abs(amp) > NORM_TOL:
                terms.append(f"({amp.real:+.4f}{amp.imag:+.4f}j)|{idx:0{self.n_qubits}b}>")
        return f"StateVector({' '.join(terms)})"


@dataclass(frozen=True)
class ProjectiveFamily:
    """Orthonormal family of states used as a joint measurement basis."""

    members: tuple
    labels: tuple = ()

    def __post_init__(self):
        if not self.members:
            raise QStateError("projective family is empty")
        n = self.members[0].n_qubits
        if any(m.n_qubits != n for m in self.members):
            raise QStateError("family members disagree on qubit count")
        if len(self.members) > 2**n:
            raise QStateError("more members than the dimension allows")
        gram = self.matrix.conj() @ self.matrix.T
        if not np.allclose(gram, np.eye(len(self.members)), rtol=0.0, atol=NORM_TOL):
            raise QStateError("family members are not orthonormal")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(self.members))))
        elif len(self.labels) != len(self.members):
            raise QStateError("labels and members differ in length")

    @property
    def n_qubits(self) -> int:
        return self.members[0].n_qubits

    @property
    def matrix(self) -> np.ndarray:
        """Rows are the member amplitude vectors."""
        return np.array([m.amplitudes for m in self.members])

    def __len__(self) -> int:
        return len(self.members)

    def index_of(self, label) -> int:
        return self.labels.index(label)

    def member(self, label) -> StateVector:
        return self.members[self.labels.index(label)]


Basis = Union[str, ProjectiveFamily]


@dataclass(frozen=True)
class Outcome:
    """Result of one measurement: ``value`` is a bit (Z/X) or a family index."""

    value: int
    probability: float
    post_state: StateVector


def _check_qubits(n_qubits: int, qubits: Sequence[int]) -> tuple:
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise QStateError(f"repeated qubit in {qubits}")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise QStateError(f"qubit {q} out of range for {n_qubits} qubits")
    return qubits


_KNOWN_UNITARIES: set = set()


def _is_unitary(u: np.ndarray) -> bool:
    key = u.tobytes()
    if key in _KNOWN_UNITARIES:
        return True
    dev = u.conj().T @ u
    dev.flat[:: dev.shape[0] + 1] -= 1.0
    ok = float(np.max(np.abs(dev))) <= NORM_TOL
    if ok and len(_KNOWN_UNITARIES) < 1024:
        _KNOWN_UNITARIES.add(key)
    return ok


def _basis_matrix(basis: Basis) -> np.ndarray:
    if isinstance(basis, ProjectiveFamily):
        return basis.matrix
    try:
        return np.array(BASIS_VECTORS[basis])
    except KeyError:
        raise QStateError(f"unknown basis {basis!r}") from None


def basis_state(n_qubits: int, bits: Sequence[int]) -> StateVector:
    """Computational basis ket ``|bits>``."""
    bits = list(bits)
    if len(bits) != n_qubits:
        raise QStateError(f"got {len(bits)} bits for {n_qubits} qubits")
    if any(b not in (0, 1) for b in bits):
        raise QStateError(f"bits must be 0/1, got {bits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[int("".join(str(b) for b in bits), 2)] = 1.0
    return StateVector(n_qubits, amps)


def plus_state() -> StateVector:
    return StateVector(1, BASIS_VECTORS[X][0])


def minus_state() -> StateVector:
    return StateVector(1, BASIS_VECTORS[X][1])


def apply_unitary(state: StateVector, qubits: Sequence[int], u) -> StateVector:
    """Apply a ``2^k x 2^k`` unitary to the listed qubits (first listed is most significant)."""
    qubits = _check_qubits(state.n_qubits, qubits)
    u = np.asarray(u, dtype=complex)
    k = len(qubits)
    if u.shape != (2**k, 2**k):
        raise QStateError(f"operator shape {u.shape} does not match {k} qubits")
    if not _is_unitary(u):
        raise QStateError("operator is not unitary")
    if k == 1:
        q = qubits[0]
        psi = state.amplitudes.reshape(2**q, 2, -1)
        return StateVector(state.n_qubits, np.einsum("ij,ajb->aib", u, psi).reshape(-1))
    psi = np.moveaxis(state.tensor_view(), qubits, range(k))
    shape = psi.shape
    psi = (u @ psi.reshape(2**k, -1)).reshape(shape)
    psi = np.moveaxis(psi, range(k), qubits)
    return StateVector(state.n_qubits, psi.reshape(-1))


def apply_1q(state: StateVector, qubit: int, u) -> StateVector:
    return apply_unitary(state, (qubit,), u)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    return apply_unitary(state, (control, target), CNOT)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product; ``a`` occupies the leading qubits."""
    n = a.n_qubits + b.n_qubits
    if n > MAX_QUBITS:
        raise QStateError(f"tensor product would have {n} qubits (max {MAX_QUBITS})")
    return StateVector(n, np.kron(a.amplitudes, b.amplitudes))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.n_qubits != b.n_qubits:
        raise QStateError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _project(state: StateVector, qubits: tuple, rows: np.ndarray):
    """Return per-outcome probabilities and unnormalized conditional remainders."""
    k = len(qubits)
    psi = np.moveaxis(state.tensor_view(), qubits, range(k)).reshape(2**k, -1)
    cond = rows.conj() @ psi
    probs = np.sum(np.abs(cond) ** 2, axis=1)
    probs = np.where((probs < 0) & (probs > PROB_CLAMP), 0.0, probs)
    return probs, cond


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    total = float(np.sum(probs))
    r = rng.random() * total
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if r < acc:
            return i
    return int(np.flatnonzero(probs > 0)[-1])


def _rebuild(state: StateVector, qubits: tuple, member: np.ndarray, rest: np.ndarray) -> StateVector:
    k = len(qubits)
    # full-register measurement: post-state is the member itself, no stray phase
    rest = np.ones(1, dtype=complex) if rest.size == 1 else rest / np.linalg.norm(rest)
    joint = np.outer(member, rest).reshape((2,) * state.n_qubits)
    joint = np.moveaxis(joint, range(k), qubits)
    return StateVector(state.n_qubits, joint.reshape(-1))


def measure(state: StateVector, qubits: Sequence[int], basis: Basis, rng: np.random.Generator) -> Outcome:
    """Projective measurement of ``qubits`` in ``basis`` (Z, X or a family)."""
    qubits = _check_qubits(state.n_qubits, qubits)
    rows = _basis_matrix(basis)
    if rows.shape[1] != 2 ** len(qubits):
        raise QStateError(f"basis acts on {int(np.log2(rows.shape[1]))} qubits, got {len(qubits)}")
    probs, cond = _project(state, qubits, rows)
    if abs(float(np.sum(probs)) - 1.0) > COMPLETENESS_TOL:
        raise IncompleteFamilyError(f"family captures only {float(np.sum(probs))!r} of the state")
    idx = _sample(probs, rng)
    post = _rebuild(state, qubits, rows[idx], cond[idx])
    return Outcome(idx, float(probs[idx]), post)


def measure_qubit(state: StateVector, qubit: int, basis: str, rng: np.random.Generator) -> Outcome:
    if isinstance(basis, ProjectiveFamily):
        raise QStateError("use measure_projective for joint families")
    return measure(state, (qubit,), basis, rng)


def measure_projective(state: StateVector, family: ProjectiveFamily, rng: np.random.Generator,
                       qubits: Sequence[int] | None = None) -> Outcome:
    """Measure against ``family``; by default the family covers the whole state."""
    if qubits is None:
        qubits = range(state.n_qubits)
    return measure(state, tuple(qubits), family, rng)


def factor_out(state: StateVector, qubit: int, vector) -> StateVector:
    """
    Remove ``qubit`` from a product state ``|vector>_qubit ⊗ |rest>``.

    Raises if the qubit is entangled with the rest or is not in ``vector``.
    """
    qubit = _check_qubits(state.n_qubits, (qubit,))[0]
    if state.n_qubits == 1:
        raise QStateError("cannot factor out the only qubit")
    vector = np.asarray(vector, dtype=complex)
    psi = np.moveaxis(state.tensor_view(), qubit, 0).reshape(2, -1)
    rest = vector.conj() @ psi
    if abs(float(np.vdot(rest, rest).real) - 1.0) > 1e-9:
        raise QStateError(f"qubit {qubit} is not in the given product factor")
    return StateVector(state.n_qubits - 1, rest)


Ensemble = Sequence[tuple]  # (weight, StateVector) pairs


def _normalize_spec(n_qubits: int, spec) -> list:
    if isinstance(spec, str):
        if len(spec) != n_qubits:
            raise QStateError(f"basis string {spec!r} does not cover {n_qubits} qubits")
        spec = [((q,), b) for q, b in enumerate(spec)]
    items = []
    seen: set = set()
    for qubits, basis in spec:
        qubits = (qubits,) if isinstance(qubits, (int, np.integer)) else tuple(qubits)
        qubits = _check_qubits(n_qubits, qubits)
        if seen & set(qubits):
            raise QStateError(f"overlapping subsystems in measurement spec at {qubits}")
        seen |= set(qubits)
        rows = _basis_matrix(basis)
        if rows.shape[1] != 2 ** len(qubits):
            raise QStateError(f"basis {basis!r} does not match qubits {qubits}")
        items.append((qubits, rows))
    return items


def _pure_table(state: StateVector, items: list) -> np.ndarray:
    psi = state.tensor_view()
    axes: list = list(range(state.n_qubits))
    for idx, (qubits, rows) in enumerate(items):
        k = len(qubits)
        pos = [axes.index(q) for q in qubits]
        psi = np.moveaxis(psi, pos, range(k))
        moved = [axes[p] for p in pos]
        rest = [a for a in axes if a not in moved]
        shape = psi.shape[k:]
        psi = (rows.conj() @ psi.reshape(2**k, -1)).reshape((rows.shape[0],) + shape)
        axes = [("o", idx)] + rest
    probs = np.abs(psi) ** 2
    traced = tuple(i for i, a in enumerate(axes) if not isinstance(a, tuple))
    if traced:
        probs = probs.sum(axis=traced)
    kept = [a for a in axes if isinstance(a, tuple)]
    order = sorted(range(len(kept)), key=lambda i: kept[i][1])
    return np.transpose(probs, order)


def exact_distribution(state, spec) -> dict:
    """
    Exact joint outcome distribution, no sampling.

    Parameters
    ----------
    state : StateVector or sequence of (weight, StateVector)
        A pure state or a weighted ensemble representing a mixed state.
    spec : str or sequence of (qubits, basis)
        Either a per-qubit basis string such as ``"ZZX"`` or a list of
        ``(qubits, basis)`` pairs on disjoint qubits; ``basis`` is ``"Z"``,
        ``"X"`` or a :class:`ProjectiveFamily`.  Unlisted qubits are traced out.

    Returns
    -------
    dict
        Maps outcome tuples (one entry per spec item) to probabilities,
        including zero-probability outcomes.
    """
    if isinstance(state, StateVector):
        ensemble = [(1.0, state)]
    else:
        ensemble = list(state)
        if not ensemble:
            raise QStateError("empty ensemble")
        total = sum(w for w, _ in ensemble)
        if abs(total - 1.0) > NORM_TOL or any(w < 0 for w, _ in ensemble):
            raise QStateError(f"ensemble weights must be non-negative and sum to 1, got {total!r}")
    n = ensemble[0][1].n_qubits
    if any(s.n_qubits != n for _, s in ensemble):
        raise QStateError("ensemble members disagree on qubit count")
    items = _normalize_spec(n, spec)
    table = sum(w * _pure_table(s, items) for w, s in ensemble)
    table = np.where((table < 0) & (table > PROB_CLAMP), 0.0, table)
    return {tuple(int(i) for i in idx): float(table[idx]) for idx in np.ndindex(table.shape)}
