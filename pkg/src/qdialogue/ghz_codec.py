"""
Code algebra for the dialogue protocols.

A :class:`TwoBitCode` ``(a, b)`` names one of the Pauli operators
``(0,0)->I, (0,1)->X, (1,0)->Y, (1,1)->Z``.  Because ``X*Z ∝ Y`` and the table
is a group homomorphism up to phase, composing two codes is componentwise XOR
plus a phase in ``{1, i, -i}``.

A :class:`QuadCode` ``(a,b;c,d)`` pairs a code for the travel qubit with one for
the post qubit.  Admissible quads have ``c == 0``, so the post qubit only ever
sees ``I`` or ``X`` and there are exactly eight of them.  The same quads index the
GHZ family; the Bell family is indexed by two-bit codes.

Families are generated from operators acting on seed states, never transcribed
from printed kets.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import qstate
from .qstate import ProjectiveFamily, StateVector

H, T, P = 0, 1, 2  # qubit order of every three-qubit dialogue register

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PHASES = (1 + 0j, -1 + 0j, 1j, -1j)


class InvalidCodeError(ValueError):
    """A code violates its admissibility constraint."""


class TwoBitCode(NamedTuple):
    a: int
    b: int

    def __xor__(self, other: "TwoBitCode") -> "TwoBitCode":
        return TwoBitCode(self.a ^ other.a, self.b ^ other.b)

    def __str__(self) -> str:
        return f"({self.a},{self.b})"

    @property
    def bits(self) -> tuple:
        return (self.a, self.b)


class QuadCode(NamedTuple):
    t_code: TwoBitCode
    p_code: TwoBitCode

    @classmethod
    def of(cls, a: int, b: int, c: int, d: int) -> "QuadCode":
        return cls(TwoBitCode(a, b), TwoBitCode(c, d))

    @classmethod
    def from_index(cls, index: int) -> "QuadCode":
        """Inverse of :attr:`index` over the admissible quads."""
        return ADMISSIBLE_QUADS[index]

    @property
    def bits(self) -> tuple:
        return self.t_code.bits + self.p_code.bits

    @property
    def admissible(self) -> bool:
        return self.p_code.a == 0

    @property
    def index(self) -> int:
        """Position in :data:`ADMISSIBLE_QUADS` (``4a + 2b + d``)."""
        check_admissible(self)
        return 4 * self.t_code.a + 2 * self.t_code.b + self.p_code.b

    def __xor__(self, other: "QuadCode") -> "QuadCode":
        return QuadCode(self.t_code ^ other.t_code, self.p_code ^ other.p_code)

    def __str__(self) -> str:
        a, b, c, d = self.bits
        return f"({a},{b};{c},{d})"


TWO_BIT_CODES = tuple(TwoBitCode(a, b) for a in (0, 1) for b in (0, 1))
_VALID_CODES = frozenset(TWO_BIT_CODES)
ADMISSIBLE_QUADS = tuple(QuadCode.of(a, b, 0, d) for a in (0, 1) for b in (0, 1) for d in (0, 1))
IDENTITY_QUAD = ADMISSIBLE_QUADS[0]


def as_code(value) -> TwoBitCode:
    if type(value) is TwoBitCode and value in _VALID_CODES:
        return value
    code = TwoBitCode(*(int(v) for v in value))
    if code.a not in (0, 1) or code.b not in (0, 1):
        raise InvalidCodeError(f"code bits must be 0/1, got {tuple(value)}")
    return code


def as_quad(value) -> QuadCode:
    """Coerce a QuadCode or a flat ``(a, b, c, d)`` sequence."""
    if isinstance(value, QuadCode):
        if type(value.t_code) is TwoBitCode and value.t_code in _VALID_CODES and value.p_code in _VALID_CODES:
            return value
        return QuadCode(as_code(value.t_code), as_code(value.p_code))
    bits = tuple(value)
    if len(bits) != 4:
        raise InvalidCodeError(f"a quad code has 4 bits, got {bits}")
    return QuadCode(as_code(bits[:2]), as_code(bits[2:]))


def check_admissible(q: QuadCode) -> QuadCode:
    if q.p_code.a != 0:
        raise InvalidCodeError(f"code {q} has c=1; the post qubit may only carry I or X")
    return q


def pauli_from_code(c) -> np.ndarray:
    c = as_code(c)
    return _PAULIS[2 * c.a + c.b]


_PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
for _m in _PAULIS:
    _m.setflags(write=False)


def pauli_phase(c1, c2) -> complex:
    """The unique phase with ``pauli(c1) @ pauli(c2) == phase * pauli(c1 ^ c2)``."""
    c1, c2 = as_code(c1), as_code(c2)
    if c1 == (0, 0) or c2 == (0, 0) or c1 == c2:
        return 1 + 0j
    # X·Y = iZ, Y·Z = iX, Z·X = iY; reversed order flips the sign
    cyclic = {(1, 2), (2, 3), (3, 1)}
    key = (2 * c1.a + c1.b, 2 * c2.a + c2.b)
    return 1j if key in cyclic else -1j


def compose_codes(qa, qb) -> tuple:
    """
    Compose two quads: ``U(qa) @ U(qb) == phase * U(qa ^ qb)``.

    Returns
    -------
    (QuadCode, complex)
        The XOR index and the product of the per-qubit phase factors.
    """
    qa, qb = as_quad(qa), as_quad(qb)
    phase = pauli_phase(qa.t_code, qb.t_code) * pauli_phase(qa.p_code, qb.p_code)
    return qa ^ qb, phase


def encode_unitary(q) -> np.ndarray:
    """Two-qubit operator ``C_t ⊗ C_p`` on (travel, post)."""
    q = as_quad(q)
    return np.kron(pauli_from_code(q.t_code), pauli_from_code(q.p_code))


def encode(state: StateVector, q, t_qubit: int = T, p_qubit: int = P) -> StateVector:
    """Apply the admissible code ``q`` to the travel and post qubits of ``state``."""
    q = check_admissible(as_quad(q))
    state = qstate.apply_1q(state, t_qubit, pauli_from_code(q.t_code))
    return qstate.apply_1q(state, p_qubit, pauli_from_code(q.p_code))


def strip_global_phase(state: StateVector) -> StateVector:
    """Rotate the global phase so the first nonzero amplitude is real positive."""
    amps = state.amplitudes
    lead = amps[np.flatnonzero(np.abs(amps) > qstate.NORM_TOL)[0]]
    return StateVector(state.n_qubits, amps * (abs(lead) / lead))


def epr_seed() -> StateVector:
    """(|01> + |10>)/√2 on (home, travel)."""
    return StateVector(2, np.array([0, 1, 1, 0]) * qstate.SQRT1_2)


def ghz_seed() -> StateVector:
    """(|000> + |111>)/√2 on (home, travel, post)."""
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = qstate.SQRT1_2
    return StateVector(3, amps)


@lru_cache(maxsize=None)
def bell_family() -> ProjectiveFamily:
    """Bell basis labelled by the code applied to the travel qubit of the EPR seed."""
    seed = epr_seed()
    members = tuple(strip_global_phase(qstate.apply_1q(seed, 1, pauli_from_code(c))) for c in TWO_BIT_CODES)
    return ProjectiveFamily(members, TWO_BIT_CODES)


@lru_cache(maxsize=None)
def ghz_family() -> ProjectiveFamily:
    """The eight GHZ states, member ``q`` being ``encode(ghz_seed(), q)`` with phase stripped."""
    seed = ghz_seed()
    members = tuple(strip_global_phase(encode(seed, q)) for q in ADMISSIBLE_QUADS)
    return ProjectiveFamily(members, ADMISSIBLE_QUADS)


def ghz_member(q) -> StateVector:
    return ghz_family().member(check_admissible(as_quad(q)))


def bell_member(c) -> StateVector:
    return bell_family().member(as_code(c))


@lru_cache(maxsize=None)
def _allowed(idx: QuadCode, basis: str) -> frozenset:
    dist = qstate.exact_distribution(ghz_family().member(idx), basis * 3)
    return frozenset(k for k, p in dist.items() if p > 1e-12)


def allowed_outcomes(idx, basis: str) -> frozenset:
    """
    Outcome triples ``(h, t, p)`` that occur when GHZ member ``idx`` is measured
    qubit-wise in ``basis``.  For X, bit 0 means ``|+>`` and bit 1 means ``|->``.
    """
    if basis not in (qstate.Z, qstate.X):
        raise ValueError(f"basis must be Z or X, got {basis!r}")
    return _allowed(check_admissible(as_quad(idx)), basis)


def format_outcome(triple, basis: str) -> str:
    if basis == qstate.X:
        return "".join("+-"[b] for b in triple)
    return "".join(str(b) for b in triple)


def phase_label(phase: complex) -> str:
    for value, label in ((1, "1"), (-1, "-1"), (1j, "i"), (-1j, "-i")):
        if abs(phase - value) < 1e-9:
            return label
    raise ValueError(f"{phase!r} is not a fourth root of unity")


def parse_phase(label: str) -> complex:
    return {"1": 1 + 0j, "-1": -1 + 0j, "i": 1j, "-i": -1j}[label]
