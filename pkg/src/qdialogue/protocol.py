"""
Round state machines for the GHZ quantum dialogue and the EPR-pair baseline.

A round is driven through the phases ``prepared -> forward_transit -> at_alice
-> backward_transit -> measured``.  Quantum data lives in one or more
registers of at most four qubits each, addressed by label: Bob's qubits are
``h``, ``t`` and ``p``; an eavesdropper adds her own labels.  ``slots`` maps each
channel (``"t"``, ``"p"``) to the label of the qubit currently travelling in it,
which is how a substitution stays invisible to Alice.

The eavesdropper is any object with ``forward(rs, rng)``, ``backward(rs, rng)``
and ``infer(rs)`` methods (see :mod:`qdialogue.adversary`); ``None`` is an
honest channel.

Round operations mutate the :class:`RoundState` they are given and return it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Optional, Sequence

import numpy as np

from . import ghz_codec, qstate
from .ghz_codec import (
    QuadCode,
    TwoBitCode,
    as_code,
    as_quad,
    check_admissible,
    compose_codes,
    pauli_from_code,
)
from .qstate import StateVector

REVISED = "revised"
BASELINE = "baseline"
PROTOCOLS = (REVISED, BASELINE)


class ProtocolError(RuntimeError):
    pass


class ModeViolationError(ProtocolError):
    pass


class PossessionError(ProtocolError):
    pass


class Party(str, Enum):
    BOB = "bob"
    ALICE = "alice"
    EVE = "eve"
    CHANNEL = "channel"


class PhaseTag(IntEnum):
    PREPARED = 0
    FORWARD_TRANSIT = 1
    AT_ALICE = 2
    BACKWARD_TRANSIT = 3
    MEASURED = 4


class Mode(str, Enum):
    MM = "MM"
    CM = "CM"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_RUN = "not-run"

    @classmethod
    def of(cls, ok: bool) -> "Verdict":
        return cls.PASS if ok else cls.FAIL


BELL_CHECK = "BELL"  # cm_basis marker for baseline control rounds


def check_message(q) -> QuadCode:
    """A message quad: (i, j, f, g) or (k, l, w, v) with the third bit zero."""
    return check_admissible(as_quad(q))


@dataclass
class RoundState:
    protocol: str
    registers: list
    possession: dict
    slots: dict
    phase_tag: PhaseTag = PhaseTag.PREPARED
    mode: Optional[Mode] = None
    announcements: list = field(default_factory=list)
    eve_memory: Any = None

    # -- register bookkeeping -------------------------------------------

    def locate(self, label: str) -> tuple:
        for ri, (labels, _) in enumerate(self.registers):
            if label in labels:
                return ri, labels.index(label)
        raise KeyError(f"no qubit labelled {label!r}")

    def add_register(self, labels: Sequence[str], state: StateVector, owner: Party) -> None:
        labels = tuple(labels)
        if state.n_qubits != len(labels):
            raise ValueError(f"{len(labels)} labels for a {state.n_qubits}-qubit state")
        for lab in labels:
            if lab in self.possession:
                raise ValueError(f"label {lab!r} already in use")
            self.possession[lab] = owner
        self.registers.append([labels, state])

    def attach(self, label: str, state: StateVector, beside: str, owner: Party) -> None:
        """Append a fresh single qubit to the register holding ``beside``."""
        if label in self.possession:
            raise ValueError(f"label {label!r} already in use")
        ri, _ = self.locate(beside)
        labels, st = self.registers[ri]
        self.registers[ri] = [labels + (label,), qstate.tensor(st, state)]
        self.possession[label] = owner

    def gather(self, labels: Sequence[str]) -> tuple:
        """Merge the registers holding ``labels``; return (register, local indices)."""
        regs = sorted({self.locate(lab)[0] for lab in labels})
        if len(regs) > 1:
            merged_labels: tuple = ()
            merged = None
            for ri in regs:
                labs, st = self.registers[ri]
                merged_labels += labs
                merged = st if merged is None else qstate.tensor(merged, st)
            for ri in reversed(regs):
                del self.registers[ri]
            self.registers.append([merged_labels, merged])
        ri = self.locate(labels[0])[0]
        reg_labels = self.registers[ri][0]
        return ri, tuple(reg_labels.index(lab) for lab in labels)

    def apply(self, label: str, u) -> None:
        ri, q = self.locate(label)
        self.registers[ri][1] = qstate.apply_1q(self.registers[ri][1], q, u)

    def apply_pair(self, first: str, second: str, u) -> None:
        ri, qs = self.gather((first, second))
        self.registers[ri][1] = qstate.apply_unitary(self.registers[ri][1], qs, u)

    def measure(self, labels: Sequence[str], basis, rng: np.random.Generator) -> int:
        labels = tuple(labels)
        ri, qs = self.gather(labels)
        out = qstate.measure(self.registers[ri][1], qs, basis, rng)
        self.registers[ri][1] = out.post_state
        return out.value

    def discard(self, label: str, vector) -> None:
        """Drop a measured qubit known to be in the product factor ``vector``."""
        ri, q = self.locate(label)
        labels, st = self.registers[ri]
        self.registers[ri] = [labels[:q] + labels[q + 1:], qstate.factor_out(st, q, vector)]
        del self.possession[label]

    def state_of(self, labels: Sequence[str]) -> StateVector:
        """The register holding ``labels``, which must be exactly its contents in order."""
        ri, qs = self.gather(tuple(labels))
        if qs != tuple(range(self.registers[ri][1].n_qubits)):
            raise ValueError(f"{labels} is not a whole register in order")
        return self.registers[ri][1]

    # -- protocol bookkeeping -------------------------------------------

    def advance(self, tag: PhaseTag) -> None:
        if tag <= self.phase_tag:
            raise ProtocolError(f"phase cannot move from {self.phase_tag.name} to {tag.name}")
        self.phase_tag = tag

    def give(self, labels, party: Party) -> None:
        for lab in labels:
            if lab == "h" and party is not Party.BOB and self.phase_tag < PhaseTag.MEASURED:
                raise PossessionError("the home qubit never leaves Bob")
            self.possession[lab] = party

    def announce(self, speaker: str, key: str, value=None) -> None:
        self.announcements.append([speaker, key, value])

    def travelling(self) -> list:
        return [self.slots[s] for s in sorted(self.slots, key="tp".index)]


@dataclass
class RoundRecord:
    """Transcript of one round; codes are QuadCode (revised) or TwoBitCode (baseline)."""

    index: int
    protocol: str
    mode: Mode
    bob_code: Any
    alice_code: Any
    cm_basis: Optional[str] = None
    cm_outcomes: Optional[tuple] = None
    result: Any = None
    phase: Optional[complex] = None
    bob_decoded: Any = None  # Bob's reading of Alice's code
    alice_decoded: Any = None  # Alice's reading of Bob's code
    verdicts: dict = field(default_factory=lambda: {k: Verdict.NOT_RUN for k in VERDICT_KEYS})
    announcements: list = field(default_factory=list)
    eve_record: dict = field(default_factory=dict)
    post_abort: bool = False

    @property
    def failed(self) -> bool:
        return any(v is Verdict.FAIL for v in self.verdicts.values())

    @property
    def checked(self) -> bool:
        return any(v is not Verdict.NOT_RUN for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "protocol": self.protocol,
            "mode": self.mode.value,
            "bob": _bits(self.bob_code),
            "alice": _bits(self.alice_code),
            "cm_basis": self.cm_basis,
            "cm_outcomes": list(self.cm_outcomes) if self.cm_outcomes is not None else None,
            "result": _bits(self.result),
            "phase": ghz_codec.phase_label(self.phase) if self.phase is not None else None,
            "bob_decoded": _bits(self.bob_decoded),
            "alice_decoded": _bits(self.alice_decoded),
            "verdicts": {k: self.verdicts[k].value for k in VERDICT_KEYS},
            "announcements": self.announcements,
            "eve": self.eve_record,
            "post_abort": self.post_abort,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "RoundRecord":
        return cls(
            index=int(d["index"]),
            protocol=d["protocol"],
            mode=Mode(d["mode"]),
            bob_code=_code(d["bob"]),
            alice_code=_code(d["alice"]),
            cm_basis=d["cm_basis"],
            cm_outcomes=tuple(d["cm_outcomes"]) if d["cm_outcomes"] is not None else None,
            result=_code(d["result"]),
            phase=ghz_codec.parse_phase(d["phase"]) if d["phase"] is not None else None,
            bob_decoded=_code(d["bob_decoded"]),
            alice_decoded=_code(d["alice_decoded"]),
            verdicts={k: Verdict(d["verdicts"][k]) for k in VERDICT_KEYS},
            announcements=d["announcements"],
            eve_record=d["eve"],
            post_abort=bool(d["post_abort"]),
        )

    @classmethod
    def from_line(cls, line: str) -> "RoundRecord":
        return cls.from_dict(json.loads(line))


VERDICT_KEYS = ("cm", "s7", "checking_bits")


def _bits(code) -> Optional[list]:
    if code is None:
        return None
    if isinstance(code, QuadCode):
        return list(code.bits)
    return list(code)


def _code(bits):
    if bits is None:
        return None
    if len(bits) == 4:
        return as_quad(bits)
    return as_code(bits)


# -- revised (GHZ) protocol -----------------------------------------------


def round_prepare_and_encode_bob(bob) -> RoundState:
    """Bob prepares the GHZ seed on (h, t, p) and applies his code to t and p."""
    bob = check_message(bob)
    rs = RoundState(REVISED, [], {}, {"t": "t", "p": "p"})
    rs.add_register(("h", "t", "p"), ghz_codec.encode(ghz_codec.ghz_seed(), bob), Party.BOB)
    return rs


def transmit_forward(rs: RoundState, eve=None, rng: Optional[np.random.Generator] = None) -> RoundState:
    """Send the travelling qubits from Bob to Alice, letting ``eve`` act in transit."""
    if rs.phase_tag is not PhaseTag.PREPARED:
        raise ProtocolError(f"cannot transmit from phase {rs.phase_tag.name}")
    rs.advance(PhaseTag.FORWARD_TRANSIT)
    rs.give(rs.travelling(), Party.CHANNEL)
    if eve is not None:
        eve.forward(rs, rng)
    rs.give(rs.travelling(), Party.ALICE)
    rs.advance(PhaseTag.AT_ALICE)
    return rs


def control_mode_check(rs: RoundState, bob_quad, rng: np.random.Generator) -> tuple:
    """
    Alice measures what she received in a random common basis, Bob measures h
    in the same basis, and the triple is checked against the GHZ correlations
    of Bob's encoding.

    Returns
    -------
    (str, tuple, bool)
        Basis, the ``(h, t, p)`` outcome triple, and whether it was allowed.
    """
    if rs.mode is not Mode.CM:
        raise ModeViolationError("control check requires a CM round")
    if rs.phase_tag is not PhaseTag.AT_ALICE:
        raise ProtocolError(f"control check in phase {rs.phase_tag.name}")
    bob_quad = check_message(bob_quad)
    basis = qstate.Z if rng.random() < 0.5 else qstate.X
    t_label, p_label = rs.slots["t"], rs.slots["p"]
    _require(rs, (t_label, p_label), Party.ALICE)
    t_out = rs.measure((t_label,), basis, rng)
    p_out = rs.measure((p_label,), basis, rng)
    rs.announce("alice", "cm", {"basis": basis, "t": t_out, "p": p_out})
    h_out = rs.measure(("h",), basis, rng)
    triple = (h_out, t_out, p_out)
    passed = triple in ghz_codec.allowed_outcomes(bob_quad, basis)
    rs.announce("bob", "cm_verdict", Verdict.of(passed).value)
    rs.advance(PhaseTag.MEASURED)
    return basis, triple, passed


def alice_encode(rs: RoundState, alice, eve=None, rng: Optional[np.random.Generator] = None) -> RoundState:
    """Alice applies her code to whatever she holds and sends it back to Bob."""
    if rs.mode is Mode.CM:
        raise ModeViolationError("Alice never encodes in a CM round")
    if rs.phase_tag is not PhaseTag.AT_ALICE:
        raise ProtocolError(f"Alice cannot encode in phase {rs.phase_tag.name}")
    _require(rs, rs.travelling(), Party.ALICE)
    if rs.protocol == REVISED:
        alice = check_message(alice)
        rs.apply(rs.slots["t"], pauli_from_code(alice.t_code))
        rs.apply(rs.slots["p"], pauli_from_code(alice.p_code))
    else:
        rs.apply(rs.slots["t"], pauli_from_code(as_code(alice)))
    rs.advance(PhaseTag.BACKWARD_TRANSIT)
    rs.give(rs.travelling(), Party.CHANNEL)
    if eve is not None:
        eve.backward(rs, rng)
    rs.give(rs.travelling(), Party.BOB)
    return rs


def bob_measure_ghz(rs: RoundState, rng: np.random.Generator) -> QuadCode:
    """GHZ-basis measurement of (h, t, p); the global phase is not observable."""
    labels = ("h", rs.slots["t"], rs.slots["p"])
    return ghz_codec.ADMISSIBLE_QUADS[_bob_measure(rs, labels, ghz_codec.ghz_family(), rng)]


def bob_measure_bell(rs: RoundState, rng: np.random.Generator) -> TwoBitCode:
    labels = ("h", rs.slots["t"])
    return ghz_codec.TWO_BIT_CODES[_bob_measure(rs, labels, ghz_codec.bell_family(), rng)]


def _bob_measure(rs, labels, family, rng) -> int:
    if rs.phase_tag is not PhaseTag.BACKWARD_TRANSIT:
        raise ProtocolError(f"Bob measures after the return leg, not in {rs.phase_tag.name}")
    _require(rs, labels, Party.BOB)
    idx = rs.measure(labels, family, rng)
    rs.advance(PhaseTag.MEASURED)
    return idx


def _require(rs: RoundState, labels, party: Party) -> None:
    for lab in labels:
        if rs.possession.get(lab) is not party:
            raise PossessionError(f"{party.value} does not hold {lab!r} (held by {rs.possession.get(lab)})")


def decode_alice_bits(bob, result):
    """Bob recovers Alice's code: result XOR his own code."""
    return result ^ bob


def decode_bob_bits(alice, announced):
    """Alice recovers Bob's code from the announced result."""
    return announced ^ alice


def s7_sacrificial_check(record: RoundRecord, reveal_fraction: float, rng: np.random.Generator) -> Verdict:
    """With probability ``reveal_fraction`` both parties reveal their codes and Bob checks the XOR rule."""
    if record.result is None:
        raise ProtocolError("sacrificial check needs a completed message round")
    if reveal_fraction <= 0.0 or rng.random() >= reveal_fraction:
        return Verdict.NOT_RUN
    record.announcements.append(["bob", "reveal", _bits(record.bob_code)])
    record.announcements.append(["alice", "reveal", _bits(record.alice_code)])
    verdict = Verdict.of(decode_alice_bits(record.bob_code, record.result) == record.alice_code)
    record.announcements.append(["bob", "s7_verdict", verdict.value])
    return verdict


def checking_bits_check(alice_check, bob_check, result) -> Verdict:
    """Post-qubit block as checking bits: pass iff (f, g) == (r, s) XOR (w, v)."""
    f, g = alice_check
    w, v = bob_check
    if f != 0 or w != 0:
        raise ghz_codec.InvalidCodeError("checking bits must have a zero first bit")
    r, s = as_quad(result).p_code
    return Verdict.of(f == r ^ w and g == s ^ v)


def run_round_revised(bob, alice, mode: Mode, rng: np.random.Generator, eve=None,
                      reveal_fraction: float = 0.0, checking_bits: bool = False, index: int = 0) -> RoundRecord:
    """One full round of the GHZ dialogue."""
    bob = check_message(bob)
    alice = check_message(alice)
    mode = Mode(mode)
    rs = round_prepare_and_encode_bob(bob)
    transmit_forward(rs, eve, rng)
    rs.mode = mode
    rs.announce("bob", "mode", mode.value)
    record = RoundRecord(index, REVISED, mode, bob, alice)
    if mode is Mode.CM:
        basis, triple, passed = control_mode_check(rs, bob, rng)
        record.cm_basis, record.cm_outcomes = basis, triple
        record.verdicts["cm"] = Verdict.of(passed)
    else:
        alice_encode(rs, alice, eve, rng)
        result = bob_measure_ghz(rs, rng)
        record.result = result
        record.phase = compose_codes(alice, bob)[1]
        record.bob_decoded = decode_alice_bits(bob, result)
        rs.announce("bob", "result", list(result.bits))
        record.alice_decoded = decode_bob_bits(alice, result)
        if checking_bits:
            rs.announce("alice", "checking_bits", list(alice.p_code))
            record.verdicts["checking_bits"] = checking_bits_check(alice.p_code, bob.p_code, result)
            rs.announce("bob", "checking_verdict", record.verdicts["checking_bits"].value)
    record.announcements = rs.announcements  # shared: reveals below land in the public log
    if mode is Mode.MM:
        record.verdicts["s7"] = s7_sacrificial_check(record, reveal_fraction, rng)
    if eve is not None:
        record.eve_record = eve.infer(rs)
    return record


# -- baseline (EPR pair) protocol -----------------------------------------


def prepare_baseline(bob) -> RoundState:
    bob = as_code(bob)
    rs = RoundState(BASELINE, [], {}, {"t": "t"})
    state = qstate.apply_1q(ghz_codec.epr_seed(), 1, pauli_from_code(bob))
    rs.add_register(("h", "t"), state, Party.BOB)
    return rs


def run_round_nguyen(bob, alice, mode: Mode, rng: np.random.Generator, eve=None, index: int = 0) -> RoundRecord:
    """
    One round of the EPR-pair dialogue: Bob encodes and sends t, Alice encodes
    and returns it, Bob Bell-measures, then Alice names the mode.  In CM Alice
    reveals her code and Bob checks his Bell result; in MM Bob announces it.
    """
    bob, alice, mode = as_code(bob), as_code(alice), Mode(mode)
    rs = prepare_baseline(bob)
    transmit_forward(rs, eve, rng)
    alice_encode(rs, alice, eve, rng)
    result = bob_measure_bell(rs, rng)
    rs.mode = mode
    rs.announce("alice", "mode", mode.value)
    record = RoundRecord(index, BASELINE, mode, bob, alice, result=result)
    record.phase = ghz_codec.pauli_phase(alice, bob)
    if mode is Mode.CM:
        rs.announce("alice", "reveal", list(alice))
        passed = decode_alice_bits(bob, result) == alice
        record.cm_basis, record.cm_outcomes = BELL_CHECK, tuple(result)
        record.verdicts["cm"] = Verdict.of(passed)
        rs.announce("bob", "cm_verdict", record.verdicts["cm"].value)
    else:
        rs.announce("bob", "result", list(result))
        record.bob_decoded = decode_alice_bits(bob, result)
        record.alice_decoded = decode_bob_bits(alice, result)
    record.announcements = rs.announcements
    if eve is not None:
        record.eve_record = eve.infer(rs)
    return record


run_round_baseline = run_round_nguyen
