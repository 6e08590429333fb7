"""
Eavesdropper strategies acting at the channel interception points.

``intercept-resend``
    On the forward leg Eve keeps the in-scope travelling qubits and sends
    substitutes from her own entangled resource: an EPR pair (baseline, or a
    single channel of the revised protocol) or a GHZ seed (both channels).  On
    the return leg she measures her resource in the Bell/GHZ basis, which
    reveals Alice's code on the substitutes, re-applies that code to the kept
    originals and forwards them to Bob.

``entangle-measure``
    On the return leg Eve attaches an ancilla ``|0>`` to each probed qubit,
    applies a CNOT (travel qubit controls), measures the ancilla in Z or X and
    lets the travel qubit pass.

Eve only ever sees her own measurement outcomes and the public announcements;
she never reads amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import ghz_codec, qstate
from .ghz_codec import QuadCode, TwoBitCode, as_code, as_quad, pauli_from_code
from .protocol import BASELINE, REVISED, Party, RoundState

LIKELIHOOD_TIE_TOL = 1e-12


class Kind(str, Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    ENTANGLE_MEASURE = "entangle-measure"


class Scope(str, Enum):
    BOTH = "both"
    T_ONLY = "t"
    P_ONLY = "p"


PROBE_TARGETS = ("t", "p", "both")


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class EveStrategy:
    """
    Attack descriptor.  ``scope`` belongs to intercept-resend only; ``probe_target``
    and ``probe_basis`` to entangle-measure only.  Missing fields take defaults
    (scope both, probe on p in Z).
    """

    kind: Kind = Kind.NONE
    scope: Optional[Scope] = None
    probe_target: Optional[str] = None
    probe_basis: Optional[str] = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.INTERCEPT_RESEND:
            if self.probe_target is not None or self.probe_basis is not None:
                raise StrategyError("probe fields only apply to entangle-measure")
            object.__setattr__(self, "scope", Scope(self.scope or Scope.BOTH))
        elif kind is Kind.ENTANGLE_MEASURE:
            if self.scope is not None:
                raise StrategyError("scope only applies to intercept-resend")
            target = self.probe_target or "p"
            basis = self.probe_basis or qstate.Z
            if target not in PROBE_TARGETS:
                raise StrategyError(f"probe target must be one of {PROBE_TARGETS}, got {target!r}")
            if basis not in (qstate.Z, qstate.X):
                raise StrategyError(f"probe basis must be Z or X, got {basis!r}")
            object.__setattr__(self, "probe_target", target)
            object.__setattr__(self, "probe_basis", basis)
        elif any(v is not None for v in (self.scope, self.probe_target, self.probe_basis)):
            raise StrategyError("strategy 'none' takes no parameters")

    @classmethod
    def parse(cls, text: str) -> "EveStrategy":
        """
        Parse ``none``, ``intercept-resend[:both|t|p]`` or
        ``entangle-measure[:t|p|both[:Z|X]]``.
        """
        parts = text.strip().split(":")
        try:
            kind = Kind(parts[0].replace("_", "-"))
        except ValueError:
            raise StrategyError(f"unknown strategy {parts[0]!r}") from None
        if kind is Kind.NONE:
            if len(parts) > 1:
                raise StrategyError("strategy 'none' takes no parameters")
            return cls()
        if kind is Kind.INTERCEPT_RESEND:
            if len(parts) > 2:
                raise StrategyError(f"too many fields in {text!r}")
            scope = parts[1] if len(parts) > 1 else "both"
            try:
                return cls(kind, scope=Scope(scope))
            except ValueError:
                raise StrategyError(f"unknown scope {scope!r}") from None
        if len(parts) > 3:
            raise StrategyError(f"too many fields in {text!r}")
        return cls(kind, probe_target=parts[1] if len(parts) > 1 else None,
                   probe_basis=parts[2] if len(parts) > 2 else None)

    def __str__(self) -> str:
        if self.kind is Kind.INTERCEPT_RESEND:
            return f"{self.kind.value}:{self.scope.value}"
        if self.kind is Kind.ENTANGLE_MEASURE:
            return f"{self.kind.value}:{self.probe_target}:{self.probe_basis}"
        return self.kind.value

    def check_protocol(self, protocol: str) -> None:
        """The baseline has a single travelling qubit, so p-channel attacks make no sense there."""
        if protocol not in (REVISED, BASELINE):
            raise StrategyError(f"unknown protocol {protocol!r}")
        if protocol == BASELINE:
            if self.scope is Scope.P_ONLY or self.probe_target in ("p", "both"):
                raise StrategyError(f"{self} needs a post qubit; the baseline only has t")

    def intercepted_slots(self, protocol: str) -> tuple:
        if self.kind is not Kind.INTERCEPT_RESEND:
            return ()
        if protocol == BASELINE or self.scope is Scope.T_ONLY:
            return ("t",)
        if self.scope is Scope.P_ONLY:
            return ("p",)
        return ("t", "p")

    def probed_slots(self) -> tuple:
        if self.kind is not Kind.ENTANGLE_MEASURE:
            return ()
        return ("t", "p") if self.probe_target == "both" else (self.probe_target,)


@dataclass
class EveMemory:
    """
    What Eve knows: qubits she stores, codes she read off her own resource
    (keyed by block ``"quad"``, ``"t"`` or ``"p"``), ancilla outcomes, and a
    snapshot of the public log.
    """

    held: list = field(default_factory=list)
    readings: dict = field(default_factory=dict)
    ancilla: list = field(default_factory=list)
    public_log: list = field(default_factory=list)


@dataclass(frozen=True)
class EveGuess:
    alice_guess: object
    bob_guess: object
    uncertain: bool


def _memory(rs: RoundState) -> EveMemory:
    if rs.eve_memory is None:
        rs.eve_memory = EveMemory()
    return rs.eve_memory


def eve_forward_hook(strategy: EveStrategy, rs: RoundState, rng=None) -> RoundState:
    """Forward-leg action: substitution for intercept-resend, nothing otherwise."""
    mem = _memory(rs)
    slots = strategy.intercepted_slots(rs.protocol)
    if not slots:
        return rs
    kept = [rs.slots[s] for s in slots]
    rs.give(kept, Party.EVE)
    mem.held.extend(kept)
    if len(slots) == 2:
        rs.add_register(("H", "T", "P"), ghz_codec.ghz_seed(), Party.EVE)
        rs.slots.update(t="T", p="P")
    else:
        sub = slots[0].upper()
        rs.add_register(("H", sub), ghz_codec.epr_seed(), Party.EVE)
        rs.slots[slots[0]] = sub
    rs.give([rs.slots[s] for s in slots], Party.CHANNEL)
    return rs


def eve_backward_hook(strategy: EveStrategy, rs: RoundState, rng: np.random.Generator) -> RoundState:
    """Return-leg action: read-and-restore for intercept-resend, ancilla probe for entangle-measure."""
    mem = _memory(rs)
    if strategy.kind is Kind.INTERCEPT_RESEND:
        slots = strategy.intercepted_slots(rs.protocol)
        subs = [rs.slots[s] for s in slots]
        rs.give(subs, Party.EVE)
        if len(slots) == 2:
            idx = rs.measure(("H",) + tuple(subs), ghz_codec.ghz_family(), rng)
            code = ghz_codec.ADMISSIBLE_QUADS[idx]
            mem.readings["quad"] = code
            ops = {"t": code.t_code, "p": code.p_code}
        else:
            idx = rs.measure(("H", subs[0]), ghz_codec.bell_family(), rng)
            code = ghz_codec.TWO_BIT_CODES[idx]
            mem.readings[slots[0]] = code
            ops = {slots[0]: code}
        for slot, original in zip(slots, mem.held):
            rs.apply(original, pauli_from_code(ops[slot]))
            rs.slots[slot] = original
        rs.give(mem.held, Party.CHANNEL)
    elif strategy.kind is Kind.ENTANGLE_MEASURE:
        basis = strategy.probe_basis
        for slot in strategy.probed_slots():
            travel = rs.slots[slot]
            anc = "a" + slot
            rs.attach(anc, qstate.basis_state(1, [0]), beside=travel, owner=Party.EVE)
            rs.apply_pair(travel, anc, qstate.CNOT)
            bit = rs.measure((anc,), basis, rng)
            rs.discard(anc, qstate.BASIS_VECTORS[basis][bit])
            mem.ancilla.append([slot, basis, bit])
    return rs


def _candidates(protocol: str) -> tuple:
    return ghz_codec.ADMISSIBLE_QUADS if protocol == REVISED else ghz_codec.TWO_BIT_CODES


def _block(candidate, name: str):
    if isinstance(candidate, QuadCode):
        return {"quad": candidate, "t": candidate.t_code, "p": candidate.p_code}[name]
    return candidate


def reading_likelihood(memory: EveMemory, candidate) -> float:
    """P(Eve's observations | Alice sent ``candidate``), up to a candidate-independent factor."""
    like = 1.0
    for name, reading in memory.readings.items():
        like *= float(_block(candidate, name) == reading)
    # a probed travel qubit is half of a maximally entangled state whatever
    # Alice applied, so each ancilla outcome is a fair coin for every candidate
    like *= 0.5 ** len(memory.ancilla)
    return like


def _announced_result(public_log: list, protocol: str):
    for speaker, key, value in public_log:
        if speaker == "bob" and key == "result":
            return as_quad(value) if protocol == REVISED else as_code(value)
    return None


def eve_infer(strategy: EveStrategy, memory: EveMemory, public_log: list, protocol: str) -> EveGuess:
    """
    Maximum-likelihood guess of Alice's code over all admissible codes (ties go
    to the lowest code index), and Bob's code as the announced result XOR that
    guess.  Rounds without an announced result yield no guesses.
    """
    announced = _announced_result(public_log, protocol)
    if announced is None:
        return EveGuess(None, None, True)
    cands = _candidates(protocol)
    likes = [reading_likelihood(memory, c) for c in cands]
    best = max(likes)
    ties = [c for c, lk in zip(cands, likes) if lk >= best - LIKELIHOOD_TIE_TOL]
    alice_guess = ties[0]
    return EveGuess(alice_guess, announced ^ alice_guess, len(ties) > 1)


def _bits(code):
    if code is None:
        return None
    return list(code.bits) if isinstance(code, QuadCode) else list(code)


class Eve:
    """Binds a strategy to the hook interface expected by the round functions."""

    def __init__(self, strategy: EveStrategy):
        self.strategy = strategy

    def forward(self, rs: RoundState, rng=None) -> None:
        eve_forward_hook(self.strategy, rs, rng)

    def backward(self, rs: RoundState, rng) -> None:
        eve_backward_hook(self.strategy, rs, rng)

    def infer(self, rs: RoundState) -> dict:
        mem = _memory(rs)
        mem.public_log = [list(a) for a in rs.announcements]
        guess = eve_infer(self.strategy, mem, mem.public_log, rs.protocol)
        return {
            "strategy": str(self.strategy),
            "held": list(mem.held),
            "readings": {k: _bits(v) for k, v in sorted(mem.readings.items())},
            "ancilla": [list(a) for a in mem.ancilla],
            "alice_guess": _bits(guess.alice_guess),
            "bob_guess": _bits(guess.bob_guess),
            "uncertain": guess.uncertain,
        }


def make_eve(strategy: EveStrategy | None):
    """Strategy ``none`` still gets an :class:`Eve` so it can guess from the public log."""
    return None if strategy is None else Eve(strategy)
