"""
Exact, sample-free reference values for every (protocol, strategy) pair.

Nothing here calls the round state machines or the adversary hooks.  Each
attack is rebuilt directly from the codec states as a weighted ensemble of
pure states, and all probabilities come from
:func:`qdialogue.qstate.exact_distribution`.  Messages are uniform over all
admissible codes and the control-mode basis is Z or X with probability 1/2,
matching what the Monte-Carlo runner draws.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import qstate
from .adversary import EveStrategy, Kind, Scope
from .ghz_codec import (
    ADMISSIBLE_QUADS,
    TWO_BIT_CODES,
    QuadCode,
    bell_family,
    encode,
    epr_seed,
    ghz_family,
    ghz_seed,
    allowed_outcomes,
    pauli_from_code,
)
from .protocol import BASELINE, REVISED
from .qstate import StateVector, exact_distribution

TIE_TOL = 1e-12
BASES = (qstate.Z, qstate.X)


@dataclass
class OracleReport:
    """
    Exact probabilities.  ``cm_pass`` maps a basis (``"BELL"`` for the
    baseline) to per-encoding pass probabilities; the ``*_mean`` entries average
    over uniform encodings (and bases).  ``s7_pass_mean`` is the pass
    probability of a fully revealed message round.
    """

    protocol: str
    strategy: str
    cm_pass: dict = field(default_factory=dict)
    cm_pass_mean: float = 1.0
    cm_detection: float = 0.0
    s7_pass_mean: Optional[float] = None
    checking_bits_pass_mean: Optional[float] = None
    decode_error: float = 0.0
    eve_alice_accuracy: float = 0.0
    eve_bob_accuracy: float = 0.0
    eve_alice_block_accuracy: float = 0.0
    eve_bob_block_accuracy: float = 0.0

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "strategy": self.strategy,
            "cm_pass": {b: dict(v) for b, v in self.cm_pass.items()},
            "cm_pass_mean": self.cm_pass_mean,
            "cm_detection": self.cm_detection,
            "s7_pass_mean": self.s7_pass_mean,
            "checking_bits_pass_mean": self.checking_bits_pass_mean,
            "decode_error": self.decode_error,
            "eve_alice_accuracy": self.eve_alice_accuracy,
            "eve_bob_accuracy": self.eve_bob_accuracy,
            "eve_alice_block_accuracy": self.eve_alice_block_accuracy,
            "eve_bob_block_accuracy": self.eve_bob_block_accuracy,
        }


def as_fraction(p: Optional[float]) -> str:
    """Render a probability as a small rational when it is one (all values here are dyadic)."""
    if p is None:
        return "-"
    f = Fraction(p).limit_denominator(4096)
    if abs(float(f) - p) > 1e-12:
        return repr(p)
    return str(f)


def _snap(p: Optional[float]) -> Optional[float]:
    """Round off float noise: every exact value here is a small dyadic rational."""
    if p is None:
        return None
    f = Fraction(p).limit_denominator(4096)
    return float(f) if abs(float(f) - p) <= 1e-12 else p


# -- state construction ----------------------------------------------------


def _probe(ensemble: list, qubit: int, basis: str) -> list:
    """
    CNOT from ``qubit`` onto a fresh |0> ancilla, ancilla measured in ``basis``.
    Returns the ensemble refined by the ancilla outcome.
    """
    out = []
    for weight, obs, state in ensemble:
        n = state.n_qubits
        src = np.kron(state.amplitudes, np.array([1.0, 0.0]))
        flipped = np.zeros_like(src)
        for idx in range(src.size):
            control = (idx >> (n - qubit)) & 1  # ancilla is the last bit
            flipped[idx ^ control] = src[idx]
        for bit, vec in enumerate(qstate.BASIS_VECTORS[basis]):
            cond = flipped.reshape(-1, 2) @ vec.conj()
            p = float(np.vdot(cond, cond).real)
            if p > TIE_TOL:
                out.append((weight * p, obs + (bit,), StateVector(n, cond / np.sqrt(p))))
    return out


def _apply_code(state: StateVector, qubit: int, code) -> StateVector:
    return qstate.apply_1q(state, qubit, pauli_from_code(code))


def _final_ensemble(proto: str, strategy: EveStrategy, alice, bob) -> list:
    """
    Bob's register just before his final measurement, as (weight, eve_obs, state)
    branches, where ``eve_obs`` is what Eve saw on her own qubits.
    """
    if proto == REVISED:
        start = encode(ghz_seed(), bob)
    else:
        start = _apply_code(epr_seed(), 1, bob)
    kind = strategy.kind

    if kind is Kind.INTERCEPT_RESEND and proto == REVISED and strategy.scope is Scope.BOTH:
        # Eve's own GHZ triple carries Alice's code; she reads it and copies it onto t, p
        eve_reg = encode(ghz_seed(), alice)
        fam = ghz_family()
        branches = []
        for (r,), w in exact_distribution(eve_reg, [((0, 1, 2), fam)]).items():
            if w > TIE_TOL:
                read = fam.labels[r]
                branches.append((w, ("quad",) + read.bits, encode(start, read)))
        return branches

    if kind is Kind.INTERCEPT_RESEND:
        slot = "t" if proto == BASELINE or strategy.scope is Scope.T_ONLY else "p"
        qubit = 1 if slot == "t" else 2
        if proto == REVISED:
            alice_part = alice.t_code if slot == "t" else alice.p_code
            other_qubit, other_part = (2, alice.p_code) if slot == "t" else (1, alice.t_code)
            start = _apply_code(start, other_qubit, other_part)  # the untouched channel
        else:
            alice_part = alice
        eve_reg = _apply_code(epr_seed(), 1, alice_part)
        fam = bell_family()
        branches = []
        for (r,), w in exact_distribution(eve_reg, [((0, 1), fam)]).items():
            if w > TIE_TOL:
                read = fam.labels[r]
                branches.append((w, (slot,) + tuple(read), _apply_code(start, qubit, read)))
        return branches

    honest = encode(start, alice) if proto == REVISED else _apply_code(start, 1, alice)
    ensemble = [(1.0, (), honest)]
    if kind is Kind.ENTANGLE_MEASURE:
        targets = {"t": (1,), "p": (2,), "both": (1, 2)}[strategy.probe_target]
        for q in targets:
            ensemble = _probe(ensemble, q, strategy.probe_basis)
    return ensemble


def _joint(proto: str, strategy: EveStrategy, alice, bob) -> dict:
    """P(eve_obs, Bob's result) for one message pair."""
    fam = ghz_family() if proto == REVISED else bell_family()
    qubits = (0, 1, 2) if proto == REVISED else (0, 1)
    joint: dict = defaultdict(float)
    for w, obs, state in _final_ensemble(proto, strategy, alice, bob):
        for (r,), p in exact_distribution(state, [(qubits, fam)]).items():
            if p > TIE_TOL:
                joint[(obs, fam.labels[r])] += w * p
    return dict(joint)


# -- control-mode checks ---------------------------------------------------


def _revised_cm_pass(strategy: EveStrategy, bob: QuadCode, basis: str) -> float:
    bob_state = encode(ghz_seed(), bob)
    allowed = allowed_outcomes(bob, basis)
    scope = strategy.scope if strategy.kind is Kind.INTERCEPT_RESEND else None
    if scope is Scope.BOTH:
        # h stays with Bob; Alice measures T, P of Eve's GHZ triple
        d_h = exact_distribution(bob_state, [((0,), basis)])
        d_tp = exact_distribution(ghz_seed(), [((1,), basis), ((2,), basis)])
        joint = {(h, t, p): d_h[(h,)] * d_tp[(t, p)] for (h,) in d_h for (t, p) in d_tp}
    elif scope is Scope.T_ONLY:
        d_hp = exact_distribution(bob_state, [((0,), basis), ((2,), basis)])
        d_t = exact_distribution(epr_seed(), [((1,), basis)])
        joint = {(h, t, p): d_hp[(h, p)] * d_t[(t,)] for (h, p) in d_hp for (t,) in d_t}
    elif scope is Scope.P_ONLY:
        d_ht = exact_distribution(bob_state, [((0,), basis), ((1,), basis)])
        d_p = exact_distribution(epr_seed(), [((1,), basis)])
        joint = {(h, t, p): d_ht[(h, t)] * d_p[(p,)] for (h, t) in d_ht for (p,) in d_p}
    else:
        # entangle-measure acts only on the return leg, which control rounds never use
        joint = exact_distribution(bob_state, basis * 3)
    return sum(joint[o] for o in allowed)


# -- Eve's optimal guess ---------------------------------------------------


def _eve_accuracies(codes: tuple, joints: dict) -> tuple:
    """
    Eve guesses Alice's code by maximum likelihood over (her observation, the
    announced result) with a uniform prior, ties to the lowest code index, and
    Bob's code as announced XOR that guess.
    """
    likelihood: dict = defaultdict(lambda: defaultdict(float))
    for (alice, _bob), joint in joints.items():
        for key, p in joint.items():
            likelihood[key][alice] += p
    guess = {}
    for key, per_alice in likelihood.items():
        best = max(per_alice.values())
        guess[key] = next(c for c in codes if per_alice.get(c, 0.0) >= best - TIE_TOL)

    def blocks(code):
        return [code.t_code, code.p_code] if isinstance(code, QuadCode) else [code]

    acc = defaultdict(float)
    n = len(joints)
    for (alice, bob), joint in joints.items():
        for key, p in joint.items():
            g_alice = guess[key]
            g_bob = key[1] ^ g_alice
            acc["alice"] += p * (g_alice == alice) / n
            acc["bob"] += p * (g_bob == bob) / n
            ba, bb = blocks(alice), blocks(bob)
            acc["alice_block"] += p * np.mean([x == y for x, y in zip(blocks(g_alice), ba)]) / n
            acc["bob_block"] += p * np.mean([x == y for x, y in zip(blocks(g_bob), bb)]) / n
    return acc["alice"], acc["bob"], acc["alice_block"], acc["bob_block"]


def exact_oracle(proto: str, strategy: EveStrategy) -> OracleReport:
    strategy.check_protocol(proto)
    codes = ADMISSIBLE_QUADS if proto == REVISED else TWO_BIT_CODES
    report = OracleReport(proto, str(strategy))
    joints = {(a, b): _joint(proto, strategy, a, b) for a in codes for b in codes}
    n_pairs = len(joints)

    correct = {pair: sum(p for (_, r), p in j.items() if r == pair[0] ^ pair[1]) for pair, j in joints.items()}
    report.decode_error = 1.0 - sum(correct.values()) / n_pairs

    if proto == REVISED:
        for basis in BASES:
            report.cm_pass[basis] = {str(b): _revised_cm_pass(strategy, b, basis) for b in codes}
        report.cm_pass_mean = float(np.mean([p for table in report.cm_pass.values() for p in table.values()]))
        report.s7_pass_mean = sum(correct.values()) / n_pairs
        report.checking_bits_pass_mean = sum(
            p for (a, b), j in joints.items() for (_, r), p in j.items() if r.p_code == a.p_code ^ b.p_code
        ) / n_pairs
    else:
        # Alice reveals her code and Bob compares it with his Bell result
        report.cm_pass["BELL"] = {f"{b}|{a}": correct[(a, b)] for a in codes for b in codes}
        report.cm_pass_mean = sum(correct.values()) / n_pairs
    report.cm_detection = 1.0 - report.cm_pass_mean

    (report.eve_alice_accuracy, report.eve_bob_accuracy,
     report.eve_alice_block_accuracy, report.eve_bob_block_accuracy) = _eve_accuracies(codes, joints)
    report.cm_pass = {b: {k: _snap(p) for k, p in t.items()} for b, t in report.cm_pass.items()}
    for name in ("cm_pass_mean", "cm_detection", "s7_pass_mean", "checking_bits_pass_mean", "decode_error",
                 "eve_alice_accuracy", "eve_bob_accuracy", "eve_alice_block_accuracy", "eve_bob_block_accuracy"):
        setattr(report, name, _snap(getattr(report, name)))
    return report
