"""
Monte-Carlo experiment runner and transcript statistics.

Every round draws from its own generator seeded with ``(seed, round_index)``,
so a transcript depends only on the configuration.  Transcripts are JSON lines,
one :class:`~qdialogue.protocol.RoundRecord` per line; :func:`summarize` folds
them back into the same :class:`Stats` the run reported.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Optional

import numpy as np

from . import adversary, protocol
from .adversary import EveStrategy
from .ghz_codec import QuadCode, TwoBitCode
from .oracle import OracleReport, exact_oracle  # noqa: F401  (re-exported)
from .protocol import BASELINE, REVISED, Mode, RoundRecord, Verdict

log = logging.getLogger(__name__)

BAND_SIGMAS = 4.0


class ConfigError(ValueError):
    pass


class TranscriptError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str = REVISED
    strategy: EveStrategy = field(default_factory=EveStrategy)
    rounds: int = 1000
    cm_probability: float = 0.5
    s7_reveal_fraction: float = 0.1
    seed: int = 0
    message_source: str = "random"
    alice_message: str = ""
    bob_message: str = ""
    checking_bits: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.protocol not in protocol.PROTOCOLS:
            raise ConfigError(f"protocol must be one of {protocol.PROTOCOLS}, got {self.protocol!r}")
        if not isinstance(self.strategy, EveStrategy):
            raise ConfigError("strategy must be an EveStrategy")
        try:
            self.strategy.check_protocol(self.protocol)
        except adversary.StrategyError as exc:
            raise ConfigError(str(exc)) from None
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ConfigError(f"rounds must be a positive integer, got {self.rounds!r}")
        for name in ("cm_probability", "s7_reveal_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.message_source not in ("random", "bitstring"):
            raise ConfigError(f"message_source must be 'random' or 'bitstring', got {self.message_source!r}")
        if self.message_source == "bitstring":
            width = _chunk_width(self.protocol)
            for name in ("alice_message", "bob_message"):
                bits = getattr(self, name)
                if not bits or set(bits) - {"0", "1"} or len(bits) % width:
                    raise ConfigError(f"{name} must be a non-empty 0/1 string whose length is a multiple of {width}")
        if self.checking_bits and self.protocol == BASELINE:
            raise ConfigError("checking bits exist only in the revised protocol")
        return self


def _chunk_width(proto: str) -> int:
    # revised: (i, j, g) with the structural zero f filled in; baseline: (i, j)
    return 3 if proto == REVISED else 2


def _code_from_chunk(proto: str, chunk) -> object:
    bits = [int(b) for b in chunk]
    if proto == REVISED:
        return QuadCode.of(bits[0], bits[1], 0, bits[2])
    return TwoBitCode(bits[0], bits[1])


def round_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


@dataclass(frozen=True)
class Ratio:
    count: int = 0
    total: int = 0

    @property
    def rate(self) -> Optional[float]:
        return self.count / self.total if self.total else None

    def __add__(self, other: "Ratio") -> "Ratio":
        return Ratio(self.count + other.count, self.total + other.total)

    def to_dict(self) -> dict:
        return {"count": self.count, "total": self.total, "rate": self.rate}


@dataclass(frozen=True)
class Stats:
    """
    Aggregates over a transcript.

    ``alice_decode_error`` is Bob misreading Alice's code and ``bob_decode_error``
    the converse; both are over MM rounds.  Eve's accuracies are over MM rounds
    (full code) and over 2-bit blocks (one per code in the baseline, t and p in
    the revised protocol).  ``detection`` counts rounds with a failed check among
    rounds where any check ran.
    """

    rounds_total: int = 0
    cm_rounds: int = 0
    mm_rounds: int = 0
    post_abort_rounds: int = 0
    cm_pass: Ratio = Ratio()
    s7_pass: Ratio = Ratio()
    checking_bits_pass: Ratio = Ratio()
    alice_decode_error: Ratio = Ratio()
    bob_decode_error: Ratio = Ratio()
    eve_alice_accuracy: Ratio = Ratio()
    eve_bob_accuracy: Ratio = Ratio()
    eve_alice_block_accuracy: Ratio = Ratio()
    eve_bob_block_accuracy: Ratio = Ratio()
    detection: Ratio = Ratio()

    def __add__(self, other: "Stats") -> "Stats":
        return Stats(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    @classmethod
    def of_record(cls, rec: RoundRecord) -> "Stats":
        d: dict = {"rounds_total": 1, "post_abort_rounds": int(rec.post_abort)}
        if rec.mode is Mode.CM:
            d["cm_rounds"] = 1
        else:
            d["mm_rounds"] = 1
            d["alice_decode_error"] = Ratio(int(rec.bob_decoded != rec.alice_code), 1)
            d["bob_decode_error"] = Ratio(int(rec.alice_decoded != rec.bob_code), 1)
            guess_a = rec.eve_record.get("alice_guess")
            guess_b = rec.eve_record.get("bob_guess")
            if guess_a is not None:
                d["eve_alice_accuracy"] = _accuracy(guess_a, rec.alice_code)
                d["eve_alice_block_accuracy"] = _block_accuracy(guess_a, rec.alice_code)
            if guess_b is not None:
                d["eve_bob_accuracy"] = _accuracy(guess_b, rec.bob_code)
                d["eve_bob_block_accuracy"] = _block_accuracy(guess_b, rec.bob_code)
        for key, name in (("cm", "cm_pass"), ("s7", "s7_pass"), ("checking_bits", "checking_bits_pass")):
            verdict = rec.verdicts[key]
            if verdict is not Verdict.NOT_RUN:
                d[name] = Ratio(int(verdict is Verdict.PASS), 1)
        if rec.checked:
            d["detection"] = Ratio(int(rec.failed), 1)
        return cls(**d)

    @classmethod
    def fold(cls, records: Iterable[RoundRecord]) -> "Stats":
        total = cls()
        for rec in records:
            total = total + cls.of_record(rec)
        return total

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.to_dict() if isinstance(value, Ratio) else value
        return out

    def to_table(self) -> str:
        """Flat CSV: one row per statistic with count, total and rate columns."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["statistic", "count", "total", "rate"])
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Ratio):
                writer.writerow([f.name, value.count, value.total, "" if value.rate is None else repr(value.rate)])
            else:
                writer.writerow([f.name, value, "", ""])
        return buf.getvalue()


def _bits(code) -> list:
    return list(code.bits) if isinstance(code, QuadCode) else list(code)


def _accuracy(guess: list, truth) -> Ratio:
    return Ratio(int(list(guess) == _bits(truth)), 1)


def _block_accuracy(guess: list, truth) -> Ratio:
    truth = _bits(truth)
    blocks = [(0, 2)] if len(truth) == 2 else [(0, 2), (2, 4)]
    hits = sum(list(guess[a:b]) == truth[a:b] for a, b in blocks)
    return Ratio(hits, len(blocks))


class _Messages:
    """Hands out codes for MM rounds: uniform random, or fixed bitstrings consumed cyclically."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.width = _chunk_width(cfg.protocol)
        self.mm_count = 0

    def random_pair(self, rng: np.random.Generator) -> tuple:
        bits = rng.integers(0, 2, size=2 * self.width)
        return (_code_from_chunk(self.cfg.protocol, bits[: self.width]),
                _code_from_chunk(self.cfg.protocol, bits[self.width:]))

    def message_pair(self, rng: np.random.Generator) -> tuple:
        if self.cfg.message_source == "random":
            return self.random_pair(rng)
        w = self.width
        out = []
        for msg in (self.cfg.bob_message, self.cfg.alice_message):
            n_chunks = len(msg) // w
            k = self.mm_count % n_chunks
            out.append(_code_from_chunk(self.cfg.protocol, msg[k * w:(k + 1) * w]))
        self.mm_count += 1
        return tuple(out)


def iter_rounds(cfg: ExperimentConfig):
    """Yield round records in index order; records after the first failed check are flagged post-abort."""
    cfg.validate()
    eve = adversary.make_eve(cfg.strategy)
    messages = _Messages(cfg)
    aborted = False
    for i in range(cfg.rounds):
        rng = round_rng(cfg.seed, i)
        mode = Mode.CM if rng.random() < cfg.cm_probability else Mode.MM
        # control rounds are sacrificed, so they carry throwaway random codes
        bob, alice = messages.message_pair(rng) if mode is Mode.MM else messages.random_pair(rng)
        if cfg.protocol == REVISED:
            rec = protocol.run_round_revised(bob, alice, mode, rng, eve, cfg.s7_reveal_fraction,
                                             cfg.checking_bits, index=i)
        else:
            rec = protocol.run_round_nguyen(bob, alice, mode, rng, eve, index=i)
        rec.post_abort = aborted
        if rec.failed and not aborted:
            log.info("round %d failed a check; session aborted", i)
            aborted = True
        yield rec


def run_experiment(cfg: ExperimentConfig) -> tuple:
    """
    Run ``cfg.rounds`` rounds.

    Returns
    -------
    (Stats, list of str)
        Aggregate statistics and the transcript lines.
    """
    lines = []
    stats = Stats()
    for rec in iter_rounds(cfg):
        line = rec.to_line()
        lines.append(line)
        stats = stats + Stats.of_record(rec)
    return stats, lines


def summarize(lines: Iterable[str]) -> Stats:
    stats = Stats()
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = RoundRecord.from_line(line)
        except (ValueError, KeyError, TypeError) as exc:
            raise TranscriptError(f"line {n}: {exc}") from None
        stats = stats + Stats.of_record(rec)
    return stats


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def within_band(observed: Ratio, expected: float, sigmas: float = BAND_SIGMAS) -> bool:
    """Observed rate within ``sigmas`` binomial standard errors of ``expected`` (exact match when se = 0)."""
    if not observed.total:
        return False
    se = binomial_se(expected, observed.total)
    return abs(observed.rate - expected) <= sigmas * se + 1e-12
