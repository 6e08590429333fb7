import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdialogue.adversary import EveStrategy
from qdialogue.ghz_codec import QuadCode
from qdialogue.harness import (
    ConfigError,
    ExperimentConfig,
    Ratio,
    Stats,
    TranscriptError,
    iter_rounds,
    run_experiment,
    summarize,
    within_band,
)
from qdialogue.protocol import BASELINE, REVISED, Mode, RoundRecord


def run(**kw):
    return run_experiment(ExperimentConfig(**kw))


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"protocol": "other"},
        {"rounds": 0},
        {"cm_probability": 1.5},
        {"s7_reveal_fraction": -0.1},
        {"seed": -1},
        {"message_source": "file"},
        {"message_source": "bitstring", "alice_message": "0101", "bob_message": "010"},
        {"message_source": "bitstring", "alice_message": "01a", "bob_message": "010"},
        {"protocol": BASELINE, "checking_bits": True},
        {"protocol": BASELINE, "strategy": EveStrategy.parse("intercept-resend:p")},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw).validate()

    def test_error_before_any_round(self):
        rounds = iter_rounds(ExperimentConfig(rounds=-3))
        with pytest.raises(ConfigError):
            next(rounds)


class TestRuns:
    def test_honest_revised(self):
        stats, _ = run(protocol=REVISED, rounds=1000, seed=7, s7_reveal_fraction=1.0, checking_bits=True)
        assert stats.alice_decode_error.count == 0 and stats.bob_decode_error.count == 0
        for r in (stats.cm_pass, stats.s7_pass, stats.checking_bits_pass):
            assert r.rate == 1.0
        assert stats.detection.count == 0 and stats.post_abort_rounds == 0

    def test_baseline_break(self):
        stats, _ = run(protocol=BASELINE, strategy=EveStrategy.parse("intercept-resend"), rounds=1000, seed=3)
        assert stats.eve_alice_accuracy.rate == 1.0 and stats.eve_bob_accuracy.rate == 1.0
        assert stats.cm_pass.rate == 1.0

    def test_conservation(self):
        stats, lines = run(rounds=500, seed=2, strategy=EveStrategy.parse("intercept-resend:t"))
        assert stats.cm_rounds + stats.mm_rounds == stats.rounds_total == len(lines) == 500
        assert stats.alice_decode_error.total == stats.mm_rounds == stats.bob_decode_error.total
        assert stats.cm_pass.total == stats.cm_rounds

    def test_post_abort_flags(self):
        _, lines = run(rounds=200, seed=1, strategy=EveStrategy.parse("intercept-resend"))
        recs = [RoundRecord.from_line(l) for l in lines]
        first = next(i for i, r in enumerate(recs) if r.failed)
        assert not any(r.post_abort for r in recs[: first + 1])
        assert all(r.post_abort for r in recs[first + 1:])

    def test_bitstring_messages(self):
        stats, lines = run(rounds=40, seed=5, cm_probability=0.3, message_source="bitstring",
                           alice_message="101011", bob_message="000111")
        recs = [RoundRecord.from_line(l) for l in lines]
        mm = [r for r in recs if r.mode is Mode.MM]
        expected_alice = [QuadCode.of(1, 0, 0, 1), QuadCode.of(0, 1, 0, 1)]
        expected_bob = [QuadCode.of(0, 0, 0, 0), QuadCode.of(1, 1, 0, 1)]
        for k, r in enumerate(mm):
            assert r.alice_code == expected_alice[k % 2] and r.bob_code == expected_bob[k % 2]
            assert r.bob_decoded == r.alice_code

    def test_deterministic(self):
        cfg = dict(rounds=300, seed=99, strategy=EveStrategy.parse("entangle-measure:both:X"), s7_reveal_fraction=0.5)
        a = run(**cfg)
        b = run(**cfg)
        assert a[1] == b[1] and a[0] == b[0]
        assert summarize(a[1]) == a[0]

    def test_seeds_differ_but_agree_statistically(self):
        s1, l1 = run(rounds=2000, seed=1, strategy=EveStrategy.parse("intercept-resend"), cm_probability=1.0)
        s2, l2 = run(rounds=2000, seed=2, strategy=EveStrategy.parse("intercept-resend"), cm_probability=1.0)
        assert l1 != l2
        assert within_band(s1.cm_pass, s2.cm_pass.rate, sigmas=6)

    def test_lines_are_json(self):
        _, lines = run(rounds=5)
        assert all(isinstance(json.loads(l), dict) for l in lines)


class TestSummarize:
    def test_empty(self):
        assert summarize([]) == Stats()
        assert Stats().cm_pass.rate is None

    def test_single_honest_mm(self):
        stats, lines = run(rounds=20, seed=0, cm_probability=0.0)
        one = summarize(lines[:1])
        assert one.alice_decode_error == Ratio(0, 1) and one.bob_decode_error == Ratio(0, 1)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 60))
    def test_concatenation(self, cut):
        _, lines = run(rounds=60, seed=4, strategy=EveStrategy.parse("intercept-resend:p"))
        assert summarize(lines) == summarize(lines[:cut]) + summarize(lines[cut:])

    def test_malformed_line_number(self):
        _, lines = run(rounds=3)
        with pytest.raises(TranscriptError, match="line 2"):
            summarize([lines[0], "{not json", lines[2]])

    def test_blank_lines_skipped(self):
        stats, lines = run(rounds=3)
        assert summarize(lines[:1] + [""] + lines[1:]) == stats


class TestStatsOutput:
    def test_ratios_in_range(self):
        stats, _ = run(rounds=300, seed=8, strategy=EveStrategy.parse("entangle-measure"), s7_reveal_fraction=1.0)
        for value in stats.to_dict().values():
            if isinstance(value, dict) and value["rate"] is not None:
                assert 0 <= value["rate"] <= 1

    def test_table_header_and_rows(self):
        stats, _ = run(rounds=10)
        rows = stats.to_table().splitlines()
        assert rows[0] == "statistic,count,total,rate"
        assert len(rows) == 1 + len(stats.to_dict())

    def test_dict_key_order_is_stable(self):
        assert list(Stats().to_dict())[:3] == ["rounds_total", "cm_rounds", "mm_rounds"]

    def test_within_band_exact(self):
        assert within_band(Ratio(10, 10), 1.0)
        assert not within_band(Ratio(9, 10), 1.0)
        assert not within_band(Ratio(0, 0), 0.5)
