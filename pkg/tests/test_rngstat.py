import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mdlbell import rngstat

# seeds verified to pass all four tests at alpha=0.01 on 10^6 bits
PASSING_SEEDS = (0, 1, 2, 3, 4)


def alternating(n: int) -> np.ndarray:
    return np.tile(np.array([0, 1], dtype=np.uint8), n // 2)


class TestMonobit:
    def test_all_zeros_fails(self):
        report = rngstat.monobit_test(np.zeros(1000, dtype=np.uint8))
        assert report.p_value == pytest.approx(0.0, abs=1e-100)
        assert not report.passed

    def test_alternation_passes(self):
        assert rngstat.monobit_test(alternating(1000)).p_value == 1.0

    def test_too_short(self):
        with pytest.raises(rngstat.InsufficientDataError, match="100"):
            rngstat.monobit_test(np.zeros(99, dtype=np.uint8))


class TestRuns:
    def test_alternation_fails(self):
        report = rngstat.runs_test(alternating(1000))
        assert report.p_value < 0.01

    def test_all_zeros_fails_via_pretest(self):
        report = rngstat.runs_test(np.zeros(1000, dtype=np.uint8))
        assert report.p_value == 0.0
        assert report.details["frequency_pretest"] == "failed"


class TestSerial:
    def test_alternation_fails(self):
        report = rngstat.serial_test(alternating(1000), pattern_len=2)
        assert report.p_value < 0.01
        assert not report.passed

    def test_reports_both_p_values(self, uniform_bits):
        report = rngstat.serial_test(uniform_bits(1, 10000), pattern_len=3)
        assert {"p1", "p2"} <= set(report.details)
        assert report.p_value == min(report.details["p1"], report.details["p2"])

    def test_minimum_length_named(self):
        with pytest.raises(rngstat.InsufficientDataError, match="40"):
            rngstat.serial_test(np.zeros(39, dtype=np.uint8), pattern_len=2)


class TestBlockFrequency:
    def test_blocky_stream_fails(self):
        bits = np.concatenate([np.zeros(500, dtype=np.uint8),
                               np.ones(500, dtype=np.uint8)] * 10)
        assert not rngstat.block_frequency_test(bits, block_len=50).passed

    def test_minimum_length(self):
        with pytest.raises(rngstat.InsufficientDataError):
            rngstat.block_frequency_test(np.zeros(100, dtype=np.uint8), block_len=64)


@pytest.mark.parametrize("seed", PASSING_SEEDS)
def test_uniform_fixture_streams_pass_battery(uniform_bits, seed):
    reports = rngstat.run_battery(uniform_bits(seed, 10 ** 6))
    assert all(r.passed for r in reports), {r.name: r.p_value for r in reports}


class TestPatternScan:
    def test_overlapping_runs(self):
        hits = rngstat.pattern_scan("0000000", ["000000"])["000000"]
        assert hits.count == 2
        assert hits.positions == (0, 1)

    def test_alternating_stream_pattern_family(self):
        # 95 sliding windows in a 100-bit alternation: 48 match the pattern,
        # 47 its complement; together they cover every window.
        stream = "01" * 50
        hits = rngstat.pattern_scan(stream, ["010101", "101010"])
        assert hits["010101"].count == 48
        assert hits["101010"].count == 47
        assert hits["010101"].count + hits["101010"].count == 95

    def test_uniform_expectation(self, uniform_bits):
        n = 10 ** 6
        hits = rngstat.pattern_scan(uniform_bits(7, n), ["010011"])["010011"]
        expect = (n - 5) / 64
        sigma = (expect * (1 - 1 / 64)) ** 0.5
        assert abs(hits.count - expect) < 5 * sigma

    def test_pattern_longer_than_stream(self):
        assert rngstat.pattern_scan("01", ["0101"])["0101"].count == 0

    @given(st.text(alphabet="01", min_size=0, max_size=300),
           st.text(alphabet="01", min_size=1, max_size=6))
    @settings(max_examples=100)
    def test_matches_naive_oracle(self, stream, pattern):
        count, positions = oracles.naive_pattern_count(stream, pattern)
        got = rngstat.pattern_scan(stream, [pattern])[pattern]
        assert got.count == count
        assert list(got.positions) == positions


class TestMinEntropy:
    def test_all_zeros(self):
        assert rngstat.min_entropy(np.zeros(1000, dtype=np.uint8), 1) == 0.0

    def test_alternation_block1(self):
        assert rngstat.min_entropy(alternating(1000), 1) == 1.0

    def test_alternation_block2(self):
        assert rngstat.min_entropy(alternating(1000), 2) == 0.5

    def test_insufficient_data(self):
        with pytest.raises(rngstat.InsufficientDataError):
            rngstat.min_entropy(np.zeros(100, dtype=np.uint8), 5)

    @given(st.text(alphabet="01", min_size=40, max_size=400),
           st.integers(min_value=1, max_value=2))
    @settings(max_examples=60)
    def test_never_exceeds_one(self, stream, block_len):
        h = rngstat.min_entropy(stream, block_len)
        assert 0.0 <= h <= 1.0


class TestSymmetry:
    @given(st.integers(min_value=0, max_value=2 ** 30))
    @settings(max_examples=25, deadline=None)
    def test_relabeling_invariance(self, seed):
        bits = np.random.default_rng(seed).integers(0, 2, 4000, dtype=np.uint8)
        flipped = (1 - bits).astype(np.uint8)
        for test in (rngstat.monobit_test, rngstat.runs_test, rngstat.serial_test):
            assert test(bits).p_value == pytest.approx(test(flipped).p_value, abs=1e-9)

    @given(st.integers(min_value=0, max_value=2 ** 30))
    @settings(max_examples=25, deadline=None)
    def test_p_values_in_range(self, seed):
        bits = np.random.default_rng(seed).integers(0, 2, 4000, dtype=np.uint8)
        for report in rngstat.run_battery(bits):
            assert 0.0 <= report.p_value <= 1.0
            assert report.passed == (report.p_value >= report.alpha)
