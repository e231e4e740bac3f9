"""Bitstream quality diagnostics: a four-test battery plus pattern tools.

The four tests (monobit, block frequency, runs, serial) follow the public
reference formulas of the standard statistical test suite for random bit
generators; this is deliberately a small demonstration battery, not a
conformance implementation. `pattern_scan` and `min_entropy` quantify the
kind of visible structure (repeated and alternating runs) that shows up in
human-typed bitstreams.

All functions are pure; a stream that is too short for a test raises
InsufficientDataError naming the minimum length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

DEFAULT_ALPHA = 0.01


class InsufficientDataError(ValueError):
    pass


def as_bits(stream) -> np.ndarray:
    """Coerce a str / sequence / ndarray of 0s and 1s to a uint8 array."""
    if isinstance(stream, BitStream):
        return stream.bits
    if isinstance(stream, str):
        stream = [int(ch) for ch in stream if not ch.isspace()]
    bits = np.asarray(stream, dtype=np.uint8).reshape(-1)
    if bits.size and bits.max() > 1:
        raise ValueError("stream contains non-binary symbols")
    return bits


@dataclass(frozen=True)
class BitStream:
    """A finite labeled bitstream."""

    bits: np.ndarray
    origin: str = ""

    def __post_init__(self):
        b = as_bits(self.bits)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    def __len__(self):
        return self.bits.size


@dataclass(frozen=True)
class TestReport:
    name: str
    p_value: float
    alpha: float
    n: int
    statistic: float
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha


def _require(n: int, minimum: int, test: str):
    if n < minimum:
        raise InsufficientDataError(
            f"{test} needs at least {minimum} bits, got {n}")


def monobit_test(stream, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Overall balance of ones vs zeros."""
    bits = as_bits(stream)
    n = bits.size
    _require(n, 100, "monobit")
    s = abs(int(bits.sum()) * 2 - n) / math.sqrt(n)
    p = math.erfc(s / math.sqrt(2.0))
    return TestReport("monobit", p, alpha, n, s)


def block_frequency_test(stream, block_len: int = 128,
                         alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Balance of ones within fixed-size blocks (chi-squared)."""
    bits = as_bits(stream)
    n = bits.size
    if block_len < 1:
        raise ValueError("block length must be >= 1")
    _require(n, 20 * block_len, f"block-frequency(M={block_len})")
    nblocks = n // block_len
    pi = bits[:nblocks * block_len].reshape(nblocks, block_len).mean(axis=1)
    chi2 = 4.0 * block_len * float(((pi - 0.5) ** 2).sum())
    p = float(gammaincc(nblocks / 2.0, chi2 / 2.0))
    return TestReport("block-frequency", p, alpha, n, chi2,
                      details={"block_len": block_len, "blocks": nblocks})


def runs_test(stream, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Total number of runs (maximal same-bit stretches).

    Per the reference suite the test reports p = 0 outright when the
    one-fraction is too far from 1/2 for the run statistic to apply.
    """
    bits = as_bits(stream)
    n = bits.size
    _require(n, 100, "runs")
    pi = float(bits.mean())
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return TestReport("runs", 0.0, alpha, n, float("nan"),
                          details={"frequency_pretest": "failed", "pi": pi})
    v = 1 + int(np.count_nonzero(np.diff(bits)))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p = math.erfc(num / den)
    return TestReport("runs", p, alpha, n, float(v), details={"pi": pi})


def _psi_squared(bits: np.ndarray, m: int) -> float:
    """Sum-of-squares statistic over cyclic overlapping m-bit windows."""
    if m <= 0:
        return 0.0
    n = bits.size
    ext = np.concatenate([bits, bits[:m - 1]]) if m > 1 else bits
    codes = np.zeros(n, dtype=np.int64)
    for j in range(m):
        codes = (codes << 1) | ext[j:j + n]
    counts = np.bincount(codes, minlength=2 ** m)
    return (2 ** m / n) * float((counts.astype(float) ** 2).sum()) - n


def serial_test(stream, pattern_len: int = 2,
                alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Uniformity of overlapping pattern_len-bit windows.

    The reference procedure yields two p-values (first and second
    difference of the psi-squared statistics); the report's headline
    p-value is their minimum and both appear in the details.
    """
    bits = as_bits(stream)
    n = bits.size
    if pattern_len < 2:
        raise ValueError("pattern length must be >= 2")
    _require(n, 10 * 2 ** pattern_len, f"serial(m={pattern_len})")
    psi_m = _psi_squared(bits, pattern_len)
    psi_m1 = _psi_squared(bits, pattern_len - 1)
    psi_m2 = _psi_squared(bits, pattern_len - 2)
    d1 = max(psi_m - psi_m1, 0.0)  # clamp float dust; both are >= 0 in theory
    d2 = max(psi_m - 2.0 * psi_m1 + psi_m2, 0.0)
    p1 = float(gammaincc(2 ** (pattern_len - 2), d1 / 2.0))
    p2 = float(gammaincc(2 ** (pattern_len - 3), d2 / 2.0))
    return TestReport("serial", min(p1, p2), alpha, n, d1,
                      details={"pattern_len": pattern_len, "p1": p1, "p2": p2})


ALL_TESTS = {
    "monobit": monobit_test,
    "block-frequency": block_frequency_test,
    "runs": runs_test,
    "serial": serial_test,
}


def run_battery(stream, tests=None, alpha: float = DEFAULT_ALPHA,
                **kwargs) -> list[TestReport]:
    """Run named tests (default: all four) on one stream."""
    names = list(ALL_TESTS) if tests in (None, "all") else list(tests)
    reports = []
    for name in names:
        if name not in ALL_TESTS:
            raise ValueError(f"unknown test {name!r}; know {sorted(ALL_TESTS)}")
        reports.append(ALL_TESTS[name](stream, alpha=alpha, **kwargs.get(name, {})))
    return reports


@dataclass(frozen=True)
class PatternHits:
    pattern: str
    count: int
    positions: tuple[int, ...]


def pattern_scan(stream, patterns) -> dict[str, PatternHits]:
    """Overlapping exact-match counts and positions for each pattern."""
    bits = as_bits(stream)
    out = {}
    for pattern in patterns:
        pat = as_bits(pattern)
        m = pat.size
        if m == 0 or m > bits.size:
            key = "".join(str(b) for b in pat)
            out[key] = PatternHits(pattern=key, count=0, positions=())
            continue
        windows = np.lib.stride_tricks.sliding_window_view(bits, m)
        match = np.all(windows == pat, axis=1)
        positions = tuple(int(i) for i in np.flatnonzero(match))
        key = "".join(str(b) for b in pat)
        out[key] = PatternHits(pattern=key, count=len(positions), positions=positions)
    return out


def min_entropy(stream, block_len: int = 1) -> float:
    """Worst-case entropy per bit: -log2(max block frequency)/block_len.

    Blocks are overlapping and cyclic (same window convention as the serial
    test), so every bit heads exactly one block. A strictly alternating
    stream therefore scores 1.0 at block_len 1 (marginally unbiased despite
    being fully predictable -- a documented limitation of short blocks) and
    exactly 0.5 at block_len 2, where only two of the four blocks occur.
    """
    bits = as_bits(stream)
    if block_len < 1:
        raise ValueError("block length must be >= 1")
    n = bits.size
    _require(n, 10 * 2 ** block_len, f"min-entropy(block={block_len})")
    ext = np.concatenate([bits, bits[:block_len - 1]]) if block_len > 1 else bits
    codes = np.zeros(n, dtype=np.int64)
    for j in range(block_len):
        codes = (codes << 1) | ext[j:j + n]
    counts = np.bincount(codes, minlength=2 ** block_len)
    pmax = counts.max() / n
    return abs(-math.log2(pmax) / block_len)
