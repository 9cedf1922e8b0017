"""Tap-pattern adversary: observation masking and exact leakage.

Leakage is computed by enumerating every (library, key, randomization)
input tuple exactly once, running the deterministic scheme pipeline
vectorized over all tuples, and histogramming the tapped symbols.  All
probabilities are dyadic rationals represented by integer counts;
floating point enters only inside the final logarithms.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional

import numpy as np

from .core import DemandVector, SchemeConfig, derive_seed, validate_config
from .errors import (
    BudgetTooLarge,
    EnumerationTooLarge,
    IndexOutOfRange,
    NotNormalized,
)
from .schemes import SchemeRunner, encode_round, input_fields

MAX_ENUM_BITS = 26
DEFAULT_PATTERN_CAP = 10_000_000
PATTERN_CAP_ENV = "CACHETAP_MAX_PATTERNS"


def pattern_cap(override: Optional[int] = None) -> int:
    if override is not None:
        return override
    return int(os.environ.get(PATTERN_CAP_ENV, DEFAULT_PATTERN_CAP))


@dataclass(frozen=True)
class TapPattern:
    """The adversary's committed index sets, 1-indexed per phase."""

    s1: tuple
    s2: tuple

    def __post_init__(self):
        for s in (self.s1, self.s2):
            if list(s) != sorted(set(s)):
                raise IndexOutOfRange(f"tap set {s} must be sorted and duplicate-free")

    @property
    def size(self) -> int:
        return len(self.s1) + len(self.s2)

    def validate(self, n: int, mu: Optional[int] = None):
        for s in (self.s1, self.s2):
            if s and not (1 <= s[0] and s[-1] <= n):
                raise IndexOutOfRange(f"tap set {s} outside [1:{n}]")
        if mu is not None and self.size > mu:
            raise IndexOutOfRange(f"|S1|+|S2| = {self.size} exceeds budget {mu}")

    def key(self) -> tuple:
        return (self.s1, self.s2)


@dataclass(frozen=True)
class AdversaryView:
    """Erasure-masked per-phase observations over {0, 1, ?}."""

    z1: str
    z2: str


def observe(x_c, x_d, pattern: TapPattern) -> AdversaryView:
    """Copy tapped symbols; every untapped position reads '?'."""
    n = len(x_c)
    if len(x_d) != n:
        raise IndexOutOfRange("phase codewords must have equal length")
    pattern.validate(n)

    def mask(x, taps):
        word = str(x)
        return "".join(word[i - 1] if i in taps else "?" for i in range(1, n + 1))

    return AdversaryView(mask(x_c, set(pattern.s1)), mask(x_d, set(pattern.s2)))


# ---------------------------------------------------------------------------
# Pattern enumeration strategies.
# ---------------------------------------------------------------------------

EXHAUSTIVE = "exhaustive"
PHASE_SPLIT = "phase-split"
RANDOM = "random"
CONTIGUOUS = "contiguous"


@dataclass(frozen=True)
class Strategy:
    kind: str
    mu1: Optional[int] = None
    mu2: Optional[int] = None
    count: Optional[int] = None

    def describe(self) -> str:
        if self.kind == PHASE_SPLIT:
            return f"{self.kind}:{self.mu1},{self.mu2}"
        if self.kind == RANDOM:
            return f"{self.kind}:{self.count}"
        return self.kind


def parse_strategy(text) -> Strategy:
    if isinstance(text, Strategy):
        return text
    name, _, arg = text.partition(":")
    if name == EXHAUSTIVE:
        return Strategy(EXHAUSTIVE)
    if name == CONTIGUOUS:
        return Strategy(CONTIGUOUS)
    if name == PHASE_SPLIT:
        a, b = (int(x) for x in arg.split(","))
        return Strategy(PHASE_SPLIT, mu1=a, mu2=b)
    if name == RANDOM:
        return Strategy(RANDOM, count=int(arg))
    raise ValueError(f"unknown strategy {text!r}")


def _split(combo, n):
    s1 = tuple(i for i in combo if i <= n)
    s2 = tuple(i - n for i in combo if i > n)
    return TapPattern(s1, s2)


def pattern_count(n: int, mu: int, strategy) -> int:
    st = parse_strategy(strategy)
    if st.kind == EXHAUSTIVE:
        return math.comb(2 * n, mu)
    if st.kind == PHASE_SPLIT:
        return math.comb(n, st.mu1) * math.comb(n, st.mu2)
    if st.kind == RANDOM:
        return st.count
    total = 0
    for m1 in range(0, min(mu, n) + 1):
        m2 = mu - m1
        if m2 > n:
            continue
        c1 = 1 if m1 == 0 else n - m1 + 1
        c2 = 1 if m2 == 0 else n - m2 + 1
        total += c1 * c2
    return total


def tap_patterns(n: int, mu: int, strategy, seed: int = 0, max_patterns: Optional[int] = None):
    """Stream of TapPattern per the chosen strategy, deterministic per seed."""
    if mu > 2 * n:
        raise IndexOutOfRange(f"mu={mu} exceeds 2n={2 * n}")
    st = parse_strategy(strategy)
    cap = pattern_cap(max_patterns)
    count = pattern_count(n, mu, st)
    if count > cap:
        raise BudgetTooLarge(f"{st.describe()} needs {count} patterns, cap is {cap}")

    if st.kind == EXHAUSTIVE:
        for combo in combinations(range(1, 2 * n + 1), mu):
            yield _split(combo, n)
    elif st.kind == PHASE_SPLIT:
        if st.mu1 < 0 or st.mu2 < 0 or st.mu1 + st.mu2 > mu or st.mu1 > n or st.mu2 > n:
            raise IndexOutOfRange(f"phase split ({st.mu1}, {st.mu2}) incompatible with mu={mu}")
        for s1 in combinations(range(1, n + 1), st.mu1):
            for s2 in combinations(range(1, n + 1), st.mu2):
                yield TapPattern(s1, s2)
    elif st.kind == CONTIGUOUS:
        for m1 in range(0, min(mu, n) + 1):
            m2 = mu - m1
            if m2 > n:
                continue
            starts1 = [None] if m1 == 0 else range(1, n - m1 + 2)
            starts2 = [None] if m2 == 0 else range(1, n - m2 + 2)
            for a, b in product(starts1, starts2):
                s1 = () if a is None else tuple(range(a, a + m1))
                s2 = () if b is None else tuple(range(b, b + m2))
                yield TapPattern(s1, s2)
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        universe = math.comb(2 * n, mu)
        if st.count > universe:
            raise BudgetTooLarge(f"cannot sample {st.count} distinct patterns out of {universe}")
        if universe <= 1 << 20:
            combos = list(combinations(range(1, 2 * n + 1), mu))
            picks = rng.choice(len(combos), size=st.count, replace=False)
            for i in sorted(int(p) for p in picks):
                yield _split(combos[i], n)
        else:
            seen = set()
            while len(seen) < st.count:
                combo = tuple(sorted(int(v) + 1 for v in rng.choice(2 * n, size=mu, replace=False)))
                seen.add(combo)
            for combo in sorted(seen):
                yield _split(combo, n)


# ---------------------------------------------------------------------------
# Exact leakage.
# ---------------------------------------------------------------------------


class LeakageEnumerator:
    """Precomputed full-input enumeration of one configuration.

    Builds both codewords for every input tuple once; each pattern
    evaluation is then a gather plus two histograms.
    """

    def __init__(self, cfg: SchemeConfig, demand: Optional[DemandVector] = None, keep_fields: bool = False):
        validate_config(cfg)
        self.cfg = cfg
        self.demand = demand if demand is not None else DemandVector(1, 2)
        self.demand.validate(cfg.D)
        runner = SchemeRunner(cfg)
        lay = runner.layout
        self.layout = lay
        fields = input_fields(lay)
        total = sum(w for _, w in fields)
        if total > MAX_ENUM_BITS:
            raise EnumerationTooLarge(
                f"total input entropy {total} bits exceeds enumeration cap {MAX_ENUM_BITS}"
            )
        self.total_bits = total
        self.lib_bits = lay.D * lay.file_bits
        self.count = 1 << total
        idx = np.arange(self.count, dtype=np.uint32)
        f = {}
        pos = 0
        for name, w in fields:
            f[name] = (idx >> (total - pos - w)) & np.uint32((1 << w) - 1)
            pos += w
        xc, xd = encode_round(lay, runner.cb_c, runner.cb_d, self.demand, f)
        self.xc = xc.astype(np.uint32)
        self.xd = xd.astype(np.uint32)
        self.w_id = idx >> np.uint32(total - self.lib_bits)
        self.fields = f if keep_fields else None

    def tapped_bits(self, pattern: TapPattern) -> np.ndarray:
        """Concatenated tapped symbols for every input tuple, as integers."""
        pattern.validate(self.cfg.n)
        n = self.cfg.n
        dtype = np.uint32 if pattern.size <= 32 else np.uint64
        z = np.zeros(self.count, dtype=dtype)
        tmp = np.empty(self.count, dtype=dtype)
        for x, taps in ((self.xc, pattern.s1), (self.xd, pattern.s2)):
            for i in taps:
                np.right_shift(x.astype(dtype, copy=False), dtype(n - i), out=tmp)
                tmp &= dtype(1)
                z <<= dtype(1)
                z |= tmp
        return z

    def _entropy_bits(self, ids: np.ndarray, width_hint: int) -> float:
        """H(V) in bits for V uniform over the enumerated tuples."""
        if width_hint <= 24:
            counts = np.bincount(ids, minlength=1 << width_hint)
            counts = counts[counts > 0]
        else:
            _, counts = np.unique(ids, return_counts=True)
        N = float(self.count)
        return float(np.sum((counts / N) * np.log2(N / counts)))

    def leakage(self, pattern: TapPattern) -> float:
        """I(library; tapped symbols) in bits, exactly."""
        zbits = pattern.size
        z = self.tapped_bits(pattern)
        h_z = self._entropy_bits(z, zbits)
        # H(Z|W): per-library-value blocks are equal-sized, so the
        # conditional entropy reduces to a count-of-counts sum.
        kbits = self.lib_bits + zbits
        if kbits <= 32:
            key = (self.w_id << np.uint32(zbits)) | z.astype(np.uint32, copy=False)
        else:
            key = (self.w_id.astype(np.uint64) << np.uint64(zbits)) | z.astype(np.uint64, copy=False)
        if kbits <= 26:
            counts = np.bincount(key, minlength=1 << kbits)
        else:
            _, counts = np.unique(key, return_counts=True)
        # Cell counts repeat heavily; histogram them so the log runs over
        # distinct count values instead of all cells.
        cc = np.bincount(counts)
        vals = np.nonzero(cc)[0]
        vals = vals[vals > 0]
        per_w = float(1 << (self.total_bits - self.lib_bits))
        N = float(self.count)
        h_z_given_w = float(np.sum(cc[vals] * (vals / N) * np.log2(per_w / vals)))
        return h_z - h_z_given_w

    def mutual_information_with(self, ids: np.ndarray, pattern: TapPattern) -> float:
        """I(V; tapped symbols) for an arbitrary labeling V of the tuples."""
        z = self.tapped_bits(pattern)
        h_z = self._entropy_bits(z, pattern.size)
        return h_z - self.conditional_entropy(z, ids)

    def conditional_entropy(self, z: np.ndarray, ids: np.ndarray) -> float:
        """H(Z | V) for arbitrary integer labelings z, ids of the tuples."""
        pairs = np.stack([ids.astype(np.uint64), z.astype(np.uint64)], axis=1)
        _, pair_counts = np.unique(pairs, axis=0, return_counts=True)
        _, v_counts = np.unique(ids, return_counts=True)
        N = float(self.count)
        h_vz = float(np.sum((pair_counts / N) * np.log2(N / pair_counts)))
        h_v = float(np.sum((v_counts / N) * np.log2(N / v_counts)))
        return h_vz - h_v


def exact_leakage(cfg: SchemeConfig, pattern: TapPattern, demand: Optional[DemandVector] = None) -> float:
    """One-shot exact leakage; reuse a LeakageEnumerator for many patterns."""
    return LeakageEnumerator(cfg, demand).leakage(pattern)


@dataclass
class LeakageReport:
    """Worst-case leakage search result over one pattern stream."""

    scheme: str
    n: int
    D: int
    mu: int
    strategy: str
    patterns_evaluated: int
    worst_pattern: TapPattern
    worst_bits: float
    seeds: dict
    histogram: Optional[list] = None

    def to_dict(self) -> dict:
        out = {
            "scheme": self.scheme,
            "n": self.n,
            "D": self.D,
            "mu": self.mu,
            "strategy": self.strategy,
            "patterns_evaluated": self.patterns_evaluated,
            "worst": {
                "S1": list(self.worst_pattern.s1),
                "S2": list(self.worst_pattern.s2),
                "bits": self.worst_bits,
            },
            "seeds": self.seeds,
        }
        if self.histogram is not None:
            out["histogram"] = [
                {"S1": list(p.s1), "S2": list(p.s2), "bits": b} for p, b in self.histogram
            ]
        return out


def max_leakage(
    cfg: SchemeConfig,
    strategy,
    demand: Optional[DemandVector] = None,
    keep_histogram: bool = False,
    max_patterns: Optional[int] = None,
    enumerator: Optional[LeakageEnumerator] = None,
) -> LeakageReport:
    """Worst-case exact leakage over a pattern stream.

    Ties within 1e-12 resolve to the lexicographically smallest
    pattern, so reports are stable regression fixtures.
    """
    st = parse_strategy(strategy)
    enum = enumerator if enumerator is not None else LeakageEnumerator(cfg, demand)
    histogram = [] if keep_histogram else None
    best_bits, best_pat, best_key = None, None, None
    evaluated = 0
    stream = tap_patterns(
        cfg.n, cfg.mu, st, seed=derive_seed(cfg.seed, "patterns"), max_patterns=max_patterns
    )
    for pat in stream:
        bits = enum.leakage(pat)
        evaluated += 1
        if keep_histogram:
            histogram.append((pat, bits))
        key = pat.key()
        if best_bits is None or bits > best_bits + 1e-12:
            best_bits, best_pat, best_key = bits, pat, key
        elif bits > best_bits:
            best_bits = bits
            if key < best_key:
                best_pat, best_key = pat, key
        elif bits >= best_bits - 1e-12 and key < best_key:
            best_pat, best_key = pat, key
    return LeakageReport(
        scheme=cfg.scheme.value,
        n=cfg.n,
        D=cfg.D,
        mu=cfg.mu,
        strategy=st.describe(),
        patterns_evaluated=evaluated,
        worst_pattern=best_pat,
        worst_bits=best_bits,
        seeds={"master": cfg.seed},
        histogram=histogram,
    )


def exact_mi(joint) -> float:
    """Mutual information in bits of a finite 2-D joint distribution."""
    p = np.asarray(joint, dtype=float)
    if abs(p.sum() - 1.0) > 1e-12:
        raise NotNormalized(f"joint sums to {p.sum()}")
    if np.any(p < 0):
        raise NotNormalized("negative probability")
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / (px @ py)[mask])))
